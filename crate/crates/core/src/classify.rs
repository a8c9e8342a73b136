//! Metric-space properties with explicit witnesses: separation, `X_eps`,
//! expansiveness (globally, at infinity, almost at infinity), epsilon-step
//! territories, and horizon trends over nested sample families.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{MetricError, MetricSpace, PointedSpace};
use crate::witness::critical_infimum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilon grid is empty")]
    EmptyGrid,
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("property {0} needs an epsilon")]
    MissingEpsilon(&'static str),
    #[error("horizons must be a nonempty strictly increasing list of positive integers")]
    InvalidHorizons,
    #[error("invalid family: {0}")]
    Family(String),
    #[error("growth factor must exceed 1, got {0}")]
    InvalidFactor(f64),
}

fn check_epsilon(eps: f64) -> Result<(), ClassifyError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ClassifyError::InvalidEpsilon(eps))
    }
}

/// Minimum off-diagonal distance; infinite for a single point.
pub fn separation_gap(space: &MetricSpace) -> f64 {
    space.pairs().map(|(i, j)| space.d(i, j)).fold(f64::INFINITY, f64::min)
}

/// Distance from each point to the rest of the space (infinite if alone).
pub fn nearest_neighbor_distances(space: &MetricSpace) -> Vec<f64> {
    (0..space.len())
        .map(|i| (0..space.len()).filter(|&j| j != i).map(|j| space.d(i, j)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Points whose nearest neighbour is strictly farther than `eps`.
pub fn x_epsilon(space: &MetricSpace, eps: f64) -> Result<Vec<usize>, ClassifyError> {
    check_epsilon(eps)?;
    Ok(nearest_neighbor_distances(space)
        .into_iter()
        .enumerate()
        .filter(|&(_, nn)| nn > eps)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Vacuous,
    HorizonTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub property: String,
    pub verdict: Verdict,
    pub witness: Option<f64>,
    pub counterexample: Option<(String, String)>,
    /// Pair realizing the witness.
    pub extremal: Option<(String, String)>,
    pub attained: Option<bool>,
    pub horizon: Option<usize>,
    pub note: Option<String>,
}

impl WitnessReport {
    fn new(property: impl Into<String>, verdict: Verdict, witness: Option<f64>) -> Self {
        WitnessReport {
            property: property.into(),
            verdict,
            witness,
            counterexample: None,
            extremal: None,
            attained: None,
            horizon: None,
            note: None,
        }
    }
}

fn label_pair(space: &MetricSpace, (a, b): (usize, usize)) -> (String, String) {
    (space.label(a).to_string(), space.label(b).to_string())
}

/// Largest `c` with `d(p,q) >= c d(p,e)` for all `p != q`, `p != e`. Finite
/// spaces always satisfy the property; a witness below `threshold` is noted.
pub fn expansive_witness(pointed: &PointedSpace, threshold: f64) -> WitnessReport {
    let space = pointed.space();
    let e = pointed.base();
    let mut best: Option<(f64, usize, usize)> = None;
    for p in (0..pointed.len()).filter(|&p| p != e) {
        for q in (0..pointed.len()).filter(|&q| q != p) {
            let c = pointed.d(p, q) / pointed.to_base(p);
            if best.is_none_or(|(b, _, _)| c < b) {
                best = Some((c, p, q));
            }
        }
    }
    let Some((c, p, q)) = best else {
        let mut r = WitnessReport::new("expansive", Verdict::Vacuous, None);
        r.note = Some("single point: no pair to constrain".into());
        return r;
    };
    let mut r = WitnessReport::new("expansive", Verdict::Holds, Some(c));
    r.extremal = Some(label_pair(space, (p, q)));
    r.attained = Some(true);
    let mut note = "base point is isolated (finite space)".to_string();
    if c < threshold {
        note.push_str(&format!("; witness below threshold {threshold}"));
    }
    r.note = Some(note);
    r
}

fn infimum_report(pointed: &PointedSpace, property: String, is_bad: impl Fn(f64) -> bool) -> WitnessReport {
    let inf = critical_infimum(pointed, is_bad);
    let verdict = if inf.vacuous { Verdict::Vacuous } else { Verdict::Holds };
    let mut r = WitnessReport::new(property, verdict, Some(inf.value));
    r.attained = Some(inf.attained);
    r.extremal = inf.binding_pair.map(|pq| label_pair(pointed.space(), pq));
    if !inf.attained {
        r.note = Some(format!("infimum not attained; {} is valid", inf.representative()));
    }
    r
}

/// Least `C >= 1` such that `d(p,e) >= C` and `d(p,q) < d(p,e)/C` force `p = q`.
pub fn expansive_at_inf_witness(pointed: &PointedSpace) -> WitnessReport {
    infimum_report(pointed, "expansive_at_inf".into(), |_| true)
}

/// Least `C >= 1` such that `d(p,e) >= C` and `d(p,q) < d(p,e)/C` force
/// `d(p,q) < eps`.
pub fn almost_expansive_witness(pointed: &PointedSpace, eps: f64) -> Result<WitnessReport, ClassifyError> {
    check_epsilon(eps)?;
    Ok(infimum_report(pointed, format!("almost_expansive({eps})"), |d| d >= eps))
}

/// Classes of the chain relation with hops `d <= eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerritoryDecomposition {
    pub epsilon: f64,
    pub component_of: Vec<usize>,
    pub component_count: usize,
    /// Largest hop count `s_eps(x, y)` within each component.
    pub step_diameter: Vec<usize>,
    pub step_bounded: Vec<bool>,
}

impl TerritoryDecomposition {
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_count];
        for (x, &c) in self.component_of.iter().enumerate() {
            out[c].push(x);
        }
        out
    }
}

fn bfs_hops(space: &MetricSpace, eps: f64, source: usize) -> Vec<Option<usize>> {
    let n = space.len();
    let mut hops = vec![None; n];
    hops[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        let h = hops[x].expect("queued points are reached");
        for y in 0..n {
            if hops[y].is_none() && space.d(x, y) <= eps {
                hops[y] = Some(h + 1);
                queue.push_back(y);
            }
        }
    }
    hops
}

pub fn ofarrell_decompose(space: &MetricSpace, eps: f64) -> Result<TerritoryDecomposition, ClassifyError> {
    check_epsilon(eps)?;
    let n = space.len();
    let mut component_of = vec![usize::MAX; n];
    let mut step_diameter = Vec::new();
    for start in 0..n {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = step_diameter.len();
        let members: Vec<usize> =
            bfs_hops(space, eps, start).iter().enumerate().filter_map(|(x, h)| h.map(|_| x)).collect();
        let mut diameter = 0;
        for &x in &members {
            component_of[x] = id;
            let hops = bfs_hops(space, eps, x);
            diameter = diameter.max(members.iter().filter_map(|&y| hops[y]).max().unwrap_or(0));
        }
        step_diameter.push(diameter);
    }
    let component_count = step_diameter.len();
    Ok(TerritoryDecomposition {
        epsilon: eps,
        component_of,
        component_count,
        step_bounded: vec![true; component_count],
        step_diameter,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximalEntry {
    pub epsilon: f64,
    pub in_x_epsilon: usize,
    pub outside: usize,
    pub outside_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximalProfile {
    pub entries: Vec<ProximalEntry>,
    pub note: String,
}

pub fn proximal_profile(space: &MetricSpace, grid: &[f64]) -> Result<ProximalProfile, ClassifyError> {
    if grid.is_empty() {
        return Err(ClassifyError::EmptyGrid);
    }
    let mut entries = Vec::with_capacity(grid.len());
    for &eps in grid {
        let inside = x_epsilon(space, eps)?;
        let outside_labels: Vec<String> = (0..space.len())
            .filter(|x| !inside.contains(x))
            .map(|x| space.label(x).to_string())
            .collect();
        entries.push(ProximalEntry {
            epsilon: eps,
            in_x_epsilon: inside.len(),
            outside: outside_labels.len(),
            outside_labels,
        });
    }
    Ok(ProximalProfile {
        entries,
        note: "a finite space is always proximally compact; use family trends for growth".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilyGenerator {
    /// `b^n`, `n = 1..N`.
    Geometric { b: f64 },
    /// `b^n` and `b^n + 1/n`, `n = 1..N`.
    Doubled { b: f64 },
    /// `a n`, `n = 1..N`.
    Arithmetic { a: f64 },
    /// `1/n`, `n = 1..N`, then `0`.
    Harmonic,
    /// The first `N` listed reals.
    Points { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseRule {
    /// The first generated point.
    First,
    /// The real `0`, added to the sample if absent.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonFamily {
    pub generator: FamilyGenerator,
    pub base: BaseRule,
}

impl HorizonFamily {
    pub fn new(generator: FamilyGenerator, base: BaseRule) -> Self {
        HorizonFamily { generator, base }
    }

    /// Parses `name=doubled,b=2[,base=origin]`. File-backed families
    /// (`name=file,path=...`) need a loader for the listed reals.
    pub fn parse_with(
        spec: &str,
        load: impl Fn(&str) -> Result<Vec<f64>, String>,
    ) -> Result<Self, ClassifyError> {
        let mut fields = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| ClassifyError::Family(format!("expected key=value, got {part:?}")))?;
            if fields.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(ClassifyError::Family(format!("repeated key {k:?}")));
            }
        }
        let mut take_num = |key: &str, default: f64| -> Result<f64, ClassifyError> {
            match fields.remove(key) {
                None => Ok(default),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ClassifyError::Family(format!("{key} must be a finite number, got {v:?}"))),
            }
        };
        let b = take_num("b", 2.0)?;
        let a = take_num("a", 1.0)?;
        let name = fields.remove("name").ok_or_else(|| ClassifyError::Family("missing name".into()))?;
        let base = match fields.remove("base").as_deref() {
            None | Some("first") => BaseRule::First,
            Some("origin") => BaseRule::Origin,
            Some(other) => return Err(ClassifyError::Family(format!("unknown base rule {other:?}"))),
        };
        let generator = match name.as_str() {
            "geometric" => FamilyGenerator::Geometric { b },
            "doubled" => FamilyGenerator::Doubled { b },
            "arithmetic" => FamilyGenerator::Arithmetic { a },
            "harmonic" => FamilyGenerator::Harmonic,
            "file" => {
                let path = fields.remove("path").ok_or_else(|| ClassifyError::Family("file family needs path".into()))?;
                FamilyGenerator::Points { values: load(&path).map_err(ClassifyError::Family)? }
            }
            other => return Err(ClassifyError::Family(format!("unknown family {other:?}"))),
        };
        if let Some(k) = fields.keys().next() {
            return Err(ClassifyError::Family(format!("unexpected key {k:?}")));
        }
        match generator {
            FamilyGenerator::Geometric { b } | FamilyGenerator::Doubled { b } if b <= 1.0 => {
                return Err(ClassifyError::Family(format!("base b must exceed 1, got {b}")))
            }
            FamilyGenerator::Arithmetic { a } if a <= 0.0 => {
                return Err(ClassifyError::Family(format!("step a must be positive, got {a}")))
            }
            _ => {}
        }
        Ok(HorizonFamily { generator, base })
    }

    pub fn parse(spec: &str) -> Result<Self, ClassifyError> {
        Self::parse_with(spec, |_| Err("file-backed families need a loader".into()))
    }

    /// Generated reals at horizon `n`, in generation order.
    pub fn points(&self, n: usize) -> Result<Vec<f64>, ClassifyError> {
        if n == 0 {
            return Err(ClassifyError::InvalidHorizons);
        }
        let range = 1..=n as i32;
        Ok(match &self.generator {
            FamilyGenerator::Geometric { b } => range.map(|k| b.powi(k)).collect(),
            FamilyGenerator::Doubled { b } => range.flat_map(|k| [b.powi(k), b.powi(k) + 1.0 / k as f64]).collect(),
            FamilyGenerator::Arithmetic { a } => range.map(|k| a * k as f64).collect(),
            FamilyGenerator::Harmonic => range.map(|k| 1.0 / k as f64).chain([0.0]).collect(),
            FamilyGenerator::Points { values } => {
                if n > values.len() {
                    return Err(ClassifyError::Family(format!(
                        "horizon {n} exceeds the {} listed points",
                        values.len()
                    )));
                }
                values[..n].to_vec()
            }
        })
    }

    pub fn sample(&self, n: usize) -> Result<PointedSpace, ClassifyError> {
        let mut xs = self.points(n)?;
        let base = match self.base {
            BaseRule::First => 0,
            BaseRule::Origin => match xs.iter().position(|&x| x == 0.0) {
                Some(i) => i,
                None => {
                    xs.insert(0, 0.0);
                    0
                }
            },
        };
        let space = MetricSpace::from_reals(&xs)?;
        Ok(PointedSpace::new(space, base)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Property {
    ExpansiveAtInf,
    AlmostExpansive { epsilon: f64 },
    SeparationGap,
    Ofarrell { epsilon: f64 },
    XEpsilon { epsilon: f64 },
}

impl Property {
    pub fn parse(name: &str, epsilon: Option<f64>) -> Result<Self, ClassifyError> {
        let need = |what: &'static str| -> Result<f64, ClassifyError> {
            let eps = epsilon.ok_or(ClassifyError::MissingEpsilon(what))?;
            check_epsilon(eps)?;
            Ok(eps)
        };
        match name {
            "expansive_at_inf" => Ok(Property::ExpansiveAtInf),
            "almost_expansive" => Ok(Property::AlmostExpansive { epsilon: need("almost_expansive")? }),
            "separation_gap" => Ok(Property::SeparationGap),
            "ofarrell" => Ok(Property::Ofarrell { epsilon: need("ofarrell")? }),
            "x_epsilon" => Ok(Property::XEpsilon { epsilon: need("x_epsilon")? }),
            other => Err(ClassifyError::UnknownProperty(other.to_string())),
        }
    }

    /// Evaluates the property, reducing it to one witness scalar.
    pub fn evaluate(&self, pointed: &PointedSpace) -> Result<WitnessReport, ClassifyError> {
        let space = pointed.space();
        Ok(match *self {
            Property::ExpansiveAtInf => expansive_at_inf_witness(pointed),
            Property::AlmostExpansive { epsilon } => almost_expansive_witness(pointed, epsilon)?,
            Property::SeparationGap => {
                let gap = separation_gap(space);
                let mut r = WitnessReport::new("separation_gap", Verdict::Holds, Some(1.0 / gap));
                r.note = Some(format!("gap {gap}; witness is its reciprocal"));
                r
            }
            Property::Ofarrell { epsilon } => {
                let t = ofarrell_decompose(space, epsilon)?;
                let mut r = WitnessReport::new(format!("ofarrell({epsilon})"), Verdict::Holds, Some(t.component_count as f64));
                let max_steps = t.step_diameter.iter().max().copied().unwrap_or(0);
                r.note = Some(format!("component count; largest step diameter {max_steps}"));
                r
            }
            Property::XEpsilon { epsilon } => {
                let inside = x_epsilon(space, epsilon)?;
                let outside = pointed.len() - inside.len();
                let mut r = WitnessReport::new(format!("x_epsilon({epsilon})"), Verdict::Holds, Some(outside as f64));
                r.note = Some("number of points outside X_eps".into());
                r
            }
        })
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::ExpansiveAtInf => write!(f, "expansive_at_inf"),
            Property::AlmostExpansive { epsilon } => write!(f, "almost_expansive({epsilon})"),
            Property::SeparationGap => write!(f, "separation_gap"),
            Property::Ofarrell { epsilon } => write!(f, "ofarrell({epsilon})"),
            Property::XEpsilon { epsilon } => write!(f, "x_epsilon({epsilon})"),
        }
    }
}

impl FromStr for Property {
    type Err = ClassifyError;

    /// Accepts `name` or `name(eps)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.strip_suffix(')').and_then(|r| r.split_once('(')) {
            Some((name, eps)) => {
                let eps = eps.trim().parse::<f64>().map_err(|_| ClassifyError::UnknownProperty(s.to_string()))?;
                Property::parse(name.trim(), Some(eps))
            }
            None => Property::parse(s, None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Stable,
    Diverging,
}

pub const DEFAULT_GROWTH_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyTrend {
    pub property: String,
    pub reports: Vec<WitnessReport>,
    /// Consecutive witness ratios.
    pub ratios: Vec<f64>,
    pub growth_factor: f64,
    pub trend: Trend,
    pub label: &'static str,
}

/// Evaluates the property at every horizon. The trend is `diverging` when
/// every consecutive witness ratio reaches `growth_factor`.
pub fn family_trend(
    family: &HorizonFamily,
    property: Property,
    horizons: &[usize],
    growth_factor: f64,
) -> Result<FamilyTrend, ClassifyError> {
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClassifyError::InvalidHorizons);
    }
    if !(growth_factor > 1.0) {
        return Err(ClassifyError::InvalidFactor(growth_factor));
    }
    let mut reports = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let mut r = property.evaluate(&family.sample(n)?)?;
        r.horizon = Some(n);
        reports.push(r);
    }
    let scalars: Vec<f64> = reports.iter().map(|r| r.witness.unwrap_or(0.0)).collect();
    let ratios: Vec<f64> = scalars
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (a, b) if a == b => 1.0,
            (a, _) if a == 0.0 => f64::INFINITY,
            (a, b) => b / a,
        })
        .collect();
    let trend = if !ratios.is_empty() && ratios.iter().all(|&r| r >= growth_factor) {
        Trend::Diverging
    } else {
        Trend::Stable
    };
    Ok(FamilyTrend {
        property: property.to_string(),
        reports,
        ratios,
        growth_factor,
        trend,
        label: "HEURISTIC",
    })
}
