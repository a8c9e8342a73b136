//! Witness constants `C_1 <= C_2 <= ...` for spaces that are almost expansive
//! at infinity, the greedy unit-ball packing `Gamma` of the far region, the
//! locally constant weight `zeta`, and the post-hoc checks that certify them.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::{dprime_matrix, DerivedError};
use crate::lipschitz::lip_constant;
use crate::metric::{annulus_indices, base_weight, MetricSpace, PointedSpace, ScalarField};
use crate::witness::{critical_infimum, first_violation, CriticalInfimum};

/// Certified constants: for every `k`, pairs with `d(p,e) >= C_k` and
/// `d(p,q) < d(p,e)/C_k` satisfy `d(p,q) < 1/(k+2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeConstants {
    c: Vec<f64>,
    /// Whether each `C_k` is vacuous (exceeds every distance to the base).
    pub vacuous: Vec<bool>,
    /// The exact infima the constants were derived from, when searched.
    pub infima: Vec<Option<CriticalInfimum>>,
}

fn threshold(k: usize) -> f64 {
    1.0 / (k as f64 + 2.0)
}

impl AeConstants {
    pub fn k_max(&self) -> usize {
        self.c.len()
    }

    /// `C_k`, 1-based.
    pub fn c(&self, k: usize) -> f64 {
        self.c[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// Checks caller-supplied constants against the space.
    pub fn certify(pointed: &PointedSpace, values: Vec<f64>) -> Result<Self, DerivedError> {
        if values.is_empty() {
            return Err(DerivedError::ZeroKMax);
        }
        let max_to_base = (0..pointed.len()).map(|p| pointed.to_base(p)).fold(0.0, f64::max);
        let mut prev = 1.0;
        for (i, &value) in values.iter().enumerate() {
            let k = i + 1;
            let offending = if value < prev || !value.is_finite() {
                Some((pointed.base(), pointed.base()))
            } else {
                first_violation(pointed, value, |d| d >= threshold(k))
            };
            if let Some((p, q)) = offending {
                return Err(DerivedError::UncertifiedConstant {
                    k,
                    value,
                    p: pointed.space().label(p).to_string(),
                    q: pointed.space().label(q).to_string(),
                });
            }
            prev = value;
        }
        let vacuous = values.iter().map(|&c| c > max_to_base).collect();
        let infima = vec![None; values.len()];
        Ok(AeConstants { c: values, vacuous, infima })
    }
}

/// Least certified `C_k` for `k = 1..=k_max`, searched over the critical
/// candidates and forced nondecreasing. Finite spaces always admit a (possibly
/// vacuous) witness, so this never fails for `k_max >= 1`.
pub fn ae_constants(pointed: &PointedSpace, k_max: usize) -> Result<AeConstants, DerivedError> {
    if k_max == 0 {
        return Err(DerivedError::ZeroKMax);
    }
    let mut c = Vec::with_capacity(k_max);
    let mut vacuous = Vec::with_capacity(k_max);
    let mut infima = Vec::with_capacity(k_max);
    let mut prev: f64 = 1.0;
    for k in 1..=k_max {
        let inf = critical_infimum(pointed, |d| d >= threshold(k));
        let value = inf.representative().max(prev);
        debug_assert!(first_violation(pointed, value, |d| d >= threshold(k)).is_none());
        c.push(value);
        vacuous.push(inf.vacuous);
        infima.push(Some(inf));
        prev = value;
    }
    Ok(AeConstants { c, vacuous, infima })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Vacuous,
}

/// One post-hoc verification on a constructed net.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub outcome: CheckOutcome,
    /// Smallest slack over the checked instances (negative on failure).
    pub margin: Option<f64>,
    /// The instance realizing the margin.
    pub pair: Option<(String, String)>,
    pub values: BTreeMap<String, f64>,
}

impl LemmaCheck {
    fn from_margin(
        name: &'static str,
        worst: Option<(f64, usize, usize)>,
        space: &MetricSpace,
        values: BTreeMap<String, f64>,
    ) -> Self {
        let outcome = match worst {
            None => CheckOutcome::Vacuous,
            Some((m, _, _)) if m >= -MARGIN_TOL => CheckOutcome::Pass,
            Some(_) => CheckOutcome::Fail,
        };
        LemmaCheck {
            name,
            outcome,
            margin: worst.map(|w| w.0),
            pair: worst.map(|(_, a, b)| (space.label(a).to_string(), space.label(b).to_string())),
            values,
        }
    }

    pub fn failed(&self) -> bool {
        self.outcome == CheckOutcome::Fail
    }
}

const MARGIN_TOL: f64 = 1e-12;

fn track(worst: &mut Option<(f64, usize, usize)>, margin: f64, a: usize, b: usize) {
    if worst.is_none_or(|(m, _, _)| margin < m) {
        *worst = Some((margin, a, b));
    }
}

/// Maximal packing of closed unit balls centred in the far region
/// `d(., e) > C_1`, and everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetDecomposition {
    pub gamma: Vec<usize>,
    /// Net centre whose unit ball holds each point; `None` for core points.
    pub assignment: Vec<Option<usize>>,
    pub zeta: ScalarField,
    pub k: f64,
    /// Whether the default `K = max(C_1, 3/2)` failed and was replaced.
    pub k_substituted: bool,
    pub c1: f64,
    pub constants: AeConstants,
    pub dprime: MetricSpace,
    pub checks: Vec<LemmaCheck>,
}

impl NetDecomposition {
    pub(crate) fn check_space(&self, pointed: &PointedSpace) -> Result<(), DerivedError> {
        if self.assignment.len() == pointed.len() {
            Ok(())
        } else {
            Err(DerivedError::NetMismatch { net: self.assignment.len(), space: pointed.len() })
        }
    }

    pub fn first_failure(&self) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.failed())
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_ANNULUS: &str = "annulus_gap";
pub const CHECK_COVER: &str = "net_cover";
pub const CHECK_COMPARABLE: &str = "weight_comparability";
pub const CHECK_SEPARATION: &str = "net_separation";
pub const CHECK_RATIO_LIP: &str = "ratio_lipschitz";

/// Builds the net and runs every check, failing on the first failed check.
pub fn build_net(pointed: &PointedSpace, constants: &AeConstants) -> Result<NetDecomposition, DerivedError> {
    let net = build_net_unchecked(pointed, constants)?;
    if let Some(fail) = net.first_failure() {
        return Err(DerivedError::Certification {
            check: fail.name,
            pair: fail.pair.clone(),
            margin: fail.margin.unwrap_or(f64::NAN),
        });
    }
    Ok(net)
}

/// Builds the net and records every check without failing on them.
pub fn build_net_unchecked(
    pointed: &PointedSpace,
    constants: &AeConstants,
) -> Result<NetDecomposition, DerivedError> {
    let constants = AeConstants {
        infima: constants.infima.clone(),
        ..AeConstants::certify(pointed, constants.c.clone())?
    };
    let space = pointed.space();
    let n = pointed.len();
    let c1 = constants.c(1);
    let xi = base_weight(pointed);

    let mut far: Vec<usize> = (0..n).filter(|&x| pointed.to_base(x) > c1).collect();
    far.sort_by(|&a, &b| {
        pointed
            .to_base(b)
            .partial_cmp(&pointed.to_base(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| space.label(a).cmp(space.label(b)))
    });
    let balls_meet = |a: usize, b: usize| (0..n).any(|z| space.d(z, a) <= 1.0 && space.d(z, b) <= 1.0);
    let mut gamma: Vec<usize> = Vec::new();
    for &x in &far {
        if gamma.iter().all(|&p| !balls_meet(x, p)) {
            gamma.push(x);
        }
    }
    let assignment: Vec<Option<usize>> =
        (0..n).map(|x| gamma.iter().copied().find(|&p| space.d(x, p) <= 1.0)).collect();
    let zeta = ScalarField::from_vec_unchecked(
        assignment.iter().map(|a| a.map_or(1.0, |p| xi[p])).collect(),
    );

    let mut checks = Vec::new();

    // Annuli around far points are empty.
    let mut worst = None;
    let mut annulus_ok = true;
    for k in 1..=constants.k_max() {
        let inner = 1.0 / (k as f64 + 2.0);
        for p in 0..n {
            let dpe = pointed.to_base(p);
            if dpe < constants.c(k) {
                continue;
            }
            let outer = dpe / c1;
            if inner < outer && !annulus_indices(space, p, inner, outer)?.is_empty() {
                annulus_ok = false;
            }
            for z in 0..n {
                if z != p {
                    let d = space.d(p, z);
                    track(&mut worst, (inner - d).max(d - outer), p, z);
                }
            }
        }
    }
    let mut check = LemmaCheck::from_margin(CHECK_ANNULUS, worst, space, BTreeMap::new());
    if !annulus_ok {
        check.outcome = CheckOutcome::Fail;
    }
    checks.push(check);

    // Every far point lies in a unit ball of the net.
    let mut worst = None;
    for &x in &far {
        let (d, p) = gamma
            .iter()
            .map(|&p| (space.d(x, p), p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("first far point is always admitted");
        track(&mut worst, 1.0 - d, x, p);
    }
    let mut values = BTreeMap::new();
    values.insert("gamma_size".to_string(), gamma.len() as f64);
    values.insert("far_points".to_string(), far.len() as f64);
    checks.push(LemmaCheck::from_margin(CHECK_COVER, worst, space, values));

    // xi / K <= zeta <= K xi.
    let k_default = c1.max(1.5);
    let comparability = |k: f64| {
        let mut worst = None;
        for x in 0..n {
            track(&mut worst, (zeta[x] - xi[x] / k).min(k * xi[x] - zeta[x]), x, x);
        }
        worst
    };
    let worst = comparability(k_default);
    let mut values = BTreeMap::new();
    values.insert("K".to_string(), k_default);
    let check = LemmaCheck::from_margin(CHECK_COMPARABLE, worst, space, values);
    let (k, k_substituted) = if check.failed() {
        let smallest = (0..n).map(|x| (zeta[x] / xi[x]).max(xi[x] / zeta[x])).fold(1.0, f64::max);
        (smallest, true)
    } else {
        (k_default, false)
    };
    checks.push(check);

    let dprime = dprime_matrix(pointed)?;

    // Points of a net ball are d'-far from points outside it.
    let bound = 2.0 / (3.0 * k * c1);
    let mut worst = None;
    for &p in &gamma {
        for u in (0..n).filter(|&u| space.d(u, p) <= 1.0) {
            for v in (0..n).filter(|&v| space.d(v, p) > 1.0) {
                track(&mut worst, dprime.d(u, v) - bound, u, v);
            }
        }
    }
    let mut values = BTreeMap::new();
    values.insert("bound".to_string(), bound);
    checks.push(LemmaCheck::from_margin(CHECK_SEPARATION, worst, space, values));

    // xi/zeta and zeta/xi are d'-Lipschitz.
    let xi_over_zeta = xi.zip_map(&zeta, |a, b| a / b);
    let zeta_over_xi = zeta.zip_map(&xi, |a, b| a / b);
    let l_xz = lip_constant(&dprime, &xi_over_zeta, 1.0)?;
    let l_zx = lip_constant(&dprime, &zeta_over_xi, 1.0)?;
    let bound_xz = 3.0 * k * k * c1;
    let bound_zx = k * k * l_xz;
    let margin = (bound_xz - l_xz).min(bound_zx - l_zx);
    let mut values = BTreeMap::new();
    values.insert("lip_xi_over_zeta".to_string(), l_xz);
    values.insert("lip_zeta_over_xi".to_string(), l_zx);
    values.insert("bound_xi_over_zeta".to_string(), bound_xz);
    values.insert("bound_zeta_over_xi".to_string(), bound_zx);
    let mut check = LemmaCheck::from_margin(CHECK_RATIO_LIP, Some((margin, pointed.base(), pointed.base())), space, values);
    check.pair = None;
    if !(l_xz.is_finite() && l_zx.is_finite()) {
        check.outcome = CheckOutcome::Fail;
    }
    checks.push(check);

    Ok(NetDecomposition {
        gamma,
        assignment,
        zeta,
        k,
        k_substituted,
        c1,
        constants,
        dprime,
        checks,
    })
}
