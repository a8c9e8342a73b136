//! Weighted composition operators `Tf(y) = Phi(y, f(phi^-1(y)))` with
//! piecewise-linear increasing `Phi(y, .)`, their inversion, recovery from a
//! black box, order checks, and the lattice axioms for finite function families.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{MetricError, MetricSpace, ScalarField};
use crate::random::{random_permutation, seeded};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("monotone map needs at least one breakpoint")]
    NoBreakpoints,
    #[error("{breakpoints} breakpoints but {values} values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("{what} must be finite and strictly increasing (index {index})")]
    NotIncreasing { what: &'static str, index: usize },
    #[error("end slopes must be positive and finite, got {left} and {right}")]
    InvalidSlope { left: f64, right: f64 },
    #[error("phi is not a bijection: {0}")]
    NotBijective(String),
    #[error("{maps} maps for {points} points")]
    MapCount { maps: usize, points: usize },
    #[error("field has {got} values, operator expects {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("probe grid needs at least two strictly increasing finite points")]
    InvalidGrid,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("bands must satisfy a <= b <= c <= d with a < d, got {a}, {b}, {c}, {d}")]
    BandOrder { a: f64, b: f64, c: f64, d: f64 },
}

/// Increasing piecewise-linear bijection of the reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneMap {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

fn check_increasing(xs: &[f64], what: &'static str) -> Result<(), OrderError> {
    for (i, x) in xs.iter().enumerate() {
        if !x.is_finite() || (i > 0 && xs[i - 1] >= *x) {
            return Err(OrderError::NotIncreasing { what, index: i });
        }
    }
    Ok(())
}

impl MonotoneMap {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self, OrderError> {
        if breakpoints.is_empty() {
            return Err(OrderError::NoBreakpoints);
        }
        if breakpoints.len() != values.len() {
            return Err(OrderError::LengthMismatch { breakpoints: breakpoints.len(), values: values.len() });
        }
        check_increasing(&breakpoints, "breakpoints")?;
        check_increasing(&values, "values")?;
        let ok = |s: f64| s > 0.0 && s.is_finite();
        if !(ok(left_slope) && ok(right_slope)) {
            return Err(OrderError::InvalidSlope { left: left_slope, right: right_slope });
        }
        Ok(MonotoneMap { breakpoints, values, left_slope, right_slope })
    }

    pub fn identity() -> Self {
        Self::affine(1.0, 0.0)
    }

    /// `t -> a t + b`, `a > 0`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(vec![0.0], vec![b], a, a).expect("positive slope")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.left_slope, self.right_slope)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (b, v) = (&self.breakpoints, &self.values);
        let last = b.len() - 1;
        if t <= b[0] {
            return if t == b[0] { v[0] } else { v[0] + self.left_slope * (t - b[0]) };
        }
        if t >= b[last] {
            return if t == b[last] { v[last] } else { v[last] + self.right_slope * (t - b[last]) };
        }
        let i = b.partition_point(|&x| x <= t);
        if b[i - 1] == t {
            return v[i - 1];
        }
        let w = (t - b[i - 1]) / (b[i] - b[i - 1]);
        v[i - 1] + w * (v[i] - v[i - 1])
    }

    pub fn inverse(&self) -> Self {
        MonotoneMap {
            breakpoints: self.values.clone(),
            values: self.breakpoints.clone(),
            left_slope: 1.0 / self.left_slope,
            right_slope: 1.0 / self.right_slope,
        }
    }
}

/// `Tf(y) = maps[y](f(phi^-1(y)))`, with `phi[x]` the image of source point `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionOperator {
    phi: Vec<usize>,
    maps: Vec<MonotoneMap>,
    #[serde(skip)]
    phi_inv: Vec<usize>,
}

pub(crate) fn invert_permutation(phi: &[usize]) -> Result<Vec<usize>, OrderError> {
    let mut inv = vec![usize::MAX; phi.len()];
    for (x, &y) in phi.iter().enumerate() {
        if y >= phi.len() {
            return Err(OrderError::NotBijective(format!("image {y} of {x} out of range")));
        }
        if inv[y] != usize::MAX {
            return Err(OrderError::NotBijective(format!("{} and {x} both map to {y}", inv[y])));
        }
        inv[y] = x;
    }
    Ok(inv)
}

impl CompositionOperator {
    pub fn new(phi: Vec<usize>, maps: Vec<MonotoneMap>) -> Result<Self, OrderError> {
        if maps.len() != phi.len() {
            return Err(OrderError::MapCount { maps: maps.len(), points: phi.len() });
        }
        let phi_inv = invert_permutation(&phi)?;
        Ok(CompositionOperator { phi, maps, phi_inv })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect(), vec![MonotoneMap::identity(); n]).expect("identity is bijective")
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    pub fn maps(&self) -> &[MonotoneMap] {
        &self.maps
    }

    pub fn apply_values(&self, f: &[f64]) -> Result<Vec<f64>, OrderError> {
        if f.len() != self.len() {
            return Err(OrderError::FieldLength { expected: self.len(), got: f.len() });
        }
        Ok((0..self.len()).map(|y| self.maps[y].eval(f[self.phi_inv[y]])).collect())
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField, OrderError> {
        Ok(ScalarField::from_vec_unchecked(self.apply_values(f.values())?))
    }

    /// `Sg(x) = Phi(phi(x), .)^-1 (g(phi(x)))`.
    pub fn invert(&self) -> Self {
        let maps = self.phi.iter().map(|&y| self.maps[y].inverse()).collect();
        CompositionOperator { phi: self.phi_inv.clone(), maps, phi_inv: self.phi.clone() }
    }
}

/// Strictly increasing map whose breakpoints are drawn from `grid` (or from a
/// random range when `grid` is `None`).
pub fn random_monotone_map<R: Rng>(rng: &mut R, grid: Option<&[f64]>) -> MonotoneMap {
    let breakpoints: Vec<f64> = match grid {
        Some(g) => {
            let mut picked: Vec<f64> = g.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if picked.is_empty() {
                picked.push(g[rng.random_range(0..g.len())]);
            }
            picked
        }
        None => {
            let m = rng.random_range(1..=5);
            let start = rng.random_range(-5.0..5.0);
            crate::random::increasing(rng, m, start, 3.0)
        }
    };
    let mut values = Vec::with_capacity(breakpoints.len());
    let mut v = rng.random_range(-5.0..5.0);
    for i in 0..breakpoints.len() {
        if i > 0 {
            v += (breakpoints[i] - breakpoints[i - 1]) * rng.random_range(0.1..4.0);
        }
        values.push(v);
    }
    let left = rng.random_range(0.1..4.0);
    let right = rng.random_range(0.1..4.0);
    MonotoneMap::new(breakpoints, values, left, right).expect("increasing by construction")
}

pub fn random_operator<R: Rng>(rng: &mut R, n: usize, grid: Option<&[f64]>) -> CompositionOperator {
    let phi = random_permutation(rng, n);
    let maps = (0..n).map(|_| random_monotone_map(rng, grid)).collect();
    CompositionOperator::new(phi, maps).expect("permutation is bijective")
}

/// Black-box operator on value vectors.
pub type Oracle<'a> = dyn FnMut(&[f64]) -> Result<Vec<f64>, String> + 'a;

/// Why a black box is not a weighted composition on the probed fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inconsistency {
    OracleFailure { message: String },
    OutputLength { expected: usize, got: usize },
    Unresponsive { x: String },
    MultipleResponses { x: String, moved: Vec<String> },
    Collision { x1: String, x2: String, y: String },
    NonMonotone { y: String, t_low: f64, t_high: f64, v_low: f64, v_high: f64 },
    ProbeMismatch { x: String, y: String, oracle: f64, recovered: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error(transparent)]
    Setup(#[from] OrderError),
    #[error("oracle is not a weighted composition on this grid: {0:?}")]
    Inconsistent(Inconsistency),
}

fn call(oracle: &mut Oracle, f: &[f64], expected: usize) -> Result<Vec<f64>, FactorError> {
    let out = oracle(f).map_err(|message| FactorError::Inconsistent(Inconsistency::OracleFailure { message }))?;
    if out.len() != expected {
        return Err(FactorError::Inconsistent(Inconsistency::OutputLength { expected, got: out.len() }));
    }
    Ok(out)
}

pub const FACTOR_TOL: f64 = 1e-9;

/// Recovers `phi` by raising one coordinate of a constant field at a time,
/// and `Phi(y, .)` by interpolating the images of constant fields on `grid`.
pub fn factor_operator(
    oracle: &mut Oracle,
    x: &MetricSpace,
    y: &MetricSpace,
    grid: &[f64],
) -> Result<CompositionOperator, FactorError> {
    if grid.len() < 2 || check_increasing(grid, "probe grid").is_err() {
        return Err(OrderError::InvalidGrid.into());
    }
    let n = x.len();
    if y.len() != n {
        return Err(OrderError::NotBijective(format!("{} source and {} target points", n, y.len())).into());
    }
    let inconsistent = |i| Err(FactorError::Inconsistent(i));

    let base = vec![grid[0]; n];
    let base_out = call(oracle, &base, n)?;
    let mut phi = Vec::with_capacity(n);
    let mut owner = vec![usize::MAX; n];
    let mut perturbed = Vec::with_capacity(n);
    for src in 0..n {
        let mut f = base.clone();
        f[src] = grid[1];
        let out = call(oracle, &f, n)?;
        let moved: Vec<usize> = (0..n).filter(|&t| out[t] != base_out[t]).collect();
        match moved.as_slice() {
            [] => return inconsistent(Inconsistency::Unresponsive { x: x.label(src).into() }),
            [t] => {
                if owner[*t] != usize::MAX {
                    return inconsistent(Inconsistency::Collision {
                        x1: x.label(owner[*t]).into(),
                        x2: x.label(src).into(),
                        y: y.label(*t).into(),
                    });
                }
                owner[*t] = src;
                phi.push(*t);
            }
            many => {
                return inconsistent(Inconsistency::MultipleResponses {
                    x: x.label(src).into(),
                    moved: many.iter().map(|&t| y.label(t).to_string()).collect(),
                })
            }
        }
        perturbed.push((f, out));
    }

    let mut columns = vec![Vec::with_capacity(grid.len()); n];
    for &t in grid {
        let out = if t == grid[0] { base_out.clone() } else { call(oracle, &vec![t; n], n)? };
        for (col, v) in columns.iter_mut().zip(out) {
            col.push(v);
        }
    }
    let mut maps = Vec::with_capacity(n);
    for (target, values) in columns.into_iter().enumerate() {
        if let Some(i) = (1..values.len()).find(|&i| !(values[i] > values[i - 1])) {
            return inconsistent(Inconsistency::NonMonotone {
                y: y.label(target).into(),
                t_low: grid[i - 1],
                t_high: grid[i],
                v_low: values[i - 1],
                v_high: values[i],
            });
        }
        let m = grid.len() - 1;
        let left = (values[1] - values[0]) / (grid[1] - grid[0]);
        let right = (values[m] - values[m - 1]) / (grid[m] - grid[m - 1]);
        maps.push(MonotoneMap::new(grid.to_vec(), values, left, right)?);
    }
    let op = CompositionOperator::new(phi, maps)?;

    for (src, (f, out)) in perturbed.iter().enumerate() {
        let recovered = op.apply_values(f)?;
        for t in 0..n {
            if (recovered[t] - out[t]).abs() > FACTOR_TOL * (1.0 + out[t].abs()) {
                return inconsistent(Inconsistency::ProbeMismatch {
                    x: x.label(src).into(),
                    y: y.label(t).into(),
                    oracle: out[t],
                    recovered: recovered[t],
                });
            }
        }
    }
    Ok(op)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderCounterexample {
    pub reason: String,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub tf: Vec<f64>,
    pub tg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderIsoVerdict {
    pub pass: bool,
    pub trials: usize,
    pub pairs_checked: usize,
    pub counterexample: Option<OrderCounterexample>,
    pub oracle_error: Option<String>,
}

fn le(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Samples ordered pairs `f <= g` (expecting `Tf <= Tg`) and non-ordered
/// pairs (expecting `Tf </= Tg`) from a seeded generator.
pub fn check_order_iso(oracle: &mut Oracle, n: usize, trials: usize, seed: u64) -> Result<OrderIsoVerdict, OrderError> {
    if trials == 0 {
        return Err(OrderError::NoTrials);
    }
    let mut rng = seeded(seed);
    let mut verdict = OrderIsoVerdict { pass: true, trials, pairs_checked: 0, counterexample: None, oracle_error: None };
    for _ in 0..trials {
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let up: Vec<f64> = f
            .iter()
            .map(|&v| if rng.random_bool(0.3) { v } else { v + rng.random_range(0.0..3.0) })
            .collect();
        let mut down = f.clone();
        if n > 0 {
            let i = rng.random_range(0..n);
            down[i] -= rng.random_range(0.01..3.0);
            if n > 1 && rng.random_bool(0.5) {
                let j = (i + rng.random_range(1..n)) % n;
                down[j] += rng.random_range(0.01..3.0);
            }
        }
        for (g, ordered) in [(up, true), (down, false)] {
            let (tf, tg) = match (oracle(&f), oracle(&g)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    verdict.pass = false;
                    verdict.oracle_error = Some(e);
                    return Ok(verdict);
                }
            };
            verdict.pairs_checked += 1;
            let images_ordered = tf.len() == tg.len() && le(&tf, &tg);
            let reason = if ordered && !images_ordered {
                Some("f <= g but Tf </= Tg")
            } else if !ordered && images_ordered {
                Some("Tf <= Tg but f </= g")
            } else {
                None
            };
            if let Some(reason) = reason {
                verdict.pass = false;
                verdict.counterexample = Some(OrderCounterexample { reason: reason.into(), f: f.clone(), g, tf, tg });
                return Ok(verdict);
            }
        }
    }
    Ok(verdict)
}

/// Finite family of functions on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFamily {
    space: MetricSpace,
    members: Vec<Vec<f64>>,
}

impl FunctionFamily {
    pub fn new(space: MetricSpace, members: Vec<Vec<f64>>) -> Result<Self, OrderError> {
        for m in &members {
            if m.len() != space.len() {
                return Err(OrderError::FieldLength { expected: space.len(), got: m.len() });
            }
            if let Some(i) = m.iter().position(|v| !v.is_finite()) {
                return Err(MetricError::FieldNonFinite(i).into());
            }
        }
        Ok(FunctionFamily { space, members })
    }

    /// All functions `X -> levels`.
    pub fn grid(space: MetricSpace, levels: &[f64]) -> Self {
        let n = space.len();
        let mut members = vec![Vec::with_capacity(n)];
        for _ in 0..n {
            members = members
                .into_iter()
                .flat_map(|m| {
                    levels.iter().map(move |&l| {
                        let mut next = m.clone();
                        next.push(l);
                        next
                    })
                })
                .collect();
        }
        FunctionFamily { space, members }
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomVerdict {
    pub axiom: &'static str,
    pub holds: bool,
    /// Number of quantifier instances examined.
    pub instances: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub a1: AxiomVerdict,
    pub a2: AxiomVerdict,
    pub a3: AxiomVerdict,
    pub compatible: AxiomVerdict,
    pub directed: AxiomVerdict,
}

impl LatticeReport {
    pub fn verdicts(&self) -> [&AxiomVerdict; 5] {
        [&self.a1, &self.a2, &self.a3, &self.compatible, &self.directed]
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.verdicts().iter().filter(|v| !v.holds).map(|v| v.axiom).collect()
    }
}

struct Tally {
    axiom: &'static str,
    instances: usize,
    counterexample: Option<String>,
}

impl Tally {
    fn new(axiom: &'static str) -> Self {
        Tally { axiom, instances: 0, counterexample: None }
    }

    /// Records one instance; returns false once a counterexample is known.
    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) -> bool {
        self.instances += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(describe());
        }
        self.counterexample.is_none()
    }

    fn finish(self) -> AxiomVerdict {
        AxiomVerdict {
            axiom: self.axiom,
            holds: self.counterexample.is_none(),
            instances: self.instances,
            counterexample: self.counterexample,
        }
    }
}

fn fmt_fn(v: &[f64]) -> String {
    format!("{v:?}")
}

/// Exhaustive check of the lattice axioms in the discrete topology. Open-set
/// quantifiers reduce to their extremal instances: `U = {x}` is the smallest
/// open set containing `x`, and `A = X \ {x}` the largest closed set missing
/// it; any witness for those also serves every other choice.
pub fn check_lattice_axioms(family: &FunctionFamily) -> LatticeReport {
    let n = family.space.len();
    let mut members: Vec<&Vec<f64>> = Vec::new();
    for m in &family.members {
        if !members.contains(&m) {
            members.push(m);
        }
    }
    let label = |x: usize| family.space.label(x).to_string();
    let find = |pred: &dyn Fn(&[f64]) -> bool| members.iter().any(|u| pred(u));

    // (A1) every point separated by some ordered pair
    let mut a1 = Tally::new("A1");
    for x in 0..n {
        let ok = members.iter().any(|f| members.iter().any(|g| le(f, g) && f[x] < g[x]));
        if !a1.record(ok, || format!("no f <= g with f < g at {}", label(x))) {
            break;
        }
    }

    // (A2) with U = {x}
    let mut a2 = Tally::new("A2");
    'a2: for f in &members {
        for g in &members {
            if !le(f, g) {
                continue;
            }
            for x in (0..n).filter(|&x| f[x] < g[x]) {
                let up = find(&|u| (0..n).all(|z| if z == x { u[z] > f[z] } else { u[z] == f[z] }));
                let down = find(&|v| (0..n).all(|z| if z == x { v[z] < g[z] } else { v[z] == g[z] }));
                let ok = up && down;
                if !a2.record(ok, || {
                    let side = if up { "v <= g with {v < g} = {x}" } else { "u >= f with {f < u} = {x}" };
                    format!("f = {}, g = {}, x = {}: no {side}", fmt_fn(f), fmt_fn(g), label(x))
                }) {
                    break 'a2;
                }
            }
        }
    }

    // (A3) and its dual, grouped by the envelope min(f, g) / max(f, g)
    let mut a3 = Tally::new("A3");
    let mut lows: Vec<Vec<f64>> = Vec::new();
    let mut highs: Vec<Vec<f64>> = Vec::new();
    for f in &members {
        for g in &members {
            let lo: Vec<f64> = f.iter().zip(g.iter()).map(|(a, b)| a.min(*b)).collect();
            let hi: Vec<f64> = f.iter().zip(g.iter()).map(|(a, b)| a.max(*b)).collect();
            if !lows.contains(&lo) {
                lows.push(lo);
            }
            if !highs.contains(&hi) {
                highs.push(hi);
            }
        }
    }
    'a3: for (envelopes, lower) in [(&lows, true), (&highs, false)] {
        for m in envelopes {
            for h in &members {
                let inside = if lower { le(h, m) } else { le(m, h) };
                if !inside {
                    continue;
                }
                for x in (0..n).filter(|&x| h[x] != m[x]) {
                    let ok = if lower {
                        find(&|u| le(h, u) && le(u, m) && u[x] > h[x])
                    } else {
                        find(&|u| le(m, u) && le(u, h) && u[x] < h[x])
                    };
                    if !a3.record(ok, || {
                        let rel = if lower { "min" } else { "max" };
                        format!("h = {}, {rel}(f, g) = {}, x = {}: no u strictly between at x", fmt_fn(h), fmt_fn(m), label(x))
                    }) {
                        break 'a3;
                    }
                }
            }
        }
    }

    // compatible with U = {x}, A = X \ {x}
    let mut compatible = Tally::new("compatible");
    'compat: for f in &members {
        for g in &members {
            if !le(f, g) {
                continue;
            }
            for x in (0..n).filter(|&x| f[x] < g[x]) {
                let u = find(&|u| (0..n).all(|z| u[z] == if z == x { f[z] } else { g[z] }));
                let v = find(&|v| (0..n).all(|z| v[z] == if z == x { g[z] } else { f[z] }));
                if !compatible.record(u && v, || {
                    format!("f = {}, g = {}, x = {}: missing the splice", fmt_fn(f), fmt_fn(g), label(x))
                }) {
                    break 'compat;
                }
            }
        }
    }

    let mut directed = Tally::new("directed");
    'dir: for f in &members {
        for g in &members {
            let below = find(&|h| le(h, f) && le(h, g));
            let above = find(&|h| le(f, h) && le(g, h));
            if !directed.record(below && above, || {
                let side = if below { "upper" } else { "lower" };
                format!("f = {}, g = {}: no common {side} bound", fmt_fn(f), fmt_fn(g))
            }) {
                break 'dir;
            }
        }
    }

    LatticeReport {
        a1: a1.finish(),
        a2: a2.finish(),
        a3: a3.finish(),
        compatible: compatible.finish(),
        directed: directed.finish(),
    }
}

fn check_bands(a: f64, b: f64, c: f64, d: f64) -> Result<(), OrderError> {
    let finite = [a, b, c, d].iter().all(|v| v.is_finite());
    if finite && a < d && a <= b && b <= c && c <= d {
        Ok(())
    } else {
        Err(OrderError::BandOrder { a, b, c, d })
    }
}

/// `min(max(f, a), d)`.
pub fn truncation_witness(f: &ScalarField, a: f64, b: f64, c: f64, d: f64) -> Result<ScalarField, OrderError> {
    check_bands(a, b, c, d)?;
    Ok(f.map(|v| v.max(a).min(d)))
}

/// Whether `g` satisfies every clause of the band truncation for `f`:
/// `a <= g <= d`, `g = d` where `f >= d`, `g = a` where `f <= a`, `g = f`
/// where `b <= f <= c`.
pub fn truncation_clauses_hold(f: &ScalarField, g: &ScalarField, a: f64, b: f64, c: f64, d: f64) -> bool {
    f.values().iter().zip(g.values()).all(|(&fv, &gv)| {
        (a..=d).contains(&gv)
            && (fv < d || gv == d)
            && (fv > a || gv == a)
            && (!(b..=c).contains(&fv) || gv == fv)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::index_labels;

    fn points(n: usize) -> MetricSpace {
        MetricSpace::from_reals(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap()
    }

    fn swap_affine() -> CompositionOperator {
        CompositionOperator::new(vec![1, 0], vec![MonotoneMap::affine(2.0, 0.0), MonotoneMap::affine(1.0, 1.0)]).unwrap()
    }

    #[test]
    fn monotone_map_validation() {
        assert!(MonotoneMap::new(vec![], vec![], 1.0, 1.0).is_err());
        assert!(MonotoneMap::new(vec![0.0, 0.0], vec![0.0, 1.0], 1.0, 1.0).is_err());
        assert!(MonotoneMap::new(vec![0.0, 1.0], vec![1.0, 0.0], 1.0, 1.0).is_err());
        assert!(MonotoneMap::new(vec![0.0], vec![0.0], 0.0, 1.0).is_err());
        assert!(MonotoneMap::new(vec![0.0], vec![0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn piecewise_eval() {
        let m = MonotoneMap::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0], 0.5, 4.0).unwrap();
        assert_eq!(m.eval(-2.0), -1.0);
        assert_eq!(m.eval(0.5), 1.0);
        assert_eq!(m.eval(1.0), 2.0);
        assert_eq!(m.eval(2.0), 2.5);
        assert_eq!(m.eval(4.0), 7.0);
        let inv = m.inverse();
        for t in [-3.0, 0.2, 1.0, 2.5, 9.0] {
            assert!((inv.eval(m.eval(t)) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_examples() {
        let f = ScalarField::new(vec![3.0, 5.0]).unwrap();
        assert_eq!(CompositionOperator::identity(2).apply(&f).unwrap(), f);
        let t = swap_affine();
        assert_eq!(t.apply(&f).unwrap().values(), &[10.0, 4.0]);
        let c = ScalarField::new(vec![1.5, 1.5]).unwrap();
        let tc = t.apply(&c).unwrap();
        assert_eq!(tc[0], t.maps()[0].eval(1.5));
        assert!(t.apply(&ScalarField::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn invert_examples() {
        let t = swap_affine();
        let s = t.invert();
        assert_eq!(s.phi(), &[1, 0]);
        // source 0 went through t -> t + 1, source 1 through t -> 2t
        assert_eq!(s.maps()[0].eval(4.0), 3.0);
        assert_eq!(s.maps()[1].eval(10.0), 5.0);
        let f = ScalarField::new(vec![3.0, 5.0]).unwrap();
        assert_eq!(s.apply(&t.apply(&f).unwrap()).unwrap(), f);
        let back = s.invert();
        assert_eq!(back.phi(), t.phi());
        for (a, b) in back.maps().iter().zip(t.maps()) {
            assert_eq!(a.breakpoints(), b.breakpoints());
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(CompositionOperator::identity(3).invert(), CompositionOperator::identity(3));
    }

    #[test]
    fn factor_recovers_swap_affine() {
        let t = swap_affine();
        let grid = [-1.0, 0.0, 1.0, 2.0];
        let mut oracle = |f: &[f64]| t.apply_values(f).map_err(|e| e.to_string());
        let r = factor_operator(&mut oracle, &points(2), &points(2), &grid).unwrap();
        assert_eq!(r.phi(), t.phi());
        for (a, b) in r.maps().iter().zip(t.maps()) {
            for &g in &grid {
                assert_eq!(a.eval(g), b.eval(g));
            }
        }
        let mut id = |f: &[f64]| Ok(f.to_vec());
        let r = factor_operator(&mut id, &points(3), &points(3), &grid).unwrap();
        assert_eq!(r.phi(), &[0, 1, 2]);
    }

    #[test]
    fn factor_detects_nonlocal_oracle() {
        let mut sum = |f: &[f64]| {
            let s: f64 = f.iter().sum();
            Ok(f.iter().map(|v| v + s).collect())
        };
        let err = factor_operator(&mut sum, &points(3), &points(3), &[0.0, 1.0]).unwrap_err();
        match err {
            FactorError::Inconsistent(Inconsistency::MultipleResponses { moved, .. }) => assert_eq!(moved.len(), 3),
            other => panic!("{other:?}"),
        }
        let mut decreasing = |f: &[f64]| Ok(f.iter().map(|v| -v).collect());
        assert!(matches!(
            factor_operator(&mut decreasing, &points(2), &points(2), &[0.0, 1.0]),
            Err(FactorError::Inconsistent(Inconsistency::NonMonotone { .. }))
        ));
        assert!(factor_operator(&mut decreasing, &points(2), &points(2), &[0.0]).is_err());
    }

    #[test]
    fn order_iso_examples() {
        let mut rng = seeded(3);
        let t = random_operator(&mut rng, 4, None);
        let mut oracle = |f: &[f64]| t.apply_values(f).map_err(|e| e.to_string());
        assert!(check_order_iso(&mut oracle, 4, 200, 1).unwrap().pass);

        let mut negate = |f: &[f64]| {
            let mut out = f.to_vec();
            out[0] = -out[0];
            Ok(out)
        };
        let v = check_order_iso(&mut negate, 3, 200, 1).unwrap();
        assert!(!v.pass);
        assert!(v.counterexample.is_some());
    }

    #[test]
    fn axioms_on_grid_family() {
        let fam = FunctionFamily::grid(points(3), &[0.0, 1.0, 2.0]);
        assert_eq!(fam.members().len(), 27);
        let report = check_lattice_axioms(&fam);
        assert!(report.failing().is_empty(), "{report:?}");
    }

    #[test]
    fn designed_failing_families() {
        let constant = FunctionFamily::new(points(2), vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(check_lattice_axioms(&constant).failing(), vec!["A1"]);
        let pair = FunctionFamily::new(points(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(check_lattice_axioms(&pair).failing(), vec!["A1", "directed"]);
        let zero_and_bump = FunctionFamily::new(points(2), vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(check_lattice_axioms(&zero_and_bump).failing(), vec!["A1"]);
        let empty = FunctionFamily::new(MetricSpace::new(index_labels(1), &[vec![0.0]]).unwrap(), vec![]).unwrap();
        assert_eq!(check_lattice_axioms(&empty).failing(), vec!["A1"]);
    }

    #[test]
    fn truncation_examples() {
        let f = ScalarField::new(vec![-5.0, 0.5, 9.0]).unwrap();
        let g = truncation_witness(&f, 0.0, 0.25, 0.75, 1.0).unwrap();
        assert_eq!(g.values(), &[0.0, 0.5, 1.0]);
        assert!(truncation_clauses_hold(&f, &g, 0.0, 0.25, 0.75, 1.0));
        let again = truncation_witness(&g, 0.0, 0.25, 0.75, 1.0).unwrap();
        assert_eq!(again, g);
        let inside = ScalarField::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(truncation_witness(&inside, 0.0, 0.25, 0.75, 1.0).unwrap(), inside);
        assert!(truncation_witness(&f, 1.0, 0.25, 0.75, 0.0).is_err());
        assert!(truncation_witness(&f, 0.0, 1.0, 1.0, 1.0).is_ok());
    }
}
