//! The bounded metric `d'` obtained by normalizing 1-Lipschitz test functions
//! with the base weight `xi = max(d(., e), 1)`, the comparison function
//! `rho`, and the order isomorphisms `f -> f / xi` and `f -> f / zeta` with
//! their constants.
//!
//! `d'(p, q) = sup |f(p)/xi(p) - f(q)/xi(q)|` over `f` with `L(f) <= 1` and
//! `|f(e)| <= 1`. The supremum is a linear program in the values of `f`; on
//! `{e, p, q}` it has at most three variables and eight constraints, and any
//! feasible triple extends to the whole space by the infimal-convolution
//! extension with constant 1. [`dprime_pair_oracle`] solves that program by
//! vertex enumeration. [`dprime_closed_form`] evaluates its optimum directly:
//! with `xi(p) <= xi(q)` the objective splits as
//! `(1/xi(p) - 1/xi(q)) f(p) + (f(p) - f(q)) / xi(q)`, both parts are
//! maximized at once by `f(e) = 1, f(p) = 1 + d(p,e), f(q) = f(p) - d(p,q)`,
//! giving `d(p,q)/xi(q) + (1/xi(p) - 1/xi(q)) (d(p,e) + 1)`.

mod net;
mod transport;

pub use net::{
    ae_constants, build_net, build_net_unchecked, AeConstants, CheckOutcome, LemmaCheck, NetDecomposition,
    CHECK_ANNULUS, CHECK_COMPARABLE, CHECK_COVER, CHECK_RATIO_LIP, CHECK_SEPARATION,
};
pub use transport::{
    distortion_constant, lip_transport, transport_certificate, DistortionMode, PairTerms,
    TransportCertificate,
};

use serde::Serialize;
use thiserror::Error;

use crate::lipschitz::lip_constant;
use crate::lp::SmallLp;
use crate::metric::{base_weight, MetricError, MetricSpace, PointedSpace, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivedError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("d' requires two distinct points, got {0} twice")]
    SamePoint(usize),
    #[error("the d' program at ({0}, {1}) has no vertex")]
    NoVertex(usize, usize),
    #[error("derived matrix is not a metric: {0}")]
    NotAMetric(MetricError),
    #[error("k_max must be at least 1")]
    ZeroKMax,
    #[error("constant C_{k} = {value} is not valid: pair ({p}, {q}) violates it")]
    UncertifiedConstant { k: usize, value: f64, p: String, q: String },
    #[error("net certification failed in {check}: pair {pair:?}, margin {margin}")]
    Certification { check: &'static str, pair: Option<(String, String)>, margin: f64 },
    #[error("net was built for a space of {net} points, not {space}")]
    NetMismatch { net: usize, space: usize },
    #[error("scale {delta} needs C_{k}, but only {k_max} constants were certified")]
    NeedMoreConstants { delta: f64, k: usize, k_max: usize },
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("map is not a bijection onto the target points: {0}")]
    NotBijective(String),
    #[error("distortion {actual} exceeds the supplied constant {supplied}")]
    DistortionExceeded { actual: f64, supplied: f64 },
}

pub type Matrix = Vec<Vec<f64>>;

/// `rho(p, q) = d(p, q) / max(xi(p), xi(q))`.
pub fn rho_matrix(pointed: &PointedSpace) -> Matrix {
    let xi = base_weight(pointed);
    let n = pointed.len();
    let mut out = vec![vec![0.0; n]; n];
    for (p, q) in pointed.space().pairs() {
        let r = pointed.d(p, q) / xi[p].max(xi[q]);
        out[p][q] = r;
        out[q][p] = r;
    }
    out
}

/// Exact `d'(p, q)` from the three-variable program on `{e, p, q}`, solved by
/// vertex enumeration in both orientations.
pub fn dprime_pair_oracle(pointed: &PointedSpace, p: usize, q: usize) -> Result<f64, DerivedError> {
    pointed.space().check_index(p)?;
    pointed.space().check_index(q)?;
    if p == q {
        return Err(DerivedError::SamePoint(p));
    }
    let e = pointed.base();
    let mut vars: Vec<usize> = vec![e];
    for x in [p, q] {
        if !vars.contains(&x) {
            vars.push(x);
        }
    }
    let slot = |x: usize| vars.iter().position(|&v| v == x).expect("variable present");
    let k = vars.len();
    let xi = |x: usize| pointed.to_base(x).max(1.0);

    let mut best = f64::NEG_INFINITY;
    for sign in [1.0, -1.0] {
        let mut objective = vec![0.0; k];
        objective[slot(p)] += sign / xi(p);
        objective[slot(q)] -= sign / xi(q);
        let mut lp = SmallLp::new(objective);
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    let mut row = vec![0.0; k];
                    row[a] = 1.0;
                    row[b] = -1.0;
                    lp.constrain(row, pointed.d(vars[a], vars[b]));
                }
            }
        }
        let mut up = vec![0.0; k];
        up[0] = 1.0;
        lp.constrain(up, 1.0);
        let mut down = vec![0.0; k];
        down[0] = -1.0;
        lp.constrain(down, 1.0);
        let (value, _) = lp.maximize().ok_or(DerivedError::NoVertex(p, q))?;
        best = best.max(value);
    }
    Ok(best)
}

/// Closed-form `d'(p, q)`; 0 on the diagonal.
pub fn dprime_closed_form(pointed: &PointedSpace, p: usize, q: usize) -> f64 {
    if p == q {
        return 0.0;
    }
    let (xp, xq) = (pointed.to_base(p).max(1.0), pointed.to_base(q).max(1.0));
    let (small, xs, xl) = if xp <= xq { (p, xp, xq) } else { (q, xq, xp) };
    pointed.d(p, q) / xl + (1.0 / xs - 1.0 / xl) * (pointed.to_base(small) + 1.0)
}

/// The full `d'` matrix from the closed form, validated as a metric.
pub fn dprime_matrix(pointed: &PointedSpace) -> Result<MetricSpace, DerivedError> {
    dprime_matrix_with(pointed, dprime_closed_form)
}

/// `d'` assembled from an arbitrary pair evaluator. Used to run the invariant
/// battery against alternative or deliberately broken evaluators.
pub fn dprime_matrix_with(
    pointed: &PointedSpace,
    pair: impl Fn(&PointedSpace, usize, usize) -> f64,
) -> Result<MetricSpace, DerivedError> {
    let n = pointed.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (p, q) in pointed.space().pairs() {
        let v = pair(pointed, p, q);
        rows[p][q] = v;
        rows[q][p] = v;
    }
    MetricSpace::new(pointed.space().labels().to_vec(), &rows).map_err(DerivedError::NotAMetric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// `f -> f / xi` (forward) and `g -> g * xi` (inverse).
pub fn scale_iso_lip(
    pointed: &PointedSpace,
    f: &ScalarField,
    direction: Direction,
) -> Result<ScalarField, DerivedError> {
    f.check_aligned(pointed.space())?;
    let xi = base_weight(pointed);
    Ok(match direction {
        Direction::Forward => f.zip_map(&xi, |a, w| a / w),
        Direction::Inverse => f.zip_map(&xi, |a, w| a * w),
    })
}

/// Seminorm bounds for `f -> f / xi` in both directions:
/// `L'(f/xi) <= max(L(f), |f(e)|, 1)` and `L(f) <= 7 L'(g) + |g(e)|` with
/// `g = f / xi`, where `L'` is taken with respect to `d'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipIsoCertificate {
    pub lip: f64,
    pub lip_prime_of_quotient: f64,
    pub value_at_base: f64,
    pub forward_bound: f64,
    pub forward_holds: bool,
    pub inverse_bound: f64,
    pub inverse_holds: bool,
}

/// Absolute slack allowed on certified seminorm inequalities.
pub const SEMINORM_SLACK: f64 = 1e-9;

pub fn lip_iso_certificate(
    pointed: &PointedSpace,
    dprime: &MetricSpace,
    f: &ScalarField,
) -> Result<LipIsoCertificate, DerivedError> {
    let lip = lip_constant(pointed.space(), f, 1.0)?;
    let g = scale_iso_lip(pointed, f, Direction::Forward)?;
    let lip_prime = lip_constant(dprime, &g, 1.0)?;
    let fe = f[pointed.base()];
    let forward_bound = lip.max(fe.abs()).max(1.0);
    let inverse_bound = 7.0 * lip_prime + g[pointed.base()].abs();
    Ok(LipIsoCertificate {
        lip,
        lip_prime_of_quotient: lip_prime,
        value_at_base: fe,
        forward_bound,
        forward_holds: lip_prime <= forward_bound + SEMINORM_SLACK,
        inverse_bound,
        inverse_holds: lip <= inverse_bound + SEMINORM_SLACK,
    })
}

/// `f -> f / zeta` (forward) and `g -> g * zeta` (inverse) for a certified net.
pub fn scale_iso_littlelip(
    pointed: &PointedSpace,
    net: &NetDecomposition,
    f: &ScalarField,
    direction: Direction,
) -> Result<ScalarField, DerivedError> {
    net.check_space(pointed)?;
    f.check_aligned(pointed.space())?;
    Ok(match direction {
        Direction::Forward => f.zip_map(&net.zeta, |a, w| a / w),
        Direction::Inverse => f.zip_map(&net.zeta, |a, w| a * w),
    })
}

/// Small-scale modulus transfer for `f -> f / zeta`: with `eps` the largest
/// ratio `|f(u)-f(v)|/d(u,v)` over pairs closer than `delta`, and `k` least with
/// `2/(k+2) < delta`, every pair with
/// `d'(u,v) < min(2/(3 K C_1), delta/(2 C_k))` satisfies
/// `|(f/zeta)(u) - (f/zeta)(v)| <= max(C_1, 2) eps d'(u,v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LittleLipTransfer {
    pub delta: f64,
    pub epsilon: f64,
    pub k: usize,
    pub threshold: f64,
    pub factor: f64,
    pub pairs_checked: usize,
    pub worst_margin: Option<f64>,
    pub worst_pair: Option<(String, String)>,
    pub holds: bool,
}

pub fn littlelip_transfer_certificate(
    pointed: &PointedSpace,
    net: &NetDecomposition,
    f: &ScalarField,
    delta: f64,
) -> Result<LittleLipTransfer, DerivedError> {
    net.check_space(pointed)?;
    f.check_aligned(pointed.space())?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DerivedError::InvalidDelta(delta));
    }
    let space = pointed.space();
    let mut epsilon: f64 = 0.0;
    for (u, v) in space.pairs() {
        if space.d(u, v) < delta {
            epsilon = epsilon.max((f[u] - f[v]).abs() / space.d(u, v));
        }
    }
    let mut k = 1;
    while 2.0 / (k as f64 + 2.0) >= delta {
        k += 1;
    }
    let k_max = net.constants.k_max();
    if k > k_max {
        return Err(DerivedError::NeedMoreConstants { delta, k, k_max });
    }
    let c1 = net.c1;
    let ck = net.constants.c(k);
    let threshold = (2.0 / (3.0 * net.k * c1)).min(delta / (2.0 * ck));
    let factor = c1.max(2.0);
    let g = scale_iso_littlelip(pointed, net, f, Direction::Forward)?;
    let mut pairs_checked = 0;
    let mut worst: Option<(f64, usize, usize)> = None;
    for (u, v) in space.pairs() {
        let dp = net.dprime.d(u, v);
        if dp < threshold {
            pairs_checked += 1;
            let bound = factor * epsilon * dp;
            let margin = bound - (g[u] - g[v]).abs();
            if worst.is_none_or(|(m, _, _)| margin < m) {
                worst = Some((margin, u, v));
            }
        }
    }
    let holds = worst.is_none_or(|(m, _, _)| m >= -1e-12);
    Ok(LittleLipTransfer {
        delta,
        epsilon,
        k,
        threshold,
        factor,
        pairs_checked,
        worst_margin: worst.map(|w| w.0),
        worst_pair: worst.map(|(_, u, v)| (space.label(u).to_string(), space.label(v).to_string())),
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_pointed, seeded};

    fn pointed_from_rows(rows: &[&[f64]], base: usize) -> PointedSpace {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PointedSpace::new(crate::metric::validate_metric(&rows).unwrap(), base).unwrap()
    }

    #[test]
    fn rho_examples() {
        let p = pointed_from_rows(&[&[0.0, 1.0], &[1.0, 0.0]], 0);
        assert_eq!(rho_matrix(&p)[0][1], 1.0);
        // e, p, q with d(e,p) = 2, d(e,q) = 4, d(p,q) = 2
        let p = pointed_from_rows(&[&[0.0, 2.0, 4.0], &[2.0, 0.0, 2.0], &[4.0, 2.0, 0.0]], 0);
        let rho = rho_matrix(&p);
        assert_eq!(rho[1][2], 0.5);
        let xi = base_weight(&p);
        for x in 0..3 {
            assert!(rho[0][x] <= 1.0);
            assert_eq!(rho[0][x], p.to_base(x) / xi[x].max(1.0));
        }
    }

    #[test]
    fn dprime_examples() {
        let two = pointed_from_rows(&[&[0.0, 1.0], &[1.0, 0.0]], 0);
        assert!((dprime_pair_oracle(&two, 0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dprime_closed_form(&two, 0, 1), 1.0);

        let p = pointed_from_rows(&[&[0.0, 2.0, 4.0], &[2.0, 0.0, 2.0], &[4.0, 2.0, 0.0]], 0);
        assert!((dprime_pair_oracle(&p, 1, 2).unwrap() - 1.25).abs() < 1e-12);
        assert_eq!(dprime_closed_form(&p, 1, 2), 1.25);
        assert!((dprime_pair_oracle(&p, 0, 1).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(dprime_closed_form(&p, 0, 1), 1.5);

        assert_eq!(dprime_pair_oracle(&p, 1, 1).unwrap_err(), DerivedError::SamePoint(1));
    }

    #[test]
    fn closed_form_matches_oracle_on_random_spaces() {
        let mut rng = seeded(11);
        for _ in 0..100 {
            let p = random_pointed(&mut rng, 2, 6);
            for (a, b) in p.space().pairs() {
                let oracle = dprime_pair_oracle(&p, a, b).unwrap();
                let closed = dprime_closed_form(&p, a, b);
                assert!((oracle - closed).abs() <= 1e-9, "{oracle} vs {closed}");
            }
        }
    }

    #[test]
    fn dprime_sandwich() {
        let mut rng = seeded(12);
        for _ in 0..100 {
            let p = random_pointed(&mut rng, 1, 10);
            let dp = dprime_matrix(&p).unwrap();
            let rho = rho_matrix(&p);
            for (a, b) in p.space().pairs() {
                assert!(rho[a][b] <= dp.d(a, b) + 1e-12);
                assert!(dp.d(a, b) <= 3.0 * rho[a][b] + 1e-12);
                assert!(dp.d(a, b) <= 4.0);
            }
        }
    }

    #[test]
    fn scale_iso_lip_examples() {
        let p = pointed_from_rows(&[&[0.0, 3.0], &[3.0, 0.0]], 0);
        let xi = base_weight(&p);
        let one = scale_iso_lip(&p, &xi, Direction::Forward).unwrap();
        assert_eq!(one.values(), &[1.0, 1.0]);

        let f = ScalarField::new(vec![1.0, 4.0]).unwrap();
        let g = scale_iso_lip(&p, &f, Direction::Forward).unwrap();
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 4.0 / 3.0).abs() < 1e-15);
        let back = scale_iso_lip(&p, &g, Direction::Inverse).unwrap();
        assert!((back[1] - 4.0).abs() < 1e-15);

        let dp = dprime_matrix(&p).unwrap();
        let oracle = dprime_pair_oracle(&p, 0, 1).unwrap();
        assert!((dp.d(0, 1) - oracle).abs() < 1e-12);
        let cert = lip_iso_certificate(&p, &dp, &f).unwrap();
        assert_eq!(cert.lip, 1.0);
        assert!(((1.0 - 4.0 / 3.0f64).abs() / oracle - cert.lip_prime_of_quotient).abs() < 1e-12);
        assert!(cert.forward_holds && cert.inverse_holds);
    }

    #[test]
    fn scale_iso_lip_is_order_preserving() {
        let mut rng = seeded(13);
        for _ in 0..50 {
            let p = random_pointed(&mut rng, 1, 8);
            let f = crate::random::random_field(&mut rng, p.len(), 5.0);
            let g = f.map(|v| v + 0.25);
            let tf = scale_iso_lip(&p, &f, Direction::Forward).unwrap();
            let tg = scale_iso_lip(&p, &g, Direction::Forward).unwrap();
            assert!(tf.le(&tg));
        }
    }
}
