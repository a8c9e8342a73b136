//! Comparison of two pointed spaces through a point bijection `phi`: the
//! distortion of `rho` under `phi`, and the weighted transport
//! `g(y) = f(x) / xi(x) * zeta(y)` with `x = phi^-1(y)`, where `xi` and `zeta`
//! are the base weights `1 v d(., base)^alpha` of the two sides.

use serde::Serialize;

use super::DerivedError;
use crate::lipschitz::{check_alpha, pow_alpha};
use crate::metric::{PointedSpace, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionMode {
    Rho,
    RhoAlpha(f64),
}

impl DistortionMode {
    fn alpha(self) -> f64 {
        match self {
            DistortionMode::Rho => 1.0,
            DistortionMode::RhoAlpha(a) => a,
        }
    }
}

pub(crate) fn check_bijection(p: &PointedSpace, q: &PointedSpace, phi: &[usize]) -> Result<Vec<usize>, DerivedError> {
    if phi.len() != p.len() || p.len() != q.len() {
        return Err(DerivedError::NotBijective(format!(
            "{} images for {} source and {} target points",
            phi.len(),
            p.len(),
            q.len()
        )));
    }
    let mut inverse = vec![usize::MAX; q.len()];
    for (x, &y) in phi.iter().enumerate() {
        if y >= q.len() {
            return Err(DerivedError::NotBijective(format!("image {y} of point {x} is out of range")));
        }
        if inverse[y] != usize::MAX {
            return Err(DerivedError::NotBijective(format!(
                "points {} and {} both map to {}",
                p.space().label(inverse[y]),
                p.space().label(x),
                q.space().label(y)
            )));
        }
        inverse[y] = x;
    }
    Ok(inverse)
}

fn weight(pointed: &PointedSpace, alpha: f64) -> Vec<f64> {
    (0..pointed.len()).map(|x| pow_alpha(pointed.to_base(x), alpha).max(1.0)).collect()
}

/// `h(t) = t^alpha v 1`.
fn h(t: f64, alpha: f64) -> f64 {
    pow_alpha(t, alpha).max(1.0)
}

/// Least `C >= 1` with `rho_X / C <= rho_Y o phi <= C rho_X` on every pair;
/// infinite if some ratio degenerates.
pub fn distortion_constant(
    p: &PointedSpace,
    q: &PointedSpace,
    phi: &[usize],
    mode: DistortionMode,
) -> Result<f64, DerivedError> {
    check_bijection(p, q, phi)?;
    let alpha = mode.alpha();
    check_alpha(alpha)?;
    let (wx, wy) = (weight(p, alpha), weight(q, alpha));
    let mut c: f64 = 1.0;
    for (a, b) in p.space().pairs() {
        let rx = pow_alpha(p.d(a, b), alpha) / wx[a].max(wx[b]);
        let (ya, yb) = (phi[a], phi[b]);
        let ry = pow_alpha(q.d(ya, yb), alpha) / wy[ya].max(wy[yb]);
        let ratio = ry / rx;
        if !(ratio.is_finite() && ratio > 0.0) {
            return Ok(f64::INFINITY);
        }
        c = c.max(ratio).max(1.0 / ratio);
    }
    Ok(c)
}

/// `g(y) = f(phi^-1(y)) / xi(phi^-1(y)) * zeta(y)`, indexed by the target.
pub fn lip_transport(
    p: &PointedSpace,
    q: &PointedSpace,
    phi: &[usize],
    f: &ScalarField,
    alpha: f64,
) -> Result<ScalarField, DerivedError> {
    let inverse = check_bijection(p, q, phi)?;
    check_alpha(alpha)?;
    f.check_aligned(p.space())?;
    let (wx, wy) = (weight(p, alpha), weight(q, alpha));
    Ok(ScalarField::from_vec_unchecked(
        (0..q.len()).map(|y| f[inverse[y]] / wx[inverse[y]] * wy[y]).collect(),
    ))
}

/// The three-term split of `|g(y) - g(y')|` for one target pair, with the
/// preimages ordered so that `xi(x') <= xi(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTerms {
    pub y: String,
    pub y_prime: String,
    pub difference: f64,
    pub term_i: f64,
    pub term_ii: f64,
    pub term_iii: f64,
    /// Realized modulus `|f(x) - f(x')| / d(x, x')^alpha`.
    pub eta: f64,
    pub bound_i: f64,
    pub bound_ii: f64,
    pub bound_iii: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportCertificate {
    pub alpha: f64,
    pub constant: f64,
    pub distortion: f64,
    /// `M = max |f| / xi`.
    pub m: f64,
    pub pairs: Vec<PairTerms>,
    pub holds: bool,
}

const TERM_TOL: f64 = 1e-9;

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + TERM_TOL * (1.0 + rhs.abs())
}

fn quotient_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evaluates the three-term bound on every target pair, given a constant
/// `c` that must dominate the `rho_alpha` distortion of `phi`.
pub fn transport_certificate(
    p: &PointedSpace,
    q: &PointedSpace,
    phi: &[usize],
    f: &ScalarField,
    alpha: f64,
    c: f64,
) -> Result<TransportCertificate, DerivedError> {
    let inverse = check_bijection(p, q, phi)?;
    let distortion = distortion_constant(p, q, phi, DistortionMode::RhoAlpha(alpha))?;
    if !within(distortion, c) {
        return Err(DerivedError::DistortionExceeded { actual: distortion, supplied: c });
    }
    let g = lip_transport(p, q, phi, f, alpha)?;
    let (wx, wy) = (weight(p, alpha), weight(q, alpha));
    let m = (0..p.len()).map(|x| f[x].abs() / wx[x]).fold(0.0, f64::max);
    let mut pairs = Vec::new();
    for (ya, yb) in q.space().pairs() {
        let (xa, xb) = (inverse[ya], inverse[yb]);
        // y carries the preimage with the larger weight
        let (y, yp, x, xp) = if wx[xb] <= wx[xa] { (ya, yb, xa, xb) } else { (yb, ya, xb, xa) };
        let dy = pow_alpha(q.d(y, yp), alpha);
        let dx = pow_alpha(p.d(x, xp), alpha);
        let term_i = (f[x] - f[xp]).abs() * wy[y] / wx[x];
        let term_ii = f[xp].abs() * wy[y] * (1.0 / wx[x] - 1.0 / wx[xp]).abs();
        let term_iii = f[xp].abs() / wx[xp] * (wy[y] - wy[yp]).abs();
        let eta = (f[x] - f[xp]).abs() / dx;
        let dh_x = (h(p.to_base(x), alpha) - h(p.to_base(xp), alpha)).abs();
        let dh_y = (h(q.to_base(y), alpha) - h(q.to_base(yp), alpha)).abs();
        let dt_y = pow_alpha((q.to_base(y) - q.to_base(yp)).abs(), alpha);
        let bound_i = eta * c * dy;
        let bound_ii = m * c * dh_x / dx * dy;
        let bound_iii = m * quotient_or_zero(dh_y, dt_y) * dy;
        let difference = (g[y] - g[yp]).abs();
        let holds = within(difference, term_i + term_ii + term_iii)
            && within(term_i, bound_i)
            && within(term_ii, bound_ii)
            && within(term_iii, bound_iii);
        pairs.push(PairTerms {
            y: q.space().label(y).to_string(),
            y_prime: q.space().label(yp).to_string(),
            difference,
            term_i,
            term_ii,
            term_iii,
            eta,
            bound_i,
            bound_ii,
            bound_iii,
            holds,
        });
    }
    let holds = pairs.iter().all(|t| t.holds);
    Ok(TransportCertificate { alpha, constant: c, distortion, m, pairs, holds })
}
