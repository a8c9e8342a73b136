//! Hölder/Lipschitz seminorms, finite-scale moduli of continuity and
//! extension operators for Lipschitz and little-Lipschitz functions.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{MetricError, MetricSpace, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("subset is empty")]
    EmptySubset,
    #[error("subset index {0} appears twice")]
    DuplicateSubsetIndex(usize),
    #[error("{values} prescribed values for a subset of {subset} points")]
    ValueCount { values: usize, subset: usize },
    #[error("prescribed value at subset position {0} is not finite")]
    NonFiniteValue(usize),
    #[error("constant must be finite and nonnegative, got {0}")]
    InvalidConstant(f64),
    #[error("exponent must lie in (0, 1) for this operator, got {0}")]
    ExponentNotBelowOne(f64),
    #[error("scale grid must be nonempty, positive and strictly increasing")]
    InvalidScales,
    #[error("prescribed values are not {constant}-Lipschitz for d^alpha: points {a} and {b} have ratio {ratio}")]
    LipschitzViolation { a: usize, b: usize, ratio: f64, constant: f64 },
    #[error("subset is not separated by gap {gap}: points {a} and {b} are {distance} apart")]
    GapViolation { a: usize, b: usize, distance: f64, gap: f64 },
    #[error("gap must be positive, got {0}")]
    InvalidGap(f64),
    #[error("radius at position {0} must be positive")]
    InvalidRadius(usize),
    #[error("centers {a} and {b} are {distance} apart, below the radius sum {required}")]
    CenterSpacing { a: usize, b: usize, distance: f64, required: f64 },
    #[error("bumps around centers {a} and {b} both reach point {point}")]
    SupportOverlap { point: usize, a: usize, b: usize },
    #[error("sequence does not converge rapidly at step {step}: d(x_(n+1), x0) = {next} > {current} / 2")]
    NotRapid { step: usize, next: f64, current: f64 },
    #[error("sequence point {point} coincides with the limit but carries value {value} instead of {limit_value}")]
    ConflictingValues { point: usize, value: f64, limit_value: f64 },
}

#[inline]
pub(crate) fn pow_alpha(d: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        d
    } else {
        d.powf(alpha)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), MetricError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(MetricError::InvalidExponent(alpha))
    }
}

/// `|f(p) - f(q)| / d(p, q)^alpha`.
#[inline]
pub fn difference_ratio(space: &MetricSpace, f: &[f64], p: usize, q: usize, alpha: f64) -> f64 {
    (f[p] - f[q]).abs() / pow_alpha(space.d(p, q), alpha)
}

/// Largest difference ratio over all unordered pairs together with the pair
/// realizing it; `(0, None)` on a single point.
pub fn lip_constant_with_pair(
    space: &MetricSpace,
    f: &ScalarField,
    alpha: f64,
) -> Result<(f64, Option<(usize, usize)>), MetricError> {
    check_alpha(alpha)?;
    f.check_aligned(space)?;
    let mut best = (0.0, None);
    for (p, q) in space.pairs() {
        let r = difference_ratio(space, f.values(), p, q, alpha);
        if r > best.0 || best.1.is_none() {
            best = (r, Some((p, q)));
        }
    }
    Ok(best)
}

/// The Lipschitz constant of `f` with respect to `d^alpha`.
pub fn lip_constant(space: &MetricSpace, f: &ScalarField, alpha: f64) -> Result<f64, MetricError> {
    lip_constant_with_pair(space, f, alpha).map(|(l, _)| l)
}

/// Lipschitz constant of values prescribed on a subset.
pub fn subset_lip_constant(space: &MetricSpace, subset: &[usize], values: &[f64], alpha: f64) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..subset.len() {
        for b in (a + 1)..subset.len() {
            let d = pow_alpha(space.d(subset[a], subset[b]), alpha);
            best = best.max((values[a] - values[b]).abs() / d);
        }
    }
    best
}

/// Largest difference ratio among pairs at each distance scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusProfile {
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    pub alpha: f64,
}

/// Deciles of the realized pairwise distances, deduplicated.
pub fn default_scales(space: &MetricSpace) -> Vec<f64> {
    let mut dists: Vec<f64> = space.pairs().map(|(p, q)| space.d(p, q)).collect();
    if dists.is_empty() {
        return vec![1.0];
    }
    dists.sort_by(f64::total_cmp);
    let mut scales: Vec<f64> = (1..=10)
        .map(|k| {
            let pos = ((k as f64 / 10.0) * dists.len() as f64).ceil() as usize;
            dists[pos.clamp(1, dists.len()) - 1]
        })
        .collect();
    scales.dedup();
    scales
}

pub fn modulus_profile(
    space: &MetricSpace,
    f: &ScalarField,
    alpha: f64,
    scales: &[f64],
) -> Result<ModulusProfile, ExtensionError> {
    check_alpha(alpha)?;
    f.check_aligned(space)?;
    if scales.is_empty()
        || scales[0] <= 0.0
        || scales.windows(2).any(|w| w[0] >= w[1])
        || scales.iter().any(|s| !s.is_finite())
    {
        return Err(ExtensionError::InvalidScales);
    }
    let mut ratios = vec![0.0f64; scales.len()];
    for (p, q) in space.pairs() {
        let d = space.d(p, q);
        let r = difference_ratio(space, f.values(), p, q, alpha);
        let first = scales.partition_point(|&s| s < d);
        for slot in &mut ratios[first..] {
            *slot = slot.max(r);
        }
    }
    Ok(ModulusProfile { scales: scales.to_vec(), ratios, alpha })
}

fn check_subset(
    space: &MetricSpace,
    subset: &[usize],
    values: &[f64],
) -> Result<(), ExtensionError> {
    if subset.is_empty() {
        return Err(ExtensionError::EmptySubset);
    }
    if values.len() != subset.len() {
        return Err(ExtensionError::ValueCount { values: values.len(), subset: subset.len() });
    }
    let mut seen = vec![false; space.len()];
    for &z in subset {
        space.check_index(z)?;
        if std::mem::replace(&mut seen[z], true) {
            return Err(ExtensionError::DuplicateSubsetIndex(z));
        }
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(ExtensionError::NonFiniteValue(pos));
    }
    Ok(())
}

fn check_constant(k: f64) -> Result<(), ExtensionError> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(ExtensionError::InvalidConstant(k))
    }
}

fn check_subset_lipschitz(
    space: &MetricSpace,
    subset: &[usize],
    values: &[f64],
    constant: f64,
    alpha: f64,
) -> Result<(), ExtensionError> {
    for a in 0..subset.len() {
        for b in (a + 1)..subset.len() {
            let d = pow_alpha(space.d(subset[a], subset[b]), alpha);
            let diff = (values[a] - values[b]).abs();
            let allowed = constant * d;
            if diff > allowed + 1e-12 * allowed.max(diff) {
                return Err(ExtensionError::LipschitzViolation {
                    a: subset[a],
                    b: subset[b],
                    ratio: diff / d,
                    constant,
                });
            }
        }
    }
    Ok(())
}

/// Pins the output to the prescribed values on the subset. Each formula
/// already evaluates to them there; this removes rounding noise.
fn pin(values: &mut [f64], subset: &[usize], f0: &[f64]) {
    for (&z, &v) in subset.iter().zip(f0) {
        values[z] = v;
    }
}

/// Infimal-convolution extension `g(x) = min_z [f0(z) + K d(x, z)^alpha]`.
pub fn mcshane_extend(
    space: &MetricSpace,
    subset: &[usize],
    f0: &[f64],
    k: f64,
    alpha: f64,
) -> Result<ScalarField, ExtensionError> {
    check_alpha(alpha)?;
    check_subset(space, subset, f0)?;
    check_constant(k)?;
    check_subset_lipschitz(space, subset, f0, k, alpha)?;
    let mut g: Vec<f64> = (0..space.len())
        .map(|x| {
            subset
                .iter()
                .zip(f0)
                .map(|(&z, &v)| v + k * pow_alpha(space.d(x, z), alpha))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    pin(&mut g, subset, f0);
    Ok(ScalarField::from_vec_unchecked(g))
}

/// The profile `a -> (a^alpha - r^alpha / 2)^+` used by the separated-set
/// extension.
#[inline]
pub fn gap_profile(a: f64, gap: f64, alpha: f64) -> f64 {
    (a.powf(alpha) - gap.powf(alpha) / 2.0).max(0.0)
}

/// Hölder constant of [`gap_profile`] over the distances realized between
/// points of the space and points of the subset.
pub fn gap_profile_constant(space: &MetricSpace, subset: &[usize], gap: f64, alpha: f64) -> f64 {
    let mut ts: Vec<f64> =
        (0..space.len()).flat_map(|x| subset.iter().map(move |&z| space.d(x, z))).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let hs: Vec<f64> = ts.iter().map(|&t| gap_profile(t, gap, alpha)).collect();
    let mut best: f64 = 0.0;
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            best = best.max((hs[j] - hs[i]).abs() / (ts[j] - ts[i]).powf(alpha));
        }
    }
    best
}

fn separated_formula(space: &MetricSpace, subset: &[usize], f0: &[f64], c: f64, gap: f64, alpha: f64) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            subset
                .iter()
                .zip(f0)
                .map(|(&z, &v)| v + 2.0 * c * gap_profile(space.d(x, z), gap, alpha))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Little-Lipschitz extension from a subset whose distinct points are more
/// than `gap` apart:
/// `g(x) = min_z [f0(z) + 2C (d(x, z)^alpha - gap^alpha / 2)^+]`.
///
/// The formula needs `f0 >= 0`; signed data is split as `f0 = f0⁺ - f0⁻` and
/// the two extensions subtracted.
pub fn littlelip_extend_separated(
    space: &MetricSpace,
    subset: &[usize],
    f0: &[f64],
    alpha: f64,
    c: f64,
    gap: f64,
) -> Result<ScalarField, ExtensionError> {
    check_alpha(alpha)?;
    if alpha >= 1.0 {
        return Err(ExtensionError::ExponentNotBelowOne(alpha));
    }
    check_subset(space, subset, f0)?;
    check_constant(c)?;
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(ExtensionError::InvalidGap(gap));
    }
    if let Some((a, b, distance)) = closest_pair(space, subset) {
        if distance <= gap {
            return Err(ExtensionError::GapViolation { a, b, distance, gap });
        }
    }
    check_subset_lipschitz(space, subset, f0, c, alpha)?;

    let mut g = if f0.iter().all(|&v| v >= 0.0) {
        separated_formula(space, subset, f0, c, gap, alpha)
    } else {
        let pos: Vec<f64> = f0.iter().map(|v| v.max(0.0)).collect();
        let neg: Vec<f64> = f0.iter().map(|v| (-v).max(0.0)).collect();
        let gp = separated_formula(space, subset, &pos, c, gap, alpha);
        let gn = separated_formula(space, subset, &neg, c, gap, alpha);
        gp.iter().zip(&gn).map(|(a, b)| a - b).collect()
    };
    pin(&mut g, subset, f0);
    Ok(ScalarField::from_vec_unchecked(g))
}

fn closest_pair(space: &MetricSpace, subset: &[usize]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 0..subset.len() {
        for b in (a + 1)..subset.len() {
            let d = space.d(subset[a], subset[b]);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((subset[a], subset[b], d));
            }
        }
    }
    best
}

/// The bump `h(t) = (1 - (2 t^alpha - 1)^+)^+`: `h(0) = 1` and `h(t) = 0` for
/// `t >= 1`.
#[inline]
pub fn bump(t: f64, alpha: f64) -> f64 {
    (1.0 - (2.0 * t.powf(alpha) - 1.0).max(0.0)).max(0.0)
}

/// `f(x) = sum_n a_n h(2 d(x, x_n) / r_n)` for centers with
/// `d(x_m, x_n) >= r_m + r_n`.
pub fn bump_sum_extend(
    space: &MetricSpace,
    centers: &[usize],
    radii: &[f64],
    values: &[f64],
    alpha: f64,
) -> Result<ScalarField, ExtensionError> {
    check_alpha(alpha)?;
    if radii.len() != centers.len() {
        return Err(ExtensionError::ValueCount { values: radii.len(), subset: centers.len() });
    }
    if values.len() != centers.len() {
        return Err(ExtensionError::ValueCount { values: values.len(), subset: centers.len() });
    }
    for &c in centers {
        space.check_index(c)?;
    }
    if let Some(pos) = radii.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(ExtensionError::InvalidRadius(pos));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(ExtensionError::NonFiniteValue(pos));
    }
    for m in 0..centers.len() {
        for n in (m + 1)..centers.len() {
            let distance = space.d(centers[m], centers[n]);
            let required = radii[m] + radii[n];
            if distance < required {
                return Err(ExtensionError::CenterSpacing {
                    a: centers[m],
                    b: centers[n],
                    distance,
                    required,
                });
            }
        }
    }
    let mut out = vec![0.0; space.len()];
    for (x, slot) in out.iter_mut().enumerate() {
        let mut active: Option<usize> = None;
        for n in 0..centers.len() {
            let h = bump(2.0 * space.d(x, centers[n]) / radii[n], alpha);
            if h > 0.0 {
                if let Some(m) = active {
                    return Err(ExtensionError::SupportOverlap { point: x, a: centers[m], b: centers[n] });
                }
                active = Some(n);
                *slot = values[n] * h;
            }
        }
    }
    Ok(ScalarField::from_vec_unchecked(out))
}

/// Extension from a rapidly convergent sequence `d(x_(n+1), x0) <= d(x_n, x0) / 2`:
/// the limit value plus a bump sum with radii `d(x_n, x0) / 3` carrying the
/// residuals.
pub fn rapid_sequence_extend(
    space: &MetricSpace,
    seq: &[usize],
    seq_values: &[f64],
    limit: usize,
    limit_value: f64,
    alpha: f64,
) -> Result<ScalarField, ExtensionError> {
    check_alpha(alpha)?;
    space.check_index(limit)?;
    if seq_values.len() != seq.len() {
        return Err(ExtensionError::ValueCount { values: seq_values.len(), subset: seq.len() });
    }
    for &x in seq {
        space.check_index(x)?;
    }
    if !limit_value.is_finite() {
        return Err(ExtensionError::NonFiniteValue(seq.len()));
    }
    if let Some(pos) = seq_values.iter().position(|v| !v.is_finite()) {
        return Err(ExtensionError::NonFiniteValue(pos));
    }
    for step in 1..seq.len() {
        let current = space.d(seq[step - 1], limit);
        let next = space.d(seq[step], limit);
        if next > current / 2.0 {
            return Err(ExtensionError::NotRapid { step, next, current });
        }
    }
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    let mut residuals = Vec::new();
    for (&x, &v) in seq.iter().zip(seq_values) {
        if x == limit {
            if v != limit_value {
                return Err(ExtensionError::ConflictingValues { point: x, value: v, limit_value });
            }
            continue;
        }
        centers.push(x);
        radii.push(space.d(x, limit) / 3.0);
        residuals.push(v - limit_value);
    }
    let bumps = bump_sum_extend(space, &centers, &radii, &residuals, alpha)?;
    let mut g: Vec<f64> = bumps.values().iter().map(|b| limit_value + b).collect();
    pin(&mut g, seq, seq_values);
    g[limit] = limit_value;
    Ok(ScalarField::from_vec_unchecked(g))
}

/// Record emitted alongside every extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionCertificate {
    pub operator: String,
    pub constants: BTreeMap<String, f64>,
    pub restriction_max_error: f64,
    pub lip_constant_before: f64,
    pub lip_constant_after: f64,
}

impl ExtensionCertificate {
    pub fn build(
        operator: &str,
        constants: BTreeMap<String, f64>,
        space: &MetricSpace,
        subset: &[usize],
        f0: &[f64],
        extended: &ScalarField,
        alpha: f64,
    ) -> Result<Self, MetricError> {
        let restriction_max_error = subset
            .iter()
            .zip(f0)
            .map(|(&z, &v)| (extended[z] - v).abs())
            .fold(0.0, f64::max);
        Ok(ExtensionCertificate {
            operator: operator.to_string(),
            constants,
            restriction_max_error,
            lip_constant_before: subset_lip_constant(space, subset, f0, alpha),
            lip_constant_after: lip_constant(space, extended, alpha)?,
        })
    }
}
