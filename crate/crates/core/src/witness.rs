//! Exact searches for the least witness constant `C >= 1` in conditions of the
//! form "if `d(p,e) >= C` and `d(p,q) < d(p,e)/C` then `d(p,q)` is small".
//!
//! A pair `(p, q)` whose distance is not small ("bad") is harmless exactly
//! when `C > d(p,e)` or `C >= d(p,e)/d(p,q)`, so the valid constants form an
//! up-set whose infimum is the largest per-pair threshold. Only the finitely
//! many critical values `{1} ∪ {d(p,e)} ∪ {d(p,e)/d(p,q)}` are inspected.

use serde::Serialize;

use crate::metric::PointedSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalInfimum {
    /// Infimum of the valid constants.
    pub value: f64,
    /// Whether `value` itself is valid.
    pub attained: bool,
    /// Whether every valid constant exceeds all distances to the base, so the
    /// hypothesis `d(p,e) >= C` never fires.
    pub vacuous: bool,
    /// The ordered pair whose threshold sets the infimum.
    pub binding_pair: Option<(usize, usize)>,
}

impl CriticalInfimum {
    /// A concrete valid constant: the infimum when attained, otherwise a value
    /// just above it.
    pub fn representative(&self) -> f64 {
        if self.attained {
            self.value
        } else {
            nudge_up(self.value)
        }
    }
}

pub fn nudge_up(value: f64) -> f64 {
    value * (1.0 + 1e-12)
}

/// Least valid `C >= 1`, given which pair distances are bad.
pub fn critical_infimum(pointed: &PointedSpace, is_bad: impl Fn(f64) -> bool) -> CriticalInfimum {
    let n = pointed.len();
    let mut value = 1.0;
    let mut attained = true;
    let mut binding_pair = None;
    let mut max_to_base: f64 = 0.0;
    for p in 0..n {
        let dpe = pointed.to_base(p);
        max_to_base = max_to_base.max(dpe);
        if p == pointed.base() {
            continue;
        }
        for q in 0..n {
            if q == p {
                continue;
            }
            let dpq = pointed.d(p, q);
            if !is_bad(dpq) {
                continue;
            }
            let mut ratio = dpe / dpq;
            // the closed threshold must pass the strict test after rounding
            while dpq < dpe / ratio {
                ratio = ratio.next_up();
            }
            let (bound, closed) = if ratio <= dpe { (ratio, true) } else { (dpe, false) };
            if bound > value {
                value = bound;
                attained = closed;
                binding_pair = Some((p, q));
            } else if bound == value && !closed {
                attained = false;
                binding_pair = Some((p, q));
            }
        }
    }
    let vacuous = if attained { value > max_to_base } else { value >= max_to_base };
    CriticalInfimum { value, attained, vacuous, binding_pair }
}

/// First ordered pair violating the condition at constant `c`.
pub fn first_violation(
    pointed: &PointedSpace,
    c: f64,
    is_bad: impl Fn(f64) -> bool,
) -> Option<(usize, usize)> {
    let n = pointed.len();
    for p in 0..n {
        let dpe = pointed.to_base(p);
        if dpe < c {
            continue;
        }
        for q in 0..n {
            if q == p {
                continue;
            }
            let dpq = pointed.d(p, q);
            if dpq < dpe / c && is_bad(dpq) {
                return Some((p, q));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;

    fn line(xs: &[f64], base: usize) -> PointedSpace {
        PointedSpace::new(MetricSpace::from_reals(xs).unwrap(), base).unwrap()
    }

    #[test]
    fn two_points_need_only_one() {
        let p = line(&[0.0, 3.0], 0);
        let w = critical_infimum(&p, |_| true);
        assert_eq!(w.value, 1.0);
        assert!(w.attained);
        assert!(!w.vacuous);
        assert!(first_violation(&p, 1.0, |_| true).is_none());
    }

    #[test]
    fn open_threshold_is_not_attained() {
        // p = 10.5 is 0.5 from q = 10 and 8.5 from e = 2: ratio 17 > 8.5
        let p = line(&[2.0, 10.0, 10.5], 0);
        let w = critical_infimum(&p, |_| true);
        assert_eq!(w.value, 8.5);
        assert!(!w.attained);
        assert!(w.vacuous);
        assert!(first_violation(&p, 8.5, |_| true).is_some());
        assert!(first_violation(&p, w.representative(), |_| true).is_none());
    }
}
