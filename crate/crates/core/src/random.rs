//! Seeded generators for random test instances: metrics, pointed spaces,
//! fields and monotone maps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::{index_labels, MetricSpace, PointedSpace, ScalarField};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric matrix with off-diagonal entries uniform in `[lo, hi)`,
/// repaired into a metric by all-pairs shortest paths.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> MetricSpace {
    assert!(n >= 1 && lo > 0.0 && hi > lo);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(lo..hi);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = d[i * n + j].min(d[j * n + i]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    MetricSpace::from_parts_unchecked(index_labels(n), d)
}

/// Random points in `[0, side)^dim` with the Euclidean metric. Coincident
/// draws are nudged apart.
pub fn random_euclidean<R: Rng>(rng: &mut R, n: usize, dim: usize, side: f64) -> MetricSpace {
    loop {
        let coords: Vec<Vec<f64>> =
            (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..side)).collect()).collect();
        if let Ok(space) = MetricSpace::from_coordinates(index_labels(n), &coords) {
            return space;
        }
    }
}

/// A random metric of a random shape (matrix-repair or Euclidean) with a
/// random base point. Distance scales straddle 1 so the base weight varies.
pub fn random_pointed<R: Rng>(rng: &mut R, min_n: usize, max_n: usize) -> PointedSpace {
    let n = rng.random_range(min_n..=max_n);
    let space = match rng.random_range(0..3) {
        0 => random_metric(rng, n, 0.05, 10.0),
        1 => random_metric(rng, n, 0.5, 3.0),
        _ => {
            let side = [2.0, 10.0, 50.0][rng.random_range(0..3)];
            let dim = rng.random_range(1..=3);
            random_euclidean(rng, n, dim, side)
        }
    };
    let base = rng.random_range(0..n);
    PointedSpace::new(space, base).expect("base index in range")
}

pub fn random_field<R: Rng>(rng: &mut R, n: usize, scale: f64) -> ScalarField {
    ScalarField::from_vec_unchecked((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

/// A random Lipschitz function: a combination of distance functions.
pub fn random_lipschitz_field<R: Rng>(rng: &mut R, space: &MetricSpace) -> ScalarField {
    let n = space.len();
    let terms = rng.random_range(1..=3);
    let mut values = vec![rng.random_range(-5.0..5.0); n];
    for _ in 0..terms {
        let center = rng.random_range(0..n);
        let weight = rng.random_range(-2.0..2.0);
        for (x, v) in values.iter_mut().enumerate() {
            *v += weight * space.d(x, center);
        }
    }
    ScalarField::from_vec_unchecked(values)
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Strictly increasing sequence of `m` values starting near `start`.
pub fn increasing<R: Rng>(rng: &mut R, m: usize, start: f64, max_step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m);
    let mut x = start;
    for _ in 0..m {
        out.push(x);
        x += rng.random_range(0.05..max_step);
    }
    out
}
