//! Finite metric spaces, pointed spaces and scalar fields, together with the
//! elementary metric transforms the rest of the crate is built on.
//!
//! Every space is finite and carries the discrete topology: all points are
//! isolated and every subset is open.

use std::collections::HashSet;

use thiserror::Error;

/// Relative tolerance for the triangle inequality.
pub const TRIANGLE_REL_TOL: f64 = 1e-9;
/// Absolute floor for the triangle tolerance, so that tiny distances are not
/// judged more harshly than rounding allows.
pub const TRIANGLE_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("empty space: at least one point is required")]
    Empty,
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({i}, {j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("negative entry at ({i}, {j}): {value}")]
    Negative { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry at ({i}, {i}): {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("asymmetric entries at ({i}, {j}): {forward} vs {backward}")]
    Asymmetric { i: usize, j: usize, forward: f64, backward: f64 },
    #[error("zero distance between distinct points {i} and {j}")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality violated at ({i}, {j}, {via}): d({i},{j}) = {direct} > {detour} = d({i},{via}) + d({via},{j})")]
    Triangle { i: usize, j: usize, via: usize, direct: f64, detour: f64 },
    #[error("{labels} labels given for a {size}x{size} matrix")]
    LabelCount { labels: usize, size: usize },
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("Hölder exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),
    #[error("point index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("annulus radii must satisfy 0 <= r1 < r2, got r1 = {r1}, r2 = {r2}")]
    AnnulusRadii { r1: f64, r2: f64 },
    #[error("field has {got} values but the space has {expected} points")]
    FieldLength { got: usize, expected: usize },
    #[error("field value at position {0} is not finite")]
    FieldNonFinite(usize),
}

impl MetricError {
    /// Short stable name of the violated axiom, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            MetricError::Empty => "empty",
            MetricError::NotSquare { .. } => "non_square",
            MetricError::NonFinite { .. } => "non_finite",
            MetricError::Negative { .. } => "negative_entry",
            MetricError::NonzeroDiagonal { .. } => "nonzero_diagonal",
            MetricError::Asymmetric { .. } => "asymmetry",
            MetricError::ZeroOffDiagonal { .. } => "zero_off_diagonal",
            MetricError::Triangle { .. } => "triangle",
            MetricError::LabelCount { .. } => "label_count",
            MetricError::DuplicateLabel(_) => "duplicate_label",
            MetricError::InvalidExponent(_) => "invalid_exponent",
            MetricError::IndexOutOfRange { .. } => "index_out_of_range",
            MetricError::AnnulusRadii { .. } => "annulus_radii",
            MetricError::FieldLength { .. } => "field_length",
            MetricError::FieldNonFinite(_) => "field_non_finite",
        }
    }
}

/// `a <= b` up to the triangle tolerance.
#[inline]
pub fn within_triangle_tol(a: f64, b: f64) -> bool {
    a <= b + (TRIANGLE_REL_TOL * b.abs()).max(TRIANGLE_ABS_TOL)
}

/// A finite metric space: labelled points and a symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    labels: Vec<String>,
    n: usize,
    dist: Vec<f64>,
}

impl MetricSpace {
    /// Validates `rows` against the metric axioms and attaches `labels`.
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = check_square(rows)?;
        if labels.len() != n {
            return Err(MetricError::LabelCount { labels: labels.len(), size: n });
        }
        let mut seen = HashSet::with_capacity(n);
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(MetricError::DuplicateLabel(label.clone()));
            }
        }
        let dist: Vec<f64> = rows.iter().flatten().copied().collect();
        check_axioms(n, &dist)?;
        Ok(MetricSpace { labels, n, dist })
    }

    /// Builds a space from distances already known to be a metric.
    pub(crate) fn from_parts_unchecked(labels: Vec<String>, dist: Vec<f64>) -> Self {
        let n = labels.len();
        debug_assert_eq!(dist.len(), n * n);
        MetricSpace { labels, n, dist }
    }

    /// Points on the real line with the absolute-difference metric.
    pub fn from_reals(points: &[f64]) -> Result<Self, MetricError> {
        let labels = points.iter().map(|x| format_label(*x)).collect::<Vec<_>>();
        let labels = if labels.iter().collect::<HashSet<_>>().len() == labels.len() {
            labels
        } else {
            index_labels(points.len())
        };
        Self::from_coordinates(labels, &points.iter().map(|x| vec![*x]).collect::<Vec<_>>())
    }

    /// Euclidean distances between coordinate vectors.
    pub fn from_coordinates(labels: Vec<String>, coords: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = coords.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&coords[i], &coords[j]);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        Self::new(labels, &rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn check_index(&self, index: usize) -> Result<(), MetricError> {
        if index < self.n {
            Ok(())
        } else {
            Err(MetricError::IndexOutOfRange { index, n: self.n })
        }
    }

    /// Unordered pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
    }

    /// Largest pairwise distance (0 for a single point).
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Same labels, new distances produced entrywise by `map`.
    pub(crate) fn map_entries(&self, map: impl Fn(f64) -> f64) -> MetricSpace {
        let dist = self.dist.iter().map(|&d| if d == 0.0 { 0.0 } else { map(d) }).collect();
        MetricSpace::from_parts_unchecked(self.labels.clone(), dist)
    }
}

fn check_square(rows: &[Vec<f64>]) -> Result<usize, MetricError> {
    let n = rows.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
        }
    }
    Ok(n)
}

fn check_axioms(n: usize, dist: &[f64]) -> Result<(), MetricError> {
    let d = |i: usize, j: usize| dist[i * n + j];
    for i in 0..n {
        for j in 0..n {
            let value = d(i, j);
            if !value.is_finite() {
                return Err(MetricError::NonFinite { i, j });
            }
            if value < 0.0 {
                return Err(MetricError::Negative { i, j, value });
            }
        }
    }
    for i in 0..n {
        if d(i, i) != 0.0 {
            return Err(MetricError::NonzeroDiagonal { i, value: d(i, i) });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if d(i, j) != d(j, i) {
                return Err(MetricError::Asymmetric { i, j, forward: d(i, j), backward: d(j, i) });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if d(i, j) == 0.0 {
                return Err(MetricError::ZeroOffDiagonal { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for via in 0..n {
                if via == i || via == j {
                    continue;
                }
                let detour = d(i, via) + d(via, j);
                if !within_triangle_tol(d(i, j), detour) {
                    return Err(MetricError::Triangle { i, j, via, direct: d(i, j), detour });
                }
            }
        }
    }
    Ok(())
}

/// Checks every metric axiom on a raw square matrix. Points are labelled by
/// their index.
pub fn validate_metric(rows: &[Vec<f64>]) -> Result<MetricSpace, MetricError> {
    let n = check_square(rows)?;
    MetricSpace::new(index_labels(n), rows)
}

/// Re-checks an existing space (used on transform outputs).
pub fn revalidate(space: &MetricSpace) -> Result<(), MetricError> {
    check_axioms(space.n, &space.dist)
}

pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn format_label(x: f64) -> String {
    format!("{x}")
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_exponent(alpha: f64) -> Result<(), MetricError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(MetricError::InvalidExponent(alpha))
    }
}

/// The snowflaked metric `d^alpha`, `0 < alpha <= 1`. Subadditivity of
/// `t -> t^alpha` keeps the triangle inequality intact.
pub fn holder_transform(space: &MetricSpace, alpha: f64) -> Result<MetricSpace, MetricError> {
    check_exponent(alpha)?;
    if alpha == 1.0 {
        return Ok(space.clone());
    }
    Ok(space.map_entries(|d| d.powf(alpha)))
}

/// The truncated metric `min(d, 1)`.
pub fn truncate_metric(space: &MetricSpace) -> MetricSpace {
    space.map_entries(|d| d.min(1.0))
}

/// A metric space with a distinguished base point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointedSpace {
    space: MetricSpace,
    base: usize,
}

impl PointedSpace {
    pub fn new(space: MetricSpace, base: usize) -> Result<Self, MetricError> {
        space.check_index(base)?;
        Ok(PointedSpace { space, base })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.space.d(i, j)
    }

    /// Distance from `i` to the base point.
    #[inline]
    pub fn to_base(&self, i: usize) -> f64 {
        self.space.d(i, self.base)
    }

    pub fn with_space(&self, space: MetricSpace) -> PointedSpace {
        assert_eq!(space.len(), self.space.len());
        PointedSpace { space, base: self.base }
    }
}

/// A real-valued function on the points of a space, in point order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self, MetricError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MetricError::FieldNonFinite(pos));
        }
        Ok(ScalarField(values))
    }

    /// Checks finiteness and alignment with `space`.
    pub fn on(space: &MetricSpace, values: Vec<f64>) -> Result<Self, MetricError> {
        if values.len() != space.len() {
            return Err(MetricError::FieldLength { got: values.len(), expected: space.len() });
        }
        Self::new(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        ScalarField(vec![value; n])
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_aligned(&self, space: &MetricSpace) -> Result<(), MetricError> {
        if self.0.len() == space.len() {
            Ok(())
        } else {
            Err(MetricError::FieldLength { got: self.0.len(), expected: space.len() })
        }
    }

    /// Pointwise `f <= g`.
    pub fn le(&self, other: &ScalarField) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField(self.0.iter().map(|a| f(*a)).collect())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The base weight `xi(x) = max(d(x, e), 1)`.
pub fn base_weight(pointed: &PointedSpace) -> ScalarField {
    ScalarField((0..pointed.len()).map(|i| pointed.to_base(i).max(1.0)).collect())
}

/// Indices `z` with `r1 < d(z, center) < r2`, both bounds strict.
pub fn annulus_indices(
    space: &MetricSpace,
    center: usize,
    r1: f64,
    r2: f64,
) -> Result<Vec<usize>, MetricError> {
    space.check_index(center)?;
    if !(r1 >= 0.0 && r1 < r2) {
        return Err(MetricError::AnnulusRadii { r1, r2 });
    }
    Ok((0..space.len())
        .filter(|&z| {
            let d = space.d(z, center);
            r1 < d && d < r2
        })
        .collect())
}
