//! Exact maximization of tiny linear programs by vertex enumeration.
//!
//! Only meant for a handful of variables and constraints: every choice of
//! `k` tight constraints is solved as a `k x k` system and the best feasible
//! solution kept.

/// `maximize objective . x` subject to `row . x <= bound` for every row.
#[derive(Debug, Clone)]
pub struct SmallLp {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, f64)>,
}

const FEASIBILITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

impl SmallLp {
    pub fn new(objective: Vec<f64>) -> Self {
        SmallLp { objective, rows: Vec::new() }
    }

    pub fn constrain(&mut self, row: Vec<f64>, bound: f64) {
        assert_eq!(row.len(), self.objective.len());
        self.rows.push((row, bound));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn feasible(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|(row, b)| {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            lhs <= b + FEASIBILITY_TOL * (1.0 + b.abs())
        })
    }

    /// Best vertex `(value, point)`, or `None` if no vertex exists (empty or
    /// vertex-free region). Callers must ensure the region is bounded.
    pub fn maximize(&self) -> Option<(f64, Vec<f64>)> {
        let k = self.num_vars();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut chosen = Vec::with_capacity(k);
        self.enumerate(0, k, &mut chosen, &mut best);
        best
    }

    fn enumerate(
        &self,
        start: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        if chosen.len() == k {
            let a: Vec<Vec<f64>> = chosen.iter().map(|&i| self.rows[i].0.clone()).collect();
            let b: Vec<f64> = chosen.iter().map(|&i| self.rows[i].1).collect();
            if let Some(x) = solve(a, b) {
                if self.feasible(&x) {
                    let value: f64 = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    if best.as_ref().is_none_or(|(v, _)| value > *v) {
                        *best = Some((value, x));
                    }
                }
            }
            return;
        }
        for i in start..self.rows.len() {
            chosen.push(i);
            self.enumerate(i + 1, k, chosen, best);
            chosen.pop();
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..k {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..k {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = ((row + 1)..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
