//! The randomized invariant battery behind `verify-suite`. Every check runs on
//! its own seeded stream, so results depend only on the seed and trial count.
//!
//! The `d'` evaluator is a parameter: a deliberately wrong one must produce
//! violations.

use rand::Rng;
use serde::Serialize;

use crate::classify::{
    expansive_witness, ofarrell_decompose, separation_gap, BaseRule, FamilyGenerator, HorizonFamily,
};
use crate::derived::{
    ae_constants, build_net, dprime_closed_form, dprime_matrix_with, dprime_pair_oracle, lip_iso_certificate,
    littlelip_transfer_certificate, rho_matrix,
};
use crate::lipschitz::{
    bump_sum_extend, gap_profile_constant, lip_constant, littlelip_extend_separated, mcshane_extend,
    subset_lip_constant,
};
use crate::metric::{base_weight, MetricSpace, PointedSpace, ScalarField};
use crate::order_iso::{check_order_iso, factor_operator, random_operator};
use crate::random::{random_field, random_lipschitz_field, random_permutation, random_pointed, seeded, SeededRng};

pub type PairFn = fn(&PointedSpace, usize, usize) -> f64;

/// A plausible-looking but wrong `d'`: the affine term uses the distance of
/// the heavier point to the base.
pub fn tampered_dprime(pointed: &PointedSpace, p: usize, q: usize) -> f64 {
    if p == q {
        return 0.0;
    }
    let (xp, xq) = (pointed.to_base(p).max(1.0), pointed.to_base(q).max(1.0));
    let (large, xs, xl) = if xp <= xq { (q, xp, xq) } else { (p, xq, xp) };
    pointed.d(p, q) / xl + (1.0 / xs - 1.0 / xl) * (pointed.to_base(large) + 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub dprime: PairFn,
    /// Absolute slack on every checked inequality.
    pub tol: f64,
}

impl SuiteConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SuiteConfig { trials, seed, dprime: dprime_closed_form, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub claim: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl InvariantResult {
    fn new(name: &'static str, claim: &'static str) -> Self {
        InvariantResult { name, claim, checked: 0, violations: 0, first_violation: None }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub invariants: Vec<InvariantResult>,
    pub total_violations: usize,
    pub pass: bool,
}

pub const DEFAULT_TOL: f64 = 1e-9;

fn stream(seed: u64, index: u64) -> SeededRng {
    seeded(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index))
}

pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let checks: [fn(&SuiteConfig, &mut SeededRng) -> InvariantResult; 10] = [
        oracle_gate,
        dprime_bounds,
        scale_iso_constants,
        net_certification,
        mcshane_bounds,
        littlelip_bounds,
        bump_support,
        territory_agreement,
        operator_round_trips,
        expansive_cross_check,
    ];
    let invariants: Vec<InvariantResult> =
        checks.iter().enumerate().map(|(i, check)| check(config, &mut stream(config.seed, i as u64))).collect();
    let total_violations = invariants.iter().map(|r| r.violations).sum();
    SuiteReport { seed: config.seed, trials: config.trials, invariants, total_violations, pass: total_violations == 0 }
}

fn oracle_gate(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("dprime_oracle_gate", "closed-form d' equals the exact program optimum");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 2, 6);
        for (a, b) in p.space().pairs() {
            let fast = (cfg.dprime)(&p, a, b);
            let exact = dprime_pair_oracle(&p, a, b).unwrap_or(f64::NAN);
            r.check((fast - exact).abs() <= cfg.tol, || format!("pair ({a}, {b}): {fast} vs oracle {exact}"));
        }
    }
    r
}

fn dprime_bounds(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("dprime_bounds", "d' is a metric, d' <= 4, rho <= d' <= 3 rho, d' xi_min <= 3 d");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 1, 12);
        let dp = match dprime_matrix_with(&p, cfg.dprime) {
            Ok(dp) => dp,
            Err(e) => {
                r.check(false, || format!("not a metric: {e}"));
                continue;
            }
        };
        let rho = rho_matrix(&p);
        let xi = base_weight(&p);
        for (a, b) in p.space().pairs() {
            let v = dp.d(a, b);
            let small = xi[a].min(xi[b]);
            let ok = v <= 4.0 + cfg.tol
                && rho[a][b] <= v + cfg.tol
                && v <= 3.0 * rho[a][b] + cfg.tol
                && v * small <= 3.0 * p.d(a, b) + cfg.tol;
            r.check(ok, || format!("pair ({a}, {b}): d' = {v}, rho = {}", rho[a][b]));
        }
    }
    r
}

fn scale_iso_constants(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("scale_iso_constants", "f -> f/xi forward and inverse seminorm bounds");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 1, 10);
        let f = random_lipschitz_field(rng, p.space());
        let cert = dprime_matrix_with(&p, cfg.dprime)
            .map_err(|e| e.to_string())
            .and_then(|dp| lip_iso_certificate(&p, &dp, &f).map_err(|e| e.to_string()));
        match cert {
            Ok(c) => r.check(c.forward_holds && c.inverse_holds, || format!("{c:?}")),
            Err(e) => r.check(false, || e),
        }
    }
    r
}

/// A sample of a random built-in family at a random horizon.
pub fn random_family_sample<R: Rng>(rng: &mut R) -> PointedSpace {
    loop {
        let generator = match rng.random_range(0..4) {
            0 => FamilyGenerator::Geometric { b: rng.random_range(1.3..3.0) },
            1 => FamilyGenerator::Doubled { b: rng.random_range(1.5..3.0) },
            2 => FamilyGenerator::Arithmetic { a: rng.random_range(0.2..3.0) },
            _ => FamilyGenerator::Harmonic,
        };
        let base = if rng.random_bool(0.5) { BaseRule::First } else { BaseRule::Origin };
        let family = HorizonFamily::new(generator, base);
        if let Ok(p) = family.sample(rng.random_range(2..=10)) {
            return p;
        }
    }
}

fn net_certification(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("net_certification", "net packing, weight comparability, separation, ratio bounds, modulus transfer");
    for _ in 0..cfg.trials.min(200) {
        let p = random_family_sample(rng);
        let outcome = ae_constants(&p, 8).and_then(|a| build_net(&p, &a)).and_then(|net| {
            let f = ScalarField::on(p.space(), (0..p.len()).map(|x| p.to_base(x).min(10.0)).collect())?;
            let delta = rng.random_range(0.21..1.5);
            littlelip_transfer_certificate(&p, &net, &f, delta).map(|t| (net, t))
        });
        match outcome {
            Ok((net, t)) => r.check(!net.k_substituted && t.holds, || format!("K substituted or transfer fails: {t:?}")),
            Err(e) => r.check(false, || e.to_string()),
        }
    }
    r
}

fn random_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let k = rng.random_range(1..=n);
    let mut perm = random_permutation(rng, n);
    perm.truncate(k);
    perm
}

fn mcshane_bounds(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("mcshane_extension", "restriction is exact and L(g) <= K");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 1, 12);
        let space = p.space();
        let alpha = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.1..1.0) };
        let subset = random_subset(rng, space.len());
        let full = random_lipschitz_field(rng, space);
        let f0: Vec<f64> = subset.iter().map(|&z| full[z]).collect();
        let k = subset_lip_constant(space, &subset, &f0, alpha) * rng.random_range(1.0..2.0);
        match mcshane_extend(space, &subset, &f0, k, alpha) {
            Ok(g) => {
                let exact = subset.iter().zip(&f0).all(|(&z, v)| g[z].to_bits() == v.to_bits());
                let lip = lip_constant(space, &g, alpha).unwrap_or(f64::INFINITY);
                r.check(exact && lip <= k + cfg.tol, || format!("exact = {exact}, L(g) = {lip}, K = {k}"));
            }
            Err(e) => r.check(false, || e.to_string()),
        }
    }
    r
}

/// Separated subset with a gap certificate strictly below its closest pair.
pub fn separated_instance<R: Rng>(rng: &mut R) -> (MetricSpace, Vec<usize>, Vec<f64>, f64, f64, f64) {
    let p = random_pointed(rng, 1, 12);
    let space = p.space().clone();
    let subset = random_subset(rng, space.len());
    let mut closest = f64::INFINITY;
    for a in 0..subset.len() {
        for b in (a + 1)..subset.len() {
            closest = closest.min(space.d(subset[a], subset[b]));
        }
    }
    let gap = if closest.is_finite() { closest * rng.random_range(0.2..0.99) } else { rng.random_range(0.1..2.0) };
    let alpha = rng.random_range(0.1..0.95);
    let f0 = random_field(rng, subset.len(), 5.0).into_values();
    let f0 = if rng.random_bool(0.5) { f0.iter().map(|v| v.abs()).collect() } else { f0 };
    let c = subset_lip_constant(&space, &subset, &f0, alpha).max(rng.random_range(0.0..1.0)) * rng.random_range(1.0..1.5);
    (space, subset, f0, alpha, c, gap)
}

fn littlelip_bounds(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("littlelip_extension", "restriction is exact and L_alpha(g) <= 2 C L_h + C");
    for _ in 0..cfg.trials {
        let (space, subset, f0, alpha, c, gap) = separated_instance(rng);
        match littlelip_extend_separated(&space, &subset, &f0, alpha, c, gap) {
            Ok(g) => {
                let exact = subset.iter().zip(&f0).all(|(&z, v)| g[z].to_bits() == v.to_bits());
                let lh = gap_profile_constant(&space, &subset, gap, alpha);
                let lip = lip_constant(&space, &g, alpha).unwrap_or(f64::INFINITY);
                let bound = 2.0 * c * lh + c;
                r.check(exact && lip <= bound + cfg.tol, || format!("exact = {exact}, L(g) = {lip}, bound = {bound}"));
            }
            Err(e) => r.check(false, || e.to_string()),
        }
    }
    r
}

fn bump_support(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("bump_single_support", "at most one bump is active at every point");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 1, 12);
        let space = p.space();
        let centers = random_subset(rng, space.len());
        // radii small enough that d(x_m, x_n) >= r_m + r_n
        let radii: Vec<f64> = centers
            .iter()
            .map(|&c| {
                let nearest = centers.iter().filter(|&&o| o != c).map(|&o| space.d(c, o)).fold(f64::INFINITY, f64::min);
                let cap = if nearest.is_finite() { nearest / 2.0 } else { 5.0 };
                cap * rng.random_range(0.3..=1.0)
            })
            .collect();
        let values = random_field(rng, centers.len(), 4.0).into_values();
        let alpha = rng.random_range(0.1..=1.0);
        match bump_sum_extend(space, &centers, &radii, &values, alpha) {
            Ok(f) => {
                let exact = centers.iter().zip(&values).all(|(&c, &v)| f[c] == v);
                r.check(exact, || "bump sum misses a prescribed value".into());
            }
            Err(e) => r.check(false, || e.to_string()),
        }
    }
    r
}

fn union_find_components(space: &MetricSpace, eps: f64) -> Vec<usize> {
    let n = space.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in space.pairs() {
        if space.d(a, b) <= eps {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).map(|x| root(&mut parent, x)).collect()
}

fn territory_agreement(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("territory_agreement", "BFS territories equal union-find components");
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 1, 40);
        let space = p.space();
        let eps = rng.random_range(0.05..3.0);
        let Ok(t) = ofarrell_decompose(space, eps) else {
            r.check(false, || "decomposition failed".into());
            continue;
        };
        let roots = union_find_components(space, eps);
        let ok = space.pairs().all(|(a, b)| (t.component_of[a] == t.component_of[b]) == (roots[a] == roots[b]));
        r.check(ok, || format!("partitions differ at eps = {eps}"));
    }
    r
}

fn operator_round_trips(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new("operator_round_trips", "apply/invert, factor/apply, and order biconditional");
    let grid: Vec<f64> = (-6..=6).map(|i| i as f64 * 0.5).collect();
    for _ in 0..cfg.trials {
        let n = rng.random_range(1..=6);
        let op = random_operator(rng, n, Some(&grid));
        let f = random_field(rng, n, 6.0).into_values();
        let back = op.invert().apply_values(&op.apply_values(&f).expect("aligned")).expect("aligned");
        let inverse_ok = f.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));

        let labels = MetricSpace::from_reals(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).expect("distinct reals");
        let mut oracle = |v: &[f64]| op.apply_values(v).map_err(|e| e.to_string());
        let factor_ok = match factor_operator(&mut oracle, &labels, &labels, &grid) {
            Ok(rec) => {
                rec.phi() == op.phi()
                    && rec.maps().iter().zip(op.maps()).all(|(a, b)| {
                        grid.iter().all(|&t| (a.eval(t) - b.eval(t)).abs() <= cfg.tol * (1.0 + b.eval(t).abs()))
                    })
            }
            Err(_) => false,
        };
        let seed = rng.random();
        let order_ok = check_order_iso(&mut oracle, n, 20, seed).map(|v| v.pass).unwrap_or(false);
        r.check(inverse_ok && factor_ok && order_ok, || {
            format!("inverse {inverse_ok}, factor {factor_ok}, order {order_ok}")
        });
    }
    r
}

fn expansive_cross_check(cfg: &SuiteConfig, rng: &mut SeededRng) -> InvariantResult {
    let mut r = InvariantResult::new(
        "expansive_cross_check",
        "gap(d') >= min(c, c r) and d(p,q) >= gap(d') d(p,e) / 3",
    );
    for _ in 0..cfg.trials {
        let p = random_pointed(rng, 2, 12);
        let Ok(dp) = dprime_matrix_with(&p, cfg.dprime) else {
            r.check(false, || "d' is not a metric".into());
            continue;
        };
        let c = expansive_witness(&p, 0.0).witness.expect("two or more points");
        let r_star = (0..p.len()).filter(|&x| x != p.base()).map(|x| p.to_base(x)).fold(f64::INFINITY, f64::min);
        let gap = separation_gap(&dp);
        let forward = gap >= c.min(c * r_star) - cfg.tol;
        let converse = (0..p.len())
            .all(|a| (0..p.len()).filter(|&b| b != a).all(|b| p.d(a, b) >= gap / 3.0 * p.to_base(a) - cfg.tol));
        r.check(forward && converse, || format!("gap {gap}, c {c}, r {r_star}"));
    }
    r
}
