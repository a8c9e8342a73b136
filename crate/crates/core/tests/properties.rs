use proptest::prelude::*;
use rand::Rng;

use lipiso_core::classify::{almost_expansive_witness, ofarrell_decompose, x_epsilon};
use lipiso_core::derived::{scale_iso_lip, transport_certificate, distortion_constant, Direction, DistortionMode};
use lipiso_core::lipschitz::{bump_sum_extend, littlelip_extend_separated, mcshane_extend, rapid_sequence_extend};
use lipiso_core::metric::{
    base_weight, holder_transform, revalidate, truncate_metric, validate_metric, MetricSpace, PointedSpace,
    ScalarField,
};
use lipiso_core::order_iso::{random_operator, truncation_clauses_hold, truncation_witness};
use lipiso_core::random::{random_field, random_metric, random_permutation, random_pointed, seeded};

fn le(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn transforms_stay_metrics(seed in any::<u64>(), n in 1usize..10, alpha in 0.05f64..=1.0) {
        let mut rng = seeded(seed);
        let m = random_metric(&mut rng, n, 0.01, 20.0);
        let h = holder_transform(&m, alpha).unwrap();
        prop_assert!(revalidate(&h).is_ok());
        prop_assert!(validate_metric(&h.rows()).is_ok());
        prop_assert!(validate_metric(&truncate_metric(&m).rows()).is_ok());
    }

    #[test]
    fn holder_exponents_compose(seed in any::<u64>(), n in 1usize..8, a in 0.05f64..=1.0, b in 0.05f64..=1.0) {
        let mut rng = seeded(seed);
        let m = random_metric(&mut rng, n, 0.01, 20.0);
        let twice = holder_transform(&holder_transform(&m, a).unwrap(), b).unwrap();
        let once = holder_transform(&m, a * b).unwrap();
        for (i, j) in m.pairs() {
            prop_assert!((twice.d(i, j) - once.d(i, j)).abs() <= 1e-12 * (1.0 + once.d(i, j)));
        }
    }

    #[test]
    fn base_weight_is_one_lipschitz(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 1, 12);
        let xi = base_weight(&p);
        for (a, b) in p.space().pairs() {
            prop_assert!((xi[a] - xi[b]).abs() <= p.d(a, b) + 1e-12);
        }
    }

    #[test]
    fn single_point_extensions_are_monotone_in_the_value(
        seed in any::<u64>(),
        v in -5.0f64..5.0,
        raise in 0.0f64..3.0,
        alpha in 0.1f64..0.99,
    ) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 2, 10);
        let space = p.space();
        let z = rng.random_range(0..space.len());
        let (lo, hi) = ([v], [v + raise]);
        let radius = rng.random_range(0.1..3.0);
        let runs: [&dyn Fn(&[f64]) -> ScalarField; 3] = [
            &|f0| mcshane_extend(space, &[z], f0, 1.5, alpha).unwrap(),
            &|f0| littlelip_extend_separated(space, &[z], f0, alpha, 1.0, 0.5).unwrap(),
            &|f0| bump_sum_extend(space, &[z], &[radius], f0, alpha).unwrap(),
        ];
        for run in runs {
            prop_assert!(le(run(&lo).values(), run(&hi).values()));
        }
        let limit = (z + 1) % space.len();
        let a = rapid_sequence_extend(space, &[z], &lo, limit, 0.0, alpha).unwrap();
        let b = rapid_sequence_extend(space, &[z], &hi, limit, 0.0, alpha).unwrap();
        prop_assert!(le(a.values(), b.values()));
    }

    #[test]
    fn scale_iso_round_trips_and_preserves_order(seed in any::<u64>(), shift in 0.0f64..2.0) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 1, 10);
        let f = random_field(&mut rng, p.len(), 10.0);
        let bumps = random_field(&mut rng, p.len(), 1.0);
        let g = f.zip_map(&bumps, |v, u| v + shift * u.abs());
        let fwd = scale_iso_lip(&p, &f, Direction::Forward).unwrap();
        let back = scale_iso_lip(&p, &fwd, Direction::Inverse).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        let gf = scale_iso_lip(&p, &g, Direction::Forward).unwrap();
        prop_assert!(le(fwd.values(), gf.values()));
        let inv_f = scale_iso_lip(&p, &f, Direction::Inverse).unwrap();
        let inv_g = scale_iso_lip(&p, &g, Direction::Inverse).unwrap();
        prop_assert!(le(inv_f.values(), inv_g.values()));
    }

    #[test]
    fn x_epsilon_is_antitone(seed in any::<u64>(), e1 in 0.01f64..5.0, e2 in 0.01f64..5.0) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 1, 15);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let wide = x_epsilon(p.space(), small).unwrap();
        let narrow = x_epsilon(p.space(), large).unwrap();
        prop_assert!(narrow.iter().all(|x| wide.contains(x)));
    }

    #[test]
    fn almost_expansive_witness_is_antitone(seed in any::<u64>(), e1 in 0.01f64..5.0, e2 in 0.01f64..5.0) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 1, 12);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let ws = almost_expansive_witness(&p, small).unwrap().witness.unwrap();
        let wl = almost_expansive_witness(&p, large).unwrap().witness.unwrap();
        prop_assert!(wl <= ws);
    }

    #[test]
    fn territories_refine_as_epsilon_shrinks(seed in any::<u64>(), e1 in 0.01f64..5.0, e2 in 0.01f64..5.0) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 1, 25);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let fine = ofarrell_decompose(p.space(), small).unwrap();
        let coarse = ofarrell_decompose(p.space(), large).unwrap();
        for (a, b) in p.space().pairs() {
            if fine.component_of[a] == fine.component_of[b] {
                prop_assert_eq!(coarse.component_of[a], coarse.component_of[b]);
            }
        }
        prop_assert!(fine.component_count >= coarse.component_count);
    }

    #[test]
    fn operator_inverse_is_an_involution(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = seeded(seed);
        let op = random_operator(&mut rng, n, None);
        let f = random_field(&mut rng, n, 8.0).into_values();
        let twice = op.invert().invert();
        let (a, b) = (op.apply_values(&f).unwrap(), twice.apply_values(&f).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let back = op.apply_values(&op.invert().apply_values(&f).unwrap()).unwrap();
        for (x, y) in f.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn truncation_satisfies_every_clause(
        values in prop::collection::vec(-10.0f64..10.0, 1..12),
        mut bands in prop::array::uniform4(-8.0f64..8.0),
    ) {
        bands.sort_by(f64::total_cmp);
        let [a, b, c, d] = bands;
        prop_assume!(a < d);
        let f = ScalarField::new(values).unwrap();
        let g = truncation_witness(&f, a, b, c, d).unwrap();
        prop_assert!(truncation_clauses_hold(&f, &g, a, b, c, d));
    }

    #[test]
    fn transport_certificate_holds_for_random_bijections(seed in any::<u64>(), alpha in 0.2f64..=1.0) {
        let mut rng = seeded(seed);
        let p = random_pointed(&mut rng, 2, 8);
        let n = p.len();
        let q = PointedSpace::new(random_metric(&mut rng, n, 0.3, 6.0), rng.random_range(0..n)).unwrap();
        let phi = random_permutation(&mut rng, n);
        let f = random_field(&mut rng, n, 5.0);
        let c = distortion_constant(&p, &q, &phi, DistortionMode::RhoAlpha(alpha)).unwrap();
        let cert = transport_certificate(&p, &q, &phi, &f, alpha, c).unwrap();
        prop_assert!(cert.holds, "{:?}", cert.pairs.iter().find(|t| !t.holds));
    }
}

#[test]
fn many_random_metrics_survive_both_transforms() {
    let mut rng = seeded(99);
    for _ in 0..1000 {
        let n = rng.random_range(1..12);
        let m = random_metric(&mut rng, n, 0.001, 50.0);
        let alpha = rng.random_range(0.01..=1.0);
        assert!(revalidate(&holder_transform(&m, alpha).unwrap()).is_ok());
        assert!(revalidate(&truncate_metric(&m)).is_ok());
    }
}

#[test]
fn line_example_for_the_metric_transforms() {
    let m = MetricSpace::from_reals(&[0.0, 4.0, 9.0]).unwrap();
    let h = holder_transform(&m, 0.5).unwrap();
    assert_eq!(h.d(0, 1), 2.0);
    assert_eq!(h.d(0, 2), 3.0);
    assert_eq!(truncate_metric(&m).d(1, 2), 1.0);
}
