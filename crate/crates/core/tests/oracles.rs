use rand::Rng;

use lipiso_core::classify::{almost_expansive_witness, expansive_at_inf_witness, separation_gap, HorizonFamily};
use lipiso_core::derived::{ae_constants, build_net, littlelip_transfer_certificate};
use lipiso_core::metric::{PointedSpace, ScalarField};
use lipiso_core::random::{random_pointed, seeded};
use lipiso_core::suite::random_family_sample;

/// `d(p,e) >= c` and `d(p,q) < d(p,e)/c` force `d(p,q) < eps` (or `p = q`
/// when `eps` is zero).
fn valid(p: &PointedSpace, c: f64, eps: f64) -> bool {
    (0..p.len()).all(|a| {
        p.to_base(a) < c
            || (0..p.len()).filter(|&b| b != a).all(|b| p.d(a, b) >= p.to_base(a) / c || p.d(a, b) < eps)
    })
}

/// First valid constant on the grid `1, 1 + h, 1 + 2h, ...`.
fn dense_grid_search(p: &PointedSpace, eps: f64, h: f64) -> (f64, Option<f64>) {
    let top = (0..p.len()).map(|x| p.to_base(x)).fold(1.0, f64::max) + h;
    let mut prev = None;
    let mut c = 1.0;
    let mut j = 0u64;
    while c <= top + h {
        if valid(p, c, eps) {
            return (c, prev);
        }
        prev = Some(c);
        j += 1;
        c = 1.0 + j as f64 * h;
    }
    panic!("no valid constant below {top}");
}

#[test]
fn witness_searches_agree_with_a_dense_grid() {
    let mut rng = seeded(2024);
    for trial in 0..300 {
        let p = random_pointed(&mut rng, 2, 20);
        let h = separation_gap(p.space()) / 10.0;
        let eps = rng.random_range(0.05..2.0);
        for (report, eps) in [
            (expansive_at_inf_witness(&p), 0.0),
            (almost_expansive_witness(&p, eps).unwrap(), eps),
        ] {
            let w = report.witness.unwrap();
            let (grid_valid, grid_before) = dense_grid_search(&p, eps, h);
            assert!(w <= grid_valid * (1.0 + 1e-12), "trial {trial}: witness {w} above grid value {grid_valid}");
            match grid_before {
                None => assert_eq!(w, 1.0, "trial {trial}"),
                Some(b) => assert!(w >= b * (1.0 - 1e-12), "trial {trial}: witness {w} below invalid grid value {b}"),
            }
        }
    }
}

#[test]
fn geometric_witness_matches_the_closed_form() {
    for n in 2..=30 {
        let p = HorizonFamily::parse("name=geometric,b=2").unwrap().sample(n).unwrap();
        let w = expansive_at_inf_witness(&p).witness.unwrap();
        assert!((w - (2.0 - 2f64.powi(2 - n as i32))).abs() < 1e-12, "n = {n}: {w}");
        let origin = HorizonFamily::parse("name=geometric,b=2,base=origin").unwrap().sample(n).unwrap();
        assert_eq!(expansive_at_inf_witness(&origin).witness, Some(2.0));
    }
}

#[test]
fn small_scale_transfer_holds_on_families() {
    let mut rng = seeded(77);
    let mut spaces: Vec<PointedSpace> =
        (2..=14).map(|n| HorizonFamily::parse("name=geometric,b=2").unwrap().sample(n).unwrap()).collect();
    spaces.extend((0..150).map(|_| random_family_sample(&mut rng)));
    for (i, p) in spaces.iter().enumerate() {
        let net = build_net(p, &ae_constants(p, 10).unwrap()).unwrap();
        for _ in 0..3 {
            let f = ScalarField::new((0..p.len()).map(|x| (p.to_base(x) * rng.random_range(0.1..2.0)).sin()).collect()).unwrap();
            let delta = rng.random_range(0.18..1.5);
            let t = littlelip_transfer_certificate(p, &net, &f, delta).unwrap();
            assert!(t.holds, "space {i}: {t:?}");
        }
    }
}
