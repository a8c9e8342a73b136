use rand::Rng;

use lipiso_core::io::{
    field_csv, format_f64, matrix_csv, operator_json, parse_field_csv, parse_matrix_csv, parse_operator_json,
    parse_space, space_json, to_json_string, SpaceFormat,
};
use lipiso_core::metric::{MetricSpace, PointedSpace};
use lipiso_core::order_iso::random_operator;
use lipiso_core::random::{random_field, random_pointed, seeded};
use lipiso_core::suite::{run_suite, SuiteConfig};

fn same_space(a: &MetricSpace, b: &MetricSpace) {
    assert_eq!(a.labels(), b.labels());
    for i in 0..a.len() {
        for j in 0..a.len() {
            assert!((a.d(i, j) - b.d(i, j)).abs() <= 1e-15, "({i},{j}): {} vs {}", a.d(i, j), b.d(i, j));
        }
    }
}

#[test]
fn matrix_csv_round_trips() {
    let mut rng = seeded(5);
    for _ in 0..300 {
        let p = random_pointed(&mut rng, 1, 15);
        let s = p.space();
        let back = parse_matrix_csv(&matrix_csv(s.labels(), &s.rows())).unwrap();
        same_space(s, &back);
    }
}

#[test]
fn space_json_round_trips_with_base() {
    let mut rng = seeded(6);
    for _ in 0..300 {
        let p = random_pointed(&mut rng, 1, 15);
        let back: PointedSpace = parse_space(&space_json(&p), SpaceFormat::Auto, None).unwrap();
        same_space(p.space(), back.space());
        assert_eq!(back.base(), p.base());
    }
}

#[test]
fn field_csv_round_trips() {
    let mut rng = seeded(7);
    for _ in 0..200 {
        let p = random_pointed(&mut rng, 1, 12);
        let f = random_field(&mut rng, p.len(), 1e6);
        let back = parse_field_csv(&field_csv(p.space().labels(), f.values()), p.space()).unwrap();
        assert_eq!(back.values(), f.values());
    }
}

#[test]
fn operator_json_round_trips() {
    let mut rng = seeded(8);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let space = MetricSpace::from_reals(&(0..n).map(|i| i as f64 * 1.5).collect::<Vec<_>>()).unwrap();
        let op = random_operator(&mut rng, n, None);
        let back = parse_operator_json(&operator_json(&op, &space), &space, &space).unwrap();
        assert_eq!(back, op);
    }
}

#[test]
fn seventeen_significant_digits_parse_back_exactly() {
    let mut rng = seeded(9);
    for _ in 0..10_000 {
        let v: f64 = rng.random_range(-1e6..1e6) * 10f64.powi(rng.random_range(-12..12));
        assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
    }
    assert_eq!(format_f64(0.1), "0.10000000000000001");
    assert_eq!(format_f64(2.0), "2.0");
    assert_eq!(to_json_string(&serde_json::json!({})), "{}\n");
}

#[test]
fn suite_reports_are_deterministic() {
    let a = to_json_string(&run_suite(&SuiteConfig::new(15, 3)));
    let b = to_json_string(&run_suite(&SuiteConfig::new(15, 3)));
    assert_eq!(a, b);
    let c = to_json_string(&run_suite(&SuiteConfig::new(15, 4)));
    assert_ne!(a, c);
}
