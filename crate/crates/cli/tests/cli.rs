use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lipiso_core::io::{parse_matrix_csv, parse_space, SpaceFormat};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipiso")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TRI: &str = ",a,b,c\na,0,1,2\nb,1,0,1\nc,2,1,0\n";
const GEO: &str = "id,x\ne,0\np1,2\np2,4\np3,8\np4,16\np5,32\n";

#[test]
fn validate_accepts_a_metric() {
    let dir = TempDir::new().unwrap();
    let tri = write(&dir, "tri.csv", TRI);
    let out = run(&["validate", "--space", s(&tri)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["valid"], Value::Bool(true));
}

#[test]
fn validate_names_the_asymmetric_cell() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", ",a,b,c\na,0,1,2\nb,1,0,1\nc,2,1.5,0\n");
    let out = run(&["validate", "--space", s(&bad)]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    assert_eq!(report["valid"], Value::Bool(false));
    assert_eq!(report["violation"], "asymmetry");
    assert!(report["message"].as_str().unwrap().contains("(1, 2)"));
}

#[test]
fn unreadable_input_and_unknown_command_exit_one() {
    assert_eq!(code(&run(&["validate", "--space", "/nonexistent/space.csv"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["territories", "--epsilon", "1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn schema_violation_exits_one() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "s.json", r#"{"labels":["a","b"],"dist":[[0,1],[1,0]],"colour":"red"}"#);
    let out = run(&["validate", "--space", s(&p)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn json_base_label_is_resolved() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "s.json", r#"{"labels":["a","e","b"],"dist":[[0,1,2],[1,0,1],[2,1,0]],"base":"e"}"#);
    let out = run(&["validate", "--space", s(&p)]);
    assert_eq!(json(&out)["base"], "e");
    let out = run(&["validate", "--space", s(&p), "--base", "b"]);
    assert_eq!(json(&out)["base"], "b");
}

#[test]
fn territories_example() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pts.csv", "id,x\na,0\nb,1\nc,2\nd,10\n");
    let out = run(&["territories", "--space", s(&p), "--epsilon", "1"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["components"], 2);
    assert_eq!(r["step_diameters"], serde_json::json!([2, 0]));
    assert_eq!(r["territories"], serde_json::json!([["a", "b", "c"], ["d"]]));
}

#[test]
fn verify_suite_passes_and_tampering_flips_exit() {
    let out = run(&["verify-suite", "--seed", "7", "--trials", "200"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(&out);
    assert_eq!(r["pass"], Value::Bool(true));
    for inv in r["invariants"].as_array().unwrap() {
        assert!(inv["checked"].as_u64().unwrap() > 0);
        assert_eq!(inv["violations"], 0);
    }
    let out = run(&["verify-suite", "--seed", "7", "--trials", "200", "--tamper"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = run(&["verify-suite", "--seed", "11", "--trials", "30"]);
    let b = run(&["verify-suite", "--seed", "11", "--trials", "30"]);
    assert_eq!(a.stdout, b.stdout);
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let a = run(&["derive", "--space", s(&p)]);
    let b = run(&["derive", "--space", s(&p)]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn derive_writes_matrices_that_round_trip() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let out_dir = dir.path().join("out");
    let out = run(&["derive", "--space", s(&p), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dprime = parse_matrix_csv(&fs::read_to_string(out_dir.join("dprime.csv")).unwrap()).unwrap();
    let inline = json(&run(&["derive", "--space", s(&p)]));
    let rows = inline["dprime"]["matrix"].as_array().unwrap();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            assert!((v.as_f64().unwrap() - dprime.d(i, j)).abs() <= 1e-15);
        }
    }
    assert_eq!(dprime.labels(), ["e", "p1", "p2", "p3", "p4", "p5"]);
    assert!(out_dir.join("rho.csv").exists());
    let cert: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["c1"], 2.0);
    assert_eq!(cert["gamma"], serde_json::json!(["p5", "p4", "p3", "p2"]));
    assert_eq!(cert["pass"], Value::Bool(true));
    assert_eq!(cert["lemma_checks"].as_array().unwrap().len(), 5);
}

#[test]
fn matrix_csv_output_reloads_exactly() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pts.csv", "id,x,y\na,0,0\nb,0.1,0.7\nc,3,1e-3\n");
    let out = run(&["derive", "--space", s(&p), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let reloaded = parse_matrix_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let original = parse_space(&fs::read_to_string(&p).unwrap(), SpaceFormat::Auto, None).unwrap();
    let dprime = lipiso_core::derived::dprime_matrix(&original).unwrap();
    for (i, j) in dprime.pairs() {
        assert!((reloaded.d(i, j) - dprime.d(i, j)).abs() <= 1e-15);
    }
}

#[test]
fn classify_family_reports_every_horizon() {
    let out = run(&["classify", "--family", "name=doubled,b=2", "--horizons", "10,20,40", "--property", "expansive_at_inf"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let reports = r.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    for (rep, n) in reports.iter().zip([10, 20, 40]) {
        assert_eq!(rep["horizon"], n);
        assert_eq!(rep["verdict"], "vacuous");
    }
}

#[test]
fn classify_space_lists_reports_in_order() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let out = run(&["classify", "--space", s(&p), "--property", "separation_gap", "--property", "ofarrell(3)"]);
    let r = json(&out);
    assert_eq!(r[0]["property"], "separation_gap");
    assert_eq!(r[0]["witness"], 0.5);
    assert_eq!(r[1]["property"], "ofarrell(3)");
    assert_eq!(r[1]["witness"], 4.0);
    let out = run(&["classify", "--space", s(&p), "--property", "ofarrell"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn family_scan_trends() {
    let out = run(&["family-scan", "--family", "name=geometric,b=2,base=origin", "--horizons", "10,20,40"]);
    let r = json(&out);
    assert_eq!(r["trend"], "stable");
    assert_eq!(r["label"], "HEURISTIC");
    for rep in r["reports"].as_array().unwrap() {
        assert_eq!(rep["witness"], 2.0);
    }
    let out = run(&["family-scan", "--family", "name=doubled,b=2", "--horizons", "10,20,40"]);
    assert_eq!(json(&out)["trend"], "diverging");
}

#[test]
fn family_from_file() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pts.txt", "0\n1, 2\n4 8\n");
    let spec = format!("name=file,path={}", s(&p));
    let out = run(&["family-scan", "--family", &spec, "--horizons", "2,5", "--property", "separation_gap"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["reports"][1]["witness"], 1.0);
}

#[test]
fn extend_mcshane_restricts_exactly() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let f = write(&dir, "f.csv", "id,value\ne,0\np2,3\np5,1\n");
    let out_dir = dir.path().join("ext");
    let out = run(&["extend", "--space", s(&p), "--method", "mcshane", "--field", s(&f), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ext = fs::read_to_string(out_dir.join("extension.csv")).unwrap();
    assert_eq!(ext, "id,value\ne,0.0\np1,1.5\np2,3.0\np3,6.0\np4,12.0\np5,1.0\n");
    let cert: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["restriction_max_error"], 0.0);
    assert!(cert["lip_constant_after"].as_f64().unwrap() <= cert["constants"]["K"].as_f64().unwrap());
}

#[test]
fn extend_methods_and_errors() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let f = write(&dir, "f.csv", "id,value\ne,0\np2,3\np5,1\n");
    for extra in [
        vec!["--method", "littlelip", "--alpha", "0.5", "--gap", "1"],
        vec!["--method", "bump"],
    ] {
        let mut args = vec!["extend", "--space", s(&p), "--field", s(&f)];
        args.extend(extra);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["certificate"]["restriction_max_error"], 0.0);
    }
    let out = run(&["extend", "--space", s(&p), "--field", s(&f), "--method", "littlelip", "--alpha", "0.5"]);
    assert_eq!(code(&out), 1);
    let out = run(&["extend", "--space", s(&p), "--field", s(&f), "--method", "mcshane", "--k", "0.01"]);
    assert_eq!(code(&out), 1);
    let r = write(&dir, "r.csv", "id,value\np4,1\np3,0.5\ne,2\n");
    let out = run(&["extend", "--space", s(&p), "--field", s(&r), "--method", "rapid", "--limit", "e"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["values"], serde_json::json!([2.0, 2.0, 2.0, 0.5, 1.0, 2.0]));
}

#[test]
fn seminorm_report() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let f = write(&dir, "f.csv", "id,value\ne,0\np1,1\np2,1\np3,2\np4,5\np5,3\n");
    let out = run(&["seminorm", "--space", s(&p), "--field", s(&f)]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["seminorm"], 0.5);
    assert_eq!(r["scale_isomorphism"]["forward_holds"], Value::Bool(true));
    assert_eq!(r["scale_isomorphism"]["inverse_holds"], Value::Bool(true));
}

#[test]
fn iso_check_operator_file_and_factoring() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let map = r#"{"breakpoints":[0],"values":[1],"left_slope":2,"right_slope":3}"#;
    let op = format!(r#"{{"phi":["p1","p2","p3","p4","p5","e"],"maps":[{m},{m},{m},{m},{m},{m}]}}"#, m = map);
    let opf = write(&dir, "op.json", &op);
    let out = run(&["iso-check", "--space", s(&p), "--operator", s(&opf), "--trials", "50", "--factor"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["verdict"]["pass"], Value::Bool(true));
    assert_eq!(r["factored"]["phi"], serde_json::json!(["p1", "p2", "p3", "p4", "p5", "e"]));
    let bad = write(&dir, "bad.json", r#"{"phi":["e"],"maps":[]}"#);
    assert_eq!(code(&run(&["iso-check", "--space", s(&p), "--operator", s(&bad)])), 1);
}

fn have_python() -> bool {
    Command::new("python3").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn iso_check_external_oracle() {
    if !have_python() {
        eprintln!("python3 not available; skipping");
        return;
    }
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "geo.csv", GEO);
    let script = |name: &str, expr: &str| {
        let body = format!(
            "import sys\nfor line in sys.stdin:\n    v = [float(x) for x in line.strip().split(',')]\n    print(','.join(repr({expr}) for x in v), flush=True)\n"
        );
        write(&dir, name, &body)
    };
    let good = script("good.py", "2 * x + 1");
    let bad = script("bad.py", "-x");
    let out = run(&["iso-check", "--space", s(&p), "--oracle-cmd", &format!("python3 {}", s(&good)), "--trials", "40"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["iso-check", "--space", s(&p), "--oracle-cmd", &format!("python3 {}", s(&bad)), "--trials", "40"]);
    assert_eq!(code(&out), 2);
    assert!(json(&out)["verdict"]["counterexample"].is_object());
    let out = run(&["iso-check", "--space", s(&p), "--oracle-cmd", "exit 0", "--trials", "5"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn csv_format_and_out_file() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pts.csv", "id,x\na,0\nb,1\nc,2\nd,10\n");
    let target = dir.path().join("t.csv");
    let out = run(&["territories", "--space", s(&p), "--epsilon", "1", "--format", "csv", "--out", s(&target)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(target).unwrap(), "id,component\na,0\nb,0\nc,0\nd,1\n");
}
