use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lame")).args(args).output().expect("binary runs")
}

fn json_out(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn error_line(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    serde_json::from_str(err.trim()).expect("error is JSON")
}

#[test]
fn qpoly_roots_are_minus_e() {
    let q = json_out(&["qpoly", "--n", "1", "--tau", "1.0i"]);
    let ctx = json_out(&["context", "--tau", "1.0i"]);
    let mut want: Vec<f64> = ["e1", "e2", "e3"].iter().map(|k| -complex(&ctx[*k]).0).collect();
    want.sort_by(|a, b| a.total_cmp(b));
    let roots: Vec<(f64, f64)> = q["roots"].as_array().unwrap().iter().map(complex).collect();
    assert_eq!(roots.len(), 3);
    for (r, w) in roots.iter().zip(&want) {
        assert!((r.0 - w).abs() < 1e-9 && r.1.abs() < 1e-9, "{r:?} {w}");
    }
}

#[test]
fn context_round_trips() {
    let out = run(&["context", "--tau", "0.3+0.9i"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ctx = lame::parse::decode_context(&text).unwrap();
    assert_eq!(ctx.tau, lame::C::new(0.3, 0.9));
}

#[test]
fn first_branch_point_swaps_levels() {
    let v = json_out(&["continue", "--a", "0.258666+0.697448i", "--labels", "0,2,4,6"]);
    assert_eq!(v["permutation"], "0<->2, 4 fixed, 6 fixed");
    assert!(v["max_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn perturb_leading_coefficient() {
    let out = run(&["perturb", "--n", "1", "--levels", "1", "--order", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row, "0,0,3.33333333333333,10/3");
}

#[test]
fn perturb_json_has_rationals() {
    let v = json_out(&["perturb", "--n", "1", "--levels", "2", "--order", "3", "--format", "json"]);
    assert_eq!(v[1]["rational_over_pi2"][3], serde_json::json!([115, 2]));
}

#[test]
fn monodromy_methods_agree() {
    let v = json_out(&["monodromy", "--n", "2", "--tau", "0.8i", "--energy", "1.3+0.4i"]);
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
    for c in v["cross_residuals"].as_array().unwrap() {
        assert!(c["residual"].as_f64().unwrap() < 1e-6, "{c}");
    }
}

#[test]
fn reduce_and_bethe() {
    let v = json_out(&["reduce", "--n", "2", "--tau", "0.9i", "--energy", "2+1i", "--hermite", "1,2,2,3"]);
    assert!(v["differentiated_first"].as_f64().unwrap() < 1e-7);
    assert!(v["hermite"]["first_residual"].as_f64().unwrap() < 1e-8);
    let b = json_out(&["bethe", "--n", "2", "--tau", "0.9i", "--energy", "2+1i"]);
    assert!(b["bethe_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn bands_count() {
    let v = json_out(&["bands", "--n", "2", "--tau", "1.5i"]);
    assert_eq!(v["edges"].as_array().unwrap().len(), 5);
    assert_eq!(v["bands"][2][1], "+inf");
}

#[test]
fn exit_codes() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = run(&["context", "--tau", "1+"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["context", "--tau", "-1i"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "domain");

    let out = run(&["continue", "--a", "0.88+0.05i", "--labels", "0", "--radius", "0.02"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    error_line(&out);
}

#[test]
fn deterministic_and_out_file() {
    let args = ["xi", "--n", "3", "--tau", "0.2+1.1i"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);

    let dir = std::env::temp_dir().join(format!("lame-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("q.json");
    let out = run(&["qpoly", "--n", "2", "--tau", "1.2i", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["roots"].as_array().unwrap().len(), 5);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fifteen_significant_digits() {
    let out = run(&["context", "--tau", "1.0i"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for tok in text.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == '-')) {
        let mantissa = tok.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        assert!(digits.trim_start_matches('0').len() <= 15, "{tok}");
    }
}
