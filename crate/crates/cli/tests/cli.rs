use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatcauchy")).args(args).output().expect("binary runs")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn c(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

const GENUS0: &str = r#"{"rank":1,"zeros":[{"point":[2,0],"x":[[1,0]]}],"poles":[{"point":[3,0],"u":[[1,0]]}]}"#;

#[test]
fn theta_at_i() {
    let o = run(&["theta", "--omega", "i", "--z", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let (re, im) = c(&report(&o)["result"]["value"]);
    assert!((re - 1.0864348112).abs() < 1e-9 && im.abs() < 1e-15);
}

#[test]
fn theta_with_characteristic_and_gradient() {
    let o = run(&["theta", "--omega", "0.3+0.8i", "--z", "0", "--a", "0.5", "--b", "0.5", "--gradient"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    // Odd characteristic: the value vanishes and the derivative does not.
    assert!(c(&r["result"]["value"]).0.abs() < 1e-12);
    assert!(c(&r["result"]["gradient"][0]).0.abs() > 1.0);
}

#[test]
fn fay_sweep_is_reproducible() {
    let args = ["fay-check", "--tau", "0+1i", "--samples", "100", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    let (ra, rb) = (report(&a), report(&b));
    let checks = |r: &Value| -> Vec<Value> {
        r["criteria"][0]["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["name"] != "runtime seconds")
            .cloned()
            .collect()
    };
    assert_eq!(checks(&ra), checks(&rb));
    assert_eq!(ra["input_sha256"], rb["input_sha256"]);
    let fay = checks(&ra).into_iter().find(|c| c["name"] == "Fay trisecant").unwrap();
    assert_eq!(fay["samples"], 100);
    assert!(fay["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn genus0_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "g0.json", GENUS0);
    let o = run(&["solve-genus0", &p, "--at", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(r["pass"], true);
    let vals = r["result"]["values"].as_array().unwrap();
    let at10 = vals.iter().find(|v| c(&v["z"]) == (10.0, 0.0)).unwrap();
    let (re, im) = c(&at10["T"][0][0]);
    assert!((re - 8.0 / 7.0).abs() < 1e-12 && im.abs() < 1e-15);
    assert_eq!(vals.len(), 1);
    let o = run(&["solve-genus0", &p]);
    assert_eq!(report(&o)["result"]["values"].as_array().unwrap().len(), 4);
}

#[test]
fn tolerances_from_file_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let body = GENUS0.replacen('{', r#"{"tolerances":{"T T^-1 = I":1e-30},"#, 1);
    let p = write(dir.path(), "g0.json", &body);
    assert_eq!(run(&["solve-genus0", &p]).status.code(), Some(1));
    assert_eq!(run(&["solve-genus0", &p, "--tol", "T T^-1 = I=1e-6"]).status.code(), Some(0));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"rank\": 1,");
    let o = run(&["solve-genus0", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(report(&o)["error"]["kind"].is_string());
    let schema = write(dir.path(), "s.json", &GENUS0.replacen('{', r#"{"schema":9,"#, 1));
    assert_eq!(run(&["solve-genus0", &schema]).status.code(), Some(2));
    let singular = r#"{"rank":2,"zeros":[{"point":[0,0],"x":[[1,0],[0,0]]}],"poles":[{"point":[1,0],"u":[[0,0],[1,0]]}]}"#;
    let o = run(&["solve-genus0", &write(dir.path(), "sing.json", singular)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&o)["error"]["kind"], "SingularGamma");
    assert_eq!(run(&["theta", "--omega", "1", "--z", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify-all", "--only", "12"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn tight_tolerance_fails_with_exit_1() {
    let o = run(&["kernel-check", "--samples", "3", "--tol-scale", "1e-12"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&o)["pass"], false);
}

#[test]
fn pencil_export_feeds_conint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let tau = (0.3f64, 0.8f64);
    let (a0, b0) = (0.23, 0.41);
    let (lam, mu) = ((0.2, 0.1), (0.6, 0.45));
    // χ = χ̃ − (λ − μ) in the coordinates z = τa + b.
    let (dre, dim) = (lam.0 - mu.0, lam.1 - mu.1);
    let da = dim / tau.1;
    let db = dre - tau.0 * da;
    let line = format!(
        r#"{{"tau":[{},{}],"chi":{{"a":{},"b":{}}},"chi_tilde":{{"a":{a0},"b":{b0}}},
            "zeros":[{{"point":[{},{}],"vectors":[[[1,0]]]}}],"poles":[{{"point":[{},{}],"vectors":[[[1,0]]]}}],
            "base_point":[0.8,0.5]}}"#,
        tau.0, tau.1, a0 - da, b0 - db, lam.0, lam.1, mu.0, mu.1
    );
    let lp = write(d, "line.json", &line);
    let o = run(&["solve-line", &lp, "--samples", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["conint", "--from-absint", &lp, "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let mut problem = r["result"]["problem"].clone();

    let pencil = d.join("pencil.json");
    let o = run(&[
        "detrep", "--tau", "0.3+0.8i", "--line", "0.23,0.41", "--samples", "5",
        "--pencil-out", pencil.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let exported: Value = serde_json::from_str(&std::fs::read_to_string(&pencil).unwrap()).unwrap();
    assert_eq!(exported, problem["pencil"]);

    problem["pencil"] = Value::String("pencil.json".into());
    let cp = write(d, "conint.json", &problem.to_string());
    let o = run(&["conint", &cp]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["result"]["gamma"], r["result"]["gamma"]);
}
