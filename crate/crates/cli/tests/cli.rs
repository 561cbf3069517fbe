use std::process::{Command, Output};

use serde_json::Value;

fn thinpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinpower"))
        .args(args)
        .env_remove("THINPOWER_TOL_PROFILE")
        .env_remove("THINPOWER_THREADS")
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const FAIL1: &str = r#"{"probs":[0.16666666666666666,0.6666666666666666,0.16666666666666666]}"#;

#[test]
fn entropy_of_point_mass_is_zero() {
    let dir = std::env::temp_dir().join(format!("thinpower-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("delta0.json");
    std::fs::write(&path, r#"{"probs": [1.0]}"#).unwrap();
    let out = thinpower(&["entropy", "--pmf", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json_out(&out), Value::from(0.0));
}

#[test]
fn entropy_units() {
    let out = thinpower(&["entropy", "--pmf", r#"{"family":"bernoulli","p":0.5}"#, "--bits"]);
    assert!((json_out(&out).as_f64().unwrap() - 1.0).abs() < 1e-15);
    let out = thinpower(&["entropy", "--pmf", r#"{"family":"bernoulli","p":0.5}"#, "--both"]);
    let v = json_out(&out);
    assert!((v["nats"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn thin_and_conv_emit_pmf_documents() {
    let out = thinpower(&["thin", "--pmf", r#"{"family":"binomial","n":2,"p":0.5}"#, "--alpha", "0.5"]);
    assert!(out.status.success());
    assert_eq!(json_out(&out)["probs"], serde_json::json!([0.5625, 0.375, 0.0625]));

    let b = r#"{"family":"bernoulli","p":0.5}"#;
    let out = thinpower(&["conv", "--pmf", b, "--pmf", b]);
    assert_eq!(json_out(&out)["probs"], serde_json::json!([0.25, 0.5, 0.25]));

    let out = thinpower(&["conv", "--pmf", b]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unthin_failure_is_an_input_error_with_json_body() {
    let out = thinpower(&["unthin", "--pmf", r#"{"probs":[0.1,0.9]}"#, "--alpha", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let body = json_out(&out);
    assert_eq!(body["error"]["kind"], "not_thinnable");
    assert!(body["error"]["message"].as_str().unwrap().contains("thinnable"));
}

#[test]
fn malformed_input_exits_two() {
    let out = thinpower(&["entropy", "--pmf", r#"{"probs":[0.5,0.6]}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_out(&out)["error"]["kind"], "invalid_pmf");
    let out = thinpower(&["entropy", "--pmf", "/nonexistent/pmf.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = thinpower(&["entropy", "--pmf", "{}", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_fail2_matches_printed_values() {
    let out = thinpower(&["reproduce", "--example", "fail2"]);
    assert!(out.status.success());
    let v = json_out(&out);
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 5);
    for row in values {
        assert!(row["abs_deviation"].as_f64().unwrap() < 1e-4, "{row}");
    }
    assert_eq!(v["verdict"]["holds"], false);

    let table = thinpower(&["reproduce", "--example", "fail2", "--format", "table"]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("2.08286") && text.contains("2.25374"));
}

#[test]
fn reproduce_fail1_refutes_superadditivity() {
    let out = thinpower(&["reproduce", "--example", "fail1"]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["verdict"]["holds"], false);
    assert!(v["verdict"]["margin"].as_f64().unwrap() < -0.03);
}

#[test]
fn check_exit_codes_follow_theorem_status() {
    // A refuted conjecture failing is expected: exit 0.
    let out = thinpower(&["check", "--name", "firstepi", "--pmf", FAIL1, "--pmf", FAIL1]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)[0]["holds"], false);

    let out = thinpower(&[
        "check",
        "--name",
        "teci",
        "--pmf",
        r#"{"family":"poisson","lambda":2}"#,
        "--pmf",
        r#"{"family":"binomial","n":3,"p":0.3}"#,
        "--alpha",
        "0.3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)[0]["holds"], true);

    // ULC-gated check on a non-ULC input.
    let gapped = r#"{"probs":[0.5,0,0.5]}"#;
    let out = thinpower(&["check", "--name", "rtepi", "--pmf", gapped, "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_out(&out)["error"]["kind"], "precondition");
    let out = thinpower(&["check", "--name", "rtepi", "--pmf", gapped, "--alpha", "0.5", "--allow-non-ulc"]);
    assert_eq!(json_out(&out)[0]["within_hypotheses"], false);
}

#[test]
fn functional_and_vpower() {
    let poisson = r#"{"family":"poisson","lambda":3}"#;
    let v = json_out(&thinpower(&["vpower", "--pmf", poisson])).as_f64().unwrap();
    assert!((v - 3.0).abs() < 1e-9);
    let d = json_out(&thinpower(&["functional", "--name", "D", "--pmf", poisson]));
    assert!(d.as_f64().unwrap().abs() < 1e-12);
    let e = json_out(&thinpower(&["functional", "--name", "E", "--t", "0"]));
    assert_eq!(e.as_f64().unwrap(), 0.0);
}

#[test]
fn hessian_and_splitting() {
    let specs = r#"[{"family":"poisson","lambda":1},{"family":"binomial","n":2,"p":0.3},{"probs":[0.2,0.5,0.3]}]"#;
    let out = thinpower(&["hessian", "--specs", specs, "--alphas", "0.2,0.3,0.5", "--fd-check"]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert!(v["max_rel_error"].as_f64().unwrap() < 1e-5);

    let out = thinpower(&["splitting", "--l", "2", "--t", "0.5", "--lambdas", "1,1,2", "--alphas", "0.2,0.3,0.5"]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["l"], 2);
    assert!(v["u"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|x| x.as_f64().unwrap() >= 0.0));
}

#[test]
fn path_report_has_parallel_arrays() {
    let out = thinpower(&["path", "--pmf", r#"{"family":"binomial","n":4,"p":0.3}"#, "--grid", "12"]);
    assert!(out.status.success());
    let v = json_out(&out);
    let n = v["t_grid"].as_array().unwrap().len();
    assert_eq!(n, 12);
    for key in ["f_vals", "r_vals", "h_vals", "u_vals"] {
        assert_eq!(v[key].as_array().unwrap().len(), n);
    }
}

#[test]
fn search_is_identical_across_thread_counts() {
    for name in ["tepi", "teci", "hmon"] {
        let run = |threads: &str| thinpower(&["--threads", threads, "search", "--name", name, "--trials", "30", "--seed", "7"]);
        let (one, four) = (run("1"), run("4"));
        assert!(one.status.success(), "{name}");
        assert_eq!(one.stdout, four.stdout, "{name}");
    }
    let unknown = thinpower(&["search", "--name", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn injected_counterexample_is_reported_without_failing() {
    let out = thinpower(&["search", "--name", "tepi", "--trials", "5", "--inject"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["violations"][0]["trial"], 0);
}

#[test]
fn verify_all_passes_and_is_deterministic() {
    let one = thinpower(&["--threads", "1", "verify", "--all"]);
    let four = thinpower(&["--threads", "4", "verify", "--all"]);
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let v = json_out(&one);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 9);
    assert_eq!(v["all_passed"], true);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("thinpower-out-{}.json", std::process::id()));
    let out = thinpower(&["construct", "--spec", r#"{"family":"delta","k":2}"#, "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["probs"], serde_json::json!([0.0, 0.0, 1.0]));
    std::fs::remove_file(path).ok();
}
