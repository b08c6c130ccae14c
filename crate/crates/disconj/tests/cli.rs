use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use serde_json::Value;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn disconj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disconj"))
        .args(args)
        .current_dir(problems())
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn without_timing(bytes: &[u8]) -> Value {
    let mut v = json(bytes);
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn write_problem(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_sixth_order_at_zero_is_disconjugate() {
    let o = disconj(&["check", "sixth.json", "--at", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o.stdout);
    assert_eq!(v["command"], "check");
    assert_eq!(v["verdict"]["disconjugate"], true);
    assert!(v["verdict"]["omega"].is_null());
}

#[test]
fn check_axial_beam_at_zero_is_not_disconjugate() {
    let o = disconj(&["check", "fourth_50.json", "--at", "0"]);
    assert_eq!(code(&o), 2);
    let v = json(&o.stdout);
    assert_eq!(v["verdict"]["disconjugate"], false);
    assert_eq!(v["verdict"]["witness_k"], 2);
    let omega = v["verdict"]["omega"].as_f64().unwrap();
    assert!(omega > 0.0 && omega < 1.0);
}

#[test]
fn negative_at_values_are_accepted() {
    let o = disconj(&["check", "fourth.json", "--at", "-100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o.stdout)["verdict"]["m"], -100.0);
}

#[test]
fn malformed_coefficient_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "bad.json",
        r#"{"order": 2, "coefficients": ["0", "cos("], "interval": [0, 1], "m_ref": 0}"#,
    );
    let o = disconj(&["check", &f]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("coefficients[1]") && err.contains("column 4"),
        "{err}"
    );
    assert!(o.stdout.is_empty());
}

#[test]
fn schema_errors_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        "not json",
        r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 1], "m_ref": 0, "x": 1}"#,
        r#"{"order": 3, "coefficients": ["0", "0"], "interval": [0, 1], "m_ref": 0}"#,
        r#"{"order": 2, "coefficients": ["0", "0"], "interval": [1, 1], "m_ref": 0}"#,
    ]
    .iter()
    .enumerate()
    {
        let f = write_problem(dir.path(), &format!("p{i}.json"), text);
        assert_eq!(code(&disconj(&["check", &f])), 1, "{text}");
    }
    assert_eq!(code(&disconj(&["check"])), 1);
    assert_eq!(code(&disconj(&["check", "fourth.json", "--tol", "2"])), 1);
}

#[test]
fn coefficient_failing_on_the_interval_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "log.json",
        r#"{"order": 2, "coefficients": ["0", "log(t - 0.5)"], "interval": [0, 1], "m_ref": 0}"#,
    );
    let o = disconj(&["check", &f]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_file_is_an_io_error() {
    assert_eq!(code(&disconj(&["check", "no_such_file.json"])), 5);
}

#[test]
fn trace_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = disconj(&[
        "trace",
        "fourth_50.json",
        "--at",
        "0",
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let summary = json(&o.stdout);
    assert_eq!(summary["zeros"][0]["kind"], "sign_change");

    let w = 5.0 * 2f64.sqrt();
    let closed = |t: f64| (w * t * (w * t).sin() + 2.0 * (w * t).cos() - 2.0) / 2500.0;
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "W"]);
    let mut rows = 0;
    for rec in rdr.deserialize() {
        let (t, v): (f64, f64) = rec.unwrap();
        assert_abs_diff_eq!(v, closed(t), epsilon = 1e-8);
        rows += 1;
    }
    assert_eq!(rows, summary["samples"].as_u64().unwrap());
    let z = summary["zeros"][0]["t"].as_f64().unwrap();
    assert!(closed(z).abs() < 1e-9);
}

#[test]
fn trace_without_out_writes_csv_to_stdout() {
    let o = disconj(&["trace", "third.json", "--k", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,W\n"));
    // W_1 = y_1 = t^2 / 2
    for line in text.lines().skip(1).step_by(100) {
        let (t, v) = line.split_once(',').unwrap();
        let (t, v): (f64, f64) = (t.parse().unwrap(), v.parse().unwrap());
        assert_abs_diff_eq!(v, t * t / 2.0, epsilon = 1e-10);
    }
    assert!(json(&o.stderr)["zeros"].as_array().unwrap().is_empty());
}

#[test]
fn k_out_of_range_is_an_input_error() {
    for k in ["0", "4"] {
        assert_eq!(code(&disconj(&["trace", "fourth.json", "--k", k])), 1);
        assert_eq!(code(&disconj(&["green", "fourth.json", "--k", k])), 1);
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    // a directory cannot be opened as a file, even with elevated permissions
    let target = dir.path().to_str().unwrap();
    let o = disconj(&["trace", "fourth.json", "--k", "2", "--out", target]);
    assert_eq!(code(&o), 5);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let nested = blocker.join("w.csv");
    let o = disconj(&["check", "fourth.json", "--out", nested.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
}

#[test]
fn green_dirichlet_passes_and_is_nonpositive() {
    let o = disconj(&[
        "green",
        "second.json",
        "--k",
        "1",
        "--at",
        "0",
        "--mesh",
        "16",
    ]);
    assert_eq!(code(&o), 0);
    let report = json(&o.stderr);
    assert_eq!(report["pass"], true);
    assert_eq!(report["parity"], "odd");
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,s,g"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (t, s, g) = (v[0], v[1], v[2]);
        let want = if t <= s { t * (s - 1.0) } else { s * (t - 1.0) };
        assert_abs_diff_eq!(g, want, epsilon = 1e-8);
        assert!(g <= 1e-15);
        rows += 1;
    }
    assert_eq!(rows, 16 * 16);
}

#[test]
fn green_axial_beam_passes_at_200_and_fails_at_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let out = out.to_str().unwrap();
    let o = disconj(&["green", "fourth_50.json", "--k", "2", "--out", out]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o.stdout)["pass"], true);
    let mut rdr = csv::Reader::from_path(out).unwrap();
    for rec in rdr.deserialize() {
        let (_, _, g): (f64, f64, f64) = rec.unwrap();
        assert!(g >= -1e-12);
    }

    let o = disconj(&[
        "green",
        "fourth_50.json",
        "--k",
        "2",
        "--at",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 2);
    let r = json(&o.stdout);
    assert_eq!(r["pass"], false);
    assert!(r["worst_violation"].as_f64().unwrap() > 1e-7);
}

#[test]
fn green_at_an_eigenvalue_is_a_numerical_failure() {
    let pi2 = std::f64::consts::PI.powi(2).to_string();
    let o = disconj(&["green", "second.json", "--k", "1", "--at", &pi2]);
    assert_eq!(code(&o), 3);
}

#[test]
fn interval_rejects_a_reference_outside_the_interval() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "beam0.json",
        r#"{"order": 4, "coefficients": ["0", "50", "0", "0"], "interval": [0, 1], "m_ref": 0}"#,
    );
    let o = disconj(&["interval", &f]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("W_2"), "{err}");
    let v = json(&o.stdout);
    assert_eq!(v["verdict"]["witness_k"], 2);
    assert!(v.get("interval").is_none());
}

#[test]
fn small_radius_is_inconclusive() {
    let o = disconj(&["interval", "fourth.json", "--radius", "100"]);
    assert_eq!(code(&o), 4);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("X_2") && err.contains("down"), "{err}");
}

#[test]
fn interval_report_layout() {
    let o = disconj(&["interval", "fourth_50.json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    let iv = &v["interval"];
    assert_eq!(iv["unbounded_below"], false);
    assert_eq!(iv["attained_k_lower"], 2);
    assert_eq!(iv["attained_k_upper"], 1);
    let spectrum = v["spectrum"].as_array().unwrap();
    assert_eq!(spectrum.len(), 3);
    for (i, s) in spectrum.iter().enumerate() {
        assert_eq!(s["k"], i + 1);
        let rec = if s["parity"] == "even" {
            &s["least_positive"]
        } else {
            &s["biggest_negative"]
        };
        let ef = &rec["eigenfunction"];
        assert_eq!(ef["t"].as_array().unwrap().len(), 65);
        assert_eq!(ef["u"].as_array().unwrap().len(), 65);
        let lambda = rec["lambda"].as_f64().unwrap();
        let m_star = rec["m_star"].as_f64().unwrap();
        assert_abs_diff_eq!(lambda, 200.0 - m_star, epsilon = 1e-9);
    }
    assert_eq!(v["settings"]["scan_step"], 2.0);
    assert_eq!(v["input"]["m_ref"], 200.0);
}

#[test]
fn reports_are_byte_stable_apart_from_timing() {
    for args in [
        &["interval", "fourth_50.json"][..],
        &["interval", "sixth.json"][..],
        &["check", "third_cos10.json"][..],
    ] {
        let a = disconj(args);
        let b = disconj(args);
        assert_eq!(code(&a), 0);
        assert_eq!(without_timing(&a.stdout), without_timing(&b.stdout));
        let strip = |o: &Output| {
            String::from_utf8(o.stdout.clone())
                .unwrap()
                .lines()
                .filter(|l| !l.contains("elapsed_ms"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a), strip(&b));
    }
}

#[test]
fn thread_cap_does_not_change_the_report() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_disconj"))
            .args(["interval", "fourth.json"])
            .current_dir(problems())
            .env("DISCONJ_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let many = run("4");
    assert_eq!(code(&one), 0);
    assert_eq!(without_timing(&one.stdout), without_timing(&many.stdout));
    assert_eq!(code(&run("lots")), 1);
}
