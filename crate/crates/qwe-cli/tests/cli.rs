use std::process::{Command, Output};

fn qwe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwe")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn coeffs_writes_csv_and_rejects_bad_radius() {
    let o = qwe(&["coeffs", "--y", "0.1,0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("y,c11,c12,c20,c21,V,w"));
    assert_eq!(lines.count(), 2);
    assert_eq!(qwe(&["coeffs", "--y", "-1"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["coeffs", "--bogus"][..],
        &["resolvent", "projection", "--t0", "0.45"],
        &["evolve", "--grid-n", "8"],
        &["evolve", "--r", "0.4"],
        &["spectral", "ratio", "--lambda", "1,2,3"],
    ] {
        assert_eq!(qwe(args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(qwe(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_defaults() {
    let s = stdout(&qwe(&["evolve", "--help"]));
    for flag in ["--amp", "--alpha", "--beta", "--grid-n", "--ds", "--s-max", "--filter", "--linear", "--seed", "--r"] {
        assert!(s.contains(flag), "{flag}");
    }
    assert!(s.contains("[default: 64]") && s.contains("[default: 0.5]"));
}

#[test]
fn certify_succeeds_and_mutation_fails_with_witness() {
    let o = qwe(&["spectral", "certify"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["status"] == "proved"));

    let o = qwe(&["spectral", "certify", "--corrupt-p1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<_> = v.as_array().unwrap().iter().filter(|c| c["status"] == "failed").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|c| c["witness"].as_str().is_some_and(|w| w.starts_with("coefficient of"))));
}

#[test]
fn ratio_and_scan_schemas() {
    let s = stdout(&qwe(&["spectral", "ratio", "--lambda", "1,1", "--n-max", "10"]));
    assert!(s.starts_with("n,r_re,r_im,tilde_r,delta_abs\n"));
    assert_eq!(s.lines().count(), 12);
    let s = stdout(&qwe(&["spectral", "scan", "--re-min", "0.5", "--re-max", "1.5", "--steps", "4"]));
    let rows: Vec<Vec<f64>> = s
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    // the mismatch changes sign across lambda = 1
    assert!(rows[1][2] * rows[3][2] < 0.0);
}

#[test]
fn projection_json() {
    let o = qwe(&["resolvent", "projection", "--t0", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["positive"], true);
    assert!(v["integral"].as_f64().unwrap() > 0.0);
}

#[test]
fn shooting_run_reports_positive_rate() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let summary = dir.join("shoot_summary.json");
    let o = qwe(&["evolve", "--amp", "1e-3", "--filter", "shoot", "--s-max", "5", "--summary", summary.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("s,norm,a1,a4\n"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(summary).unwrap()).unwrap();
    assert!(v["omega_fit"].as_f64().unwrap() > 0.0);
    assert!(v["shoot"]["iters"].as_u64().is_some());
    assert!(v.get("blowup_s").is_none());
}

#[test]
fn spectrum_csv_has_the_unstable_pair() {
    let s = stdout(&qwe(&["evolve", "spectrum", "--grid-n", "48"]));
    assert!(s.starts_with("re,im,resolution_shift\n"));
    let re: Vec<f64> = s.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(re.iter().any(|x| (x - 4.0).abs() < 1e-6) && re.iter().any(|x| (x - 1.0).abs() < 1e-6));
}

#[test]
fn corrupted_reproduction_fails_and_records_witness() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("corrupt");
    let o = qwe(&["reproduce-all", "--out", dir.to_str().unwrap(), "--corrupt-p1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["all_passed"], false);
    let c3 = &v["criteria"][2];
    assert_eq!(c3["passed"], false);
    assert!(c3["failures"].as_array().unwrap().iter().any(|f| f.as_str().unwrap().contains("coefficient of")));
    assert_eq!(v["criteria"][0]["passed"], true);
}
