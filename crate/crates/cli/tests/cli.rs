use std::path::Path;
use std::process::{Command, Output};

fn qhankel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhankel"))
        .args(args)
        .env_remove("QF_DIGITS")
        .env_remove("QF_TAIL_TOL")
        .env_remove("QF_TABLE_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Smooth bump on exponents -3..=3 of the default q = 0.5 grid.
fn write_bump(path: &Path) {
    let mut s = String::from("n,x,value\n");
    for n in -10..=40 {
        let v = if (-3i32..=3).contains(&n) { (-(n * n) as f64 / 4.0).exp() } else { 0.0 };
        s.push_str(&format!("{n},{:.16e},{:.16e}\n", 0.5f64.powi(n), v));
    }
    std::fs::write(path, s).unwrap();
}

fn read_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn check_single_cell_passes_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = qhankel(&["check", "--q", "0.5", "--v", "0.5", "--probes", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    let e = &r["cells"][0]["entries"][0];
    for key in ["name", "anchor", "residual", "tolerance", "pass"] {
        assert!(e.get(key).is_some(), "entry lacks {key}");
    }
    for key in ["digits", "seed", "runtime"] {
        assert!(r["environment"].get(key).is_some());
    }
}

#[test]
fn check_report_is_deterministic_apart_from_runtime() {
    let run = || {
        let o = qhankel(&["check", "transform", "--q", "0.5", "--v", "0", "--probes", "10", "--json"]);
        assert_eq!(o.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["environment"]["runtime"] = serde_json::Value::Null;
        v
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let names: Vec<&str> = a["cells"][0]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert!(names.iter().all(|n| n.starts_with("transform.")), "{names:?}");
}

#[test]
fn zero_tolerance_fails_with_exit_one() {
    let o = qhankel(&["check", "--q", "0.5", "--v", "0.5", "--probes", "5", "--tol", "transform.plancherel=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn invalid_q_is_a_config_error() {
    let o = qhankel(&["check", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < q < 1"));
    let o = qhankel(&["check", "--tol", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_digits_apply_and_flags_win() {
    let o = Command::new(env!("CARGO_BIN_EXE_qhankel"))
        .args(["kernel", "--x", "1", "--y", "1", "--json"])
        .env("QF_DIGITS", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "env value is honoured and rejected");
    let o = Command::new(env!("CARGO_BIN_EXE_qhankel"))
        .args(["kernel", "--x", "1", "--y", "1", "--json", "--digits", "40"])
        .env("QF_DIGITS", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn precision_ceiling_exits_three() {
    // x = q^{-600} at q = 0.9 needs far more digits than the ceiling allows
    let o = qhankel(&["kernel", "--q", "0.9", "--v", "0.5", "--nlo", "-300", "--nhi", "10", "--x", "1", "--y", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn transform_twice_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    let (f, ff, fff) = (dir.path().join("f.csv"), dir.path().join("Ff.csv"), dir.path().join("FFf.csv"));
    write_bump(&f);
    for (i, o) in [(&f, &ff), (&ff, &fff)] {
        let out = qhankel(&[
            "transform",
            "--q",
            "0.5",
            "--v",
            "0.5",
            "--in",
            i.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for (a, b) in read_values(&f).iter().zip(read_values(&fff)) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn kernel_row_sums_to_one() {
    let o = qhankel(&["kernel", "--x", "1", "--y", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["row_sum_defect"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["trusted"], true);
    let o = qhankel(&["kernel", "--x", "0.3", "--y", "1"]);
    assert_eq!(o.status.code(), Some(2), "off-lattice point");
}

#[test]
fn scan_positivity_is_nonnegative_for_nonnegative_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = qhankel(&[
        "scan-positivity",
        "--q-list",
        "0.3,0.5,0.9",
        "--v-list",
        "0,0.5,1.5",
        "--window",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,v,min_kernel,argmin_a,argmin_b,argmin_c"));
    let mut rows = 0;
    for l in lines {
        let min: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(min >= -1e-10, "{l}");
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn scan_reports_negative_orders_without_failing() {
    let o = qhankel(&["scan-positivity", "--q-list", "0.5", "--v-list=-0.7", "--window", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0.5,-0.7,"));
}

#[test]
fn heat_residual_json_and_table_cache() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let u = dir.path().join("u.csv");
    let cache = dir.path().join("cache");
    write_bump(&f);
    let args = [
        "heat",
        "--q",
        "0.5",
        "--v",
        "0.5",
        "--t",
        "1.0",
        "--in",
        f.to_str().unwrap(),
        "--out",
        u.to_str().unwrap(),
        "--residual",
        "--table-cache",
        cache.to_str().unwrap(),
    ];
    let o = qhankel(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["t"], 1.0);
    assert!(v["residual"].as_f64().unwrap() < 1e-7);
    assert!(v["mass_defect"].as_f64().unwrap() < 1e-8);
    assert!(read_values(&u).iter().all(|&x| x >= -1e-12));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    // second run reads the cached table and agrees byte for byte
    let first = std::fs::read(&u).unwrap();
    let o = qhankel(&args);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&u).unwrap(), first);
}

#[test]
fn heat_rejects_nonpositive_time() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    write_bump(&f);
    let o = qhankel(&["heat", "--t=-1", "--in", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
