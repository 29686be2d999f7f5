use std::process::{Command, Output};

use serde_json::Value;

fn bisbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisbs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

/// Im sqrt(n + c i) on the upper branch.
fn im_root(n: f64, c: f64) -> f64 {
    ((n.hypot(c) - n) / 2.0).sqrt()
}

#[test]
fn classify_ia_1_json() {
    let o = bisbs(&["classify", "--map", "ia_1", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["forward_class"], "parabolic-Ia");
    assert_eq!(v["bisbs_class"], "non-zero-height");
    assert_eq!(v["dw_point"]["text"], "inf");
    assert!(v["tolerances"]["step_bound"].is_number());
}

#[test]
fn backward_iib_2_heights_match_closed_form() {
    let o = bisbs(&[
        "backward",
        "--map",
        "iib_2",
        "--start",
        "0.7071+0.7071i",
        "--steps",
        "100",
    ]);
    assert!(o.status.success());
    let heights = column(&stdout(&o), "height");
    assert_eq!(heights.len(), 101);
    // The rounded start is w0 with w0^2 = 2 (0.7071^2) i, and w_n = sqrt(n + w0^2).
    let r: f64 = "0.7071".parse().unwrap();
    let c = 2.0 * r * r;
    for (n, y) in heights.iter().enumerate() {
        assert!((y - im_root(n as f64, c)).abs() < 1e-8, "n = {n}");
        // Against sqrt(n + i) the rounding of the start is the only error.
        assert!((y - im_root(n as f64, 1.0)).abs() < 1e-5, "n = {n}");
    }

    let o = bisbs(&[
        "backward",
        "--map",
        "iib_2",
        "--start",
        "0.7071067811865476+0.7071067811865476i",
        "--steps",
        "100",
    ]);
    for (n, y) in column(&stdout(&o), "height").iter().enumerate() {
        assert!((y - im_root(n as f64, 1.0)).abs() < 1e-8, "n = {n}");
    }
}

#[test]
fn verify_metric_exits_zero() {
    let o = bisbs(&["verify", "--suite", "metric"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn output_is_byte_stable() {
    for args in [
        &[
            "orbit", "--map", "iib_1", "--start", "0.5+2i", "--steps", "500",
        ][..],
        &[
            "backward", "--map", "iib_1", "--start", "2+3i", "--steps", "500",
        ][..],
        &["classify", "--map", "iib_2", "--json"][..],
        &["verify", "--suite", "metric", "--seed", "3", "--json"][..],
    ] {
        let (a, b) = (bisbs(args), bisbs(args));
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn conjugate_writes_field_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = bisbs(&[
        "conjugate",
        "--map",
        "ia_1",
        "--mode",
        "backward",
        "--depth",
        "64",
        "--grid",
        "-1,1,0.5,1.5,0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("re,im,val_re,val_im\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 5);
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("field.csv.json")).unwrap())
            .unwrap();
    for key in ["depth", "constant", "residual", "dropped"] {
        assert!(side.get(key).is_some(), "{key}");
    }
    assert_eq!(side["depth"], 64);
    assert!(side["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(bisbs(&["orbit", "--map", "ia_1"]).status.code(), Some(2));
    assert_eq!(
        bisbs(&["orbit", "--map", "no_such_map", "--start", "i"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bisbs(&["orbit", "--map", "ia_1", "--start", "1+"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bisbs(&["verify", "--suite", "bogus"]).status.code(),
        Some(2)
    );
    let o = bisbs(&["orbit", "--map", "ia_1", "--start", "1-2i"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not interior"));
    assert_eq!(
        bisbs(&["backward", "--map", "ia_empty", "--start", "i", "--steps", "50"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        bisbs(&[
            "backward",
            "--map",
            "ia_1",
            "--start",
            "i",
            "--step-bound",
            "1.5"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn config_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tol.cfg");
    std::fs::write(&cfg, "# tighter bound\nstep_bound = 0.9\n").unwrap();
    let o = bisbs(&[
        "classify",
        "--map",
        "ia_1",
        "--json",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tolerances"]["step_bound"], 0.9);

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let o = bisbs(&[
        "classify",
        "--map",
        "ia_1",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
