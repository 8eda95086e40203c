use std::path::Path;
use std::process::{Command, Output};

fn nvnmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvnmr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn detect_time_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = nvnmr(&["detect-time", "--output", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("\nz_min_m,t_detect_dd_s,t_detect_ent_s,ratio\n"));
}

#[test]
fn doubling_z_min_scales_separable_column_by_512() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_config(
        dir.path(),
        "base.json",
        r#"{"z_min": {"start_m": 2e-7, "stop_m": 1e-6, "points": 5, "spacing": "linear"}}"#,
    );
    let doubled = write_config(
        dir.path(),
        "doubled.json",
        r#"{"z_min": {"start_m": 4e-7, "stop_m": 2e-6, "points": 5, "spacing": "linear"}}"#,
    );
    let a = rows(&stdout(&nvnmr(&["detect-time", "--config", &base])));
    let b = rows(&stdout(&nvnmr(&["detect-time", "--config", &doubled])));
    assert_eq!(a.len(), 5);
    for (x, y) in a.iter().zip(&b) {
        // six significant digits in the file
        assert!(
            (y[1] / x[1] / 512.0 - 1.0).abs() < 2e-6,
            "{} {}",
            x[1],
            y[1]
        );
    }
}

#[test]
fn config_output_key_is_used_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config.csv");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"preset": "NV2", "output": {:?}}}"#,
            target.to_str().unwrap()
        ),
    );
    assert!(nvnmr(&["detect-time", "--config", &cfg]).status.success());
    assert!(std::fs::read_to_string(&target)
        .unwrap()
        .contains("preset=NV2"));
    let flag = dir.path().join("flag.csv");
    assert!(nvnmr(&[
        "detect-time",
        "--config",
        &cfg,
        "--output",
        flag.to_str().unwrap()
    ])
    .status
    .success());
    assert!(flag.exists());
}

#[test]
fn gamma_convention_flag_overrides_config() {
    let out = stdout(&nvnmr(&["detect-time", "--gamma-convention", "angular"]));
    assert!(out.contains("gamma_convention=angular"));
    let cyclic = rows(&stdout(&nvnmr(&["detect-time"])));
    let angular = rows(&out);
    // the ratio column does not depend on the convention
    assert_eq!(cyclic[10][3], angular[10][3]);
    assert!(angular[10][2] < cyclic[10][2]);
}

#[test]
fn config_errors_exit_with_two_and_list_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"preset": "custom", "n_dd": 2, "z_min": {"start_m": 1e-6, "stop_m": 1e-7}}"#,
    );
    let out = nvnmr(&["detect-time", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for key in ["t2_echo_s", "rho_nv_per_cm3", "n_dd", "start_m"] {
        assert!(err.contains(key), "{key} missing in {err}");
    }

    let unknown = write_config(dir.path(), "unknown.json", r#"{"presets": "NV1"}"#);
    let out = nvnmr(&["detect-time", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("presets"));

    let out = nvnmr(&["detect-time", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn n_dd_sweep_emits_four_blocks() {
    let out = stdout(&nvnmr(&["detect-time", "--n-dd-sweep"]));
    let body = rows(&out);
    assert_eq!(body.len(), 200);
    let counts: Vec<f64> = body.iter().map(|r| r[0]).collect();
    assert_eq!(
        (counts[0], counts[50], counts[100], counts[150]),
        (3.0, 15.0, 63.0, 255.0)
    );
    // same z_min, n_DD 3 → 15: separable time drops by 25
    assert!((body[0][2] / body[50][2] - 25.0).abs() < 1e-4);
}

#[test]
fn optimize_geometry_prints_optima_deterministically() {
    let sep = stdout(&nvnmr(&["optimize-geometry", "sep"]));
    assert!(sep.contains("sep,corrected,1.160"), "{sep}");
    assert_eq!(sep, stdout(&nvnmr(&["optimize-geometry", "sep"])));
    let ent = stdout(&nvnmr(&["optimize-geometry", "ent"]));
    assert!(ent.contains("ent,corrected,5.05"), "{ent}");
    let printed = stdout(&nvnmr(&[
        "optimize-geometry",
        "ent",
        "--f-ent-variant",
        "printed",
    ]));
    assert!(printed.contains("ent,printed,") && printed != ent);
}

#[test]
fn constants_report_lists_published_values() {
    let out = stdout(&nvnmr(&["constants"]));
    assert!(
        out.contains("5.360000e-2") && out.contains("1.070000e-2"),
        "{out}"
    );
    assert!(out.contains("c_DD (resonance)") && out.contains("c_ent (free-tau)"));
}

#[test]
fn fast_validation_exits_zero() {
    let out = nvnmr(&["validate", "--depth", "fast"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("overall: PASS"));
    assert!(text.contains("5.360000e-2") && text.contains("1.070000e-2"));
}
