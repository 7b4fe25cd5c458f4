mod common;

use std::fs;

use common::*;

#[test]
fn trajectory_matches_negative_cosine() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(dir.path(), &["trajectory", "--config", "trap.cfg", "--out", "o"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("o/trajectory.csv"));
    assert_eq!(rows.len(), 1201);
    for r in rows {
        assert!((r[1] + r[0].cos()).abs() < 1e-10);
        assert!((r[2] - r[0].sin()).abs() < 1e-10);
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["trajectory", "--config", "absent.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("config not found"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", &format!("{V0_CONFIG}colour = blue\n"));
    let out = run(dir.path(), &["trajectory", "--config", "trap.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn repeated_steps_flag_keeps_the_last_value() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(
        dir.path(),
        &["trajectory", "--config", "trap.cfg", "--out", "o", "--steps", "10", "--steps", "20"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("\"steps\":20"));
    assert_eq!(csv_rows(&dir.path().join("o/trajectory.csv")).len(), 21);
}

#[test]
fn stability_chart_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", &V0_CONFIG.replace("omega = 1", "omega = 2"));
    let out = run(
        dir.path(),
        &[
            "stability", "--config", "trap.cfg", "--out", "o", "--u-range", "0.25:2",
            "--v-range", "0:0.2", "--resolution", "8x2",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("o/stability.csv"));
    assert_eq!(rows.len(), 16);
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert_eq!(r[3], 1.0, "V = 0 cell at U = {} unstable", r[0]);
    }
    let cell = rows.iter().find(|r| r[0] == 1.0 && r[1] == 0.2).unwrap();
    assert_eq!(cell[3], 0.0);
    assert!(cell[2] > 2.0);
}

#[test]
fn stability_single_cell_and_empty_range() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let one = run(
        dir.path(),
        &["stability", "--config", "trap.cfg", "--out", "o", "--u-range", "1:2", "--v-range", "0:1", "--resolution", "1x1"],
    );
    assert!(one.status.success());
    assert_eq!(csv_rows(&dir.path().join("o/stability.csv")).len(), 1);
    let empty = run(
        dir.path(),
        &["stability", "--config", "trap.cfg", "--u-range", "2:1", "--v-range", "0:1"],
    );
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn qnd_check_reports_second_order_residual() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(dir.path(), &["qnd-check", "--config", "trap.cfg", "--out", "o"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(&dir.path().join("o/riccati.json"));
    assert_eq!(report["format_version"], 1);
    assert!(report["max_abs"].as_f64().unwrap() < 1e-4);
    let ratio = report["shrink_ratio"].as_f64().unwrap();
    assert!((3.6..4.4).contains(&ratio), "{ratio}");
    for r in csv_rows(&dir.path().join("o/qnd.csv")) {
        assert!((r[1] - r[0].tan()).abs() < 1e-6);
        assert_eq!(r[3], 1.0);
    }
}

#[test]
fn zero_record_gives_unit_probability() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(
        dir.path(),
        &["probability", "--config", "trap.cfg", "--out", "o", "--record", "zero", "--delta-a", "0.01,0.5,3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for r in csv_rows(&dir.path().join("o/sweep.csv")) {
        assert_eq!(r[3], 0.0);
    }
    let doc = json(&dir.path().join("o/probability.json"));
    assert_eq!(doc["results"].as_array().unwrap().len(), 3);
    assert_eq!(doc["results"][0]["T"], 1.2);
}

#[test]
fn identical_records_give_zero_ratio() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(
        dir.path(),
        &[
            "probability", "--config", "trap.cfg", "--out", "o", "--record", "sine:0.7,3,0.1",
            "--record-b", "sine:0.7,3,0.1", "--delta-a", "0.2,1,5",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("o/ratio.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn log_probability_falls_without_bound_as_resolution_sharpens() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(
        dir.path(),
        &[
            "probability", "--config", "trap.cfg", "--out", "o", "--record", "constant:1",
            "--delta-a", "0.1,0.03,0.01,0.003,0.001",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("o/sweep.csv"));
    assert!(rows.windows(2).all(|w| w[1][3] < w[0][3]));
    assert!(rows.last().unwrap()[3] < -1e5);
    assert_eq!(json(&dir.path().join("o/probability.json"))["log_p_increasing_in_delta_a"], true);
}

#[test]
fn amplitude_squared_source_doubles_second_exponent() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    for (out_dir, source) in [("d", "density"), ("a", "amplitude-squared")] {
        let out = run(
            dir.path(),
            &[
                "probability", "--config", "trap.cfg", "--out", out_dir, "--record", "matched:-0.5,0.3",
                "--delta-a", "0.7", "--source", source,
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let d = csv_rows(&dir.path().join("d/sweep.csv"));
    let a = csv_rows(&dir.path().join("a/sweep.csv"));
    assert!((a[0][1] - d[0][1]).abs() <= 1e-12 * d[0][1].abs());
    assert!((a[0][2] - 2.0 * d[0][2]).abs() <= 1e-10 * d[0][2].abs());
}

#[test]
fn oracle_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let out = run(
        dir.path(),
        &["oracle", "--config", "trap.cfg", "--out", "o", "--record", "constant:0.3", "--delta-a", "2,1e4"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&dir.path().join("o/oracle.json"));
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for key in ["N", "dt", "delta_a", "log_amp_lattice_re", "log_amp_lattice_im", "log_p_rpi", "discrepancy"] {
        assert!(reports[0].get(key).is_some(), "{key}");
    }
    assert_eq!(reports[0]["N"], 1200);
    assert_eq!(doc["manifest"]["q_start"], 0.0);

    let with = run(
        dir.path(),
        &["probability", "--config", "trap.cfg", "--out", "p", "--record", "constant:0.3", "--delta-a", "2,1e4", "--oracle"],
    );
    assert!(with.status.success());
    assert_eq!(json(&dir.path().join("p/oracle.json"))["reports"], doc["reports"]);
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    let args = |threads: &'static str| {
        vec![
            "probability", "--config", "trap.cfg", "--out", "o", "--record", "sine:1,2,0",
            "--record-b", "constant:0.5", "--delta-a", "0.05,0.2,1,4,16,64", "--threads", threads,
        ]
    };
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        assert!(run(dir.path(), &args(threads)).status.success());
        let files: Vec<Vec<u8>> = ["sweep.csv", "ratio.csv", "probability.json"]
            .iter()
            .map(|f| fs::read(dir.path().join("o").join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_record_and_delta_a_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "trap.cfg", V0_CONFIG);
    for args in [
        vec!["probability", "--config", "trap.cfg", "--record", "ramp:1", "--delta-a", "1"],
        vec!["probability", "--config", "trap.cfg", "--delta-a", "-1"],
        vec!["probability", "--config", "trap.cfg"],
    ] {
        let out = run(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}
