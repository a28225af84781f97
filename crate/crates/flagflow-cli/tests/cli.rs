//! End-to-end runs of the flagflow binary against the bundled configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flagflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, subcommand: &str, cfg: &str, extra: &[&str]) -> Output {
    let cfg_path = config(cfg);
    let mut args = vec![
        subcommand.to_string(),
        cfg_path.to_string_lossy().into_owned(),
        "--out".to_string(),
        dir.to_string_lossy().into_owned(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    Command::new(env!("CARGO_BIN_EXE_flagflow"))
        .args(&args)
        .output()
        .expect("binary runs")
}

fn read_csv(dir: &Path, command: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(dir.join(format!("{command}.csv"))).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.to_string()).collect())
        .collect()
}

fn read_json(dir: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn decompose_reports_jordan_parts_and_mu() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decompose", "fig1.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "decompose");
    assert_eq!(summary["mu"], serde_json::json!(3.0));
    assert_eq!(summary["eigenvalues"][0], serde_json::json!([2.0, -1.0]));
    assert_eq!(summary["multiplicities"][0], serde_json::json!([1, 2]));
    // The nilpotent part keeps the single shear entry.
    let rows = read_csv(dir.path(), "decompose");
    let shear: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "nilpotent" && r[4] != "0")
        .collect();
    assert_eq!(shear.len(), 1);
    assert_eq!(shear[0][2], "0");
    assert_eq!(shear[0][3], "1");
    assert_eq!(shear[0][4], "1");
    // E = 0 for this generator.
    assert!(rows.iter().all(|r| r[0] != "elliptic" || r[4] == "0"));
}

#[test]
fn decompose_zero_generator_warns_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decompose", "zero.json", &[]);
    assert!(out.status.success());
    let summary = read_json(dir.path(), "decompose");
    assert!(summary["mu"].is_null());
    assert!(summary["warnings"][0]
        .as_str()
        .unwrap()
        .contains("no positive restricted root"));
}

#[test]
fn decompose_rejects_ambiguous_spectra_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decompose", "ambiguous.json", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clustering"));
}

#[test]
fn components_table_for_the_projective_plane_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "components", "fig1.json", &[]);
    assert!(out.status.success());
    let rows = read_csv(dir.path(), "components");
    assert_eq!(rows.len(), 2);
    let attractor = rows.iter().find(|r| r[6] == "true").unwrap();
    assert_eq!(attractor[2], "0"); // dim_fix
    assert_eq!(attractor[3], "0"); // n_w
    assert_eq!(attractor[4], "2"); // dim_v_minus
    let repeller = rows.iter().find(|r| r[7] == "true").unwrap();
    assert_eq!(repeller[2], "1");
    assert_eq!(repeller[3], "1");
    assert_eq!(repeller[4], "0");
    assert!(
        repeller[5].contains("flag(1)"),
        "repeller carries an RP1 group"
    );
}

#[test]
fn components_regular_full_flag_has_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "components", "regular_sl3.json", &[]);
    assert!(out.status.success());
    let rows = read_csv(dir.path(), "components");
    assert_eq!(rows.len(), 6);
    let mut shifts: Vec<i64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    shifts.sort_unstable();
    assert_eq!(shifts, vec![0, 1, 1, 2, 2, 3]);
}

#[test]
fn components_torus_has_two_circles() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "components", "torus.json", &[]);
    assert!(out.status.success());
    let rows = read_csv(dir.path(), "components");
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[2], "1", "both components are one-dimensional circles");
    }
    let summary = read_json(dir.path(), "components");
    assert_eq!(summary["mu"], serde_json::json!(2.0));
}

#[test]
fn decay_verdicts_pass_on_the_projective_plane_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decay", "fig1.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "decay");
    assert_eq!(summary["all_pass"], serde_json::json!(true));
    for run in summary["runs"].as_array().unwrap() {
        for lam in run["lambda_emp"].as_array().unwrap() {
            assert!(lam.as_f64().unwrap() >= 2.7, "lambda_emp {lam} >= 2.7");
        }
    }
}

#[test]
fn decay_on_the_torus_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decay", "torus.json", &[]);
    assert!(out.status.success());
    let summary = read_json(dir.path(), "decay");
    assert_eq!(summary["all_pass"], serde_json::json!(true));
    for run in summary["runs"].as_array().unwrap() {
        assert_eq!(run["mu"], serde_json::json!(2.0));
        for lam in run["lambda_emp"].as_array().unwrap() {
            assert!(lam.as_f64().unwrap() >= 1.7);
        }
    }
}

#[test]
fn hyperbolic_only_decay_curves_are_linear() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decay", "fig1_hyperbolic_only.json", &[]);
    assert!(out.status.success());
    let summary = read_json(dir.path(), "decay");
    let rows = read_csv(dir.path(), "decay");
    // Check the least-squares residual of every sample curve.
    for run in summary["runs"].as_array().unwrap() {
        let comp = run["component"].as_i64().unwrap().to_string();
        let sign = run["sign"].as_str().unwrap();
        for (sid, (lam, c)) in run["lambda_emp"]
            .as_array()
            .unwrap()
            .iter()
            .zip(run["log_c"].as_array().unwrap())
            .enumerate()
        {
            let slope = -lam.as_f64().unwrap();
            let intercept = c.as_f64().unwrap();
            for row in rows
                .iter()
                .filter(|r| r[0] == comp && r[1] == sign && r[2] == sid.to_string())
            {
                let t: f64 = row[3].parse().unwrap();
                let y: f64 = row[4].parse().unwrap();
                assert!(
                    (slope * t + intercept - y).abs() <= 1e-8,
                    "linear fit residual at t={t}"
                );
            }
        }
    }
}

#[test]
fn decay_works_in_discrete_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "decay", "discrete_shear.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "decay");
    assert_eq!(summary["all_pass"], serde_json::json!(true));
    // mu = ln 2 for eigenvalues (2, 1, 1/2).
    let mu = summary["runs"][0]["mu"].as_f64().unwrap();
    assert!((mu - 2.0_f64.ln()).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for dir in [&dir1, &dir2] {
        let out = run_in(dir.path(), "decay", "sl4_seeded.json", &["--seed", "123"]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run_in(dir.path(), "components", "sl4_seeded.json", &[]);
        assert!(out.status.success());
        let out = run_in(dir.path(), "decompose", "sl4_seeded.json", &[]);
        assert!(out.status.success());
    }
    for file in [
        "decay.csv",
        "decay.json",
        "components.csv",
        "components.json",
        "decompose.csv",
        "decompose.json",
    ] {
        let a = std::fs::read(dir1.path().join(file)).unwrap();
        let b = std::fs::read(dir2.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} is byte-identical across runs");
    }
}

#[test]
fn portrait_of_the_projective_plane_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "portrait", "fig1.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "portrait");
    assert_eq!(summary["chart"], serde_json::json!("rp2-polar"));
    let rows = read_csv(dir.path(), "portrait");
    let kinds: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert!(kinds.contains(&"trajectory"));
    assert!(kinds.contains(&"component"));
    assert!(kinds.contains(&"ufixed"));
    // Every trajectory is labeled with the attractor component.
    let attractor = read_json(dir.path(), "portrait")["components"]
        .as_array()
        .unwrap()
        .iter()
        .position(|c| c["attractor"] == serde_json::json!(true))
        .unwrap()
        .to_string();
    for row in rows.iter().filter(|r| r[0] == "trajectory") {
        assert_eq!(row[5], attractor);
    }
    // The repeller line carries exactly one recurrent point.
    let repeller_id = summary["components"]
        .as_array()
        .unwrap()
        .iter()
        .position(|c| c["repeller"] == serde_json::json!(true))
        .unwrap()
        .to_string();
    let repeller_ufixed: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "ufixed" && r[1] == repeller_id)
        .collect();
    assert_eq!(repeller_ufixed.len(), 1);
}

#[test]
fn portrait_of_the_torus_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "portrait", "torus.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "portrait");
    assert_eq!(summary["chart"], serde_json::json!("torus-angles"));
    let rows = read_csv(dir.path(), "portrait");
    // One recurrent point per circle component.
    for id in ["0", "1"] {
        let count = rows
            .iter()
            .filter(|r| r[0] == "ufixed" && r[1] == id)
            .count();
        assert_eq!(count, 1, "component {id} has one recurrent point");
    }
}

#[test]
fn portrait_loci_are_a_stable_snapshot_across_nilpotent_parts() {
    // The zero-N variant shares H, so the component loci agree row by row;
    // repeated runs are byte-identical.
    let with_n = tempfile::tempdir().unwrap();
    let without_n = tempfile::tempdir().unwrap();
    let again = tempfile::tempdir().unwrap();
    assert!(run_in(with_n.path(), "portrait", "fig1.json", &[])
        .status
        .success());
    assert!(run_in(
        without_n.path(),
        "portrait",
        "fig1_hyperbolic_only.json",
        &[]
    )
    .status
    .success());
    assert!(run_in(again.path(), "portrait", "fig1.json", &[])
        .status
        .success());

    let loci = |dir: &Path| -> Vec<Vec<String>> {
        read_csv(dir, "portrait")
            .into_iter()
            .filter(|r| r[0] == "component")
            .collect()
    };
    assert_eq!(loci(with_n.path()), loci(without_n.path()));
    assert_eq!(
        std::fs::read(with_n.path().join("portrait.csv")).unwrap(),
        std::fs::read(again.path().join("portrait.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(with_n.path().join("portrait.json")).unwrap(),
        std::fs::read(again.path().join("portrait.json")).unwrap()
    );
}

#[test]
fn portrait_rejects_large_manifolds_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "portrait", "too_big.json", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("portrait range"));
}

#[test]
fn periodic_constant_coefficients_match_the_autonomous_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "periodic", "periodic_const.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "periodic");
    assert_eq!(summary["all_pass"], serde_json::json!(true));
    assert_eq!(summary["component_count"], serde_json::json!(2));
    assert_eq!(summary["suspended_dims"], serde_json::json!([2, 1]));
    let mu_rate = summary["mu_rate"].as_f64().unwrap();
    assert!((mu_rate - 3.0).abs() < 1e-7);

    // The component table agrees with the autonomous analysis row by row.
    let auto_dir = tempfile::tempdir().unwrap();
    let out = run_in(auto_dir.path(), "components", "fig1.json", &[]);
    assert!(out.status.success());
    let periodic_rows = read_csv(dir.path(), "periodic");
    let auto_rows = read_csv(auto_dir.path(), "components");
    assert_eq!(periodic_rows, auto_rows);
}

#[test]
fn periodic_zero_coefficients_give_one_component() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "periodic", "periodic_zero.json", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path(), "periodic");
    assert_eq!(summary["component_count"], serde_json::json!(1));
    assert!(summary["mu_rate"].is_null());
    assert_eq!(summary["decay"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_config_exits_2() {
    let out = run(&["components", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}
