use std::path::Path;
use std::process::{Command, Output};

use dea_pkm::csvio;

fn dea(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dea-pkm"))
        .args(args)
        .current_dir(dir)
        .env_remove("DEA_PKM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SHORT: &[&str] = &["--cycles", "1", "--frequency", "1/2", "--dwell", "0.5", "--ramp", "1"];

#[test]
fn generated_path_round_trips_through_inverse_and_force() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut gen = vec!["gen-traj", "-o", "traj.csv", "--payload-g", "1"];
    gen.extend_from_slice(SHORT);
    let o = dea(d, &gen);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("config hash="));
    let phases: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(phases["phases"][3]["phase"], "circle");

    let o = dea(d, &["inverse", "--trajectory", "traj.csv", "-o", "v.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dea(d, &["predict-force", "--trajectory", "traj.csv", "--voltage", "v.csv", "-o", "f.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let traj = csvio::read_trajectory(csvio::open(&d.join("traj.csv")).unwrap()).unwrap();
    let force = csvio::read_force(csvio::open(&d.join("f.csv")).unwrap()).unwrap();
    assert_eq!(force.t, traj.t);
    for (f, p) in force.total.iter().zip(&traj.payload) {
        assert!((f - p).norm() <= 1e-3 * p.norm(), "{f} vs {p}");
    }
}

#[test]
fn out_of_reach_path_names_chain_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut gen = vec!["gen-traj", "-o", "far.csv", "--radius-mm", "60"];
    gen.extend_from_slice(SHORT);
    assert!(dea(d, &gen).status.success());
    let o = dea(d, &["inverse", "--trajectory", "far.csv", "-o", "v.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let line = stderr(&o).lines().last().unwrap().to_string();
    assert!(line.starts_with("error kind=OutOfWorkspace chain="), "{line}");
    assert!(line.contains(" sample="), "{line}");
    assert!(!d.join("v.csv").exists());
}

#[test]
fn report_on_identical_files_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut gen = vec!["gen-traj", "-o", "a.csv"];
    gen.extend_from_slice(SHORT);
    assert!(dea(d, &gen).status.success());
    let o = dea(d, &["report", "--predicted", "a.csv", "--reference", "a.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for axis in ["x", "y", "z"] {
        for key in ["max", "rmse", "rel_max", "rel_rmse"] {
            assert_eq!(r[axis][key], 0.0, "{axis}.{key}");
        }
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dea(dir.path(), &["gen-traj"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dea(dir.path(), &["gen-traj", "-o", "x.csv", "--frequency", "10"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("error kind=Usage"));
}

#[test]
fn config_from_environment_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("robot.toml"), "[geometry]\nm_ee_g = 5\n").unwrap();
    let base = stderr(&dea(d, &["ik", "--position", "0", "0", "-0.01"]));
    let o = Command::new(env!("CARGO_BIN_EXE_dea-pkm"))
        .args(["ik", "--position", "0", "0", "-0.01"])
        .current_dir(d)
        .env("DEA_PKM_CONFIG", "robot.toml")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let with_env = stderr(&o);
    assert!(with_env.contains("source=robot.toml"));
    assert_ne!(base.lines().next(), with_env.lines().next());
    let snap: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(snap["chains"].as_array().unwrap().len(), 3);

    std::fs::write(d.join("typo.toml"), "[geometry]\nq_milimetres = 5\n").unwrap();
    let o = dea(d, &["--config", "typo.toml", "ik", "--position", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kind=Config"));
}

#[test]
fn film_calibration_writes_fitted_config_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut gen = vec!["gen-traj", "-o", "t.csv", "--payload-g", "1"];
    gen.extend_from_slice(SHORT);
    assert!(dea(d, &gen).status.success());
    assert!(dea(d, &["inverse", "--trajectory", "t.csv", "-o", "v.csv"]).status.success());
    std::fs::write(d.join("start.toml"), "[film]\nmu_pa = [180000, 60000, 36000, 21600, 12960, 7776, 4665.6]\n").unwrap();
    let o = dea(
        d,
        &[
            "--config", "start.toml", "calibrate-film", "--trajectory", "t.csv", "--voltage", "v.csv", "--free",
            "mu1", "--out-config", "fit.toml", "--residuals", "r.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mu1 = r["fitted"]["mu1"].as_f64().unwrap();
    assert!((mu1 / 150e3 - 1.0).abs() < 0.01, "{mu1}");
    let cfg = dea_pkm::EngineConfig::load(&d.join("fit.toml")).unwrap();
    assert_eq!(cfg.film.mu[0], mu1);
    let res = csvio::read_table(csvio::open(&d.join("r.csv")).unwrap(), &["t", "r1", "r2", "r3"]).unwrap();
    assert!(!res.is_empty());
}
