use std::fs;
use std::path::Path;
use std::process::Command;

fn small(extra_physics: &str, extra_disc: &str) -> String {
    format!(
        "[physics]\nnu = 1.0\n{extra_physics}\n\
         [discretization]\nn_plate = 3\nm1 = 3\nm3 = 3\nplate_elements = 12\nx3_elements = 10\ndt = 0.05\nt_final = 1.0\n{extra_disc}\n\
         [output]\nsample_every = 2\nmode_samples = 11\n"
    )
}

fn run(dir: &Path, args: &[&str], config: &str) -> (i32, String) {
    let cfg = dir.join("c.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_wallflow"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn simulate_linear_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = run(d.path(), &["simulate"], &small("drag_sigma = 0.1", ""));
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(d.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,E0,E,"));
    assert_eq!(csv.lines().count(), 1 + 11);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], "wallflow-summary/1");
    assert_eq!(summary["exit_status"], 0);
    assert!(summary["stability"]["satisfied"].as_bool().unwrap());
    assert!(summary["lyapunov"].is_object());
    assert!(summary["quasi_stability"].is_null());
    assert!(summary["stationary_distances"].is_null());
}

#[test]
fn zero_dt_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = run(d.path(), &["simulate"], &small("", "dt = 0.0").replace("dt = 0.05\n", ""));
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("dt"));
    assert!(!d.path().join("out/trajectory.csv").exists());
}

#[test]
fn unknown_key_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = run(d.path(), &["simulate"], &small("viscosity = 2.0", ""));
    assert_eq!(code, 2);
    assert!(err.contains("physics.viscosity"));
}

#[test]
fn newton_divergence_exits_with_solver_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small(
        "force_model = \"kirchhoff\"\nkirchhoff_lambda = 0.0\nkirchhoff_cubic = 1e4",
        "newton_max_iter = 1",
    )
    .replace("dt = 0.05", "dt = 50.0")
    .replace("t_final = 1.0", "t_final = 100.0")
    .replace("[output]", "[initial]\nu0_amplitude = 1.0\n[output]");
    let (code, err) = run(d.path(), &["simulate"], &cfg);
    assert_eq!(code, 3, "{err}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["exit_status"], 3);
    assert!(!d.path().join("out/trajectory.csv").exists());
}

#[test]
fn modes_has_one_column_per_mode_plus_x() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = run(d.path(), &["modes"], "");
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(d.path().join("out/modes.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 8 + 1);
    assert_eq!(header[0], "x");
    assert_eq!(csv.lines().count(), 1 + 101);
    let eig = fs::read_to_string(d.path().join("out/eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 1 + 8);
}

#[test]
fn stability_check_unsatisfied_without_simulation() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = run(d.path(), &["stability-check"], &small("k = 1e6", ""));
    assert_eq!(code, 0, "{err}");
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/stability.json")).unwrap()).unwrap();
    assert_eq!(rep["satisfied"], false);
    assert!(rep["margin"].as_f64().unwrap() < 0.0);
    assert!(!d.path().join("out/trajectory.csv").exists());
}

#[test]
fn sweep_over_drag_gives_stable_rows() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small("", "").replace("t_final = 1.0", "t_final = 10.0");
    let (code, err) = run(d.path(), &["sweep", "--sigma", "0.05,0.1,0.2", "--k", "0", "--threads", "2"], &cfg);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,nu,sigma,margin,satisfied,gamma,R2,status");
    assert_eq!(lines.len(), 4);
    for (line, sigma) in lines[1..].iter().zip(["0.05", "0.1", "0.2"]) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2], sigma);
        assert_eq!(f[4], "true");
        assert!(f[5].parse::<f64>().unwrap() > 0.0, "{line}");
        assert_eq!(f[7], "ok");
    }
    for i in 0..3 {
        assert!(d.path().join(format!("out/points/point_{i:03}.csv")).exists());
    }
}

#[test]
fn stationary_berger_writes_branch_table() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small("force_model = \"berger\"\nberger_kappa = 1.0\nberger_gamma = 200.0", "");
    let (code, err) = run(d.path(), &["stationary", "--levels", "4"], &cfg);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(d.path().join("out/branches.csv")).unwrap();
    assert!(csv.starts_with("Gamma,amplitude,residual\n"));
    assert!(csv.lines().count() >= 1 + 4);
    let set: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/stationary.json")).unwrap()).unwrap();
    assert!(set["points"].as_array().unwrap().len() >= 3);
}

#[test]
fn quasi_stability_writes_pareto_curve() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small("drag_sigma = 0.1\nforce_model = \"berger\"\nberger_kappa = 1.0\nberger_gamma = 5.0", "");
    let (code, err) = run(d.path(), &["quasi-stability", "--seed", "3"], &cfg);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(d.path().join("out/pareto.csv")).unwrap();
    assert!(csv.starts_with("gamma_star,M_R\n"));
    assert_eq!(csv.lines().count(), 1 + 41);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["quasi_stability"]["feasible"], true);
}

#[test]
fn missing_config_exits_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_wallflow"))
        .args(["simulate", "--config", "/nonexistent/c.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
