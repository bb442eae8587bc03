//! Subcommands of the `wallflow` binary. Every command reads one config file,
//! writes CSV and JSON files into an output directory and returns an exit code:
//! 0 on success, 2 for invalid input, 3 when a solver fails.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use wallflow_core::config::{Drag, ExperimentConfig, ForceModelSpec};
use wallflow_core::diagnostics::{self, distance_to_stationary, fit_decay_tail, lyapunov, quasi_stability_check};
use wallflow_core::stationary::{self, branch_table_for, solve_stationary};
use wallflow_core::{
    experiment, parse_config, DecayFit, EnergyReport, Error, LyapunovReport, QuasiStabilityReport, StabilityReport,
    StationaryOptions,
};

pub const SCHEMA_VERSION: &str = "wallflow-summary/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::NonzeroMean { .. } | Error::OutsideChannel { .. } => {
                EXIT_INVALID
            }
            _ => EXIT_SOLVER,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_SOLVER, message: format!("{}: {e}", path.display()) }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

pub fn load_config(path: &Path) -> CmdResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn prepare_out(dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CmdResult<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| io_failure(path, e))?;
    fs::write(path, buf).map_err(|e| io_failure(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: EXIT_SOLVER, message: e.to_string() })?;
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationaryDistances {
    pub set_size: usize,
    pub t_half: f64,
    pub distance_half: f64,
    pub t_final: f64,
    pub distance_final: f64,
}

/// Machine-readable record of one command. Reports are `null` when the
/// corresponding analysis did not run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub stability: Option<StabilityReport>,
    pub energy: Option<EnergyReport>,
    pub decay_fit: Option<DecayFit>,
    pub lyapunov: Option<LyapunovReport>,
    pub quasi_stability: Option<QuasiStabilityReport>,
    pub stationary_distances: Option<StationaryDistances>,
    pub notes: Vec<String>,
    pub exit_status: i32,
    pub message: Option<String>,
}

impl RunSummary {
    fn new(command: &str, seed: u64, config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            config,
            stability: None,
            energy: None,
            decay_fit: None,
            lyapunov: None,
            quasi_stability: None,
            stationary_distances: None,
            notes: Vec::new(),
            exit_status: EXIT_OK,
            message: None,
        }
    }
}

/// Runs `body` and writes `summary.json` whatever the outcome.
fn with_summary(
    out: &Path,
    mut summary: RunSummary,
    body: impl FnOnce(&mut RunSummary) -> CmdResult<()>,
) -> CmdResult<()> {
    prepare_out(out)?;
    let result = body(&mut summary);
    if let Err(f) = &result {
        summary.exit_status = f.code;
        summary.message = Some(f.message.clone());
    }
    write_json(&out.join("summary.json"), &summary)?;
    result
}

fn nonlinear(cfg: &ExperimentConfig) -> bool {
    !matches!(cfg.run.force_model, ForceModelSpec::Linear)
}

fn unforced(cfg: &ExperimentConfig) -> bool {
    !cfg.run.forcing.fluid.is_active() && !cfg.run.forcing.plate.is_active()
}

/// `trajectory.csv` and `summary.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, seed: u64) -> CmdResult<()> {
    with_summary(out, RunSummary::new("simulate", seed, *cfg), |s| {
        let sys = experiment::assemble(cfg)?;
        s.stability = Some(sys.disc.stability()?);
        let s0 = experiment::initial_state(&sys, cfg, seed)?;
        let traj = experiment::integrate(&sys, cfg, &s0)?;
        write_file(&out.join("trajectory.csv"), |b| traj.write_csv(b))?;
        s.energy = diagnostics::trajectory_energy(&traj);
        match fit_decay_tail(&traj) {
            Ok(f) => s.decay_fit = Some(f),
            Err(e) => s.notes.push(format!("decay fit skipped: {e}")),
        }
        if !nonlinear(cfg) && unforced(cfg) {
            s.lyapunov = Some(lyapunov(&sys, &traj, 1e-3));
        }
        if nonlinear(cfg) && unforced(cfg) {
            let model = experiment::force_model(cfg);
            let set = solve_stationary(&model, &sys.disc.plate, &StationaryOptions { seed, ..Default::default() });
            let betas = set.betas();
            let last = traj.last().expect("trajectory keeps its endpoints");
            let t_half = 0.5 * (traj.samples[0].t + last.t);
            let half = traj
                .samples
                .iter()
                .min_by(|a, b| (a.t - t_half).abs().total_cmp(&(b.t - t_half).abs()))
                .expect("nonempty");
            s.stationary_distances = Some(StationaryDistances {
                set_size: betas.len(),
                t_half: half.t,
                distance_half: distance_to_stationary(&sys, &half.state, &betas)?,
                t_final: last.t,
                distance_final: distance_to_stationary(&sys, &last.state, &betas)?,
            });
        }
        Ok(())
    })
}

/// `modes.csv` (x, xi_1, ..., xi_n) and `eigenvalues.csv` (j, kappa).
pub fn cmd_modes(cfg: &ExperimentConfig, out: &Path) -> CmdResult<()> {
    prepare_out(out)?;
    let plate = experiment::plate_basis(cfg)?;
    let n = plate.len();
    let samples = cfg.output.mode_samples.max(2);
    let (a, b) = (cfg.domain.plate_lo, cfg.domain.plate_hi);
    write_file(&out.join("modes.csv"), |w| {
        use std::io::Write;
        let head: Vec<String> = std::iter::once("x".to_string()).chain((1..=n).map(|j| format!("xi_{j}"))).collect();
        writeln!(w, "{}", head.join(","))?;
        let units: Vec<_> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                plate.function(&e, 0.0)
            })
            .collect();
        for i in 0..samples {
            let x = a + (b - a) * i as f64 / (samples - 1) as f64;
            let mut row = vec![x.to_string()];
            row.extend(units.iter().map(|u| plate.eval(u, x)[0].to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    write_file(&out.join("eigenvalues.csv"), |w| {
        use std::io::Write;
        writeln!(w, "j,kappa")?;
        for (j, k) in plate.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{}", j + 1, k)?;
        }
        Ok(())
    })
}

/// `branches.csv` (Gamma, amplitude, residual) over `levels` equally spaced
/// values of the destabilizing parameter up to its configured value, and
/// `stationary.json` with the states at the configured value.
pub fn cmd_stationary(cfg: &ExperimentConfig, out: &Path, seed: u64, levels: usize) -> CmdResult<()> {
    prepare_out(out)?;
    let plate = experiment::plate_basis(cfg)?;
    let model = experiment::force_model(cfg);
    let opts = StationaryOptions { seed, ..Default::default() };
    let levels = levels.max(1);
    let rows = branch_table_for(&model, &plate, levels, &opts);
    write_file(&out.join("branches.csv"), |w| stationary::write_branch_csv(&rows, w))?;
    let set = solve_stationary(&model, &plate, &opts);
    write_json(&out.join("stationary.json"), &set)
}

/// `stability.json` with the margin formula; no simulation.
pub fn cmd_stability_check(cfg: &ExperimentConfig, out: &Path) -> CmdResult<StabilityReport> {
    prepare_out(out)?;
    let disc = wallflow_core::Discretization::new(&cfg.domain, &cfg.run)?;
    let report = disc.stability()?;
    write_json(&out.join("stability.json"), &report)?;
    Ok(report)
}

/// Runs the configured initial data and a copy perturbed by `z0` in the
/// energy norm; writes `pareto.csv` (gamma_star, M_R) and `summary.json`.
pub fn cmd_quasi_stability(cfg: &ExperimentConfig, out: &Path, seed: u64, z0: f64, cap: f64) -> CmdResult<()> {
    with_summary(out, RunSummary::new("quasi-stability", seed, *cfg), |s| {
        let sys = experiment::assemble(cfg)?;
        s.stability = Some(sys.disc.stability()?);
        let a0 = experiment::initial_state(&sys, cfg, seed)?;
        let b0 = experiment::perturbed_state(&sys, &a0, z0, seed.wrapping_add(1))?;
        let a = experiment::integrate(&sys, cfg, &a0)?;
        let b = experiment::integrate(&sys, cfg, &b0)?;
        let report = quasi_stability_check(&sys, &a, &b, &diagnostics::default_gamma_grid(), cap)?;
        write_file(&out.join("pareto.csv"), |w| report.write_pareto_csv(w))?;
        s.energy = diagnostics::trajectory_energy(&a);
        s.quasi_stability = Some(report);
        Ok(())
    })
}

/// Parameter lists of a sweep; empty lists keep the configured value.
#[derive(Debug, Clone, Default)]
pub struct SweepSpec {
    pub k: Vec<f64>,
    pub nu: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub nu: f64,
    pub sigma: f64,
    pub margin: Option<f64>,
    pub satisfied: Option<bool>,
    pub gamma: Option<f64>,
    pub r2: Option<f64>,
    pub status: String,
}

pub const SWEEP_HEADER: &str = "k,nu,sigma,margin,satisfied,gamma,R2,status";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k,
            self.nu,
            self.sigma,
            opt(self.margin),
            opt(self.satisfied),
            opt(self.gamma),
            opt(self.r2),
            self.status
        )
    }
}

/// Points in `k`-major, then `nu`, then `sigma` order.
pub fn sweep_points(cfg: &ExperimentConfig, spec: &SweepSpec) -> Vec<ExperimentConfig> {
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let base_sigma = match cfg.run.drag {
        Drag::Scalar(s) => Some(s),
        Drag::Matrix(_) => None,
    };
    let mut pts = Vec::new();
    for k in or(&spec.k, cfg.run.k) {
        for nu in or(&spec.nu, cfg.run.nu) {
            let sigmas: Vec<Option<f64>> =
                if spec.sigma.is_empty() { vec![base_sigma] } else { spec.sigma.iter().map(|s| Some(*s)).collect() };
            for sigma in sigmas {
                let mut c = *cfg;
                c.run.k = k;
                c.run.nu = nu;
                if let Some(s) = sigma {
                    c.run.drag = Drag::Scalar(s);
                }
                pts.push(c);
            }
        }
    }
    pts
}

fn sweep_point(cfg: &ExperimentConfig, seed: u64, trajectory: &Path) -> SweepRow {
    let sigma = {
        let m = cfg.run.drag.matrix();
        let r = 0.5 * (m[0][1] + m[1][0]);
        0.5 * (m[0][0] + m[1][1]) - (0.25 * (m[0][0] - m[1][1]).powi(2) + r * r).sqrt()
    };
    let mut row = SweepRow {
        k: cfg.run.k,
        nu: cfg.run.nu,
        sigma,
        margin: None,
        satisfied: None,
        gamma: None,
        r2: None,
        status: String::new(),
    };
    let diags = wallflow_core::validate(cfg);
    if !diags.is_empty() {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        row.status = format!("invalid: {}", msg.join("; ").replace(',', ";"));
        return row;
    }
    let mut run = || -> wallflow_core::Result<()> {
        let sys = experiment::assemble(cfg)?;
        let st = sys.disc.stability()?;
        row.margin = Some(st.margin);
        row.satisfied = Some(st.satisfied);
        if !st.satisfied {
            row.status = "skipped".into();
            return Ok(());
        }
        let s0 = experiment::initial_state(&sys, cfg, seed)?;
        let traj = experiment::integrate(&sys, cfg, &s0)?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).and_then(|_| fs::write(trajectory, buf)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let fit = fit_decay_tail(&traj)?;
        row.gamma = fit.gamma;
        row.r2 = Some(fit.r2);
        row.status = if fit.conclusive() { "ok".into() } else { "inconclusive".into() };
        Ok(())
    };
    if let Err(e) = run() {
        row.status = format!("failed: {}", e.to_string().replace(',', ";"));
    }
    row
}

/// Runs every point on a pool of `threads` workers (0 = all cores). Each point
/// writes `points/point_NNN.csv`; rows are merged into `sweep.csv` in point order.
pub fn cmd_sweep(cfg: &ExperimentConfig, spec: &SweepSpec, out: &Path, seed: u64, threads: usize) -> CmdResult<Vec<SweepRow>> {
    use rayon::prelude::*;
    let points_dir = out.join("points");
    prepare_out(&points_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure { code: EXIT_SOLVER, message: e.to_string() })?;
    let pts = sweep_points(cfg, spec);
    let files: Vec<PathBuf> = (0..pts.len()).map(|i| points_dir.join(format!("point_{i:03}.csv"))).collect();
    let rows: Vec<SweepRow> =
        pool.install(|| pts.par_iter().zip(&files).map(|(c, f)| sweep_point(c, seed, f)).collect());
    write_file(&out.join("sweep.csv"), |w| {
        use std::io::Write;
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &rows {
            writeln!(w, "{}", r.csv())?;
        }
        Ok(())
    })?;
    Ok(rows)
}
