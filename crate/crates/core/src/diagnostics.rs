//! Post-processing of trajectories: energies, the perturbed-energy Lyapunov
//! functional, exponential decay fits, distance to the stationary set and the
//! quasi-stability certificate search.

use nalgebra::DVector;
use serde::Serialize;

use crate::assembly::{CoupledSystem, StateVector};
use crate::error::{Error, Result};
use crate::plate_forces::ForceModel;
use crate::time_integration::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub e0: f64,
    pub pi: f64,
    pub e: f64,
    pub dissipation: f64,
    pub work: f64,
    pub max_residual: f64,
}

/// Energies of a single state (cumulants zero).
pub fn energy(sys: &CoupledSystem, state: &StateVector, model: &ForceModel) -> EnergyReport {
    let e0 = sys.energy0(state);
    let pi = model.potential(&sys.disc.plate, state.beta.as_slice(), state.c0);
    EnergyReport {
        e0,
        pi,
        e: e0 + pi,
        dissipation: 0.0,
        work: 0.0,
        max_residual: 0.0,
    }
}

/// Final energies of a trajectory with its cumulants.
pub fn trajectory_energy(traj: &Trajectory) -> Option<EnergyReport> {
    traj.last().map(|s| EnergyReport {
        e0: s.e0,
        pi: s.pi,
        e: s.e,
        dissipation: s.dissipation_cum,
        work: s.work_cum,
        max_residual: traj.max_residual,
    })
}

/// `(u, u_t)_Ω + (v, Ext[P̂u])_O`.
pub fn lyapunov_cross_term(sys: &CoupledSystem, state: &StateVector) -> f64 {
    let plate = &sys.disc.plate;
    let w = &state.beta_dot;
    let uut = state.beta.dot(w) + state.c0 * plate.e_mass.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>();
    let q = state.q();
    let ext_u = sys.field_mass.columns(sys.nf, sys.np) * &state.beta;
    uut + q.dot(&ext_u)
}

pub fn lyapunov_value(sys: &CoupledSystem, state: &StateVector, epsilon: f64) -> f64 {
    sys.energy0(state) + epsilon * lyapunov_cross_term(sys, state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub epsilon: f64,
    /// `min V/E0` over samples with `E0 > 0`.
    pub a0: f64,
    /// `max V/E0`.
    pub a1: f64,
    /// Sample-to-sample increases of `V`.
    pub violations: usize,
    pub sandwich_ok: bool,
    /// Largest `ε` found by bisection with no violations and `a0 > 0`.
    pub epsilon_threshold: Option<f64>,
}

struct LyapunovScan {
    a0: f64,
    a1: f64,
    violations: usize,
}

fn scan(sys: &CoupledSystem, traj: &Trajectory, epsilon: f64, cross: &[f64]) -> LyapunovScan {
    let mut a0 = f64::INFINITY;
    let mut a1 = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut prev: Option<f64> = None;
    for (s, c) in traj.samples.iter().zip(cross) {
        let v = s.e0 + epsilon * c;
        if s.e0 > 0.0 {
            a0 = a0.min(v / s.e0);
            a1 = a1.max(v / s.e0);
        }
        if let Some(p) = prev {
            if v > p + 1e-13 * (1.0 + p.abs()) {
                violations += 1;
            }
        }
        prev = Some(v);
    }
    let _ = sys;
    LyapunovScan { a0, a1, violations }
}

/// Samples `V = E0 + ε Ψ` along `traj`. The bisection searches `(0, 1]`
/// (expanding while the condition still holds) for the largest admissible `ε`.
pub fn lyapunov(sys: &CoupledSystem, traj: &Trajectory, epsilon: f64) -> LyapunovReport {
    let cross: Vec<f64> = traj.samples.iter().map(|s| lyapunov_cross_term(sys, &s.state)).collect();
    let s = scan(sys, traj, epsilon, &cross);
    let ok = |e: f64| {
        let r = scan(sys, traj, e, &cross);
        r.violations == 0 && r.a0 > 0.0
    };
    let epsilon_threshold = if ok(0.0) {
        let mut hi = 1.0;
        let mut lo = 0.0;
        while ok(hi) && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    } else {
        None
    };
    LyapunovReport {
        epsilon,
        a0: s.a0,
        a1: s.a1,
        violations: s.violations,
        sandwich_ok: s.a0 > 0.0 && s.a1.is_finite(),
        epsilon_threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub m: f64,
    /// Fitted rate, present only when `r2 >= 0.9`.
    pub gamma: Option<f64>,
    /// Negative slope of the regression regardless of quality.
    pub slope_rate: f64,
    pub r2: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl DecayFit {
    pub fn conclusive(&self) -> bool {
        self.gamma.is_some()
    }
}

/// Least squares fit of `ln y = ln M - γ t` over samples with `t` in `window`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateWindow(format!("{} samples in window", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateWindow(format!("value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt <= 0.0 {
        return Err(Error::DegenerateWindow("all samples at one time".into()));
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1.ln() - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let ss_tot: f64 = pts.iter().map(|p| (p.1.ln() - ym).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum();
    // constant data leaves only roundoff in ss_tot
    let flat = ss_tot <= 1e-24 * n * (1.0 + ym * ym);
    let r2 = if flat { 1.0 } else { 1.0 - ss_res / ss_tot };
    let rate = if flat || slope == 0.0 { 0.0 } else { -slope };
    Ok(DecayFit {
        m: intercept.exp(),
        gamma: (r2 >= 0.9).then_some(rate),
        slope_rate: rate,
        r2,
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
    })
}

/// Fit of `E0` over the second half of the trajectory.
pub fn fit_decay_tail(traj: &Trajectory) -> Result<DecayFit> {
    let times = traj.times();
    let e0: Vec<f64> = traj.samples.iter().map(|s| s.e0).collect();
    let (Some(first), Some(last)) = (times.first(), times.last()) else {
        return Err(Error::DegenerateWindow("empty trajectory".into()));
    };
    fit_decay(&times, &e0, (0.5 * (first + last), *last))
}

/// `min_{u*} (‖v‖² + ‖u_t‖² + ‖Δ(u - u*)‖²)^{1/2}` over stored `β*` (zero-mean, `c0 = 0`).
pub fn distance_to_stationary(sys: &CoupledSystem, state: &StateVector, set: &[DVector<f64>]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyStationarySet);
    }
    let q = state.q();
    let kinetic = (q.transpose() * &sys.mass * &q)[(0, 0)];
    let complement = state.c0 * state.c0 * sys.disc.plate.e_bending;
    let best = set
        .iter()
        .map(|b| {
            (&state.beta - b)
                .iter()
                .zip(sys.kp.iter())
                .map(|(d, k)| k * d * d)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok((kinetic + complement + best).max(0.0).sqrt())
}

/// `‖(v; u; u_t)‖²_H = ‖v‖² + ‖Δu‖² + ‖u_t‖²` of the difference of two states.
pub fn difference_norm2(sys: &CoupledSystem, a: &StateVector, b: &StateVector) -> f64 {
    let dq = a.q() - b.q();
    let db = &a.beta - &b.beta;
    let dc = a.c0 - b.c0;
    (dq.transpose() * &sys.mass * &dq)[(0, 0)]
        + db.iter().zip(sys.kp.iter()).map(|(d, k)| k * d * d).sum::<f64>()
        + dc * dc * sys.disc.plate.e_bending
}

/// Default `γ*` grid: 41 points log-spaced on `[1e-3, 10]`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..41).map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 40.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiStabilityReport {
    pub times: Vec<f64>,
    /// `‖Z(t)‖²_H`.
    pub z_norm2: Vec<f64>,
    /// `‖u1(t) - u2(t)‖²_Ω`.
    pub plate_l2: Vec<f64>,
    /// `(γ*, M_R)` for every grid point.
    pub pareto: Vec<(f64, f64)>,
    /// Largest `γ* > 0` with `M_R <= cap`.
    pub best: Option<(f64, f64)>,
    pub feasible: bool,
    pub cap: f64,
    /// `(γ, M)` with `‖Z(t)‖² <= M e^{-γ t} ‖Z0‖²` when a decay fit of `‖Z‖²` succeeds.
    pub exponential: Option<(f64, f64)>,
}

impl QuasiStabilityReport {
    pub fn write_pareto_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "gamma_star,M_R")?;
        for (g, m) in &self.pareto {
            writeln!(out, "{g},{m}")?;
        }
        Ok(())
    }
}

/// Smallest `M_R` with `z_k <= M_R (e^{-γ t_k} z_0 + ∫_0^{t_k} e^{-γ(t_k-τ)} g(τ) dτ)`
/// at all samples; the integral uses the trapezoid rule on the sample grid.
pub fn minimal_constant(times: &[f64], z: &[f64], g: &[f64], gamma: f64) -> f64 {
    let t0 = times[0];
    let mut integral = 0.0;
    let mut m = 1.0f64;
    for k in 0..times.len() {
        if k > 0 {
            let h = times[k] - times[k - 1];
            let decay = (-gamma * h).exp();
            integral = decay * integral + 0.5 * h * (decay * g[k - 1] + g[k]);
        }
        let bound = (-gamma * (times[k] - t0)).exp() * z[0] + integral;
        if z[k] > 0.0 {
            m = m.max(if bound > 0.0 { z[k] / bound } else { f64::INFINITY });
        }
    }
    m
}

/// `M = max_k z_k e^{γ (t_k - t_0)} / z_0`.
pub fn exponential_constant(times: &[f64], z: &[f64], gamma: f64) -> f64 {
    if z[0] <= 0.0 {
        return if z.iter().all(|v| *v == 0.0) { 1.0 } else { f64::INFINITY };
    }
    z.iter()
        .zip(times)
        .map(|(v, t)| v * (gamma * (t - times[0])).exp() / z[0])
        .fold(1.0, f64::max)
}

pub fn quasi_stability_check(
    sys: &CoupledSystem,
    first: &Trajectory,
    second: &Trajectory,
    gammas: &[f64],
    cap: f64,
) -> Result<QuasiStabilityReport> {
    if first.samples.len() != second.samples.len()
        || first.samples.iter().zip(&second.samples).any(|(a, b)| a.t != b.t)
    {
        return Err(Error::GridMismatch("sample times differ".into()));
    }
    if first.samples.is_empty() {
        return Err(Error::GridMismatch("empty trajectories".into()));
    }
    let times = first.times();
    let z: Vec<f64> = first
        .samples
        .iter()
        .zip(&second.samples)
        .map(|(a, b)| difference_norm2(sys, &a.state, &b.state))
        .collect();
    let plate_l2: Vec<f64> = first
        .samples
        .iter()
        .zip(&second.samples)
        .map(|(a, b)| (&a.state.beta - &b.state.beta).norm_squared())
        .collect();
    let pareto: Vec<(f64, f64)> = gammas.iter().map(|&g| (g, minimal_constant(&times, &z, &plate_l2, g))).collect();
    let best = pareto
        .iter()
        .filter(|(g, m)| *g > 0.0 && *m <= cap)
        .fold(None, |acc: Option<(f64, f64)>, &(g, m)| match acc {
            Some((bg, _)) if bg >= g => acc,
            _ => Some((g, m)),
        });
    let exponential = if z[0] > 0.0 && z.iter().all(|v| *v > 0.0) {
        let last = times[times.len() - 1];
        fit_decay(&times, &z, (0.5 * (times[0] + last), last))
            .ok()
            .and_then(|f| f.gamma)
            .filter(|g| *g > 0.0)
            .map(|g| (g, exponential_constant(&times, &z, g)))
    } else {
        None
    };
    Ok(QuasiStabilityReport {
        times,
        z_norm2: z,
        plate_l2,
        pareto,
        feasible: best.is_some(),
        best,
        cap,
        exponential,
    })
}
