//! One-call helpers that turn an [`ExperimentConfig`] into assembled systems
//! and trajectories.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_from_config, initial_state_from_spec, CoupledSystem, StateVector};
use crate::config::ExperimentConfig;
use crate::diagnostics::difference_norm2;
use crate::error::{Error, Result};
use crate::plate_forces::ForceModel;
use crate::plate_modes::{clamped_raw_basis, zero_mean_eigenmodes, PlateBasis};
use crate::time_integration::{Integrator, IntegratorConfig, Trajectory};

/// Plate modes alone, on the same mesh the coupled system would use.
pub fn plate_basis(cfg: &ExperimentConfig) -> Result<PlateBasis> {
    let d = &cfg.domain;
    let space = clamped_raw_basis(d.plate_lo, d.plate_hi, cfg.run.plate_elements)?;
    zero_mean_eigenmodes(&space, cfg.run.n_plate, cfg.run.quad_order.max(8))
}

pub fn force_model(cfg: &ExperimentConfig) -> ForceModel {
    cfg.run.force_model.into()
}

pub fn assemble(cfg: &ExperimentConfig) -> Result<CoupledSystem> {
    assemble_from_config(&cfg.domain, &cfg.run)
}

pub fn initial_state(sys: &CoupledSystem, cfg: &ExperimentConfig, seed: u64) -> Result<StateVector> {
    initial_state_from_spec(sys, &cfg.initial, seed)
}

pub fn integrate(sys: &CoupledSystem, cfg: &ExperimentConfig, initial: &StateVector) -> Result<Trajectory> {
    let int = Integrator::new(sys, force_model(cfg), IntegratorConfig::from_run(&cfg.run))?;
    int.simulate(initial, cfg.run.t_final, cfg.output.sample_every)
}

/// Assemble, build the initial state and integrate to `t_final`.
pub fn simulate(cfg: &ExperimentConfig, seed: u64) -> Result<(CoupledSystem, Trajectory)> {
    let sys = assemble(cfg)?;
    let s0 = initial_state(&sys, cfg, seed)?;
    let traj = integrate(&sys, cfg, &s0)?;
    Ok((sys, traj))
}

/// `base` moved along a seeded random direction so that `‖Z0‖_H = size`.
/// The mean `c0` is left unchanged.
pub fn perturbed_state(sys: &CoupledSystem, base: &StateVector, size: f64, seed: u64) -> Result<StateVector> {
    if !(size >= 0.0 && size.is_finite()) {
        return Err(Error::InvalidArgument(format!("perturbation size {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0)));
    let mut dir = StateVector {
        t: base.t,
        alpha: draw(sys.nf),
        beta: draw(sys.np),
        beta_dot: draw(sys.np),
        c0: base.c0,
    };
    let zero = StateVector { c0: base.c0, ..StateVector::zeros(sys.nf, sys.np) };
    let n = difference_norm2(sys, &dir, &zero).sqrt();
    if n == 0.0 {
        return Err(Error::InvalidArgument("empty state space".into()));
    }
    let f = size / n;
    dir.alpha = &base.alpha + dir.alpha * f;
    dir.beta = &base.beta + dir.beta * f;
    dir.beta_dot = &base.beta_dot + dir.beta_dot * f;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            run: RunConfig {
                n_plate: 2,
                m1: 2,
                m3: 2,
                plate_elements: 8,
                x3_elements: 8,
                t_final: 0.1,
                ..RunConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn perturbation_has_requested_size() {
        let c = cfg();
        let sys = assemble(&c).unwrap();
        let s0 = initial_state(&sys, &c, 1).unwrap();
        let s1 = perturbed_state(&sys, &s0, 1e-3, 7).unwrap();
        let z = difference_norm2(&sys, &s0, &s1).sqrt();
        assert!((z - 1e-3).abs() <= 1e-12);
        assert_eq!(s1, perturbed_state(&sys, &s0, 1e-3, 7).unwrap());
    }

    #[test]
    fn simulate_is_deterministic() {
        let c = cfg();
        let (_, a) = simulate(&c, 3).unwrap();
        let (_, b) = simulate(&c, 3).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!((a.last().unwrap().t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn plate_basis_matches_system() {
        let c = cfg();
        let p = plate_basis(&c).unwrap();
        let sys = assemble(&c).unwrap();
        for (a, b) in p.eigenvalues.iter().zip(&sys.disc.plate.eigenvalues) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }
}
