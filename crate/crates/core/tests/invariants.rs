use std::sync::OnceLock;

use nalgebra::DVector;
use proptest::prelude::*;

use wallflow_core::config::{Drag, ExperimentConfig, ForceModelSpec};
use wallflow_core::diagnostics::{fit_decay, lyapunov_value, minimal_constant};
use wallflow_core::{experiment, CoupledSystem, ForceModel, Integrator, IntegratorConfig, StateVector};

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.run.n_plate = 3;
    c.run.m1 = 3;
    c.run.m3 = 3;
    c.run.plate_elements = 12;
    c.run.x3_elements = 10;
    c.run.k = 1.0;
    c.run.drag = Drag::Scalar(0.2);
    c
}

fn system() -> &'static CoupledSystem {
    static SYS: OnceLock<CoupledSystem> = OnceLock::new();
    SYS.get_or_init(|| experiment::assemble(&small()).unwrap())
}

fn state(sys: &CoupledSystem, a: &[f64], b: &[f64], w: &[f64], c0: f64) -> StateVector {
    StateVector {
        t: 0.0,
        alpha: DVector::from_column_slice(&a[..sys.nf]),
        beta: DVector::from_column_slice(&b[..sys.np]),
        beta_dot: DVector::from_column_slice(&w[..sys.np]),
        c0,
    }
}

fn coefs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn velocity_is_divergence_free(a in coefs(9), w in coefs(3), x1 in -1.0f64..2.0, x3 in -1.0f64..0.0) {
        let sys = system();
        let v = sys.disc.velocity(&a, &w);
        prop_assert!(v.divergence(x1, x3).abs() <= 1e-12);
    }

    #[test]
    fn trace_is_plate_velocity(a in coefs(9), w in coefs(3), x in 0.0f64..1.0) {
        let sys = system();
        let v = sys.disc.velocity(&a, &w).velocity(x, 0.0);
        prop_assert!(v[0].abs() <= 1e-12);
        prop_assert!((v[1] - sys.disc.plate_value(&w, x)).abs() <= 1e-10);
    }

    #[test]
    fn unforced_linear_energy_never_grows(a in coefs(9), b in coefs(3), w in coefs(3), c0 in -1.0f64..1.0) {
        let sys = system();
        let s0 = state(sys, &a, &b, &w, c0 * 1e-2);
        let cfg = IntegratorConfig::from_run(&small().run);
        let int = Integrator::new(sys, ForceModel::Linear, cfg).unwrap();
        let traj = int.simulate(&s0, 0.5, 1).unwrap();
        for p in traj.samples.windows(2) {
            prop_assert!(p[1].e0 <= p[0].e0 * (1.0 + 1e-12) + 1e-15);
            prop_assert!((p[1].mean_u - traj.samples[0].mean_u).abs() <= 1e-12);
        }
    }

    #[test]
    fn discrete_gradient_closes_potential(b0 in coefs(3), b1 in coefs(3), kirchhoff in any::<bool>()) {
        let plate = &system().disc.plate;
        let m = if kirchhoff {
            ForceModel::Kirchhoff { lambda: 3.0, cubic: 20.0 }
        } else {
            ForceModel::Berger { kappa: 2.0, gamma: 40.0 }
        };
        let g = m.discrete_gradient(plate, &b0, &b1, 0.0);
        let lhs: f64 = g.iter().zip(b1.iter().zip(&b0)).map(|(g, (x, y))| g * (x - y)).sum();
        let rhs = m.potential(plate, &b1, 0.0) - m.potential(plate, &b0, 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn lyapunov_at_zero_is_energy(a in coefs(9), b in coefs(3), w in coefs(3)) {
        let sys = system();
        let s = state(sys, &a, &b, &w, 0.0);
        prop_assert_eq!(lyapunov_value(sys, &s, 0.0), sys.energy0(&s));
    }

    #[test]
    fn decay_fit_recovers_exponentials(m in 0.1f64..10.0, g in 0.0f64..3.0) {
        let t: Vec<f64> = (0..40).map(|i| 0.05 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| m * (-g * t).exp()).collect();
        let f = fit_decay(&t, &y, (0.0, 2.0)).unwrap();
        prop_assert!((f.m - m).abs() <= 1e-9 * m);
        prop_assert!((f.gamma.unwrap() - g).abs() <= 1e-9);
    }

    #[test]
    fn certificate_constant_is_at_least_one(z in prop::collection::vec(0.0f64..1.0, 2..30), gamma in 0.0f64..5.0) {
        let t: Vec<f64> = (0..z.len()).map(|i| 0.1 * i as f64).collect();
        let g = vec![0.0; z.len()];
        let mut z = z;
        z[0] = 1.0;
        let m = minimal_constant(&t, &z, &g, gamma);
        prop_assert!(m >= 1.0);
        for (k, v) in z.iter().enumerate() {
            prop_assert!(*v <= m * (-gamma * t[k]).exp() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn berger_stationary_states_are_step_fixed_points() {
    let mut c = small();
    c.run.force_model = ForceModelSpec::Berger { kappa: 1.0, gamma: 150.0 };
    let sys = experiment::assemble(&c).unwrap();
    let model = experiment::force_model(&c);
    let set = wallflow_core::stationary::solve_stationary(&model, &sys.disc.plate, &Default::default());
    assert!(set.nontrivial().count() >= 2);
    let int = Integrator::new(&sys, model, IntegratorConfig::from_run(&c.run)).unwrap();
    for p in &set.points {
        let s0 = StateVector { beta: p.beta.clone(), ..StateVector::zeros(sys.nf, sys.np) };
        let (s1, _) = int.step(&s0).unwrap();
        assert!((&s1.beta - &p.beta).amax() <= 1e-9);
        assert!(s1.beta_dot.amax() <= 1e-9 && s1.alpha.amax() <= 1e-9);
        assert!(sys.mean_u(&s1).abs() <= 1e-12);
    }
}
