//! The coupled Galerkin system in the unknowns `(α, β, β̇)`.
//!
//! The velocity is `v = Σ α_i ψ_i + Σ β̇_j φ_j` with `φ_j = Ext[ξ_j]`, so its
//! trace on the plate is `Σ β̇_j ξ_j` by construction. Writing
//! `q = (α, β̇)`, the semi-discrete equations are
//!
//! ```text
//! M q̇ = -D q - Pᵀ (K_p β + F(β, c0)) + l(t),    β̇ = P q,
//! ```
//!
//! with `M = [[M_ff, M_fe], [M_ef, M_ee + I]]`, `D = ν K + L0` over the
//! combined family `(ψ, φ)`, `K_p = diag(κ_j)` and `P` the plate selector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::base_flow::{friedrichs_poincare_constant, stability_margin, BaseFlow, StabilityReport};
use crate::config::{DomainSpec, Forcing, InitialSpec, RunConfig};
use crate::error::{Error, Result};
use crate::extension::{assemble_coupling, CouplingForms, ExtensionOperator};
use crate::fields::{assemble_forms, ChannelGrid, FlowWeights, StreamProduct, VelocityField};
use crate::fluid_basis::{build_stream_basis, StreamBasis};
use crate::hermite::ClampedSpace;
use crate::linalg::spd_condition;
use crate::plate_forces::ForceModel;
use crate::plate_modes::{zero_mean_eigenmodes, PlateBasis, PlateFunction};

/// Grids, bases, extension and combined forms for one parameter set.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: DomainSpec,
    pub grid: ChannelGrid,
    pub plate: PlateBasis,
    pub fluid: StreamBasis,
    pub ext: ExtensionOperator,
    pub flow: BaseFlow,
    pub nu: f64,
    pub coupling: CouplingForms,
    /// `∫ ξ_j`; zero up to roundoff.
    pub mode_means: Vec<f64>,
}

impl Discretization {
    /// Uses `n_plate`, `m1`, `m3`, the mesh sizes and the quadrature order of
    /// `run`. Zero basis sizes are accepted for decoupled limits.
    pub fn new(domain: &DomainSpec, run: &RunConfig) -> Result<Self> {
        let grid = ChannelGrid::new(domain, run.plate_elements, run.x3_elements, run.quad_order)?;
        let plate_space = ClampedSpace::new(grid.plate_mesh.clone())?;
        let plate = zero_mean_eigenmodes(&plate_space, run.n_plate, run.quad_order.max(8))?;
        let fluid = build_stream_basis(run.m1, run.m3, &grid)?;
        let ext = ExtensionOperator::new(&plate, &grid);
        let flow = BaseFlow::new(run, domain);
        let coupling = assemble_coupling(&ext, &fluid, &grid, &flow)?;
        let mode_means = plate
            .modes
            .iter()
            .map(|m| m.iter().zip(plate.matrices.mean.iter()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(Self {
            domain: *domain,
            grid,
            plate,
            fluid,
            ext,
            flow,
            nu: run.nu,
            coupling,
            mode_means,
        })
    }

    pub fn nf(&self) -> usize {
        self.fluid.len()
    }

    pub fn np(&self) -> usize {
        self.plate.len()
    }

    /// `(ψ_1, …, ψ_nf, φ_1, …, φ_np)`.
    pub fn family(&self) -> Vec<StreamProduct> {
        self.fluid.fields.iter().chain(&self.ext.fields).cloned().collect()
    }

    /// `Σ α_i ψ_i + Σ w_j φ_j`.
    pub fn velocity(&self, alpha: &[f64], w: &[f64]) -> VelocityField {
        VelocityField::combination(alpha, &self.fluid.fields).add(self.ext.modal(w))
    }

    /// `Σ w_j ξ_j(x)`.
    pub fn plate_value(&self, w: &[f64], x: f64) -> f64 {
        w.iter().zip(&self.plate.modes).map(|(c, m)| c * self.plate.space.eval(m, x)[0]).sum()
    }

    /// Discrete Friedrichs–Poincaré constant over the combined family.
    pub fn friedrichs_poincare(&self) -> Result<f64> {
        friedrichs_poincare_constant(&self.coupling.forms.mass, &self.coupling.forms.stiffness)
    }

    pub fn stability(&self) -> Result<StabilityReport> {
        Ok(stability_margin(&self.flow, self.friedrichs_poincare()?))
    }
}

/// Plate unknowns `β`, the stacked velocity unknowns `q = (α, β̇)` and the
/// frozen complement coefficient `c0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    pub t: f64,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub beta_dot: DVector<f64>,
    pub c0: f64,
}

impl StateVector {
    pub fn zeros(nf: usize, np: usize) -> Self {
        Self {
            t: 0.0,
            alpha: DVector::zeros(nf),
            beta: DVector::zeros(np),
            beta_dot: DVector::zeros(np),
            c0: 0.0,
        }
    }

    pub fn q(&self) -> DVector<f64> {
        let nf = self.alpha.len();
        DVector::from_fn(nf + self.beta_dot.len(), |i, _| {
            if i < nf {
                self.alpha[i]
            } else {
                self.beta_dot[i - nf]
            }
        })
    }

    pub fn from_q(q: &DVector<f64>, beta: DVector<f64>, c0: f64, t: f64) -> Self {
        let nf = q.len() - beta.len();
        Self {
            t,
            alpha: q.rows(0, nf).into_owned(),
            beta_dot: q.rows(nf, beta.len()).into_owned(),
            beta,
            c0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub disc: Discretization,
    pub nf: usize,
    pub np: usize,
    /// `M`, including the plate identity block.
    pub mass: DMatrix<f64>,
    /// Combined-family L² Gram `(v_i, v_j)` without the plate block.
    pub field_mass: DMatrix<f64>,
    /// `ν K`.
    pub viscous: DMatrix<f64>,
    /// Shear plus drag part of `L0`.
    pub zero_order: DMatrix<f64>,
    /// `D = ν K + L0`.
    pub damping: DMatrix<f64>,
    pub kp: DVector<f64>,
    pub forcing: Forcing,
    /// `(ψ_mode, v_i)` over the combined family.
    pub fluid_load: DVector<f64>,
    /// `(ξ_mode, ξ_j)` in the plate rows.
    pub plate_load: DVector<f64>,
    pub mass_condition: f64,
    mass_factor: Cholesky<f64, Dyn>,
}

pub fn assemble(disc: Discretization, forcing: Forcing) -> Result<CoupledSystem> {
    let nf = disc.nf();
    let np = disc.np();
    let n = nf + np;
    let forms = &disc.coupling.forms;
    let mut mass = forms.mass.clone();
    for j in 0..np {
        mass[(nf + j, nf + j)] += 1.0;
    }
    let mass_condition = if n == 0 { 1.0 } else { spd_condition(&mass) };
    let mass_factor = mass.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        what: "coupled mass",
    })?;
    let viscous = &forms.stiffness * disc.nu;
    let damping = &viscous + forms.l0();
    let mut fluid_load = DVector::zeros(n);
    if forcing.fluid.is_active() {
        fluid_load.copy_from(&forms.mass.column(forcing.fluid.mode - 1));
    }
    let mut plate_load = DVector::zeros(n);
    if forcing.plate.is_active() {
        plate_load[nf + forcing.plate.mode - 1] = 1.0;
    }
    Ok(CoupledSystem {
        nf,
        np,
        field_mass: forms.mass.clone(),
        zero_order: forms.zero_order(),
        kp: DVector::from_column_slice(&disc.plate.eigenvalues),
        mass,
        viscous,
        damping,
        forcing,
        fluid_load,
        plate_load,
        mass_condition,
        mass_factor,
        disc,
    })
}

impl CoupledSystem {
    pub fn dim(&self) -> usize {
        self.nf + self.np
    }

    /// `l(t)`.
    pub fn loads(&self, t: f64) -> DVector<f64> {
        &self.fluid_load * self.forcing.fluid.coefficient(t) + &self.plate_load * self.forcing.plate.coefficient(t)
    }

    pub fn solve_mass(&self, b: &DVector<f64>) -> DVector<f64> {
        self.mass_factor.solve(b)
    }

    /// `(q̇, β̇)` at `state` and time `t`.
    pub fn rhs(&self, state: &StateVector, model: &ForceModel) -> (DVector<f64>, DVector<f64>) {
        let q = state.q();
        let f = model.force_vector(&self.disc.plate, state.beta.as_slice(), state.c0);
        let mut b = -(&self.damping * &q) + self.loads(state.t);
        for j in 0..self.np {
            b[self.nf + j] -= self.kp[j] * state.beta[j] + f[j];
        }
        (self.solve_mass(&b), state.beta_dot.clone())
    }

    /// `½(qᵀ M q + βᵀ K_p β + c0² ‖e''‖²)`.
    pub fn energy0(&self, state: &StateVector) -> f64 {
        let q = state.q();
        0.5 * ((q.transpose() * &self.mass * &q)[(0, 0)] + self.lap_u_norm2(state))
    }

    pub fn lap_u_norm2(&self, state: &StateVector) -> f64 {
        state.beta.iter().zip(self.kp.iter()).map(|(b, k)| k * b * b).sum::<f64>()
            + state.c0 * state.c0 * self.disc.plate.e_bending
    }

    /// `‖v‖` over the channel.
    pub fn velocity_norm(&self, state: &StateVector) -> f64 {
        let q = state.q();
        (q.transpose() * &self.field_mass * &q)[(0, 0)].max(0.0).sqrt()
    }

    /// `∫ u = c0 ∫e + Σ β_j ∫ξ_j`.
    pub fn mean_u(&self, state: &StateVector) -> f64 {
        state.c0 * self.disc.plate.special().integral()
            + state.beta.iter().zip(&self.disc.mode_means).map(|(b, m)| b * m).sum::<f64>()
    }

    pub fn mean_ut(&self, state: &StateVector) -> f64 {
        state.beta_dot.iter().zip(&self.disc.mode_means).map(|(b, m)| b * m).sum()
    }

    pub fn velocity_field(&self, state: &StateVector) -> VelocityField {
        self.disc.velocity(state.alpha.as_slice(), state.beta_dot.as_slice())
    }

    pub fn displacement(&self, state: &StateVector) -> PlateFunction {
        self.disc.plate.function(state.beta.as_slice(), state.c0)
    }

    /// `M_ff`-orthogonal projection of a field onto `span{ψ_i}`.
    pub fn project_fluid(&self, field: &VelocityField) -> Result<DVector<f64>> {
        let nf = self.nf;
        if nf == 0 || field.terms.is_empty() {
            return Ok(DVector::zeros(nf));
        }
        let family: Vec<StreamProduct> = self.disc.fluid.fields.iter().chain(&field.terms).cloned().collect();
        let none = |_: f64| 0.0;
        let forms = assemble_forms(
            &family,
            &self.disc.grid,
            &FlowWeights {
                speed: &none,
                shear: &none,
                drag: [[0.0; 2]; 2],
            },
        );
        let rhs = DVector::from_fn(nf, |i, _| (nf..family.len()).map(|j| forms.mass[(i, j)]).sum::<f64>());
        let mff = self.field_mass.view((0, 0), (nf, nf)).into_owned();
        let chol = mff.cholesky().ok_or(Error::NotPositiveDefinite { what: "fluid mass" })?;
        Ok(chol.solve(&rhs))
    }
}

/// `v(0) = Π_m(v0 - Ext[u1]) + Ext[P_n u1]`, `u(0) = P_n P̂ u0 + (I - P̂) u0`,
/// `u̇(0) = P_n u1`.
pub fn build_initial_state(
    sys: &CoupledSystem,
    v0: &VelocityField,
    u0: &PlateFunction,
    u1: &PlateFunction,
) -> Result<StateVector> {
    let plate = &sys.disc.plate;
    let ext_u1 = sys.disc.ext.extend(plate, u1)?;
    let beta_dot = DVector::from_vec(plate.modal_coefficients(u1));
    let alpha = sys.project_fluid(&v0.clone().add(ext_u1.scaled(-1.0)))?;
    let (_, c0) = plate.projector.project(u0);
    let beta = DVector::from_vec(plate.modal_coefficients(u0));
    Ok(StateVector {
        t: 0.0,
        alpha,
        beta,
        beta_dot,
        c0,
    })
}

/// Modal initial data with an optional seeded perturbation of every coefficient.
pub fn initial_state_from_spec(sys: &CoupledSystem, spec: &InitialSpec, seed: u64) -> Result<StateVector> {
    let (nf, np) = (sys.nf, sys.np);
    let unit = |n: usize, mode: usize, amp: f64| {
        let mut v = vec![0.0; n];
        if mode > 0 && mode <= n {
            v[mode - 1] = amp;
        }
        v
    };
    let mut beta = unit(np, spec.u0_mode, spec.u0_amplitude);
    let mut beta_dot = unit(np, spec.u1_mode, spec.u1_amplitude);
    let mut alpha = unit(nf, spec.v0_mode, spec.v0_amplitude);
    if spec.random_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in [&mut beta, &mut beta_dot, &mut alpha] {
            for c in v.iter_mut() {
                *c += spec.random_amplitude * rng.gen_range(-1.0..1.0);
            }
        }
    }
    let plate = &sys.disc.plate;
    let u0 = plate.function(&beta, spec.c0);
    let u1 = plate.function(&beta_dot, 0.0);
    let v0 = VelocityField::combination(&alpha, &sys.disc.fluid.fields).add(sys.disc.ext.modal(&beta_dot));
    build_initial_state(sys, &v0, &u0, &u1)
}

/// Builds the discretization and the coupled system for one configuration.
pub fn assemble_from_config(domain: &DomainSpec, run: &RunConfig) -> Result<CoupledSystem> {
    assemble(Discretization::new(domain, run)?, run.forcing)
}
