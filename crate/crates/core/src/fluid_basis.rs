//! Interior fluid basis: tensor products of clamped beam modes in `x1` and
//! `x3` used as stream functions, so every field is divergence free and
//! vanishes with its stream function to second order on the box boundary.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::base_flow::BaseFlow;
use crate::error::{Error, Result};
use crate::fields::{assemble_forms, ChannelGrid, FamilyForms, FlowWeights, HermiteProfile, Profile, StreamProduct};
use crate::hermite::ClampedSpace;

/// `η_i = p_a(x1) q_b(x3)` with `i = a·m3 + b`.
#[derive(Debug, Clone)]
pub struct StreamBasis {
    pub m1: usize,
    pub m3: usize,
    pub x1_space: ClampedSpace,
    pub x3_space: ClampedSpace,
    pub x1_factors: Vec<Arc<dyn Profile>>,
    pub x3_factors: Vec<Arc<dyn Profile>>,
    pub fields: Vec<StreamProduct>,
}

impl StreamBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.m3 + b
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        (i / self.m3, i % self.m3)
    }
}

fn factors(space: &ClampedSpace, count: usize) -> Result<Vec<Arc<dyn Profile>>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let (_, modes) = space.beam_modes(count)?;
    Ok(modes
        .into_iter()
        .map(|coefs| {
            Arc::new(HermiteProfile {
                space: space.clone(),
                coefs,
            }) as Arc<dyn Profile>
        })
        .collect())
}

/// `m1 · m3` stream-function fields on the grid's box and depth meshes.
/// Either count may be zero, giving an empty basis.
pub fn build_stream_basis(m1: usize, m3: usize, grid: &ChannelGrid) -> Result<StreamBasis> {
    let x1_space = ClampedSpace::new(grid.x1_mesh.clone())?;
    let x3_space = ClampedSpace::new(grid.x3_mesh.clone())?;
    if m1 > x1_space.dim() || m3 > x3_space.dim() {
        return Err(Error::InvalidArgument(format!(
            "m1 = {m1}, m3 = {m3} exceed the 1D space dimensions {} and {}",
            x1_space.dim(),
            x3_space.dim()
        )));
    }
    let (m1, m3) = if m1 == 0 || m3 == 0 { (0, 0) } else { (m1, m3) };
    let x1_factors = factors(&x1_space, m1)?;
    let x3_factors = factors(&x3_space, m3)?;
    let mut fields = Vec::with_capacity(m1 * m3);
    for p in &x1_factors {
        for q in &x3_factors {
            fields.push(StreamProduct::new(1.0, Arc::clone(p), Arc::clone(q)));
        }
    }
    Ok(StreamBasis {
        m1,
        m3,
        x1_space,
        x3_space,
        x1_factors,
        x3_factors,
        fields,
    })
}

/// Gram and operator matrices over the fluid basis.
#[derive(Debug, Clone)]
pub struct FluidMatrices {
    /// `(ψ_i, ψ_j)`
    pub mass: DMatrix<f64>,
    /// `(∇ψ_i, ∇ψ_j)`
    pub stiffness: DMatrix<f64>,
    /// `L0(ψ_j, ψ_i)` at row `i`, column `j`.
    pub l0: DMatrix<f64>,
    /// Zero-order (shear plus drag) part of `l0`.
    pub zero_order: DMatrix<f64>,
}

impl FluidMatrices {
    pub fn from_forms(forms: &FamilyForms) -> Self {
        Self {
            mass: forms.mass.clone(),
            stiffness: forms.stiffness.clone(),
            l0: forms.l0(),
            zero_order: forms.zero_order(),
        }
    }

    /// Advection part `l0 - zero_order`.
    pub fn advection(&self) -> DMatrix<f64> {
        &self.l0 - &self.zero_order
    }
}

pub fn assemble_fluid_matrices(basis: &StreamBasis, grid: &ChannelGrid, flow: &BaseFlow) -> FluidMatrices {
    let (speed, shear) = flow.weights();
    let forms = assemble_forms(
        &basis.fields,
        grid,
        &FlowWeights {
            speed: &speed,
            shear: &shear,
            drag: flow.drag.matrix(),
        },
    );
    FluidMatrices::from_forms(&forms)
}
