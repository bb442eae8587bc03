//! Base Poiseuille/Oseen profile, the weak first-order operator and the
//! stability hypothesis check.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{DomainSpec, Drag, RunConfig};
use crate::error::{Error, Result};
use crate::fields::{assemble_forms, ChannelGrid, FlowWeights, VelocityField};
use crate::linalg::generalized_symmetric_eigen;

/// Horizontal Poiseuille speed `-(k x3 / 2ν)(h + x3)` between the walls
/// `x3 = -h` and `x3 = 0`.
pub fn poiseuille_profile(k: f64, nu: f64, h: f64, x3: f64) -> Result<f64> {
    if !(-h..=0.0).contains(&x3) {
        return Err(Error::OutsideChannel { x3, h });
    }
    Ok(-(k * x3 / (2.0 * nu)) * (h + x3))
}

/// Base flow `a0 = (a(x3) + U, 0)` and constant drag `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseFlow {
    pub k: f64,
    pub nu: f64,
    pub h: f64,
    pub oseen_u: f64,
    pub drag: Drag,
}

impl BaseFlow {
    pub fn new(run: &RunConfig, domain: &DomainSpec) -> Self {
        Self {
            k: run.k,
            nu: run.nu,
            h: domain.h,
            oseen_u: run.oseen_u,
            drag: run.drag,
        }
    }

    /// Poiseuille component `a(x3)`; zero outside the channel.
    pub fn profile(&self, x3: f64) -> f64 {
        poiseuille_profile(self.k, self.nu, self.h, x3).unwrap_or(0.0)
    }

    /// `a'(x3) = -k (h + 2 x3) / (2ν)`.
    pub fn profile_derivative(&self, x3: f64) -> f64 {
        if !(-self.h..=0.0).contains(&x3) {
            return 0.0;
        }
        -self.k * (self.h + 2.0 * x3) / (2.0 * self.nu)
    }

    /// Advection speed `a(x3) + U`.
    pub fn speed(&self, x3: f64) -> f64 {
        self.profile(x3) + self.oseen_u
    }

    /// `sup |a'| = k h / (2ν)`, attained at both walls.
    pub fn shear_sup(&self) -> f64 {
        (self.k * self.h / (2.0 * self.nu)).abs()
    }

    pub fn weights(&self) -> (impl Fn(f64) -> f64 + '_, impl Fn(f64) -> f64 + '_) {
        (move |x3| self.speed(x3), move |x3| self.profile_derivative(x3))
    }
}

/// `((a0·∇)v, w) + ((v·∇)a0, w) + (A v, w)` by tensor quadrature.
pub fn l0_weak(flow: &BaseFlow, grid: &ChannelGrid, v: &VelocityField, w: &VelocityField) -> f64 {
    if v.terms.is_empty() || w.terms.is_empty() {
        return 0.0;
    }
    let family: Vec<_> = v.terms.iter().chain(&w.terms).cloned().collect();
    let (speed, shear) = flow.weights();
    let forms = assemble_forms(
        &family,
        grid,
        &FlowWeights {
            speed: &speed,
            shear: &shear,
            drag: flow.drag.matrix(),
        },
    );
    let l = forms.l0();
    let nv = v.terms.len();
    let mut acc = 0.0;
    for i in nv..family.len() {
        for j in 0..nv {
            acc += l[(i, j)];
        }
    }
    acc
}

/// Discrete Friedrichs–Poincaré constant `1/sqrt(λ_min)` of `K x = λ M x`.
pub fn friedrichs_poincare_constant(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>) -> Result<f64> {
    if mass.nrows() == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let (vals, _) = generalized_symmetric_eigen(stiffness, mass)?;
    let lam = vals[0];
    if !(lam > 0.0) {
        return Err(Error::NotPositiveDefinite { what: "gradient stiffness" });
    }
    Ok(1.0 / lam.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityBranch {
    #[serde(rename = "positive drag")]
    PositiveDrag,
    #[serde(rename = "Friedrichs–Poincaré")]
    FriedrichsPoincare,
    #[serde(rename = "none")]
    None,
}

impl StabilityBranch {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityBranch::PositiveDrag => "positive drag",
            StabilityBranch::FriedrichsPoincare => "Friedrichs–Poincaré",
            StabilityBranch::None => "none",
        }
    }
}

/// Sufficient stability check for the zero-order part `(v·∇)a0 + A v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Lower bound of the symmetric part of the zero-order operator:
    /// `λ_min(sym A) - sup|a'| / 2`.
    pub sigma_min: f64,
    /// `λ_min(sym A)` alone.
    pub drag_sigma_min: f64,
    /// `sup |a'|`.
    pub shear_sup: f64,
    pub c_o: f64,
    /// `ν / c_O² + sigma_min`.
    pub margin: f64,
    pub satisfied: bool,
    pub which_branch: StabilityBranch,
}

fn sym2_min_eigenvalue(a: [[f64; 2]; 2]) -> f64 {
    let p = a[0][0];
    let q = a[1][1];
    let r = 0.5 * (a[0][1] + a[1][0]);
    0.5 * (p + q) - (0.25 * (p - q) * (p - q) + r * r).sqrt()
}

/// The symmetric part of the shear matrix `[[0, a'], [0, 0]]` has eigenvalues
/// `±|a'|/2`, so the pointwise bound is `λ_min(sym A) - sup|a'|/2`.
pub fn stability_margin(flow: &BaseFlow, c_o: f64) -> StabilityReport {
    let drag_sigma_min = sym2_min_eigenvalue(flow.drag.matrix());
    let shear_sup = flow.shear_sup();
    let sigma_min = drag_sigma_min - 0.5 * shear_sup;
    let margin = flow.nu / (c_o * c_o) + sigma_min;
    let which_branch = if sigma_min > 0.0 {
        StabilityBranch::PositiveDrag
    } else if margin > 0.0 {
        StabilityBranch::FriedrichsPoincare
    } else {
        StabilityBranch::None
    };
    StabilityReport {
        sigma_min,
        drag_sigma_min,
        shear_sup,
        c_o,
        margin,
        satisfied: which_branch != StabilityBranch::None,
        which_branch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(k: f64, nu: f64, sigma: f64) -> BaseFlow {
        BaseFlow {
            k,
            nu,
            h: 1.0,
            oseen_u: 0.0,
            drag: Drag::Scalar(sigma),
        }
    }

    #[test]
    fn profile_examples() {
        assert_eq!(poiseuille_profile(1.0, 1.0, 1.0, -0.5).unwrap(), 0.125);
        for (k, nu, h) in [(1.0, 1.0, 1.0), (3.0, 0.2, 2.5)] {
            assert_eq!(poiseuille_profile(k, nu, h, 0.0).unwrap(), 0.0);
            assert_eq!(poiseuille_profile(k, nu, h, -h).unwrap(), 0.0);
        }
        assert!(poiseuille_profile(1.0, 1.0, 1.0, 0.1).is_err());
        assert!(poiseuille_profile(1.0, 1.0, 1.0, -1.1).is_err());
    }

    #[test]
    fn derivative_matches_centered_differences() {
        let f = BaseFlow { k: 2.3, nu: 0.7, h: 1.5, oseen_u: 0.4, drag: Drag::Scalar(0.0) };
        let step = 1e-5;
        for i in 0..100 {
            let x3 = -f.h + step + (f.h - 2.0 * step) * (i as f64 + 0.5) / 100.0;
            let fd = (f.profile(x3 + step) - f.profile(x3 - step)) / (2.0 * step);
            let exact = f.profile_derivative(x3);
            assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1.0), "{x3}: {fd} vs {exact}");
        }
    }

    #[test]
    fn single_mode_constant() {
        let m = DMatrix::from_element(1, 1, 2.0);
        let k = DMatrix::from_element(1, 1, 8.0);
        let c = friedrichs_poincare_constant(&m, &k).unwrap();
        assert!((c - (2.0f64 / 8.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn branches() {
        let r = stability_margin(&flow(0.0, 1.0, 0.1), 0.5);
        assert!(r.satisfied);
        assert_eq!(r.which_branch, StabilityBranch::PositiveDrag);

        let mut oseen = flow(0.0, 1.0, 0.0);
        oseen.oseen_u = 25.0;
        let r = stability_margin(&oseen, 0.5);
        assert!(r.satisfied);
        assert_eq!(r.which_branch, StabilityBranch::FriedrichsPoincare);

        let r = stability_margin(&flow(1e4, 1.0, 0.0), 0.5);
        assert!(!r.satisfied);
        assert_eq!(r.which_branch, StabilityBranch::None);
        assert!(r.margin <= 0.0);
    }
}
