//! Divergence-free lifting of zero-mean plate data into the channel.
//!
//! For a zero-mean `ψ` on `Ω = (a, b)` let `Ψ(x1) = ∫_a^{x1} ψ`, which vanishes
//! at both ends and outside `Ω`. The stream function `η = -Ψ(x1) χ(x3)` with
//! the quintic cutoff `χ` gives `v3 = ψ χ` and `v1 = -Ψ χ'`, so on the wall
//! `x3 = 0` the trace is exactly `(0, ψ)`, and it is zero on the rest of the
//! box boundary.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::base_flow::BaseFlow;
use crate::error::{Error, Result};
use crate::fields::{
    assemble_forms, AntiderivativeProfile, ChannelGrid, Cutoff, FamilyForms, FlowWeights, Profile, StreamProduct,
    VelocityField,
};
use crate::fluid_basis::StreamBasis;
use crate::linalg::spd_condition;
use crate::plate_modes::{PlateBasis, PlateFunction, SpecialElement};

/// Condition estimate above which the combined family is treated as dependent.
pub const MAX_CONDITION: f64 = 1e12;

/// `(∫_a^x e, e, e')`.
#[derive(Debug, Clone, Copy)]
struct SpecialAntiderivative(SpecialElement);

impl Profile for SpecialAntiderivative {
    fn eval(&self, x: f64) -> [f64; 3] {
        let e = self.0;
        if x < e.a || x > e.b {
            return [0.0; 3];
        }
        let l = e.b - e.a;
        let p = x - e.a;
        let p3 = p * p * p;
        let v = e.eval(x);
        [
            (l * l * p3 / 3.0 - l * p3 * p / 2.0 + p3 * p * p / 5.0) / 24.0,
            v[0],
            v[1],
        ]
    }
}

/// `φ_j = Ext[ξ_j]` for every plate mode.
#[derive(Debug, Clone)]
pub struct ExtensionOperator {
    pub cutoff: Arc<dyn Profile>,
    pub depth: f64,
    pub fields: Vec<StreamProduct>,
    special: Arc<dyn Profile>,
}

impl ExtensionOperator {
    pub fn new(plate: &PlateBasis, grid: &ChannelGrid) -> Self {
        let depth = grid.domain.cutoff_depth();
        let cutoff: Arc<dyn Profile> = Arc::new(Cutoff { depth });
        let fields = plate
            .modes
            .iter()
            .map(|c| {
                let x: Arc<dyn Profile> = Arc::new(AntiderivativeProfile::new(plate.space.clone(), c.clone()));
                StreamProduct::new(-1.0, x, Arc::clone(&cutoff))
            })
            .collect();
        Self {
            cutoff,
            depth,
            fields,
            special: Arc::new(SpecialAntiderivative(plate.special())),
        }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `Ext[u]` for a zero-mean plate function.
    pub fn extend(&self, plate: &PlateBasis, u: &PlateFunction) -> Result<VelocityField> {
        let mean = plate.projector.mean_of(u);
        let scale = u.coefs.iter().fold(u.e_coef.abs(), |m, c| m.max(c.abs()));
        if mean.abs() > 1e-10 * (1.0 + scale) {
            return Err(Error::NonzeroMean { mean });
        }
        let mut terms = Vec::new();
        if u.coefs.iter().any(|c| *c != 0.0) {
            let x: Arc<dyn Profile> = Arc::new(AntiderivativeProfile::new(plate.space.clone(), u.coefs.clone()));
            terms.push(StreamProduct::new(-1.0, x, Arc::clone(&self.cutoff)));
        }
        if u.e_coef != 0.0 {
            terms.push(StreamProduct::new(-u.e_coef, Arc::clone(&self.special), Arc::clone(&self.cutoff)));
        }
        Ok(VelocityField::from_terms(terms))
    }

    /// `Σ w_j φ_j`.
    pub fn modal(&self, w: &[f64]) -> VelocityField {
        VelocityField::combination(w, &self.fields)
    }

    /// `sup ‖Ext u‖ / ‖u‖` over the span of the modes, i.e. the square root of
    /// the largest eigenvalue of the extension mass (modes are L²-orthonormal).
    pub fn bound(&self, grid: &ChannelGrid) -> f64 {
        if self.fields.is_empty() {
            return 0.0;
        }
        let none = |_: f64| 0.0;
        let forms = assemble_forms(
            &self.fields,
            grid,
            &FlowWeights {
                speed: &none,
                shear: &none,
                drag: [[0.0; 2]; 2],
            },
        );
        let sym = (&forms.mass + forms.mass.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(*v)).sqrt()
    }
}

/// Forms over the combined family `(ψ_1, …, ψ_nf, φ_1, …, φ_ne)`.
#[derive(Debug, Clone)]
pub struct CouplingForms {
    pub nf: usize,
    pub ne: usize,
    pub forms: FamilyForms,
    pub mass_condition: f64,
}

impl CouplingForms {
    pub fn family_len(&self) -> usize {
        self.nf + self.ne
    }

    /// Block `(rows, cols)` of `m` with `f` = fluid, `e` = extension.
    pub fn block(&self, m: &DMatrix<f64>, rows: char, cols: char) -> DMatrix<f64> {
        let range = |c: char| if c == 'f' { (0, self.nf) } else { (self.nf, self.ne) };
        let (r0, nr) = range(rows);
        let (c0, nc) = range(cols);
        m.view((r0, c0), (nr, nc)).into_owned()
    }
}

pub fn assemble_coupling(
    ext: &ExtensionOperator,
    fluid: &StreamBasis,
    grid: &ChannelGrid,
    flow: &BaseFlow,
) -> Result<CouplingForms> {
    let family: Vec<StreamProduct> = fluid.fields.iter().chain(&ext.fields).cloned().collect();
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
    let mass_condition = if family.is_empty() { 1.0 } else { spd_condition(&forms.mass) };
    if !(mass_condition <= MAX_CONDITION) {
        return Err(Error::DependentFamily { condition: mass_condition });
    }
    Ok(CouplingForms {
        nf: fluid.len(),
        ne: ext.len(),
        forms,
        mass_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DomainSpec, Drag};
    use crate::fluid_basis::build_stream_basis;
    use crate::plate_modes::zero_mean_eigenmodes;
    use crate::hermite::ClampedSpace;
    use crate::linalg::min_symmetric_eigenvalue;

    fn setup() -> (ChannelGrid, PlateBasis, ExtensionOperator) {
        let g = ChannelGrid::new(&DomainSpec::with_default_margins(1.0, 0.0, 1.0), 16, 12, 7).unwrap();
        let space = ClampedSpace::new(g.plate_mesh.clone()).unwrap();
        let p = zero_mean_eigenmodes(&space, 4, 7).unwrap();
        let e = ExtensionOperator::new(&p, &g);
        (g, p, e)
    }

    #[test]
    fn zero_datum_gives_zero_field() {
        let (_, p, e) = setup();
        let v = e.extend(&p, &p.function(&[0.0; 4], 0.0)).unwrap();
        assert!(v.terms.is_empty());
        assert_eq!(v.velocity(0.5, -0.1), [0.0, 0.0]);
    }

    #[test]
    fn trace_is_exact_for_first_mode() {
        let (_, p, e) = setup();
        let u = p.function(&[1.0, 0.0, 0.0, 0.0], 0.0);
        let v = e.extend(&p, &u).unwrap();
        for i in 0..50 {
            let x = (i as f64 + 0.5) / 50.0;
            let t = v.velocity(x, 0.0);
            let xi = p.space.eval(&p.modes[0], x)[0];
            assert!((t[1] - xi).abs() <= 1e-12, "{} vs {xi}", t[1]);
            assert!(t[0].abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_trace_off_plate_and_at_ends() {
        let (g, p, e) = setup();
        let v = e.modal(&[0.3, -1.0, 0.2, 0.7]);
        let d = g.domain;
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            let x1 = d.box_lo + s * d.box_length();
            let x3 = -d.h * s;
            let top = v.velocity(x1, 0.0);
            if x1 <= d.plate_lo || x1 >= d.plate_hi {
                assert!(top[0].abs() <= 1e-12 && top[1].abs() <= 1e-12);
            }
            for (a, b) in [(x1, -d.h), (d.box_lo, x3), (d.box_hi, x3)] {
                let w = v.velocity(a, b);
                assert!(w[0].abs() <= 1e-12 && w[1].abs() <= 1e-12);
            }
        }
        // Ξ_j vanishes at both plate ends.
        for f in &e.fields {
            assert!(f.x.eval(0.0)[0].abs() < 1e-13);
            assert!(f.x.eval(1.0)[0].abs() < 1e-13);
        }
        let _ = p;
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let (_, p, e) = setup();
        let special = p.special();
        let u = PlateFunction {
            coefs: vec![0.0; p.space.dim()],
            e_coef: 0.1 / special.integral(),
        };
        assert!(matches!(e.extend(&p, &u), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn complement_part_extends_with_exact_trace() {
        let (_, p, e) = setup();
        // A zero-mean function mixing a Hermite bump with e.
        let mut coefs = vec![0.0; p.space.dim()];
        coefs[6] = 1.0;
        let bump = PlateFunction { coefs: coefs.clone(), e_coef: 0.0 };
        let c = p.projector.mean_of(&bump) / p.special().integral();
        let u = PlateFunction { coefs, e_coef: -c };
        let v = e.extend(&p, &u).unwrap();
        for i in 0..50 {
            let x = (i as f64 + 0.5) / 50.0;
            let t = v.velocity(x, 0.0);
            assert!((t[1] - p.eval(&u, x)[0]).abs() <= 1e-12);
            assert!(t[0].abs() <= 1e-12);
        }
        assert!(v.velocity(1.2, 0.0)[1].abs() <= 1e-14);
    }

    #[test]
    fn linear_in_the_datum() {
        let (_, p, e) = setup();
        let u1 = p.function(&[0.4, -0.3, 0.2, 0.9], 0.0);
        let u2 = p.function(&[-1.1, 0.5, 0.8, 0.1], 0.0);
        let (a, b) = (0.7, -1.9);
        let mix = PlateFunction {
            coefs: u1.coefs.iter().zip(&u2.coefs).map(|(x, y)| a * x + b * y).collect(),
            e_coef: 0.0,
        };
        let lhs = e.extend(&p, &mix).unwrap();
        let rhs = e.extend(&p, &u1).unwrap().scaled(a).add(e.extend(&p, &u2).unwrap().scaled(b));
        for (x1, x3) in [(0.3, -0.1), (0.77, -0.02), (0.5, -0.4), (0.01, -0.3)] {
            let l = lhs.velocity(x1, x3);
            let r = rhs.velocity(x1, x3);
            assert!((l[0] - r[0]).abs() <= 1e-13 && (l[1] - r[1]).abs() <= 1e-13);
        }
    }

    #[test]
    fn coupling_blocks_and_definiteness() {
        let (g, p, e) = setup();
        let fluid = build_stream_basis(3, 3, &g).unwrap();
        let flow = BaseFlow { k: 1.0, nu: 1.0, h: 1.0, oseen_u: 0.2, drag: Drag::Scalar(0.1) };
        let c = assemble_coupling(&e, &fluid, &g, &flow).unwrap();
        let fe = c.block(&c.forms.mass, 'f', 'e');
        let ef = c.block(&c.forms.mass, 'e', 'f');
        assert_eq!((fe.nrows(), fe.ncols()), (9, 4));
        assert!((fe - ef.transpose()).abs().max() <= 1e-15);
        assert!(min_symmetric_eigenvalue(&c.forms.mass) > 0.0);
        let _ = p;
    }

    #[test]
    fn bound_is_stable() {
        let (g, _, e) = setup();
        let c1 = e.bound(&g);
        let c2 = e.bound(&g.with_quad_order(14).unwrap());
        assert!(c1.is_finite() && c1 > 0.0);
        assert!((c1 - c2).abs() <= 0.05 * c2);
    }
}
