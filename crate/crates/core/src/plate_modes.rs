//! Zero-mean clamped plate modes, the mean projector and the complement
//! element `e`.
//!
//! The plate is the interval `Ω = (a, b)`. Modes solve
//! `(ξ'', w'') = κ (ξ, w)` for all zero-mean clamped `w`; the zero-mean
//! constraint is imposed by restricting the Hermite space to the orthogonal
//! complement of its mean functional before solving a dense symmetric
//! definite eigenproblem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hermite::{ClampedSpace, Mesh1d, SpaceMatrices};
use crate::linalg::{generalized_symmetric_eigen, orthogonal_complement};
use crate::quadrature::{CompositeRule, GaussRule};

/// Clamped Hermite space with `n_raw` uniform elements on `(a, b)`.
pub fn clamped_raw_basis(a: f64, b: f64, n_raw: usize) -> Result<ClampedSpace> {
    if n_raw < 4 {
        return Err(Error::InvalidArgument(format!(
            "clamped basis needs at least 4 elements, got {n_raw}"
        )));
    }
    ClampedSpace::new(Mesh1d::uniform(a, b, n_raw)?)
}

/// `e(x) = (x-a)²(b-x)²/24`, the clamped solution of `e'''' = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialElement {
    pub a: f64,
    pub b: f64,
}

impl SpecialElement {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidArgument("degenerate plate interval".into()));
        }
        Ok(Self { a, b })
    }

    /// `e` and its first four derivatives; zero outside `[a, b]`.
    pub fn eval(&self, x: f64) -> [f64; 5] {
        if x < self.a || x > self.b {
            return [0.0; 5];
        }
        let p = x - self.a;
        let q = self.b - x;
        [
            p * p * q * q / 24.0,
            p * q * (q - p) / 12.0,
            (p * p - 4.0 * p * q + q * q) / 12.0,
            (p - q) / 2.0,
            1.0,
        ]
    }

    /// `∫ e = (b-a)⁵ / 720`.
    pub fn integral(&self) -> f64 {
        (self.b - self.a).powi(5) / 720.0
    }
}

/// A clamped plate function `Σ c_k φ_k + e_coef · e` (Hermite part plus the
/// complement direction).
#[derive(Debug, Clone, PartialEq)]
pub struct PlateFunction {
    pub coefs: Vec<f64>,
    pub e_coef: f64,
}

impl PlateFunction {
    pub fn hermite(coefs: Vec<f64>) -> Self {
        Self { coefs, e_coef: 0.0 }
    }
}

/// The `(Δ·, Δ·)`-orthogonal projector onto zero-mean clamped functions.
///
/// Its complement is spanned by `e`, since `(e'', w'') = ∫ w` for clamped `w`.
#[derive(Debug, Clone)]
pub struct MeanProjector {
    pub mean: DVector<f64>,
    pub special: SpecialElement,
}

impl MeanProjector {
    pub fn mean_of(&self, u: &PlateFunction) -> f64 {
        self.mean.iter().zip(&u.coefs).map(|(m, c)| m * c).sum::<f64>()
            + u.e_coef * self.special.integral()
    }

    /// `(P̂u, c)` with `u = P̂u + c e` and `c = ∫u / ∫e`.
    pub fn project(&self, u: &PlateFunction) -> (PlateFunction, f64) {
        let c = self.mean_of(u) / self.special.integral();
        (
            PlateFunction {
                coefs: u.coefs.clone(),
                e_coef: u.e_coef - c,
            },
            c,
        )
    }
}

/// Values and derivatives of the modes and of `e` at the plate quadrature points.
#[derive(Debug, Clone)]
pub struct PlateTables {
    pub rule: CompositeRule,
    /// `mode[j][d][q]`
    pub mode: Vec<[Vec<f64>; 3]>,
    /// `e[d][q]`
    pub e: [Vec<f64>; 3],
}

/// Zero-mean clamped modes with their eigenvalues and quadrature tables.
#[derive(Debug, Clone)]
pub struct PlateBasis {
    pub space: ClampedSpace,
    pub matrices: SpaceMatrices,
    /// Hermite coefficients of `ξ_j`.
    pub modes: Vec<Vec<f64>>,
    /// `κ_1 <= κ_2 <= ...`
    pub eigenvalues: Vec<f64>,
    pub projector: MeanProjector,
    pub tables: PlateTables,
    /// `(ξ_j', ξ_k')`
    pub mode_gradient: DMatrix<f64>,
    /// `(e, ξ_j)`
    pub e_mass: Vec<f64>,
    /// `(e', ξ_j')`
    pub e_gradient: Vec<f64>,
    /// `‖e''‖²`
    pub e_bending: f64,
    /// `‖e'‖²`
    pub e_grad_norm2: f64,
}

/// Lowest `n_plate` zero-mean clamped modes of `space`, L²-normalized, with
/// positive curvature at the left end.
pub fn zero_mean_eigenmodes(space: &ClampedSpace, n_plate: usize, quad_order: usize) -> Result<PlateBasis> {
    let dim = space.dim();
    if n_plate + 1 > dim {
        return Err(Error::InvalidArgument(format!(
            "n_plate = {n_plate} needs a clamped space of dimension >= {}, have {dim}",
            n_plate + 1
        )));
    }
    let mats = space.matrices();
    let z = orthogonal_complement(&mats.mean)?;
    let kz = z.transpose() * &mats.bending * &z;
    let mz = z.transpose() * &mats.mass * &z;
    let (vals, vecs) = generalized_symmetric_eigen(&kz, &mz)?;
    let mut modes = Vec::with_capacity(n_plate);
    for j in 0..n_plate {
        let x = &z * vecs.column(j);
        let norm = (x.transpose() * &mats.mass * &x)[(0, 0)].sqrt();
        let mut c: Vec<f64> = x.iter().map(|v| v / norm).collect();
        space.fix_sign(&mut c);
        modes.push(c);
    }
    let mesh = space.mesh();
    let special = SpecialElement::new(mesh.start(), mesh.end())?;
    let rule = CompositeRule::new(mesh.nodes(), &GaussRule::new(quad_order.max(4))?);
    let tab = |c: &[f64]| {
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for &x in &rule.points {
            let v = space.eval(c, x);
            for d in 0..3 {
                out[d].push(v[d]);
            }
        }
        out
    };
    let mode_tabs: Vec<[Vec<f64>; 3]> = modes.iter().map(|c| tab(c)).collect();
    let mut e_tab = [Vec::new(), Vec::new(), Vec::new()];
    for &x in &rule.points {
        let v = special.eval(x);
        for d in 0..3 {
            e_tab[d].push(v[d]);
        }
    }
    let dot = |a: &[f64], b: &[f64]| rule.sum(a.iter().zip(b).map(|(x, y)| x * y));
    let n = n_plate;
    let mode_gradient =
        DMatrix::from_fn(n, n, |j, k| dot(&mode_tabs[j][1], &mode_tabs[k][1]));
    let e_mass = (0..n).map(|j| dot(&e_tab[0], &mode_tabs[j][0])).collect();
    let e_gradient = (0..n).map(|j| dot(&e_tab[1], &mode_tabs[j][1])).collect();
    let e_bending = dot(&e_tab[2], &e_tab[2]);
    let e_grad_norm2 = dot(&e_tab[1], &e_tab[1]);
    Ok(PlateBasis {
        space: space.clone(),
        projector: MeanProjector {
            mean: mats.mean.clone(),
            special,
        },
        matrices: mats,
        modes,
        eigenvalues: vals[..n].to_vec(),
        tables: PlateTables {
            rule,
            mode: mode_tabs,
            e: e_tab,
        },
        mode_gradient,
        e_mass,
        e_gradient,
        e_bending,
        e_grad_norm2,
    })
}

impl PlateBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn special(&self) -> SpecialElement {
        self.projector.special
    }

    /// `Σ β_j ξ_j + c0 e` as a [`PlateFunction`].
    pub fn function(&self, beta: &[f64], c0: f64) -> PlateFunction {
        let mut coefs = vec![0.0; self.space.dim()];
        for (b, m) in beta.iter().zip(&self.modes) {
            for (c, v) in coefs.iter_mut().zip(m) {
                *c += b * v;
            }
        }
        PlateFunction { coefs, e_coef: c0 }
    }

    /// Value and first two derivatives of a plate function at `x`.
    pub fn eval(&self, u: &PlateFunction, x: f64) -> [f64; 3] {
        let h = self.space.eval(&u.coefs, x);
        let e = self.special().eval(x);
        [
            h[0] + u.e_coef * e[0],
            h[1] + u.e_coef * e[1],
            h[2] + u.e_coef * e[2],
        ]
    }

    /// `∫_Ω Σ β_j ξ_j`.
    pub fn mean_of_modes(&self, beta: &[f64]) -> f64 {
        beta.iter()
            .zip(&self.modes)
            .map(|(b, m)| b * m.iter().zip(self.matrices.mean.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    /// L² projection onto `span{ξ_j}` of the zero-mean part of `u`.
    pub fn modal_coefficients(&self, u: &PlateFunction) -> Vec<f64> {
        let (p, _) = self.projector.project(u);
        let mc = &self.matrices.mass * DVector::from_column_slice(&p.coefs);
        self.modes
            .iter()
            .enumerate()
            .map(|(j, m)| {
                m.iter().zip(mc.iter()).map(|(a, b)| a * b).sum::<f64>() + p.e_coef * self.e_mass[j]
            })
            .collect()
    }

    /// Rayleigh quotient `(u'', u'') / (u, u)` of a Hermite function.
    pub fn rayleigh_quotient(&self, coefs: &[f64]) -> f64 {
        let x = DVector::from_column_slice(coefs);
        let num = (x.transpose() * &self.matrices.bending * &x)[(0, 0)];
        let den = (x.transpose() * &self.matrices.mass * &x)[(0, 0)];
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n_el: usize, n: usize) -> PlateBasis {
        let s = clamped_raw_basis(0.0, 1.0, n_el).unwrap();
        zero_mean_eigenmodes(&s, n, 7).unwrap()
    }

    #[test]
    fn modes_are_zero_mean_and_orthogonal() {
        let b = basis(32, 8);
        for m in &b.modes {
            let mean: f64 = m.iter().zip(b.matrices.mean.iter()).map(|(x, y)| x * y).sum();
            assert!(mean.abs() < 1e-12, "{mean}");
        }
        for j in 0..8 {
            for k in 0..8 {
                let xj = DVector::from_column_slice(&b.modes[j]);
                let xk = DVector::from_column_slice(&b.modes[k]);
                let kjk = (xj.transpose() * &b.matrices.bending * &xk)[(0, 0)];
                let mjk = (xj.transpose() * &b.matrices.mass * &xk)[(0, 0)];
                if j == k {
                    assert!((mjk - 1.0).abs() < 1e-12);
                    assert!((kjk - b.eigenvalues[j]).abs() < 1e-10 * b.eigenvalues[j]);
                } else {
                    let scale = (b.eigenvalues[j] * b.eigenvalues[k]).sqrt();
                    assert!(kjk.abs() <= 1e-10 * scale, "{j} {k} {kjk}");
                }
            }
        }
        assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(b.eigenvalues[0] > 0.0);
    }

    #[test]
    fn endpoints_vanish() {
        let b = basis(16, 4);
        for m in &b.modes {
            for x in [0.0, 1.0] {
                let v = b.space.eval(m, x);
                assert_eq!(v[0], 0.0);
                assert_eq!(v[1], 0.0);
            }
            assert!(b.space.eval(m, 0.0)[2] > 0.0);
        }
    }

    #[test]
    fn rayleigh_quotient_equals_eigenvalue() {
        let b = basis(24, 6);
        for (m, k) in b.modes.iter().zip(&b.eigenvalues) {
            assert!((b.rayleigh_quotient(m) - k).abs() <= 1e-10 * k);
        }
    }

    #[test]
    fn refinement_lowers_eigenvalues() {
        let coarse = basis(8, 4);
        let fine = basis(16, 4);
        for (c, f) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
            assert!(f <= &(c * (1.0 + 1e-12)), "{f} > {c}");
        }
    }

    #[test]
    fn special_element_properties() {
        let e = SpecialElement::new(0.2, 1.7).unwrap();
        for x in [0.2, 1.7] {
            let v = e.eval(x);
            assert!(v[0].abs() < 1e-16 && v[1].abs() < 1e-16);
        }
        for i in 1..20 {
            let x = 0.2 + 1.5 * i as f64 / 20.0;
            assert_eq!(e.eval(x)[4], 1.0);
            let h = 1e-3;
            let fd = (e.eval(x + h)[2] - 2.0 * e.eval(x)[2] + e.eval(x - h)[2]) / (h * h);
            assert!((fd - 1.0).abs() < 1e-6);
        }
        let b = basis(16, 6);
        // (e'', ξ'') = ∫ ξ = 0
        let rule = &b.tables.rule;
        for j in 0..6 {
            let v = rule.sum(b.tables.e[2].iter().zip(&b.tables.mode[j][2]).map(|(a, c)| a * c));
            assert!(v.abs() < 1e-10, "{v}");
        }
        let ie = rule.sum(b.tables.e[0].iter().copied());
        assert!((ie - b.special().integral()).abs() < 1e-15);
    }

    #[test]
    fn projector_examples() {
        let b = basis(16, 4);
        let proj = &b.projector;
        let zero_mean = b.function(&[0.3, -0.2, 0.0, 1.0], 0.0);
        let (p, c) = proj.project(&zero_mean);
        assert!(c.abs() < 1e-13);
        assert!((p.e_coef).abs() < 1e-13);

        let e = PlateFunction { coefs: vec![0.0; b.space.dim()], e_coef: 1.0 };
        let (p, c) = proj.project(&e);
        assert_eq!(c, 1.0);
        assert_eq!(p.e_coef, 0.0);

        let u = PlateFunction {
            coefs: (0..b.space.dim()).map(|i| (i as f64).cos()).collect(),
            e_coef: 0.4,
        };
        let (p, c) = proj.project(&u);
        assert!(proj.mean_of(&p).abs() < 1e-13);
        for x in [0.1, 0.37, 0.8] {
            let lhs = b.eval(&u, x)[0];
            let rhs = b.eval(&p, x)[0] + c * b.special().eval(x)[0];
            assert!((lhs - rhs).abs() <= 1e-12);
        }
        // idempotent
        let (pp, c2) = proj.project(&p);
        assert!(c2.abs() < 1e-12);
        assert!((pp.e_coef - p.e_coef).abs() < 1e-12);
    }

    #[test]
    fn too_many_modes() {
        let s = clamped_raw_basis(0.0, 1.0, 4).unwrap();
        assert!(zero_mean_eigenmodes(&s, 6, 7).is_err());
        assert!(clamped_raw_basis(0.0, 1.0, 3).is_err());
    }
}
