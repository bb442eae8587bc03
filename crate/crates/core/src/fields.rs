//! Velocity fields built from separable stream functions.
//!
//! A [`StreamProduct`] is `η(x1, x3) = s · X(x1) · Z(x3)` and carries the
//! velocity `v = (∂η/∂x3, -∂η/∂x1)`. Divergence vanishes identically: both
//! terms of `∂1 v1 + ∂3 v3` are the same product `X' Z'`. Bilinear forms over
//! families of products reduce to sums of products of 1D moments, which the
//! [`ChannelGrid`] quadrature integrates exactly for the piecewise polynomial
//! factors used here.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::config::DomainSpec;
use crate::error::{Error, Result};
use crate::hermite::{ClampedSpace, Mesh1d};
use crate::quadrature::{CompositeRule, GaussRule};

/// A 1D factor: value and first two derivatives.
pub trait Profile: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> [f64; 3];
}

/// A function in a clamped Hermite space (zero outside the mesh).
#[derive(Debug, Clone)]
pub struct HermiteProfile {
    pub space: ClampedSpace,
    pub coefs: Vec<f64>,
}

impl Profile for HermiteProfile {
    fn eval(&self, x: f64) -> [f64; 3] {
        self.space.eval(&self.coefs, x)
    }
}

/// `Ξ(x) = ∫_{start}^{x} ξ` for a zero-mean clamped `ξ`, returned as
/// `(Ξ, ξ, ξ')`; identically zero outside the mesh.
#[derive(Debug, Clone)]
pub struct AntiderivativeProfile {
    space: ClampedSpace,
    coefs: Vec<f64>,
    node_values: Vec<f64>,
    rule: GaussRule,
}

impl AntiderivativeProfile {
    pub fn new(space: ClampedSpace, coefs: Vec<f64>) -> Self {
        let node_values = space.node_antiderivatives(&coefs);
        Self {
            space,
            coefs,
            node_values,
            rule: GaussRule::new(2).expect("2-point rule"),
        }
    }
}

impl Profile for AntiderivativeProfile {
    fn eval(&self, x: f64) -> [f64; 3] {
        let mesh = self.space.mesh();
        let Some(e) = mesh.locate(x) else {
            return [0.0; 3];
        };
        let a = mesh.nodes()[e];
        let partial = if x > a {
            self.rule.integrate(a, x, |s| self.space.eval_in(&self.coefs, e, s)[0])
        } else {
            0.0
        };
        let d = self.space.eval_in(&self.coefs, e, x);
        [self.node_values[e] + partial, d[0], d[1]]
    }
}

/// Quintic cutoff in `x3`: 1 at the wall `x3 = 0` with zero first and second
/// derivatives, clamped to 0 at `x3 = -depth` and vanishing below.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub depth: f64,
}

impl Profile for Cutoff {
    fn eval(&self, x3: f64) -> [f64; 3] {
        if x3 <= -self.depth || x3 > 0.0 {
            return [0.0; 3];
        }
        let d = self.depth;
        let s = (x3 + d) / d;
        let s2 = s * s;
        let s3 = s2 * s;
        [
            s3 * (10.0 - 15.0 * s + 6.0 * s2),
            30.0 * s2 * (1.0 - s) * (1.0 - s) / d,
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (d * d),
        ]
    }
}

/// `η = scale · X(x1) · Z(x3)`.
#[derive(Debug, Clone)]
pub struct StreamProduct {
    pub scale: f64,
    pub x: Arc<dyn Profile>,
    pub z: Arc<dyn Profile>,
}

impl StreamProduct {
    pub fn new(scale: f64, x: Arc<dyn Profile>, z: Arc<dyn Profile>) -> Self {
        Self { scale, x, z }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            scale: self.scale * c,
            x: Arc::clone(&self.x),
            z: Arc::clone(&self.z),
        }
    }

    pub fn stream(&self, x1: f64, x3: f64) -> f64 {
        self.scale * self.x.eval(x1)[0] * self.z.eval(x3)[0]
    }

    /// `(v1, v3)`.
    pub fn velocity(&self, x1: f64, x3: f64) -> [f64; 2] {
        let x = self.x.eval(x1);
        let z = self.z.eval(x3);
        [self.scale * x[0] * z[1], -self.scale * x[1] * z[0]]
    }

    /// `[[∂1 v1, ∂3 v1], [∂1 v3, ∂3 v3]]`.
    pub fn gradient(&self, x1: f64, x3: f64) -> [[f64; 2]; 2] {
        let x = self.x.eval(x1);
        let z = self.z.eval(x3);
        let s = self.scale;
        [
            [s * (x[1] * z[1]), s * (x[0] * z[2])],
            [-s * (x[2] * z[0]), -s * (x[1] * z[1])],
        ]
    }
}

/// Finite sum of stream products.
#[derive(Debug, Clone, Default)]
pub struct VelocityField {
    pub terms: Vec<StreamProduct>,
}

impl VelocityField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<StreamProduct>) -> Self {
        Self { terms }
    }

    /// `Σ c_i f_i`.
    pub fn combination(coefs: &[f64], family: &[StreamProduct]) -> Self {
        Self {
            terms: coefs
                .iter()
                .zip(family)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, f)| f.scaled(*c))
                .collect(),
        }
    }

    pub fn add(mut self, other: VelocityField) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.scaled(c)).collect(),
        }
    }

    pub fn velocity(&self, x1: f64, x3: f64) -> [f64; 2] {
        self.terms.iter().fold([0.0; 2], |acc, t| {
            let v = t.velocity(x1, x3);
            [acc[0] + v[0], acc[1] + v[1]]
        })
    }

    pub fn gradient(&self, x1: f64, x3: f64) -> [[f64; 2]; 2] {
        self.terms.iter().fold([[0.0; 2]; 2], |acc, t| {
            let g = t.gradient(x1, x3);
            [
                [acc[0][0] + g[0][0], acc[0][1] + g[0][1]],
                [acc[1][0] + g[1][0], acc[1][1] + g[1][1]],
            ]
        })
    }

    /// Sum of the per-term divergences, each of which cancels exactly.
    pub fn divergence(&self, x1: f64, x3: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let g = t.gradient(x1, x3);
                g[0][0] + g[1][1]
            })
            .sum()
    }
}

/// Meshes and quadrature of the truncated channel.
///
/// The `x1` mesh contains the plate mesh as a sub-mesh and the `x3` mesh has a
/// breakpoint at the cutoff depth, so every product integrated here is a
/// polynomial on each quadrature cell.
#[derive(Debug, Clone)]
pub struct ChannelGrid {
    pub domain: DomainSpec,
    pub plate_mesh: Mesh1d,
    pub x1_mesh: Mesh1d,
    pub x3_mesh: Mesh1d,
    pub x1_rule: CompositeRule,
    pub x3_rule: CompositeRule,
    pub quad_order: usize,
}

impl ChannelGrid {
    pub fn new(
        domain: &DomainSpec,
        plate_elements: usize,
        x3_elements: usize,
        quad_order: usize,
    ) -> Result<Self> {
        if plate_elements < 2 || x3_elements < 2 {
            return Err(Error::InvalidArgument(
                "plate and x3 meshes need at least two elements".into(),
            ));
        }
        let len = domain.plate_length();
        let hp = len / plate_elements as f64;
        let margin_count = |m: f64| {
            if m <= 0.0 {
                0
            } else {
                ((m / hp) - 1e-9).ceil().max(1.0) as usize
            }
        };
        let left = margin_count(domain.plate_lo - domain.box_lo);
        let right = margin_count(domain.box_hi - domain.plate_hi);
        let plate_mesh = Mesh1d::uniform(domain.plate_lo, domain.plate_hi, plate_elements)?;
        let mut x1_nodes = Vec::new();
        if left > 0 {
            let h = (domain.plate_lo - domain.box_lo) / left as f64;
            x1_nodes.extend((0..left).map(|i| domain.box_lo + h * i as f64));
        }
        x1_nodes.extend_from_slice(plate_mesh.nodes());
        if right > 0 {
            let h = (domain.box_hi - domain.plate_hi) / right as f64;
            x1_nodes.extend((1..right).map(|i| domain.plate_hi + h * i as f64));
            x1_nodes.push(domain.box_hi);
        }
        let x1_mesh = Mesh1d::new(x1_nodes)?;

        let depth = domain.cutoff_depth();
        let top = ((x3_elements as f64 * depth / domain.h).round() as usize).clamp(1, x3_elements - 1);
        let bottom = x3_elements - top;
        let x3_mesh =
            Mesh1d::piecewise_uniform(&[-domain.h, -depth, 0.0], &[bottom, top])?;

        let rule = GaussRule::new(quad_order)?;
        let x1_rule = CompositeRule::new(x1_mesh.nodes(), &rule);
        let x3_rule = CompositeRule::new(x3_mesh.nodes(), &rule);
        Ok(Self {
            domain: *domain,
            plate_mesh,
            x1_mesh,
            x3_mesh,
            x1_rule,
            x3_rule,
            quad_order,
        })
    }

    /// Same meshes with a different number of Gauss points per cell.
    pub fn with_quad_order(&self, quad_order: usize) -> Result<Self> {
        let rule = GaussRule::new(quad_order)?;
        Ok(Self {
            x1_rule: CompositeRule::new(self.x1_mesh.nodes(), &rule),
            x3_rule: CompositeRule::new(self.x3_mesh.nodes(), &rule),
            quad_order,
            ..self.clone()
        })
    }
}

/// Weights entering the first-order operator: advection speed `c(x3)` and
/// shear `a'(x3)` of the base profile, and the constant drag matrix.
pub struct FlowWeights<'a> {
    pub speed: &'a dyn Fn(f64) -> f64,
    pub shear: &'a dyn Fn(f64) -> f64,
    pub drag: [[f64; 2]; 2],
}

/// Bilinear forms over a family; entry `(i, j)` is `form(trial f_j, test f_i)`.
#[derive(Debug, Clone)]
pub struct FamilyForms {
    /// (v, w)
    pub mass: DMatrix<f64>,
    /// (∇v, ∇w)
    pub stiffness: DMatrix<f64>,
    /// ((c ∂1) v, w)
    pub advection: DMatrix<f64>,
    /// (v3 a', w1) = ((v·∇) a0, w)
    pub shear: DMatrix<f64>,
    /// (A v, w)
    pub drag: DMatrix<f64>,
}

impl FamilyForms {
    /// Matrix of the full first-order operator `L0`.
    pub fn l0(&self) -> DMatrix<f64> {
        &self.advection + &self.shear + &self.drag
    }

    /// The zero-order part `(v·∇)a0 + A v`.
    pub fn zero_order(&self) -> DMatrix<f64> {
        &self.shear + &self.drag
    }
}

struct AxisTable {
    /// `tab[f][d][q]`: derivative `d` of factor `f` at node `q`.
    tab: Vec<[Vec<f64>; 3]>,
}

fn tabulate(factors: &[Arc<dyn Profile>], rule: &CompositeRule) -> AxisTable {
    let tab = factors
        .iter()
        .map(|f| {
            let mut out = [
                Vec::with_capacity(rule.len()),
                Vec::with_capacity(rule.len()),
                Vec::with_capacity(rule.len()),
            ];
            for &x in &rule.points {
                let v = f.eval(x);
                for d in 0..3 {
                    out[d].push(v[d]);
                }
            }
            out
        })
        .collect();
    AxisTable { tab }
}

/// `mom[d1 * 3 + d2][(p, q)] = Σ_k w_k g(x_k) f_p^{(d1)}(x_k) f_q^{(d2)}(x_k)`.
fn moments(table: &AxisTable, weights: &[f64]) -> Vec<DMatrix<f64>> {
    let n = table.tab.len();
    let mut out = vec![DMatrix::zeros(n, n); 9];
    for d1 in 0..3 {
        for d2 in 0..3 {
            let m = &mut out[d1 * 3 + d2];
            for p in 0..n {
                let fp = &table.tab[p][d1];
                for q in 0..n {
                    let fq = &table.tab[q][d2];
                    m[(p, q)] = fp
                        .iter()
                        .zip(fq)
                        .zip(weights)
                        .map(|((a, b), w)| a * b * w)
                        .sum();
                }
            }
        }
    }
    out
}

fn distinct(profiles: impl Iterator<Item = Arc<dyn Profile>>) -> (Vec<Arc<dyn Profile>>, Vec<usize>) {
    let mut uniq: Vec<Arc<dyn Profile>> = Vec::new();
    let mut idx = Vec::new();
    for p in profiles {
        match uniq.iter().position(|u| Arc::ptr_eq(u, &p)) {
            Some(i) => idx.push(i),
            None => {
                idx.push(uniq.len());
                uniq.push(p);
            }
        }
    }
    (uniq, idx)
}

/// Assembles every bilinear form over `family` by tensor Gauss quadrature.
pub fn assemble_forms(
    family: &[StreamProduct],
    grid: &ChannelGrid,
    flow: &FlowWeights<'_>,
) -> FamilyForms {
    let (xs, xi) = distinct(family.iter().map(|f| Arc::clone(&f.x)));
    let (zs, zi) = distinct(family.iter().map(|f| Arc::clone(&f.z)));
    let xt = tabulate(&xs, &grid.x1_rule);
    let zt = tabulate(&zs, &grid.x3_rule);
    let ix = moments(&xt, &grid.x1_rule.weights);
    let iz = moments(&zt, &grid.x3_rule.weights);
    let wc: Vec<f64> = grid
        .x3_rule
        .points
        .iter()
        .zip(&grid.x3_rule.weights)
        .map(|(&x, &w)| w * (flow.speed)(x))
        .collect();
    let ws: Vec<f64> = grid
        .x3_rule
        .points
        .iter()
        .zip(&grid.x3_rule.weights)
        .map(|(&x, &w)| w * (flow.shear)(x))
        .collect();
    let izc = moments(&zt, &wc);
    let izs = moments(&zt, &ws);

    let n = family.len();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut advection = DMatrix::zeros(n, n);
    let mut shear = DMatrix::zeros(n, n);
    let mut drag = DMatrix::zeros(n, n);
    let a = flow.drag;
    for i in 0..n {
        // test
        let (xw, zw) = (xi[i], zi[i]);
        for j in 0..n {
            // trial
            let (xv, zv) = (xi[j], zi[j]);
            let s = family[i].scale * family[j].scale;
            let x = |d1: usize, d2: usize| ix[d1 * 3 + d2][(xv, xw)];
            let z = |d1: usize, d2: usize| iz[d1 * 3 + d2][(zv, zw)];
            let zc = |d1: usize, d2: usize| izc[d1 * 3 + d2][(zv, zw)];
            let zs = |d1: usize, d2: usize| izs[d1 * 3 + d2][(zv, zw)];
            mass[(i, j)] = s * (x(0, 0) * z(1, 1) + x(1, 1) * z(0, 0));
            stiffness[(i, j)] = s
                * (2.0 * x(1, 1) * z(1, 1) + x(0, 0) * z(2, 2) + x(2, 2) * z(0, 0));
            advection[(i, j)] = s * (x(1, 0) * zc(1, 1) + x(2, 1) * zc(0, 0));
            shear[(i, j)] = -s * x(1, 0) * zs(0, 1);
            drag[(i, j)] = s
                * (a[0][0] * x(0, 0) * z(1, 1)
                    - a[0][1] * x(1, 0) * z(0, 1)
                    - a[1][0] * x(0, 1) * z(1, 0)
                    + a[1][1] * x(1, 1) * z(0, 0));
        }
    }
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    FamilyForms {
        mass: sym(mass),
        stiffness: sym(stiffness),
        advection,
        shear,
        drag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ChannelGrid {
        ChannelGrid::new(&DomainSpec::with_default_margins(1.0, 0.0, 1.0), 8, 8, 7).unwrap()
    }

    fn sample_family(g: &ChannelGrid) -> Vec<StreamProduct> {
        let xs = ClampedSpace::new(g.x1_mesh.clone()).unwrap();
        let zs = ClampedSpace::new(g.x3_mesh.clone()).unwrap();
        let (_, xm) = xs.beam_modes(2).unwrap();
        let (_, zm) = zs.beam_modes(2).unwrap();
        let mut fam = Vec::new();
        for a in &xm {
            for b in &zm {
                fam.push(StreamProduct::new(
                    1.0,
                    Arc::new(HermiteProfile { space: xs.clone(), coefs: a.clone() }),
                    Arc::new(HermiteProfile { space: zs.clone(), coefs: b.clone() }),
                ));
            }
        }
        fam
    }

    /// Brute-force tensor quadrature of the pointwise fields.
    fn brute_mass(f: &StreamProduct, g: &StreamProduct, grid: &ChannelGrid) -> f64 {
        let mut acc = 0.0;
        for (&x1, &w1) in grid.x1_rule.points.iter().zip(&grid.x1_rule.weights) {
            for (&x3, &w3) in grid.x3_rule.points.iter().zip(&grid.x3_rule.weights) {
                let a = f.velocity(x1, x3);
                let b = g.velocity(x1, x3);
                acc += w1 * w3 * (a[0] * b[0] + a[1] * b[1]);
            }
        }
        acc
    }

    #[test]
    fn separable_mass_matches_pointwise_quadrature() {
        let g = grid();
        let fam = sample_family(&g);
        let zero = |_: f64| 0.0;
        let forms = assemble_forms(
            &fam,
            &g,
            &FlowWeights { speed: &zero, shear: &zero, drag: [[0.0; 2]; 2] },
        );
        for i in 0..fam.len() {
            for j in 0..fam.len() {
                let b = brute_mass(&fam[j], &fam[i], &g);
                assert!((forms.mass[(i, j)] - b).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn cutoff_endpoint_conditions() {
        let c = Cutoff { depth: 0.5 };
        let top = c.eval(0.0);
        assert_eq!(top, [1.0, 0.0, 0.0]);
        let bottom = c.eval(-0.5);
        assert_eq!(bottom, [0.0, 0.0, 0.0]);
        let near = c.eval(-0.5 + 1e-9);
        assert!(near[0].abs() < 1e-20 && near[1].abs() < 1e-12);
    }

    #[test]
    fn grid_aligns_plate_and_cutoff() {
        let g = grid();
        for x in g.plate_mesh.nodes() {
            assert!(g.x1_mesh.nodes().contains(x));
        }
        assert!(g.x3_mesh.nodes().contains(&-0.5));
        assert_eq!(g.x1_mesh.start(), -1.0);
        assert_eq!(g.x1_mesh.end(), 2.0);
    }
}
