//! Clamped cubic Hermite elements on 1D meshes.
//!
//! Every function in a [`ClampedSpace`] is C¹ and vanishes together with its
//! slope at both mesh ends. The degrees of freedom are the value and the slope
//! at each interior node, interleaved as `[u_1, u'_1, u_2, u'_2, ...]`.
//! The same kernel backs the plate modes and both factors of the fluid
//! stream functions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::generalized_symmetric_eigen;
use crate::quadrature::GaussRule;

/// Strictly increasing breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1d {
    nodes: Vec<f64>,
}

impl Mesh1d {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::InvalidArgument(
                "mesh breakpoints must be strictly increasing with at least one element".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(a: f64, b: f64, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one element".into()));
        }
        let h = (b - a) / elements as f64;
        let mut nodes: Vec<f64> = (0..=elements).map(|i| a + h * i as f64).collect();
        nodes[elements] = b;
        Self::new(nodes)
    }

    /// Concatenation of uniform pieces `[p_0, p_1], [p_1, p_2], ...` with the
    /// given element counts (zero-length pieces must have zero elements).
    pub fn piecewise_uniform(points: &[f64], counts: &[usize]) -> Result<Self> {
        let mut nodes = vec![points[0]];
        for (w, &n) in points.windows(2).zip(counts) {
            if n == 0 {
                continue;
            }
            let h = (w[1] - w[0]) / n as f64;
            for i in 1..n {
                nodes.push(w[0] + h * i as f64);
            }
            nodes.push(w[1]);
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.end() - self.start()
    }

    /// Element containing `x`; nodes belong to the element on their right,
    /// except the last node. `None` outside the mesh.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return None;
        }
        let idx = self.nodes.partition_point(|&n| n <= x);
        Some(idx.saturating_sub(1).min(self.elements() - 1))
    }
}

/// Shape functions on [0, 1] for an element of length `len`:
/// rows are (value, d/dx, d²/dx²), columns the local dofs
/// (left value, left slope, right value, right slope).
fn shape(t: f64, len: f64) -> [[f64; 4]; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    let val = [
        1.0 - 3.0 * t2 + 2.0 * t3,
        len * (t - 2.0 * t2 + t3),
        3.0 * t2 - 2.0 * t3,
        len * (t3 - t2),
    ];
    let d1 = [
        (-6.0 * t + 6.0 * t2) / len,
        1.0 - 4.0 * t + 3.0 * t2,
        (6.0 * t - 6.0 * t2) / len,
        3.0 * t2 - 2.0 * t,
    ];
    let d2 = [
        (-6.0 + 12.0 * t) / (len * len),
        (-4.0 + 6.0 * t) / len,
        (6.0 - 12.0 * t) / (len * len),
        (6.0 * t - 2.0) / len,
    ];
    [val, d1, d2]
}

/// Clamped C¹ cubic space on a mesh.
#[derive(Debug, Clone)]
pub struct ClampedSpace {
    mesh: Arc<Mesh1d>,
}

/// Gram data of a [`ClampedSpace`].
#[derive(Debug, Clone)]
pub struct SpaceMatrices {
    /// (u, w)
    pub mass: DMatrix<f64>,
    /// (u', w')
    pub gradient: DMatrix<f64>,
    /// (u'', w'')
    pub bending: DMatrix<f64>,
    /// ∫ w
    pub mean: DVector<f64>,
}

impl ClampedSpace {
    pub fn new(mesh: Mesh1d) -> Result<Self> {
        if mesh.elements() < 2 {
            return Err(Error::InvalidArgument(
                "a clamped space needs at least two elements".into(),
            ));
        }
        Ok(Self { mesh: Arc::new(mesh) })
    }

    pub fn mesh(&self) -> &Arc<Mesh1d> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        2 * (self.mesh.elements() - 1)
    }

    /// Global dof indices of the four local dofs of element `e`
    /// (`None` for the removed boundary dofs).
    fn local_dofs(&self, e: usize) -> [Option<usize>; 4] {
        let last = self.mesh.elements();
        let node = |i: usize, k: usize| {
            if i == 0 || i == last {
                None
            } else {
                Some(2 * (i - 1) + k)
            }
        };
        [node(e, 0), node(e, 1), node(e + 1, 0), node(e + 1, 1)]
    }

    /// Value and first two derivatives of the function with coefficients
    /// `coefs` at `x`; zero outside the mesh.
    pub fn eval(&self, coefs: &[f64], x: f64) -> [f64; 3] {
        let Some(e) = self.mesh.locate(x) else {
            return [0.0; 3];
        };
        let a = self.mesh.nodes[e];
        let len = self.mesh.nodes[e + 1] - a;
        let sh = shape((x - a) / len, len);
        let mut out = [0.0; 3];
        for (k, dof) in self.local_dofs(e).iter().enumerate() {
            if let Some(g) = dof {
                let c = coefs[*g];
                for d in 0..3 {
                    out[d] += c * sh[d][k];
                }
            }
        }
        out
    }

    /// Exact antiderivative from the left mesh end, ∫_{start}^{x} u.
    pub fn antiderivative(&self, coefs: &[f64], x: f64) -> f64 {
        let nodes = &self.mesh.nodes;
        if x <= nodes[0] {
            return 0.0;
        }
        let rule = cubic_exact_rule();
        let x = x.min(self.mesh.end());
        let mut acc = 0.0;
        for e in 0..self.mesh.elements() {
            let (a, b) = (nodes[e], nodes[e + 1]);
            if a >= x {
                break;
            }
            let hi = b.min(x);
            acc += rule.integrate(a, hi, |s| self.eval_in(coefs, e, s)[0]);
        }
        acc
    }

    /// Antiderivative values at every mesh node.
    pub fn node_antiderivatives(&self, coefs: &[f64]) -> Vec<f64> {
        let rule = cubic_exact_rule();
        let nodes = &self.mesh.nodes;
        let mut out = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for e in 0..self.mesh.elements() {
            acc += rule.integrate(nodes[e], nodes[e + 1], |s| self.eval_in(coefs, e, s)[0]);
            out.push(acc);
        }
        out
    }

    /// Evaluation restricted to element `e` (no location search).
    pub fn eval_in(&self, coefs: &[f64], e: usize, x: f64) -> [f64; 3] {
        let a = self.mesh.nodes[e];
        let len = self.mesh.nodes[e + 1] - a;
        let sh = shape((x - a) / len, len);
        let mut out = [0.0; 3];
        for (k, dof) in self.local_dofs(e).iter().enumerate() {
            if let Some(g) = dof {
                let c = coefs[*g];
                for d in 0..3 {
                    out[d] += c * sh[d][k];
                }
            }
        }
        out
    }

    /// Values of every basis function (rows: dofs) at `x`, derivative order `d`.
    pub fn basis_at(&self, x: f64, d: usize) -> Vec<(usize, f64)> {
        let Some(e) = self.mesh.locate(x) else {
            return Vec::new();
        };
        let a = self.mesh.nodes[e];
        let len = self.mesh.nodes[e + 1] - a;
        let sh = shape((x - a) / len, len);
        self.local_dofs(e)
            .iter()
            .enumerate()
            .filter_map(|(k, dof)| dof.map(|g| (g, sh[d][k])))
            .collect()
    }

    /// Mass, gradient and bending matrices plus the mean functional.
    pub fn matrices(&self) -> SpaceMatrices {
        let n = self.dim();
        let mut mass = DMatrix::zeros(n, n);
        let mut gradient = DMatrix::zeros(n, n);
        let mut bending = DMatrix::zeros(n, n);
        let mut mean = DVector::zeros(n);
        let rule = GaussRule::new(4).expect("4-point rule");
        for e in 0..self.mesh.elements() {
            let a = self.mesh.nodes[e];
            let len = self.mesh.nodes[e + 1] - a;
            let dofs = self.local_dofs(e);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = 0.5 * (t + 1.0);
                let wt = 0.5 * w * len;
                let sh = shape(s, len);
                for (i, di) in dofs.iter().enumerate() {
                    let Some(gi) = di else { continue };
                    mean[*gi] += wt * sh[0][i];
                    for (j, dj) in dofs.iter().enumerate() {
                        let Some(gj) = dj else { continue };
                        mass[(*gi, *gj)] += wt * sh[0][i] * sh[0][j];
                        gradient[(*gi, *gj)] += wt * sh[1][i] * sh[1][j];
                        bending[(*gi, *gj)] += wt * sh[2][i] * sh[2][j];
                    }
                }
            }
        }
        SpaceMatrices {
            mass,
            gradient,
            bending,
            mean,
        }
    }

    /// Lowest `count` clamped-beam modes, `(u'', w'') = λ (u, w)`, L²-normalized
    /// with positive curvature at the left end.
    pub fn beam_modes(&self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if count > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "requested {count} modes from a space of dimension {}",
                self.dim()
            )));
        }
        let mats = self.matrices();
        let (vals, vecs) = generalized_symmetric_eigen(&mats.bending, &mats.mass)?;
        let mut modes = Vec::with_capacity(count);
        for j in 0..count {
            let mut c: Vec<f64> = vecs.column(j).iter().copied().collect();
            self.fix_sign(&mut c);
            modes.push(c);
        }
        Ok((vals[..count].to_vec(), modes))
    }

    /// Flips `coefs` so that the curvature at the left end is positive
    /// (falling back to the first nonzero coefficient when it vanishes).
    pub fn fix_sign(&self, coefs: &mut [f64]) {
        let curv = self.eval_in(coefs, 0, self.mesh.start())[2];
        let scale = coefs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let key = if curv.abs() > 1e-8 * scale {
            curv
        } else {
            coefs.iter().copied().find(|c| c.abs() > 1e-8 * scale).unwrap_or(1.0)
        };
        if key < 0.0 {
            coefs.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

fn cubic_exact_rule() -> GaussRule {
    GaussRule::new(2).expect("2-point rule")
}
