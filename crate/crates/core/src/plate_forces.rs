//! Nonlinear plate force families with their potentials.
//!
//! All quantities act on the full displacement `u = Σ β_j ξ_j + c0 e` and are
//! tested against the zero-mean modes `ξ_j`.
//!
//! | model     | `F(u)`                      | `Π(u)`                           |
//! |-----------|-----------------------------|----------------------------------|
//! | linear    | 0                           | 0                                |
//! | kirchhoff | `κ3 u³ - λ u`               | `∫ κ3 u⁴/4 - λ u²/2`             |
//! | berger    | `-(κ ‖u'‖² - Γ) u''`        | `κ ‖u'‖⁴/4 - Γ ‖u'‖²/2`          |

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ForceModelSpec;
use crate::plate_modes::PlateBasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ForceModel {
    Linear,
    Kirchhoff { lambda: f64, cubic: f64 },
    Berger { kappa: f64, gamma: f64 },
}

impl From<ForceModelSpec> for ForceModel {
    fn from(spec: ForceModelSpec) -> Self {
        match spec {
            ForceModelSpec::Linear => ForceModel::Linear,
            ForceModelSpec::Kirchhoff { lambda, cubic } => ForceModel::Kirchhoff { lambda, cubic },
            ForceModelSpec::Berger { kappa, gamma } => ForceModel::Berger { kappa, gamma },
        }
    }
}

/// Analytic lower-bound constants and their worst observed margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificates {
    /// Weight of `‖Δu‖²` in both bounds.
    pub eta: f64,
    /// `η‖Δu‖² + Π(u) + C >= 0`.
    pub big_c: f64,
    /// `η‖Δu‖² + (u, F(u)) + c >= 0`.
    pub small_c: f64,
    pub potential_margin: f64,
    pub coercivity_margin: f64,
}

/// `u` and its first derivative at the plate quadrature points.
fn values(plate: &PlateBasis, beta: &[f64], c0: f64, d: usize) -> Vec<f64> {
    let mut out: Vec<f64> = plate.tables.e[d].iter().map(|e| c0 * e).collect();
    for (b, tab) in beta.iter().zip(&plate.tables.mode) {
        if *b != 0.0 {
            for (o, v) in out.iter_mut().zip(&tab[d]) {
                *o += b * v;
            }
        }
    }
    out
}

/// `(f, ξ_j^{(d)})` for a tabulated `f`.
fn test_against(plate: &PlateBasis, f: &[f64], d: usize) -> DVector<f64> {
    let w = &plate.tables.rule.weights;
    DVector::from_iterator(
        plate.len(),
        plate.tables.mode.iter().map(|tab| {
            tab[d].iter().zip(f).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>()
        }),
    )
}

fn weighted_sum(plate: &PlateBasis, f: impl Iterator<Item = f64>) -> f64 {
    plate.tables.rule.sum(f)
}

impl ForceModel {
    pub fn is_linear(&self) -> bool {
        matches!(self, ForceModel::Linear)
    }

    /// `(F(u), ξ_j)`.
    pub fn force_vector(&self, plate: &PlateBasis, beta: &[f64], c0: f64) -> DVector<f64> {
        match *self {
            ForceModel::Linear => DVector::zeros(plate.len()),
            ForceModel::Kirchhoff { lambda, cubic } => {
                let u = values(plate, beta, c0, 0);
                let f: Vec<f64> = u.iter().map(|u| cubic * u * u * u - lambda * u).collect();
                test_against(plate, &f, 0)
            }
            ForceModel::Berger { kappa, gamma } => {
                let du = values(plate, beta, c0, 1);
                let s = weighted_sum(plate, du.iter().map(|v| v * v));
                test_against(plate, &du, 1) * (kappa * s - gamma)
            }
        }
    }

    pub fn potential(&self, plate: &PlateBasis, beta: &[f64], c0: f64) -> f64 {
        match *self {
            ForceModel::Linear => 0.0,
            ForceModel::Kirchhoff { lambda, cubic } => {
                let u = values(plate, beta, c0, 0);
                weighted_sum(
                    plate,
                    u.iter().map(|u| {
                        let u2 = u * u;
                        0.25 * cubic * u2 * u2 - 0.5 * lambda * u2
                    }),
                )
            }
            ForceModel::Berger { kappa, gamma } => {
                let du = values(plate, beta, c0, 1);
                let s = weighted_sum(plate, du.iter().map(|v| v * v));
                0.25 * kappa * s * s - 0.5 * gamma * s
            }
        }
    }

    /// `∂(F(u), ξ_j) / ∂β_k`.
    pub fn jacobian(&self, plate: &PlateBasis, beta: &[f64], c0: f64) -> DMatrix<f64> {
        let n = plate.len();
        match *self {
            ForceModel::Linear => DMatrix::zeros(n, n),
            ForceModel::Kirchhoff { lambda, cubic } => {
                let u = values(plate, beta, c0, 0);
                let w = &plate.tables.rule.weights;
                let coef: Vec<f64> = u.iter().zip(w).map(|(u, w)| (3.0 * cubic * u * u - lambda) * w).collect();
                let t = &plate.tables.mode;
                DMatrix::from_fn(n, n, |j, k| {
                    t[j][0].iter().zip(&t[k][0]).zip(&coef).map(|((a, b), c)| a * b * c).sum()
                })
            }
            ForceModel::Berger { kappa, gamma } => {
                let du = values(plate, beta, c0, 1);
                let s = weighted_sum(plate, du.iter().map(|v| v * v));
                let g = test_against(plate, &du, 1);
                &plate.mode_gradient * (kappa * s - gamma) + &g * g.transpose() * (2.0 * kappa)
            }
        }
    }

    /// Force term with `Δβ · F̄ = Π(u1) - Π(u0)` exactly (up to roundoff).
    ///
    /// Both potentials admit a division-free quotient: Berger depends on `u`
    /// only through `s = ‖u'‖²`, which is quadratic, and the Kirchhoff density
    /// is a polynomial, whose difference quotient is again a polynomial.
    pub fn discrete_gradient(&self, plate: &PlateBasis, beta0: &[f64], beta1: &[f64], c0: f64) -> DVector<f64> {
        match *self {
            ForceModel::Linear => DVector::zeros(plate.len()),
            ForceModel::Kirchhoff { lambda, cubic } => {
                let u0 = values(plate, beta0, c0, 0);
                let u1 = values(plate, beta1, c0, 0);
                let f: Vec<f64> = u0
                    .iter()
                    .zip(&u1)
                    .map(|(a, b)| 0.25 * cubic * (a + b) * (a * a + b * b) - 0.5 * lambda * (a + b))
                    .collect();
                test_against(plate, &f, 0)
            }
            ForceModel::Berger { kappa, gamma } => {
                let d0 = values(plate, beta0, c0, 1);
                let d1 = values(plate, beta1, c0, 1);
                let s0 = weighted_sum(plate, d0.iter().map(|v| v * v));
                let s1 = weighted_sum(plate, d1.iter().map(|v| v * v));
                let mid: Vec<f64> = d0.iter().zip(&d1).map(|(a, b)| 0.5 * (a + b)).collect();
                test_against(plate, &mid, 1) * (0.5 * kappa * (s0 + s1) - gamma)
            }
        }
    }

    /// `(u, F(u))` over the full displacement.
    pub fn pairing(&self, plate: &PlateBasis, beta: &[f64], c0: f64) -> f64 {
        match *self {
            ForceModel::Linear => 0.0,
            ForceModel::Kirchhoff { lambda, cubic } => {
                let u = values(plate, beta, c0, 0);
                weighted_sum(plate, u.iter().map(|u| cubic * u.powi(4) - lambda * u * u))
            }
            ForceModel::Berger { kappa, gamma } => {
                let du = values(plate, beta, c0, 1);
                let s = weighted_sum(plate, du.iter().map(|v| v * v));
                (kappa * s - gamma) * s
            }
        }
    }

    /// Smallest relative mismatch between `(F(u), w)` and centered differences
    /// of `Π` along `w` over `ε ∈ {1e-2, …, 1e-8}`.
    pub fn gradient_check(&self, plate: &PlateBasis, beta: &[f64], c0: f64, w: &[f64]) -> f64 {
        let exact = self.force_vector(plate, beta, c0).iter().zip(w).map(|(f, w)| f * w).sum::<f64>();
        let mut best = f64::INFINITY;
        for p in 2..=8 {
            let eps = 10f64.powi(-p);
            let shift = |s: f64| -> Vec<f64> { beta.iter().zip(w).map(|(b, w)| b + s * w).collect() };
            let fd = (self.potential(plate, &shift(eps), c0) - self.potential(plate, &shift(-eps), c0)) / (2.0 * eps);
            let err = if exact == 0.0 && fd == 0.0 {
                0.0
            } else {
                (fd - exact).abs() / exact.abs().max(fd.abs())
            };
            best = best.min(err);
        }
        best
    }

    /// Closed-form `(η, C, c)` plus worst margins over `samples` (β vectors).
    pub fn bound_certificates(&self, plate: &PlateBasis, samples: &[Vec<f64>], c0: f64) -> Certificates {
        let length = plate.special().b - plate.special().a;
        let (big_c, small_c) = match *self {
            ForceModel::Linear => (0.0, 0.0),
            // min over y of κ3 y⁴/4 - λ y²/2 (and of κ3 y⁴ - λ y²) is -λ²/(4κ3).
            ForceModel::Kirchhoff { lambda, cubic } => {
                let c = length * lambda * lambda / (4.0 * cubic);
                (c, c)
            }
            // min over s >= 0 of κ s²/4 - Γ s/2 (and of κ s² - Γ s) is -Γ₊²/(4κ).
            ForceModel::Berger { kappa, gamma } => {
                let g = gamma.max(0.0);
                let c = g * g / (4.0 * kappa);
                (c, c)
            }
        };
        let eta = 0.0;
        let mut potential_margin = f64::INFINITY;
        let mut coercivity_margin = f64::INFINITY;
        for b in samples {
            let lap2: f64 = b.iter().zip(&plate.eigenvalues).map(|(b, k)| k * b * b).sum::<f64>()
                + c0 * c0 * plate.e_bending;
            potential_margin = potential_margin.min(eta * lap2 + self.potential(plate, b, c0) + big_c);
            coercivity_margin = coercivity_margin.min(eta * lap2 + self.pairing(plate, b, c0) + small_c);
        }
        if samples.is_empty() {
            potential_margin = 0.0;
            coercivity_margin = 0.0;
        }
        Certificates {
            eta,
            big_c,
            small_c,
            potential_margin,
            coercivity_margin,
        }
    }

    /// Largest observed `‖F(u1) - F(u2)‖ / ‖Δ(u1 - u2)‖` over random pairs
    /// with `‖Δu‖ <= radius`. The force is measured in the Euclidean norm of
    /// its modal load vector, the plate-mass dual norm for orthonormal modes.
    pub fn lipschitz_estimate(&self, plate: &PlateBasis, radius: f64, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = plate.len();
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = raw.iter().zip(&plate.eigenvalues).map(|(b, k)| k * b * b).sum::<f64>().sqrt();
            let r = radius * rng.gen_range(0.0..1.0f64);
            raw.iter().map(|b| b * r / norm.max(f64::MIN_POSITIVE)).collect()
        };
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let df = self.force_vector(plate, &a, 0.0) - self.force_vector(plate, &b, 0.0);
            let du = a
                .iter()
                .zip(&b)
                .zip(&plate.eigenvalues)
                .map(|((x, y), k)| k * (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if du > 0.0 {
                worst = worst.max(df.norm() / du);
            }
        }
        worst
    }
}
