//! Zero-mean stationary plate states `K_p β + (F(u), ξ_j) = 0`.
//!
//! Stationarity forces `v = 0`, so only the plate equation remains. Solutions
//! are found by damped Newton from the trivial state, seeded random guesses
//! and, for Berger, by continuation in `Γ` from 0.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::plate_forces::ForceModel;
use crate::plate_modes::PlateBasis;

/// `K_p β + (F(Σ β_j ξ_j + c0 e), ξ_j)`.
pub fn stationary_residual(model: &ForceModel, plate: &PlateBasis, beta: &[f64], c0: f64) -> DVector<f64> {
    let kb = DVector::from_iterator(plate.len(), beta.iter().zip(&plate.eigenvalues).map(|(b, k)| k * b));
    kb + model.force_vector(plate, beta, c0)
}

fn jacobian(model: &ForceModel, plate: &PlateBasis, beta: &[f64]) -> DMatrix<f64> {
    let mut j = model.jacobian(plate, beta, 0.0);
    for (i, k) in plate.eigenvalues.iter().enumerate() {
        j[(i, i)] += k;
    }
    j
}

/// `‖Δu‖` of a modal vector.
pub fn h2_norm(plate: &PlateBasis, beta: &[f64]) -> f64 {
    beta.iter().zip(&plate.eigenvalues).map(|(b, k)| k * b * b).sum::<f64>().sqrt()
}

/// `‖u'‖`.
pub fn slope_norm(plate: &PlateBasis, beta: &[f64]) -> f64 {
    let b = DVector::from_column_slice(beta);
    (b.transpose() * &plate.mode_gradient * &b)[(0, 0)].max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryOptions {
    /// Relative residual target `‖R‖ <= tol (1 + ‖K_p β‖)`.
    pub tol: f64,
    pub max_iter: usize,
    pub random_guesses: usize,
    pub seed: u64,
    /// Number of `Γ` levels from 0 to the target (Berger only).
    pub continuation_steps: usize,
    /// Solutions closer than this in `‖Δ·‖` are merged.
    pub dedup_tol: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 100,
            random_guesses: 8,
            seed: 0,
            continuation_steps: 10,
            dedup_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub beta: DVector<f64>,
    pub residual: f64,
    pub h2_norm: f64,
    pub slope_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySet {
    pub points: Vec<StationaryPoint>,
    /// `Γ` levels visited (a single entry for non-Berger models).
    pub homotopy: Vec<f64>,
    pub guesses_tried: usize,
    pub failures: usize,
}

impl StationarySet {
    pub fn betas(&self) -> Vec<DVector<f64>> {
        self.points.iter().map(|p| p.beta.clone()).collect()
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &StationaryPoint> {
        self.points.iter().filter(|p| p.h2_norm > 0.0)
    }
}

/// Damped Newton with backtracking on `‖R‖`.
pub fn newton(model: &ForceModel, plate: &PlateBasis, guess: &[f64], opts: &StationaryOptions) -> Option<DVector<f64>> {
    let mut b = DVector::from_column_slice(guess);
    let scale = |b: &DVector<f64>| 1.0 + h2_norm(plate, b.as_slice()) * plate.eigenvalues.last().copied().unwrap_or(1.0).sqrt();
    let mut r = stationary_residual(model, plate, b.as_slice(), 0.0);
    for _ in 0..opts.max_iter {
        if r.norm() <= opts.tol * scale(&b) {
            return Some(b);
        }
        let delta = jacobian(model, plate, b.as_slice()).lu().solve(&(-&r))?;
        let mut step = 1.0;
        loop {
            let trial = &b + &delta * step;
            let rt = stationary_residual(model, plate, trial.as_slice(), 0.0);
            if rt.norm() < (1.0 - 1e-4 * step) * r.norm() || step < 1e-8 {
                b = trial;
                r = rt;
                break;
            }
            step *= 0.5;
        }
        if !r.norm().is_finite() {
            return None;
        }
    }
    (r.norm() <= 1e3 * opts.tol * scale(&b)).then_some(b)
}

fn insert(set: &mut Vec<StationaryPoint>, plate: &PlateBasis, model: &ForceModel, beta: DVector<f64>, tol: f64) {
    if set.iter().any(|p| h2_norm(plate, (&p.beta - &beta).as_slice()) <= tol) {
        return;
    }
    let residual = stationary_residual(model, plate, beta.as_slice(), 0.0).norm();
    set.push(StationaryPoint {
        h2_norm: h2_norm(plate, beta.as_slice()),
        slope_norm: slope_norm(plate, beta.as_slice()),
        residual,
        beta,
    });
}

/// Random modal vector scaled so that its amplitude matches the natural
/// scale of the model's nontrivial states.
fn random_guess(rng: &mut ChaCha8Rng, model: &ForceModel, plate: &PlateBasis) -> Vec<f64> {
    let n = plate.len();
    let raw: Vec<f64> = (0..n)
        .map(|j| rng.gen_range(-1.0..1.0) * (plate.eigenvalues[0] / plate.eigenvalues[j]).sqrt())
        .collect();
    let factor = rng.gen_range(0.5..1.5);
    let target = match *model {
        ForceModel::Linear => 1.0,
        // ‖u'‖² near Γ/κ
        ForceModel::Berger { kappa, gamma } => {
            let s = slope_norm(plate, &raw);
            return raw.iter().map(|b| b * factor * (gamma.abs().max(1.0) / kappa).sqrt() / s.max(1e-300)).collect();
        }
        // pointwise amplitude near sqrt(λ/κ3)
        ForceModel::Kirchhoff { lambda, cubic } => (lambda / cubic).sqrt().max(1e-3),
    };
    let norm = raw.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-300);
    raw.iter().map(|b| b * factor * target / norm).collect()
}

fn solve_at(
    model: &ForceModel,
    plate: &PlateBasis,
    seeds: &[DVector<f64>],
    rng: &mut ChaCha8Rng,
    opts: &StationaryOptions,
    tried: &mut usize,
    failures: &mut usize,
) -> Vec<StationaryPoint> {
    let mut found = Vec::new();
    let zero = DVector::zeros(plate.len());
    let mut guesses: Vec<Vec<f64>> = vec![zero.as_slice().to_vec()];
    guesses.extend(seeds.iter().map(|s| s.as_slice().to_vec()));
    guesses.extend((0..opts.random_guesses).map(|_| random_guess(rng, model, plate)));
    for g in guesses {
        *tried += 1;
        match newton(model, plate, &g, opts) {
            Some(b) => {
                let neg = -&b;
                insert(&mut found, plate, model, b, opts.dedup_tol);
                // F is odd, so -u* is stationary as well.
                if stationary_residual(model, plate, neg.as_slice(), 0.0).norm()
                    <= 1e3 * opts.tol * (1.0 + h2_norm(plate, neg.as_slice()) * plate.eigenvalues.last().copied().unwrap_or(1.0).sqrt())
                {
                    insert(&mut found, plate, model, neg, opts.dedup_tol);
                }
            }
            None => *failures += 1,
        }
    }
    found
}

/// All zero-mean stationary states found from the trivial state, random
/// guesses and (Berger) continuation in `Γ`.
pub fn solve_stationary(model: &ForceModel, plate: &PlateBasis, opts: &StationaryOptions) -> StationarySet {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tried = 0;
    let mut failures = 0;
    if plate.is_empty() {
        return StationarySet {
            points: vec![StationaryPoint {
                beta: DVector::zeros(0),
                residual: 0.0,
                h2_norm: 0.0,
                slope_norm: 0.0,
            }],
            homotopy: vec![],
            guesses_tried: 0,
            failures: 0,
        };
    }
    let (levels, make): (Vec<f64>, Box<dyn Fn(f64) -> ForceModel>) = match *model {
        ForceModel::Berger { kappa, gamma } => {
            let n = opts.continuation_steps.max(1);
            (
                (1..=n).map(|i| gamma * i as f64 / n as f64).collect(),
                Box::new(move |g| ForceModel::Berger { kappa, gamma: g }),
            )
        }
        other => (vec![f64::NAN], Box::new(move |_| other)),
    };
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    let mut points = Vec::new();
    for &level in &levels {
        let m = make(level);
        points = solve_at(&m, plate, &seeds, &mut rng, opts, &mut tried, &mut failures);
        seeds = points.iter().filter(|p| p.h2_norm > 0.0).map(|p| p.beta.clone()).collect();
    }
    points.sort_by(|a, b| a.h2_norm.total_cmp(&b.h2_norm).then(a.beta[0].total_cmp(&b.beta[0])));
    StationarySet {
        points,
        homotopy: levels.into_iter().filter(|l| !l.is_nan()).collect(),
        guesses_tried: tried,
        failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchRow {
    pub gamma: f64,
    /// `‖u*'‖`.
    pub amplitude: f64,
    pub residual: f64,
}

/// Berger solutions over a list of `Γ` values, one row per stored state.
pub fn branch_table(kappa: f64, gammas: &[f64], plate: &PlateBasis, opts: &StationaryOptions) -> Vec<BranchRow> {
    let mut rows = Vec::new();
    for &gamma in gammas {
        let set = solve_stationary(&ForceModel::Berger { kappa, gamma }, plate, opts);
        for p in &set.points {
            rows.push(BranchRow {
                gamma,
                amplitude: p.slope_norm,
                residual: p.residual,
            });
        }
    }
    rows
}

/// Branch table over `levels` equally spaced values of the destabilizing
/// parameter (`Γ` for Berger, `λ` for Kirchhoff) up to its configured value.
/// The linear model gives the single trivial row with parameter 0.
pub fn branch_table_for(model: &ForceModel, plate: &PlateBasis, levels: usize, opts: &StationaryOptions) -> Vec<BranchRow> {
    let n = levels.max(1);
    let frac = |i: usize| i as f64 / n as f64;
    match *model {
        ForceModel::Berger { kappa, gamma } => {
            let gammas: Vec<f64> = (1..=n).map(|i| gamma * frac(i)).collect();
            branch_table(kappa, &gammas, plate, opts)
        }
        ForceModel::Kirchhoff { lambda, cubic } => (1..=n)
            .flat_map(|i| {
                let l = lambda * frac(i);
                let set = solve_stationary(&ForceModel::Kirchhoff { lambda: l, cubic }, plate, opts);
                set.points
                    .into_iter()
                    .map(move |p| BranchRow { gamma: l, amplitude: p.slope_norm, residual: p.residual })
            })
            .collect(),
        ForceModel::Linear => vec![BranchRow { gamma: 0.0, amplitude: 0.0, residual: 0.0 }],
    }
}

pub fn write_branch_csv(rows: &[BranchRow], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "Gamma,amplitude,residual")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.gamma, r.amplitude, r.residual)?;
    }
    Ok(())
}

/// Smallest `μ` of `K_p y = μ G y`, the buckling threshold of the Berger model
/// in the modal space.
pub fn buckling_threshold(plate: &PlateBasis) -> crate::Result<f64> {
    let kp = DMatrix::from_diagonal(&DVector::from_column_slice(&plate.eigenvalues));
    let (vals, _) = crate::linalg::generalized_symmetric_eigen(&kp, &plate.mode_gradient)?;
    Ok(vals[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plate_modes::{clamped_raw_basis, zero_mean_eigenmodes};

    fn plate() -> PlateBasis {
        zero_mean_eigenmodes(&clamped_raw_basis(0.0, 1.0, 16).unwrap(), 6, 8).unwrap()
    }

    #[test]
    fn residual_examples() {
        let p = plate();
        let zero = [0.0; 6];
        assert_eq!(stationary_residual(&ForceModel::Linear, &p, &zero, 0.0).norm(), 0.0);
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let r = stationary_residual(&ForceModel::Linear, &p, &e1, 0.0);
        assert_eq!(r[0], p.eigenvalues[0]);
        assert!(r.rows(1, 5).amax() == 0.0);
    }

    #[test]
    fn linear_set_is_trivial() {
        let p = plate();
        let s = solve_stationary(&ForceModel::Linear, &p, &StationaryOptions::default());
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].h2_norm, 0.0);
    }

    #[test]
    fn berger_below_threshold_is_trivial() {
        let p = plate();
        let mu1 = buckling_threshold(&p).unwrap();
        let m = ForceModel::Berger { kappa: 1.0, gamma: 0.8 * mu1 };
        let s = solve_stationary(&m, &p, &StationaryOptions::default());
        assert_eq!(s.points.len(), 1, "{:?}", s.points);
        assert!(s.points[0].h2_norm < 1e-12);
    }

    #[test]
    fn berger_above_threshold_finds_pair() {
        let p = plate();
        let mu1 = buckling_threshold(&p).unwrap();
        let kappa = 2.0;
        let gamma = 1.5 * mu1;
        let m = ForceModel::Berger { kappa, gamma };
        let s = solve_stationary(&m, &p, &StationaryOptions::default());
        let expect = (gamma - mu1) / kappa;
        let first: Vec<&StationaryPoint> = s
            .nontrivial()
            .filter(|q| (q.slope_norm.powi(2) - expect).abs() <= 1e-8 * expect)
            .collect();
        assert_eq!(first.len(), 2, "{:?}", s.points);
        assert!((&first[0].beta + &first[1].beta).amax() <= 1e-9);
        for q in &s.points {
            assert!(q.residual <= 1e-9 * (1.0 + q.h2_norm * 100.0), "{}", q.residual);
        }
        // the trivial state is always present
        assert!(s.points.iter().any(|q| q.h2_norm == 0.0));
    }

    #[test]
    fn branch_table_rows() {
        let p = plate();
        let mu1 = buckling_threshold(&p).unwrap();
        let rows = branch_table(1.0, &[0.5 * mu1, 1.2 * mu1], &p, &StationaryOptions::default());
        assert_eq!(rows.iter().filter(|r| r.gamma == 0.5 * mu1).count(), 1);
        assert!(rows.iter().filter(|r| r.gamma == 1.2 * mu1).count() >= 3);
        let mut buf = Vec::new();
        write_branch_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("Gamma,amplitude,residual\n"));
    }
}
