//! Dense linear-algebra helpers shared by the eigenproblems and the integrator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of `K x = λ M x` with `K` symmetric and `M` symmetric positive definite.
///
/// Eigenvalues ascend; eigenvectors (columns) are `M`-orthonormal.
pub fn generalized_symmetric_eigen(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::Eigen(format!(
            "shape mismatch: K is {}x{}, M is {}x{}",
            k.nrows(),
            k.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let chol = symmetrize(m)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { what: "mass" })?;
    let l = chol.l();
    // C = L^{-1} K L^{-T}
    let linv_k = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let eig = SymmetricEigen::try_new(symmetrize(&c), 1e-15, 0)
        .ok_or_else(|| Error::Eigen("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Eigen("back substitution failed".into()))?;
        vectors.set_column(col, &x);
    }
    Ok((values, vectors))
}

/// Orthonormal basis (columns) of the hyperplane `{x : c·x = 0}`.
///
/// Built from the Householder reflector that maps `c` onto the first axis;
/// its remaining columns span the complement exactly in exact arithmetic.
pub fn orthogonal_complement(c: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = c.len();
    let norm = c.norm();
    if n < 2 || norm == 0.0 {
        return Err(Error::InvalidArgument(
            "constraint vector must be nonzero with length >= 2".into(),
        ));
    }
    let mut v = c / norm;
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vn2 = v.norm_squared();
    let mut q = DMatrix::identity(n, n);
    q -= (&v * v.transpose()) * (2.0 / vn2);
    Ok(q.columns(1, n - 1).into_owned())
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(a));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Spectral condition estimate of a symmetric positive definite matrix.
pub fn spd_condition(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(a));
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_pairs_satisfy_equation() {
        let k = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.5]);
        let (vals, vecs) = generalized_symmetric_eigen(&k, &m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (j, &lam) in vals.iter().enumerate() {
            let x = vecs.column(j);
            let r = &k * x - (&m * x) * lam;
            assert!(r.norm() < 1e-12);
        }
        let gram = vecs.transpose() * &m * &vecs;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal_and_annihilated() {
        let c = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.7]);
        let z = orthogonal_complement(&c).unwrap();
        assert_eq!(z.ncols(), 3);
        assert!((z.transpose() * &c).norm() < 1e-14);
        assert!((z.transpose() * &z - DMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let k = DMatrix::identity(2, 2);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(generalized_symmetric_eigen(&k, &m).is_err());
    }
}
