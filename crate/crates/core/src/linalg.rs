//! Thin numerical helpers over nalgebra used by the model and simulation code.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Eigenvalues of a symmetric matrix in ascending order.
pub(crate) fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let sym = m.symmetrize().to_nalgebra();
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue and a unit eigenvector for it.
pub(crate) fn sym_min_eigenpair(m: &Matrix) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(m.symmetrize().to_nalgebra());
    let k = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty matrix");
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub(crate) fn cholesky_lower(m: &Matrix, what: &'static str) -> Result<Matrix> {
    let chol = nalgebra::Cholesky::new(m.symmetrize().to_nalgebra()).ok_or(Error::Cholesky(what))?;
    Matrix::from_nalgebra(&chol.l()).map_err(|_| Error::Cholesky(what))
}

/// Solves `(A ⊗ I + I ⊗ A) vec(C) = vec(rhs)`, i.e. `AC + CAᵀ = rhs`, with
/// `vec` taken row-major.
pub(crate) fn lyapunov_kron(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let d = a.rows();
    let n = d * d;
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            let row = i * d + j;
            for m in 0..d {
                // (AC)_ij = Σ_m A_im C_mj
                k[(row, m * d + j)] += a[(i, m)];
                // (CAᵀ)_ij = Σ_m C_im A_jm
                k[(row, i * d + m)] += a[(j, m)];
            }
        }
    }
    let b = DVector::from_row_slice(rhs.as_slice());
    let lu = k.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("Kronecker Lyapunov system (eigenvalue pair sums to zero)".into()))?;
    // One step of iterative refinement keeps the residual at roundoff level.
    let r = &b - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("Kronecker Lyapunov system produced non-finite entries".into()));
    }
    Ok(Matrix::from_raw(d, d, x.iter().copied().collect()))
}

// Padé(13) coefficients for the scaling-and-squaring matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 64;

/// Matrix exponential via Padé(13) scaling and squaring.
pub(crate) fn expm(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let m = a.to_nalgebra();
    let norm1 = (0..n).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    if s > MAX_SQUARINGS {
        return Err(Error::ExpmOverflow(norm1));
    }
    let scaled = &m * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::ExpmOverflow(norm1))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Matrix::from_nalgebra(&r).map_err(|_| Error::ExpmOverflow(norm1))
}

/// Complex eigenvalues of a general real matrix via the real Schur form.
pub(crate) fn complex_eigenvalues(a: &Matrix) -> Result<Vec<Complex<f64>>> {
    let schur = a.to_nalgebra().try_schur(f64::EPSILON, 10_000).ok_or(Error::EigenNonConvergence)?;
    let ev = schur.complex_eigenvalues();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenNonConvergence);
    }
    Ok(ev.iter().copied().collect())
}

/// Result of building a unit-column eigenvector matrix for `a`.
pub(crate) struct EigenBasis {
    /// Condition number of the eigenvector matrix; infinite when the
    /// eigenvectors fail to span.
    pub condition: f64,
}

/// Builds an eigenvector matrix with unit-norm columns by taking null spaces of
/// `A - θI` for each cluster of (numerically) equal eigenvalues.
pub(crate) fn eigen_basis(a: &Matrix, eigenvalues: &[Complex<f64>]) -> EigenBasis {
    let d = a.rows();
    let scale = a.norm_max().max(1.0);
    let cluster_tol = 1e-6 * scale;
    let residual_tol = 1e-5 * scale;

    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for &z in eigenvalues {
        match clusters.iter_mut().find(|c| (c[0] - z).norm() <= cluster_tol) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }

    let ac: DMatrix<Complex<f64>> = a.to_nalgebra().map(|x| Complex::new(x, 0.0));
    let mut columns: Vec<DVector<Complex<f64>>> = Vec::with_capacity(d);
    for cluster in &clusters {
        let theta = cluster.iter().sum::<Complex<f64>>() / cluster.len() as f64;
        let shifted = &ac - DMatrix::<Complex<f64>>::identity(d, d) * theta;
        let svd = shifted.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested V*");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        for &k in order.iter().take(cluster.len()) {
            let v: DVector<Complex<f64>> = v_t.row(k).adjoint().into_owned();
            let residual = (&shifted * &v).norm();
            if !(residual <= residual_tol) {
                return EigenBasis { condition: f64::INFINITY };
            }
            columns.push(v.normalize());
        }
    }
    let p = DMatrix::from_columns(&columns);
    let sv = p.singular_values();
    let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    EigenBasis { condition }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_scalar_and_diagonal() {
        let e = expm(&Matrix::scalar(-0.1)).unwrap();
        assert!((e[(0, 0)] - (-0.1f64).exp()).abs() < 1e-15);
        let e = expm(&Matrix::from_diag(&[-0.5, -1.0, 3.0])).unwrap();
        for (k, x) in [-0.5f64, -1.0, 3.0].iter().enumerate() {
            assert!((e[(k, k)] - x.exp()).abs() < 1e-13 * x.exp());
        }
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        // exp of a rotation generator: [[0, -w], [w, 0]] -> rotation by w.
        let w = 40.0f64;
        let a = Matrix::from_rows(&[vec![0.0, -w], vec![w, 0.0]]).unwrap();
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - w.cos()).abs() < 1e-11);
        assert!((e[(1, 0)] - w.sin()).abs() < 1e-11);
    }

    #[test]
    fn expm_nilpotent_is_exact() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = expm(&a).unwrap();
        assert_eq!(e.as_slice(), &[1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn eigen_basis_flags_jordan_block() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let ev = complex_eigenvalues(&a).unwrap();
        assert!(eigen_basis(&a, &ev).condition.is_infinite());
    }

    #[test]
    fn eigen_basis_repeated_but_diagonalizable() {
        let a = Matrix::from_diag(&[2.0, 2.0, 5.0]);
        let ev = complex_eigenvalues(&a).unwrap();
        let cond = eigen_basis(&a, &ev).condition;
        assert!((cond - 1.0).abs() < 1e-10, "{cond}");
    }

    #[test]
    fn eigen_basis_complex_pair() {
        // Rotation-scaling block: eigenvalues 1 ± 2i, normal matrix so cond = 1.
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![2.0, 1.0]]).unwrap();
        let ev = complex_eigenvalues(&a).unwrap();
        assert!(ev.iter().all(|z| (z.re - 1.0).abs() < 1e-12 && (z.im.abs() - 2.0).abs() < 1e-12));
        let cond = eigen_basis(&a, &ev).condition;
        assert!((cond - 1.0).abs() < 1e-10, "{cond}");
    }
}
