//! The drift model: assumption (H), the stationary covariance `C∞` and the
//! ergodic constants consumed by every bound.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

/// Default ceiling on the eigenvector-matrix condition number above which a
/// matrix is treated as numerically non-diagonalizable.
pub const DEFAULT_CONDITION_CEILING: f64 = 1e12;

/// A drift matrix together with its sparsity and, for generated models, the
/// generator inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub a0: Matrix,
    pub d: usize,
    pub s0: usize,
    pub seed: Option<u64>,
    pub margin: Option<f64>,
}

impl ModelSpec {
    pub fn new(a0: Matrix) -> Result<Self> {
        if !a0.is_square() {
            return Err(Error::Shape(format!("drift matrix must be square, got {}x{}", a0.rows(), a0.cols())));
        }
        Ok(Self { d: a0.rows(), s0: a0.norm_l0(), a0, seed: None, margin: None })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            d: self.d,
            s0: self.s0,
            entries: self.a0.as_slice().to_vec(),
            seed: self.seed,
            margin: self.margin,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let a0 = Matrix::new(file.d, file.d, file.entries)?;
        let mut spec = Self::new(a0)?;
        if spec.s0 != file.s0 {
            return Err(Error::InvalidArgument(format!(
                "model file declares s0={} but entries have {} nonzeros",
                file.s0, spec.s0
            )));
        }
        spec.seed = file.seed;
        spec.margin = file.margin;
        Ok(spec)
    }

    /// Loads a model from a JSON model file, or from a matrix CSV when the
    /// extension is `.csv`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            return Self::new(Matrix::read_csv(path)?);
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                source_name: path.display().to_string(),
                message: format!("line {}, column {}: {j}", j.line(), j.column()),
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// On-disk model schema: `{d, s0, entries (row-major), seed, margin}`.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    d: usize,
    s0: usize,
    entries: Vec<f64>,
    seed: Option<u64>,
    margin: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Eigen-summary certifying (or refuting) assumption (H).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HCertificate {
    pub eigenvalues: Vec<Eigenvalue>,
    /// Smallest real part of the spectrum.
    pub r0: f64,
    /// `‖P‖_op ‖P⁻¹‖_op` for the unit-column eigenvector matrix `P`.
    pub p0: f64,
    pub diagonalizable: bool,
    pub condition_estimate: f64,
}

impl HCertificate {
    pub fn holds(&self) -> bool {
        self.diagonalizable && self.r0 > 0.0
    }

    pub(crate) fn require(&self) -> Result<()> {
        if !self.diagonalizable {
            return Err(Error::AssumptionH(format!(
                "not diagonalizable (eigenvector condition {:.3e})",
                self.condition_estimate
            )));
        }
        if self.r0 <= 0.0 {
            return Err(Error::AssumptionH(format!("min real part of spectrum r0 = {} ≤ 0", self.r0)));
        }
        Ok(())
    }
}

pub fn check_assumption_h(a: &Matrix) -> Result<HCertificate> {
    check_assumption_h_with(a, DEFAULT_CONDITION_CEILING)
}

pub fn check_assumption_h_with(a: &Matrix, condition_ceiling: f64) -> Result<HCertificate> {
    if !a.is_square() {
        return Err(Error::Shape(format!("drift matrix must be square, got {}x{}", a.rows(), a.cols())));
    }
    let ev = linalg::complex_eigenvalues(a)?;
    let r0 = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let condition = linalg::eigen_basis(a, &ev).condition;
    Ok(HCertificate {
        eigenvalues: ev.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect(),
        r0,
        p0: condition,
        diagonalizable: condition <= condition_ceiling,
        condition_estimate: condition,
    })
}

/// Stationary covariance: the solution of `AC + CAᵀ = I`.
pub fn solve_lyapunov(a: &Matrix) -> Result<Matrix> {
    check_assumption_h(a)?.require()?;
    lyapunov_unchecked(a)
}

pub(crate) fn lyapunov_unchecked(a: &Matrix) -> Result<Matrix> {
    let d = a.rows();
    let c = linalg::lyapunov_kron(a, &Matrix::identity(d))?.symmetrize();
    let lam_min = linalg::sym_eigenvalues(&c)[0];
    if !(lam_min > 0.0) {
        return Err(Error::Singular(format!("stationary covariance not positive definite (λ_min = {lam_min:e})")));
    }
    Ok(c)
}

/// `‖AC + CAᵀ - I‖∞`.
pub fn lyapunov_residual(a: &Matrix, c: &Matrix) -> Result<f64> {
    let ac = a.matmul(c)?;
    let cat = c.matmul(&a.transpose())?;
    Ok(ac.add(&cat)?.sub(&Matrix::identity(a.rows()))?.norm_max())
}

/// Everything the concentration and oracle bounds need to know about `A0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicConstants {
    pub c_inf: Matrix,
    /// `λ_max(C∞)`
    pub k_big: f64,
    /// `λ_min(C∞)`
    pub k_small: f64,
    /// `‖diag C∞‖∞`
    pub m_small: f64,
    /// `‖C∞‖∞`
    pub m_big: f64,
    pub r0: f64,
    pub p0: f64,
}

impl ErgodicConstants {
    /// All constants equal to one (`C∞ = [[1]]`); handy for auditing the
    /// closed-form bounds.
    pub fn unit() -> Self {
        Self {
            c_inf: Matrix::scalar(1.0),
            k_big: 1.0,
            k_small: 1.0,
            m_small: 1.0,
            m_big: 1.0,
            r0: 1.0,
            p0: 1.0,
        }
    }
}

pub fn ergodic_constants(a: &Matrix) -> Result<ErgodicConstants> {
    let cert = check_assumption_h(a)?;
    cert.require()?;
    let c_inf = lyapunov_unchecked(a)?;
    let ev = linalg::sym_eigenvalues(&c_inf);
    Ok(ErgodicConstants {
        k_big: *ev.last().expect("non-empty"),
        k_small: ev[0],
        m_small: c_inf.diag_max(),
        m_big: c_inf.norm_max(),
        r0: cert.r0,
        p0: cert.p0,
        c_inf,
    })
}

/// Random sparse drift with exactly `s` nonzeros, all diagonal entries
/// included, whose Gershgorin discs lie in `Re z ≥ margin`.
///
/// Off-diagonal positions are drawn uniformly without replacement; their
/// values are uniform on `[-1, -0.1] ∪ [0.1, 1]`. Each diagonal entry is the
/// absolute off-diagonal row sum plus `margin`.
pub fn generate_sparse_stable(d: usize, s: usize, margin: f64, seed: u64) -> Result<ModelSpec> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if s < d {
        return Err(Error::InvalidArgument(format!("sparsity s={s} < d={d}: the diagonal needs d entries")));
    }
    if s > d * d {
        return Err(Error::InvalidArgument(format!("sparsity s={s} exceeds d²={}", d * d)));
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    let mut rng = rng_from_seed(seed);
    let off_diag = d * d - d;
    let mut a = Matrix::zeros(d, d);
    for k in sample(&mut rng, off_diag, s - d).into_vec() {
        // Enumerate off-diagonal cells row-major, skipping the diagonal.
        let i = k / (d - 1);
        let mut j = k % (d - 1);
        if j >= i {
            j += 1;
        }
        let magnitude = rng.random_range(0.1..=1.0);
        a[(i, j)] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }
    for i in 0..d {
        let radius: f64 = (0..d).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = radius + margin;
    }
    check_assumption_h(&a)?.require()?;
    let mut spec = ModelSpec::new(a)?;
    spec.seed = Some(seed);
    spec.margin = Some(margin);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated trapezoid quadrature of `∫₀^∞ e^{-sA} e^{-sAᵀ} ds`, with the
    /// upper limit chosen from the spectral gap. Independent of the Kronecker
    /// route.
    fn quadrature_c_inf(a: &Matrix) -> Matrix {
        let r0 = check_assumption_h(a).unwrap().r0;
        let upper = 40.0 / r0;
        let n = 40_000;
        let h = upper / n as f64;
        let step = linalg::expm(&a.scale(-h)).unwrap();
        let d = a.rows();
        let mut e = Matrix::identity(d);
        let mut acc = Matrix::zeros(d, d);
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc = acc.add(&e.matmul(&e.transpose()).unwrap().scale(w * h)).unwrap();
            e = e.matmul(&step).unwrap();
        }
        acc
    }

    #[test]
    fn scalar_certificate() {
        let c = check_assumption_h(&Matrix::scalar(0.5)).unwrap();
        assert_eq!(c.eigenvalues, vec![Eigenvalue { re: 0.5, im: 0.0 }]);
        assert_eq!(c.r0, 0.5);
        assert!((c.p0 - 1.0).abs() < 1e-12);
        assert!(c.diagonalizable && c.holds());
    }

    #[test]
    fn diagonal_certificate() {
        let c = check_assumption_h(&Matrix::from_diag(&[1.0, 2.0, 3.0])).unwrap();
        assert!((c.r0 - 1.0).abs() < 1e-14);
        assert!((c.p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_with_negative_eigenvalue_fails() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.0, -0.5]]).unwrap();
        let c = check_assumption_h(&a).unwrap();
        assert!((c.r0 + 0.5).abs() < 1e-12);
        assert!(!c.holds());
        assert!(matches!(solve_lyapunov(&a), Err(Error::AssumptionH(_))));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(check_assumption_h(&Matrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn jordan_block_is_not_diagonalizable() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let c = check_assumption_h(&a).unwrap();
        assert!(!c.diagonalizable);
        assert!(matches!(solve_lyapunov(&a), Err(Error::AssumptionH(_))));
    }

    #[test]
    fn condition_ceiling_is_configurable() {
        let a = Matrix::from_rows(&[vec![1.0, 100.0], vec![0.0, 2.0]]).unwrap();
        let c = check_assumption_h_with(&a, 10.0).unwrap();
        assert!(c.condition_estimate > 10.0 && !c.diagonalizable);
        assert!(check_assumption_h(&a).unwrap().diagonalizable);
    }

    #[test]
    fn lyapunov_trivial_cases() {
        let c = solve_lyapunov(&Matrix::scalar(0.5)).unwrap();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-15);
        let c = solve_lyapunov(&Matrix::from_diag(&[1.0, 2.0])).unwrap();
        assert!(c.max_abs_diff(&Matrix::from_diag(&[0.5, 0.25])).unwrap() < 1e-15);
    }

    #[test]
    fn lyapunov_matches_quadrature() {
        let a = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.0, 2.0]]).unwrap();
        let c = solve_lyapunov(&a).unwrap();
        assert!(lyapunov_residual(&a, &c).unwrap() < 1e-10);
        let q = quadrature_c_inf(&a);
        assert!(c.max_abs_diff(&q).unwrap() < 1e-6, "{c:?} vs {q:?}");
    }

    #[test]
    fn lyapunov_matches_quadrature_random_small() {
        for (d, seed) in [(2, 3), (3, 11), (4, 5)] {
            let spec = generate_sparse_stable(d, d + 2, 0.5, seed).unwrap();
            let c = solve_lyapunov(&spec.a0).unwrap();
            assert!(lyapunov_residual(&spec.a0, &c).unwrap() <= 1e-10 * d as f64);
            let q = quadrature_c_inf(&spec.a0);
            assert!(c.max_abs_diff(&q).unwrap() < 1e-6);
        }
    }

    #[test]
    fn ergodic_constants_trivial() {
        let c = ergodic_constants(&Matrix::scalar(0.5)).unwrap();
        for v in [c.r0, c.k_big, c.k_small, c.m_small, c.m_big] {
            assert!((v - if v == c.r0 { 0.5 } else { 1.0 }).abs() < 1e-14);
        }
        assert!((c.p0 - 1.0).abs() < 1e-12);

        let c = ergodic_constants(&Matrix::from_diag(&[1.0, 2.0])).unwrap();
        assert!((c.k_big - 0.5).abs() < 1e-14);
        assert!((c.k_small - 0.25).abs() < 1e-14);
        assert!((c.m_small - 0.5).abs() < 1e-14);
        assert!((c.m_big - 0.5).abs() < 1e-14);
    }

    /// Cyclic Jacobi eigenvalue iteration, independent of nalgebra.
    fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
        let d = m.rows();
        let mut a = m.to_rows();
        for _ in 0..100 {
            let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn ergodic_constants_match_jacobi_oracle() {
        let spec = generate_sparse_stable(5, 8, 0.5, 7).unwrap();
        let c = ergodic_constants(&spec.a0).unwrap();
        let ev = jacobi_eigenvalues(&c.c_inf);
        assert!((c.k_small - ev[0]).abs() < 1e-8);
        assert!((c.k_big - ev[4]).abs() < 1e-8);
        assert!(c.k_small > 0.0 && c.k_small <= c.k_big);
        assert!(c.m_small <= c.m_big && c.m_small <= c.k_big + 1e-12);
        assert!(c.k_small <= c.m_small * 5.0);
        assert!(c.c_inf.asymmetry() <= 1e-10);
    }

    #[test]
    fn diagonal_constants_closed_form() {
        let theta = [0.7, 1.3, 2.0, 4.5];
        let c = ergodic_constants(&Matrix::from_diag(&theta)).unwrap();
        assert!((c.k_big - 1.0 / (2.0 * 0.7)).abs() < 1e-13);
        assert!((c.k_small - 1.0 / (2.0 * 4.5)).abs() < 1e-13);
        assert!((c.p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_examples() {
        let m = generate_sparse_stable(1, 1, 0.5, 0).unwrap();
        assert_eq!(m.a0.as_slice(), &[0.5]);

        let m = generate_sparse_stable(5, 8, 0.5, 1).unwrap();
        assert_eq!(m.a0.norm_l0(), 8);
        assert_eq!(m.s0, 8);
        assert!(check_assumption_h(&m.a0).unwrap().r0 >= 0.5 - 1e-12);

        assert_eq!(generate_sparse_stable(6, 12, 0.3, 9).unwrap(), generate_sparse_stable(6, 12, 0.3, 9).unwrap());
    }

    #[test]
    fn generator_rejects_bad_sparsity() {
        assert!(generate_sparse_stable(3, 2, 0.5, 0).is_err());
        assert!(generate_sparse_stable(3, 10, 0.5, 0).is_err());
        assert!(generate_sparse_stable(3, 9, 0.0, 0).is_err());
        assert!(generate_sparse_stable(3, 9, 0.5, 0).unwrap().a0.as_slice().iter().all(|&x| x != 0.0));
    }

    #[test]
    fn generator_respects_gershgorin_margin() {
        for seed in 0..30 {
            let d = 2 + (seed as usize % 9);
            let s = d + (seed as usize * 7) % (d * d - d + 1);
            let m = generate_sparse_stable(d, s, 0.25, seed).unwrap();
            assert_eq!(m.s0, s);
            let r0 = check_assumption_h(&m.a0).unwrap().r0;
            assert!(r0 >= 0.25 - 1e-10, "seed {seed}: r0={r0}");
            for i in 0..d {
                for j in 0..d {
                    let x = m.a0[(i, j)].abs();
                    assert!(x == 0.0 || x >= 0.1);
                }
            }
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = generate_sparse_stable(4, 7, 0.5, 3).unwrap();
        let back = ModelSpec::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_json().unwrap().replace("\"s0\": 7", "\"s0\": 6");
        assert!(ModelSpec::from_json(&bad).is_err());
    }
}
