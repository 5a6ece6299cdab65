//! Symmetric eigenvalues by cyclic Jacobi rotations and singular values by
//! one-sided Jacobi.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// All eigenvalues of the symmetric part of `m`, ascending.
///
/// Sweeps stop once the off-diagonal Frobenius mass falls below
/// `tol·‖M‖_F`; the eigenvalue error is then bounded by that mass.
pub fn sym_eigenvalues(m: &DenseMatrix, tol: f64) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let n = m.rows();
    let mut a = m.symmetric_part();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let target = (tol.max(f64::EPSILON) * scale).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest eigenvalue of (M + Mᵀ)/2.
pub fn lambda_min_sym(m: &DenseMatrix, tol: f64) -> Result<f64> {
    let eig = sym_eigenvalues(m, tol)?;
    eig.first()
        .copied()
        .ok_or_else(|| Error::Dimension("empty matrix".into()))
}

/// Singular values in descending order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if !m.all_finite() {
        return Err(Error::NonFinite("singular value input"));
    }
    // Orthogonalize columns of a working copy; column norms are the
    // singular values at convergence.
    let mut u = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (r, c) = (u.rows(), u.cols());

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..r {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..r {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = cs * up - sn * uq;
                    u[(i, q)] = sn * up + cs * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..c)
        .map(|j| (0..r).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Two-norm condition number σ_max/σ_min; `+∞` when σ_min is below the
/// round-off floor `n·ε·σ_max`.
pub fn cond_number(m: &DenseMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "condition number of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let sv = singular_values(m)?;
    let (Some(&smax), Some(&smin)) = (sv.first(), sv.last()) else {
        return Err(Error::Dimension("empty matrix".into()));
    };
    let floor = m.rows() as f64 * f64::EPSILON * smax;
    if smax == 0.0 || smin <= floor {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Spectral norm of a symmetric matrix, max |eigenvalue|.
pub fn sym_spectral_norm(m: &DenseMatrix, tol: f64) -> Result<f64> {
    let eig = sym_eigenvalues(m, tol)?;
    Ok(eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_min_small_cases() {
        let i3 = DenseMatrix::identity(3);
        assert!((lambda_min_sym(&i3, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_diag(&[-2.0, 5.0]);
        assert!((lambda_min_sym(&d, 1e-12).unwrap() + 2.0).abs() < 1e-12);
        let swap = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((lambda_min_sym(&swap, 1e-12).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_min_symmetrizes_input() {
        // (M+Mᵀ)/2 = [[0,1],[1,0]]
        let m = DenseMatrix::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((lambda_min_sym(&m, 1e-12).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cond_number_small_cases() {
        assert!((cond_number(&DenseMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_diag(&[10.0, 1.0]);
        assert!((cond_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let jordan = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let expected = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((cond_number(&jordan).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_infinitely_conditioned() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(cond_number(&m).unwrap().is_infinite());
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DenseMatrix::identity(2);
        m[(0, 1)] = f64::INFINITY;
        assert!(lambda_min_sym(&m, 1e-12).is_err());
        assert!(cond_number(&m).is_err());
    }
}
