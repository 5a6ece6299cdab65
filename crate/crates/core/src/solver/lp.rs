//! Linear programs on top of the interior-point solver, with a vertex
//! polish so that nondegenerate optima come back to full precision.

use super::ipm::{solve, SolveStatus, SolverResult};
use super::problem::ConicQp;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, DenseMatrix};

const LP_MAX_ITER: usize = 200;

/// min cᵀv  s.t.  A v = b,  v_i ≥ 0 where `nonneg[i]`.
pub fn solve_lp(
    aeq: &DenseMatrix,
    beq: &[f64],
    c: &[f64],
    nonneg: &[bool],
    tol: f64,
) -> Result<SolverResult> {
    let dim = c.len();
    if nonneg.len() != dim {
        return Err(Error::Dimension("bound mask length differs from dimension".into()));
    }
    let qp = ConicQp::new(
        DenseMatrix::zeros(dim, dim),
        c.to_vec(),
        aeq.clone(),
        beq.to_vec(),
        nonneg.to_vec(),
        Vec::new(),
    )?;
    let mut res = solve(&qp, tol, LP_MAX_ITER);
    if res.status == SolveStatus::Optimal {
        if let Some(v) = polish_vertex(aeq, beq, nonneg, &res.v) {
            let obj = dot(c, &v);
            if obj <= res.obj + tol * (1.0 + res.obj.abs()) {
                res.obj = obj;
                res.v = v;
            }
        }
    }
    Ok(res)
}

/// Re-solves the equalities restricted to the clearly nonzero coordinates.
/// Succeeds only when those columns form a square nonsingular system whose
/// solution respects the bounds.
fn polish_vertex(aeq: &DenseMatrix, beq: &[f64], nonneg: &[bool], v: &[f64]) -> Option<Vec<f64>> {
    let scale = norm_inf(v).max(1.0);
    let basis: Vec<usize> = (0..v.len())
        .filter(|&i| !nonneg[i] || v[i] > 1e-7 * scale)
        .collect();
    let m = aeq.rows();
    if basis.len() != m {
        return None;
    }
    let mut sys = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for (k, &j) in basis.iter().enumerate() {
            sys[(i, k)] = aeq[(i, j)];
        }
    }
    let sol = gauss_solve(sys, beq.to_vec())?;
    let mut out = vec![0.0; v.len()];
    for (k, &j) in basis.iter().enumerate() {
        if nonneg[j] && sol[k] < 0.0 {
            return None;
        }
        out[j] = sol[k];
    }
    let resid: Vec<f64> = aeq.matvec(&out).iter().zip(beq).map(|(a, b)| a - b).collect();
    if norm_inf(&resid) > 1e-12 * (1.0 + norm_inf(beq)) {
        return None;
    }
    Some(out)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn gauss_solve(mut a: DenseMatrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.rows();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(piv, col)].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                let t = a[(col, k)];
                a[(col, k)] = a[(piv, k)];
                a[(piv, k)] = t;
            }
            b.swap(col, piv);
        }
        for i in (col + 1)..n {
            let f = a[(i, col)] / a[(col, col)];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[(i, k)] -= f * a[(col, k)];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[(i, k)] * x[k]).sum();
        x[i] = (b[i] - s) / a[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_x_on_segment() {
        let aeq = DenseMatrix::from_rows(&[&[1.0, 1.0]]);
        let r = solve_lp(&aeq, &[1.0], &[-1.0, 0.0], &[true, true], 1e-9).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.v, vec![1.0, 0.0]);
        assert_eq!(r.obj, -1.0);
    }

    #[test]
    fn infeasible_equality() {
        let aeq = DenseMatrix::from_rows(&[&[1.0]]);
        let r = solve_lp(&aeq, &[-1.0], &[0.0], &[true], 1e-9).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn gauss_solves_permuted_system() {
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0], &[3.0, 1.0]]);
        let x = gauss_solve(a, vec![4.0, 5.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }
}
