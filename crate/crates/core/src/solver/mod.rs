//! Interior-point solver for the convex subproblems and the bounding LP.

mod ipm;
mod lp;
mod problem;
mod subproblem;

pub use ipm::{solve, SolveStatus, SolverResult};
pub use lp::solve_lp;
pub use problem::{ConicQp, QuadConstraint, SparseRow};
pub use subproblem::{build_subproblem, Subproblem, NUM_EPIGRAPH};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn simplex_least_norm() {
        let n = 4;
        let qp = ConicQp::new(
            DenseMatrix::identity(n).scaled(2.0),
            vec![0.0; n],
            DenseMatrix::from_rows(&[&[1.0; 4]]),
            vec![1.0],
            vec![true; n],
            Vec::new(),
        )
        .unwrap();
        let r = solve(&qp, 1e-10, 100);
        assert_eq!(r.status, SolveStatus::Optimal);
        for v in &r.v {
            assert!((v - 0.25).abs() < 1e-9, "{:?}", r.v);
        }
        assert!(r.kkt_residual <= 1e-10);
    }

    #[test]
    fn tight_epigraph() {
        // min u s.t. x = 1, x² ≤ u
        let qp = ConicQp::new(
            DenseMatrix::zeros(2, 2),
            vec![0.0, 1.0],
            DenseMatrix::from_rows(&[&[1.0, 0.0]]),
            vec![1.0],
            vec![false, false],
            vec![QuadConstraint {
                rows: vec![SparseRow::new(&[(0, 1.0)], 0.0)],
                d: vec![(1, 1.0)],
                r: 0.0,
            }],
        )
        .unwrap();
        let r = solve(&qp, 1e-10, 100);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.v[0] - 1.0).abs() < 1e-9 && (r.v[1] - 1.0).abs() < 1e-8, "{:?}", r.v);
    }

    #[test]
    fn unbounded_ray() {
        let qp = ConicQp::new(
            DenseMatrix::zeros(1, 1),
            vec![-1.0],
            DenseMatrix::zeros(0, 1),
            vec![],
            vec![true],
            Vec::new(),
        )
        .unwrap();
        let r = solve(&qp, 1e-8, 200);
        assert_eq!(r.status, SolveStatus::Unbounded);
    }
}
