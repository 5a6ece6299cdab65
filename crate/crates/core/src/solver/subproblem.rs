//! The convex subproblem min G(X) − ⟨X, ξ⟩ over the feasible set, posed as
//! a quadratic program.
//!
//! For DCP1 and DCP2 the quartic terms of G are lifted with epigraph
//! variables u = (u_x, u_z, u_{z+1}, u_{z−1}, u_{y+x}, u_{y−x}) bounded
//! below by the squares ‖x‖², z², (z+1)², (z−1)², ‖y+x‖², ‖y−x‖². The
//! objective is nondecreasing in each u, so the bounds are tight at the
//! optimum and the lifted problem has the same minimizers. DCP3 is already
//! a quadratic program.
//!
//! Constraint data and Q do not depend on ξ; a [`Subproblem`] builds them
//! once and only the linear term changes between iterations.

use super::ipm::{solve, SolverResult};
use super::problem::{ConicQp, QuadConstraint, SparseRow};
use crate::error::{Error, Result};
use crate::formulations::{DcPoint, Formulation, FormulationKind};
use crate::linalg::DenseMatrix;

/// Number of epigraph variables in the lifted DCP1/DCP2 problems.
pub const NUM_EPIGRAPH: usize = 6;

#[derive(Debug, Clone)]
pub struct Subproblem {
    kind: FormulationKind,
    n: usize,
    base: ConicQp,
}

impl Subproblem {
    pub fn new(form: &Formulation) -> Self {
        let base = match form.kind {
            FormulationKind::Dcp1 => lifted(form, false),
            FormulationKind::Dcp2 => lifted(form, true),
            FormulationKind::Dcp3 => plain_dcp3(form),
        };
        debug_assert!(base.validate().is_ok());
        Self {
            kind: form.kind,
            n: form.n(),
            base,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn template(&self) -> &ConicQp {
        &self.base
    }

    /// The problem for linearization vector ξ = ρX + ∇H(X) (+ inertia).
    pub fn instantiate(&self, xi: &DcPoint) -> Result<ConicQp> {
        if xi.kind() != self.kind || xi.n() != self.n {
            return Err(Error::Dimension(format!(
                "linearization vector is {} with n = {}, subproblem is {} with n = {}",
                xi.kind(),
                xi.n(),
                self.kind,
                self.n
            )));
        }
        let mut qp = self.base.clone();
        qp.c.iter_mut().for_each(|c| *c = 0.0);
        let n = self.n;
        let xi = xi.as_slice();
        match self.kind {
            FormulationKind::Dcp1 | FormulationKind::Dcp3 => {
                for (c, v) in qp.c.iter_mut().zip(xi) {
                    *c = -v;
                }
            }
            FormulationKind::Dcp2 => {
                // (x, y, z) sit first; the slack block follows z.
                for i in 0..=2 * n {
                    qp.c[i] = -xi[i];
                }
            }
        }
        Ok(qp)
    }

    /// The iterate encoded in a solution vector.
    pub fn extract(&self, v: &[f64]) -> DcPoint {
        let n = self.n;
        let flat = match self.kind {
            FormulationKind::Dcp1 => v[..3 * n + 1].to_vec(),
            FormulationKind::Dcp2 => v[..2 * n + 1].to_vec(),
            FormulationKind::Dcp3 => v[..3 * n].to_vec(),
        };
        DcPoint::from_flat(self.kind, n, flat).expect("layout matches formulation")
    }

    /// Largest gap between an epigraph variable and the square it bounds;
    /// zero when the problem has no quadratic constraints.
    pub fn tightness_gap(&self, v: &[f64]) -> f64 {
        self.base
            .quad
            .iter()
            .map(|c| (c.bound(v) - c.square(v)).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, xi: &DcPoint, tol: f64, max_iter: usize) -> Result<SolverResult> {
        Ok(solve(&self.instantiate(xi)?, tol, max_iter))
    }
}

/// One-shot construction of the subproblem for ξ.
pub fn build_subproblem(form: &Formulation, xi: &DcPoint) -> Result<ConicQp> {
    Subproblem::new(form).instantiate(xi)
}

fn lifted(form: &Formulation, slack_rows: bool) -> ConicQp {
    let n = form.n();
    let a = form.a();
    let b = form.b();
    let rho = form.rho;
    let xo = 0;
    let yo = n;
    // DCP1: x y w z u ; DCP2: x y z s u
    let (zo, wo) = if slack_rows { (2 * n, 2 * n + 1) } else { (3 * n, 2 * n) };
    let uo = 3 * n + 1;
    let dim = uo + NUM_EPIGRAPH;
    let (ux, uz, uzp, uzm, uypx, uymx) = (uo, uo + 1, uo + 2, uo + 3, uo + 4, uo + 5);

    let mut q = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        q[(yo + i, yo + i)] += 2.0;
    }
    // [(u_{z+1} + u_{y−x})² + (u_{z−1} + u_{y+x})²]/16 + (u_z + u_x)²/2
    for (p, r, wgt) in [(uzp, uymx, 0.125), (uzm, uypx, 0.125), (uz, ux, 1.0)] {
        q[(p, p)] += wgt;
        q[(r, r)] += wgt;
        q[(p, r)] += wgt;
        q[(r, p)] += wgt;
    }
    if slack_rows {
        // xᵀBx + ‖x − Ay‖²/4
        let at = form.a_transpose();
        let ata = at.matmul(a);
        for i in 0..n {
            for j in 0..n {
                q[(xo + i, xo + j)] += b[(i, j)] + b[(j, i)];
                q[(xo + i, yo + j)] -= 0.5 * a[(i, j)];
                q[(yo + j, xo + i)] -= 0.5 * a[(i, j)];
                q[(yo + i, yo + j)] += 0.5 * ata[(i, j)];
            }
            q[(xo + i, xo + i)] += 0.5;
        }
    } else {
        // ‖x + w‖²/4
        for i in 0..n {
            q[(xo + i, xo + i)] += 0.5;
            q[(wo + i, wo + i)] += 0.5;
            q[(xo + i, wo + i)] += 0.5;
            q[(wo + i, xo + i)] += 0.5;
        }
    }
    // ρ/2 on the original variables (x, y, w, z) or (x, y, z).
    let orig: Vec<usize> = if slack_rows {
        (0..=2 * n).collect()
    } else {
        (0..=3 * n).collect()
    };
    for &i in &orig {
        q[(i, i)] += rho;
    }

    // Bx − Ay − (w or s) = 0, eᵀx = 1, eᵀy − z = 0
    let mut aeq = DenseMatrix::zeros(n + 2, dim);
    for i in 0..n {
        for j in 0..n {
            aeq[(i, xo + j)] = b[(i, j)];
            aeq[(i, yo + j)] = -a[(i, j)];
        }
        aeq[(i, wo + i)] = -1.0;
        aeq[(n, xo + i)] = 1.0;
        aeq[(n + 1, yo + i)] = 1.0;
    }
    aeq[(n + 1, zo)] = -1.0;
    let mut beq = vec![0.0; n + 2];
    beq[n] = 1.0;

    let mut nonneg = vec![false; dim];
    nonneg[..uo].iter_mut().for_each(|v| *v = true);

    let block = |f: &dyn Fn(usize) -> Vec<(usize, f64)>| -> Vec<SparseRow> {
        (0..n).map(|i| SparseRow::new(&f(i), 0.0)).collect()
    };
    let quad = vec![
        QuadConstraint {
            rows: block(&|i| vec![(xo + i, 1.0)]),
            d: vec![(ux, 1.0)],
            r: 0.0,
        },
        QuadConstraint {
            rows: vec![SparseRow::new(&[(zo, 1.0)], 0.0)],
            d: vec![(uz, 1.0)],
            r: 0.0,
        },
        QuadConstraint {
            rows: vec![SparseRow::new(&[(zo, 1.0)], 1.0)],
            d: vec![(uzp, 1.0)],
            r: 0.0,
        },
        QuadConstraint {
            rows: vec![SparseRow::new(&[(zo, 1.0)], -1.0)],
            d: vec![(uzm, 1.0)],
            r: 0.0,
        },
        QuadConstraint {
            rows: block(&|i| vec![(yo + i, 1.0), (xo + i, 1.0)]),
            d: vec![(uypx, 1.0)],
            r: 0.0,
        },
        QuadConstraint {
            rows: block(&|i| vec![(yo + i, 1.0), (xo + i, -1.0)]),
            d: vec![(uymx, 1.0)],
            r: 0.0,
        },
    ];

    ConicQp {
        dim,
        q,
        c: vec![0.0; dim],
        aeq,
        beq,
        nonneg,
        quad,
    }
}

fn plain_dcp3(form: &Formulation) -> ConicQp {
    let n = form.n();
    let a = form.a();
    let b = form.b();
    let (rho, eta) = (form.rho, form.eta);
    let dim = 3 * n;
    let (xo, yo, wo) = (0, n, 2 * n);

    // (1 + η/2)‖y‖² + (η/2)‖x‖² + ‖x + w‖²/4 + ρ/2‖(x, y, w)‖²
    let mut q = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        q[(xo + i, xo + i)] = eta + 0.5 + rho;
        q[(yo + i, yo + i)] = 2.0 + eta + rho;
        q[(wo + i, wo + i)] = 0.5 + rho;
        q[(xo + i, wo + i)] = 0.5;
        q[(wo + i, xo + i)] = 0.5;
    }

    let mut aeq = DenseMatrix::zeros(n + 1, dim);
    for i in 0..n {
        for j in 0..n {
            aeq[(i, xo + j)] = b[(i, j)];
            aeq[(i, yo + j)] = -a[(i, j)];
        }
        aeq[(i, wo + i)] = -1.0;
        aeq[(n, xo + i)] = 1.0;
    }
    let mut beq = vec![0.0; n + 1];
    beq[n] = 1.0;

    ConicQp {
        dim,
        q,
        c: vec![0.0; dim],
        aeq,
        beq,
        nonneg: vec![true; dim],
        quad: Vec::new(),
    }
}
