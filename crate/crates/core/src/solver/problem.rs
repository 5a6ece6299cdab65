//! Convex quadratic programs with convex quadratic inequality constraints.

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// One row of P in a constraint ‖Pv + p‖² ≤ dᵀv + r, stored sparsely
/// together with its entry of p.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub offset: f64,
}

impl SparseRow {
    pub fn new(entries: &[(usize, f64)], offset: f64) -> Self {
        Self {
            idx: entries.iter().map(|e| e.0).collect(),
            val: entries.iter().map(|e| e.1).collect(),
            offset,
        }
    }

    #[inline]
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &a)| a * v[i])
            .sum::<f64>()
            + self.offset
    }
}

/// ‖Pv + p‖² ≤ dᵀv + r.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub rows: Vec<SparseRow>,
    pub d: Vec<(usize, f64)>,
    pub r: f64,
}

impl QuadConstraint {
    /// ‖Pv + p‖².
    pub fn square(&self, v: &[f64]) -> f64 {
        self.rows.iter().map(|row| row.apply(v).powi(2)).sum()
    }

    /// dᵀv + r.
    pub fn bound(&self, v: &[f64]) -> f64 {
        self.d.iter().map(|&(i, a)| a * v[i]).sum::<f64>() + self.r
    }

    /// Constraint function in ≤ 0 form.
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.square(v) - self.bound(v)
    }

    /// Writes the gradient of `eval` into `out` (overwriting).
    pub fn gradient(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for row in &self.rows {
            let t = 2.0 * row.apply(v);
            for (&i, &a) in row.idx.iter().zip(&row.val) {
                out[i] += t * a;
            }
        }
        for &(i, a) in &self.d {
            out[i] -= a;
        }
    }

    /// h += scale · 2PᵀP
    pub fn add_hessian(&self, scale: f64, h: &mut DenseMatrix) {
        for row in &self.rows {
            for (&i, &a) in row.idx.iter().zip(&row.val) {
                for (&j, &b) in row.idx.iter().zip(&row.val) {
                    h[(i, j)] += 2.0 * scale * a * b;
                }
            }
        }
    }

    fn max_index(&self) -> Option<usize> {
        self.rows
            .iter()
            .flat_map(|r| r.idx.iter().copied())
            .chain(self.d.iter().map(|e| e.0))
            .max()
    }
}

/// min ½vᵀQv + cᵀv  s.t.  A v = b,  v_i ≥ 0 for masked i,  quadratic
/// constraints ‖P_j v + p_j‖² ≤ d_jᵀv + r_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicQp {
    pub dim: usize,
    pub q: DenseMatrix,
    pub c: Vec<f64>,
    pub aeq: DenseMatrix,
    pub beq: Vec<f64>,
    pub nonneg: Vec<bool>,
    pub quad: Vec<QuadConstraint>,
}

impl ConicQp {
    pub fn new(
        q: DenseMatrix,
        c: Vec<f64>,
        aeq: DenseMatrix,
        beq: Vec<f64>,
        nonneg: Vec<bool>,
        quad: Vec<QuadConstraint>,
    ) -> Result<Self> {
        let qp = Self {
            dim: c.len(),
            q,
            c,
            aeq,
            beq,
            nonneg,
            quad,
        };
        qp.validate()?;
        Ok(qp)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if self.q.rows() != n || self.q.cols() != n {
            return Err(Error::Dimension(format!(
                "Q is {}x{}, expected {n}x{n}",
                self.q.rows(),
                self.q.cols()
            )));
        }
        if self.aeq.cols() != n && self.aeq.rows() != 0 {
            return Err(Error::Dimension(format!(
                "equality matrix has {} columns, expected {n}",
                self.aeq.cols()
            )));
        }
        if self.aeq.rows() != self.beq.len() {
            return Err(Error::Dimension("equality rows and right-hand side differ".into()));
        }
        if self.nonneg.len() != n {
            return Err(Error::Dimension("bound mask length differs from dimension".into()));
        }
        if self.quad.iter().filter_map(QuadConstraint::max_index).any(|i| i >= n) {
            return Err(Error::Dimension("quadratic constraint index out of range".into()));
        }
        if !self.q.all_finite()
            || !self.aeq.all_finite()
            || self.c.iter().chain(&self.beq).any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("quadratic program data"));
        }
        Ok(())
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        0.5 * self.q.bilinear(v, v) + dot(&self.c, v)
    }

    /// Number of inequality constraints (bounds plus quadratic).
    pub fn num_inequalities(&self) -> usize {
        self.nonneg.iter().filter(|&&b| b).count() + self.quad.len()
    }
}
