//! The three DC reformulations of the complementarity problem.
//!
//! * `Dcp1` over (x, y, w, z): min ‖y − zx‖² + xᵀw with w = Bx − Ay,
//!   eᵀx = 1, eᵀy = z and all blocks nonnegative.
//! * `Dcp2` over (x, y, z): min ‖y − zx‖² + xᵀ(Bx − Ay) with Bx − Ay ≥ 0,
//!   eᵀx = 1, eᵀy = z.
//! * `Dcp3` over (x, y, w): min ‖y‖² + xᵀw − (xᵀy)²/‖x‖² with w = Bx − Ay,
//!   eᵀx = 1.
//!
//! Each objective is split as f = G − H with G, H convex on the feasible
//! set. Both components carry an extra ρ/2‖X‖² so they are ρ-strongly
//! convex; `grad_h` omits that term because the engine adds ρX itself.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instances::AeicpInstance;
use crate::linalg::{axpy, dot, norm, norm_sq, solve_general, DenseMatrix};
use crate::rng::Prng;

/// Guard against ‖x‖ collapsing on the rational objective. On the
/// hyperplane eᵀx = 1 the norm is at least 1/√n, so this never fires there.
fn dcp3_norm_guard(n: usize) -> f64 {
    0.5 / (n as f64).sqrt()
}

pub const DEFAULT_EPS_ACT: f64 = 1e-8;
pub const Z_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulationKind {
    Dcp1,
    Dcp2,
    Dcp3,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 3] = [Self::Dcp1, Self::Dcp2, Self::Dcp3];

    /// Length of the flattened iterate.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Self::Dcp1 => 3 * n + 1,
            Self::Dcp2 => 2 * n + 1,
            Self::Dcp3 => 3 * n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dcp1 => "DCP1",
            Self::Dcp2 => "DCP2",
            Self::Dcp3 => "DCP3",
        }
    }

    /// Whether the objective is a quartic polynomial along lines.
    pub fn has_polynomial_objective(self) -> bool {
        !matches!(self, Self::Dcp3)
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DCP1" | "1" => Ok(Self::Dcp1),
            "DCP2" | "2" => Ok(Self::Dcp2),
            "DCP3" | "3" => Ok(Self::Dcp3),
            _ => Err(Error::InvalidArgument(format!("unknown formulation `{s}`"))),
        }
    }
}

/// An iterate, stored flat as x | y | w | z, x | y | z or x | y | w.
#[derive(Debug, Clone, PartialEq)]
pub struct DcPoint {
    kind: FormulationKind,
    n: usize,
    data: Vec<f64>,
}

impl DcPoint {
    pub fn zeros(kind: FormulationKind, n: usize) -> Self {
        Self {
            kind,
            n,
            data: vec![0.0; kind.dim(n)],
        }
    }

    pub fn from_flat(kind: FormulationKind, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != kind.dim(n) {
            return Err(Error::Dimension(format!(
                "{kind} with n = {n} needs {} entries, got {}",
                kind.dim(n),
                data.len()
            )));
        }
        Ok(Self { kind, n, data })
    }

    /// Packs blocks; `w` is ignored for DCP2 and `z` for DCP3.
    pub fn from_blocks(kind: FormulationKind, x: &[f64], y: &[f64], w: &[f64], z: f64) -> Self {
        let n = x.len();
        assert_eq!(y.len(), n);
        let mut data = Vec::with_capacity(kind.dim(n));
        data.extend_from_slice(x);
        data.extend_from_slice(y);
        match kind {
            FormulationKind::Dcp1 => {
                assert_eq!(w.len(), n);
                data.extend_from_slice(w);
                data.push(z);
            }
            FormulationKind::Dcp2 => data.push(z),
            FormulationKind::Dcp3 => {
                assert_eq!(w.len(), n);
                data.extend_from_slice(w);
            }
        }
        Self { kind, n, data }
    }

    #[inline]
    pub fn kind(&self) -> FormulationKind {
        self.kind
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.data[..self.n]
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }

    /// The w block; absent for DCP2.
    #[inline]
    pub fn w(&self) -> Option<&[f64]> {
        match self.kind {
            FormulationKind::Dcp2 => None,
            _ => Some(&self.data[2 * self.n..3 * self.n]),
        }
    }

    /// The z scalar; absent for DCP3.
    #[inline]
    pub fn z(&self) -> Option<f64> {
        match self.kind {
            FormulationKind::Dcp1 => Some(self.data[3 * self.n]),
            FormulationKind::Dcp2 => Some(self.data[2 * self.n]),
            FormulationKind::Dcp3 => None,
        }
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.data[..n]
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.data[n..2 * n]
    }

    pub fn w_mut(&mut self) -> Option<&mut [f64]> {
        let n = self.n;
        match self.kind {
            FormulationKind::Dcp2 => None,
            _ => Some(&mut self.data[2 * n..3 * n]),
        }
    }

    pub fn z_mut(&mut self) -> Option<&mut f64> {
        let n = self.n;
        match self.kind {
            FormulationKind::Dcp1 => Some(&mut self.data[3 * n]),
            FormulationKind::Dcp2 => Some(&mut self.data[2 * n]),
            FormulationKind::Dcp3 => None,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    /// self + a·d
    pub fn offset(&self, a: f64, d: &DcPoint) -> DcPoint {
        debug_assert_eq!(self.kind, d.kind);
        let mut out = self.clone();
        axpy(a, &d.data, &mut out.data);
        out
    }

    /// self − other as a direction.
    pub fn diff(&self, other: &DcPoint) -> DcPoint {
        debug_assert_eq!(self.kind, other.kind);
        DcPoint {
            kind: self.kind,
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn dot(&self, other: &DcPoint) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn dist(&self, other: &DcPoint) -> f64 {
        crate::linalg::dist(&self.data, &other.data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One DC formulation bound to an instance.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub kind: FormulationKind,
    pub instance: Arc<AeicpInstance>,
    /// Strong-convexity augmentation added to both DC components.
    pub rho: f64,
    /// Curvature bound on the rational term; only meaningful for DCP3.
    pub eta: f64,
    at: DenseMatrix,
    b_sym: DenseMatrix,
}

impl Formulation {
    /// Binds `kind` to `instance`. For DCP3 this solves the bounding LP to
    /// obtain η.
    pub fn new(kind: FormulationKind, instance: Arc<AeicpInstance>, rho: f64) -> Result<Self> {
        let eta = match kind {
            FormulationKind::Dcp3 => eta_for_dcp3(&instance)?,
            _ => 0.0,
        };
        Self::with_eta(kind, instance, rho, eta)
    }

    /// Binds with a caller-supplied η (ignored unless DCP3).
    pub fn with_eta(
        kind: FormulationKind,
        instance: Arc<AeicpInstance>,
        rho: f64,
        eta: f64,
    ) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!("rho must be >= 0, got {rho}")));
        }
        if kind == FormulationKind::Dcp3 && !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be >= 0, got {eta}")));
        }
        let at = instance.a.transpose();
        let b_sym = instance.b.add(&instance.b.transpose());
        Ok(Self {
            kind,
            instance,
            rho,
            eta,
            at,
            b_sym,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.instance.n
    }

    pub fn dim(&self) -> usize {
        self.kind.dim(self.n())
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.instance.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.instance.b
    }

    pub fn a_transpose(&self) -> &DenseMatrix {
        &self.at
    }

    fn check(&self, p: &DcPoint) -> Result<()> {
        if p.kind != self.kind || p.n != self.n() {
            return Err(Error::Dimension(format!(
                "point is {} with n = {}, formulation is {} with n = {}",
                p.kind,
                p.n,
                self.kind,
                self.n()
            )));
        }
        Ok(())
    }

    fn check_dcp3_x(&self, x: &[f64]) -> Result<f64> {
        let q = norm_sq(x);
        if !(q > 0.0) {
            return Err(Error::Degenerate("x = 0 in the rational objective".into()));
        }
        Ok(q)
    }

    /// Bx − Ay.
    pub fn slack(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut s = self.instance.b.matvec(x);
        let ay = self.instance.a.matvec(y);
        s.iter_mut().zip(&ay).for_each(|(s, a)| *s -= a);
        s
    }

    /// The complementarity vector: the w block, or Bx − Ay for DCP2.
    pub fn w_of(&self, p: &DcPoint) -> Vec<f64> {
        match p.w() {
            Some(w) => w.to_vec(),
            None => self.slack(p.x(), p.y()),
        }
    }

    /// The unregularized objective f.
    pub fn f_value(&self, p: &DcPoint) -> Result<f64> {
        self.check(p)?;
        let (x, y) = (p.x(), p.y());
        Ok(match self.kind {
            FormulationKind::Dcp1 => {
                let z = p.z().unwrap();
                resid_sq(x, y, z) + dot(x, p.w().unwrap())
            }
            FormulationKind::Dcp2 => {
                let z = p.z().unwrap();
                resid_sq(x, y, z) + dot(x, &self.slack(x, y))
            }
            FormulationKind::Dcp3 => {
                let q = self.check_dcp3_x(x)?;
                let s = dot(x, y);
                norm_sq(y) + dot(x, p.w().unwrap()) - s * s / q
            }
        })
    }

    pub fn grad_f(&self, p: &DcPoint) -> Result<DcPoint> {
        self.check(p)?;
        let n = self.n();
        let (x, y) = (p.x(), p.y());
        let mut g = DcPoint::zeros(self.kind, n);
        match self.kind {
            FormulationKind::Dcp1 | FormulationKind::Dcp2 => {
                let z = p.z().unwrap();
                // r = zx − y
                let r: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| z * xi - yi).collect();
                let gz = 2.0 * dot(x, &r);
                {
                    let gx = g.x_mut();
                    for i in 0..n {
                        gx[i] = 2.0 * z * r[i];
                    }
                }
                {
                    let gy = g.y_mut();
                    for i in 0..n {
                        gy[i] = -2.0 * r[i];
                    }
                }
                if let Some(w) = p.w() {
                    axpy(1.0, w, g.x_mut());
                    g.w_mut().unwrap().copy_from_slice(x);
                } else {
                    let bx = self.b_sym.matvec(x);
                    let ay = self.instance.a.matvec(y);
                    let atx = self.at.matvec(x);
                    axpy(1.0, &bx, g.x_mut());
                    axpy(-1.0, &ay, g.x_mut());
                    axpy(-1.0, &atx, g.y_mut());
                }
                *g.z_mut().unwrap() = gz;
            }
            FormulationKind::Dcp3 => {
                let q = self.check_dcp3_x(x)?;
                let s = dot(x, y);
                let w = p.w().unwrap();
                {
                    let gx = g.x_mut();
                    for i in 0..n {
                        gx[i] = w[i] - 2.0 * (s / q) * y[i] + 2.0 * (s * s / (q * q)) * x[i];
                    }
                }
                {
                    let gy = g.y_mut();
                    for i in 0..n {
                        gy[i] = 2.0 * y[i] - 2.0 * (s / q) * x[i];
                    }
                }
                g.w_mut().unwrap().copy_from_slice(x);
            }
        }
        Ok(g)
    }

    /// G including ρ/2‖X‖².
    pub fn g_value(&self, p: &DcPoint) -> Result<f64> {
        self.check(p)?;
        let aug = 0.5 * self.rho * norm_sq(p.as_slice());
        let (x, y) = (p.x(), p.y());
        Ok(aug
            + match self.kind {
                FormulationKind::Dcp1 | FormulationKind::Dcp2 => {
                    let z = p.z().unwrap();
                    let (pp, qm) = quartic_args_g(x, y, z);
                    let zx = z * z + norm_sq(x);
                    let common = norm_sq(y) + (pp * pp + qm * qm) / 16.0 + 0.5 * zx * zx;
                    match p.w() {
                        Some(w) => common + 0.25 * sum_sq(x, w, 1.0),
                        None => {
                            let ay = self.instance.a.matvec(y);
                            common
                                + self.instance.b.bilinear(x, x)
                                + 0.25 * sum_sq(x, &ay, -1.0)
                        }
                    }
                }
                FormulationKind::Dcp3 => {
                    let w = p.w().unwrap();
                    (1.0 + 0.5 * self.eta) * norm_sq(y)
                        + 0.5 * self.eta * norm_sq(x)
                        + 0.25 * sum_sq(x, w, 1.0)
                }
            })
    }

    /// H including ρ/2‖X‖².
    pub fn h_value(&self, p: &DcPoint) -> Result<f64> {
        self.check(p)?;
        let aug = 0.5 * self.rho * norm_sq(p.as_slice());
        let (x, y) = (p.x(), p.y());
        Ok(aug
            + match self.kind {
                FormulationKind::Dcp1 | FormulationKind::Dcp2 => {
                    let z = p.z().unwrap();
                    let (pp, qm) = quartic_args_h(x, y, z);
                    let nx = norm_sq(x);
                    let common = (pp * pp + qm * qm) / 16.0 + 0.5 * (z.powi(4) + nx * nx);
                    match p.w() {
                        Some(w) => common + 0.25 * sum_sq(x, w, -1.0),
                        None => {
                            let ay = self.instance.a.matvec(y);
                            common + 0.25 * sum_sq(x, &ay, 1.0)
                        }
                    }
                }
                FormulationKind::Dcp3 => {
                    let q = self.check_dcp3_x(x)?;
                    let s = dot(x, y);
                    let w = p.w().unwrap();
                    0.5 * self.eta * (norm_sq(x) + norm_sq(y))
                        + s * s / q
                        + 0.25 * sum_sq(x, w, -1.0)
                }
            })
    }

    /// ∇H without the ρ augmentation.
    pub fn grad_h(&self, p: &DcPoint) -> Result<DcPoint> {
        self.check(p)?;
        let n = self.n();
        let (x, y) = (p.x(), p.y());
        let mut g = DcPoint::zeros(self.kind, n);
        match self.kind {
            FormulationKind::Dcp1 | FormulationKind::Dcp2 => {
                let z = p.z().unwrap();
                let (pp, qm) = quartic_args_h(x, y, z);
                let nx = norm_sq(x);
                {
                    let gx = g.x_mut();
                    for i in 0..n {
                        gx[i] = 0.25 * (pp * (x[i] + y[i]) + qm * (x[i] - y[i]))
                            + 2.0 * nx * x[i];
                    }
                }
                {
                    let gy = g.y_mut();
                    for i in 0..n {
                        gy[i] = 0.25 * (pp * (x[i] + y[i]) - qm * (x[i] - y[i]));
                    }
                }
                *g.z_mut().unwrap() = 0.25 * (pp * (z + 1.0) + qm * (z - 1.0)) + 2.0 * z.powi(3);
                match p.w() {
                    Some(w) => {
                        let gx = g.x_mut();
                        for i in 0..n {
                            gx[i] += 0.5 * (x[i] - w[i]);
                        }
                        let gw = g.w_mut().unwrap();
                        for i in 0..n {
                            gw[i] = 0.5 * (w[i] - x[i]);
                        }
                    }
                    None => {
                        // ½(x + Ay) and ½Aᵀ(x + Ay)
                        let mut t = self.instance.a.matvec(y);
                        axpy(1.0, x, &mut t);
                        axpy(0.5, &t, g.x_mut());
                        let att = self.at.matvec(&t);
                        axpy(0.5, &att, g.y_mut());
                    }
                }
            }
            FormulationKind::Dcp3 => {
                let q = self.check_dcp3_x(x)?;
                let s = dot(x, y);
                let w = p.w().unwrap();
                let eta = self.eta;
                {
                    let gx = g.x_mut();
                    for i in 0..n {
                        gx[i] = eta * x[i] + 2.0 * (s / q) * y[i] - 2.0 * (s * s / (q * q)) * x[i]
                            + 0.5 * (x[i] - w[i]);
                    }
                }
                {
                    let gy = g.y_mut();
                    for i in 0..n {
                        gy[i] = eta * y[i] + 2.0 * (s / q) * x[i];
                    }
                }
                let gw = g.w_mut().unwrap();
                for i in 0..n {
                    gw[i] = 0.5 * (w[i] - x[i]);
                }
            }
        }
        Ok(g)
    }

    /// ρX + ∇H(X), the vector the convex subproblem is linearized with.
    pub fn linearization(&self, p: &DcPoint) -> Result<DcPoint> {
        let mut xi = self.grad_h(p)?;
        axpy(self.rho, p.as_slice(), xi.as_mut_slice());
        Ok(xi)
    }

    /// Indices (0-based, into the flattened iterate) of bound constraints
    /// holding within `eps_act`. For DCP2 the slack rows Bx − Ay follow as
    /// indices 2n+1 … 3n.
    pub fn active_set(&self, p: &DcPoint, eps_act: f64) -> Vec<usize> {
        let mut act: Vec<usize> = p
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() <= eps_act)
            .map(|(i, _)| i)
            .collect();
        if self.kind == FormulationKind::Dcp2 {
            let base = p.as_slice().len();
            let s = self.slack(p.x(), p.y());
            act.extend(
                s.iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() <= eps_act)
                    .map(|(i, _)| base + i),
            );
        }
        act
    }

    /// Largest violation of the constraints of the feasible set, scaled so
    /// that equality rows are measured relative to their magnitude.
    pub fn infeasibility(&self, p: &DcPoint) -> f64 {
        if p.kind != self.kind || p.n != self.n() || !p.all_finite() {
            return f64::INFINITY;
        }
        let (x, y) = (p.x(), p.y());
        let mut worst = p.as_slice().iter().fold(0.0_f64, |m, v| m.max(-v));
        worst = worst.max((x.iter().sum::<f64>() - 1.0).abs());
        if let Some(z) = p.z() {
            let ey: f64 = y.iter().sum();
            worst = worst.max((ey - z).abs() / (1.0 + z.abs()));
        }
        let s = self.slack(x, y);
        match p.w() {
            Some(w) => {
                let scale = 1.0 + crate::linalg::norm_inf(w).max(crate::linalg::norm_inf(&s));
                for (wi, si) in w.iter().zip(&s) {
                    worst = worst.max((wi - si).abs() / scale);
                }
            }
            None => {
                worst = worst.max(s.iter().fold(0.0_f64, |m, v| m.max(-v)));
            }
        }
        worst
    }

    /// Membership in the feasible set up to `tol`.
    pub fn is_feasible(&self, p: &DcPoint, tol: f64) -> bool {
        if self.infeasibility(p) > tol {
            return false;
        }
        if self.kind == FormulationKind::Dcp3 && norm(p.x()) < dcp3_norm_guard(self.n()) {
            return false;
        }
        true
    }

    /// Moves `d` into the null space of the equality constraints by
    /// re-centering D_x and recomputing the dependent blocks D_z and D_w.
    /// Directions between two feasible points only change by rounding, but
    /// a line search scales that rounding by up to ᾱ on every iteration.
    pub fn tangent(&self, d: &DcPoint) -> DcPoint {
        let mut t = d.clone();
        let n = self.n() as f64;
        let shift = t.x().iter().sum::<f64>() / n;
        t.x_mut().iter_mut().for_each(|v| *v -= shift);
        let ey: f64 = t.y().iter().sum();
        if let Some(z) = t.z_mut() {
            *z = ey;
        }
        let s = self.slack(t.x(), t.y());
        if let Some(w) = t.w_mut() {
            w.copy_from_slice(&s);
        }
        t
    }

    /// Packs a benchmark start (x0 on the simplex, y0 ≥ 0) into an iterate,
    /// with w0 = Bx0 − Ay0 and z0 = eᵀy0.
    pub fn initial_point(&self, x0: &[f64], y0: &[f64]) -> Result<DcPoint> {
        let n = self.n();
        if x0.len() != n || y0.len() != n {
            return Err(Error::Dimension(format!(
                "start has lengths {} and {}, instance has n = {n}",
                x0.len(),
                y0.len()
            )));
        }
        if x0.iter().any(|&v| v < 0.0) || (x0.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument("x0 must lie on the unit simplex".into()));
        }
        if y0.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("y0 must be nonnegative".into()));
        }
        let w0 = self.slack(x0, y0);
        let z0: f64 = y0.iter().sum();
        Ok(DcPoint::from_blocks(self.kind, x0, y0, &w0, z0))
    }

    /// Recovers (x, λ): λ = 1/z for DCP1/DCP2 and ‖x‖/‖y‖ for DCP3.
    pub fn extract_solution(&self, p: &DcPoint) -> Result<(Vec<f64>, f64)> {
        self.check(p)?;
        let x = p.x().to_vec();
        let lambda = match p.z() {
            Some(z) => {
                if z <= Z_FLOOR {
                    return Err(Error::Degenerate(format!("z = {z:e} is too small")));
                }
                1.0 / z
            }
            None => {
                let ny = norm(p.y());
                if !(ny > 0.0) {
                    return Err(Error::Degenerate("y = 0".into()));
                }
                norm(p.x()) / ny
            }
        };
        Ok((x, lambda))
    }

    /// Draws a random point of the feasible set: x on the simplex with
    /// Bx ≥ 0, then y a random fraction of the way along a random
    /// nonnegative ray until some row of Bx − Ay hits zero.
    pub fn sample_feasible(&self, rng: &mut Prng) -> DcPoint {
        let n = self.n();
        let b = &self.instance.b;
        let x = self.sample_x(rng);
        let bx = b.matvec(&x);
        let d = rng.vector(n);
        let ad = self.instance.a.matvec(&d);
        let mut tmax = f64::INFINITY;
        for i in 0..n {
            if ad[i] > 0.0 {
                tmax = tmax.min(bx[i].max(0.0) / ad[i]);
            }
        }
        if !tmax.is_finite() {
            tmax = 1.0;
        }
        let t = rng.uniform() * tmax;
        let y: Vec<f64> = d.iter().map(|v| t * v).collect();
        let w: Vec<f64> = self.slack(&x, &y).iter().map(|v| v.max(0.0)).collect();
        let z: f64 = y.iter().sum();
        DcPoint::from_blocks(self.kind, &x, &y, &w, z)
    }

    /// x on the simplex with Bx ≥ 0. A random anchor B⁻¹r (r ≥ 0) is moved
    /// a random fraction of the way towards a uniform simplex draw; when the
    /// anchor is not nonnegative, plain rejection sampling is used instead.
    fn sample_x(&self, rng: &mut Prng) -> Vec<f64> {
        let n = self.n();
        let b = &self.instance.b;
        let simplex = |rng: &mut Prng| {
            // Exponential spacings give a uniform simplex draw.
            let mut x: Vec<f64> = rng.vector(n).iter().map(|v| -(1.0 - v).ln()).collect();
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
            x
        };
        let u = simplex(rng);
        let r: Vec<f64> = rng.vector(n).iter().map(|v| v + 1e-3).collect();
        let anchor = solve_general(b, &r).and_then(|a| {
            let s: f64 = a.iter().sum();
            (a.iter().all(|&v| v >= 0.0) && s > 0.0).then(|| a.iter().map(|v| v / s).collect::<Vec<_>>())
        });
        let Some(a) = anchor else {
            let mut x = u;
            for _ in 0..10_000 {
                if b.matvec(&x).iter().all(|&v| v >= 0.0) {
                    break;
                }
                x = simplex(rng);
            }
            return x;
        };
        // B(a + s(u − a)) is affine in s and nonnegative at s = 0.
        let (ba, bu) = (b.matvec(&a), b.matvec(&u));
        let mut smax = 1.0_f64;
        for i in 0..n {
            if bu[i] < ba[i] {
                smax = smax.min(ba[i] / (ba[i] - bu[i]));
            }
        }
        let s = rng.uniform() * smax;
        a.iter().zip(&u).map(|(a, u)| a + s * (u - a)).collect()
    }
}

#[inline]
fn resid_sq(x: &[f64], y: &[f64], z: f64) -> f64 {
    x.iter().zip(y).map(|(xi, yi)| (yi - z * xi).powi(2)).sum()
}

/// ‖a + s·b‖²
#[inline]
fn sum_sq(a: &[f64], b: &[f64], s: f64) -> f64 {
    a.iter().zip(b).map(|(ai, bi)| (ai + s * bi).powi(2)).sum()
}

/// ((z+1)² + ‖y−x‖², (z−1)² + ‖y+x‖²), the squared terms of G.
#[inline]
fn quartic_args_g(x: &[f64], y: &[f64], z: f64) -> (f64, f64) {
    (
        (z + 1.0).powi(2) + sum_sq(y, x, -1.0),
        (z - 1.0).powi(2) + sum_sq(y, x, 1.0),
    )
}

/// ((z+1)² + ‖y+x‖², (z−1)² + ‖y−x‖²), the squared terms of H.
#[inline]
fn quartic_args_h(x: &[f64], y: &[f64], z: f64) -> (f64, f64) {
    (
        (z + 1.0).powi(2) + sum_sq(y, x, 1.0),
        (z - 1.0).powi(2) + sum_sq(y, x, -1.0),
    )
}

/// Hessian of φ(x, y) = (xᵀy)²/‖x‖² as a 2n×2n matrix ordered (x, y).
pub fn phi_hessian(x: &[f64], y: &[f64]) -> DenseMatrix {
    let n = x.len();
    let q = norm_sq(x);
    let s = dot(x, y);
    let mut h = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            let xx = 2.0 * y[i] * y[j] / q + 8.0 * s * s * x[i] * x[j] / (q * q * q)
                - 2.0 * s * s / (q * q) * delta
                - 4.0 * s / (q * q) * (x[i] * y[j] + y[i] * x[j]);
            let xy = 2.0 * y[i] * x[j] / q + 2.0 * s / q * delta - 4.0 * s / (q * q) * x[i] * x[j];
            let yy = 2.0 * x[i] * x[j] / q;
            h[(i, j)] = xx;
            h[(i, n + j)] = xy;
            h[(n + j, i)] = xy;
            h[(n + i, n + j)] = yy;
        }
    }
    h
}

/// Largest attainable eᵀy over the DCP3 feasible set.
pub fn max_y_sum(inst: &AeicpInstance) -> Result<f64> {
    let n = inst.n;
    // Variables (x, y, w) ≥ 0; rows Bx − Ay − w = 0 and eᵀx = 1.
    let mut aeq = DenseMatrix::zeros(n + 1, 3 * n);
    for i in 0..n {
        for j in 0..n {
            aeq[(i, j)] = inst.b[(i, j)];
            aeq[(i, n + j)] = -inst.a[(i, j)];
        }
        aeq[(i, 2 * n + i)] = -1.0;
        aeq[(n, i)] = 1.0;
    }
    let mut beq = vec![0.0; n + 1];
    beq[n] = 1.0;
    let mut c = vec![0.0; 3 * n];
    c[n..2 * n].iter_mut().for_each(|v| *v = -1.0);
    let res = crate::solver::solve_lp(&aeq, &beq, &c, &vec![true; 3 * n], 1e-10)?;
    match res.status {
        crate::solver::SolveStatus::Optimal => Ok(-res.obj),
        other => Err(Error::Lp(format!("for the y bound ended with status {other:?}"))),
    }
}

/// η = 3.2 + 20·n·M² with M the LP bound on eᵀy.
pub fn eta_for_dcp3(inst: &AeicpInstance) -> Result<f64> {
    let m = max_y_sum(inst)?;
    Ok(3.2 + 20.0 * inst.n as f64 * m * m)
}
