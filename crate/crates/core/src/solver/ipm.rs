//! Primal-dual path-following interior-point method with Mehrotra
//! predictor-corrector steps.
//!
//! Inequalities g_j(v) ≤ 0 (bounds −v_i ≤ 0 and convex quadratics) get
//! slacks s_j ≥ 0 and multipliers z_j ≥ 0. Each Newton system is reduced
//! to the primal block
//!
//! ```text
//! (W + JᵀS⁻¹ZJ) Δv + AᵀΔy = −r_d − JᵀS⁻¹(Z r_g − r_c)
//!              A Δv        = −r_p
//! ```
//!
//! with W = Q + Σ z_j ∇²g_j, then solved through a Cholesky factor of the
//! (1,1) block and of the Schur complement A(·)⁻¹Aᵀ.

use super::problem::ConicQp;
use crate::linalg::{axpy, dot, norm_inf, Cholesky, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub v: Vec<f64>,
    pub obj: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Multipliers of the equality rows.
    pub eq_duals: Vec<f64>,
    /// Duality-gap component of the residual.
    pub gap: f64,
}

/// Step halvings allowed while complementarity grows.
const MAX_HALVINGS: usize = 6;
/// Primal residual below which those halvings apply.
const HALVING_PRIM: f64 = 1e-4;
/// Iterations without a 10% improvement before the run is declared stalled.
const STALL_WINDOW: usize = 8;
/// Consecutive growths of the residual merit before giving up as infeasible.
const DIVERGENCE_WINDOW: usize = 30;
const BLOWUP: f64 = 1e10;

struct State {
    v: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
}

struct Residuals {
    rd: Vec<f64>,
    rp: Vec<f64>,
    rg: Vec<f64>,
    g: Vec<f64>,
    /// Gradients of the quadratic constraints, one row each.
    jq: Vec<Vec<f64>>,
}

#[derive(Clone, Copy)]
struct Measures {
    kkt: f64,
    prim: f64,
    gap: f64,
    merit: f64,
}

struct Solver<'a> {
    qp: &'a ConicQp,
    bidx: Vec<usize>,
    /// (constraint, coordinate, coefficient) triples; see `restore_epigraphs`.
    epigraphs: Vec<(usize, usize, f64)>,
    nb: usize,
    nq: usize,
    data_scale: f64,
    b_scale: f64,
}

impl<'a> Solver<'a> {
    fn new(qp: &'a ConicQp) -> Self {
        let bidx: Vec<usize> = (0..qp.dim).filter(|&i| qp.nonneg[i]).collect();
        let nb = bidx.len();
        let c_scale = norm_inf(&qp.c);
        let q_scale = qp.q.max_abs();
        let b_scale = norm_inf(&qp.beq).max(qp.quad.iter().fold(0.0_f64, |m, c| m.max(c.r.abs())));
        let epigraphs = qp
            .quad
            .iter()
            .enumerate()
            .filter_map(|(j, con)| match con.d.as_slice() {
                [(i, a)]
                    if *a > 0.0
                        && !qp.nonneg[*i]
                        && con.rows.iter().all(|r| !r.idx.contains(i)) =>
                {
                    Some((j, *i, *a))
                }
                _ => None,
            })
            .collect();
        Self {
            qp,
            bidx,
            epigraphs,
            nb,
            nq: qp.quad.len(),
            data_scale: 1.0 + c_scale.max(q_scale),
            b_scale: 1.0 + b_scale,
        }
    }

    fn m(&self) -> usize {
        self.nb + self.nq
    }

    /// A quadratic constraint ‖Pv + o‖² ≤ a·v_i + r whose right side is a
    /// single free coordinate absent from the left can be met with equality
    /// against its slack by moving v_i alone. Doing so after every step
    /// removes the second-order growth of the constraint residual.
    fn restore_epigraphs(&self, st: &mut State) {
        for &(j, i, a) in &self.epigraphs {
            let con = &self.qp.quad[j];
            st.v[i] = (con.square(&st.v) + st.s[self.nb + j] - con.r) / a;
        }
    }

    fn initial_state(&self) -> State {
        let qp = self.qp;
        let mut v = vec![0.0; qp.dim];
        for &i in &self.bidx {
            v[i] = 1.0;
        }
        // Epigraph variables: a constraint whose right side is a single
        // free coordinate gets that coordinate set above its square.
        for con in &qp.quad {
            if let [(i, a)] = con.d.as_slice() {
                if !qp.nonneg[*i] && *a > 0.0 {
                    v[*i] = (con.square(&v) - con.r) / a + 1.0;
                }
            }
        }
        let mut s = Vec::with_capacity(self.m());
        for &i in &self.bidx {
            s.push(v[i].max(1.0));
        }
        for con in &qp.quad {
            s.push((-con.eval(&v)).max(1.0));
        }
        State {
            v,
            y: vec![0.0; qp.beq.len()],
            z: vec![1.0; self.m()],
            s,
        }
    }

    fn residuals(&self, st: &State) -> Residuals {
        let qp = self.qp;
        let mut rd = qp.q.matvec(&st.v);
        axpy(1.0, &qp.c, &mut rd);
        if qp.aeq.rows() > 0 {
            let aty = qp.aeq.matvec_t(&st.y);
            axpy(1.0, &aty, &mut rd);
        }
        for (k, &i) in self.bidx.iter().enumerate() {
            rd[i] -= st.z[k];
        }
        let mut jq = Vec::with_capacity(self.nq);
        let mut g = Vec::with_capacity(self.m());
        for &i in &self.bidx {
            g.push(-st.v[i]);
        }
        for (j, con) in qp.quad.iter().enumerate() {
            let mut grad = vec![0.0; qp.dim];
            con.gradient(&st.v, &mut grad);
            axpy(st.z[self.nb + j], &grad, &mut rd);
            jq.push(grad);
            g.push(con.eval(&st.v));
        }
        let rp = if qp.aeq.rows() > 0 {
            let mut r = qp.aeq.matvec(&st.v);
            axpy(-1.0, &qp.beq, &mut r);
            r
        } else {
            Vec::new()
        };
        let rg: Vec<f64> = g.iter().zip(&st.s).map(|(g, s)| g + s).collect();
        Residuals { rd, rp, rg, g, jq }
    }

    fn measures(&self, st: &State, r: &Residuals) -> Measures {
        // f64::max drops NaN, so a broken iterate must be caught up front.
        let finite = |v: &[f64]| v.iter().all(|t| t.is_finite());
        if !(finite(&st.v) && finite(&st.y) && finite(&st.s) && finite(&st.z) && finite(&r.rd)) {
            let nan = f64::NAN;
            return Measures {
                kkt: nan,
                prim: nan,
                gap: nan,
                merit: nan,
            };
        }
        let obj = self.qp.objective(&st.v);
        let stat = norm_inf(&r.rd) / self.data_scale;
        let viol = r.g.iter().fold(0.0_f64, |m, &g| m.max(g));
        let prim = (norm_inf(&r.rp).max(norm_inf(&r.rg)).max(viol)) / self.b_scale;
        let m = self.m().max(1) as f64;
        let sz = dot(&st.s, &st.z);
        let gap = (sz / m).max(0.0) / (1.0 + obj.abs().min(1e300));
        let kkt = stat.max(prim).max(gap);
        Measures {
            kkt,
            prim,
            gap,
            merit: stat.max(prim),
        }
    }
}

struct Factored {
    hb: Cholesky,
    schur: Option<Cholesky>,
    /// Hb⁻¹Aᵀ, column per equality row.
    hinv_at: Vec<Vec<f64>>,
}

impl Solver<'_> {
    fn factor(&self, st: &State, r: &Residuals) -> Option<Factored> {
        let qp = self.qp;
        let n = qp.dim;
        let mut h = qp.q.clone();
        for (j, con) in qp.quad.iter().enumerate() {
            let zj = st.z[self.nb + j];
            con.add_hessian(zj, &mut h);
            let wgt = zj / st.s[self.nb + j];
            let gj = &r.jq[j];
            let nz: Vec<usize> = (0..n).filter(|&i| gj[i] != 0.0).collect();
            for &a in &nz {
                for &b in &nz {
                    h[(a, b)] += wgt * gj[a] * gj[b];
                }
            }
        }
        for (k, &i) in self.bidx.iter().enumerate() {
            h[(i, i)] += st.z[k] / st.s[k];
        }
        if !h.all_finite() {
            return None;
        }
        // Barrier terms z/s blow up near the bounds; scaling the shift by
        // them would swamp the rest of the matrix, so use the data scale.
        let diag_max = (0..n).fold(0.0_f64, |m, i| m.max(h[(i, i)].abs()));
        let mut reg = 1e-14 * self.data_scale;
        let hb = loop {
            if let Some(c) = Cholesky::factor(&h.add_diag(reg)) {
                break c;
            }
            reg *= 100.0;
            if reg > 1e-2 * (1.0 + diag_max) {
                return None;
            }
        };
        let me = qp.aeq.rows();
        let mut hinv_at = Vec::with_capacity(me);
        for i in 0..me {
            hinv_at.push(hb.solve(qp.aeq.row(i)));
        }
        let schur = if me > 0 {
            let mut k = DenseMatrix::zeros(me, me);
            for i in 0..me {
                for j in 0..=i {
                    let val = dot(qp.aeq.row(i), &hinv_at[j]);
                    k[(i, j)] = val;
                    k[(j, i)] = val;
                }
            }
            if !k.all_finite() {
                return None;
            }
            let kmax = (0..me).fold(0.0_f64, |m, i| m.max(k[(i, i)].abs()));
            let mut kreg = 1e-15 * (1.0 + kmax);
            loop {
                if let Some(c) = Cholesky::factor(&k.add_diag(kreg)) {
                    break Some(c);
                }
                kreg *= 100.0;
                if kreg > 1e-2 * (1.0 + kmax) {
                    return None;
                }
            }
        } else {
            None
        };
        Some(Factored {
            hb,
            schur,
            hinv_at,
        })
    }

    /// Newton direction for complementarity target `rc` (the residual of
    /// S z − σμe, including any second-order correction).
    fn direction(
        &self,
        f: &Factored,
        st: &State,
        r: &Residuals,
        rc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let qp = self.qp;
        let nb = self.nb;
        let mut rhs1: Vec<f64> = r.rd.iter().map(|v| -v).collect();
        // −Jᵀ S⁻¹ (Z r_g − r_c); bound rows of J are −e_i.
        for (k, &i) in self.bidx.iter().enumerate() {
            let t = (st.z[k] * r.rg[k] - rc[k]) / st.s[k];
            rhs1[i] += t;
        }
        for j in 0..self.nq {
            let k = nb + j;
            let t = (st.z[k] * r.rg[k] - rc[k]) / st.s[k];
            axpy(-t, &r.jq[j], &mut rhs1);
        }
        let hinv_r = f.hb.solve(&rhs1);
        let (dv, dy) = match &f.schur {
            Some(schur) => {
                // Schur: (A H⁻¹ Aᵀ) Δy = A H⁻¹ rhs1 + r_p
                let me = qp.aeq.rows();
                let mut t: Vec<f64> = (0..me)
                    .map(|i| dot(qp.aeq.row(i), &hinv_r) + r.rp[i])
                    .collect();
                schur.solve_in_place(&mut t);
                let mut dv = hinv_r;
                for i in 0..me {
                    axpy(-t[i], &f.hinv_at[i], &mut dv);
                }
                (dv, t)
            }
            None => (hinv_r, Vec::new()),
        };
        let mut ds = Vec::with_capacity(self.m());
        for (k, &i) in self.bidx.iter().enumerate() {
            ds.push(-r.rg[k] + dv[i]);
        }
        for j in 0..self.nq {
            ds.push(-r.rg[nb + j] - dot(&r.jq[j], &dv));
        }
        let dz: Vec<f64> = (0..self.m())
            .map(|k| (-rc[k] - st.z[k] * ds[k]) / st.s[k])
            .collect();
        (dv, dy, ds, dz)
    }
}

/// Largest α ≤ 1 with x + αΔx ≥ 0 (fraction `tau` of the boundary step).
fn max_step(x: &[f64], dx: &[f64], tau: f64) -> f64 {
    let mut a = 1.0_f64;
    for (xi, di) in x.iter().zip(dx) {
        if *di < 0.0 {
            a = a.min(-tau * xi / di);
        }
    }
    a
}

/// Solves `qp` to a scaled KKT residual of `tol`.
///
/// Iteration continues past `tol` while the residual keeps shrinking, so
/// the returned point is usually considerably more accurate than asked;
/// the best iterate seen is returned.
pub fn solve(qp: &ConicQp, tol: f64, max_iter: usize) -> SolverResult {
    let sv = Solver::new(qp);
    let mut st = sv.initial_state();
    let m = sv.m();
    let refine_target = tol * 1e-4;

    let mut best: Option<(f64, State, Measures)> = None;
    let mut since_best = 0usize;
    let mut diverging = 0usize;
    let mut prev_merit = f64::INFINITY;
    let mut iterations = 0usize;
    let mut status = SolveStatus::MaxIter;

    for it in 0..=max_iter {
        iterations = it;
        let r = sv.residuals(&st);
        let meas = sv.measures(&st, &r);
        if !meas.kkt.is_finite() {
            break;
        }

        let improved = best.as_ref().is_none_or(|b| meas.kkt < 0.9 * b.0);
        if best.as_ref().is_none_or(|b| meas.kkt < b.0) {
            best = Some((
                meas.kkt,
                State {
                    v: st.v.clone(),
                    y: st.y.clone(),
                    s: st.s.clone(),
                    z: st.z.clone(),
                },
                meas,
            ));
        }
        if improved {
            since_best = 0;
        } else {
            since_best += 1;
        }
        let best_kkt = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if meas.kkt <= refine_target || (best_kkt <= tol && since_best >= 3) {
            status = SolveStatus::Optimal;
            break;
        }
        if since_best >= STALL_WINDOW {
            break;
        }

        let vmax = norm_inf(&st.v);
        let dual_max = norm_inf(&st.y).max(norm_inf(&st.z));
        if vmax > BLOWUP * sv.b_scale.max(sv.data_scale) && meas.prim <= 1e-6 {
            status = SolveStatus::Unbounded;
            break;
        }
        if dual_max > BLOWUP * sv.data_scale && meas.prim > 1e-8 {
            status = SolveStatus::Infeasible;
            break;
        }
        if meas.merit > prev_merit * (1.0 + 1e-12) {
            diverging += 1;
            if diverging >= DIVERGENCE_WINDOW {
                status = SolveStatus::Infeasible;
                break;
            }
        } else {
            diverging = 0;
        }
        prev_merit = meas.merit;
        if it == max_iter {
            break;
        }

        let Some(fac) = sv.factor(&st, &r) else {
            break;
        };
        let mu = if m > 0 { dot(&st.s, &st.z) / m as f64 } else { 0.0 };

        // Predictor.
        let rc_aff: Vec<f64> = st.s.iter().zip(&st.z).map(|(s, z)| s * z).collect();
        let (_, _, ds_a, dz_a) = sv.direction(&fac, &st, &r, &rc_aff);
        let a_aff = max_step(&st.s, &ds_a, 1.0).min(max_step(&st.z, &dz_a, 1.0));
        let mu_aff = if m > 0 {
            (0..m)
                .map(|k| (st.s[k] + a_aff * ds_a[k]) * (st.z[k] + a_aff * dz_a[k]))
                .sum::<f64>()
                / m as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        // Keep complementarity from racing ahead of stationarity, which
        // leaves a badly conditioned system with nothing left to gain.
        let target = (sigma * mu).max(mu.min(1e-2 * meas.merit));

        // Corrector. The second-order term is damped by the affine step
        // length; at full weight a short affine step made μ cycle.
        let rc: Vec<f64> = (0..m)
            .map(|k| st.s[k] * st.z[k] + a_aff * ds_a[k] * dz_a[k] - target)
            .collect();
        let (dv, dy, ds, dz) = sv.direction(&fac, &st, &r, &rc);
        let tau = (1.0 - mu.min(0.01)).max(0.99);
        let alpha = max_step(&st.s, &ds, tau).min(max_step(&st.z, &dz, tau));

        let take = |a: f64| {
            let mut t = State {
                v: st.v.clone(),
                y: st.y.clone(),
                s: st.s.clone(),
                z: st.z.clone(),
            };
            axpy(a, &dv, &mut t.v);
            if !dy.is_empty() {
                axpy(a, &dy, &mut t.y);
            }
            axpy(a, &ds, &mut t.s);
            axpy(a, &dz, &mut t.z);
            for k in 0..m {
                t.s[k] = t.s[k].max(f64::MIN_POSITIVE);
                t.z[k] = t.z[k].max(f64::MIN_POSITIVE);
            }
            sv.restore_epigraphs(&mut t);
            t
        };
        let mut a = alpha;
        let mut next = take(a);
        // With quadratic constraints a long step can raise complementarity
        // through its second-order term, and the iterates then cycle. Far
        // from feasibility complementarity may rise legitimately.
        if sv.nq > 0 && meas.prim <= HALVING_PRIM {
            for _ in 0..MAX_HALVINGS {
                if dot(&next.s, &next.z) <= mu * m as f64 {
                    break;
                }
                a *= 0.5;
                next = take(a);
            }
        }
        st = next;
    }

    let (kkt, best_state, best_meas) = match best {
        Some(b) => b,
        None => {
            let r = sv.residuals(&st);
            let meas = sv.measures(&st, &r);
            (meas.kkt, st, meas)
        }
    };
    if status == SolveStatus::MaxIter && kkt <= tol {
        status = SolveStatus::Optimal;
    }
    SolverResult {
        obj: qp.objective(&best_state.v),
        v: best_state.v,
        kkt_residual: kkt,
        iterations,
        status,
        eq_duals: best_state.y,
        gap: best_meas.gap,
    }
}
