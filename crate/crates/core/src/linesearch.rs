//! Step-size selection along D = Z − X after a DC step.
//!
//! On DCP1 and DCP2 the objective restricted to a line is a quartic, so the
//! exact minimizer over the feasible interval is found among the interval
//! ends and the real roots of its cubic derivative. DCP3 has a rational
//! objective and only gets the backtracking search.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::formulations::{DcPoint, Formulation, FormulationKind};
use crate::linalg::{dot, norm_inf, norm_sq, sub};

const LEADING_EPS: f64 = 1e-14;

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots of aα³ + bα² + cα + d in ascending order.
///
/// Vanishing leading coefficients (relative to the largest one) reduce the
/// degree. The three-real-root case uses the trigonometric form, which
/// avoids complex intermediate values; every root gets two Newton steps.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Result<Vec<f64>> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::InvalidArgument(
            "cubic coefficients must be finite and not all zero".into(),
        ));
    }
    let coeffs = [a, b, c, d];
    let mut roots = if a.abs() > LEADING_EPS * scale {
        depressed_cubic_roots(b / a, c / a, d / a)
    } else if b.abs() > LEADING_EPS * scale {
        quadratic_roots(b, c, d)
    } else if c.abs() > LEADING_EPS * scale {
        vec![-d / c]
    } else {
        Vec::new()
    };

    let dcoeffs = [3.0 * a, 2.0 * b, c];
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let p = horner(&coeffs, *r);
            let dp = horner(&dcoeffs, *r);
            if dp != 0.0 {
                let next = *r - p / dp;
                if next.is_finite() && horner(&coeffs, next).abs() <= p.abs() {
                    *r = next;
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    Ok(roots)
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // A tangency lost to rounding still counts as a double root.
        if disc > -1e-12 * (b * b).max((4.0 * a * c).abs()) {
            return vec![-b / (2.0 * a)];
        }
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Roots of α³ + bα² + cα + d.
fn depressed_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    // α = t − b/3 gives t³ + pt + q.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let mag = (half_q * half_q).max((third_p * third_p * third_p).abs());

    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc > 1e-14 * mag {
        let u = -half_q.signum() * (half_q.abs() + disc.sqrt()).cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        return vec![u + v - shift];
    }
    // Three real roots (possibly repeated): p < 0 here.
    let r = (-third_p).max(0.0).sqrt();
    if r == 0.0 {
        return vec![-(q.cbrt()) - shift];
    }
    let cos_arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
    let phi = cos_arg.acos() / 3.0;
    (0..3)
        .map(|k| 2.0 * r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
        .collect()
}

/// f(V + αD) = a1/4 α⁴ + a2/3 α³ + a3/2 α² + a4 α + a5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
}

impl QuarticCoeffs {
    pub fn eval(&self, alpha: f64) -> f64 {
        horner(
            &[self.a1 / 4.0, self.a2 / 3.0, self.a3 / 2.0, self.a4, self.a5],
            alpha,
        )
    }

    /// Derivative a1α³ + a2α² + a3α + a4.
    pub fn derivative(&self, alpha: f64) -> f64 {
        horner(&[self.a1, self.a2, self.a3, self.a4], alpha)
    }

    /// Minimizer over [0, alpha_max] among the ends and the stationary
    /// points inside; ties keep the smaller step.
    pub fn argmin_on(&self, alpha_max: f64) -> f64 {
        let mut cands = vec![0.0];
        if alpha_max.is_finite() && alpha_max > 0.0 {
            cands.push(alpha_max);
        }
        if let Ok(roots) = cubic_real_roots(self.a1, self.a2, self.a3, self.a4) {
            cands.extend(roots.into_iter().filter(|&r| r > 0.0 && r <= alpha_max));
        }
        let mut best = (0.0, self.eval(0.0));
        for &a in &cands[1..] {
            let v = self.eval(a);
            if v < best.1 {
                best = (a, v);
            }
        }
        best.0
    }
}

/// Coefficients of the objective along V + αD for DCP1 and DCP2 (where the
/// w block is Bx − Ay).
pub fn quartic_coeffs(form: &Formulation, v: &DcPoint, d: &DcPoint) -> Result<QuarticCoeffs> {
    if !form.kind.has_polynomial_objective() {
        return Err(Error::Unsupported(format!(
            "exact line search on {}",
            form.kind
        )));
    }
    let n = form.n();
    if v.kind() != form.kind || d.kind() != form.kind || v.n() != n || d.n() != n {
        return Err(Error::Dimension("line-search point and direction mismatch".into()));
    }
    let (vx, vy, vz) = (v.x(), v.y(), v.z().unwrap());
    let (dx, dy, dz) = (d.x(), d.y(), d.z().unwrap());
    let vw = form.w_of(v);
    let dw = match d.w() {
        Some(w) => w.to_vec(),
        None => form.slack(dx, dy),
    };
    // Residual y − zx along the line: a + αb − α²c.
    let a: Vec<f64> = (0..n).map(|i| vy[i] - vz * vx[i]).collect();
    let b: Vec<f64> = (0..n).map(|i| dy[i] - dz * vx[i] - vz * dx[i]).collect();
    let c: Vec<f64> = (0..n).map(|i| dz * dx[i]).collect();
    Ok(QuarticCoeffs {
        a1: 4.0 * dz * dz * norm_sq(dx),
        a2: -6.0 * dot(&c, &b),
        a3: 2.0 * (norm_sq(&b) + dot(&dw, dx) - 2.0 * dot(&c, &a)),
        a4: 2.0 * dot(&a, &b) + dot(&vw, dx) + dot(vx, &dw),
        a5: dot(vx, &vw) + norm_sq(&a),
    })
}

/// Largest α with V + αD inside the sign constraints (and, for DCP2, the
/// rows Bx − Ay ≥ 0); +∞ when nothing blocks.
pub fn max_feasible_step(form: &Formulation, v: &DcPoint, d: &DcPoint) -> Result<f64> {
    check_null_space(form, v, d)?;
    let mut amax = f64::INFINITY;
    let mut limit = |vi: f64, di: f64| {
        if di < 0.0 {
            amax = amax.min((-vi / di).max(0.0));
        }
    };
    for (&vi, &di) in v.as_slice().iter().zip(d.as_slice()) {
        limit(vi, di);
    }
    if form.kind == FormulationKind::Dcp2 {
        let sv = form.slack(v.x(), v.y());
        let sd = form.slack(d.x(), d.y());
        for (&vi, &di) in sv.iter().zip(&sd) {
            limit(vi, di);
        }
    }
    Ok(amax)
}

/// The equality constraints are affine, so a feasible step must keep
/// eᵀD_x = 0, eᵀD_y = D_z and D_w = BD_x − AD_y.
fn check_null_space(form: &Formulation, v: &DcPoint, d: &DcPoint) -> Result<()> {
    if v.kind() != form.kind || d.kind() != form.kind || v.n() != form.n() || d.n() != form.n() {
        return Err(Error::Dimension("line-search point and direction mismatch".into()));
    }
    let scale = 1.0 + norm_inf(d.as_slice()) + norm_inf(v.as_slice());
    let tol = 1e-8 * scale;
    let mut worst = d.x().iter().sum::<f64>().abs();
    if let Some(dz) = d.z() {
        worst = worst.max((d.y().iter().sum::<f64>() - dz).abs());
    }
    if let Some(dw) = d.w() {
        let s = form.slack(d.x(), d.y());
        worst = worst.max(norm_inf(&sub(dw, &s)));
    }
    if worst > tol {
        return Err(Error::Internal(format!(
            "direction leaves the equality constraints (residual {worst:e})"
        )));
    }
    Ok(())
}

/// Exact search: α* minimizes the quartic over [0, min(ᾱ_k, alpha_cap)].
/// Returns V itself if rounding makes the chosen point worse than V.
pub fn exact_linesearch(
    form: &Formulation,
    v: &DcPoint,
    d: &DcPoint,
    alpha_cap: f64,
) -> Result<(f64, DcPoint)> {
    if d.as_slice().iter().all(|&x| x == 0.0) {
        return Ok((0.0, v.clone()));
    }
    let coeffs = quartic_coeffs(form, v, d)?;
    let amax = max_feasible_step(form, v, d)?.min(alpha_cap);
    let alpha = coeffs.argmin_on(amax);
    if alpha == 0.0 {
        return Ok((0.0, v.clone()));
    }
    let next = v.offset(alpha, d);
    if form.f_value(&next)? <= form.f_value(v)? {
        Ok((alpha, next))
    } else {
        Ok((0.0, v.clone()))
    }
}

/// Backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    /// Step reduction factor.
    pub beta: f64,
    /// Sufficient-decrease constant in f(V) − f(V + αD) ≥ σα²‖D‖².
    pub sigma: f64,
    /// The search gives up once α‖D‖ drops to this length.
    pub eps_ls: f64,
    /// Extra cap on the first trial step, on top of the feasibility limit
    /// and the caller's cap.
    pub alpha0: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            beta: 0.5,
            sigma: 1e-4,
            eps_ls: 1e-8,
            alpha0: f64::INFINITY,
        }
    }
}

/// Feasibility tolerance for trial points.
pub const TRIAL_FEAS_TOL: f64 = 1e-8;

/// Backtracking search from α0 = min(ᾱ_k, alpha_cap, params.alpha0).
/// Falls back to V when no trial passes.
pub fn armijo(
    form: &Formulation,
    v: &DcPoint,
    d: &DcPoint,
    alpha_cap: f64,
    params: &ArmijoParams,
) -> Result<(f64, DcPoint)> {
    let dn2 = norm_sq(d.as_slice());
    if dn2 == 0.0 {
        return Ok((0.0, v.clone()));
    }
    let dn = dn2.sqrt();
    let fv = form.f_value(v)?;
    let mut alpha = max_feasible_step(form, v, d)?.min(alpha_cap).min(params.alpha0);
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument("unbounded initial step".into()));
    }
    while alpha > params.eps_ls / dn {
        let z = v.offset(alpha, d);
        if form.is_feasible(&z, TRIAL_FEAS_TOL) {
            if let Ok(fz) = form.f_value(&z) {
                if fv - fz - params.sigma * alpha * alpha * dn2 >= 0.0 {
                    return Ok((alpha, z));
                }
            }
        }
        alpha *= params.beta;
    }
    Ok((0.0, v.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close_sets(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn cubic_examples() {
        close_sets(&cubic_real_roots(1.0, 0.0, -1.0, 0.0).unwrap(), &[-1.0, 0.0, 1.0]);
        close_sets(&cubic_real_roots(1.0, -6.0, 11.0, -6.0).unwrap(), &[1.0, 2.0, 3.0]);
        close_sets(&cubic_real_roots(0.0, 1.0, 0.0, -4.0).unwrap(), &[-2.0, 2.0]);
        close_sets(&cubic_real_roots(0.0, 0.0, 2.0, -1.0).unwrap(), &[0.5]);
        close_sets(&cubic_real_roots(1.0, 0.0, 0.0, -8.0).unwrap(), &[2.0]);
        assert!(cubic_real_roots(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(cubic_real_roots(0.0, 0.0, 0.0, 1.0).unwrap().is_empty());
    }

    #[test]
    fn repeated_roots() {
        // (α − 1)²(α + 2)
        close_sets(&cubic_real_roots(1.0, 0.0, -3.0, 2.0).unwrap(), &[-2.0, 1.0]);
        // (α − 1)³
        close_sets(&cubic_real_roots(1.0, -3.0, 3.0, -1.0).unwrap(), &[1.0]);
    }

    #[test]
    fn quadratic_piece_minimizer() {
        let q = QuarticCoeffs {
            a1: 0.0,
            a2: 0.0,
            a3: 2.0,
            a4: -2.0,
            a5: 3.0,
        };
        assert_eq!(q.argmin_on(10.0), 1.0);
        assert_eq!(q.argmin_on(0.5), 0.5);
        assert_eq!(q.argmin_on(f64::INFINITY), 1.0);
    }

    use crate::instances::gen_rand_instance;
    use crate::rng::Prng;
    use std::sync::Arc;

    fn pair(kind: FormulationKind, seed: u64) -> (Formulation, DcPoint, DcPoint) {
        let inst = Arc::new(gen_rand_instance(6, seed).unwrap());
        let form = Formulation::with_eta(kind, inst, 0.1, 10.0).unwrap();
        let mut rng = Prng::new(seed + 100);
        let v = form.sample_feasible(&mut rng);
        let u = form.sample_feasible(&mut rng);
        let d = u.diff(&v);
        (form, v, d)
    }

    #[test]
    fn quartic_matches_objective_on_line() {
        for kind in [FormulationKind::Dcp1, FormulationKind::Dcp2] {
            for seed in 0..5 {
                let (form, v, d) = pair(kind, seed);
                let q = quartic_coeffs(&form, &v, &d).unwrap();
                for &a in &[0.0, 0.3, 1.0, 2.5, -0.7] {
                    let f = form.f_value(&v.offset(a, &d)).unwrap();
                    assert!((q.eval(a) - f).abs() <= 1e-10 * (1.0 + f.abs()), "{kind} {a}");
                }
            }
        }
    }

    #[test]
    fn exact_search_beats_grid() {
        for kind in [FormulationKind::Dcp1, FormulationKind::Dcp2] {
            for seed in 0..5 {
                let (form, v, d) = pair(kind, seed);
                let cap = 10.0;
                let amax = max_feasible_step(&form, &v, &d).unwrap().min(cap);
                assert!(amax >= 1.0 - 1e-12, "segment between feasible points");
                let (alpha, p) = exact_linesearch(&form, &v, &d, cap).unwrap();
                assert!(alpha >= 0.0 && alpha <= amax);
                let fbest = form.f_value(&p).unwrap();
                let grid_min = (0..=10_000)
                    .map(|i| form.f_value(&v.offset(amax * i as f64 / 1e4, &d)).unwrap())
                    .fold(f64::INFINITY, f64::min);
                assert!(fbest <= grid_min + 1e-9 * (1.0 + grid_min.abs()));
            }
        }
    }

    #[test]
    fn max_step_keeps_feasibility() {
        for kind in FormulationKind::ALL {
            let (form, v, d) = pair(kind, 7);
            let d = d.offset(2.0, &d); // 3·d, still in the null space
            let amax = max_feasible_step(&form, &v, &d).unwrap();
            assert!(amax.is_finite());
            assert!(form.infeasibility(&v.offset(amax, &d)) <= 1e-12);
            assert!(form.infeasibility(&v.offset(amax * 1.01, &d)) > 0.0);
        }
    }

    #[test]
    fn direction_off_constraints_rejected() {
        let (form, v, mut d) = pair(FormulationKind::Dcp1, 3);
        d.x_mut()[0] += 1.0;
        assert!(max_feasible_step(&form, &v, &d).is_err());
    }

    #[test]
    fn armijo_decreases() {
        for kind in FormulationKind::ALL {
            for seed in 0..4 {
                let (form, v, d) = pair(kind, seed);
                let grad = form.grad_f(&v).unwrap();
                let d = if grad.dot(&d) > 0.0 { d.offset(-2.0, &d) } else { d };
                let p = ArmijoParams::default();
                let (alpha, z) = armijo(&form, &v, &d, 10.0, &p).unwrap();
                let fv = form.f_value(&v).unwrap();
                let fz = form.f_value(&z).unwrap();
                let dn2 = norm_sq(d.as_slice());
                assert!(fv - fz >= p.sigma * alpha * alpha * dn2 - 1e-14);
            }
        }
    }
}
