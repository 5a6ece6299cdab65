//! Problem instances, the positive-definite shift, and solution-quality
//! metrics.

use crate::error::{Error, Result};
use crate::linalg::{dot, lambda_min_sym, norm, DenseMatrix};
use crate::rng::Prng;

const EIG_TOL: f64 = 1e-13;
const RAND_SHIFT_MARGIN: f64 = 0.1;
const NEP_SHIFT_MARGIN: f64 = 1.0;
/// Residual floor for the feasibility measure; caps `c` at 300.
const RESIDUAL_FLOOR: f64 = 1e-300;

/// An eigenvalue complementarity problem: find x ≥ 0, x ≠ 0 and λ with
/// w = λBx − Ax ≥ 0 and xᵀw = 0.
#[derive(Debug, Clone)]
pub struct AeicpInstance {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub n: usize,
    /// Shift already folded into `a` (0 if none).
    pub mu: f64,
    pub label: String,
}

impl AeicpInstance {
    /// Validates shapes and that A + Aᵀ and B + Bᵀ are positive definite.
    pub fn new(a: DenseMatrix, b: DenseMatrix, mu: f64, label: impl Into<String>) -> Result<Self> {
        let inst = Self::new_unchecked(a, b, mu, label)?;
        for (name, m) in [("A", &inst.a), ("B", &inst.b)] {
            let lmin = lambda_min_sym(m, EIG_TOL)?;
            if lmin <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "{name} + {name}ᵀ has smallest eigenvalue {}",
                    2.0 * lmin
                )));
            }
        }
        Ok(inst)
    }

    /// Checks shapes and finiteness only; used for fixtures that
    /// deliberately violate the definiteness requirement.
    pub fn new_unchecked(
        a: DenseMatrix,
        b: DenseMatrix,
        mu: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || b.cols() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if !a.all_finite() {
            return Err(Error::NonFinite("A"));
        }
        if !b.all_finite() {
            return Err(Error::NonFinite("B"));
        }
        Ok(Self {
            a,
            b,
            n,
            mu,
            label: label.into(),
        })
    }
}

/// The banded matrix with 10 on the diagonal and −1 within four places of it.
pub fn banded_b(n: usize) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = i.abs_diff(j);
            b[(i, j)] = match d {
                0 => 10.0,
                1..=4 => -1.0,
                _ => 0.0,
            };
        }
    }
    b
}

/// Random instance: A = T + μI with T uniform on [−1, 1] and μ just large
/// enough (plus a 0.1 margin) to make A + Aᵀ positive definite.
pub fn gen_rand_instance(n: usize, seed: u64) -> Result<AeicpInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "random instances need n >= 2, got {n}"
        )));
    }
    let mut rng = Prng::new(seed);
    let t = DenseMatrix::from_row_major(n, n, rng.vector_sym(n * n))?;
    // lambda_min_sym works on (T+Tᵀ)/2.
    let lmin = 2.0 * lambda_min_sym(&t, EIG_TOL)?;
    let mu = lmin.min(0.0).abs() + RAND_SHIFT_MARGIN;
    let a = t.add_diag(mu);
    AeicpInstance::new(a, banded_b(n), mu, format!("RAND({n})#{seed}"))
}

/// Instance from a raw matrix: B = I and A shifted by
/// μ = |min{0, λ_min(A + Aᵀ)}| + 1.
pub fn build_nep_instance(a_raw: &DenseMatrix, label: &str) -> Result<AeicpInstance> {
    if !a_raw.is_square() {
        return Err(Error::Dimension(format!(
            "NEP matrix is {}x{}",
            a_raw.rows(),
            a_raw.cols()
        )));
    }
    let lmin = 2.0 * lambda_min_sym(a_raw, EIG_TOL)?;
    let mu = lmin.min(0.0).abs() + NEP_SHIFT_MARGIN;
    let a = a_raw.add_diag(mu);
    let b = DenseMatrix::identity(a_raw.rows());
    AeicpInstance::new(a, b, mu, label)
}

/// Quality of a candidate complementary eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub w: Vec<f64>,
    pub residual: f64,
    /// −log10 of the residual, capped at 300.
    pub c: f64,
    pub f: f64,
}

/// Rayleigh-quotient eigenvalue, complementarity vector and the feasibility
/// measure c = −log10(‖[x]₋‖ + ‖[w]₋‖ + |wᵀx|).
pub fn feasibility_report(inst: &AeicpInstance, x: &[f64], f_final: f64) -> Result<SolutionReport> {
    if x.len() != inst.n {
        return Err(Error::Dimension(format!(
            "x has length {}, instance has n = {}",
            x.len(),
            inst.n
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    let sum: f64 = x.iter().sum();
    let x: Vec<f64> = if sum > 0.0 {
        x.iter().map(|v| v / sum).collect()
    } else {
        x.to_vec()
    };
    let ax = inst.a.matvec(&x);
    let bx = inst.b.matvec(&x);
    let xbx = dot(&x, &bx);
    if !(xbx > 0.0) {
        return Err(Error::Internal(format!("xᵀBx = {xbx} is not positive")));
    }
    let lambda = dot(&x, &ax) / xbx;
    let w: Vec<f64> = bx.iter().zip(&ax).map(|(b, a)| lambda * b - a).collect();
    let neg = |v: &[f64]| norm(&v.iter().map(|t| t.min(0.0)).collect::<Vec<_>>());
    let residual = neg(&x) + neg(&w) + dot(&w, &x).abs();
    let c = -residual.max(RESIDUAL_FLOOR).log10();
    Ok(SolutionReport {
        x,
        lambda,
        w,
        residual,
        c,
        f: f_final,
    })
}

/// Complementarity residual of a given (x, λ) pair, without normalization.
pub fn aeicp_residual(inst: &AeicpInstance, x: &[f64], lambda: f64) -> f64 {
    let ax = inst.a.matvec(x);
    let bx = inst.b.matvec(x);
    let w: Vec<f64> = bx.iter().zip(&ax).map(|(b, a)| lambda * b - a).collect();
    let neg = |v: &[f64]| norm(&v.iter().map(|t| t.min(0.0)).collect::<Vec<_>>());
    neg(x) + neg(&w) + dot(&w, x).abs()
}

/// Every solution of a 2×2 problem found by support enumeration.
#[derive(Debug, Clone, Default)]
pub struct Enumeration {
    /// Simplex-normalized eigenvectors with their eigenvalues.
    pub solutions: Vec<(Vec<f64>, f64)>,
    /// Set when A = λB, so that every simplex point solves the problem.
    pub interior_family: bool,
}

impl Enumeration {
    pub fn lambdas(&self) -> Vec<f64> {
        let mut l: Vec<f64> = self.solutions.iter().map(|s| s.1).collect();
        l.sort_by(f64::total_cmp);
        l
    }
}

const ENUM_RESIDUAL: f64 = 1e-10;

/// Brute-force solver for n = 2 over the supports {1}, {2} and {1, 2}.
pub fn enumerate_2x2_solutions(inst: &AeicpInstance) -> Result<Enumeration> {
    if inst.n != 2 {
        return Err(Error::InvalidArgument(format!(
            "support enumeration needs n = 2, got {}",
            inst.n
        )));
    }
    let (a, b) = (&inst.a, &inst.b);
    let mut out = Enumeration::default();

    let push = |out: &mut Enumeration, x: Vec<f64>, lambda: f64| {
        if aeicp_residual(inst, &x, lambda) > ENUM_RESIDUAL {
            return;
        }
        let dup = out
            .solutions
            .iter()
            .any(|(y, l)| (l - lambda).abs() <= 1e-12 && crate::linalg::dist(y, &x) <= 1e-12);
        if !dup {
            out.solutions.push((x, lambda));
        }
    };

    // Single-index supports: w_i = 0 pins λ, the other component must be ≥ 0.
    for i in 0..2 {
        if b[(i, i)] == 0.0 {
            continue;
        }
        let lambda = a[(i, i)] / b[(i, i)];
        let mut x = vec![0.0; 2];
        x[i] = 1.0;
        push(&mut out, x, lambda);
    }

    // Full support: w = 0, so det(λB − A) = 0 with a positive null vector.
    let qa = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
    let qb = -(b[(0, 0)] * a[(1, 1)] + a[(0, 0)] * b[(1, 1)]
        - b[(0, 1)] * a[(1, 0)]
        - a[(0, 1)] * b[(1, 0)]);
    let qc = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let roots = quadratic_real_roots(qa, qb, qc);
    for lambda in roots {
        let m = [
            [lambda * b[(0, 0)] - a[(0, 0)], lambda * b[(0, 1)] - a[(0, 1)]],
            [lambda * b[(1, 0)] - a[(1, 0)], lambda * b[(1, 1)] - a[(1, 1)]],
        ];
        let scale = a.max_abs().max(b.max_abs() * lambda.abs()).max(1.0);
        let r0 = m[0][0].hypot(m[0][1]);
        let r1 = m[1][0].hypot(m[1][1]);
        if r0.max(r1) <= 1e-12 * scale {
            out.interior_family = true;
            continue;
        }
        let row = if r0 >= r1 { m[0] } else { m[1] };
        let mut x = [row[1], -row[0]];
        if x[0] + x[1] < 0.0 {
            x = [-x[0], -x[1]];
        }
        let s = x[0] + x[1];
        if !(s > 0.0) || x[0] <= 1e-14 * s || x[1] <= 1e-14 * s {
            continue;
        }
        push(&mut out, vec![x[0] / s, x[1] / s], lambda);
    }
    Ok(out)
}

fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < -1e-14 * b * b {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    // Cancellation-free pair.
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    let mut r = vec![q / a, c / q];
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

/// Starting point of the benchmark protocol: x uniform then scaled onto the
/// simplex, y uniform on [0, 1).
pub fn random_start(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = Prng::new(seed);
    let mut x = rng.vector(n);
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    } else {
        x.iter_mut().for_each(|v| *v = 1.0 / n as f64);
    }
    let y = rng.vector(n);
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_row_pattern() {
        let b = banded_b(10);
        assert_eq!(
            b.row(0),
            &[10.0, -1.0, -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        for i in 0..10 {
            let off: f64 = (0..10).filter(|&j| j != i).map(|j| b[(i, j)].abs()).sum();
            assert!(off <= 8.0);
        }
    }

    #[test]
    fn rand_instance_is_pd_and_deterministic() {
        for seed in 0..5 {
            let inst = gen_rand_instance(12, seed).unwrap();
            let lmin = 2.0 * lambda_min_sym(&inst.a, 1e-13).unwrap();
            assert!(lmin >= 0.2 - 1e-10, "{lmin}");
            let again = gen_rand_instance(12, seed).unwrap();
            assert_eq!(inst.a, again.a);
        }
        assert!(gen_rand_instance(1, 0).is_err());
    }

    #[test]
    fn nep_shift_examples() {
        let i = build_nep_instance(&DenseMatrix::identity(2), "I").unwrap();
        assert_eq!(i.mu, 1.0);
        assert_eq!(i.a, DenseMatrix::from_diag(&[2.0, 2.0]));
        let d = build_nep_instance(&DenseMatrix::from_diag(&[-3.0, 1.0]), "d").unwrap();
        assert!((d.mu - 7.0).abs() < 1e-12);
        assert!(crate::linalg::dist(d.a.as_slice(), DenseMatrix::from_diag(&[4.0, 8.0]).as_slice()) < 1e-12);
        let z = build_nep_instance(&DenseMatrix::zeros(2, 2), "0").unwrap();
        assert_eq!(z.mu, 1.0);
        assert_eq!(z.a, DenseMatrix::identity(2));
        assert!(build_nep_instance(&DenseMatrix::zeros(2, 3), "bad").is_err());
    }

    #[test]
    fn counterexample_report() {
        let a = DenseMatrix::from_rows(&[&[-1.0, 1.0], &[-2.0, 2.0]]);
        let inst = AeicpInstance::new_unchecked(a, DenseMatrix::identity(2), 0.0, "cx").unwrap();
        let r = feasibility_report(&inst, &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(r.lambda, 2.0);
        assert_eq!(r.w, vec![-1.0, 0.0]);
        assert_eq!(r.residual, 1.0);
        assert_eq!(r.c, 0.0);
    }

    #[test]
    fn exact_solution_hits_cap() {
        let inst = AeicpInstance::new(
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            0.0,
            "I",
        )
        .unwrap();
        let r = feasibility_report(&inst, &[0.5, 0.5], 0.0).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.c, 300.0);
        assert!(feasibility_report(&inst, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn enumerate_diag() {
        let inst = AeicpInstance::new(
            DenseMatrix::from_diag(&[2.0, 1.0]),
            DenseMatrix::identity(2),
            0.0,
            "d",
        )
        .unwrap();
        let e = enumerate_2x2_solutions(&inst).unwrap();
        assert_eq!(e.lambdas(), vec![1.0, 2.0]);
        assert!(!e.interior_family);
        for (x, l) in &e.solutions {
            if *l == 2.0 {
                assert_eq!(x, &vec![1.0, 0.0]);
            } else {
                assert_eq!(x, &vec![0.0, 1.0]);
            }
        }
    }

    #[test]
    fn enumerate_identity_flags_family() {
        let inst = AeicpInstance::new(
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            0.0,
            "I",
        )
        .unwrap();
        let e = enumerate_2x2_solutions(&inst).unwrap();
        assert!(e.interior_family);
        assert_eq!(e.solutions.len(), 2);
    }

    #[test]
    fn enumerate_shifted_counterexample_nonempty() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[-2.0, 4.0]]);
        let inst = AeicpInstance::new_unchecked(a, DenseMatrix::identity(2), 2.0, "cx+2I").unwrap();
        let e = enumerate_2x2_solutions(&inst).unwrap();
        assert!(!e.solutions.is_empty());
    }

    #[test]
    fn random_start_on_simplex() {
        let (x, y) = random_start(7, 3);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(x.iter().chain(&y).all(|&v| v >= 0.0));
    }
}
