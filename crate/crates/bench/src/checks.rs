//! Quick invariant suites behind the `check` subcommand.

use std::sync::Arc;

use aeicp::formulations::{phi_hessian, DcPoint};
use aeicp::instances::gen_rand_instance;
use aeicp::linalg::sym_spectral_norm;
use aeicp::linesearch::{exact_linesearch, max_feasible_step};
use aeicp::rng::Prng;
use aeicp::{Formulation, FormulationKind, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn forms(n: usize, seed: u64) -> Result<Vec<Formulation>> {
    let inst = Arc::new(gen_rand_instance(n, seed)?);
    FormulationKind::ALL
        .iter()
        .map(|&k| Formulation::new(k, inst.clone(), 0.1))
        .collect()
}

/// Largest relative gap between an analytic gradient and central
/// differences of the matching value function.
fn fd_gap(
    p: &DcPoint,
    value: impl Fn(&DcPoint) -> Result<f64>,
    grad: &DcPoint,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for i in 0..p.as_slice().len() {
        let h = 1e-6 * (1.0 + p.as_slice()[i].abs());
        let mut a = p.clone();
        let mut b = p.clone();
        a.as_mut_slice()[i] += h;
        b.as_mut_slice()[i] -= h;
        let fd = (value(&a)? - value(&b)?) / (2.0 * h);
        let g = grad.as_slice()[i];
        worst = worst.max((fd - g).abs() / (1.0 + g.abs()));
    }
    Ok(worst)
}

pub fn gradient_check(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Prng::new(seed);
    let mut worst = 0.0_f64;
    for form in forms(6, seed)? {
        for _ in 0..samples {
            let p = form.sample_feasible(&mut rng);
            worst = worst.max(fd_gap(&p, |q| form.f_value(q), &form.grad_f(&p)?)?);
            // ∇H leaves out the ρ/2‖X‖² shared by both components.
            let h0 = |q: &DcPoint| Ok(form.h_value(q)? - 0.5 * form.rho * q.dot(q));
            worst = worst.max(fd_gap(&p, h0, &form.grad_h(&p)?)?);
        }
    }
    Ok(outcome("gradients", worst, 1e-6))
}

pub fn dc_identity_check(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Prng::new(seed);
    let mut worst = 0.0_f64;
    for form in forms(6, seed)? {
        for _ in 0..samples {
            let p = form.sample_feasible(&mut rng);
            let f = form.f_value(&p)?;
            let gap = (form.g_value(&p)? - form.h_value(&p)? - f).abs() / (1.0 + f.abs());
            worst = worst.max(gap);
        }
    }
    Ok(outcome("dc identity", worst, 1e-10))
}

pub fn eta_check(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Prng::new(seed);
    let inst = Arc::new(gen_rand_instance(10, seed)?);
    let form = Formulation::new(FormulationKind::Dcp3, inst, 0.1)?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let p = form.sample_feasible(&mut rng);
        let norm = sym_spectral_norm(&phi_hessian(p.x(), p.y()), 1e-12)?;
        worst = worst.max(norm - form.eta);
    }
    Ok(CheckOutcome {
        name: "eta bound",
        passed: worst <= 0.0,
        detail: format!("max ‖∇²φ‖ − η = {worst:.3e}"),
    })
}

pub fn linesearch_check(pairs: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Prng::new(seed);
    let mut worst = f64::NEG_INFINITY;
    for form in forms(6, seed)?.into_iter().filter(|f| f.kind.has_polynomial_objective()) {
        for _ in 0..pairs {
            let v = form.sample_feasible(&mut rng);
            let d = form.sample_feasible(&mut rng).diff(&v);
            let amax = max_feasible_step(&form, &v, &d)?.min(10.0);
            let (_, best) = exact_linesearch(&form, &v, &d, 10.0)?;
            let fbest = form.f_value(&best)?;
            let grid = 2000;
            let mut gmin = f64::INFINITY;
            for i in 0..=grid {
                gmin = gmin.min(form.f_value(&v.offset(amax * i as f64 / grid as f64, &d))?);
            }
            worst = worst.max(fbest - gmin);
        }
    }
    Ok(outcome("exact line search", worst.max(0.0), 1e-8))
}

/// Runs every suite; errors become failed outcomes.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    type Suite = Box<dyn Fn() -> Result<CheckOutcome>>;
    let suites: [(&'static str, Suite); 4] = [
        ("gradients", Box::new(move || gradient_check(20, seed))),
        ("dc identity", Box::new(move || dc_identity_check(200, seed))),
        ("eta bound", Box::new(move || eta_check(200, seed))),
        ("exact line search", Box::new(move || linesearch_check(20, seed))),
    ];
    suites
        .into_iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| CheckOutcome {
                name,
                passed: false,
                detail: e.to_string(),
            })
        })
        .collect()
}
