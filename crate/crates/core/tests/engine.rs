use std::sync::Arc;

use aeicp::instances::{build_nep_instance, gen_rand_instance, random_start};
use aeicp::linalg::load_matrix_market;
use aeicp::rng::derive_seed;
use aeicp::{run, DcaConfig, Error, Formulation, FormulationKind, RunStatus, Variant};

fn cfg(variant: Variant, max_iter: usize) -> DcaConfig {
    DcaConfig {
        max_iter,
        ..DcaConfig::new(variant)
    }
}

#[test]
fn every_cell_produces_a_consistent_run() {
    let inst = Arc::new(gen_rand_instance(6, 21).unwrap());
    let (x0, y0) = random_start(6, 22);
    for kind in FormulationKind::ALL {
        let form = Formulation::new(kind, inst.clone(), 0.1).unwrap();
        for v in Variant::ALL {
            let res = run(&form, &cfg(v, 40), &x0, &y0);
            if !v.supports(kind) {
                assert!(matches!(res, Err(Error::Unsupported(_))));
                continue;
            }
            let r = res.unwrap();
            assert_ne!(r.status, RunStatus::SubproblemFailure, "{kind} {v}");
            assert!(r.trace.iter().enumerate().all(|(i, t)| t.k == i), "{kind} {v}");
            assert_eq!(r.subproblems.len() + 1, r.trace.len(), "{kind} {v}");
            assert!(form.is_feasible(&r.final_point, 1e-7), "{kind} {v}");
            assert!(r.report.c.is_finite() && r.final_f() >= -1e-12, "{kind} {v}");
            assert!(r.violations.is_empty(), "{kind} {v}: {:?}", r.violations);
            // The whole run improves on the first feasible iterate.
            assert!(r.final_f() <= r.trace[1].f + 1e-10, "{kind} {v}");
        }
    }
}

#[test]
fn small_degenerate_problems_stay_monotone() {
    // RAND(3)/RAND(4) cells whose subproblems used to cycle or whose line
    // search drifted off the equality constraints.
    let cells = [
        (3, 0, FormulationKind::Dcp2, Variant::Dca),
        (3, 15, FormulationKind::Dcp1, Variant::HdcaLi),
        (3, 15, FormulationKind::Dcp2, Variant::BdcaArmijo),
        (3, 8, FormulationKind::Dcp1, Variant::BdcaExact),
        (4, 5, FormulationKind::Dcp1, Variant::BdcaExact),
    ];
    for (n, i, kind, v) in cells {
        let inst = Arc::new(gen_rand_instance(n, derive_seed(7, i)).unwrap());
        let (x0, y0) = random_start(n, derive_seed(7, (1 << 32) + i));
        let form = Formulation::new(kind, inst, 0.1).unwrap();
        let r = run(&form, &DcaConfig::new(v), &x0, &y0).unwrap();
        assert_ne!(r.status, RunStatus::SubproblemFailure, "RAND({n})-{i} {kind} {v}");
        assert!(r.violations.is_empty(), "RAND({n})-{i} {kind} {v}: {:?}", r.violations);
        assert!(form.is_feasible(&r.final_point, 1e-7), "RAND({n})-{i} {kind} {v}");
    }
}

#[test]
fn runs_are_reproducible() {
    let inst = Arc::new(gen_rand_instance(5, 3).unwrap());
    let (x0, y0) = random_start(5, 4);
    let form = Formulation::new(FormulationKind::Dcp2, inst, 0.1).unwrap();
    let a = run(&form, &cfg(Variant::HdcaNi, 60), &x0, &y0).unwrap();
    let b = run(&form, &cfg(Variant::HdcaNi, 60), &x0, &y0).unwrap();
    let bits = |r: &aeicp::RunResult| r.trace.iter().map(|t| (t.f.to_bits(), t.step_norm.to_bits())).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.final_point, b.final_point);
}

#[test]
fn solves_a_shifted_matrix_market_problem() {
    let text = "%%MatrixMarket matrix coordinate real general\n\
                % indefinite 3x3 test matrix\n\
                3 3 5\n1 1 -2.0\n1 2 1.0\n2 2 0.5\n3 1 1.5\n3 3 1.0\n";
    let raw = load_matrix_market(text).unwrap();
    let inst = Arc::new(build_nep_instance(&raw, "tiny").unwrap());
    assert!(inst.mu > 1.0);
    let form = Formulation::new(FormulationKind::Dcp1, inst.clone(), 0.1).unwrap();
    let (x0, y0) = random_start(3, 8);
    let r = run(&form, &cfg(Variant::BdcaExact, 300), &x0, &y0).unwrap();
    assert!(r.final_f() < r.trace[1].f);
    // B = I, so removing the shift from λ gives the raw Rayleigh quotient.
    let lam_raw = r.report.lambda - inst.mu;
    let ax = raw.matvec(&r.report.x);
    let xx: f64 = r.report.x.iter().map(|v| v * v).sum();
    let rq: f64 = ax.iter().zip(&r.report.x).map(|(a, b)| a * b).sum::<f64>() / xx;
    assert!((lam_raw - rq).abs() < 1e-10);
}

#[test]
fn invalid_settings_are_rejected() {
    let inst = Arc::new(gen_rand_instance(4, 1).unwrap());
    let form = Formulation::new(FormulationKind::Dcp1, inst, 0.1).unwrap();
    let (x0, y0) = random_start(4, 1);
    let bad_rho = DcaConfig { rho: 0.2, ..DcaConfig::new(Variant::Dca) };
    assert!(run(&form, &bad_rho, &x0, &y0).is_err());
    let bad_gamma = DcaConfig { gamma: Some(1.0), ..DcaConfig::new(Variant::InDca) };
    assert!(run(&form, &bad_gamma, &x0, &y0).is_err());
    assert!(run(&form, &DcaConfig::new(Variant::Dca), &x0[..3], &y0).is_err());
}
