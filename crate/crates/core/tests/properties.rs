use std::sync::Arc;

use aeicp::engine::{gamma_hdca_ni, theta_beta_next, ThetaState};
use aeicp::instances::{aeicp_residual, feasibility_report, gen_rand_instance};
use aeicp::linalg::{load_matrix_market, to_matrix_market, DenseMatrix};
use aeicp::linesearch::{cubic_real_roots, max_feasible_step, quartic_coeffs};
use aeicp::rng::Prng;
use aeicp::{AeicpInstance, Formulation, FormulationKind};
use proptest::prelude::*;

fn cubic(a: f64, b: f64, c: f64, d: f64, x: f64) -> f64 {
    ((a * x + b) * x + c) * x + d
}

fn polynomial_form(seed: u64, n: usize, dcp2: bool) -> Formulation {
    let kind = if dcp2 { FormulationKind::Dcp2 } else { FormulationKind::Dcp1 };
    Formulation::new(kind, Arc::new(gen_rand_instance(n, seed).unwrap()), 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cubic_recovers_separated_roots(
        r1 in -5.0..5.0f64, g1 in 0.1..3.0f64, g2 in 0.1..3.0f64, lead in prop_oneof![-4.0..-0.25f64, 0.25..4.0f64],
    ) {
        let (r2, r3) = (r1 + g1, r1 + g1 + g2);
        // lead·(x − r1)(x − r2)(x − r3)
        let b = -lead * (r1 + r2 + r3);
        let c = lead * (r1 * r2 + r1 * r3 + r2 * r3);
        let d = -lead * r1 * r2 * r3;
        let roots = cubic_real_roots(lead, b, c, d).unwrap();
        prop_assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([r1, r2, r3]) {
            prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "{:?}", roots);
        }
    }

    #[test]
    fn cubic_root_count_follows_discriminant(
        a in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64], b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64,
    ) {
        let disc = 18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c
            - 4.0 * a * c.powi(3) - 27.0 * a * a * d * d;
        prop_assume!(disc.abs() > 1e-3);
        let roots = cubic_real_roots(a, b, c, d).unwrap();
        prop_assert_eq!(roots.len(), if disc > 0.0 { 3 } else { 1 });
        let scale = a.abs() + b.abs() + c.abs() + d.abs();
        for r in &roots {
            let deriv = (3.0 * a * r + 2.0 * b) * r + c;
            // Residual relative to the polynomial's size and slope near r.
            let tol = 1e-10 * scale * (1.0 + r.abs()).powi(3) + 1e-12 * deriv.abs();
            prop_assert!(cubic(a, b, c, d, *r).abs() <= tol, "root {} of {:?}", r, (a, b, c, d));
        }
        prop_assert!(roots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quartic_matches_objective_on_the_line(
        seed in 0u64..1000, dcp2 in any::<bool>(), alpha in -2.0..4.0f64,
    ) {
        let form = polynomial_form(seed, 4, dcp2);
        let mut rng = Prng::new(seed);
        let v = form.sample_feasible(&mut rng);
        let d = form.sample_feasible(&mut rng).diff(&v);
        let q = quartic_coeffs(&form, &v, &d).unwrap();
        let direct = form.f_value(&v.offset(alpha, &d)).unwrap();
        prop_assert!((q.eval(alpha) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn max_step_is_the_feasibility_boundary(seed in 0u64..1000, dcp2 in any::<bool>(), stretch in 1.0..3.0f64) {
        let form = polynomial_form(seed, 5, dcp2);
        let mut rng = Prng::new(seed ^ 0xA5);
        let v = form.sample_feasible(&mut rng);
        // Push past the second point so the ray leaves the feasible set.
        let d = form.sample_feasible(&mut rng).diff(&v);
        let d = d.offset(stretch - 1.0, &d);
        let amax = max_feasible_step(&form, &v, &d).unwrap();
        prop_assert!(amax >= 1.0 / stretch - 1e-12);
        if amax.is_finite() {
            prop_assert!(form.is_feasible(&v.offset(amax, &d), 1e-9));
            prop_assert!(!form.is_feasible(&v.offset(amax * 1.01 + 1e-6, &d), 1e-9));
        }
    }

    #[test]
    fn tangent_directions_keep_the_equalities(seed in 0u64..1000, scale in 0.1..10.0f64, noise in -1e-6..1e-6f64) {
        for kind in FormulationKind::ALL {
            let form = Formulation::new(kind, Arc::new(gen_rand_instance(4, seed).unwrap()), 0.1).unwrap();
            let mut rng = Prng::new(seed);
            let a = form.sample_feasible(&mut rng);
            let mut d = form.sample_feasible(&mut rng).diff(&a);
            let exact = form.tangent(&d);
            prop_assert!(exact.dist(&d) <= 1e-12 * (1.0 + d.norm()));
            // Rounding off the equalities is removed, even when scaled up.
            d.as_mut_slice().iter_mut().for_each(|v| *v = scale * (*v + noise));
            let t = form.tangent(&d);
            let tol = 1e-12 * (1.0 + t.norm());
            prop_assert!(t.x().iter().sum::<f64>().abs() <= tol);
            if let Some(tz) = t.z() {
                prop_assert!((t.y().iter().sum::<f64>() - tz).abs() <= tol);
            }
            if let Some(tw) = t.w() {
                let s = form.slack(t.x(), t.y());
                prop_assert!(tw.iter().zip(&s).all(|(a, b)| (a - b).abs() <= tol));
            }
        }
    }

    #[test]
    fn simplex_moves_keep_unit_sum(seed in 0u64..1000, beta in -0.99..10.0f64) {
        for kind in FormulationKind::ALL {
            let form = Formulation::new(kind, Arc::new(gen_rand_instance(4, seed).unwrap()), 0.1).unwrap();
            let mut rng = Prng::new(seed);
            let a = form.sample_feasible(&mut rng);
            let b = form.sample_feasible(&mut rng);
            let moved = a.offset(beta, &a.diff(&b));
            prop_assert!((moved.x().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn extrapolation_weights_stay_below_cap(cap in 0.0..0.999f64, steps in 1usize..400) {
        let mut st = ThetaState::default();
        for _ in 0..steps {
            st = theta_beta_next(st, cap);
            prop_assert!(st.beta >= 0.0 && st.beta <= cap, "{:?}", st);
            prop_assert!(st.theta >= 1.0);
        }
    }

    #[test]
    fn hdca_inertia_is_bounded(beta in 0.0..0.99f64, rho in 0.01..10.0f64, cap in 0.5..0.99f64) {
        let rho_sum = 2.0 * rho;
        let delta = (1.0 - cap * cap) * rho_sum / 4.0;
        let g = gamma_hdca_ni(beta.min(cap), rho_sum, delta);
        prop_assert!(g >= 0.0 && g < rho_sum);
    }

    #[test]
    fn matrix_market_round_trip(
        rows in 1usize..6, cols in 1usize..6,
        vals in prop::collection::vec(prop_oneof![Just(0.0), -1e12..1e12f64, -1e-8..1e-8f64], 36),
    ) {
        let m = DenseMatrix::from_row_major(rows, cols, vals[..rows * cols].to_vec()).unwrap();
        let back = load_matrix_market(&to_matrix_market(&m)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn report_ignores_positive_scaling(seed in 0u64..1000, s in 0.01..100.0f64) {
        let inst = gen_rand_instance(5, seed).unwrap();
        let mut rng = Prng::new(seed);
        let x = rng.vector(5);
        let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
        let (a, b) = (feasibility_report(&inst, &x, 0.0).unwrap(), feasibility_report(&inst, &scaled, 0.0).unwrap());
        prop_assert!((a.lambda - b.lambda).abs() <= 1e-12 * (1.0 + a.lambda.abs()));
        prop_assert!((a.residual - b.residual).abs() <= 1e-12 * (1.0 + a.residual));
    }

    #[test]
    fn shift_moves_eigenvalues(seed in 0u64..1000, mu in 0.0..5.0f64, lambda in -5.0..5.0f64) {
        let inst = gen_rand_instance(4, seed).unwrap();
        let shifted = AeicpInstance::new(inst.a.add(&inst.b.scaled(mu)), inst.b.clone(), mu, "s").unwrap();
        let x = Prng::new(seed).vector(4);
        let (r0, r1) = (aeicp_residual(&inst, &x, lambda), aeicp_residual(&shifted, &x, lambda + mu));
        prop_assert!((r0 - r1).abs() <= 1e-11 * (1.0 + r0));
    }
}
