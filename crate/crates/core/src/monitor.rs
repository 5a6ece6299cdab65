//! Descent checks on a finished trace.
//!
//! Pairs involving the starting point are skipped: X^0 only satisfies the
//! equality constraints (its w block may be negative), so the descent
//! arguments start at X^1.

use std::fmt;

use crate::engine::{DcaConfig, TraceRecord, Variant};

/// Slack for plain monotonicity of f.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Slack for the quantified descent and energy inequalities.
pub const ENERGY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// f(X^{k+1}) ≤ f(X^k).
    Monotone,
    /// f(X^k) − f(X^{k+1}) ≥ ρ‖X^{k+1} − X^k‖².
    SufficientDescent,
    /// E_{k+1} ≤ E_k − c‖X^k − X^{k−1}‖² for the line-search hybrid.
    LineSearchEnergy,
    /// E_{k+1+q} ≤ E_k − δ·min step² over the window, for the extrapolated
    /// hybrid.
    WindowEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub check: Check,
    /// Index of the earlier iterate of the failing pair.
    pub k: usize,
    /// How far the inequality is off, slack already subtracted.
    pub excess: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at k = {} (excess {:e})", self.check, self.k, self.excess)
    }
}

/// All monitor checks that apply to `cfg.variant`.
pub fn check_trace(trace: &[TraceRecord], cfg: &DcaConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |check, k, excess: f64| {
        if excess > 0.0 {
            out.push(Violation { check, k, excess });
        }
    };
    let pairs = || trace.windows(2).filter(|w| w[0].k >= 1);
    match cfg.variant {
        Variant::Dca | Variant::BdcaExact | Variant::BdcaArmijo => {
            for w in pairs() {
                push(Check::Monotone, w[0].k, w[1].f - w[0].f - MONOTONE_SLACK);
            }
            if cfg.variant == Variant::Dca {
                for w in pairs() {
                    let need = cfg.rho_sum() / 2.0 * w[1].step_norm.powi(2);
                    push(
                        Check::SufficientDescent,
                        w[0].k,
                        need - (w[0].f - w[1].f) - ENERGY_SLACK,
                    );
                }
            }
        }
        Variant::HdcaLi => {
            let g = cfg.gamma_value();
            let a = (1.0 + cfg.alpha_bar).powi(2);
            let c = (cfg.rho_sum() - g * (1.0 + a)) / (2.0 * a);
            for w in pairs() {
                let bound = w[0].energy - c * w[0].step_norm.powi(2);
                push(Check::LineSearchEnergy, w[0].k, w[1].energy - bound - ENERGY_SLACK);
            }
        }
        Variant::HdcaNi => {
            let q = cfg.q;
            let delta = cfg.delta();
            for (i, rec) in trace.iter().enumerate() {
                if rec.k == 0 || i + 1 + q >= trace.len() {
                    continue;
                }
                // Smallest step among the iterates that form the later window.
                let min_step = trace[i + 1..=i + 1 + q]
                    .iter()
                    .map(|r| r.step_norm.powi(2))
                    .fold(f64::INFINITY, f64::min);
                let later = trace[i + 1 + q].energy;
                push(
                    Check::WindowEnergy,
                    rec.k,
                    later - (rec.energy - delta * min_step) - ENERGY_SLACK,
                );
            }
        }
        Variant::Adca | Variant::InDca => {}
    }
    out
}
