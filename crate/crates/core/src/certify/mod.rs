//! Certification of the cheating probabilities through Alice's SDP.
//!
//! The primal side builds Bob's weight-tree strategy and checks every SDP
//! equality; the dual side builds the Z-tree certificate and checks every
//! operator inequality. Both sides must meet at `B_r^2 / H_r`.

pub mod dual;
pub mod operators;
pub mod primal;
pub mod sparse;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{eval_ab, eval_h, reverse_roles, CoinGame, TreeAssignment};

pub use dual::{build_dual, build_dual_limited, check_dual_constraints, dual_report, DualCertificate, DualReport};
pub use operators::{unitarity_defect, AliceLayout, AliceSideOperators};
pub use primal::{
    build_primal, build_primal_limited, build_primal_with_weights, check_primal_constraints,
    primal_residuals, primal_value, primal_value_formula, PrimalReport, PrimalStrategy, Residual,
};
pub use sparse::{BlockSystem, SparseMatrix};

/// Default cap on the game depth (`H_A (x) H_M` has dimension `2^(3n+2)`).
pub const DEFAULT_CERT_MAX_DEPTH: usize = 3;
pub const DEFAULT_EPSILON_PRIME: f64 = 1e-4;

pub(crate) fn check_size(n: usize, max_depth: usize) -> Result<()> {
    if n > max_depth {
        return Err(Error::Size { depth: n, limit: max_depth });
    }
    Ok(())
}

/// `A_r / (1 - H_r)`.
pub fn cheating_alice_bound(game: &CoinGame) -> Result<f64> {
    let (a, _) = eval_ab(game);
    let h = eval_h(game).root();
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::DegenerateGame { h_root: h });
    }
    Ok(a.root() / (1.0 - h))
}

/// Bob's primal value on the role-reversed game, which equals Alice's cheating probability.
pub fn cheating_alice_bound_by_reversal(game: &CoinGame, max_depth: usize) -> Result<f64> {
    let reversed = reverse_roles(game);
    let strategy = build_primal_limited(&reversed, max_depth)?;
    primal_value(&reversed, &strategy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub epsilon_prime: f64,
    /// Tolerance on primal residuals and on negative eigenvalues.
    pub tol: f64,
    pub max_depth: usize,
    pub max_c: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            epsilon_prime: DEFAULT_EPSILON_PRIME,
            tol: 1e-8,
            max_depth: DEFAULT_CERT_MAX_DEPTH,
            max_c: dual::DEFAULT_MAX_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub depth: usize,
    pub epsilon_prime: f64,
    /// `B_r^2 / H_r` from the tree recursions.
    pub target: f64,
    pub primal_value: f64,
    pub primal_residuals: Vec<Residual>,
    pub primal_min_eigenvalue: f64,
    pub dual_bound: f64,
    pub dual: DualReport,
    pub c_values: Vec<f64>,
    pub gap: f64,
    pub alice_bound: f64,
    /// Same quantity via the reversed game, when it fits the size limit.
    pub alice_bound_reversed: Option<f64>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Runs both sides of the certification and collects every failure instead of stopping at the first.
///
/// `weights` overrides the primal weight tree.
pub fn certify(game: &CoinGame, opts: &CertifyOptions, weights: Option<&TreeAssignment>) -> Result<CertificateReport> {
    let n = game.depth();
    check_size(n, opts.max_depth)?;
    let (_, b) = eval_ab(game);
    let h = eval_h(game).root();
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::DegenerateGame { h_root: h });
    }
    let target = b.root() * b.root() / h;
    let strategy = match weights {
        Some(w) => build_primal_with_weights(game, w, opts.max_depth)?,
        None => build_primal_limited(game, opts.max_depth)?,
    };
    let primal = primal_residuals(game, &strategy)?;
    let cert = build_dual_limited(game, opts.epsilon_prime, opts.max_depth, opts.max_c)?;
    let dual = dual_report(game, &cert)?;

    let mut failures = Vec::new();
    for r in primal.residuals.iter().filter(|r| !(r.deviation <= opts.tol)) {
        failures.push(format!("primal {} deviates by {:e}", r.constraint, r.deviation));
    }
    if primal.min_eigenvalue < -opts.tol {
        failures.push(format!("primal operator eigenvalue {:e}", primal.min_eigenvalue));
    }
    for e in dual.inequalities.iter().filter(|e| !(e.min_eigenvalue >= -opts.tol)) {
        failures.push(format!("dual {} min eigenvalue {:e}", e.constraint, e.min_eigenvalue));
    }
    for r in dual.rank_one.iter().filter(|r| !(r.value <= 1.0 + opts.tol)) {
        failures.push(format!("dual rank-one form at epsilon = {:e} is {}", r.epsilon, r.value));
    }
    let gap = cert.bound - primal.value;
    if !(gap >= -opts.tol && gap <= opts.epsilon_prime + opts.tol) {
        failures.push(format!("duality gap {gap:e} outside [0, epsilon']"));
    }
    let alice_bound_reversed = if n < opts.max_depth {
        Some(cheating_alice_bound_by_reversal(game, opts.max_depth)?)
    } else {
        None
    };
    let alice_bound = cheating_alice_bound(game)?;
    if let Some(rev) = alice_bound_reversed {
        if !((rev - alice_bound).abs() <= 1e-9) {
            failures.push(format!("role reversal gives {rev}, expected {alice_bound}"));
        }
    }
    Ok(CertificateReport {
        depth: n,
        epsilon_prime: opts.epsilon_prime,
        target,
        primal_value: primal.value,
        primal_min_eigenvalue: primal.min_eigenvalue,
        primal_residuals: primal.residuals,
        dual_bound: cert.bound,
        c_values: cert.c.clone(),
        dual,
        gap,
        alice_bound,
        alice_bound_reversed,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{fair_game, optimal_game};
    use crate::tree::{eval_w, random_game};
    use approx::assert_abs_diff_eq;

    #[test]
    fn smallest_game_primal() {
        let g = optimal_game(1).unwrap();
        let s = build_primal(&g).unwrap();
        assert_abs_diff_eq!(s.sigma(1)[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sigma(1)[1], 2.0 / 3.0, epsilon = 1e-15);
        let report = check_primal_constraints(&g, &s, 1e-12).unwrap();
        assert_abs_diff_eq!(report.value, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rho_f.trace(), s.weights.leaves().iter().sum::<f64>(), epsilon = 1e-15);
    }

    #[test]
    fn fair_game_primal_and_alice() {
        let g = fair_game(2).unwrap();
        let s = build_primal(&g).unwrap();
        let report = check_primal_constraints(&g, &s, 1e-11).unwrap();
        assert_abs_diff_eq!(report.value, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(cheating_alice_bound(&g).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cheating_alice_bound_by_reversal(&g, 3).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perturbed_weight_is_caught() {
        let g = optimal_game(2).unwrap();
        let (_, b) = eval_ab(&g);
        let mut w = eval_w(&g, &b);
        w[crate::tree::NodeId::new(1, 0)] += 0.1;
        let s = build_primal_with_weights(&g, &w, 3).unwrap();
        match check_primal_constraints(&g, &s, 1e-10) {
            Err(Error::ConstraintViolation { constraint, .. }) => assert_eq!(constraint, "odd k=1"),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn smallest_game_dual() {
        let g = optimal_game(1).unwrap();
        let cert = build_dual(&g, 1e-4).unwrap();
        assert_abs_diff_eq!(cert.bound, 1.0 / 3.0 + 1e-4, epsilon = 1e-12);
        let report = check_dual_constraints(&g, &cert, 1e-10).unwrap();
        let at_1e6 = report.rank_one.iter().find(|r| r.epsilon == 1e-6).unwrap();
        assert_abs_diff_eq!(at_1e6.value, 1.0 / (1.0 + 1e-6), epsilon = 1e-14);
        let layout = AliceLayout { n: 1 };
        for (idx, &v) in cert.z[3].iter().enumerate() {
            if v != 0.0 {
                assert_eq!(layout.alice_fields(idx).2, 1);
            }
        }
    }

    #[test]
    fn size_limit() {
        let g = optimal_game(4).unwrap();
        assert!(matches!(build_primal(&g), Err(Error::Size { depth: 4, limit: 3 })));
        assert!(matches!(build_dual(&g, 1e-4), Err(Error::Size { .. })));
    }

    #[test]
    fn random_depth_two_certifies() {
        for seed in 0..5 {
            let g = random_game(2, seed).unwrap();
            let h = eval_h(&g).root();
            if !(h > 0.0 && h < 1.0) {
                continue;
            }
            let report = certify(&g, &CertifyOptions::default(), None).unwrap();
            assert!(report.passed, "seed {seed}: {:?}", report.failures);
        }
    }
}
