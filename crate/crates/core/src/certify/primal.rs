//! Bob's explicit cheating strategy as a feasible point of Alice's SDP.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::target_states;
use crate::tree::{eval_ab, eval_h, eval_p, eval_w_with, CoinGame, TreeAssignment, ZeroBranch};

use super::operators::{AliceLayout, AliceSideOperators};
use super::sparse::SparseMatrix;
use super::{check_size, DEFAULT_CERT_MAX_DEPTH};

/// Density operators `rho_0..rho_n, rho_E, rho_F` built from a weight tree.
#[derive(Debug, Clone)]
pub struct PrimalStrategy {
    pub n: usize,
    pub weights: TreeAssignment,
    /// `rho_k`; on `H_A` for odd `k` and on `H_A (x) H_M` for even `k`.
    pub rho: Vec<SparseMatrix>,
    pub rho_e: SparseMatrix,
    pub rho_f: SparseMatrix,
    /// Total weight of leaves with `G_x = 0`.
    pub c0: f64,
    /// `(x, sqrt(W_x))` for leaves with `G_x = 1`.
    pub phi1: Vec<(u64, f64)>,
}

impl PrimalStrategy {
    /// Diagonal of `sigma_k` (weights of the depth-`k` nodes).
    pub fn sigma(&self, k: usize) -> &[f64] {
        self.weights.level(k)
    }
}

/// Builds the strategy from the weight tree with zero-`B` branches split honestly.
pub fn build_primal(game: &CoinGame) -> Result<PrimalStrategy> {
    build_primal_limited(game, DEFAULT_CERT_MAX_DEPTH)
}

pub fn build_primal_limited(game: &CoinGame, max_depth: usize) -> Result<PrimalStrategy> {
    let (_, b) = eval_ab(game);
    let w = eval_w_with(game, &b, ZeroBranch::HonestSplit);
    build_primal_with_weights(game, &w, max_depth)
}

/// Builds the block-form strategy from arbitrary weights (used to inject faults).
pub fn build_primal_with_weights(
    game: &CoinGame,
    w: &TreeAssignment,
    max_depth: usize,
) -> Result<PrimalStrategy> {
    let n = game.depth();
    check_size(n, max_depth)?;
    if w.depth() != n {
        return Err(Error::Depth(format!("weight tree depth {} differs from game depth {n}", w.depth())));
    }
    let h = eval_h(game).root();
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::DegenerateGame { h_root: h });
    }
    let layout = AliceLayout { n };
    let dm = layout.message_dim();
    let rho = (0..=n)
        .map(|k| {
            let entries = w.level(k).iter().enumerate().map(|(x, &wx)| {
                let alice = layout.alice_index((x as u64) << (n - k), 0, 0);
                let idx = if k % 2 == 0 { alice * dm } else { alice };
                (idx, idx, wx)
            });
            let dim = if k % 2 == 0 { layout.full_dim() } else { layout.alice_dim() };
            SparseMatrix::from_triplets(dim, entries)
        })
        .collect();
    let leaves = game.leaves();
    let rho_e = SparseMatrix::from_triplets(
        layout.full_dim(),
        w.leaves().iter().enumerate().map(|(x, &wx)| {
            let idx = layout.alice_index(x as u64, 0, leaves[x] as u64) * dm;
            (idx, idx, wx)
        }),
    );
    let c0: f64 = w.leaves().iter().zip(leaves).filter(|(_, &g)| g == 0.0).map(|(&wx, _)| wx).sum();
    let phi1: Vec<(u64, f64)> = w
        .leaves()
        .iter()
        .zip(leaves)
        .enumerate()
        .filter(|(_, (_, &g))| g == 1.0)
        .map(|(x, (&wx, _))| (x as u64, wx.max(0.0).sqrt()))
        .collect();
    let mut triplets = vec![(0, 0, c0)];
    for &(x, vx) in &phi1 {
        for &(y, vy) in &phi1 {
            let i = layout.alice_index(x, x, 1) * dm;
            let j = layout.alice_index(y, y, 1) * dm;
            triplets.push((i, j, vx * vy));
        }
    }
    let rho_f = SparseMatrix::from_triplets(layout.full_dim(), triplets);
    Ok(PrimalStrategy { n, weights: w.clone(), rho, rho_e, rho_f, c0, phi1 })
}

/// Largest entrywise deviation of one SDP equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub constraint: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalReport {
    pub residuals: Vec<Residual>,
    /// Smallest eigenvalue over all density operators of the strategy.
    pub min_eigenvalue: f64,
    pub value: f64,
}

impl PrimalReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }
}

/// Deviation of every equality constraint, without judging them.
pub fn primal_residuals(game: &CoinGame, s: &PrimalStrategy) -> Result<PrimalReport> {
    let ops = AliceSideOperators::new(game);
    let n = s.n;
    let dm = ops.layout.message_dim();
    let mut residuals = Vec::with_capacity(n + 3);
    let mut push = |constraint: String, deviation: f64| residuals.push(Residual { constraint, deviation });

    let ground = SparseMatrix::from_triplets(ops.layout.full_dim(), [(0, 0, 1.0)]);
    push("r0".into(), s.rho[0].max_abs_diff(&ground));
    for k in 1..=n {
        if k % 2 == 1 {
            let evolved = s.rho[k - 1].conjugate(&ops.rotations[k - 1]).partial_trace(dm);
            push(format!("odd k={k}"), s.rho[k].max_abs_diff(&evolved));
        } else {
            let undone = s.rho[k].conjugate_inverse(&ops.swaps[k - 1]).partial_trace(dm);
            push(format!("even k={k}"), undone.max_abs_diff(&s.rho[k - 1]));
        }
    }
    let recorded = if n % 2 == 0 {
        s.rho_e.max_abs_diff(&s.rho[n].conjugate(&ops.record))
    } else {
        s.rho_e.partial_trace(dm).max_abs_diff(&s.rho[n].conjugate(&ops.record_alice))
    };
    push("record".into(), recorded);
    let lhs = s.rho_f.conjugate_inverse(&ops.transfer1).partial_trace(dm);
    let rhs = s.rho_e.conjugate(&ops.transfer0).partial_trace(dm);
    push("transfer".into(), lhs.max_abs_diff(&rhs));

    let min_eigenvalue = s
        .rho
        .iter()
        .chain([&s.rho_e, &s.rho_f])
        .map(SparseMatrix::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    Ok(PrimalReport { residuals, min_eigenvalue, value: primal_value(game, s)? })
}

/// Fails with the earliest violated constraint (in protocol order) if any residual exceeds `tol` or an operator is not PSD.
pub fn check_primal_constraints(game: &CoinGame, s: &PrimalStrategy, tol: f64) -> Result<PrimalReport> {
    let report = primal_residuals(game, s)?;
    if let Some(worst) = report.residuals.iter().find(|r| !(r.deviation <= tol)) {
        return Err(Error::ConstraintViolation {
            constraint: worst.constraint.clone(),
            deviation: worst.deviation,
            tol,
        });
    }
    if report.min_eigenvalue < -tol {
        return Err(Error::ConstraintViolation {
            constraint: "positive semidefinite".into(),
            deviation: -report.min_eigenvalue,
            tol,
        });
    }
    Ok(report)
}

/// `<psi_A1| Tr_M[rho_F] |psi_A1>`.
pub fn primal_value(game: &CoinGame, s: &PrimalStrategy) -> Result<f64> {
    let targets = target_states(game)?;
    let layout = AliceLayout { n: s.n };
    let reduced = s.rho_f.partial_trace(layout.message_dim());
    let mut value = 0.0;
    for (&i, &pi) in &targets.psi_a1 {
        for &(j, v) in reduced.row(i as usize) {
            if let Some(&pj) = targets.psi_a1.get(&(j as u128)) {
                value += pi * v * pj;
            }
        }
    }
    Ok(value)
}

/// `(sum over G_x = 1 of sqrt(W_x P_x))^2 / H_r`, the value in closed form.
pub fn primal_value_formula(game: &CoinGame, w: &TreeAssignment) -> f64 {
    let p = eval_p(game);
    let h = eval_h(game).root();
    let s: f64 = game
        .leaves()
        .iter()
        .zip(w.leaves())
        .zip(p.leaves())
        .filter(|((&g, _), _)| g == 1.0)
        .map(|((_, &wx), &px)| (wx * px).sqrt())
        .sum();
    s * s / h
}
