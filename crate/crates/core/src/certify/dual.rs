//! Dual certificate: diagonal operators `Z_0..Z_{n+2}` on `H_A` whose first entry bounds `P_B*`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::target_states;
use crate::tree::{eval_ab, eval_h, eval_z, CoinGame, TreeAssignment};

use super::operators::{AliceLayout, AliceSideOperators};
use super::sparse::{BlockSystem, SparseMatrix};
use super::{check_size, DEFAULT_CERT_MAX_DEPTH};

/// Bisection stops once the bracket on `C_k` is this narrow.
pub const C_RESOLUTION: f64 = 1e-6;
/// Largest padding constant tried before giving up.
pub const DEFAULT_MAX_C: f64 = 1e6;
/// Regularizers used for the rank-one form of the last inequality.
pub const RANK_ONE_EPSILONS: [f64; 3] = [1e-4, 1e-6, 1e-8];

#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub n: usize,
    pub epsilon_prime: f64,
    pub z_tree: TreeAssignment,
    /// Diagonal of `Z_k` on `H_A` for `k = 0..=n+2`.
    pub z: Vec<Vec<f64>>,
    /// Padding constants `C_0..C_{n-1}`.
    pub c: Vec<f64>,
    /// `<0|Z_0|0>`.
    pub bound: f64,
}

/// The inequality `Z_k (x) I >= V^T (Z_{k+1} (x) I) V` with the pieces needed to evaluate it.
fn inequality_lhs(
    ops: &AliceSideOperators,
    k: usize,
    z_k: &[f64],
    z_next: &[f64],
) -> SparseMatrix {
    let n = ops.layout.n;
    let dm = ops.layout.message_dim();
    let v = if k < n {
        if k % 2 == 0 { &ops.rotations[k] } else { &ops.swaps[k] }
    } else if k == n {
        &ops.record
    } else {
        &ops.transfer0
    };
    let alpha = SparseMatrix::from_diagonal(z_k).kron_identity(dm);
    let beta = SparseMatrix::from_diagonal(z_next).kron_identity(dm).conjugate_inverse(v);
    alpha.sub(&beta)
}

/// `H_A` indices where the qubits after `a_k` and all of `a'`, `ac` are zero.
fn pi_indices(layout: AliceLayout, k: usize) -> impl Iterator<Item = (u64, usize)> {
    let n = layout.n;
    (0..1u64 << k).map(move |x| (x, layout.alice_index(x << (n - k), 0, 0)))
}

/// Diagonal of `Z_k` for `k < n` without the padding, and the padded index set.
fn level_operator(
    layout: AliceLayout,
    z_tree: &TreeAssignment,
    k: usize,
    epsilon_prime: f64,
) -> (Vec<f64>, Vec<bool>) {
    let n = layout.n;
    let lift = (n - k) as f64 * epsilon_prime / n as f64;
    let mut diag = vec![0.0; layout.alice_dim()];
    let mut padded = vec![true; layout.alice_dim()];
    for (x, idx) in pi_indices(layout, k) {
        diag[idx] = z_tree.level(k)[x as usize] + lift;
        padded[idx] = false;
    }
    (diag, padded)
}

fn top_operators(game: &CoinGame, layout: AliceLayout, z_tree: &TreeAssignment) -> [Vec<f64>; 3] {
    let n = layout.n;
    let dim = layout.alice_dim();
    let (mut zn, mut zn1, mut zn2) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    for (x, (&zx, &g)) in z_tree.leaves().iter().zip(game.leaves()).enumerate() {
        for ap in 0..1u64 << n {
            zn[layout.alice_index(x as u64, ap, 0)] = zx;
            zn1[layout.alice_index(x as u64, ap, g as u64)] = zx;
            if g == 1.0 {
                zn2[layout.alice_index(x as u64, ap, 1)] = zx;
            }
        }
    }
    [zn, zn1, zn2]
}

pub fn build_dual(game: &CoinGame, epsilon_prime: f64) -> Result<DualCertificate> {
    build_dual_limited(game, epsilon_prime, DEFAULT_CERT_MAX_DEPTH, DEFAULT_MAX_C)
}

/// Builds the certificate, choosing each `C_k` (from `k = n-1` down) by bisection
/// as the smallest padding that makes the level-`k` inequality PSD.
pub fn build_dual_limited(
    game: &CoinGame,
    epsilon_prime: f64,
    max_depth: usize,
    max_c: f64,
) -> Result<DualCertificate> {
    let n = game.depth();
    check_size(n, max_depth)?;
    if !(epsilon_prime > 0.0 && epsilon_prime.is_finite()) {
        return Err(Error::Domain(format!("epsilon' must be positive, got {epsilon_prime}")));
    }
    let (_, b) = eval_ab(game);
    let h = eval_h(game).root();
    let z_tree = eval_z(game, &b, h)?;
    let ops = AliceSideOperators::new(game);
    let layout = ops.layout;
    let dm = layout.message_dim();

    let [zn, zn1, zn2] = top_operators(game, layout, &z_tree);
    let mut z = vec![Vec::new(); n + 3];
    z[n] = zn;
    z[n + 1] = zn1;
    z[n + 2] = zn2;
    let mut c = vec![0.0; n];
    let max_leaf = z_tree.leaves().iter().copied().fold(0.0, f64::max);
    for k in (0..n).rev() {
        let (base, padded) = level_operator(layout, &z_tree, k, epsilon_prime);
        let lhs = inequality_lhs(&ops, k, &base, &z[k + 1]);
        let mask: Vec<usize> = (0..layout.full_dim()).filter(|&i| padded[i / dm]).collect();
        let system = BlockSystem::new(&lhs, &mask);
        let ok = |ck: f64| system.min_eigenvalue(ck) >= 0.0;
        let c_next = if k + 1 < n { c[k + 1] } else { 0.0 };
        let ck = bisect(ok, max_leaf.max(c_next), max_c).ok_or(Error::BisectionFailure { level: k, limit: max_c })?;
        c[k] = ck;
        z[k] = base
            .iter()
            .zip(&padded)
            .map(|(&v, &p)| if p { ck } else { v })
            .collect();
    }
    let bound = z[0][0];
    Ok(DualCertificate { n, epsilon_prime, z_tree, z, c, bound })
}

/// Smallest `c` in `[0, max_c]` (to within [`C_RESOLUTION`]) with `ok(c)`, assuming `ok` is monotone.
fn bisect(ok: impl Fn(f64) -> bool, start: f64, max_c: f64) -> Option<f64> {
    if ok(0.0) {
        return Some(0.0);
    }
    let mut hi = if start > 0.0 { start } else { 1.0 };
    while !ok(hi) {
        if hi >= max_c {
            return None;
        }
        hi = (2.0 * hi).min(max_c);
    }
    let mut lo = 0.0;
    while hi - lo > C_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCheck {
    pub constraint: String,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneCheck {
    pub epsilon: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport {
    pub inequalities: Vec<EigenCheck>,
    pub rank_one: Vec<RankOneCheck>,
    /// Max `|Pi(alpha - beta)Pi - (eps'/n)Pi|` over nodes with `B_x > 0` or `Z_x = 0`.
    pub pi_block_max_deviation: f64,
    /// Min over the remaining nodes of the `Pi` diagonal minus `eps'/n` (should be >= 0).
    pub pi_block_min_excess: f64,
    /// Smallest diagonal entry over all `Z_k`.
    pub min_z: f64,
    pub bound: f64,
}

impl DualReport {
    pub fn min_eigenvalue(&self) -> f64 {
        self.inequalities.iter().map(|e| e.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn max_rank_one(&self) -> f64 {
        self.rank_one.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn level_name(n: usize, k: usize) -> String {
    match k {
        k if k < n && k % 2 == 0 => format!("level {k} (R_A,{})", k + 1),
        k if k < n => format!("level {k} (S_A,{})", k + 1),
        k if k == n => format!("level {k} (R_A,E)"),
        k if k == n + 1 => format!("level {k} (T_A,0)"),
        _ => format!("level {k} (T_A,1)"),
    }
}

/// Recomputes every operator inequality of `cert` and its auxiliary identities.
pub fn dual_report(game: &CoinGame, cert: &DualCertificate) -> Result<DualReport> {
    let n = cert.n;
    if game.depth() != n {
        return Err(Error::Depth(format!("certificate depth {n} differs from game depth {}", game.depth())));
    }
    let ops = AliceSideOperators::new(game);
    let layout = ops.layout;
    let dm = layout.message_dim();
    let targets = target_states(game)?;
    let mut inequalities = Vec::with_capacity(n + 3);
    for k in 0..=n + 1 {
        let lhs = inequality_lhs(&ops, k, &cert.z[k], &cert.z[k + 1]);
        inequalities.push(EigenCheck { constraint: level_name(n, k), min_eigenvalue: lhs.min_eigenvalue() });
    }
    let psi = SparseMatrix::from_triplets(
        layout.alice_dim(),
        targets.psi_a1.iter().flat_map(|(&i, &vi)| {
            targets.psi_a1.iter().map(move |(&j, &vj)| (i as usize, j as usize, vi * vj))
        }),
    );
    let last = SparseMatrix::from_diagonal(&cert.z[n + 2])
        .kron_identity(dm)
        .sub(&psi.kron_identity(dm).conjugate_inverse(&ops.transfer1));
    inequalities.push(EigenCheck { constraint: level_name(n, n + 2), min_eigenvalue: last.min_eigenvalue() });

    let rank_one = RANK_ONE_EPSILONS
        .iter()
        .map(|&epsilon| RankOneCheck {
            epsilon,
            value: targets.psi_a1.iter().map(|(&i, &v)| v * v / (cert.z[n + 2][i as usize] + epsilon)).sum(),
        })
        .collect();

    let (_, b) = eval_ab(game);
    let step = cert.epsilon_prime / n as f64;
    let mut pi_block_max_deviation: f64 = 0.0;
    let mut pi_block_min_excess = f64::INFINITY;
    for k in (0..n).step_by(2) {
        let lhs = inequality_lhs(&ops, k, &cert.z[k], &cert.z[k + 1]);
        let nodes: Vec<(u64, usize)> = pi_indices(layout, k).collect();
        let node_of = |full: usize| nodes.iter().position(|&(_, a)| a == full / dm);
        for &(x, alice) in &nodes {
            let exact = b.level(k)[x as usize] > 0.0 || cert.z_tree.level(k)[x as usize] == 0.0;
            for m in 0..dm {
                let i = alice * dm + m;
                for &(j, v) in lhs.row(i) {
                    if node_of(j).is_none() {
                        continue;
                    }
                    let target = if i == j { step } else { 0.0 };
                    if exact || i != j {
                        pi_block_max_deviation = pi_block_max_deviation.max((v - target).abs());
                    } else {
                        pi_block_min_excess = pi_block_min_excess.min(v - step);
                    }
                }
                if exact && lhs.get(i, i) == 0.0 {
                    pi_block_max_deviation = pi_block_max_deviation.max(step);
                }
            }
        }
    }
    let min_z = cert.z.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(DualReport {
        inequalities,
        rank_one,
        pi_block_max_deviation,
        pi_block_min_excess,
        min_z,
        bound: cert.bound,
    })
}

/// Fails on the first inequality whose minimum eigenvalue is below `-tol`.
pub fn check_dual_constraints(game: &CoinGame, cert: &DualCertificate, tol: f64) -> Result<DualReport> {
    let report = dual_report(game, cert)?;
    for check in &report.inequalities {
        if !(check.min_eigenvalue >= -tol) {
            return Err(Error::ConstraintViolation {
                constraint: check.constraint.clone(),
                deviation: -check.min_eigenvalue,
                tol,
            });
        }
    }
    for r in &report.rank_one {
        if !(r.value <= 1.0 + tol) {
            return Err(Error::ConstraintViolation {
                constraint: format!("rank-one form at epsilon = {:e}", r.epsilon),
                deviation: r.value - 1.0,
                tol,
            });
        }
    }
    if report.min_z < -tol {
        return Err(Error::ConstraintViolation {
            constraint: "Z operators nonnegative".into(),
            deviation: -report.min_z,
            tol,
        });
    }
    Ok(report)
}
