//! The optimal game family `G^(n)`, its fair and `t`-parametrized variants,
//! and the message schedule of the implementable protocol.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::shared::SharedGame;
use crate::tree::{eval_ab, eval_h, CoinGame, ProtocolPoint, MAX_TREE_DEPTH};

/// Top coin of `G^(n)`: `n / (n + 2)`.
pub fn gamma(n: usize) -> f64 {
    n as f64 / (n as f64 + 2.0)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TREE_DEPTH {
        return Err(Error::Domain(format!("n must be in 1..={MAX_TREE_DEPTH}, got {n}")));
    }
    Ok(())
}

fn check_even(n: usize) -> Result<()> {
    if n % 2 == 1 {
        return Err(Error::Parity { n });
    }
    check_n(n)
}

/// Leaf winners of `G^(n)`: the left half is the flipped pattern of `G^(n-1)`, the right half is 0.
fn optimal_leaves(n: usize) -> Vec<f64> {
    let mut leaves = vec![1.0, 0.0];
    for m in 2..=n {
        let half = 1usize << (m - 1);
        let mut next: Vec<f64> = leaves.iter().map(|&g| 1.0 - g).collect();
        next.resize(2 * half, 0.0);
        leaves = next;
    }
    leaves
}

/// Interior of `G^(n)` (depth `d` carries `gamma(n - d)`) with the given leaves.
fn with_optimal_interior(n: usize, leaves: Vec<f64>) -> Result<CoinGame> {
    let mut values = Vec::with_capacity((1usize << (n + 1)) - 1);
    for d in 0..n {
        values.extend(std::iter::repeat_n(gamma(n - d), 1usize << d));
    }
    values.extend(leaves);
    CoinGame::new(n, values)
}

pub fn optimal_game(n: usize) -> Result<CoinGame> {
    check_n(n)?;
    with_optimal_interior(n, optimal_leaves(n))
}

/// Largest `n` accepted by [`optimal_shared`].
pub const MAX_SHARED_DEPTH: usize = 4096;

/// `G^(n)` as a shared DAG with `O(n)` distinct subtrees; returns the builder and the root id.
///
/// Subtrees of height `m` carry `gamma(m)` at their root, so the left spine
/// alternates between the pattern and its flip while the right children are
/// constant all-0 or all-1 subtrees.
pub fn optimal_shared(n: usize) -> Result<(SharedGame, usize)> {
    if n == 0 || n > MAX_SHARED_DEPTH {
        return Err(Error::Domain(format!("n must be in 1..={MAX_SHARED_DEPTH}, got {n}")));
    }
    let mut s = SharedGame::new();
    let (mut zeros, mut ones) = (s.leaf(false), s.leaf(true));
    let (mut pattern, mut flipped) = (zeros, ones);
    for m in 1..=n {
        let g = gamma(m);
        let next_pattern = s.coin(g, flipped, zeros)?;
        let next_flipped = s.coin(g, pattern, ones)?;
        zeros = s.coin(g, zeros, zeros)?;
        ones = s.coin(g, ones, ones)?;
        pattern = next_pattern;
        flipped = next_flipped;
    }
    Ok((s, pattern))
}

/// A depth-`n` game whose leaves are all 1, so `(A_r, B_r) = (0, 1)`.
pub(crate) fn all_ones_game(n: usize) -> Result<CoinGame> {
    check_n(n)?;
    with_optimal_interior(n, vec![1.0; 1usize << n])
}

/// Closed-form root values of `G^(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalFamilyPoint {
    pub n: usize,
    pub gamma: f64,
    pub a_root: f64,
    pub b_root: f64,
    pub h_root: f64,
    pub pa: f64,
    pub pa_star: f64,
    pub pb_star: f64,
}

impl OptimalFamilyPoint {
    pub fn closed_form(n: usize) -> Result<Self> {
        check_n(n)?;
        let nf = n as f64;
        let a_root = (nf + 3.0) / (3.0 * (nf + 1.0));
        let b_root = (nf / (3.0 * (nf + 2.0))).sqrt();
        let h_root = if n % 2 == 0 {
            nf / (2.0 * (nf + 1.0))
        } else {
            (nf + 1.0) / (2.0 * (nf + 2.0))
        };
        Ok(OptimalFamilyPoint {
            n,
            gamma: gamma(n),
            a_root,
            b_root,
            h_root,
            pa: 1.0 - h_root,
            pa_star: a_root / (1.0 - h_root),
            pb_star: b_root * b_root / h_root,
        })
    }

    pub fn bias(&self) -> f64 {
        self.pa_star.max(self.pb_star) - 0.5
    }
}

/// `G^(n)` with the top coin retuned so that `H_r = 1/2`.
pub fn fair_game(n: usize) -> Result<CoinGame> {
    check_even(n)?;
    if n < 2 {
        return Err(Error::Domain("fair_game needs n >= 2".into()));
    }
    let h_prev = eval_h(&optimal_game(n - 1)?).root();
    optimal_game(n)?.with_root(1.0 / (2.0 - 2.0 * h_prev))
}

/// `G^(n)` with top coin `t`.
pub fn t_family_game(n: usize, t: f64) -> Result<CoinGame> {
    check_t(t)?;
    check_even(n)?;
    optimal_game(n)?.with_root(t)
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// A `t`-family point; `n` is `None` for the large-`n` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TFamilyPoint {
    pub n: Option<usize>,
    pub t: f64,
    pub pa: f64,
    pub pa_star: f64,
    pub pb_star: f64,
}

impl TFamilyPoint {
    pub fn bias(&self) -> f64 {
        self.pa_star.max(self.pb_star) - 0.5
    }

    /// Left side of the limiting trade-off curve; equals 1 for limit points.
    pub fn tradeoff(&self) -> f64 {
        self.pa_star + self.pb_star - 0.75 * self.pa_star * self.pb_star
    }
}

pub fn t_family_limit(t: f64) -> Result<TFamilyPoint> {
    check_t(t)?;
    Ok(TFamilyPoint {
        n: None,
        t,
        pa: 1.0 - t / 2.0,
        pa_star: (2.0 / 3.0) * (3.0 - 2.0 * t) / (2.0 - t),
        pb_star: 2.0 * t / 3.0,
    })
}

/// Evaluated point of the finite game `t_family_game(n, t)`.
pub fn t_family_point(n: usize, t: f64) -> Result<TFamilyPoint> {
    let pt = crate::tree::protocol_point(&t_family_game(n, t)?)?;
    Ok(TFamilyPoint { n: Some(n), t, pa: pt.pa, pa_star: pt.pa_star, pb_star: pt.pb_star })
}

/// Rotation coefficients `a_1..a_n` for the fair protocol with `n` messages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageSchedule {
    pub n: usize,
    pub coefficients: Vec<f64>,
}

impl MessageSchedule {
    /// `a_i`, 1-indexed.
    pub fn a(&self, i: usize) -> f64 {
        self.coefficients[i - 1]
    }
}

pub fn message_schedule(n: usize) -> Result<MessageSchedule> {
    check_even(n)?;
    let nf = n as f64;
    let coefficients = (1..=n)
        .map(|i| if i == 1 { (nf + 1.0) / (nf + 2.0) } else { gamma(n - i + 1) })
        .collect();
    Ok(MessageSchedule { n, coefficients })
}

/// Whether the leftmost 1 of the `n`-bit string `x` sits at an even position (1-indexed).
pub fn is_povm_win(n: usize, x: u64) -> bool {
    if x == 0 {
        return false;
    }
    let first_one = n - (63 - x.leading_zeros() as usize);
    first_one % 2 == 0
}

/// Sorted `n`-bit strings (as integers, most significant bit first) where Bob wins.
pub fn povm_win_set(n: usize) -> Result<Vec<u64>> {
    check_n(n)?;
    Ok((0..1u64 << n).filter(|&x| is_povm_win(n, x)).collect())
}

pub fn format_bits(n: usize, x: u64) -> String {
    format!("{x:0n$b}")
}

/// CSV rows of the evaluated optimal family for `n = 1..=n_max`.
pub fn family_table(n_max: usize) -> Result<String> {
    let mut out = String::from("n,gamma,a_root,b_root,h_root,pa,pa_star,pb_star,bias\n");
    for n in 1..=n_max {
        let game = optimal_game(n)?;
        let (a, b) = eval_ab(&game);
        let pt = ProtocolPoint::from_roots(a.root(), b.root(), eval_h(&game).root())?;
        writeln!(
            out,
            "{n},{},{},{},{},{},{},{},{}",
            gamma(n),
            pt.a_root,
            pt.b_root,
            pt.h_root,
            pt.pa,
            pt.pa_star,
            pt.pb_star,
            pt.bias()
        )
        .expect("writing to a String");
    }
    Ok(out)
}
