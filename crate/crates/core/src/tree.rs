//! Binary coin-game trees and the per-node recursions defined on them.
//!
//! Trees are stored flat in level order: the root at index 0, then the two
//! depth-1 nodes, and so on. Level `k` is therefore the contiguous slice
//! `[2^k - 1, 2^(k+1) - 1)` and node `x` at depth `k` sits at offset `x`
//! (read as a binary number) inside it.
//!
//! Alice moves at even depths and Bob at odd depths. At a leaf, `1` means Bob
//! wins and `0` means Alice wins.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationReport, Violation};

/// Largest depth accepted when building trees (level-order arrays grow as `2^(n+1)`).
pub const MAX_TREE_DEPTH: usize = 24;

/// A node of a fixed-depth binary tree, labelled by its path from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    depth: u32,
    path: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { depth: 0, path: 0 };

    /// `path` holds the branch bits, most significant bit first.
    pub fn new(depth: usize, path: u64) -> Self {
        debug_assert!(depth < 64 && (depth == 0 || path >> depth == 0));
        NodeId { depth: depth as u32, path }
    }

    pub fn depth(self) -> usize {
        self.depth as usize
    }

    pub fn path(self) -> u64 {
        self.path
    }

    pub fn child(self, bit: u8) -> NodeId {
        NodeId { depth: self.depth + 1, path: (self.path << 1) | u64::from(bit & 1) }
    }

    pub fn parent(self) -> Option<NodeId> {
        (self.depth > 0).then(|| NodeId { depth: self.depth - 1, path: self.path >> 1 })
    }

    /// Position in level-order storage.
    pub fn index(self) -> usize {
        (1usize << self.depth) - 1 + self.path as usize
    }

    pub fn from_index(index: usize) -> NodeId {
        let depth = usize::BITS - 1 - (index + 1).leading_zeros();
        let path = (index + 1 - (1usize << depth)) as u64;
        NodeId { depth, path }
    }

    /// Bit `i` of the path (0-based from the root side).
    pub fn bit(self, i: usize) -> u8 {
        ((self.path >> (self.depth as usize - 1 - i)) & 1) as u8
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.depth == 0 {
            return write!(f, "r");
        }
        write!(f, "{:0width$b}", self.path, width = self.depth as usize)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "r" || s.is_empty() {
            return Ok(NodeId::ROOT);
        }
        if s.len() > 63 || !s.bytes().all(|c| c == b'0' || c == b'1') {
            return Err(Error::Domain(format!("\"{s}\" is not a node label")));
        }
        let path = u64::from_str_radix(s, 2).expect("checked binary digits");
        Ok(NodeId::new(s.len(), path))
    }
}

fn node_count(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

fn level_range(k: usize) -> std::ops::Range<usize> {
    ((1usize << k) - 1)..((1usize << (k + 1)) - 1)
}

/// A real value attached to every node of a depth-`n` tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeAssignment {
    depth: usize,
    values: Vec<f64>,
}

impl TreeAssignment {
    pub fn new(depth: usize, values: Vec<f64>) -> Result<Self> {
        if depth > MAX_TREE_DEPTH {
            return Err(Error::Depth(format!("depth {depth} exceeds {MAX_TREE_DEPTH}")));
        }
        let expected = node_count(depth);
        if values.len() != expected {
            return Err(Error::Validation(ValidationReport {
                violations: vec![Violation::Shape { expected, found: values.len() }],
            }));
        }
        Ok(TreeAssignment { depth, values })
    }

    pub fn filled(depth: usize, value: f64) -> Self {
        assert!(depth <= MAX_TREE_DEPTH, "depth {depth} exceeds {MAX_TREE_DEPTH}");
        TreeAssignment { depth, values: vec![value; node_count(depth)] }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn root(&self) -> f64 {
        self.values[0]
    }

    /// Values at depth `k`, ordered left to right.
    pub fn level(&self, k: usize) -> &[f64] {
        &self.values[level_range(k)]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[level_range(k)]
    }

    pub fn leaves(&self) -> &[f64] {
        self.level(self.depth)
    }

    /// Mutable views of levels `k` and `k + 1`.
    fn level_pair_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let start = (1usize << k) - 1;
        let mid = (1usize << (k + 1)) - 1;
        let end = (1usize << (k + 2)) - 1;
        let (head, tail) = self.values[start..end].split_at_mut(mid - start);
        (head, tail)
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.values[node.index()]
    }
}

impl Index<NodeId> for TreeAssignment {
    type Output = f64;

    fn index(&self, node: NodeId) -> &f64 {
        &self.values[node.index()]
    }
}

impl IndexMut<NodeId> for TreeAssignment {
    fn index_mut(&mut self, node: NodeId) -> &mut f64 {
        &mut self.values[node.index()]
    }
}

/// Checks the shape, interior-range and binary-leaf conditions and reports every violation.
pub fn validate(depth: usize, values: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if depth == 0 || depth > MAX_TREE_DEPTH {
        report.violations.push(Violation::Shape {
            expected: if depth == 0 { node_count(1) } else { node_count(MAX_TREE_DEPTH) },
            found: values.len(),
        });
        return report;
    }
    let expected = node_count(depth);
    if values.len() != expected {
        report.violations.push(Violation::Shape { expected, found: values.len() });
        return report;
    }
    let leaf_start = (1usize << depth) - 1;
    for (i, &v) in values.iter().enumerate() {
        let node = NodeId::from_index(i);
        if i < leaf_start {
            if !(0.0..=1.0).contains(&v) {
                report.violations.push(Violation::Range { node, value: v });
            }
        } else if v != 0.0 && v != 1.0 {
            report.violations.push(Violation::Leaf { node, value: v });
        }
    }
    report
}

/// An `n`-coin game: interior coin biases in `[0, 1]`, leaf winners in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinGame {
    tree: TreeAssignment,
}

impl CoinGame {
    pub fn new(depth: usize, values: Vec<f64>) -> Result<Self> {
        let report = validate(depth, &values);
        if !report.is_valid() {
            return Err(Error::Validation(report));
        }
        Ok(CoinGame { tree: TreeAssignment { depth, values } })
    }

    pub fn from_tree(tree: TreeAssignment) -> Result<Self> {
        CoinGame::new(tree.depth, tree.values)
    }

    pub fn depth(&self) -> usize {
        self.tree.depth
    }

    pub fn tree(&self) -> &TreeAssignment {
        &self.tree
    }

    pub fn values(&self) -> &[f64] {
        self.tree.values()
    }

    pub fn root(&self) -> f64 {
        self.tree.root()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        self.tree.level(k)
    }

    pub fn leaves(&self) -> &[f64] {
        self.tree.leaves()
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.tree.get(node)
    }

    /// Same game with the root coin replaced.
    pub fn with_root(&self, root: f64) -> Result<Self> {
        let mut values = self.tree.values.clone();
        values[0] = root;
        CoinGame::new(self.depth(), values)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        CoinGame::new(file.depth, file.nodes)
    }

    /// Canonical JSON encoding; identical games give identical bytes.
    pub fn to_json(&self) -> String {
        let file = GameFileRef { depth: self.depth(), nodes: self.values() };
        serde_json::to_string(&file).expect("plain numeric struct serializes")
    }
}

/// On-disk layout: `{"depth": n, "nodes": [v_r, v_0, v_1, v_00, ...]}`.
#[derive(Debug, Clone, Deserialize)]
pub struct GameFile {
    pub depth: usize,
    pub nodes: Vec<f64>,
}

#[derive(Serialize)]
struct GameFileRef<'a> {
    depth: usize,
    nodes: &'a [f64],
}

impl Serialize for CoinGame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GameFileRef { depth: self.depth(), nodes: self.values() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoinGame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = GameFile::deserialize(d)?;
        CoinGame::new(file.depth, file.nodes).map_err(serde::de::Error::custom)
    }
}

/// Backward pass: `leaf(g)` seeds the leaves, `combine(depth, g, left, right)` fills interiors.
fn fold_up(
    game: &CoinGame,
    leaf: impl Fn(f64) -> f64,
    combine: impl Fn(usize, f64, f64, f64) -> f64,
) -> TreeAssignment {
    let n = game.depth();
    let mut out = TreeAssignment::filled(n, 0.0);
    for (dst, &g) in out.level_mut(n).iter_mut().zip(game.leaves()) {
        *dst = leaf(g);
    }
    for k in (0..n).rev() {
        let coins = game.level(k);
        let (upper, lower) = out.level_pair_mut(k);
        for (p, dst) in upper.iter_mut().enumerate() {
            *dst = combine(k, coins[p], lower[2 * p], lower[2 * p + 1]);
        }
    }
    out
}

/// Honest Bob-win probability conditioned on reaching each node.
pub fn eval_h(game: &CoinGame) -> TreeAssignment {
    fold_up(game, |g| g, |_, g, l, r| g * l + (1.0 - g) * r)
}

/// The cheating-value trees `(A, B)`: `A_r = P_A P_A*` and `B_r^2 = P_B P_B*`.
pub fn eval_ab(game: &CoinGame) -> (TreeAssignment, TreeAssignment) {
    let squares = |g: f64, l: f64, r: f64| g * l * l + (1.0 - g) * r * r;
    let roots = |g: f64, l: f64, r: f64| g * l.sqrt() + (1.0 - g) * r.sqrt();
    let a = fold_up(
        game,
        |g| 1.0 - g,
        |k, g, l, r| if k % 2 == 0 { squares(g, l, r) } else { roots(g, l, r) },
    );
    let b = fold_up(
        game,
        |g| g,
        |k, g, l, r| if k % 2 == 0 { roots(g, l, r) } else { squares(g, l, r) },
    );
    (a, b)
}

/// Probability of reaching each node under honest play.
pub fn eval_p(game: &CoinGame) -> TreeAssignment {
    let n = game.depth();
    let mut p = TreeAssignment::filled(n, 0.0);
    p.values[0] = 1.0;
    for k in 0..n {
        let coins = game.level(k);
        let (upper, lower) = p.level_pair_mut(k);
        for (y, &py) in upper.iter().enumerate() {
            lower[2 * y] = coins[y] * py;
            lower[2 * y + 1] = (1.0 - coins[y]) * py;
        }
    }
    p
}

/// How the weight tree treats an odd-depth node `y` with `B_y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroBranch {
    /// Both children get weight zero.
    #[default]
    ZeroChildren,
    /// Children split `W_y` with the honest coin, so `W_y0 + W_y1 = W_y` still holds.
    HonestSplit,
}

/// Bob's primal cheating weights, with the zero-children convention.
pub fn eval_w(game: &CoinGame, b: &TreeAssignment) -> TreeAssignment {
    eval_w_with(game, b, ZeroBranch::ZeroChildren)
}

pub fn eval_w_with(game: &CoinGame, b: &TreeAssignment, zero: ZeroBranch) -> TreeAssignment {
    let n = game.depth();
    let mut w = TreeAssignment::filled(n, 0.0);
    w.values[0] = 1.0;
    for k in 0..n {
        let coins = game.level(k);
        let b_parent = b.level(k);
        let b_child = b.level(k + 1);
        let (upper, lower) = w.level_pair_mut(k);
        for (y, &wy) in upper.iter().enumerate() {
            let g = coins[y];
            let (w0, w1) = if (k + 1) % 2 == 1 {
                (g * wy, (1.0 - g) * wy)
            } else if b_parent[y] == 0.0 {
                match zero {
                    ZeroBranch::ZeroChildren => (0.0, 0.0),
                    ZeroBranch::HonestSplit => (g * wy, (1.0 - g) * wy),
                }
            } else {
                let scale = wy / b_parent[y];
                (
                    g * b_child[2 * y].powi(2) * scale,
                    (1.0 - g) * b_child[2 * y + 1].powi(2) * scale,
                )
            };
            lower[2 * y] = w0;
            lower[2 * y + 1] = w1;
        }
    }
    w
}

/// The dual tree whose root `B_r^2 / H_r` is the certified bound on `P_B*`.
pub fn eval_z(_game: &CoinGame, b: &TreeAssignment, h_root: f64) -> Result<TreeAssignment> {
    if !(h_root > 0.0 && h_root < 1.0) {
        return Err(Error::DegenerateGame { h_root });
    }
    let n = b.depth();
    let mut z = TreeAssignment::filled(n, 0.0);
    z.values[0] = b.root().powi(2) / h_root;
    for k in 0..n {
        let b_parent = b.level(k);
        let b_child = b.level(k + 1);
        let (upper, lower) = z.level_pair_mut(k);
        for (y, &zy) in upper.iter().enumerate() {
            let (z0, z1) = if (k + 1) % 2 == 0 {
                (zy, zy)
            } else if b_parent[y] == 0.0 {
                (0.0, 0.0)
            } else {
                (
                    b_child[2 * y].sqrt() * zy / b_parent[y],
                    b_child[2 * y + 1].sqrt() * zy / b_parent[y],
                )
            };
            lower[2 * y] = z0;
            lower[2 * y + 1] = z1;
        }
    }
    Ok(z)
}

/// `sum_{|x|=k} B_x^e sqrt(W_x P_x)` with `e = 1` at even `k` and `1/2` at odd `k`; equals `B_r`.
pub fn conserved_primal_sum(
    b: &TreeAssignment,
    w: &TreeAssignment,
    p: &TreeAssignment,
    k: usize,
) -> f64 {
    let exponent = if k % 2 == 0 { 1.0 } else { 0.5 };
    b.level(k)
        .iter()
        .zip(w.level(k))
        .zip(p.level(k))
        .map(|((&bx, &wx), &px)| bx.powf(exponent) * (wx * px).sqrt())
        .sum()
}

/// `sum_{|x|=k, Z_x>0} B_x^(2e) P_x / (H_r Z_x)`; equals one for nondegenerate games.
pub fn conserved_dual_sum(
    b: &TreeAssignment,
    p: &TreeAssignment,
    z: &TreeAssignment,
    h_root: f64,
    k: usize,
) -> f64 {
    let exponent = if k % 2 == 0 { 2.0 } else { 1.0 };
    b.level(k)
        .iter()
        .zip(p.level(k))
        .zip(z.level(k))
        .filter(|(_, &zx)| zx > 0.0)
        .map(|((&bx, &px), &zx)| bx.powf(exponent) * px / (h_root * zx))
        .sum()
}

/// The H, A, B and P trees of one game, computed together.
#[derive(Debug, Clone)]
pub struct GameTrees {
    pub h: TreeAssignment,
    pub a: TreeAssignment,
    pub b: TreeAssignment,
    pub p: TreeAssignment,
}

impl GameTrees {
    pub fn new(game: &CoinGame) -> Self {
        let (a, b) = eval_ab(game);
        GameTrees { h: eval_h(game), a, b, p: eval_p(game) }
    }
}

/// Honest win probabilities and cheating bounds of the protocol built from a game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    pub pa: f64,
    pub pa_star: f64,
    pub pb_star: f64,
    pub a_root: f64,
    pub b_root: f64,
    pub h_root: f64,
}

impl ProtocolPoint {
    pub fn from_roots(a_root: f64, b_root: f64, h_root: f64) -> Result<Self> {
        if !(h_root > 0.0 && h_root < 1.0) {
            return Err(Error::DegenerateGame { h_root });
        }
        Ok(ProtocolPoint {
            pa: 1.0 - h_root,
            pa_star: a_root / (1.0 - h_root),
            pb_star: b_root * b_root / h_root,
            a_root,
            b_root,
            h_root,
        })
    }

    pub fn pb(&self) -> f64 {
        1.0 - self.pa
    }

    pub fn bias(&self) -> f64 {
        self.pa_star.max(self.pb_star) - 0.5
    }
}

pub fn protocol_point(game: &CoinGame) -> Result<ProtocolPoint> {
    let (a, b) = eval_ab(game);
    let h = eval_h(game);
    ProtocolPoint::from_roots(a.root(), b.root(), h.root())
}

/// Splits a game into its top coin and two subgames of depth `n - 1` whose
/// leaves are flipped, so that the subgames' A and B trees swap roles.
pub fn decompose(game: &CoinGame) -> Result<(f64, CoinGame, CoinGame)> {
    let n = game.depth();
    if n < 2 {
        return Err(Error::Depth(format!("decompose needs depth >= 2, got {n}")));
    }
    let sub = |i: usize| {
        let mut values = Vec::with_capacity(node_count(n - 1));
        for d in 0..n {
            let width = 1usize << d;
            let level = &game.level(d + 1)[i * width..(i + 1) * width];
            if d == n - 1 {
                values.extend(level.iter().map(|&g| 1.0 - g));
            } else {
                values.extend_from_slice(level);
            }
        }
        CoinGame::new(n - 1, values)
    };
    Ok((game.root(), sub(0)?, sub(1)?))
}

/// Inverse of [`decompose`].
pub fn compose(gamma: f64, left: &CoinGame, right: &CoinGame) -> Result<CoinGame> {
    if left.depth() != right.depth() {
        return Err(Error::Depth(format!(
            "subgame depths differ: {} vs {}",
            left.depth(),
            right.depth()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("top coin {gamma} outside [0, 1]")));
    }
    let m = left.depth();
    let mut values = Vec::with_capacity(node_count(m + 1));
    values.push(gamma);
    for d in 0..=m {
        for sub in [left, right] {
            if d == m {
                values.extend(sub.level(d).iter().map(|&g| 1.0 - g));
            } else {
                values.extend_from_slice(sub.level(d));
            }
        }
    }
    CoinGame::new(m + 1, values)
}

/// Prepends a contentless first message so Bob effectively moves first.
///
/// The result has depth `n + 1`, satisfies `B'_r^2 = A_r` and `H'_r = 1 - H_r`,
/// and its Bob-cheating bound equals the original Alice-cheating bound.
pub fn reverse_roles(game: &CoinGame) -> CoinGame {
    let n = game.depth();
    let mut values = Vec::with_capacity(node_count(n + 1));
    values.push(1.0);
    for d in 0..=n {
        for _ in 0..2 {
            if d == n {
                values.extend(game.level(d).iter().map(|&g| 1.0 - g));
            } else {
                values.extend_from_slice(game.level(d));
            }
        }
    }
    CoinGame::new(n + 1, values).expect("flipping leaves of a valid game stays valid")
}

/// Interior coins uniform on `[0, 1)`, leaves fair Bernoulli; deterministic in `seed`.
pub fn random_game(depth: usize, seed: u64) -> Result<CoinGame> {
    if depth == 0 || depth > MAX_TREE_DEPTH {
        return Err(Error::Depth(format!("random_game depth must be in 1..={MAX_TREE_DEPTH}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = (1usize << depth) - 1;
    let mut values: Vec<f64> = (0..interior).map(|_| rng.random::<f64>()).collect();
    values.extend((0..=interior).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }));
    CoinGame::new(depth, values)
}
