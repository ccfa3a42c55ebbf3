//! Coin games stored as DAGs with identical subtrees shared.
//!
//! A uniform-depth game with many repeated subtrees (the optimal family has
//! only `O(n)` distinct ones) can be evaluated at depths far beyond what an
//! explicit `2^(n+1) - 1` array allows. Sharing is only between subtrees of
//! the same height, so every node has a well-defined depth `n - height`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::{CoinGame, NodeId, ProtocolPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SharedNode {
    Leaf(bool),
    Coin { g: f64, left: usize, right: usize },
}

/// Hash-consed game; nodes are stored children first.
#[derive(Debug, Clone, Default)]
pub struct SharedGame {
    nodes: Vec<SharedNode>,
    heights: Vec<usize>,
    index: HashMap<(u64, usize, usize), usize>,
    leaves: [Option<usize>; 2],
}

/// Root values of the `H`, `A` and `B` recursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedRoots {
    pub a_root: f64,
    pub b_root: f64,
    pub h_root: f64,
}

impl SharedGame {
    pub fn new() -> Self {
        SharedGame::default()
    }

    pub fn leaf(&mut self, bob_wins: bool) -> usize {
        if let Some(id) = self.leaves[bob_wins as usize] {
            return id;
        }
        let id = self.push(SharedNode::Leaf(bob_wins), 0);
        self.leaves[bob_wins as usize] = Some(id);
        id
    }

    /// Interior node with coin `g` (probability of the left child).
    pub fn coin(&mut self, g: f64, left: usize, right: usize) -> Result<usize> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Domain(format!("coin value {g} outside [0, 1]")));
        }
        let (hl, hr) = (self.height(left), self.height(right));
        if hl != hr {
            return Err(Error::Depth(format!("children have heights {hl} and {hr}")));
        }
        if let Some(&id) = self.index.get(&(g.to_bits(), left, right)) {
            return Ok(id);
        }
        let id = self.push(SharedNode::Coin { g, left, right }, hl + 1);
        self.index.insert((g.to_bits(), left, right), id);
        Ok(id)
    }

    fn push(&mut self, node: SharedNode, height: usize) -> usize {
        self.nodes.push(node);
        self.heights.push(height);
        self.nodes.len() - 1
    }

    pub fn height(&self, id: usize) -> usize {
        self.heights[id]
    }

    pub fn node(&self, id: usize) -> SharedNode {
        self.nodes[id]
    }

    /// Number of distinct subtrees.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Shares every repeated subtree of an explicit game; returns the builder and the root id.
    pub fn from_game(game: &CoinGame) -> (SharedGame, usize) {
        let n = game.depth();
        let mut shared = SharedGame::new();
        let mut below: Vec<usize> = game.leaves().iter().map(|&v| shared.leaf(v == 1.0)).collect();
        for k in (0..n).rev() {
            below = (0..1usize << k)
                .map(|p| {
                    let g = game.get(NodeId::new(k, p as u64));
                    shared.coin(g, below[2 * p], below[2 * p + 1]).expect("valid game")
                })
                .collect();
        }
        (shared, below[0])
    }

    /// Runs the `H`, `A` and `B` recursions on the subtree rooted at `root`, taking `root` as depth 0.
    pub fn roots(&self, root: usize) -> SharedRoots {
        let n = self.height(root);
        let mut h = vec![0.0; root + 1];
        let mut a = vec![0.0; root + 1];
        let mut b = vec![0.0; root + 1];
        for id in 0..=root {
            match self.nodes[id] {
                SharedNode::Leaf(win) => {
                    let g = if win { 1.0 } else { 0.0 };
                    h[id] = g;
                    a[id] = 1.0 - g;
                    b[id] = g;
                }
                SharedNode::Coin { g, left, right } => {
                    let Some(depth) = n.checked_sub(self.heights[id]) else { continue };
                    let sq = |t: &[f64]| g * t[left] * t[left] + (1.0 - g) * t[right] * t[right];
                    let rt = |t: &[f64]| g * t[left].sqrt() + (1.0 - g) * t[right].sqrt();
                    h[id] = g * h[left] + (1.0 - g) * h[right];
                    if depth % 2 == 0 {
                        a[id] = sq(&a);
                        b[id] = rt(&b);
                    } else {
                        a[id] = rt(&a);
                        b[id] = sq(&b);
                    }
                }
            }
        }
        SharedRoots { a_root: a[root], b_root: b[root], h_root: h[root] }
    }

    pub fn protocol_point(&self, root: usize) -> Result<ProtocolPoint> {
        let r = self.roots(root);
        ProtocolPoint::from_roots(r.a_root, r.b_root, r.h_root)
    }
}
