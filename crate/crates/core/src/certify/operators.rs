//! Alice's unitaries as sparse matrices on `H_A (x) H_M`.
//!
//! Index bits, most significant first: `a` (n), `a'` (n), `ac`, `m`, `mn` (n).
//! The low `n + 1` bits are the message space, so `H_A` indices are the
//! full index shifted right by `n + 1`.

use crate::quantum::u_matrix;
use crate::tree::{CoinGame, NodeId};

use super::sparse::SparseMatrix;

/// Bit positions of Alice's and the message registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliceLayout {
    pub n: usize,
}

impl AliceLayout {
    pub fn message_dim(&self) -> usize {
        1 << (self.n + 1)
    }

    pub fn alice_dim(&self) -> usize {
        1 << (2 * self.n + 1)
    }

    pub fn full_dim(&self) -> usize {
        self.alice_dim() * self.message_dim()
    }

    /// Packs `(a, a', ac)` into an `H_A` index.
    pub fn alice_index(&self, a: u64, a_prime: u64, ac: u64) -> usize {
        ((a << (self.n + 1)) | (a_prime << 1) | ac) as usize
    }

    /// Unpacks an `H_A` index into `(a, a', ac)`.
    pub fn alice_fields(&self, idx: usize) -> (u64, u64, u64) {
        let idx = idx as u64;
        let mask = (1u64 << self.n) - 1;
        (idx >> (self.n + 1), (idx >> 1) & mask, idx & 1)
    }

    pub fn full_index(&self, alice: usize, m: u64, mn: u64) -> usize {
        (alice << (self.n + 1)) | ((m << self.n) | mn) as usize
    }

    /// Unpacks a full index into `(alice, m, mn)`.
    pub fn full_fields(&self, idx: usize) -> (usize, u64, u64) {
        let mn = (idx as u64) & ((1 << self.n) - 1);
        let m = ((idx >> self.n) & 1) as u64;
        (idx >> (self.n + 1), m, mn)
    }

    /// Qubit `k` (1-based, from the most significant end) of an `n`-bit value.
    pub fn qubit(&self, value: u64, k: usize) -> u64 {
        (value >> (self.n - k)) & 1
    }

    pub fn with_qubit(&self, value: u64, k: usize, bit: u64) -> u64 {
        let s = self.n - k;
        (value & !(1 << s)) | (bit << s)
    }
}

/// Every unitary Alice applies, in the order of the protocol.
#[derive(Debug, Clone)]
pub struct AliceSideOperators {
    pub layout: AliceLayout,
    /// `R_{A,k}` at index `k - 1`.
    pub rotations: Vec<SparseMatrix>,
    /// `S_{A,k}` at index `k - 1`.
    pub swaps: Vec<SparseMatrix>,
    /// `R_{A,E}` on `H_A` alone.
    pub record_alice: SparseMatrix,
    /// `R_{A,E} (x) I_M`.
    pub record: SparseMatrix,
    pub transfer0: SparseMatrix,
    pub transfer1: SparseMatrix,
}

impl AliceSideOperators {
    pub fn new(game: &CoinGame) -> Self {
        let n = game.depth();
        let layout = AliceLayout { n };
        let dim = layout.full_dim();
        let rotations = (1..=n)
            .map(|k| {
                SparseMatrix::from_columns(dim, |j| {
                    let (alice, m, mn) = layout.full_fields(j);
                    let (a, ap, ac) = layout.alice_fields(alice);
                    let prefix = a >> (n - k + 1);
                    let u = u_matrix(game.get(NodeId::new(k - 1, prefix))).expect("coin in [0, 1]");
                    let col = (2 * layout.qubit(a, k) + m) as usize;
                    (0..4)
                        .filter(|&r| u[r][col] != 0.0)
                        .map(|r| {
                            let a2 = layout.with_qubit(a, k, (r >> 1) as u64);
                            let idx = layout.full_index(layout.alice_index(a2, ap, ac), (r & 1) as u64, mn);
                            (idx, u[r][col])
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let swaps = (1..=n)
            .map(|k| {
                SparseMatrix::from_columns(dim, |j| {
                    let (alice, m, mn) = layout.full_fields(j);
                    let (a, ap, ac) = layout.alice_fields(alice);
                    let a2 = layout.with_qubit(a, k, m);
                    let idx = layout.full_index(layout.alice_index(a2, ap, ac), layout.qubit(a, k), mn);
                    [(idx, 1.0)]
                })
            })
            .collect();
        let record_alice = SparseMatrix::from_columns(layout.alice_dim(), |j| {
            let (a, ap, ac) = layout.alice_fields(j);
            let g = game.get(NodeId::new(n, a));
            if g == 0.0 {
                vec![(j, 1.0)]
            } else {
                let sign = if ac == 0 { 1.0 } else { -1.0 };
                vec![(layout.alice_index(a, ap, 1 - ac), sign)]
            }
        });
        let record = record_alice.kron_identity(layout.message_dim());
        let transfer0 = SparseMatrix::from_columns(dim, |j| {
            let (alice, m, mn) = layout.full_fields(j);
            let (a, ap, ac) = layout.alice_fields(alice);
            let idx = if ac == 0 { layout.full_index(layout.alice_index(mn, ap, ac), m, a) } else { j };
            [(idx, 1.0)]
        });
        let transfer1 = SparseMatrix::from_columns(dim, |j| {
            let (alice, m, mn) = layout.full_fields(j);
            let (a, ap, ac) = layout.alice_fields(alice);
            let idx = if ac == 1 { layout.full_index(layout.alice_index(a, mn, ac), m, ap) } else { j };
            [(idx, 1.0)]
        });
        AliceSideOperators { layout, rotations, swaps, record_alice, record, transfer0, transfer1 }
    }

    /// Named list of all operators, for unitarity checks.
    pub fn all(&self) -> Vec<(String, &SparseMatrix)> {
        let mut out = Vec::new();
        for (k, r) in self.rotations.iter().enumerate() {
            out.push((format!("R_A,{}", k + 1), r));
        }
        for (k, s) in self.swaps.iter().enumerate() {
            out.push((format!("S_A,{}", k + 1), s));
        }
        out.push(("R_A,E".into(), &self.record));
        out.push(("T_A,0".into(), &self.transfer0));
        out.push(("T_A,1".into(), &self.transfer1));
        out
    }
}

/// `max |U^T U - I|` entrywise.
pub fn unitarity_defect(u: &SparseMatrix) -> f64 {
    u.transpose().mul(u).max_abs_diff(&SparseMatrix::identity(u.dim()))
}
