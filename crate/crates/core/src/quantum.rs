//! Sparse state-vector simulation of the quantum protocol built from a coin game.
//!
//! Basis labels pack the registers `(a, a', ac, b, b', bc, m, mn)` into a
//! `u128`, most significant register first. Inside `a` (and `b`, `a'`, ...)
//! qubit 1 is the most significant bit, so the string `x` read left to right
//! is the integer stored in the register.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{eval_h, eval_p, CoinGame, NodeId};

/// Default cap on the game depth accepted by [`honest_run`].
pub const DEFAULT_SIM_MAX_DEPTH: usize = 16;
/// Largest depth whose `5n + 3` qubits still fit in a `u128` label.
pub const MAX_LABEL_DEPTH: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reg {
    A,
    APrime,
    AC,
    B,
    BPrime,
    BC,
    M,
    MN,
}

impl Reg {
    pub const ALL: [Reg; 8] =
        [Reg::A, Reg::APrime, Reg::AC, Reg::B, Reg::BPrime, Reg::BC, Reg::M, Reg::MN];
}

/// Qubit budget of the eight named registers for an `n`-coin game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    n: usize,
}

impl RegisterLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_LABEL_DEPTH {
            return Err(Error::Size { depth: n, limit: MAX_LABEL_DEPTH });
        }
        Ok(RegisterLayout { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_qubits(&self) -> usize {
        5 * self.n + 3
    }

    pub fn width(&self, reg: Reg) -> usize {
        match reg {
            Reg::AC | Reg::BC | Reg::M => 1,
            _ => self.n,
        }
    }

    pub fn shift(&self, reg: Reg) -> usize {
        let n = self.n;
        match reg {
            Reg::MN => 0,
            Reg::M => n,
            Reg::BC => n + 1,
            Reg::BPrime => n + 2,
            Reg::B => 2 * n + 2,
            Reg::AC => 3 * n + 2,
            Reg::APrime => 3 * n + 3,
            Reg::A => 4 * n + 3,
        }
    }

    fn mask(&self, reg: Reg) -> u128 {
        ((1u128 << self.width(reg)) - 1) << self.shift(reg)
    }

    pub fn get(&self, label: u128, reg: Reg) -> u64 {
        ((label & self.mask(reg)) >> self.shift(reg)) as u64
    }

    pub fn set(&self, label: u128, reg: Reg, value: u64) -> u128 {
        (label & !self.mask(reg)) | ((u128::from(value) << self.shift(reg)) & self.mask(reg))
    }

    /// Builds a label from register values; unspecified registers are zero.
    pub fn label(&self, fields: &[(Reg, u64)]) -> u128 {
        fields.iter().fold(0, |acc, &(reg, v)| self.set(acc, reg, v))
    }

    /// Bit `k` (1-based) of an `n`-qubit register value.
    pub fn qubit(&self, value: u64, k: usize) -> u64 {
        (value >> (self.n - k)) & 1
    }

    fn with_qubit(&self, value: u64, k: usize, bit: u64) -> u64 {
        let s = self.n - k;
        (value & !(1 << s)) | ((bit & 1) << s)
    }

    /// The `(a, a', ac)` part of a label as a `(2n+1)`-bit integer.
    pub fn alice_part(&self, label: u128) -> u128 {
        label >> (3 * self.n + 2)
    }

    /// The `(b, b', bc)` part of a label as a `(2n+1)`-bit integer.
    pub fn bob_part(&self, label: u128) -> u128 {
        (label >> (self.n + 1)) & ((1u128 << (2 * self.n + 1)) - 1)
    }

    /// The `(m, mn)` part of a label.
    pub fn message_part(&self, label: u128) -> u128 {
        label & ((1u128 << (self.n + 1)) - 1)
    }

    pub fn format_label(&self, label: u128) -> String {
        format!("{label:0width$b}", width = self.total_qubits())
    }
}

/// Sparse amplitudes keyed by basis label; exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: BTreeMap<u128, Complex64>,
}

impl QuantumState {
    /// All registers in `|0>`.
    pub fn zero(layout: RegisterLayout) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(0, Complex64::new(1.0, 0.0));
        QuantumState { layout, amps }
    }

    pub fn from_amplitudes(
        layout: RegisterLayout,
        terms: impl IntoIterator<Item = (u128, Complex64)>,
    ) -> Self {
        let mut state = QuantumState { layout, amps: BTreeMap::new() };
        for (label, amp) in terms {
            state.add(label, amp);
        }
        state
    }

    fn add(&mut self, label: u128, amp: Complex64) {
        if amp == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.amps.entry(label).or_default();
        *entry += amp;
        if *entry == Complex64::new(0.0, 0.0) {
            self.amps.remove(&label);
        }
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitude(&self, label: u128) -> Complex64 {
        self.amps.get(&label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, Complex64)> + '_ {
        self.amps.iter().map(|(&l, &a)| (l, a))
    }

    pub fn nnz(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `f` to every basis label; `f` must be a bijection.
    fn permute(&self, f: impl Fn(u128) -> u128) -> QuantumState {
        QuantumState::from_amplitudes(self.layout, self.iter().map(|(l, a)| (f(l), a)))
    }

    /// One JSON object per nonzero amplitude: `{"label_bits": ..., "re": ..., "im": ...}`.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            label_bits: &'a str,
            re: f64,
            im: f64,
        }
        for (label, amp) in self.iter() {
            let bits = self.layout.format_label(label);
            serde_json::to_writer(&mut out, &Line { label_bits: &bits, re: amp.re, im: amp.im })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Matrix of the two-qubit rotation on `(a_k, m)`, rows and columns indexed by `2 a_k + m`.
pub fn u_matrix(z: f64) -> Result<[[f64; 4]; 4]> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("rotation parameter {z} outside [0, 1]")));
    }
    let c = z.sqrt();
    let s = (1.0 - z).sqrt();
    Ok([[c, 0.0, 0.0, -s], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [s, 0.0, 0.0, c]])
}

/// One operation of the protocol. `k` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    RotateA(usize),
    RotateB(usize),
    SwapA(usize),
    SwapB(usize),
    RecordA,
    RecordB,
    TransferA0,
    TransferA1,
    TransferB0,
    TransferB1,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::RotateA(k) => write!(f, "R_A,{k}"),
            Step::RotateB(k) => write!(f, "R_B,{k}"),
            Step::SwapA(k) => write!(f, "S_A,{k}"),
            Step::SwapB(k) => write!(f, "S_B,{k}"),
            Step::RecordA => write!(f, "R_A,E"),
            Step::RecordB => write!(f, "R_B,E"),
            Step::TransferA0 => write!(f, "T_A,0"),
            Step::TransferA1 => write!(f, "T_A,1"),
            Step::TransferB0 => write!(f, "T_B,0"),
            Step::TransferB1 => write!(f, "T_B,1"),
        }
    }
}

/// The canonical honest sequence of steps for depth `n`.
pub fn step_sequence(n: usize) -> Vec<Step> {
    let mut steps = Vec::with_capacity(2 * n + 6);
    for k in 1..=n {
        if k % 2 == 1 {
            steps.extend([Step::RotateA(k), Step::SwapB(k)]);
        } else {
            steps.extend([Step::RotateB(k), Step::SwapA(k)]);
        }
    }
    steps.extend([
        Step::RecordA,
        Step::RecordB,
        Step::TransferA0,
        Step::TransferB0,
        Step::TransferB1,
        Step::TransferA1,
    ]);
    steps
}

fn rotate(state: &QuantumState, game: &CoinGame, reg: Reg, k: usize) -> Result<QuantumState> {
    let layout = state.layout;
    let mut out = QuantumState { layout, amps: BTreeMap::new() };
    for (label, amp) in state.iter() {
        let value = layout.get(label, reg);
        let prefix = value >> (layout.n - k + 1);
        let z = game.get(NodeId::new(k - 1, prefix));
        let u = u_matrix(z)?;
        let col = (2 * layout.qubit(value, k) + layout.get(label, Reg::M)) as usize;
        for (row, u_row) in u.iter().enumerate() {
            let coef = u_row[col];
            if coef == 0.0 {
                continue;
            }
            let moved = layout.with_qubit(value, k, (row >> 1) as u64);
            let next = layout.set(layout.set(label, reg, moved), Reg::M, (row & 1) as u64);
            out.add(next, amp * coef);
        }
    }
    Ok(out)
}

fn swap_with_m(state: &QuantumState, reg: Reg, k: usize) -> QuantumState {
    let layout = state.layout;
    state.permute(|label| {
        let value = layout.get(label, reg);
        let m = layout.get(label, Reg::M);
        let swapped = layout.with_qubit(value, k, m);
        layout.set(layout.set(label, reg, swapped), Reg::M, layout.qubit(value, k))
    })
}

fn record(state: &QuantumState, game: &CoinGame, reg: Reg, flag: Reg) -> QuantumState {
    let layout = state.layout;
    let n = layout.n;
    let mut out = QuantumState { layout, amps: BTreeMap::new() };
    for (label, amp) in state.iter() {
        let leaf = game.get(NodeId::new(n, layout.get(label, reg)));
        let c = layout.get(label, flag);
        if leaf == 0.0 {
            out.add(label, amp);
        } else {
            let sign = if c == 0 { 1.0 } else { -1.0 };
            out.add(layout.set(label, flag, 1 - c), amp * sign);
        }
    }
    out
}

fn controlled_swap(state: &QuantumState, control: Reg, when: u64, x: Reg, y: Reg) -> QuantumState {
    let layout = state.layout;
    state.permute(|label| {
        if layout.get(label, control) != when {
            return label;
        }
        let (vx, vy) = (layout.get(label, x), layout.get(label, y));
        layout.set(layout.set(label, x, vy), y, vx)
    })
}

/// Applies a single step, with no ordering checks.
pub fn apply_step(state: &QuantumState, game: &CoinGame, step: Step) -> Result<QuantumState> {
    let n = state.layout.n;
    if game.depth() != n {
        return Err(Error::Depth(format!("game depth {} does not match layout n = {n}", game.depth())));
    }
    let check_k = |k: usize| {
        if k == 0 || k > n {
            Err(Error::Step(format!("{step} needs 1 <= k <= {n}")))
        } else {
            Ok(k)
        }
    };
    Ok(match step {
        Step::RotateA(k) => rotate(state, game, Reg::A, check_k(k)?)?,
        Step::RotateB(k) => rotate(state, game, Reg::B, check_k(k)?)?,
        Step::SwapA(k) => swap_with_m(state, Reg::A, check_k(k)?),
        Step::SwapB(k) => swap_with_m(state, Reg::B, check_k(k)?),
        Step::RecordA => record(state, game, Reg::A, Reg::AC),
        Step::RecordB => record(state, game, Reg::B, Reg::BC),
        Step::TransferA0 => controlled_swap(state, Reg::AC, 0, Reg::A, Reg::MN),
        Step::TransferA1 => controlled_swap(state, Reg::AC, 1, Reg::MN, Reg::APrime),
        Step::TransferB0 => controlled_swap(state, Reg::BC, 0, Reg::BPrime, Reg::MN),
        Step::TransferB1 => controlled_swap(state, Reg::BC, 1, Reg::B, Reg::MN),
    })
}

/// An honest execution that only accepts steps in protocol order.
#[derive(Debug, Clone)]
pub struct ProtocolRun<'g> {
    game: &'g CoinGame,
    state: QuantumState,
    schedule: Vec<Step>,
    next: usize,
}

impl<'g> ProtocolRun<'g> {
    pub fn new(game: &'g CoinGame, max_depth: usize) -> Result<Self> {
        if game.depth() > max_depth.min(MAX_LABEL_DEPTH) {
            return Err(Error::Size { depth: game.depth(), limit: max_depth.min(MAX_LABEL_DEPTH) });
        }
        let layout = RegisterLayout::new(game.depth())?;
        Ok(ProtocolRun {
            game,
            state: QuantumState::zero(layout),
            schedule: step_sequence(game.depth()),
            next: 0,
        })
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn next_step(&self) -> Option<Step> {
        self.schedule.get(self.next).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.next == self.schedule.len()
    }

    /// Applies `step` if it is the next one in the protocol.
    pub fn apply(&mut self, step: Step) -> Result<()> {
        match self.next_step() {
            Some(expected) if expected == step => {
                self.state = apply_step(&self.state, self.game, step)?;
                self.next += 1;
                Ok(())
            }
            expected => Err(Error::StepOrder {
                expected: expected.map_or_else(|| "end of protocol".to_string(), |s| s.to_string()),
                got: step.to_string(),
            }),
        }
    }

    /// Applies the next step and returns it.
    pub fn advance(&mut self) -> Result<Option<Step>> {
        let Some(step) = self.next_step() else { return Ok(None) };
        self.apply(step)?;
        Ok(Some(step))
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.advance()?.is_some() {}
        Ok(())
    }
}

/// The two states the final measurements project onto.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStates {
    /// Over `(a, a', ac)` packed as a `(2n+1)`-bit integer.
    pub psi_a1: BTreeMap<u128, f64>,
    /// Over `(b, b', bc)` packed the same way.
    pub psi_b0: BTreeMap<u128, f64>,
}

pub fn target_states(game: &CoinGame) -> Result<TargetStates> {
    let n = game.depth();
    let h = eval_h(game).root();
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::DegenerateGame { h_root: h });
    }
    let p = eval_p(game);
    let mut psi_a1 = BTreeMap::new();
    let mut psi_b0 = BTreeMap::new();
    for (x, (&g, &px)) in game.leaves().iter().zip(p.leaves()).enumerate() {
        if px == 0.0 {
            continue;
        }
        let x = x as u128;
        let key = (x << (n + 1)) | (x << 1);
        if g == 1.0 {
            psi_a1.insert(key | 1, (px / h).sqrt());
        } else {
            psi_b0.insert(key, (px / (1.0 - h)).sqrt());
        }
    }
    Ok(TargetStates { psi_a1, psi_b0 })
}

/// Joint distribution of the two parties' outputs after the final measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    /// `p[alice][bob]`.
    pub p: [[f64; 2]; 2],
}

/// Measures a final state with the projectors onto `targets`.
pub fn measure(state: &QuantumState, targets: &TargetStates) -> OutcomeDistribution {
    let layout = state.layout;
    let mut alice_proj: BTreeMap<u128, Complex64> = BTreeMap::new();
    let mut bob_proj: BTreeMap<u128, Complex64> = BTreeMap::new();
    let mut joint_proj: BTreeMap<u128, Complex64> = BTreeMap::new();
    for (label, amp) in state.iter() {
        let ca = targets.psi_a1.get(&layout.alice_part(label)).copied().unwrap_or(0.0);
        let cb = targets.psi_b0.get(&layout.bob_part(label)).copied().unwrap_or(0.0);
        let bob_rest = (layout.bob_part(label) << (layout.n + 1)) | layout.message_part(label);
        let alice_rest = (layout.alice_part(label) << (layout.n + 1)) | layout.message_part(label);
        if ca != 0.0 {
            *alice_proj.entry(bob_rest).or_default() += amp * ca;
        }
        if cb != 0.0 {
            *bob_proj.entry(alice_rest).or_default() += amp * cb;
        }
        if ca != 0.0 && cb != 0.0 {
            *joint_proj.entry(layout.message_part(label)).or_default() += amp * (ca * cb);
        }
    }
    let total = state.norm_sqr();
    let sum = |m: &BTreeMap<u128, Complex64>| m.values().map(|a| a.norm_sqr()).sum::<f64>();
    let (pa1, pb0, p10) = (sum(&alice_proj), sum(&bob_proj), sum(&joint_proj));
    OutcomeDistribution {
        p: [[pb0 - p10, total - pa1 - pb0 + p10], [p10, pa1 - p10]],
    }
}

#[derive(Debug, Clone)]
pub struct HonestOutcome {
    pub p_alice_wins: f64,
    pub p_bob_wins: f64,
    /// Probability that the two outputs differ.
    pub disagreement: f64,
    pub agreement: bool,
    pub final_state: QuantumState,
}

/// Runs every step honestly and measures; `max_depth` caps the accepted game depth.
pub fn honest_run_with_limit(game: &CoinGame, max_depth: usize) -> Result<HonestOutcome> {
    let targets = target_states(game)?;
    let mut run = ProtocolRun::new(game, max_depth)?;
    run.run_to_end()?;
    let dist = measure(run.state(), &targets);
    let disagreement = dist.p[0][1] + dist.p[1][0];
    Ok(HonestOutcome {
        p_alice_wins: dist.p[0][0],
        p_bob_wins: dist.p[1][1],
        disagreement,
        agreement: disagreement.abs() < 1e-10,
        final_state: run.state,
    })
}

pub fn honest_run(game: &CoinGame) -> Result<HonestOutcome> {
    honest_run_with_limit(game, DEFAULT_SIM_MAX_DEPTH)
}

/// Monte-Carlo estimate of the honest Bob-win probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalEstimate {
    pub samples: u64,
    pub bob_wins: u64,
    pub mean: f64,
    pub std_error: f64,
}

/// Plays the public-coin game `samples` times, flipping each coin with a seeded RNG.
pub fn classical_play(game: &CoinGame, samples: u64, seed: u64) -> Result<ClassicalEstimate> {
    if samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = game.depth();
    let mut bob_wins = 0u64;
    for _ in 0..samples {
        let mut node = NodeId::ROOT;
        for _ in 0..n {
            let left = rng.random::<f64>() < game.get(node);
            node = node.child(if left { 0 } else { 1 });
        }
        if game.get(node) == 1.0 {
            bob_wins += 1;
        }
    }
    let mean = bob_wins as f64 / samples as f64;
    let std_error = (mean * (1.0 - mean) / samples as f64).sqrt();
    Ok(ClassicalEstimate { samples, bob_wins, mean, std_error })
}

/// Empirical leaf frequencies from the same sampler as [`classical_play`].
pub fn classical_leaf_counts(game: &CoinGame, samples: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = game.depth();
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..samples {
        let mut node = NodeId::ROOT;
        for _ in 0..n {
            let left = rng.random::<f64>() < game.get(node);
            node = node.child(if left { 0 } else { 1 });
        }
        counts[node.path() as usize] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{fair_game, optimal_game};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotation_matrix_is_orthogonal() {
        for z in [0.0, 0.25, 0.5, 1.0] {
            let u = u_matrix(z).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let dot: f64 = (0..4).map(|k| u[i][k] * u[j][k]).sum();
                    assert_abs_diff_eq!(dot, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
                }
            }
        }
        let id = u_matrix(1.0).unwrap();
        for (i, row) in id.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
        let u = u_matrix(0.3).unwrap();
        assert_abs_diff_eq!(u[0][0], 0.3f64.sqrt());
        assert_abs_diff_eq!(u[3][0], 0.7f64.sqrt());
        assert!(u_matrix(-0.1).is_err());
    }

    #[test]
    fn layout_fields_round_trip() {
        let layout = RegisterLayout::new(3).unwrap();
        assert_eq!(layout.total_qubits(), 18);
        let label = layout.label(&[(Reg::A, 0b101), (Reg::AC, 1), (Reg::BPrime, 0b011), (Reg::MN, 0b110)]);
        assert_eq!(layout.get(label, Reg::A), 0b101);
        assert_eq!(layout.get(label, Reg::BPrime), 0b011);
        assert_eq!(layout.get(label, Reg::M), 0);
        assert_eq!(layout.alice_part(label), (0b101 << 4) | 1);
        assert_eq!(layout.format_label(label).len(), 18);
        assert!(RegisterLayout::new(26).is_err());
    }

    #[test]
    fn swaps_are_involutions() {
        let game = optimal_game(2).unwrap();
        let layout = RegisterLayout::new(2).unwrap();
        let mut s = QuantumState::zero(layout);
        s = apply_step(&s, &game, Step::RotateA(1)).unwrap();
        let twice = apply_step(&apply_step(&s, &game, Step::SwapA(1)).unwrap(), &game, Step::SwapA(1)).unwrap();
        assert_eq!(twice, s);
    }

    #[test]
    fn smallest_game_runs_honestly() {
        let out = honest_run(&optimal_game(1).unwrap()).unwrap();
        assert_abs_diff_eq!(out.p_bob_wins, 1.0 / 3.0, epsilon = 1e-12);
        assert!(out.agreement);
        let out = honest_run(&fair_game(4).unwrap()).unwrap();
        assert_abs_diff_eq!(out.p_bob_wins, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn strict_order_is_enforced() {
        let game = optimal_game(2).unwrap();
        let mut run = ProtocolRun::new(&game, 16).unwrap();
        let err = run.apply(Step::RotateB(1)).unwrap_err();
        assert!(matches!(err, Error::StepOrder { .. }));
        run.run_to_end().unwrap();
        assert!(run.apply(Step::TransferA1).is_err());
        assert!(matches!(ProtocolRun::new(&optimal_game(20).unwrap(), 16), Err(Error::Size { .. })));
    }

    #[test]
    fn targets_of_smallest_game() {
        let t = target_states(&optimal_game(1).unwrap()).unwrap();
        assert_eq!(t.psi_a1.len(), 1);
        assert_abs_diff_eq!(t.psi_a1[&0b001], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn classical_absorbing_game() {
        let ones = CoinGame::new(2, vec![0.3, 0.2, 0.9, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(classical_play(&ones, 1000, 1).unwrap().mean, 1.0);
    }

    #[test]
    fn state_dump_lines() {
        let game = optimal_game(1).unwrap();
        let layout = RegisterLayout::new(1).unwrap();
        let s = apply_step(&QuantumState::zero(layout), &game, Step::RotateA(1)).unwrap();
        let mut buf = Vec::new();
        s.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"label_bits\":\"00000000\""));
    }
}
