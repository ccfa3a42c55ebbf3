//! The high/low sequences of the 0.192-bias family and their continuum limit.
//!
//! `H` and `L` are the two distinct values of the `A` tree at each depth.
//! Integrating `dH/dL = -(H + L) / (2H)` from `(0, 1)` to the diagonal gives
//! the convergence point `L_0`, and `2 L_0^2` is the common cheating probability.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 2.0;
pub const DEFAULT_C0: f64 = 20.0;
pub const DEFAULT_N: usize = 100_000;
pub const DEFAULT_STEP: f64 = 1e-3;
/// The integration stops once `H - L` falls below this.
pub const STOP_TOL: f64 = 1e-10;
/// Upper bound on the schedule length (the trajectories are stored in full).
pub const MAX_SCHEDULE_LEN: usize = 10_000_000;
pub const MAX_STEP: f64 = 0.1;
pub const MIN_STEP: f64 = 1e-7;

/// Mixing coefficients `a_1..a_n`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    coefficients: Vec<f64>,
}

impl Schedule {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Schedule("the schedule needs at least one coefficient".into()));
        }
        if coefficients.len() > MAX_SCHEDULE_LEN {
            return Err(Error::Schedule(format!(
                "schedule length {} exceeds {MAX_SCHEDULE_LEN}",
                coefficients.len()
            )));
        }
        if let Some((i, a)) = coefficients.iter().enumerate().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Schedule(format!("a_{} = {a} lies outside [0, 1]", i + 1)));
        }
        Ok(Schedule { coefficients })
    }

    /// `a_k = c / (k + c0)` for `k = 1..=n`.
    pub fn harmonic(n: usize, c: f64, c0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schedule("n must be at least 1".into()));
        }
        if !(c.is_finite() && c0.is_finite() && c0 > -1.0) {
            return Err(Error::Schedule(format!("c = {c}, c0 = {c0}: need finite values with c0 > -1")));
        }
        if n > MAX_SCHEDULE_LEN {
            return Err(Error::Schedule(format!("schedule length {n} exceeds {MAX_SCHEDULE_LEN}")));
        }
        Schedule::new((1..=n).map(|k| c / (k as f64 + c0)).collect())
    }

    pub fn constant(n: usize, a: f64) -> Result<Self> {
        Schedule::new(vec![a; n])
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `a_k`, 1-based.
    pub fn a(&self, k: usize) -> f64 {
        self.coefficients[k - 1]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// `H_k`, `L_k` for `k = 0..=n`, indexed by `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HLSequence {
    pub n: usize,
    pub h: Vec<f64>,
    pub l: Vec<f64>,
}

impl HLSequence {
    /// `H_0^2`, the root value of the `A` tree.
    pub fn a_root(&self) -> f64 {
        self.h[0] * self.h[0]
    }

    /// `2 H_0^2`, the cheating probability when the honest split is even.
    pub fn p_star(&self) -> f64 {
        2.0 * self.a_root()
    }

    pub fn bias(&self) -> f64 {
        self.p_star() - 0.5
    }

    /// `k,H,L` rows from `k = n` down to `0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,H,L\n");
        for k in (0..=self.n).rev() {
            let _ = writeln!(out, "{k},{},{}", self.h[k], self.l[k]);
        }
        out
    }
}

/// Runs the discrete recursion from `H_n = 1, L_n = 0` down to `k = 0`.
pub fn discrete_hl(schedule: &Schedule) -> HLSequence {
    let n = schedule.len();
    let mut h = vec![0.0; n + 1];
    let mut l = vec![0.0; n + 1];
    h[n] = 1.0;
    for k in (0..n).rev() {
        let a = schedule.a(k + 1);
        let (hn, ln) = (h[k + 1], l[k + 1]);
        if k % 2 == 0 {
            h[k] = (a * ln * ln + (1.0 - a) * hn * hn).sqrt();
            l[k] = ln;
        } else {
            h[k] = hn;
            l[k] = a * hn + (1.0 - a) * ln;
        }
    }
    HLSequence { n, h, l }
}

/// Samples `(L, H)` of the continuum limit and its convergence point.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub step: f64,
    pub samples: Vec<(f64, f64)>,
    /// Convergence point at the requested step.
    pub l0_raw: f64,
    /// Richardson combination of the runs at `step` and `step / 2`.
    pub l0: f64,
}

impl OdeTrajectory {
    pub fn p_star(&self) -> f64 {
        2.0 * self.l0 * self.l0
    }

    pub fn bias(&self) -> f64 {
        self.p_star() - 0.5
    }

    /// Largest `|invariant|` over the stored samples.
    pub fn max_invariant_drift(&self) -> f64 {
        self.samples.iter().map(|&(l, h)| implicit_invariant(l, h).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,H\n");
        for &(l, h) in &self.samples {
            let _ = writeln!(out, "{l},{h}");
        }
        out
    }
}

fn slope(l: f64, h: f64) -> f64 {
    -(h + l) / (2.0 * h)
}

fn rk4(l: f64, h: f64, s: f64) -> f64 {
    let k1 = slope(l, h);
    let k2 = slope(l + s / 2.0, h + s / 2.0 * k1);
    let k3 = slope(l + s / 2.0, h + s / 2.0 * k2);
    let k4 = slope(l + s, h + s * k3);
    h + s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates with a fixed step; the last step is shortened by bisection so it lands on `H = L`.
fn integrate(step: f64) -> Vec<(f64, f64)> {
    let mut samples = vec![(0.0, 1.0)];
    let (mut l, mut h) = (0.0, 1.0);
    loop {
        let next = rk4(l, h, step);
        if next - (l + step) > STOP_TOL {
            l += step;
            h = next;
            samples.push((l, h));
            continue;
        }
        let gap = |s: f64| rk4(l, h, s) - (l + s);
        let (mut lo, mut hi) = (0.0, step);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        let s = 0.5 * (lo + hi);
        samples.push((l + s, rk4(l, h, s)));
        return samples;
    }
}

/// Integrates the continuum limit with RK4 in `L` at the given step.
pub fn ode_convergence(step: f64) -> Result<OdeTrajectory> {
    if !(step > 0.0) {
        return Err(Error::Step(format!("step {step} must be positive")));
    }
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::Step(format!("step {step} outside [{MIN_STEP:e}, {MAX_STEP}]")));
    }
    let samples = integrate(step);
    let l0_raw = samples.last().expect("at least the start point").0;
    let l0_half = integrate(step / 2.0).last().expect("at least the start point").0;
    let l0 = l0_half + (l0_half - l0_raw) / 15.0;
    Ok(OdeTrajectory { step, samples, l0_raw, l0 })
}

/// `log(H^2 + LH/2 + L^2/2) + (2/sqrt 7) atan(sqrt 7 L / (4H + L))`, zero on the solution through `(0, 1)`.
pub fn implicit_invariant(l: f64, h: f64) -> f64 {
    let r7 = 7f64.sqrt();
    (h * h + 0.5 * l * h + 0.5 * l * l).ln() + 2.0 / r7 * (r7 * l / (4.0 * h + l)).atan()
}

/// `exp(-(2/sqrt 7) atan(sqrt 7 / 5))`.
pub fn closed_form_constant() -> f64 {
    let r7 = 7f64.sqrt();
    (-2.0 / r7 * (r7 / 5.0).atan()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_schedule() {
        let seq = discrete_hl(&Schedule::constant(10, 0.0).unwrap());
        assert_eq!((seq.h[0], seq.l[0]), (1.0, 0.0));
    }

    #[test]
    fn schedule_rejects_out_of_range() {
        assert!(matches!(Schedule::new(vec![0.5, 1.2]), Err(Error::Schedule(_))));
        assert!(matches!(Schedule::new(vec![]), Err(Error::Schedule(_))));
        assert!(matches!(Schedule::harmonic(10, 5.0, 1.0), Err(Error::Schedule(_))));
    }

    #[test]
    fn short_sequence_by_hand() {
        // a_1 = a_2 = 1/2: L_1 = 1/2, then H_0 = sqrt(1/8 + 1/2).
        let seq = discrete_hl(&Schedule::constant(2, 0.5).unwrap());
        assert_eq!(seq.l[1], 0.5);
        assert!((seq.h[0] - (0.625f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ode_hits_the_constant() {
        let t = ode_convergence(DEFAULT_STEP).unwrap();
        assert!((t.p_star() - closed_form_constant()).abs() < 1e-9);
        let (l, h) = *t.samples.last().unwrap();
        assert!((h - l).abs() < STOP_TOL);
        assert!(t.max_invariant_drift() < 1e-10);
    }

    #[test]
    fn bad_steps() {
        assert!(matches!(ode_convergence(0.0), Err(Error::Step(_))));
        assert!(matches!(ode_convergence(-1.0), Err(Error::Step(_))));
        assert!(matches!(ode_convergence(f64::NAN), Err(Error::Step(_))));
    }
}
