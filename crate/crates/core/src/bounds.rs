//! Lower-boundary curves of the achievable `(A_r, B_r)` region and games that attain them.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimal::{all_ones_game, optimal_game};
use crate::tree::{compose, CoinGame, MAX_TREE_DEPTH};

/// Default number of samples when emitting a curve.
pub const DEFAULT_GRID: usize = 1024;

/// Knee of `f_n`: the curved part ends at `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl BoundaryParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("curve index n must be >= 1".into()));
        }
        let nf = n as f64;
        Ok(BoundaryParams {
            n,
            alpha: (nf - 1.0) / (3.0 * (nf + 1.0)),
            beta: ((nf + 2.0) / (3.0 * nf)).sqrt(),
        })
    }
}

/// A pair `(A_r, B_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub a: f64,
    pub b: f64,
}

fn check_unit(name: &str, z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("{name} = {z} outside [0, 1]")));
    }
    Ok(())
}

pub fn f(n: usize, z: f64) -> Result<f64> {
    check_unit("z", z)?;
    let BoundaryParams { alpha, beta, .. } = BoundaryParams::new(n)?;
    if n == 1 {
        return Ok(1.0 - z);
    }
    Ok(if z <= alpha {
        (1.0 - (1.0 - beta * beta) / alpha.sqrt() * z.sqrt()).max(0.0).sqrt()
    } else {
        beta / (1.0 - alpha) * (1.0 - z)
    })
}

/// `f_n` reflected through `(x, y) -> (y^2, sqrt(x))`.
pub fn g(n: usize, w: f64) -> Result<f64> {
    check_unit("w", w)?;
    let BoundaryParams { alpha, beta, .. } = BoundaryParams::new(n)?;
    if n == 1 {
        return Ok((1.0 - w.sqrt()).sqrt());
    }
    Ok(if w <= beta * beta {
        (1.0 - (1.0 - alpha) / beta * w.sqrt()).max(0.0).sqrt()
    } else {
        alpha.sqrt() / (1.0 - beta * beta) * (1.0 - w)
    })
}

/// Pointwise limit of `f_n` as `n` grows.
pub fn f_infinity(z: f64) -> Result<f64> {
    check_unit("z", z)?;
    Ok(if z <= 1.0 / 3.0 {
        (1.0 - 2.0 / 3f64.sqrt() * z.sqrt()).max(0.0).sqrt()
    } else {
        3f64.sqrt() / 2.0 * (1.0 - z)
    })
}

/// Whether `point` lies on or above `f_n`, up to `tol`.
pub fn is_feasible(n: usize, point: BoundaryPoint, tol: f64) -> bool {
    match f(n, point.a) {
        Ok(fa) => (0.0..=1.0).contains(&point.b) && point.b >= fa - tol,
        Err(_) => false,
    }
}

/// A depth-`n` game whose `(A_r, B_r)` equals `(z, f_n(z))`.
pub fn game_for_boundary_point(n: usize, z: f64) -> Result<CoinGame> {
    check_unit("z", z)?;
    if n == 0 || n > MAX_TREE_DEPTH {
        return Err(Error::Domain(format!("n must be in 1..={MAX_TREE_DEPTH}, got {n}")));
    }
    if n == 1 {
        return CoinGame::new(1, vec![1.0 - z, 1.0, 0.0]);
    }
    let params = BoundaryParams::new(n)?;
    let right = all_ones_game(n - 1)?;
    if z >= params.alpha {
        // Mix the knee game (subgame point (beta^2, sqrt(alpha))) with the (0, 1) game.
        let gamma = ((1.0 - z) / (1.0 - params.alpha)).clamp(0.0, 1.0);
        compose(gamma, &optimal_game(n - 1)?, &right)
    } else {
        // Pull back through the level map onto the straight part of f_{n-1}.
        let prev = BoundaryParams::new(n - 1)?;
        let scale = if n - 1 == 1 { 1.0 } else { (1.0 - prev.alpha) / prev.beta };
        let x = (1.0 - z.sqrt() * scale).clamp(0.0, 1.0);
        compose(1.0, &game_for_boundary_point(n - 1, x)?, &right)
    }
}

/// Which lower boundary to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Finite(usize),
    Infinity,
}

impl Curve {
    pub fn eval(self, z: f64) -> Result<f64> {
        match self {
            Curve::Finite(n) => f(n, z),
            Curve::Infinity => f_infinity(z),
        }
    }

    /// The knee `(alpha, beta)`; for `f_1` this is the degenerate `(0, 1)`.
    pub fn knee(self) -> Result<(f64, f64)> {
        match self {
            Curve::Finite(n) => {
                let p = BoundaryParams::new(n)?;
                Ok((p.alpha, p.beta))
            }
            Curve::Infinity => Ok((1.0 / 3.0, (1.0f64 / 3.0).sqrt())),
        }
    }

    fn label(self) -> String {
        match self {
            Curve::Finite(n) => n.to_string(),
            Curve::Infinity => "inf".into(),
        }
    }
}

/// `grid` equally spaced samples `(z, f(z))` including both endpoints.
pub fn sample_curve(curve: Curve, grid: usize) -> Result<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(Error::Domain(format!("grid must be >= 2, got {grid}")));
    }
    (0..grid)
        .map(|i| {
            let z = i as f64 / (grid - 1) as f64;
            Ok((z, curve.eval(z)?))
        })
        .collect()
}

pub fn curve_csv(curve: Curve, grid: usize) -> Result<String> {
    let points = sample_curve(curve, grid)?;
    let (alpha, beta) = curve.knee()?;
    let mut out = format!("# n={} alpha={alpha} beta={beta}\nz,f\n", curve.label());
    for (z, v) in points {
        writeln!(out, "{z},{v}").expect("writing to a String");
    }
    Ok(out)
}

pub fn curve_svg(curve: Curve, grid: usize) -> Result<String> {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let points = sample_curve(curve, grid)?;
    let (alpha, beta) = curve.knee()?;
    let to_px = |z: f64, v: f64| (PAD + z * SIZE, PAD + (1.0 - v) * SIZE);
    let mut out = String::new();
    let side = SIZE + 2.0 * PAD;
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">"
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"#888\"/>"
    )
    .unwrap();
    let path: Vec<String> = points
        .iter()
        .map(|&(z, v)| {
            let (x, y) = to_px(z, v);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>",
        path.join(" ")
    )
    .unwrap();
    let (kx, ky) = to_px(alpha, beta);
    writeln!(out, "<circle cx=\"{kx:.3}\" cy=\"{ky:.3}\" r=\"4\" fill=\"#d62728\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">knee ({alpha:.4}, {beta:.4})</text>",
        kx + 6.0,
        ky - 6.0
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"{PAD}\" y=\"{:.3}\" font-size=\"12\">f_{} : A_r (x) vs B_r (y)</text>",
        PAD - 12.0,
        curve.label()
    )
    .unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}
