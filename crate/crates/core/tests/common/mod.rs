#![allow(dead_code)]

use std::path::PathBuf;

use coinflip_core::{eval_h, random_game, CoinGame};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> CoinGame {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    CoinGame::from_json(&text).expect("fixture is a valid game")
}

/// Every named game fixture with its file name.
pub fn named_fixtures() -> Vec<(&'static str, CoinGame)> {
    ["g1.json", "g2.json", "g3.json", "fair2.json", "fair4.json", "lambda2_point.json"]
        .into_iter()
        .map(|name| (name, fixture(name)))
        .collect()
}

/// The first `count` random games with `0 < H_r < 1`, depths cycling through `1..=max_depth`.
pub fn nondegenerate_games(count: usize, max_depth: usize, seed_base: u64) -> Vec<(u64, CoinGame)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = seed_base;
    while out.len() < count {
        let depth = 1 + (seed as usize % max_depth);
        let game = random_game(depth, seed).unwrap();
        let h = eval_h(&game).root();
        if h > 0.0 && h < 1.0 {
            out.push((seed, game));
        }
        seed += 1;
    }
    out
}

/// Direct top-down recursion over `(depth, path)`, kept separate from the library's level folds.
pub struct Oracle<'a> {
    n: usize,
    values: &'a [f64],
}

impl<'a> Oracle<'a> {
    pub fn new(game: &'a CoinGame) -> Self {
        Oracle { n: game.depth(), values: game.values() }
    }

    fn at(&self, depth: usize, path: u64) -> f64 {
        self.values[(1usize << depth) - 1 + path as usize]
    }

    pub fn h(&self, depth: usize, path: u64) -> f64 {
        let g = self.at(depth, path);
        if depth == self.n {
            return g;
        }
        g * self.h(depth + 1, 2 * path) + (1.0 - g) * self.h(depth + 1, 2 * path + 1)
    }

    /// `A` value; the leaf is `1 - G`, and even depths average squares.
    pub fn a(&self, depth: usize, path: u64) -> f64 {
        let g = self.at(depth, path);
        if depth == self.n {
            return 1.0 - g;
        }
        let (l, r) = (self.a(depth + 1, 2 * path), self.a(depth + 1, 2 * path + 1));
        if depth % 2 == 0 {
            g * l.powi(2) + (1.0 - g) * r.powi(2)
        } else {
            g * l.sqrt() + (1.0 - g) * r.sqrt()
        }
    }

    pub fn b(&self, depth: usize, path: u64) -> f64 {
        let g = self.at(depth, path);
        if depth == self.n {
            return g;
        }
        let (l, r) = (self.b(depth + 1, 2 * path), self.b(depth + 1, 2 * path + 1));
        if depth % 2 == 0 {
            g * l.sqrt() + (1.0 - g) * r.sqrt()
        } else {
            g * l.powi(2) + (1.0 - g) * r.powi(2)
        }
    }

    /// Product of the coin choices along the path to `(depth, path)`.
    pub fn p(&self, depth: usize, path: u64) -> f64 {
        (0..depth)
            .map(|d| {
                let parent = path >> (depth - d);
                let bit = (path >> (depth - d - 1)) & 1;
                let g = self.at(d, parent);
                if bit == 0 { g } else { 1.0 - g }
            })
            .product()
    }

    /// `B_r^2 / H_r`.
    pub fn pb_star(&self) -> f64 {
        self.b(0, 0).powi(2) / self.h(0, 0)
    }

    /// `A_r / (1 - H_r)`.
    pub fn pa_star(&self) -> f64 {
        self.a(0, 0) / (1.0 - self.h(0, 0))
    }
}
