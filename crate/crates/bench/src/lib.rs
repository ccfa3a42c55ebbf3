//! Shared workloads for the benchmark targets.

use coinflip_core::{eval_h, random_game, CoinGame};

/// Deterministic random games of one depth, skipping those with `H_r` in `{0, 1}`.
pub fn workload(depth: usize, count: usize) -> Vec<CoinGame> {
    (0u64..)
        .map(|seed| random_game(depth, seed).expect("depth within limits"))
        .filter(|g| {
            let h = eval_h(g).root();
            h > 0.0 && h < 1.0
        })
        .take(count)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_is_deterministic() {
        let a = workload(3, 4);
        let b = workload(3, 4);
        assert_eq!(a.len(), 4);
        assert!(a.iter().zip(&b).all(|(x, y)| x.values() == y.values()));
    }
}
