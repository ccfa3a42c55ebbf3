//! Re-derives the certificate checks with dense nalgebra matrices for small games.

mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use coinflip_core::certify::{
    build_dual, build_primal, dual_report, primal_residuals, AliceSideOperators, SparseMatrix,
};
use coinflip_core::quantum::target_states;
use coinflip_core::CoinGame;

use common::{named_fixtures, nondegenerate_games};

fn small_games() -> Vec<(String, CoinGame)> {
    let mut games: Vec<(String, CoinGame)> = named_fixtures()
        .into_iter()
        .filter(|(_, g)| g.depth() <= 2)
        .map(|(name, g)| (name.to_string(), g))
        .collect();
    games.extend(nondegenerate_games(6, 2, 300).into_iter().map(|(s, g)| (format!("seed {s}"), g)));
    games
}

fn lifted(diag: &[f64], dm: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(diag)).kronecker(&DMatrix::identity(dm, dm))
}

fn min_eig(m: DMatrix<f64>) -> f64 {
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Traces out the `dm` least significant index positions.
fn partial_trace(m: &DMatrix<f64>, dm: usize) -> DMatrix<f64> {
    let d = m.nrows() / dm;
    DMatrix::from_fn(d, d, |i, j| (0..dm).map(|s| m[(i * dm + s, j * dm + s)]).sum())
}

#[test]
fn dual_inequalities_match_dense_eigensolve() {
    for (name, game) in small_games() {
        let n = game.depth();
        let cert = build_dual(&game, 1e-4).unwrap();
        let report = dual_report(&game, &cert).unwrap();
        let ops = AliceSideOperators::new(&game);
        let dm = ops.layout.message_dim();
        let step_op = |k: usize| -> &SparseMatrix {
            if k < n {
                if k % 2 == 0 { &ops.rotations[k] } else { &ops.swaps[k] }
            } else if k == n {
                &ops.record
            } else {
                &ops.transfer0
            }
        };
        for k in 0..=n + 1 {
            let v = step_op(k).to_dense();
            let lhs = lifted(&cert.z[k], dm) - v.transpose() * lifted(&cert.z[k + 1], dm) * &v;
            let dense = min_eig(lhs);
            let sparse = report.inequalities[k].min_eigenvalue;
            assert!((dense - sparse).abs() < 1e-10, "{name} level {k}: dense {dense}, blocks {sparse}");
        }
        let targets = target_states(&game).unwrap();
        let mut psi = DVector::zeros(ops.layout.alice_dim());
        for (&i, &v) in &targets.psi_a1 {
            psi[i as usize] = v;
        }
        let proj = (&psi * psi.transpose()).kronecker(&DMatrix::<f64>::identity(dm, dm));
        let t1 = ops.transfer1.to_dense();
        let last = lifted(&cert.z[n + 2], dm) - t1.transpose() * proj * &t1;
        let dense = min_eig(last);
        let sparse = report.inequalities[n + 2].min_eigenvalue;
        assert!((dense - sparse).abs() < 1e-10, "{name} last level: dense {dense}, blocks {sparse}");
    }
}

#[test]
fn primal_equalities_match_dense_algebra() {
    for (name, game) in small_games() {
        let n = game.depth();
        let s = build_primal(&game).unwrap();
        let report = primal_residuals(&game, &s).unwrap();
        let ops = AliceSideOperators::new(&game);
        let dm = ops.layout.message_dim();
        for k in 1..=n {
            let prev = s.rho[k - 1].to_dense();
            let cur = s.rho[k].to_dense();
            let dev = if k % 2 == 1 {
                let r = ops.rotations[k - 1].to_dense();
                (cur - partial_trace(&(&r * prev * r.transpose()), dm)).amax()
            } else {
                let sw = ops.swaps[k - 1].to_dense();
                (partial_trace(&(sw.transpose() * cur * &sw), dm) - prev).amax()
            };
            let sparse = report.residuals[k].deviation;
            assert!((dev - sparse).abs() < 1e-14, "{name} k = {k}: dense {dev}, sparse {sparse}");
        }
        let min_dense = s
            .rho
            .iter()
            .chain([&s.rho_e, &s.rho_f])
            .map(|m| min_eig(m.to_dense()))
            .fold(f64::INFINITY, f64::min);
        assert!((min_dense - report.min_eigenvalue).abs() < 1e-12, "{name}: PSD check disagrees");
    }
}
