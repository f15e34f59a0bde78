use moran_core::discrete::{KernelVariant, ScaledGame};
use moran_core::expansion::{
    drift_limit, expand_kernel, expand_kernel_variant, first_order_sum_limit, interior_grid, DEFAULT_POPULATIONS,
};
use moran_core::MoranError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_games(count: usize) -> Vec<ScaledGame<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..count)
        .map(|_| {
            let p: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..10.0));
            ScaledGame::new(p[0], p[1], p[2], p[3], 1.0).unwrap()
        })
        .collect()
}

#[test]
fn drift_matches_closed_form_within_estimate() {
    let grid = interior_grid::<f64>(9);
    for game in random_games(10) {
        let e = expand_kernel(&game, &grid, &DEFAULT_POPULATIONS).unwrap();
        assert!(e.residual < 1e-3, "misfit {}", e.residual);
        for (k, &x) in grid.iter().enumerate() {
            let exact = drift_limit(&game, x);
            let err = (e.drift[k] - exact).abs();
            assert!(err <= 2.0 * e.error_estimate + 1e-9, "x = {x}: {err} vs estimate {}", e.error_estimate);
            let err = (e.first_order_sum[k] - first_order_sum_limit(&game, x)).abs();
            assert!(err < 1e-3, "first order sum at x = {x}: {err}");
        }
    }
}

#[test]
fn limits_do_not_depend_on_the_update_order() {
    let grid = interior_grid::<f64>(5);
    for game in random_games(4) {
        let death = expand_kernel_variant(&game, &grid, &DEFAULT_POPULATIONS, KernelVariant::DeathFirst).unwrap();
        let birth = expand_kernel_variant(&game, &grid, &DEFAULT_POPULATIONS, KernelVariant::BirthFirst).unwrap();
        for k in 0..grid.len() {
            assert!((death.drift[k] - birth.drift[k]).abs() < 1e-3);
            for i in 0..3 {
                assert!((death.cplus[i][k] - birth.cplus[i][k]).abs() < 1e-3);
                assert!((death.cminus[i][k] - birth.cminus[i][k]).abs() < 1e-3);
            }
        }
    }
}

#[test]
fn neutral_order_sums() {
    let grid = interior_grid::<f64>(7);
    let game = ScaledGame::from_drift(0.0, 0.0);
    let e = expand_kernel(&game, &grid, &DEFAULT_POPULATIONS).unwrap();
    for (k, &x) in grid.iter().enumerate() {
        let s0 = e.order_sum(0)[k];
        assert!((s0 - 1.0).abs() < 1e-12);
        assert!(e.order_sum(1)[k].abs() < 1e-9);
        assert!((e.order_sum(2)[k] + 4.0).abs() < 1e-5, "{}", e.order_sum(2)[k]);
        // c+^(0) = c-^(0) = x(1-x)
        assert!((e.cplus[0][k] - x * (1.0 - x)).abs() < 1e-6, "{x} {} {}", e.cplus[0][k], e.cminus[0][k]);
        assert!((e.cminus[0][k] - x * (1.0 - x)).abs() < 1e-6);
        assert!(e.drift[k].abs() < 1e-9);
    }
}

#[test]
fn near_duplicate_populations_are_ill_conditioned() {
    let game = ScaledGame::from_drift(3.0, -1.0);
    let err = expand_kernel(&game, &[0.3], &[1000, 1001, 1002, 1003]).unwrap_err();
    assert!(matches!(err, MoranError::IllConditioned(_)));
}

#[test]
fn weak_selection_exponent() {
    // nu = 1/2: the selection-scaled drift still converges to the closed form
    let game = ScaledGame::new(2.0f64, 5.0, 1.0, 1.0, 0.5).unwrap();
    let grid = [0.25, 0.5, 0.75];
    let e = expand_kernel(&game, &grid, &[256, 512, 1024, 2048, 4096]).unwrap();
    for (k, &x) in grid.iter().enumerate() {
        assert!((e.drift[k] - drift_limit(&game, x)).abs() < 1e-2, "x = {x}: {}", e.drift[k]);
    }
}
