use moran_core::forward::InitialDensity;
use moran_core::hyperbolic::{
    density_from_lagrangian, flow, lagrangian_density, lyapunov_moment, solve_nodiffusion, Asymptote,
    HyperbolicSolution, ReplicatorFlow, Transported, UpwindSolver,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain fixed-step RK4 on `x' = x(1-x)(beta + (alpha-beta)x)`.
fn rk4(x0: f64, t: f64, alpha: f64, beta: f64) -> f64 {
    let f = |x: f64| x * (1.0 - x) * (beta + (alpha - beta) * x);
    let steps = 20_000;
    let h = t / steps as f64;
    let mut x = x0;
    for _ in 0..steps {
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

fn bump() -> InitialDensity<f64> {
    InitialDensity::from_fn(|x: f64| 30.0 * x * x * (1.0 - x) * (1.0 - x)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_a_group(
        x0 in 0.01..0.99f64,
        s in -1.0..1.0f64,
        t in -1.0..1.0f64,
        alpha in -5.0..5.0f64,
        beta in -5.0..5.0f64,
    ) {
        let phi = ReplicatorFlow::new(alpha, beta);
        let composed = phi.flow(phi.flow(x0, s), t);
        prop_assert!((composed - phi.flow(x0, s + t)).abs() < 1e-9);
        prop_assert!((phi.flow(phi.flow(x0, t), -t) - x0).abs() < 1e-9);
    }

    #[test]
    fn flow_fixes_rest_points_and_preserves_order(
        x in 0.0..1.0f64,
        gap in 1e-6..0.5f64,
        t in -3.0..3.0f64,
        alpha in -10.0..10.0f64,
        beta in -10.0..10.0f64,
    ) {
        let phi = ReplicatorFlow::new(alpha, beta);
        prop_assert_eq!(phi.flow(0.0, t), 0.0);
        prop_assert_eq!(phi.flow(1.0, t), 1.0);
        if let Some(s) = phi.x_star() {
            prop_assert!((phi.flow(s, t) - s).abs() < 1e-14);
        }
        let y = (x + gap).min(1.0);
        if y > x {
            prop_assert!(phi.flow(x, t) <= phi.flow(y, t));
        }
    }

    #[test]
    fn flow_matches_runge_kutta(
        x0 in 0.0..1.0f64,
        t in -2.0..2.0f64,
        alpha in -8.0..8.0f64,
        beta in -8.0..8.0f64,
    ) {
        let exact = rk4(x0, t, alpha, beta);
        prop_assert!((flow(x0, t, alpha, beta).unwrap() - exact).abs() < 1e-9);
    }
}

#[test]
fn logistic_case_has_closed_form() {
    let r = 3.0;
    for &x0 in &[1e-6, 0.2, 0.5, 0.9] {
        for &t in &[-2.0, -0.5, 0.7, 4.0] {
            let e = (r * t as f64).exp();
            let exact = x0 * e / (1.0 - x0 + x0 * e);
            let got = flow(x0, t, r, r).unwrap();
            assert!((got - exact).abs() <= 1e-9, "{x0} {t}: {got} vs {exact}");
        }
    }
    assert!(flow(1.5, 1.0, r, r).is_err());
}

#[test]
fn lagrangian_density_is_constant_along_trajectories() {
    let (alpha, beta) = (-6.0, 4.0);
    let sol = HyperbolicSolution::new(bump(), alpha, beta);
    let phi = ReplicatorFlow::new(alpha, beta);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let x0: f64 = rng.gen_range(0.05..0.95);
        let t: f64 = rng.gen_range(0.0..2.0);
        let xt = phi.flow(x0, t);
        let u0 = lagrangian_density(&[sol.density_at(x0, 0.0)], &[x0], alpha, beta)[0];
        let ut = lagrangian_density(&[sol.density_at(xt, t)], &[xt], alpha, beta)[0];
        assert!((ut - u0).abs() <= 1e-8, "x0 = {x0}, t = {t}: {ut} vs {u0}");
    }
}

#[test]
fn lagrangian_round_trip() {
    let (alpha, beta) = (2.0, -3.0);
    let grid: Vec<f64> = (1..50).map(|k| k as f64 / 50.0).collect();
    let q: Vec<f64> = grid.iter().map(|x| 1.0 + x * x).collect();
    let u = lagrangian_density(&q, &grid, alpha, beta);
    let back = density_from_lagrangian(&u, &grid, alpha, beta);
    // x* = 3/5 is a grid point, where u carries no information
    for ((x, a), b) in grid.iter().zip(&q).zip(&back) {
        if (x - 0.6).abs() < 1e-12 {
            assert!(b.is_nan());
        } else {
            assert!((a - b).abs() < 1e-12, "{x}");
        }
    }
}

#[test]
fn lagrangian_inversion_recovers_the_snapshot() {
    let (alpha, beta) = (-6.0, 4.0);
    let sol = HyperbolicSolution::new(bump(), alpha, beta);
    let grid: Vec<f64> = (1..200).map(|k| (k as f64 - 0.3) / 200.0).collect();
    let snap = solve_nodiffusion(&sol, 0.8, &grid);
    let u = lagrangian_density(&snap.p, &grid, alpha, beta);
    let back = density_from_lagrangian(&u, &grid, alpha, beta);
    for (a, b) in snap.p.iter().zip(&back) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    assert_eq!(lagrangian_density(&[0.0; 3], &[0.2, 0.5, 0.7], alpha, beta), vec![0.0; 3]);
}

#[test]
fn sharp_peak_follows_the_flow() {
    let (alpha, beta) = (-3.0, 5.0);
    let x0 = 0.2;
    let init = InitialDensity::from_fn(move |x: f64| (-((x - x0) / 0.01).powi(2)).exp()).unwrap();
    let sol = HyperbolicSolution::new(init, alpha, beta);
    let cells = 1000;
    let grid: Vec<f64> = (0..cells).map(|k| (k as f64 + 0.5) / cells as f64).collect();
    for t in [0.1, 0.3, 0.6] {
        let peak = solve_nodiffusion(&sol, t, &grid).peak();
        let expected = flow(x0, t, alpha, beta).unwrap();
        assert!((peak - expected).abs() <= 1.0 / cells as f64, "t = {t}: {peak} vs {expected}");
    }
}

#[test]
fn cell_averages_conserve_mass() {
    let sol = HyperbolicSolution::new(bump(), -10.0, 10.0);
    for t in [0.0, 0.3, 2.0] {
        let q = sol.cell_averages(t, 200).unwrap();
        let mass: f64 = q.iter().sum::<f64>() / 200.0;
        assert!((mass - 1.0).abs() < 1e-10, "t = {t}: {mass}");
    }
}

#[test]
fn upwind_converges_at_first_order() {
    let (alpha, beta) = (-4.0, 3.0);
    let sol = HyperbolicSolution::new(bump(), alpha, beta);
    let t = 0.5;
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&cells| {
            let solver = UpwindSolver::new(alpha, beta, cells);
            let mut q = sol.cell_averages(0.0, cells).unwrap();
            solver.advance(&mut q, t, 0.9);
            let exact = sol.cell_averages(t, cells).unwrap();
            q.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() / cells as f64
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 1.6, "{errors:?}");
    }
}

#[test]
fn peak_approaches_stable_equilibrium() {
    let (alpha, beta) = (-9.0, 3.0);
    let sol = HyperbolicSolution::new(bump(), alpha, beta);
    let grid: Vec<f64> = (1..1000).map(|k| k as f64 / 1000.0).collect();
    let late = solve_nodiffusion(&sol, 3.0, &grid);
    assert!((late.peak() - 0.25).abs() <= 1e-3, "{}", late.peak());
    assert_eq!(sol.asymptote().unwrap(), Asymptote::Interior { x_star: 0.25 });
}

#[test]
fn repelling_equilibrium_splits_the_mass() {
    // x* = 1/2 repels; the symmetric bump splits evenly
    let sol = HyperbolicSolution::new(bump(), 5.0, -5.0);
    match sol.asymptote().unwrap() {
        Asymptote::Split { c } => assert!((c - 0.5).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let still = HyperbolicSolution::new(bump(), 0.0, 0.0);
    assert_eq!(still.asymptote().unwrap(), Asymptote::Stationary);
}

#[test]
fn lyapunov_moment_decays_exponentially() {
    let (alpha, beta) = (-5.0, 7.0);
    let sol = HyperbolicSolution::new(bump(), alpha, beta);
    let m = |t: f64| lyapunov_moment(&Transported { solution: &sol, t, tol: 1e-12 }, alpha, beta).unwrap();
    let m0 = m(0.0);
    for t in [0.5, 1.5, 4.0] {
        let rel = (m(t) - m0 * (-t).exp()).abs() / (m0 * (-t).exp());
        assert!(rel < 1e-8, "t = {t}: {rel}");
    }
}
