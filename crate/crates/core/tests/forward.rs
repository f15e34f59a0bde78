use moran_core::forward::{
    fixation_probability, psi_profile, rescale_strong_selection, step_complete, CompleteOperator, DensityField,
    ForwardProblem, InitialDensity, TimeScheme,
};
use proptest::prelude::*;

fn field(cells: usize, weights: &[f64]) -> DensityField<f64> {
    // piecewise-constant bumps from the drawn weights, unit total mass
    let q: Vec<f64> = (0..cells).map(|i| weights[i * weights.len() / cells] + 1e-3).collect();
    let mass: f64 = q.iter().sum::<f64>() / cells as f64;
    DensityField::new(q.iter().map(|v| v / mass).collect(), 0.0, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn explicit_steps_conserve_mass_and_fixation(
        alpha in -15.0..15.0f64,
        beta in -15.0..15.0f64,
        weights in prop::collection::vec(0.0..1.0f64, 8),
        t_end in 0.001..0.05f64,
    ) {
        let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), 128).unwrap();
        let mut p = field(128, &weights);
        let psi0 = op.discrete_fixation(&p);
        op.advance(&mut p, t_end, TimeScheme::Explicit { cfl: 0.9 }).unwrap();
        prop_assert_eq!(p.t, t_end);
        prop_assert!((p.mass() - 1.0).abs() < 1e-12);
        prop_assert!((op.discrete_fixation(&p) - psi0).abs() < 1e-12);
        prop_assert!(p.q.iter().all(|v| *v >= 0.0) && p.a >= 0.0 && p.b >= 0.0);
    }

    #[test]
    fn implicit_steps_conserve_mass_and_fixation(
        alpha in -15.0..15.0f64,
        beta in -15.0..15.0f64,
        weights in prop::collection::vec(0.0..1.0f64, 8),
    ) {
        let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), 128).unwrap();
        let mut p = field(128, &weights);
        let psi0 = op.discrete_fixation(&p);
        op.advance(&mut p, 0.5, TimeScheme::Implicit { dt: 0.01 }).unwrap();
        prop_assert!((p.mass() - 1.0).abs() < 1e-11);
        prop_assert!((op.discrete_fixation(&p) - psi0).abs() < 1e-11);
    }
}

#[test]
fn discrete_profile_converges_to_continuum() {
    let profile = psi_profile(7.0, -3.0);
    let errors: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&cells| {
            let op = CompleteOperator::new(ForwardProblem::new(7.0, -3.0), cells).unwrap();
            let xs: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) / cells as f64).collect();
            let exact = profile.psi_on_grid(&xs);
            op.discrete_psi().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] > 1.8, "{errors:?}");
    }
}

#[test]
fn long_time_limit_is_the_fixation_probability() {
    let init = InitialDensity::from_fn(|x: f64| 6.0 * x * (1.0 - x)).unwrap();
    let (alpha, beta) = (4.0, 2.0);
    let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), 256).unwrap();
    let mut p = DensityField::from_initial(256, &init);
    op.advance(&mut p, 40.0, TimeScheme::Implicit { dt: 0.02 }).unwrap();
    let pi1 = fixation_probability(&init, alpha, beta).unwrap();
    assert!(p.interior_mass() < 1e-6, "{}", p.interior_mass());
    assert!((p.b - pi1).abs() < 1e-4, "{} vs {pi1}", p.b);
}

#[test]
fn strong_selection_splits_at_the_unstable_point() {
    // alpha = 10, beta = -5: interior equilibrium 1/3, repelling; mass of 2x above it is 8/9
    let init = InitialDensity::from_fn(|x: f64| 2.0 * x).unwrap();
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let s = rescale_strong_selection(10.0, -5.0, eps).unwrap();
            let (a, b) = s.unscaled_drift();
            (fixation_probability(&init, a, b).unwrap() - 8.0 / 9.0).abs()
        })
        .collect();
    for (w, eps) in errors.windows(2).zip([0.04, 0.02]) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "{errors:?}");
        assert!(w[0] < 2.0 * eps, "{errors:?}");
    }
}

#[test]
fn strong_selection_rejects_bad_epsilon() {
    assert!(rescale_strong_selection(1.0f64, 1.0, 0.0).is_err());
    assert!(rescale_strong_selection(1.0f64, 1.0, 1.5).is_err());
}

#[test]
fn single_step_helper_matches_operator() {
    let p = field(64, &[0.2, 0.9, 0.4, 0.1]);
    let op = CompleteOperator::new(ForwardProblem::new(3.0, -1.0), 64).unwrap();
    let dt = 0.5 * op.explicit_limit();
    let mut by_op = p.clone();
    op.step_explicit(&mut by_op, dt).unwrap();
    let by_fn = step_complete(&p, 3.0, -1.0, dt).unwrap();
    assert_eq!(by_op.q, by_fn.q);
    assert_eq!((by_op.a, by_op.b), (by_fn.a, by_fn.b));
}

#[test]
fn single_precision_run_conserves_mass() {
    let op = CompleteOperator::new(ForwardProblem::new(5.0f32, -2.0), 128).unwrap();
    let mut p = DensityField::from_density(128, |x: f32| 6.0 * x * (1.0 - x), 0.0, 0.0);
    let psi0 = op.discrete_fixation(&p);
    op.advance(&mut p, 0.05, TimeScheme::Explicit { cfl: 0.9 }).unwrap();
    assert!((p.mass() - 1.0).abs() < 1e-4);
    assert!((op.discrete_fixation(&p) - psi0).abs() < 1e-4);
}
