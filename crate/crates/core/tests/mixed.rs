use moran_core::discrete::PayoffMatrix;
use moran_core::forward::{fixation_probability, InitialDensity};
use moran_core::mixed::{dominates, dominates_by_fixation, mixed_fixation, reduce_payoffs, MixedGame};
use moran_core::Rational;
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

#[test]
fn reduced_game_in_exact_arithmetic() {
    let base = PayoffMatrix::new(r(1, 1), r(3, 1), r(4, 1), r(2, 1)).unwrap();
    let reduced = reduce_payoffs(&base, r(1, 2), r(1, 4)).unwrap();
    assert_eq!(reduced, PayoffMatrix { a: r(5, 2), b: r(5, 2), c: r(11, 4), d: r(5, 2) });
    assert_eq!(&reduced.a - &reduced.c, r(-1, 4));
    assert_eq!(&reduced.b - &reduced.d, r(0, 1));

    let game = MixedGame::new(0.5, 0.25, -3.0, 1.0).unwrap();
    assert_eq!(game.alpha_eff(), -0.25);
    assert_eq!(game.beta_eff(), 0.0);
}

proptest! {
    #[test]
    fn effective_drift_matches_the_reduced_game(
        p in prop::array::uniform4(0.0..10.0f64),
        theta1 in 0.0..1.0f64,
        theta2 in 0.0..1.0f64,
    ) {
        let base = PayoffMatrix::new(p[0], p[1], p[2], p[3]).unwrap();
        let reduced = reduce_payoffs(&base, theta1, theta2).unwrap();
        let game = MixedGame::new(theta1, theta2, p[0] - p[2], p[1] - p[3]).unwrap();
        prop_assert!((reduced.a - reduced.c - game.alpha_eff()).abs() < 1e-12);
        prop_assert!((reduced.b - reduced.d - game.beta_eff()).abs() < 1e-12);
    }

    #[test]
    fn swapping_strategists_mirrors_fixation(
        theta1 in 0.0..1.0f64,
        theta2 in 0.0..1.0f64,
        alpha in -15.0..15.0f64,
        beta in -15.0..15.0f64,
        slope in -0.9..3.0f64,
    ) {
        let norm = 1.0 + slope / 2.0;
        let p0 = InitialDensity::from_fn(move |x: f64| (1.0 + slope * x) / norm).unwrap();
        let mirrored = InitialDensity::from_fn(move |x: f64| (1.0 + slope * (1.0 - x)) / norm).unwrap();
        let forward = mixed_fixation(&p0, &MixedGame::new(theta1, theta2, alpha, beta).unwrap()).unwrap();
        let swapped = mixed_fixation(&mirrored, &MixedGame::new(theta2, theta1, alpha, beta).unwrap()).unwrap();
        prop_assert!((forward + swapped - 1.0).abs() < 1e-9, "{} + {}", forward, swapped);
    }

    #[test]
    fn flow_dominance_implies_fixation_dominance(
        theta1 in 0.0..1.0f64,
        theta2 in 0.0..1.0f64,
        alpha in -20.0..20.0f64,
        beta in -20.0..20.0f64,
    ) {
        prop_assume!((theta1 - theta2).abs() > 1e-3);
        if dominates(theta1, theta2, alpha, beta).unwrap() {
            prop_assert!(dominates_by_fixation(theta1, theta2, alpha, beta).unwrap());
        }
    }

    #[test]
    fn interior_equilibrium_is_evolutionarily_stable(
        alpha in -20.0..-0.5f64,
        beta in 0.5..20.0f64,
        theta in 0.0..1.0f64,
    ) {
        let theta_star = beta / (beta - alpha);
        prop_assume!((theta - theta_star).abs() > 1e-3);
        prop_assert!(dominates(theta, theta_star, alpha, beta).unwrap());
        prop_assert!(dominates_by_fixation(theta, theta_star, alpha, beta).unwrap());
        prop_assert!(!dominates(theta_star, theta, alpha, beta).unwrap());
    }
}

#[test]
fn identical_strategists_fix_neutrally() {
    let p0 = InitialDensity::from_fn(|x: f64| 2.0 * x).unwrap();
    let game = MixedGame::new(0.4, 0.4, -7.0, 3.0).unwrap();
    assert!((mixed_fixation(&p0, &game).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mixed_fixation_uses_the_effective_drift() {
    let p0 = InitialDensity::from_fn(|x: f64| 6.0 * x * (1.0 - x)).unwrap();
    let game = MixedGame::new(0.9, 0.2, -10.0, 6.0).unwrap();
    let direct = fixation_probability(&p0, game.alpha_eff(), game.beta_eff()).unwrap();
    assert_eq!(mixed_fixation(&p0, &game).unwrap(), direct);
    let unnormalized = InitialDensity::from_fn(|x: f64| x * (1.0 - x)).unwrap();
    assert!(mixed_fixation(&unnormalized, &game).is_err());
}

#[test]
fn fixation_dominance_without_flow_dominance() {
    // pure strategists in a Hawk-Dove game: neither carries the other along
    // the flow, yet the weaker one fixes below the neutral rate
    let (alpha, beta) = (-2.0, 18.0);
    assert!(!dominates(1.0, 0.0, alpha, beta).unwrap());
    assert!(!dominates(0.0, 1.0, alpha, beta).unwrap());
    assert!(dominates_by_fixation(0.0, 1.0, alpha, beta).unwrap());
}
