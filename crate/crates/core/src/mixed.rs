//! Two populations of mixed strategists `E_theta1`, `E_theta2` (an
//! `E_theta` plays pure strategy I with probability `theta`).
//!
//! Averaging the pure game over both players' randomizations gives a 2x2 game
//! between the two strategist types whose drift parameters are
//!
//! ```text
//! beta_eff  = (theta1 - theta2) (theta2 alpha + (1 - theta2) beta)
//! alpha_eff = beta_eff + (theta1 - theta2)^2 (alpha - beta)
//! ```

use crate::discrete::PayoffMatrix;
use crate::error::{MoranError, Result};
use crate::forward::{fixation_probability, psi_profile, InitialDensity, NORMALIZATION_TOL};
use crate::scalar::{Real, Scalar};

/// Points `k / 22`, `k = 1..=21`, used for the fixation-comparison test.
pub const COMPARISON_POINTS: usize = 21;

fn check_theta<T: Scalar + std::fmt::Display>(name: &str, theta: &T) -> Result<()> {
    if *theta < T::zero() || *theta > T::one() {
        return Err(MoranError::OutOfRange(format!("{name} = {theta} not in [0, 1]")));
    }
    Ok(())
}

/// Payoff matrix between `E_theta1` (row/column 1) and `E_theta2` strategists.
pub fn reduce_payoffs<T: Scalar + std::fmt::Display>(
    base: &PayoffMatrix<T>,
    theta1: T,
    theta2: T,
) -> Result<PayoffMatrix<T>> {
    check_theta("theta1", &theta1)?;
    check_theta("theta2", &theta2)?;
    // expected payoff of an E_s player against an E_u player
    let play = |s: &T, u: &T| -> T {
        let (s1, u1) = (T::one() - s.clone(), T::one() - u.clone());
        s.clone() * u.clone() * base.a.clone()
            + s.clone() * u1.clone() * base.b.clone()
            + s1.clone() * u.clone() * base.c.clone()
            + s1 * u1 * base.d.clone()
    };
    Ok(PayoffMatrix {
        a: play(&theta1, &theta1),
        b: play(&theta1, &theta2),
        c: play(&theta2, &theta1),
        d: play(&theta2, &theta2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedGame<T> {
    pub theta1: T,
    pub theta2: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> MixedGame<T> {
    pub fn new(theta1: T, theta2: T, alpha: T, beta: T) -> Result<Self> {
        check_theta("theta1", &theta1)?;
        check_theta("theta2", &theta2)?;
        Ok(Self { theta1, theta2, alpha, beta })
    }

    pub fn is_neutral(&self) -> bool {
        self.theta1 == self.theta2
    }

    /// Per-capita growth `x(alpha - beta) + beta` of the pure replicator dynamics.
    pub fn pure_growth(&self, x: T) -> T {
        self.beta + (self.alpha - self.beta) * x
    }

    pub fn beta_eff(&self) -> T {
        (self.theta1 - self.theta2) * self.pure_growth(self.theta2)
    }

    pub fn alpha_eff(&self) -> T {
        let d = self.theta1 - self.theta2;
        self.beta_eff() + d * d * (self.alpha - self.beta)
    }

    /// `x (theta1-theta2)^2 (alpha-beta) + (theta1-theta2)(theta2 alpha + (1-theta2) beta)`.
    pub fn drift_polynomial(&self, x: T) -> T {
        let d = self.theta1 - self.theta2;
        x * d * d * (self.alpha - self.beta)
            + d * (self.theta2 * self.alpha + (T::one() - self.theta2) * self.beta)
    }

    /// `F(y) = exp(-y^2 (theta1-theta2)^2 (alpha-beta)/2 - y (theta1-theta2)(theta2 alpha + (1-theta2) beta))`.
    pub fn weight(&self, y: T) -> T {
        let d = self.theta1 - self.theta2;
        let two = T::lit(2.0);
        (-y * y * d * d * (self.alpha - self.beta) / two
            - y * d * (self.theta2 * self.alpha + (T::one() - self.theta2) * self.beta))
            .exp()
    }
}

/// Fixation probability of the `E_theta1` type from the initial density `p0`.
pub fn mixed_fixation<T: Real>(p0: &InitialDensity<T>, game: &MixedGame<T>) -> Result<T> {
    let raw = p0.raw_mass();
    if (raw - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
        return Err(MoranError::BadMass(raw.to_f64().unwrap_or(f64::NAN)));
    }
    fixation_probability(p0, game.alpha_eff(), game.beta_eff())
}

/// `E_theta2` dominates `E_theta1`: the replicator flow carries `theta1` to
/// `theta2`.
///
/// The per-capita growth `g` is used instead of the full field so that
/// `theta1 in {0, 1}` is handled: `g(theta1)` must point from `theta1`
/// towards `theta2` and `g` must not change sign strictly in between.
pub fn dominates<T: Real>(theta1: T, theta2: T, alpha: T, beta: T) -> Result<bool> {
    let game = MixedGame::new(theta1, theta2, alpha, beta)?;
    if game.is_neutral() {
        return Err(MoranError::InvalidState("equal strategists are mutually neutral".into()));
    }
    let d = theta1 - theta2;
    // theta2 = x* computed in floating point leaves a round-off growth of either sign
    let slack = T::lit(64.0) * T::epsilon() * (alpha.abs() + beta.abs());
    Ok(d * game.pure_growth(theta1) < T::zero() && d * game.pure_growth(theta2) <= slack * d.abs())
}

/// `E_theta2` dominates `E_theta1` by definition: the fixation probability of
/// `E_theta1` from `delta_x` is strictly below the neutral value `x` at every
/// comparison point.
pub fn dominates_by_fixation<T: Real>(theta1: T, theta2: T, alpha: T, beta: T) -> Result<bool> {
    let game = MixedGame::new(theta1, theta2, alpha, beta)?;
    if game.is_neutral() {
        return Err(MoranError::InvalidState("equal strategists are mutually neutral".into()));
    }
    let profile = psi_profile(game.alpha_eff(), game.beta_eff());
    let below = (1..=COMPARISON_POINTS).all(|k| {
        let x = T::of(k) / T::of(COMPARISON_POINTS + 1);
        profile.psi(x) < x
    });
    Ok(below)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_strategists_keep_the_base_game() {
        let base = PayoffMatrix::new(1.0_f64, 3.0, 4.0, 2.0).unwrap();
        assert_eq!(reduce_payoffs(&base, 1.0, 0.0).unwrap(), base);
    }

    #[test]
    fn identical_strategists_are_neutral() {
        let base = PayoffMatrix::new(1.0_f64, 3.0, 4.0, 2.0).unwrap();
        let t = 0.3;
        let r = reduce_payoffs(&base, t, t).unwrap();
        let v = t * t * 1.0 + t * (1.0 - t) * 7.0 + (1.0 - t) * (1.0 - t) * 2.0;
        for p in [r.a, r.b, r.c, r.d] {
            assert!((p - v).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range_theta() {
        let base = PayoffMatrix::neutral();
        assert!(reduce_payoffs(&base, 1.5_f64, 0.0).is_err());
        assert!(MixedGame::new(0.5_f64, -0.1, 1.0, 1.0).is_err());
        assert!(dominates(0.4_f64, 0.4, -1.0, 1.0).is_err());
        assert!(dominates_by_fixation(0.4_f64, 0.4, -1.0, 1.0).is_err());
    }

    #[test]
    fn hawk_dove_examples() {
        assert!(dominates(0.9_f64, 0.6, -20.0, 20.0).unwrap());
        assert!(!dominates(0.6_f64, 0.9, -20.0, 20.0).unwrap());
        assert!(dominates_by_fixation(0.9_f64, 0.6, -20.0, 20.0).unwrap());
        assert!(!dominates_by_fixation(0.6_f64, 0.9, -20.0, 20.0).unwrap());
        for t in [0.0, 0.1, 0.3, 0.7, 1.0] {
            assert!(dominates(t, 0.5_f64, -20.0, 20.0).unwrap());
        }
    }
}
