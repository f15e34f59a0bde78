//! Scalar abstractions.
//!
//! The discrete chain only needs field arithmetic, so it is written against
//! [`Scalar`] and runs unchanged on exact rationals. Everything that takes
//! logarithms, exponentials or square roots is written against [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed};

/// Ordered field element: enough for kernel construction and chain evolution.
pub trait Scalar: Clone + Num + Signed + PartialOrd + FromPrimitive + Debug {
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("population index representable in scalar type")
    }
}

impl<T> Scalar for T where T: Clone + Num + Signed + PartialOrd + FromPrimitive + Debug {}

/// Floating point scalar used by the continuum solvers.
pub trait Real:
    Scalar + Float + FloatConst + Copy + Display + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion of an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Bernoulli function `B(z) = z / (e^z - 1)`, with `B(0) = 1`.
///
/// Weight of the exponentially fitted (Scharfetter-Gummel) flux.
pub fn bernoulli<T: Real>(z: T) -> T {
    let az = z.abs();
    if az < T::lit(1e-3) {
        // 1 - z/2 + z^2/12 - z^4/720
        let z2 = z * z;
        T::one() - z / T::lit(2.0) + z2 / T::lit(12.0) - z2 * z2 / T::lit(720.0)
    } else if z > T::zero() {
        let e = (-z).exp();
        z * e / (T::one() - e)
    } else {
        z / z.exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_matches_definition() {
        for &z in &[-30.0_f64, -2.0, -1e-2, -5e-4, 0.0, 5e-4, 1e-2, 1.0, 7.5, 700.0] {
            let expected = if z == 0.0 { 1.0 } else { z / z.exp_m1() };
            let got = bernoulli(z);
            assert!((got - expected).abs() <= 1e-13 * expected.max(1.0), "z={z}: {got} vs {expected}");
        }
        // B(-z) = B(z) + z
        for &z in &[0.3_f64, 4.0, 55.0] {
            assert!((bernoulli(-z) - bernoulli(z) - z).abs() < 1e-12 * z.max(1.0));
        }
        assert!(bernoulli(1000.0_f64).is_finite());
        assert!(bernoulli(-1000.0_f64) == 1000.0);
    }
}
