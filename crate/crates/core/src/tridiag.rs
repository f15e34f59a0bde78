//! Tridiagonal linear algebra: Thomas solves and Sturm-sequence bisection.

use crate::error::{MoranError, Result};
use crate::scalar::Real;

/// Solves `A x = rhs` in place for tridiagonal `A` given by `lower[i] = A[i+1][i]`,
/// `diag[i] = A[i][i]`, `upper[i] = A[i][i+1]`. No pivoting: intended for
/// diagonally dominant systems.
pub fn solve_in_place<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T], scratch: &mut Vec<T>) {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert_eq!(lower.len() + 1, n);
    debug_assert_eq!(upper.len() + 1, n);
    scratch.clear();
    scratch.resize(n, T::zero());
    let mut denom = diag[0];
    rhs[0] = rhs[0] / denom;
    for i in 1..n {
        scratch[i - 1] = upper[i - 1] / denom;
        denom = diag[i] - lower[i - 1] * scratch[i - 1];
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - scratch[i] * rhs[i + 1];
    }
}

/// Number of eigenvalues strictly less than `shift` of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off`.
pub fn sturm_count<T: Real>(diag: &[T], off: &[T], shift: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut pivot = diag[0] - shift;
    if pivot == T::zero() {
        pivot = -tiny;
    }
    if pivot < T::zero() {
        count += 1;
    }
    for i in 1..diag.len() {
        let mut next = diag[i] - shift - off[i - 1] * off[i - 1] / pivot;
        if next == T::zero() {
            next = -tiny;
        }
        if next < T::zero() {
            count += 1;
        }
        pivot = next;
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection on the
/// Sturm count, bracketed by the Gershgorin discs.
pub fn smallest_eigenvalue<T: Real>(diag: &[T], off: &[T]) -> Result<T> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(MoranError::DimensionMismatch { expected: n.saturating_sub(1), got: off.len() });
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let mut radius = T::zero();
        if i > 0 {
            radius = radius + off[i - 1].abs();
        }
        if i + 1 < n {
            radius = radius + off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(MoranError::EigenNonConvergence);
    }
    let norm = lo.abs().max(hi.abs());
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi || hi - lo <= T::epsilon() * norm * T::lit(4.0) {
            return Ok(mid);
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(MoranError::EigenNonConvergence)
}
