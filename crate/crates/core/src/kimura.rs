//! Backward (Kimura) equation
//! `f_t = x(1-x) f_xx + x(1-x)(beta + (alpha-beta) x) f_x`, `f(t,0) = 0`, `f(t,1) = 1`,
//! and its relation to the forward equation.
//!
//! The spatial operator is `D e^{-R} (e^{R} f_x)_x` with `D = x(1-x)` and
//! `R' = beta + (alpha-beta) x`. On nodes `x_j = j h` it is discretized as
//!
//! ```text
//! (L f)_j = D_j / h^2 [ B(-dR_{j+1/2}) (f_{j+1} - f_j) - B(dR_{j-1/2}) (f_j - f_{j-1}) ]
//! ```
//!
//! with `B(z) = z / (e^z - 1)`: the flux `e^{R} f_x` is taken constant on each
//! segment with `R` linear there. When `R` is linear (`alpha = beta`) the
//! discrete stationary state is exact at the nodes.

use crate::error::{MoranError, Result};
use crate::forward::{psi_profile, TimeScheme};
use crate::quadrature;
use crate::scalar::{bernoulli, Real};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KimuraParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> KimuraParams<T> {
    pub fn new(alpha: T, beta: T) -> Self {
        Self { alpha, beta }
    }

    /// Frequency-independent selection: drift `gamma x(1-x)`.
    pub fn frequency_independent(gamma: T) -> Self {
        Self { alpha: gamma, beta: gamma }
    }

    pub fn neutral() -> Self {
        Self { alpha: T::zero(), beta: T::zero() }
    }

    pub fn selection(&self, x: T) -> T {
        self.beta + (self.alpha - self.beta) * x
    }

    pub fn potential(&self, x: T) -> T {
        self.beta * x + (self.alpha - self.beta) * x * x / T::lit(2.0)
    }

    /// Stationary profile: the fixation probability from frequency `x`.
    pub fn stationary(&self, x: T) -> T {
        if self.alpha == self.beta {
            let g = self.beta;
            if g == T::zero() {
                return x;
            }
            // (1 - e^{-g x}) / (1 - e^{-g}) written with expm1 for both signs
            return (-g * x).exp_m1() / (-g).exp_m1();
        }
        psi_profile(self.alpha, self.beta).psi(x)
    }
}

/// Discretized backward operator on `cells + 1` nodes.
#[derive(Debug, Clone)]
pub struct BackwardOperator<T> {
    params: KimuraParams<T>,
    h: T,
    // coefficients of f_{j-1} and f_{j+1} in (L f)_j, interior nodes only
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> BackwardOperator<T> {
    pub fn new(params: KimuraParams<T>, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(MoranError::OutOfRange(format!("need at least 2 cells, got {cells}")));
        }
        let h = T::one() / T::of(cells);
        let nodes: Vec<T> = (0..=cells).map(|j| T::of(j) * h).collect();
        let mut lower = Vec::with_capacity(cells - 1);
        let mut upper = Vec::with_capacity(cells - 1);
        for j in 1..cells {
            let d = nodes[j] * (T::one() - nodes[j]) / (h * h);
            let left = params.potential(nodes[j]) - params.potential(nodes[j - 1]);
            let right = params.potential(nodes[j + 1]) - params.potential(nodes[j]);
            lower.push(d * bernoulli(left));
            upper.push(d * bernoulli(-right));
        }
        Ok(Self { params, h, lower, upper })
    }

    pub fn params(&self) -> &KimuraParams<T> {
        &self.params
    }

    pub fn cells(&self) -> usize {
        self.lower.len() + 1
    }

    pub fn dx(&self) -> T {
        self.h
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..=self.cells()).map(|j| T::of(j) * self.h).collect()
    }

    /// `L f` at the interior nodes.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        (1..self.cells())
            .map(|j| self.lower[j - 1] * (f[j - 1] - f[j]) + self.upper[j - 1] * (f[j + 1] - f[j]))
            .collect()
    }

    pub fn explicit_limit(&self) -> T {
        let worst = self.lower.iter().zip(&self.upper).map(|(l, u)| *l + *u).fold(T::zero(), T::max);
        T::one() / worst
    }

    fn check(&self, f: &[T]) -> Result<()> {
        if f.len() != self.cells() + 1 {
            return Err(MoranError::DimensionMismatch { expected: self.cells() + 1, got: f.len() });
        }
        Ok(())
    }

    pub fn step_explicit(&self, f: &mut [T], dt: T) -> Result<()> {
        self.check(f)?;
        let limit = self.explicit_limit();
        if dt > limit * (T::one() + T::lit(1e-12)) {
            return Err(MoranError::Unstable {
                dt: dt.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        let lf = self.apply(f);
        for (j, v) in lf.into_iter().enumerate() {
            f[j + 1] = f[j + 1] + dt * v;
        }
        Ok(())
    }

    pub fn step_implicit(&self, f: &mut [T], dt: T, scratch: &mut Vec<T>) -> Result<()> {
        self.check(f)?;
        let m = self.cells();
        let inner = m - 1;
        let diag: Vec<T> = (0..inner).map(|i| T::one() + dt * (self.lower[i] + self.upper[i])).collect();
        let sub: Vec<T> = (1..inner).map(|i| -dt * self.lower[i]).collect();
        let sup: Vec<T> = (0..inner - 1).map(|i| -dt * self.upper[i]).collect();
        let mut rhs: Vec<T> = f[1..m].to_vec();
        rhs[0] = rhs[0] + dt * self.lower[0] * f[0];
        rhs[inner - 1] = rhs[inner - 1] + dt * self.upper[inner - 1] * f[m];
        tridiag::solve_in_place(&sub, &diag, &sup, &mut rhs, scratch);
        f[1..m].copy_from_slice(&rhs);
        Ok(())
    }

    /// Discrete stationary state with the pins `f_0 = 0`, `f_M = 1`.
    pub fn stationary(&self) -> Vec<T> {
        // L f = 0 means B(-dR_{j+1/2}) (f_{j+1} - f_j) is the same on every
        // segment, so the increments are proportional to 1 / B(-dR).
        let m = self.cells();
        let nodes = self.nodes();
        let shift = (0..=m)
            .map(|j| -self.params.potential(nodes[j]))
            .fold(T::neg_infinity(), T::max);
        // e^{-R_j} / B(-dR), shifted by the largest e^{-R} against overflow
        let incr: Vec<T> = (0..m)
            .map(|j| {
                let d = self.params.potential(nodes[j + 1]) - self.params.potential(nodes[j]);
                (-self.params.potential(nodes[j]) - shift).exp() / bernoulli(-d)
            })
            .collect();
        let total: T = incr.iter().copied().sum();
        let mut f = Vec::with_capacity(m + 1);
        let mut acc = T::zero();
        f.push(T::zero());
        for v in &incr {
            acc = acc + *v;
            f.push(acc / total);
        }
        f[m] = T::one();
        f
    }
}

/// Backward profile on the nodes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KimuraSolution<T> {
    pub params: KimuraParams<T>,
    pub x: Vec<T>,
    pub f: Vec<T>,
    pub t: T,
}

impl<T: Real> KimuraSolution<T> {
    /// Homogeneous part `f - f_s` with the continuum stationary profile.
    pub fn fbar(&self) -> Vec<T> {
        self.x.iter().zip(&self.f).map(|(x, f)| *f - self.params.stationary(*x)).collect()
    }

    /// Max-norm distance to the continuum stationary profile.
    pub fn stationary_error(&self) -> T {
        self.fbar().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_monotone(&self) -> bool {
        self.f.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Advances `f0` (sampled at `cells + 1` nodes) to time `t`.
pub fn solve_kimura<T: Real>(
    f0: &[T],
    params: KimuraParams<T>,
    t: T,
    scheme: TimeScheme<T>,
) -> Result<KimuraSolution<T>> {
    if f0.len() < 3 {
        return Err(MoranError::DimensionMismatch { expected: 3, got: f0.len() });
    }
    let op = BackwardOperator::new(params, f0.len() - 1)?;
    let pin_tol = T::lit(1e-12);
    if f0[0].abs() > pin_tol || (f0[f0.len() - 1] - T::one()).abs() > pin_tol {
        return Err(MoranError::InvalidState(format!(
            "profile must satisfy f(0) = 0 and f(1) = 1, got {} and {}",
            f0[0],
            f0[f0.len() - 1]
        )));
    }
    let mut f = f0.to_vec();
    let (nominal, implicit) = match scheme {
        TimeScheme::Explicit { cfl } => (cfl * op.explicit_limit(), false),
        TimeScheme::Implicit { dt } => (dt, true),
    };
    if !(nominal > T::zero()) {
        return Err(MoranError::OutOfRange(format!("time step {nominal} must be positive")));
    }
    if t > T::zero() {
        let steps = (t / nominal).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        let dt = t / T::of(steps);
        let mut scratch = Vec::new();
        for _ in 0..steps {
            if implicit {
                op.step_implicit(&mut f, dt, &mut scratch)?;
            } else {
                op.step_explicit(&mut f, dt)?;
            }
        }
    }
    Ok(KimuraSolution { params, x: op.nodes(), f, t: t.max(T::zero()) })
}

/// Max over interior nodes of the centred finite-difference residual of the
/// continuum backward operator applied to `f` on a uniform grid over `[0, 1]`.
pub fn stationarity_residual<T: Real>(f: &[T], params: &KimuraParams<T>) -> T {
    let m = f.len() - 1;
    let h = T::one() / T::of(m);
    let two = T::lit(2.0);
    (1..m)
        .map(|j| {
            let x = T::of(j) * h;
            let d = x * (T::one() - x);
            let fxx = (f[j + 1] - two * f[j] + f[j - 1]) / (h * h);
            let fx = (f[j + 1] - f[j - 1]) / (two * h);
            (d * (fxx + params.selection(x) * fx)).abs()
        })
        .fold(T::zero(), T::max)
}

/// A function with first and second derivatives available.
pub trait SmoothFn<T> {
    fn value(&self, x: T) -> T;
    fn d1(&self, x: T) -> T;
    fn d2(&self, x: T) -> T;
}

/// Polynomial with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T>(pub Vec<T>);

impl<T: Real> Poly<T> {
    pub fn derivative(&self) -> Self {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| T::of(k) * *c).collect())
    }

    /// `x(1-x) p(x)`: vanishes at both endpoints.
    pub fn times_bubble(&self) -> Self {
        let mut out = vec![T::zero(); self.0.len() + 2];
        for (k, c) in self.0.iter().enumerate() {
            out[k + 1] = out[k + 1] + *c;
            out[k + 2] = out[k + 2] - *c;
        }
        Poly(out)
    }

    pub fn eval(&self, x: T) -> T {
        self.0.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
    }
}

impl<T: Real> SmoothFn<T> for Poly<T> {
    fn value(&self, x: T) -> T {
        self.eval(x)
    }

    fn d1(&self, x: T) -> T {
        self.derivative().eval(x)
    }

    fn d2(&self, x: T) -> T {
        self.derivative().derivative().eval(x)
    }
}

/// `|<L* fbar, q> - <fbar, L q>|` where `L` is the forward operator
/// `d_xx(D q) - d_x(D r q)` and `L*` the backward one, by adaptive quadrature.
pub fn adjointness_residual<T, F, Q>(fbar: &F, q: &Q, params: &KimuraParams<T>) -> Result<T>
where
    T: Real,
    F: SmoothFn<T>,
    Q: SmoothFn<T>,
{
    let tol = T::lit(1e-12);
    let backward = quadrature::integrate(
        |x| {
            let d = x * (T::one() - x);
            d * (fbar.d2(x) + params.selection(x) * fbar.d1(x)) * q.value(x)
        },
        T::zero(),
        T::one(),
        tol,
    )?;
    let forward = quadrature::integrate(
        |x| {
            let one = T::one();
            let two = T::lit(2.0);
            let d = x * (one - x);
            let dp = one - two * x;
            let r = params.selection(x);
            let rp = params.alpha - params.beta;
            // (D q)'' and (D r q)'
            let dq2 = -two * q.value(x) + two * dp * q.d1(x) + d * q.d2(x);
            let drq1 = (dp * r + d * rp) * q.value(x) + d * r * q.d1(x);
            fbar.value(x) * (dq2 - drq1)
        },
        T::zero(),
        T::one(),
        tol,
    )?;
    Ok((backward - forward).abs())
}

/// Backward profile `g(x) = c x(1-x) q(1-x)` obtained from a forward interior
/// density, sampled on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProfile<T> {
    pub x: Vec<T>,
    pub g: Vec<T>,
    /// The normalising constant `c`.
    pub scale: T,
}

/// Reflected profile normalised so that `int g^2 / (x(1-x)) dx = 1`.
///
/// For constant selection (`alpha = beta`, including neutral) `x(1-x) q(t, 1-x)`
/// solves the backward equation whenever `q` solves the forward one.
pub fn duality_map<T: Real, Q: Fn(T) -> T>(q: Q, grid: &[T]) -> Result<DualProfile<T>> {
    let raw = |x: T| x * (T::one() - x) * q(T::one() - x);
    let norm2 = quadrature::integrate(
        |x| {
            let v = q(T::one() - x);
            x * (T::one() - x) * v * v
        },
        T::zero(),
        T::one(),
        T::lit(1e-12),
    )?;
    if !(norm2 > T::zero()) {
        return Err(MoranError::BadMass(norm2.to_f64().unwrap_or(f64::NAN)));
    }
    let scale = T::one() / norm2.sqrt();
    let g = grid.iter().map(|&x| scale * raw(x)).collect();
    Ok(DualProfile { x: grid.to_vec(), g, scale })
}

impl<T: Real> DualProfile<T> {
    /// Mirror symmetry about `1/2`, assuming a grid symmetric about `1/2`.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let n = self.g.len();
        (0..n).all(|i| (self.g[i] - self.g[n - 1 - i]).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(cells: usize) -> Vec<f64> {
        (0..=cells).map(|j| j as f64 / cells as f64).collect()
    }

    #[test]
    fn neutral_is_stationary_at_identity() {
        let f = solve_kimura(&linear(64), KimuraParams::neutral(), 1.0, TimeScheme::Explicit { cfl: 0.9 }).unwrap();
        for (x, v) in f.x.iter().zip(&f.f) {
            assert!((x - v).abs() < 1e-14);
        }
    }

    #[test]
    fn discrete_stationary_is_exact_for_constant_selection() {
        for gamma in [-20.0_f64, 3.0, 20.0] {
            let p = KimuraParams::frequency_independent(gamma);
            let op = BackwardOperator::new(p, 64).unwrap();
            let s = op.stationary();
            for (x, v) in op.nodes().iter().zip(&s) {
                assert!((p.stationary(*x) - v).abs() < 1e-13, "gamma {gamma}");
            }
            assert!(op.apply(&s).iter().all(|r: &f64| r.abs() < 1e-9));
        }
    }

    #[test]
    fn explicit_step_rejects_large_dt() {
        let op = BackwardOperator::new(KimuraParams::frequency_independent(5.0), 32).unwrap();
        let mut f = linear(32);
        let dt = 2.0 * op.explicit_limit();
        assert!(matches!(op.step_explicit(&mut f, dt), Err(MoranError::Unstable { .. })));
    }

    #[test]
    fn pins_are_checked() {
        let mut f = linear(8);
        f[8] = 0.9;
        assert!(solve_kimura(&f, KimuraParams::neutral(), 1.0, TimeScheme::Implicit { dt: 0.1 }).is_err());
    }

    #[test]
    fn trivial_adjointness() {
        let p = KimuraParams::frequency_independent(3.0);
        let zero = Poly(vec![0.0]);
        let q = Poly(vec![1.0, 2.0, -1.0]);
        let fbar = Poly(vec![0.5, 1.0]).times_bubble();
        assert_eq!(adjointness_residual(&zero, &q, &p).unwrap(), 0.0);
        assert_eq!(adjointness_residual(&fbar, &zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn neutral_eigenfunction_dual() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let d = duality_map(|_| 1.0, &grid).unwrap();
        // int x(1-x) dx = 1/6
        assert!((d.scale - 6.0_f64.sqrt()).abs() < 1e-12);
        for (x, g) in grid.iter().zip(&d.g) {
            assert!((g - d.scale * x * (1.0 - x)).abs() < 1e-14);
        }
        assert!(d.is_symmetric(1e-14));
    }
}
