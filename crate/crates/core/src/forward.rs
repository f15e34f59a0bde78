//! Replicator-diffusion equation
//!
//! ```text
//! d_t p = eps d_xx (x(1-x) p) - d_x (x(1-x)(x alpha + (1-x) beta) p)
//! ```
//!
//! on a uniform cell-centred grid of `(0, 1)`, with the probability that leaves
//! through the endpoints accumulated in the boundary masses `a` (at 0) and `b`
//! (at 1). Writing `u = x(1-x) q` and `R' = beta + (alpha - beta) x`, the flux is
//! `-eps e^{R/eps} d_x (e^{-R/eps} u)`; faces use the exponentially fitted
//! (Scharfetter-Gummel) discretization of that form. The resulting semi-discrete
//! system is the generator of a birth-death chain on the cells with two absorbing
//! states, so mass is conserved exactly, positivity holds for any admissible step,
//! and the discrete fixation profile (`psi` with `R` linearly interpolated per
//! segment) is an exact invariant.

use std::sync::Arc;

use crate::error::{MoranError, Result};
use crate::quadrature::{self, DEFAULT_TOL};
use crate::scalar::{bernoulli, Real};
use crate::tridiag;

/// Drift parameters with a diffusion coefficient (1 for the unscaled equation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardProblem<T> {
    pub alpha: T,
    pub beta: T,
    pub diffusion: T,
}

impl<T: Real> ForwardProblem<T> {
    pub fn new(alpha: T, beta: T) -> Self {
        Self { alpha, beta, diffusion: T::one() }
    }

    pub fn with_diffusion(alpha: T, beta: T, diffusion: T) -> Result<Self> {
        if !(diffusion > T::zero()) || !diffusion.is_finite() {
            return Err(MoranError::OutOfRange(format!("diffusion coefficient {diffusion} must be positive")));
        }
        Ok(Self { alpha, beta, diffusion })
    }

    /// Per-capita selection `beta + (alpha - beta) x`.
    pub fn selection(&self, x: T) -> T {
        self.beta + (self.alpha - self.beta) * x
    }

    /// Drift velocity `x(1-x)(x alpha + (1-x) beta)`.
    pub fn velocity(&self, x: T) -> T {
        x * (T::one() - x) * self.selection(x)
    }

    /// Antiderivative of the selection: `beta x + (alpha - beta) x^2 / 2`.
    pub fn potential(&self, x: T) -> T {
        self.beta * x + (self.alpha - self.beta) * x * x / T::lit(2.0)
    }
}

/// Interior density at cell centres plus the boundary masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    pub q: Vec<T>,
    pub a: T,
    pub b: T,
    pub t: T,
}

impl<T: Real> DensityField<T> {
    pub fn new(q: Vec<T>, a: T, b: T) -> Self {
        Self { q, a, b, t: T::zero() }
    }

    /// Cell averages of `density` (one 15-point Kronrod panel per cell).
    pub fn from_density<F: Fn(T) -> T>(cells: usize, density: F, a: T, b: T) -> Self {
        let h = T::one() / T::of(cells);
        let q = (0..cells)
            .map(|i| {
                let lo = T::of(i) * h;
                quadrature::panel(&density, lo, lo + h) / h
            })
            .collect();
        Self::new(q, a, b)
    }

    pub fn from_initial(cells: usize, init: &InitialDensity<T>) -> Self {
        Self::from_density(cells, |x| init.interior(x), init.a0(), init.b0())
    }

    pub fn cells(&self) -> usize {
        self.q.len()
    }

    pub fn dx(&self) -> T {
        T::one() / T::of(self.q.len())
    }

    pub fn centers(&self) -> Vec<T> {
        cell_centers(self.q.len())
    }

    pub fn interior_mass(&self) -> T {
        self.q.iter().copied().sum::<T>() * self.dx()
    }

    pub fn mass(&self) -> T {
        self.a + self.b + self.interior_mass()
    }

    /// `||q||_1`.
    pub fn l1(&self) -> T {
        self.q.iter().map(|v| v.abs()).sum::<T>() * self.dx()
    }

    /// `||q||_2` in `L^2(x(1-x) dx)`.
    pub fn weighted_l2(&self) -> T {
        let h = self.dx();
        let sum: T = self.centers().iter().zip(&self.q).map(|(x, v)| *x * (T::one() - *x) * *v * *v).sum();
        (sum * h).sqrt()
    }

    /// `<phi, p> = a phi(0) + b phi(1) + sum phi(x_i) q_i dx`.
    pub fn pair<F: Fn(T) -> T>(&self, phi: F) -> T {
        let h = self.dx();
        let interior: T = self.centers().iter().zip(&self.q).map(|(x, v)| phi(*x) * *v).sum();
        self.a * phi(T::zero()) + self.b * phi(T::one()) + interior * h
    }

    /// `b + sum psi_i q_i dx` for cell-averaged `psi` (see [`FixationProfile::cell_averages`]).
    pub fn psi_moment(&self, psi_cells: &[T]) -> T {
        self.b + psi_cells.iter().zip(&self.q).map(|(s, q)| *s * *q).sum::<T>() * self.dx()
    }

    /// Index of the largest interior value.
    pub fn peak_cell(&self) -> usize {
        argmax(&self.q)
    }
}

pub(crate) fn argmax<T: Real>(v: &[T]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, x)| if *x > best.1 { (i, *x) } else { best })
        .0
}

pub fn cell_centers<T: Real>(cells: usize) -> Vec<T> {
    let h = T::one() / T::of(cells);
    (0..cells).map(|i| (T::of(i) + T::lit(0.5)) * h).collect()
}

/// How [`CompleteOperator::advance`] integrates in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScheme<T> {
    /// Forward Euler at `cfl` times the positivity limit.
    Explicit { cfl: T },
    /// Backward Euler with a fixed step.
    Implicit { dt: T },
}

/// Semi-discrete operator: per-cell transfer rates to the neighbouring cells
/// (or, at the ends, to the boundary masses).
#[derive(Debug, Clone)]
pub struct CompleteOperator<T> {
    problem: ForwardProblem<T>,
    h: T,
    to_left: Vec<T>,
    to_right: Vec<T>,
    // ln of the segment integrals of exp(-R/eps); segment k ends at centre k,
    // the last one at x = 1
    log_segments: Vec<T>,
}

impl<T: Real> CompleteOperator<T> {
    pub fn new(problem: ForwardProblem<T>, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(MoranError::OutOfRange(format!("need at least 2 cells, got {cells}")));
        }
        let eps = problem.diffusion;
        let h = T::one() / T::of(cells);
        let xs = cell_centers::<T>(cells);
        let diff = |x: T| x * (T::one() - x);
        let pot = |x: T| problem.potential(x) / eps;

        // nodes of the segments: 0, x_0, ..., x_{M-1}, 1
        let mut nodes = Vec::with_capacity(cells + 2);
        nodes.push(T::zero());
        nodes.extend_from_slice(&xs);
        nodes.push(T::one());

        let mut to_left = vec![T::zero(); cells];
        let mut to_right = vec![T::zero(); cells];
        let mut log_segments = Vec::with_capacity(cells + 1);
        for k in 0..=cells {
            let (xl, xr) = (nodes[k], nodes[k + 1]);
            let len = xr - xl;
            let jump = pot(xr) - pot(xl); // 2s
            log_segments.push(len.ln() - pot(xl) - bernoulli(-jump).ln());
            let scale = eps / (h * len);
            if k > 0 {
                to_right[k - 1] = scale * diff(xl) * bernoulli(-jump);
            }
            if k < cells {
                to_left[k] = scale * diff(xr) * bernoulli(jump);
            }
        }
        Ok(Self { problem, h, to_left, to_right, log_segments })
    }

    pub fn problem(&self) -> &ForwardProblem<T> {
        &self.problem
    }

    pub fn cells(&self) -> usize {
        self.to_left.len()
    }

    pub fn dx(&self) -> T {
        self.h
    }

    /// Largest forward-Euler step that keeps every cell's outflow within its content.
    pub fn explicit_limit(&self) -> T {
        let max_rate = self
            .to_left
            .iter()
            .zip(&self.to_right)
            .map(|(l, r)| *l + *r)
            .fold(T::zero(), T::max);
        T::one() / max_rate
    }

    /// `(dq/dt, da/dt, db/dt)`.
    pub fn rates(&self, q: &[T]) -> (Vec<T>, T, T) {
        let m = q.len();
        let mut dq = vec![T::zero(); m];
        for i in 0..m {
            let mut v = -(self.to_left[i] + self.to_right[i]) * q[i];
            if i > 0 {
                v = v + self.to_right[i - 1] * q[i - 1];
            }
            if i + 1 < m {
                v = v + self.to_left[i + 1] * q[i + 1];
            }
            dq[i] = v;
        }
        (dq, self.to_left[0] * q[0] * self.h, self.to_right[m - 1] * q[m - 1] * self.h)
    }

    fn check_field(&self, field: &DensityField<T>) -> Result<()> {
        if field.q.len() != self.cells() {
            return Err(MoranError::DimensionMismatch { expected: self.cells(), got: field.q.len() });
        }
        Ok(())
    }

    fn check_positive(&self, field: &DensityField<T>) -> Result<()> {
        let scale = field.q.iter().fold(T::one(), |m, v| m.max(v.abs()));
        for (i, v) in field.q.iter().enumerate() {
            if *v < -T::lit(1e-12) * scale {
                return Err(MoranError::NegativeDensity { cell: i, value: v.to_f64().unwrap_or(f64::NAN) });
            }
        }
        Ok(())
    }

    /// One forward Euler step.
    pub fn step_explicit(&self, field: &mut DensityField<T>, dt: T) -> Result<()> {
        self.check_field(field)?;
        let limit = self.explicit_limit();
        if dt > limit * (T::one() + T::lit(1e-12)) {
            return Err(MoranError::Unstable {
                dt: dt.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (dq, da, db) = self.rates(&field.q);
        for (q, d) in field.q.iter_mut().zip(dq) {
            *q = *q + dt * d;
        }
        field.a = field.a + dt * da;
        field.b = field.b + dt * db;
        field.t = field.t + dt;
        self.check_positive(field)
    }

    /// One backward Euler step (unconditionally stable, positivity preserving).
    pub fn step_implicit(&self, field: &mut DensityField<T>, dt: T, scratch: &mut Vec<T>) -> Result<()> {
        self.check_field(field)?;
        let m = self.cells();
        let diag: Vec<T> = (0..m).map(|i| T::one() + dt * (self.to_left[i] + self.to_right[i])).collect();
        let lower: Vec<T> = (0..m - 1).map(|i| -dt * self.to_right[i]).collect();
        let upper: Vec<T> = (0..m - 1).map(|i| -dt * self.to_left[i + 1]).collect();
        tridiag::solve_in_place(&lower, &diag, &upper, &mut field.q, scratch);
        field.a = field.a + dt * self.to_left[0] * field.q[0] * self.h;
        field.b = field.b + dt * self.to_right[m - 1] * field.q[m - 1] * self.h;
        field.t = field.t + dt;
        self.check_positive(field)
    }

    /// Advances `field` to time `t_end`, calling `observe` after every step.
    pub fn advance_with<F: FnMut(&DensityField<T>)>(
        &self,
        field: &mut DensityField<T>,
        t_end: T,
        scheme: TimeScheme<T>,
        mut observe: F,
    ) -> Result<()> {
        let (nominal, implicit) = match scheme {
            TimeScheme::Explicit { cfl } => (cfl * self.explicit_limit(), false),
            TimeScheme::Implicit { dt } => (dt, true),
        };
        if !(nominal > T::zero()) {
            return Err(MoranError::OutOfRange(format!("time step {nominal} must be positive")));
        }
        let mut scratch = Vec::new();
        let remaining = t_end - field.t;
        if remaining <= T::zero() {
            return Ok(());
        }
        // equal steps landing exactly on t_end
        let steps = (remaining / nominal).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        let dt = remaining / T::of(steps);
        for k in 0..steps {
            if implicit {
                self.step_implicit(field, dt, &mut scratch)?;
            } else {
                self.step_explicit(field, dt)?;
            }
            if k + 1 == steps {
                field.t = t_end;
            }
            observe(field);
        }
        Ok(())
    }

    pub fn advance(&self, field: &mut DensityField<T>, t_end: T, scheme: TimeScheme<T>) -> Result<()> {
        self.advance_with(field, t_end, scheme, |_| {})
    }

    /// The scheme's exactly conserved fixation profile at the cell centres.
    pub fn discrete_psi(&self) -> Vec<T> {
        let shift = self.log_segments.iter().copied().fold(T::neg_infinity(), T::max);
        let mut acc = T::zero();
        let mut cumulative = Vec::with_capacity(self.log_segments.len());
        for l in &self.log_segments {
            acc = acc + (*l - shift).exp();
            cumulative.push(acc);
        }
        let total = acc;
        cumulative[..self.cells()].iter().map(|c| *c / total).collect()
    }

    /// `<psi_h, p>`, the quantity the scheme conserves to round-off.
    pub fn discrete_fixation(&self, field: &DensityField<T>) -> T {
        let psi = self.discrete_psi();
        field.b + psi.iter().zip(&field.q).map(|(s, q)| *s * *q).sum::<T>() * self.h
    }

    /// Smallest eigenvalue of `-L` on the interior cells (symmetrized; the
    /// chain is reversible so the spectrum is real).
    pub fn spectral_gap(&self) -> Result<T> {
        let m = self.cells();
        let diag: Vec<T> = (0..m).map(|i| self.to_left[i] + self.to_right[i]).collect();
        let off: Vec<T> = (0..m - 1).map(|i| -(self.to_right[i] * self.to_left[i + 1]).sqrt()).collect();
        let lam = tridiag::smallest_eigenvalue(&diag, &off)?;
        Ok(lam.max(T::min_positive_value()))
    }
}

/// One explicit step of the unscaled equation.
pub fn step_complete<T: Real>(field: &DensityField<T>, alpha: T, beta: T, dt: T) -> Result<DensityField<T>> {
    let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), field.cells())?;
    let mut next = field.clone();
    op.step_explicit(&mut next, dt)?;
    Ok(next)
}

/// Continuum fixation profile `psi` solving `psi'' + (beta + (alpha-beta)x) psi' = 0`,
/// `psi(0) = 0`, `psi(1) = 1`, optionally with the spectral gap attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationProfile<T> {
    pub alpha: T,
    pub beta: T,
    pub lambda0: Option<T>,
    shift: T,
    norm: T,
}

impl<T: Real> FixationProfile<T> {
    fn potential(&self, y: T) -> T {
        self.beta * y + (self.alpha - self.beta) * y * y / T::lit(2.0)
    }

    /// `w(y) = exp(-(beta y + (alpha-beta) y^2 / 2))`, rescaled so `max w = 1`.
    pub fn weight(&self, y: T) -> T {
        (self.shift - self.potential(y)).exp()
    }

    pub fn psi(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= T::one() {
            return T::one();
        }
        let tol = T::lit(DEFAULT_TOL) * T::lit(1e-2) * self.norm;
        let partial = quadrature::integrate(|y| self.weight(y), T::zero(), x, tol).unwrap_or(T::nan());
        partial / self.norm
    }

    /// `psi'` (the normalized weight).
    pub fn psi_prime(&self, x: T) -> T {
        self.weight(x) / self.norm
    }

    /// `psi` on an increasing grid by accumulating integrals between grid points.
    pub fn psi_on_grid(&self, xs: &[T]) -> Vec<T> {
        let tol = T::lit(DEFAULT_TOL) * T::lit(1e-2) * self.norm;
        let mut acc = T::zero();
        let mut prev = T::zero();
        xs.iter()
            .map(|&x| {
                let x = x.max(T::zero()).min(T::one());
                acc = acc + quadrature::integrate(|y| self.weight(y), prev, x, tol).unwrap_or(T::nan());
                prev = x;
                acc / self.norm
            })
            .collect()
    }

    /// Cell averages of `psi` on a uniform grid (7-point Gauss rule per cell),
    /// the pairing that matches a piecewise-constant density.
    pub fn cell_averages(&self, cells: usize) -> Vec<T> {
        const NODES: [f64; 7] = [
            -0.949_107_912_342_758_5,
            -0.741_531_185_599_394_4,
            -0.405_845_151_377_397_2,
            0.0,
            0.405_845_151_377_397_2,
            0.741_531_185_599_394_4,
            0.949_107_912_342_758_5,
        ];
        const WEIGHTS: [f64; 7] = [
            0.129_484_966_168_869_7,
            0.279_705_391_489_276_7,
            0.381_830_050_505_118_9,
            0.417_959_183_673_469_4,
            0.381_830_050_505_118_9,
            0.279_705_391_489_276_7,
            0.129_484_966_168_869_7,
        ];
        let h = T::one() / T::of(cells);
        let half = h / T::lit(2.0);
        let nodes: Vec<T> = cell_centers::<T>(cells)
            .into_iter()
            .flat_map(|c| NODES.iter().map(move |g| c + T::lit(*g) * half))
            .collect();
        let values = self.psi_on_grid(&nodes);
        values
            .chunks(NODES.len())
            .map(|cell| cell.iter().zip(WEIGHTS).map(|(v, w)| *v * T::lit(w)).sum::<T>() / T::lit(2.0))
            .collect()
    }

    pub fn with_spectral_gap(mut self, cells: usize) -> Result<Self> {
        self.lambda0 = Some(spectral_gap(self.alpha, self.beta, cells)?);
        Ok(self)
    }
}

/// `psi` for the drift parameters `(alpha, beta)`.
pub fn psi_profile<T: Real>(alpha: T, beta: T) -> FixationProfile<T> {
    let pot = |y: T| beta * y + (alpha - beta) * y * y / T::lit(2.0);
    // R is quadratic: its minimum over [0, 1] is at an endpoint or the vertex.
    let mut shift = pot(T::zero()).min(pot(T::one()));
    if alpha != beta {
        let vertex = beta / (beta - alpha);
        if vertex > T::zero() && vertex < T::one() {
            shift = shift.min(pot(vertex));
        }
    }
    let mut profile = FixationProfile { alpha, beta, lambda0: None, shift, norm: T::one() };
    let tol = T::lit(DEFAULT_TOL) * T::lit(1e-2);
    profile.norm = quadrature::integrate(|y| profile.weight(y), T::zero(), T::one(), tol).unwrap_or(T::nan());
    profile
}

/// Initial datum `a0 delta_0 + b0 delta_1 + q0`, rescaled to unit mass.
#[derive(Clone)]
pub struct InitialDensity<T> {
    interior: Arc<dyn Fn(T) -> T + Send + Sync>,
    a0: T,
    b0: T,
    scale: T,
    raw_mass: T,
}

impl<T: Real> std::fmt::Debug for InitialDensity<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialDensity")
            .field("a0", &self.a0)
            .field("b0", &self.b0)
            .field("raw_mass", &self.raw_mass)
            .finish_non_exhaustive()
    }
}

/// Mass deviation above which the datum is renormalized with a warning.
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl<T: Real> InitialDensity<T> {
    pub fn new<F>(interior: F, a0: T, b0: T) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        let interior: Arc<dyn Fn(T) -> T + Send + Sync> = Arc::new(interior);
        let f = interior.clone();
        let q_mass = quadrature::integrate(move |x| f(x), T::zero(), T::one(), T::lit(1e-13))?;
        let raw_mass = q_mass + a0 + b0;
        if !(raw_mass > T::zero()) || !raw_mass.is_finite() || a0 < T::zero() || b0 < T::zero() {
            return Err(MoranError::BadMass(raw_mass.to_f64().unwrap_or(f64::NAN)));
        }
        let scale = T::one() / raw_mass;
        if (raw_mass - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
            log::warn!("initial density has mass {raw_mass}; renormalizing to 1");
        }
        Ok(Self { interior, a0, b0, scale, raw_mass })
    }

    pub fn from_fn<F>(interior: F) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::new(interior, T::zero(), T::zero())
    }

    /// Normalized interior density.
    pub fn interior(&self, x: T) -> T {
        (self.interior)(x) * self.scale
    }

    pub fn a0(&self) -> T {
        self.a0 * self.scale
    }

    pub fn b0(&self) -> T {
        self.b0 * self.scale
    }

    /// Mass before renormalization.
    pub fn raw_mass(&self) -> T {
        self.raw_mass
    }

    /// `Some(mass)` when the datum was off by more than [`NORMALIZATION_TOL`].
    pub fn normalization_warning(&self) -> Option<T> {
        ((self.raw_mass - T::one()).abs() > T::lit(NORMALIZATION_TOL)).then_some(self.raw_mass)
    }
}

/// `pi1[p0] = int_0^1 [int_y^1 p0] w(y) dy / int_0^1 w`.
pub fn fixation_probability<T: Real>(p0: &InitialDensity<T>, alpha: T, beta: T) -> Result<T> {
    fixation_with_profile(p0, &psi_profile(alpha, beta))
}

pub(crate) fn fixation_with_profile<T: Real>(p0: &InitialDensity<T>, profile: &FixationProfile<T>) -> Result<T> {
    let inner_tol = T::lit(1e-13);
    let tail = |y: T| -> T {
        p0.b0() + quadrature::integrate(|x| p0.interior(x), y, T::one(), inner_tol).unwrap_or(T::nan())
    };
    let outer = quadrature::integrate(|y| tail(y) * profile.weight(y), T::zero(), T::one(), T::lit(1e-12) * profile.norm)?;
    Ok(outer / profile.norm)
}

/// Spectral gap of the unscaled operator on `cells` cells.
pub fn spectral_gap<T: Real>(alpha: T, beta: T, cells: usize) -> Result<T> {
    spectral_gap_of(ForwardProblem::new(alpha, beta), cells)
}

pub fn spectral_gap_of<T: Real>(problem: ForwardProblem<T>, cells: usize) -> Result<T> {
    if cells < 64 {
        return Err(MoranError::OutOfRange(format!("spectral gap needs at least 64 cells, got {cells}")));
    }
    CompleteOperator::new(problem, cells)?.spectral_gap()
}

/// Strong-selection form `d_t q = eps d_xx(x(1-x) q) - d_x(x(1-x)(x(alpha-beta)+beta) q)`.
///
/// Equivalent to the unscaled equation with drift `(alpha, beta) / eps` in the
/// time variable `t' = t / eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongSelection<T> {
    pub problem: ForwardProblem<T>,
    /// Factor converting rescaled time to unscaled time (`1 / eps`).
    pub time_scale: T,
}

impl<T: Real> StrongSelection<T> {
    /// Unscaled drift parameters `(alpha / eps, beta / eps)`.
    pub fn unscaled_drift(&self) -> (T, T) {
        (self.problem.alpha * self.time_scale, self.problem.beta * self.time_scale)
    }
}

pub fn rescale_strong_selection<T: Real>(alpha: T, beta: T, epsilon: T) -> Result<StrongSelection<T>> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(MoranError::OutOfRange(format!("epsilon = {epsilon} not in (0, 1]")));
    }
    Ok(StrongSelection {
        problem: ForwardProblem::with_diffusion(alpha, beta, epsilon)?,
        time_scale: T::one() / epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_profile(gamma: f64, x: f64) -> f64 {
        (1.0 - (-gamma * x).exp()) / (1.0 - (-gamma).exp())
    }

    #[test]
    fn diracs_are_stationary() {
        let op = CompleteOperator::new(ForwardProblem::new(-3.0, 5.0), 64).unwrap();
        let mut f = DensityField::new(vec![0.0; 64], 0.3, 0.7);
        op.advance(&mut f, 0.5, TimeScheme::Explicit { cfl: 0.9 }).unwrap();
        assert_eq!((f.a, f.b), (0.3, 0.7));
        assert!(f.q.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn explicit_rejects_unstable_step() {
        let f = DensityField::from_density(64, |_| 1.0, 0.0, 0.0);
        assert!(matches!(step_complete(&f, 1.0, 1.0, 1.0), Err(MoranError::Unstable { .. })));
    }

    #[test]
    fn neutral_uniform_decays_like_exp_minus_2t() {
        let cells = 256;
        let op = CompleteOperator::new(ForwardProblem::new(0.0, 0.0), cells).unwrap();
        let mut f = DensityField::from_density(cells, |_| 1.0, 0.0, 0.0);
        op.advance(&mut f, 0.25, TimeScheme::Explicit { cfl: 0.5 }).unwrap();
        let expected = (-0.5_f64).exp();
        // interior cells away from the endpoints stay close to the exact eigenfunction
        let mid = f.q[cells / 2];
        assert!((mid - expected).abs() < 2e-2, "{mid} vs {expected}");
        assert!((f.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_closed_forms() {
        let p = psi_profile(0.0_f64, 0.0);
        for x in [0.1, 0.5, 0.9] {
            assert!((p.psi(x) - x).abs() < 1e-12);
        }
        let gamma = 7.0;
        let p = psi_profile(gamma, gamma);
        for x in [0.05, 0.3, 0.77] {
            assert!((p.psi(x) - logistic_profile(gamma, x)).abs() < 1e-10);
        }
        let p = psi_profile(-6.0_f64, 6.0);
        assert!((p.psi(0.5) - 0.5).abs() < 1e-10);
        assert_eq!(p.psi(0.0), 0.0);
        assert_eq!(p.psi(1.0), 1.0);
    }

    #[test]
    fn psi_with_alpha_zero_solves_its_ode() {
        // alpha = 0, beta = g: psi' ∝ exp(-g x + g x^2 / 2)
        let g = 5.0_f64;
        let p = psi_profile(0.0, g);
        let h = 1e-4;
        for x in [0.2, 0.5, 0.8] {
            let d1 = (p.psi(x + h) - p.psi(x - h)) / (2.0 * h);
            let d2 = (p.psi(x + h) - 2.0 * p.psi(x) + p.psi(x - h)) / (h * h);
            assert!((d2 + g * (1.0 - x) * d1).abs() < 1e-4, "x = {x}");
        }
    }

    #[test]
    fn psi_grid_matches_pointwise() {
        let p = psi_profile(-20.0_f64, 20.0);
        let xs: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        for (x, v) in xs.iter().zip(p.psi_on_grid(&xs)) {
            assert!((v - p.psi(*x)).abs() < 1e-11);
        }
    }

    #[test]
    fn strong_selection_profile_does_not_overflow() {
        let p = psi_profile(-800.0_f64, 800.0);
        assert!((p.psi(0.5) - 0.5).abs() < 1e-9);
        assert!(p.psi(0.2).is_finite());
    }

    #[test]
    fn fixation_of_neutral_uniform() {
        let p0 = InitialDensity::from_fn(|_| 1.0_f64).unwrap();
        assert!((fixation_probability(&p0, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(p0.normalization_warning().is_none());
    }

    #[test]
    fn fixation_of_narrow_bump_approaches_psi() {
        // a narrow normalized bump around x0 tends to delta_{x0}
        let x0 = 0.3_f64;
        let width = 5e-3_f64;
        let bump = move |x: f64| {
            let z = (x - x0) / width;
            (-0.5 * z * z).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
        };
        let p0 = InitialDensity::from_fn(bump).unwrap();
        let pi1 = fixation_probability(&p0, 3.0, -2.0).unwrap();
        let psi = psi_profile(3.0, -2.0).psi(x0);
        assert!((pi1 - psi).abs() < 1e-4, "{pi1} vs {psi}");
    }

    #[test]
    fn renormalizes_with_warning() {
        let p0 = InitialDensity::from_fn(|x: f64| x * (1.0 - x) / 6.0).unwrap();
        let m = p0.normalization_warning().unwrap();
        assert!((m - 1.0 / 36.0).abs() < 1e-14);
        assert!((p0.interior(0.5) - 1.5).abs() < 1e-12);
        assert!(InitialDensity::from_fn(|_: f64| 0.0).is_err());
        assert!(InitialDensity::from_fn(|_: f64| -1.0).is_err());
    }

    #[test]
    fn rescaling_identity_and_errors() {
        let s = rescale_strong_selection(-2.0_f64, 3.0, 1.0).unwrap();
        assert_eq!(s.problem, ForwardProblem::new(-2.0, 3.0));
        assert_eq!(s.time_scale, 1.0);
        assert!(rescale_strong_selection(1.0_f64, 1.0, 0.0).is_err());
        assert!(rescale_strong_selection(1.0_f64, 1.0, -0.1).is_err());
        let s = rescale_strong_selection(-2.0_f64, 3.0, 0.25).unwrap();
        assert_eq!(s.unscaled_drift(), (-8.0, 12.0));
    }

    #[test]
    fn discrete_psi_is_conserved() {
        let op = CompleteOperator::new(ForwardProblem::new(-4.0_f64, 9.0), 128).unwrap();
        let mut f = DensityField::from_density(128, |x: f64| 20.0 * x.powi(3) * (1.0 - x), 0.0, 0.0);
        let before = op.discrete_fixation(&f);
        op.advance(&mut f, 0.3, TimeScheme::Explicit { cfl: 0.9 }).unwrap();
        assert!((op.discrete_fixation(&f) - before).abs() < 1e-13);
        op.advance(&mut f, 5.0, TimeScheme::Implicit { dt: 0.01 }).unwrap();
        assert!((op.discrete_fixation(&f) - before).abs() < 1e-13);
    }

    #[test]
    fn spectral_gap_requires_resolution() {
        assert!(spectral_gap(0.0_f64, 0.0, 32).is_err());
        let lam = spectral_gap(0.0_f64, 0.0, 512).unwrap();
        assert!((lam - 2.0).abs() < 1e-2, "{lam}");
    }
}
