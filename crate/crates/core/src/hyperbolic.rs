//! Pure-drift limit `d_t p = -d_x(x(1-x)(x alpha + (1-x) beta) p)` and the
//! replicator ODE `X' = X(1-X)(X(alpha-beta) + beta)` whose flow carries it.
//!
//! For an autonomous scalar flow `dPhi_{-t}/dx (x) = f(Phi_{-t} x) / f(x)`, so
//! the characteristics solution is `q0(Phi_{-t} x)` times that Jacobian. The
//! Jacobian is smooth through the zeros of `f`, where it equals
//! `exp(-f'(x) t)`.

use crate::error::{MoranError, Result};
use crate::forward::{argmax, cell_centers, DensityField, InitialDensity};
use crate::ode::{self, Tolerance};
use crate::quadrature;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct ReplicatorFlow<T> {
    pub alpha: T,
    pub beta: T,
    pub tol: Tolerance<T>,
}

impl<T: Real> ReplicatorFlow<T> {
    pub fn new(alpha: T, beta: T) -> Self {
        Self { alpha, beta, tol: Tolerance::default() }
    }

    /// Per-capita growth `x(alpha - beta) + beta`.
    pub fn growth(&self, x: T) -> T {
        self.beta + (self.alpha - self.beta) * x
    }

    pub fn field(&self, x: T) -> T {
        x * (T::one() - x) * self.growth(x)
    }

    pub fn field_derivative(&self, x: T) -> T {
        (T::one() - T::lit(2.0) * x) * self.growth(x) + x * (T::one() - x) * (self.alpha - self.beta)
    }

    /// Interior rest point `beta / (beta - alpha)` when it lies in `(0, 1)`.
    pub fn x_star(&self) -> Option<T> {
        if self.alpha == self.beta {
            return None;
        }
        let x = self.beta / (self.beta - self.alpha);
        (x > T::zero() && x < T::one()).then_some(x)
    }

    fn is_rest_point(&self, x: T) -> bool {
        x == T::zero() || x == T::one() || self.growth(x) == T::zero() || Some(x) == self.x_star()
    }

    /// Rest point the trajectory through `x0` approaches when followed for
    /// time of sign `t`.
    fn heading(&self, x0: T, t: T) -> T {
        let up = (self.field(x0) > T::zero()) == (t > T::zero());
        match (self.x_star(), up) {
            (Some(s), true) if s > x0 => s,
            (_, true) => T::one(),
            (Some(s), false) if s < x0 => s,
            _ => T::zero(),
        }
    }

    /// Field at `r + w` evaluated without cancellation when `r` is a rest point.
    fn field_near(&self, r: T, w: T) -> T {
        let x = r + w;
        let left = if r == T::zero() { w } else { x };
        let right = if r == T::one() { -w } else { T::one() - x };
        let growth = if Some(r) == self.x_star() { (self.alpha - self.beta) * w } else { self.growth(x) };
        left * right * growth
    }

    /// `Phi_t(x0)`; negative `t` integrates the reversed field.
    ///
    /// The offset from the rest point being approached is integrated with a
    /// purely relative tolerance, so exponentially small distances to `0`,
    /// `1` or `x*` keep their relative accuracy.
    pub fn flow(&self, x0: T, t: T) -> T {
        let (r, w) = self.flow_offset(x0, t);
        (r + w).max(T::zero()).min(T::one())
    }

    /// `Phi_t(x0)` as `(r, w)` with `Phi_t(x0) = r + w` and `r` a rest point
    /// (or `x0` itself when nothing moves).
    ///
    /// The offset is taken from the rest point the trajectory leaves until it
    /// is halfway to the one it approaches, and from the latter afterwards.
    pub fn flow_offset(&self, x0: T, t: T) -> (T, T) {
        if self.is_rest_point(x0) || t == T::zero() {
            return (x0, T::zero());
        }
        let r = self.heading(x0, t);
        let s = self.heading(x0, -t);
        let tol = Tolerance { rel: self.tol.rel, abs: T::zero() };
        let half = (r - s).abs() / T::lit(2.0);
        let (mut start, mut left) = (x0 - r, t);
        if (x0 - s).abs() < half {
            let (ws, spent) = ode::solve_until(|w| self.field_near(s, w), x0 - s, t, tol, |w| w.abs() >= half);
            if ws.abs() < half {
                return (s, ws);
            }
            (start, left) = (s + ws - r, t - spent);
        }
        (r, ode::solve(|w| self.field_near(r, w), start, left, tol))
    }

    /// `d Phi_t / dx` at `x`.
    pub fn jacobian(&self, x: T, t: T) -> T {
        let fx = self.field(x);
        // near a rest point the ratio loses digits; use the linearization
        if fx.abs() <= T::lit(1e3) * T::epsilon() {
            return (self.field_derivative(x) * t).exp();
        }
        let y = self.flow(x, t);
        (self.field(y) / fx).abs()
    }
}

/// `Phi_t(x0)` for the replicator dynamics with drift parameters `(alpha, beta)`.
pub fn flow<T: Real>(x0: T, t: T, alpha: T, beta: T) -> Result<T> {
    if !(x0 >= T::zero() && x0 <= T::one()) {
        return Err(MoranError::OutOfRange(format!("x0 = {x0} not in [0, 1]")));
    }
    Ok(ReplicatorFlow::new(alpha, beta).flow(x0, t))
}

/// Long-time behaviour of the pure-drift equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote<T> {
    /// `c delta_0 + (1 - c) delta_1`.
    Split { c: T },
    /// Everything concentrates at the stable interior rest point.
    Interior { x_star: T },
    /// Zero drift: the initial datum does not move.
    Stationary,
}

/// Characteristics solution of the pure-drift equation.
#[derive(Debug, Clone)]
pub struct HyperbolicSolution<T: Real> {
    pub init: InitialDensity<T>,
    pub flow: ReplicatorFlow<T>,
}

impl<T: Real> HyperbolicSolution<T> {
    pub fn new(init: InitialDensity<T>, alpha: T, beta: T) -> Self {
        Self { init, flow: ReplicatorFlow::new(alpha, beta) }
    }

    /// Interior density `p(t, x)` for `x` in `[0, 1]`.
    pub fn density_at(&self, x: T, t: T) -> T {
        let back = self.flow.flow(x, -t);
        self.init.interior(back) * self.flow.jacobian(x, -t)
    }

    /// `int h dp(t) = a0 h(0) + b0 h(1) + int q0(x0) h(Phi_t x0) dx0`.
    pub fn integrate_against<F: Fn(T) -> T>(&self, h: F, t: T, tol: T) -> Result<T> {
        let interior = quadrature::integrate(
            |x0| {
                let q = self.init.interior(x0);
                if q == T::zero() {
                    T::zero()
                } else {
                    q * h(self.flow.flow(x0, t))
                }
            },
            T::zero(),
            T::one(),
            tol,
        )?;
        let mut total = interior;
        if self.init.a0() > T::zero() {
            total = total + self.init.a0() * h(T::zero());
        }
        if self.init.b0() > T::zero() {
            total = total + self.init.b0() * h(T::one());
        }
        Ok(total)
    }

    /// Exact cell averages of the interior density on `cells` uniform cells:
    /// the mass in `[x_l, x_r]` is the initial mass in `[Phi_{-t} x_l, Phi_{-t} x_r]`.
    pub fn cell_averages(&self, t: T, cells: usize) -> Result<Vec<T>> {
        let h = T::one() / T::of(cells);
        let pre: Vec<T> = (0..=cells).map(|j| self.flow.flow(T::of(j) * h, -t)).collect();
        pre.windows(2)
            .map(|w| {
                if w[1] <= w[0] {
                    return Ok(T::zero());
                }
                quadrature::integrate(|x| self.init.interior(x), w[0], w[1], T::lit(1e-12)).map(|m| m / h)
            })
            .collect()
    }

    pub fn asymptote(&self) -> Result<Asymptote<T>> {
        let f = &self.flow;
        if f.alpha == T::zero() && f.beta == T::zero() {
            return Ok(Asymptote::Stationary);
        }
        let mass_below = |x: T| -> Result<T> {
            quadrature::integrate(|y| self.init.interior(y), T::zero(), x, T::lit(1e-13))
        };
        let interior_mass = mass_below(T::one())?;
        match f.x_star() {
            Some(x) if f.alpha < T::zero() => Ok(Asymptote::Interior { x_star: x }),
            Some(x) => Ok(Asymptote::Split { c: self.init.a0() + mass_below(x)? }),
            None => {
                // growth has one sign on (0, 1)
                let mid = f.growth(T::lit(0.5));
                if mid > T::zero() {
                    Ok(Asymptote::Split { c: self.init.a0() })
                } else {
                    Ok(Asymptote::Split { c: self.init.a0() + interior_mass })
                }
            }
        }
    }
}

/// Density snapshot on a grid together with the (time-independent) endpoint masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    pub x: Vec<T>,
    pub p: Vec<T>,
    pub a: T,
    pub b: T,
}

impl<T: Real> Snapshot<T> {
    pub fn peak(&self) -> T {
        self.x[argmax(&self.p)]
    }
}

/// Evaluates the characteristics solution on `grid` at time `t`.
pub fn solve_nodiffusion<T: Real>(init: &HyperbolicSolution<T>, t: T, grid: &[T]) -> Snapshot<T> {
    let p = if t == T::zero() {
        grid.iter().map(|&x| init.init.interior(x)).collect()
    } else {
        grid.iter().map(|&x| init.density_at(x, t)).collect()
    };
    Snapshot { t, x: grid.to_vec(), p, a: init.init.a0(), b: init.init.b0() }
}

/// `u = x(1-x)(beta + (alpha-beta) x) q`, constant along replicator trajectories.
pub fn lagrangian_density<T: Real>(q: &[T], grid: &[T], alpha: T, beta: T) -> Vec<T> {
    let flow = ReplicatorFlow::new(alpha, beta);
    grid.iter().zip(q).map(|(x, v)| flow.field(*x) * *v).collect()
}

/// Inverse of [`lagrangian_density`]; `NaN` at rest points where `u` carries no
/// information about `q`.
pub fn density_from_lagrangian<T: Real>(u: &[T], grid: &[T], alpha: T, beta: T) -> Vec<T> {
    let flow = ReplicatorFlow::new(alpha, beta);
    grid.iter()
        .zip(u)
        .map(|(x, v)| {
            let f = flow.field(*x);
            if f == T::zero() {
                T::nan()
            } else {
                *v / f
            }
        })
        .collect()
}

/// Something test functions can be integrated against.
pub trait Measure<T: Real> {
    fn integrate<F: Fn(T) -> T>(&self, h: F) -> Result<T>;
    /// Masses at `x = 0` and `x = 1`.
    fn endpoint_atoms(&self) -> (T, T);

    fn integrate_lyapunov(&self, phi: &LyapunovWeight<T>) -> Result<T> {
        self.integrate(|x| phi.eval(x))
    }
}

/// `delta_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass<T>(pub T);

impl<T: Real> Measure<T> for PointMass<T> {
    fn integrate<F: Fn(T) -> T>(&self, h: F) -> Result<T> {
        Ok(h(self.0))
    }

    fn endpoint_atoms(&self) -> (T, T) {
        let z = T::zero();
        (if self.0 == z { T::one() } else { z }, if self.0 == T::one() { T::one() } else { z })
    }
}

/// Pushforward of the initial datum by the flow at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Transported<'a, T: Real> {
    pub solution: &'a HyperbolicSolution<T>,
    pub t: T,
    pub tol: T,
}

impl<T: Real> Measure<T> for Transported<'_, T> {
    fn integrate<F: Fn(T) -> T>(&self, h: F) -> Result<T> {
        self.solution.integrate_against(h, self.t, self.tol)
    }

    fn endpoint_atoms(&self) -> (T, T) {
        (self.solution.init.a0(), self.solution.init.b0())
    }

    /// Evaluates `phi` from the offset to the rest point being approached, so
    /// the exponentially small values near `x*` keep their relative accuracy.
    fn integrate_lyapunov(&self, phi: &LyapunovWeight<T>) -> Result<T> {
        let flow = &self.solution.flow;
        quadrature::integrate(
            |x0| {
                let q = self.solution.init.interior(x0);
                if q == T::zero() {
                    return T::zero();
                }
                let (r, w) = flow.flow_offset(x0, self.t);
                q * phi.eval_offset(r, w, flow.x_star())
            },
            T::zero(),
            T::one(),
            self.tol,
        )
    }
}

impl<T: Real> Measure<T> for Snapshot<T> {
    /// Trapezoid rule on the snapshot grid plus endpoint masses.
    fn integrate<F: Fn(T) -> T>(&self, h: F) -> Result<T> {
        let mut total = T::zero();
        for i in 1..self.x.len() {
            let (x0, x1) = (self.x[i - 1], self.x[i]);
            let v0 = if self.p[i - 1] == T::zero() { T::zero() } else { self.p[i - 1] * h(x0) };
            let v1 = if self.p[i] == T::zero() { T::zero() } else { self.p[i] * h(x1) };
            total = total + (x1 - x0) * (v0 + v1) / T::lit(2.0);
        }
        Ok(total)
    }

    fn endpoint_atoms(&self) -> (T, T) {
        (self.a, self.b)
    }
}

impl<T: Real> Measure<T> for DensityField<T> {
    /// Midpoint rule on the cells plus endpoint masses.
    fn integrate<F: Fn(T) -> T>(&self, h: F) -> Result<T> {
        let mut interior = T::zero();
        for (x, q) in self.centers().into_iter().zip(&self.q) {
            if *q != T::zero() {
                interior = interior + *q * h(x);
            }
        }
        Ok(interior * self.dx())
    }

    fn endpoint_atoms(&self) -> (T, T) {
        (self.a, self.b)
    }
}

/// Lyapunov weight `phi(x) = |x(alpha-beta)+beta|^{(alpha-beta)/(alpha beta)} x^{-1/beta} (1-x)^{1/alpha}`
/// for Hawk-Dove drift (`alpha < 0 < beta`); it satisfies `f phi' = -phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeight<T> {
    alpha: T,
    beta: T,
}

impl<T: Real> LyapunovWeight<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha < T::zero() && beta > T::zero()) {
            return Err(MoranError::OutOfRange(format!(
                "Lyapunov weight needs alpha < 0 < beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_offset(x, T::zero(), None)
    }

    /// `phi(r + w)`, taking `|g|`, `x` or `1 - x` from `w` when `r` is `x*`, `0` or `1`.
    pub fn eval_offset(&self, r: T, w: T, x_star: Option<T>) -> T {
        let (a, b) = (self.alpha, self.beta);
        let x = r + w;
        let g = if Some(r) == x_star { ((a - b) * w).abs() } else { (x * (a - b) + b).abs() };
        let left = if r == T::zero() { w } else { x };
        let right = if r == T::one() { -w } else { T::one() - x };
        if g == T::zero() {
            return T::zero();
        }
        let k = (a - b) / (a * b);
        (k * g.ln() - left.ln() / b + right.ln() / a).exp()
    }
}

/// `int phi dp`; decays exactly like `e^{-t}` along the pure-drift equation.
pub fn lyapunov_moment<T: Real, M: Measure<T>>(p: &M, alpha: T, beta: T) -> Result<T> {
    let phi = LyapunovWeight::new(alpha, beta)?;
    let (a, b) = p.endpoint_atoms();
    if a > T::zero() || b > T::zero() {
        return Err(MoranError::OutOfRange("Lyapunov weight is infinite at the endpoints".into()));
    }
    p.integrate_lyapunov(&phi)
}

/// First-order upwind finite-volume solver for the pure-drift equation, used
/// to cross-check the characteristics formula.
#[derive(Debug, Clone)]
pub struct UpwindSolver<T> {
    h: T,
    face_velocity: Vec<T>,
}

impl<T: Real> UpwindSolver<T> {
    pub fn new(alpha: T, beta: T, cells: usize) -> Self {
        let flow = ReplicatorFlow::new(alpha, beta);
        let h = T::one() / T::of(cells);
        let face_velocity = (0..=cells).map(|j| flow.field(T::of(j) * h)).collect();
        Self { h, face_velocity }
    }

    pub fn cells(&self) -> usize {
        self.face_velocity.len() - 1
    }

    pub fn stable_dt(&self) -> T {
        let m = self.cells();
        let worst = (0..m)
            .map(|i| self.face_velocity[i + 1].max(T::zero()) + (-self.face_velocity[i]).max(T::zero()))
            .fold(T::zero(), T::max);
        self.h / worst
    }

    pub fn step(&self, q: &mut [T], dt: T) {
        let m = q.len();
        let mut flux = vec![T::zero(); m + 1];
        for j in 1..m {
            let v = self.face_velocity[j];
            flux[j] = if v > T::zero() { v * q[j - 1] } else { v * q[j] };
        }
        for i in 0..m {
            q[i] = q[i] - dt / self.h * (flux[i + 1] - flux[i]);
        }
    }

    /// Advances cell averages `q` by `t` at `cfl` times the stable step.
    pub fn advance(&self, q: &mut [T], t: T, cfl: T) {
        let nominal = cfl * self.stable_dt();
        let steps = (t / nominal).ceil().to_usize().unwrap_or(1).max(1);
        let dt = t / T::of(steps);
        for _ in 0..steps {
            self.step(q, dt);
        }
    }

    pub fn centers(&self) -> Vec<T> {
        cell_centers(self.cells())
    }
}
