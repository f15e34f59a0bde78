//! Large-population expansion of the transition kernel.
//!
//! At fixed `N` the shifted probabilities are expanded in the lattice spacing
//! `h = 1/N`:
//!
//! ```text
//! c+(xN - 1, N) = c+^(0) + h c+^(1) + h^2/2 c+^(2) + ...,   c+^(i) = (-d_x)^i c+
//! c-(xN + 1, N) = c-^(0) + h c-^(1) + h^2/2 c-^(2) + ...,   c-^(i) = ( d_x)^i c-
//! c0(xN, N)     = c0^(0)
//! ```
//!
//! The coefficients still depend on `N` through the payoffs. Their `N -> oo`
//! limits, and the limits of the selection-scaled combinations
//! `N^nu (c+^(0) - c-^(0))` and `N^nu (c+^(1) + c0^(1) + c-^(1))`, are
//! extracted by least-squares extrapolation in the powers `h^(i nu + j)` that
//! the kernel actually contains.

use crate::discrete::{step_probabilities, KernelVariant, ScaledGame};
use crate::error::{MoranError, Result};
use crate::scalar::Real;

pub const DEFAULT_POPULATIONS: [usize; 4] = [64, 128, 256, 512];
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Below this reciprocal condition number of the (column-scaled) fit the
/// extrapolation is rejected.
const MIN_RCOND: f64 = 1e-4;

/// `x(1-x)(x alpha + (1-x) beta)`.
pub fn drift_limit<T: Real>(game: &ScaledGame<T>, x: T) -> T {
    let (alpha, beta) = (game.alpha(), game.beta());
    x * (T::one() - x) * (x * alpha + (T::one() - x) * beta)
}

/// `-d/dx` of [`drift_limit`]: the limit of `N^nu (c+^(1) + c0^(1) + c-^(1))`.
pub fn first_order_sum_limit<T: Real>(game: &ScaledGame<T>, x: T) -> T {
    let (alpha, beta) = (game.alpha(), game.beta());
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    -(beta + two * (alpha - two * beta) * x - three * (alpha - beta) * x * x)
}

/// Uniform interior grid `k / (points + 1)`, `k = 1..=points`.
pub fn interior_grid<T: Real>(points: usize) -> Vec<T> {
    (1..=points).map(|k| T::of(k) / T::of(points + 1)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion<T> {
    pub x: Vec<T>,
    pub populations: Vec<usize>,
    /// Powers of `h` used in the extrapolation, starting at 0.
    pub exponents: Vec<T>,
    /// `[order][x]` limits of `c-^(i)`, `c0^(i)`, `c+^(i)`.
    pub cminus: [Vec<T>; 3],
    pub czero: [Vec<T>; 3],
    pub cplus: [Vec<T>; 3],
    /// Limit of `N^nu (c+^(0) - c-^(0))`.
    pub drift: Vec<T>,
    /// Limit of `N^nu (c+^(1) + c0^(1) + c-^(1))`.
    pub first_order_sum: Vec<T>,
    /// Largest misfit of any extrapolation at the sample sizes.
    pub residual: T,
    /// Largest change of any extrapolated limit when the smallest population
    /// is dropped: a Richardson estimate of the extrapolation error.
    pub error_estimate: T,
}

impl<T: Real> KernelExpansion<T> {
    /// `sum_* c_*^(i)` at every grid point.
    pub fn order_sum(&self, order: usize) -> Vec<T> {
        (0..self.x.len())
            .map(|k| self.cminus[order][k] + self.czero[order][k] + self.cplus[order][k])
            .collect()
    }
}

/// Sorted distinct exponents `i nu + j`, the first `count` of them.
fn exponents<T: Real>(nu: T, count: usize) -> Vec<T> {
    let mut all = Vec::new();
    for i in 0..=count {
        for j in 0..=count {
            all.push(T::of(i) * nu + T::of(j));
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite exponents"));
    let mut out: Vec<T> = Vec::with_capacity(count);
    for e in all {
        if out.last().map_or(true, |&l| e - l > T::lit(1e-9)) {
            out.push(e);
        }
        if out.len() == count {
            break;
        }
    }
    out
}

/// Least-squares fit of `samples[k] ~ sum_j coef_j s_k^{e_j}`, factored once
/// by modified Gram-Schmidt and reused for every right-hand side.
struct Extrapolator<T> {
    q: Vec<Vec<T>>,
    r: Vec<Vec<T>>,
    scale: Vec<T>,
    basis: Vec<Vec<T>>,
}

impl<T: Real> Extrapolator<T> {
    fn new(populations: &[usize], exps: &[T]) -> Result<Self> {
        let h_max = T::one() / T::of(populations[0]);
        let s: Vec<T> = populations.iter().map(|&n| T::one() / T::of(n) / h_max).collect();
        let basis: Vec<Vec<T>> = exps.iter().map(|&e| s.iter().map(|&v| v.powf(e)).collect()).collect();
        let cols = exps.len();
        let mut q: Vec<Vec<T>> = Vec::with_capacity(cols);
        let mut r = vec![vec![T::zero(); cols]; cols];
        let mut scale = Vec::with_capacity(cols);
        for j in 0..cols {
            let norm0 = basis[j].iter().map(|v| *v * *v).sum::<T>().sqrt();
            scale.push(norm0);
            let mut v: Vec<T> = basis[j].iter().map(|b| *b / norm0).collect();
            for (i, qi) in q.iter().enumerate() {
                let dot: T = qi.iter().zip(&v).map(|(a, b)| *a * *b).sum();
                r[i][j] = dot;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk = *vk - dot * *qk;
                }
            }
            let norm: T = v.iter().map(|a| *a * *a).sum::<T>().sqrt();
            r[j][j] = norm;
            if !(norm > T::lit(MIN_RCOND)) {
                return Err(MoranError::IllConditioned(format!(
                    "populations {populations:?} too close to separate {cols} terms (rcond {norm})"
                )));
            }
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
        Ok(Self { q, r, scale, basis })
    }

    /// Returns `(limit, max residual)`.
    fn fit(&self, samples: &[T]) -> (T, T) {
        let cols = self.q.len();
        let rhs: Vec<T> = self.q.iter().map(|qi| qi.iter().zip(samples).map(|(a, b)| *a * *b).sum()).collect();
        let mut coef = vec![T::zero(); cols];
        for i in (0..cols).rev() {
            let mut acc = rhs[i];
            for j in i + 1..cols {
                acc = acc - self.r[i][j] * coef[j];
            }
            coef[i] = acc / self.r[i][i];
        }
        for (c, s) in coef.iter_mut().zip(&self.scale) {
            *c = *c / *s;
        }
        let mut worst = T::zero();
        for (k, y) in samples.iter().enumerate() {
            let fitted: T = (0..cols).map(|j| coef[j] * self.basis[j][k]).sum();
            worst = worst.max((fitted - *y).abs());
        }
        (coef[0], worst)
    }
}

/// Per-`N` raw values at one grid point.
struct Raw<T> {
    // [order] for minus / zero / plus
    cminus: [T; 3],
    czero: [T; 3],
    cplus: [T; 3],
    drift: T,
    first_order_sum: T,
}

fn raw_at<T: Real>(game: &ScaledGame<T>, variant: KernelVariant, population: usize, x: T) -> Result<Raw<T>> {
    let big_n = T::of(population);
    let payoffs = game.payoffs_at_real(big_n)?;
    let n = x * big_n;
    let at = |m: T| step_probabilities(&payoffs, &m, &big_n, variant);
    let (m_lo, z_lo, p_lo) = at(n - T::one());
    let (m_0, z_0, p_0) = at(n);
    let (m_hi, z_hi, p_hi) = at(n + T::one());
    let two = T::lit(2.0);
    let nu_scale = big_n.powf(game.nu);
    // central differences are exact up to O(h^2) in the shift
    let d1 = |lo: T, hi: T| (hi - lo) / two * big_n;
    let d2 = |lo: T, mid: T, hi: T| (hi - two * mid + lo) * big_n * big_n;
    let _ = (z_lo, z_hi);
    // odd part in the shift of c+(n-s) + c0(n) + c-(n+s)
    let odd = ((p_lo + m_hi) - (p_hi + m_lo)) / two;
    Ok(Raw {
        cminus: [m_0, d1(m_lo, m_hi), d2(m_lo, m_0, m_hi)],
        czero: [z_0, T::zero(), T::zero()],
        cplus: [p_0, -d1(p_lo, p_hi), d2(p_lo, p_0, p_hi)],
        drift: nu_scale * (p_0 - m_0),
        first_order_sum: nu_scale * big_n * odd,
    })
}

/// Extrapolated expansion of the death-first kernel.
pub fn expand_kernel<T: Real>(game: &ScaledGame<T>, x_grid: &[T], populations: &[usize]) -> Result<KernelExpansion<T>> {
    expand_kernel_variant(game, x_grid, populations, KernelVariant::DeathFirst)
}

pub fn expand_kernel_variant<T: Real>(
    game: &ScaledGame<T>,
    x_grid: &[T],
    populations: &[usize],
    variant: KernelVariant,
) -> Result<KernelExpansion<T>> {
    if populations.len() < 3 {
        return Err(MoranError::InvalidState(format!(
            "need at least 3 population sizes, got {}",
            populations.len()
        )));
    }
    if populations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MoranError::InvalidState(format!("population sizes must increase: {populations:?}")));
    }
    if populations[0] < 4 {
        return Err(MoranError::PopulationTooSmall(populations[0]));
    }
    if let Some(x) = x_grid.iter().find(|x| !(**x > T::zero() && **x < T::one())) {
        return Err(MoranError::OutOfRange(format!("grid point {x} not interior to (0, 1)")));
    }
    let exps = exponents(game.nu, populations.len() - 1);
    let fit = Extrapolator::new(populations, &exps)?;
    let fine = Extrapolator::new(&populations[1..], &exps)?;

    let points = x_grid.len();
    let empty = || [vec![T::zero(); points], vec![T::zero(); points], vec![T::zero(); points]];
    let mut out = KernelExpansion {
        x: x_grid.to_vec(),
        populations: populations.to_vec(),
        exponents: exps,
        cminus: empty(),
        czero: empty(),
        cplus: empty(),
        drift: vec![T::zero(); points],
        first_order_sum: vec![T::zero(); points],
        residual: T::zero(),
        error_estimate: T::zero(),
    };
    for (k, &x) in x_grid.iter().enumerate() {
        let raws = populations
            .iter()
            .map(|&n| raw_at(game, variant, n, x))
            .collect::<Result<Vec<_>>>()?;
        let mut take = |pick: &dyn Fn(&Raw<T>) -> T| -> T {
            let samples: Vec<T> = raws.iter().map(pick).collect();
            let (limit, misfit) = fit.fit(&samples);
            let (fine_limit, _) = fine.fit(&samples[1..]);
            out.residual = out.residual.max(misfit);
            out.error_estimate = out.error_estimate.max((limit - fine_limit).abs());
            limit
        };
        for i in 0..3 {
            let m = take(&|r| r.cminus[i]);
            let z = take(&|r| r.czero[i]);
            let p = take(&|r| r.cplus[i]);
            out.cminus[i][k] = m;
            out.czero[i][k] = z;
            out.cplus[i][k] = p;
        }
        out.drift[k] = take(&|r| r.drift);
        out.first_order_sum[k] = take(&|r| r.first_order_sum);
    }
    Ok(out)
}

/// Which terms survive the limit with `Delta t = N^{-dt_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Balance {
    Degenerate,
    DriftOnly,
    DriftDiffusion,
}

pub fn classify_balance<T: Real>(nu: T, dt_exponent: T) -> Result<Balance> {
    if !(nu > T::zero() && dt_exponent > T::zero()) || !nu.is_finite() || !dt_exponent.is_finite() {
        return Err(MoranError::OutOfRange(format!(
            "exponents must be positive, got nu = {nu}, dt exponent = {dt_exponent}"
        )));
    }
    let tol = T::lit(1e-12);
    if (dt_exponent - (nu + T::one())).abs() > tol {
        return Ok(Balance::Degenerate);
    }
    if (nu - T::one()).abs() <= tol {
        Ok(Balance::DriftDiffusion)
    } else if nu < T::one() {
        Ok(Balance::DriftOnly)
    } else {
        Ok(Balance::Degenerate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_sets() {
        assert_eq!(exponents(1.0_f64, 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(exponents(0.5_f64, 4), vec![0.0, 0.5, 1.0, 1.5]);
        let e = exponents(0.7_f64, 4);
        assert!((e[1] - 0.7).abs() < 1e-12 && (e[2] - 1.0).abs() < 1e-12 && (e[3] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn balances() {
        assert_eq!(classify_balance(1.0_f64, 2.0).unwrap(), Balance::DriftDiffusion);
        assert_eq!(classify_balance(0.5_f64, 1.5).unwrap(), Balance::DriftOnly);
        assert_eq!(classify_balance(1.0_f64, 3.0).unwrap(), Balance::Degenerate);
        assert_eq!(classify_balance(1.5_f64, 2.5).unwrap(), Balance::Degenerate);
        assert!(classify_balance(0.0_f64, 1.0).is_err());
        assert!(classify_balance(1.0_f64, -1.0).is_err());
    }

    #[test]
    fn drift_examples() {
        let g = ScaledGame::new(0.0_f64, 20.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(drift_limit(&g, 0.5), 2.5);
        let hd = ScaledGame::from_drift(-20.0_f64, 20.0);
        assert_eq!(drift_limit(&hd, 0.5), 0.0);
        let same = ScaledGame::from_drift(20.0_f64, 20.0);
        assert!((drift_limit(&same, 0.25) - 3.75).abs() < 1e-14);
        for x in [0.0, 1.0] {
            assert_eq!(drift_limit(&g, x), 0.0);
        }
    }

    #[test]
    fn rejects_bad_population_lists() {
        let g = ScaledGame::from_drift(1.0_f64, 2.0);
        let grid = [0.5];
        assert!(expand_kernel(&g, &grid, &[64, 128]).is_err());
        assert!(expand_kernel(&g, &grid, &[128, 64, 256]).is_err());
        assert!(matches!(
            expand_kernel(&g, &grid, &[500, 501, 502, 503]),
            Err(MoranError::IllConditioned(_))
        ));
        assert!(expand_kernel(&g, &[1.0], &DEFAULT_POPULATIONS).is_err());
    }

    #[test]
    fn half_payoff_drift_extrapolates() {
        let g = ScaledGame::new(0.0_f64, 20.0, 0.0, 0.0, 1.0).unwrap();
        let e = expand_kernel(&g, &[0.5], &DEFAULT_POPULATIONS).unwrap();
        assert!((e.drift[0] - 2.5).abs() < 1e-4);
        assert!((e.drift[0] - 2.5).abs() <= 2.0 * e.error_estimate, "{} {}", e.drift[0], e.error_estimate);
    }
}
