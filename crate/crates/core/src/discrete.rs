//! Exact finite-population Moran process.
//!
//! A step removes one individual uniformly at random, lets the survivors play
//! the 2x2 game against each other and copies one survivor chosen with
//! probability proportional to its mean payoff. The chain on the number `n` of
//! type I individuals is a birth-death chain with absorbing endpoints.

use crate::error::{MoranError, Result};
use crate::scalar::{Real, Scalar};
use crate::tridiag;

/// 2x2 game. Row player I earns `a` against I and `b` against II; row player II
/// earns `c` against I and `d` against II.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> PayoffMatrix<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let game = Self { a, b, c, d };
        game.validate()?;
        Ok(game)
    }

    pub fn neutral() -> Self {
        Self { a: T::one(), b: T::one(), c: T::one(), d: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            if *v <= T::zero() {
                return Err(MoranError::NonPositivePayoff(format!("{name} = {v:?}")));
            }
        }
        Ok(())
    }

    /// `C > A > 0` and `B > D > 0`.
    pub fn is_hawk_dove(&self) -> bool {
        self.c > self.a && self.a > T::zero() && self.b > self.d && self.d > T::zero()
    }
}

/// Payoffs approaching one as `1 + (a, b, c, d) / N^nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledGame<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub nu: T,
}

impl<T: Real> ScaledGame<T> {
    pub fn new(a: T, b: T, c: T, d: T, nu: T) -> Result<Self> {
        if !(nu > T::zero() && nu <= T::one()) {
            return Err(MoranError::OutOfRange(format!("scaling exponent nu = {nu} not in (0, 1]")));
        }
        Ok(Self { a, b, c, d, nu })
    }

    /// Weak-selection scaling `nu = 1` with the given drift parameters.
    pub fn from_drift(alpha: T, beta: T) -> Self {
        Self { a: alpha, b: beta, c: T::zero(), d: T::zero(), nu: T::one() }
    }

    pub fn alpha(&self) -> T {
        self.a - self.c
    }

    pub fn beta(&self) -> T {
        self.b - self.d
    }

    pub fn is_hawk_dove(&self) -> bool {
        self.alpha() < T::zero() && self.beta() > T::zero()
    }

    pub fn payoffs_at(&self, population: usize) -> Result<PayoffMatrix<T>> {
        self.payoffs_at_real(T::of(population))
    }

    pub(crate) fn payoffs_at_real(&self, population: T) -> Result<PayoffMatrix<T>> {
        let s = population.powf(-self.nu);
        PayoffMatrix::new(
            T::one() + self.a * s,
            T::one() + self.b * s,
            T::one() + self.c * s,
            T::one() + self.d * s,
        )
    }
}

/// Order in which the death and birth events of a step happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelVariant {
    /// Victim first; survivors play each other (self-play excluded).
    #[default]
    DeathFirst,
    /// Reproducer first among all N (fitness against the other N-1), then a
    /// uniformly chosen individual is replaced.
    BirthFirst,
}

/// `(c-, c0, c+)` at state `n` of a population of size `population`.
///
/// `n` may be any value with `0 < n < population`; the kernel builder pins the
/// endpoints separately. Real-valued `n` is used by the expansion module.
pub fn step_probabilities<T: Scalar>(
    game: &PayoffMatrix<T>,
    n: &T,
    population: &T,
    variant: KernelVariant,
) -> (T, T, T) {
    let one = T::one();
    let two = one.clone() + one.clone();
    let big_n = population.clone();
    let m = big_n.clone() - n.clone();
    match variant {
        KernelVariant::DeathFirst => {
            let others = big_n.clone() - two.clone();
            let fitness = |n1: &T, n2: &T| -> (T, T) {
                if others == T::zero() {
                    return (one.clone(), one.clone());
                }
                let f1 = (game.a.clone() * (n1.clone() - one.clone()) + game.b.clone() * n2.clone())
                    / others.clone();
                let f2 = (game.c.clone() * n1.clone() + game.d.clone() * (n2.clone() - one.clone()))
                    / others.clone();
                (f1, f2)
            };
            // reproduction weights of the two types among the survivors
            let weights = |n1: T, n2: T| -> (T, T) {
                let (f1, f2) = fitness(&n1, &n2);
                (n1 * f1, n2 * f2)
            };
            // Single quotients keep c+ and c- bitwise equal in the neutral
            // game, where every weight is an exact integer.
            // type II dies, a type I survivor reproduces
            let (w1, w2) = weights(n.clone(), m.clone() - one.clone());
            let cplus = m.clone() * w1.clone() / (big_n.clone() * (w1 + w2));
            // type I dies, a type II survivor reproduces
            let (w1, w2) = weights(n.clone() - one.clone(), m.clone());
            let cminus = n.clone() * w2.clone() / (big_n.clone() * (w1 + w2));
            let czero = one - cplus.clone() - cminus.clone();
            (cminus, czero, cplus)
        }
        KernelVariant::BirthFirst => {
            let others = big_n.clone() - one.clone();
            let f1 = (game.a.clone() * (n.clone() - one.clone()) + game.b.clone() * m.clone()) / others.clone();
            let f2 = (game.c.clone() * n.clone() + game.d.clone() * (m.clone() - one.clone())) / others;
            let w1 = n.clone() * f1;
            let w2 = m.clone() * f2;
            let total = w1.clone() + w2.clone();
            let cplus = w1 / total.clone() * m / big_n.clone();
            let cminus = w2 / total * n.clone() / big_n;
            let czero = one - cplus.clone() - cminus.clone();
            (cminus, czero, cplus)
        }
    }
}

/// Tridiagonal column-stochastic transition kernel on `{0, ..., N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<T> {
    population: usize,
    pub cminus: Vec<T>,
    pub czero: Vec<T>,
    pub cplus: Vec<T>,
}

impl<T: Scalar> TransitionKernel<T> {
    pub fn build(game: &PayoffMatrix<T>, population: usize) -> Result<Self> {
        Self::build_variant(game, population, KernelVariant::DeathFirst)
    }

    pub fn build_variant(game: &PayoffMatrix<T>, population: usize, variant: KernelVariant) -> Result<Self> {
        if population < 2 {
            return Err(MoranError::PopulationTooSmall(population));
        }
        game.validate()?;
        let size = population + 1;
        let mut cminus = vec![T::zero(); size];
        let mut czero = vec![T::zero(); size];
        let mut cplus = vec![T::zero(); size];
        czero[0] = T::one();
        czero[population] = T::one();
        let big_n = T::from_usize_exact(population);
        for n in 1..population {
            let (m, z, p) = step_probabilities(game, &T::from_usize_exact(n), &big_n, variant);
            cminus[n] = m;
            czero[n] = z;
            cplus[n] = p;
        }
        Ok(Self { population, cminus, czero, cplus })
    }

    pub fn population(&self) -> usize {
        self.population
    }

    /// Checks column sums, ranges and absorbing endpoints up to `tol`.
    pub fn check_invariants(&self, tol: &T) -> Result<()> {
        let last = self.population;
        if self.cplus[last] != T::zero() || self.cminus[0] != T::zero() {
            return Err(MoranError::InvalidState("endpoints are not absorbing".into()));
        }
        for n in 0..=last {
            let sum = self.cminus[n].clone() + self.czero[n].clone() + self.cplus[n].clone();
            if (sum - T::one()).abs() > *tol {
                return Err(MoranError::InvalidState(format!("column {n} does not sum to one")));
            }
            for v in [&self.cminus[n], &self.czero[n], &self.cplus[n]] {
                if *v < -tol.clone() || *v > T::one() + tol.clone() {
                    return Err(MoranError::InvalidState(format!("entry {v:?} at n = {n} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Dense transition matrix `M` with `M[row][col]` the probability of `col -> row`.
    pub fn dense(&self) -> Vec<Vec<T>> {
        let size = self.population + 1;
        let mut m = vec![vec![T::zero(); size]; size];
        for col in 0..size {
            m[col][col] = self.czero[col].clone();
            if col + 1 < size {
                m[col + 1][col] = self.cplus[col].clone();
            }
            if col > 0 {
                m[col - 1][col] = self.cminus[col].clone();
            }
        }
        m
    }
}

impl<T: Real> TransitionKernel<T> {
    /// Largest eigenvalue of the interior block of `M`. A value below one means
    /// that 1 is an eigenvalue of `M` of multiplicity exactly two.
    pub fn interior_spectral_radius(&self) -> Result<T> {
        let interior = self.population - 1;
        // I - M restricted to 1..N-1, symmetrized (reversible chain).
        let diag: Vec<T> = (1..self.population).map(|n| T::one() - self.czero[n]).collect();
        let off: Vec<T> = (1..interior).map(|n| -(self.cplus[n] * self.cminus[n + 1]).sqrt()).collect();
        Ok(T::one() - tridiag::smallest_eigenvalue(&diag, &off)?)
    }
}

/// Probability vector `P(t, ., N)` after `steps` applications of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<T> {
    pub probs: Vec<T>,
    pub steps: u64,
}

impl<T: Scalar> ChainState<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.len() < 3 {
            return Err(MoranError::PopulationTooSmall(probs.len().saturating_sub(1)));
        }
        let mut total = T::zero();
        for (n, p) in probs.iter().enumerate() {
            if *p < T::zero() {
                return Err(MoranError::InvalidState(format!("negative probability at n = {n}")));
            }
            total = total + p.clone();
        }
        let tol = T::from_f64(1e-12).unwrap_or_else(T::zero);
        if (total.clone() - T::one()).abs() > tol {
            return Err(MoranError::InvalidState(format!("probabilities sum to {total:?}")));
        }
        Ok(Self { probs, steps: 0 })
    }

    pub fn point(population: usize, n: usize) -> Result<Self> {
        if n > population {
            return Err(MoranError::OutOfRange(format!("state {n} > N = {population}")));
        }
        let mut probs = vec![T::zero(); population + 1];
        probs[n] = T::one();
        Self::new(probs)
    }

    pub fn population(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mass(&self) -> T {
        self.probs.iter().cloned().fold(T::zero(), |acc, p| acc + p)
    }

    pub fn interior_mass(&self) -> T {
        let last = self.probs.len() - 1;
        self.probs[1..last].iter().cloned().fold(T::zero(), |acc, p| acc + p)
    }

    /// `<v, P>`.
    pub fn pair(&self, v: &[T]) -> T {
        self.probs.iter().zip(v).fold(T::zero(), |acc, (p, w)| acc + p.clone() * w.clone())
    }
}

fn check_dims<T>(state: &ChainState<T>, kernel: &TransitionKernel<T>) -> Result<()> {
    if state.probs.len() != kernel.population + 1 {
        return Err(MoranError::DimensionMismatch { expected: kernel.population + 1, got: state.probs.len() });
    }
    Ok(())
}

fn step_into<T: Scalar>(src: &[T], kernel: &TransitionKernel<T>, dst: &mut [T]) {
    let last = src.len() - 1;
    for n in 0..=last {
        let mut v = kernel.czero[n].clone() * src[n].clone();
        if n > 0 {
            v = v + kernel.cplus[n - 1].clone() * src[n - 1].clone();
        }
        if n < last {
            v = v + kernel.cminus[n + 1].clone() * src[n + 1].clone();
        }
        dst[n] = v;
    }
}

/// Applies the tridiagonal update `steps` times.
pub fn evolve<T: Scalar>(state: &ChainState<T>, kernel: &TransitionKernel<T>, steps: u64) -> Result<ChainState<T>> {
    check_dims(state, kernel)?;
    let mut cur = state.probs.clone();
    let mut next = cur.clone();
    for _ in 0..steps {
        step_into(&cur, kernel, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ChainState { probs: cur, steps: state.steps + steps })
}

/// In-place variant of [`evolve`] for long runs.
pub fn evolve_in_place<T: Scalar>(state: &mut ChainState<T>, kernel: &TransitionKernel<T>, steps: u64) -> Result<()> {
    check_dims(state, kernel)?;
    let mut next = state.probs.clone();
    for _ in 0..steps {
        step_into(&state.probs, kernel, &mut next);
        std::mem::swap(&mut state.probs, &mut next);
    }
    state.steps += steps;
    Ok(())
}

/// Stationary fixation probabilities: the left eigenvector of `M` for the
/// eigenvalue 1 with `F(0) = 0`, `F(N) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationVector<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> FixationVector<T> {
    pub fn population(&self) -> usize {
        self.values.len() - 1
    }

    /// `F^T M` evaluated columnwise; equals `F` for a true fixation vector.
    pub fn left_apply(&self, kernel: &TransitionKernel<T>) -> Vec<T> {
        let last = self.values.len() - 1;
        (0..=last)
            .map(|n| {
                let mut v = kernel.czero[n].clone() * self.values[n].clone();
                if n < last {
                    v = v + kernel.cplus[n].clone() * self.values[n + 1].clone();
                }
                if n > 0 {
                    v = v + kernel.cminus[n].clone() * self.values[n - 1].clone();
                }
                v
            })
            .collect()
    }
}

fn check_irreducible<T: Scalar>(kernel: &TransitionKernel<T>) -> Result<()> {
    for n in 1..kernel.population {
        if kernel.cplus[n] <= T::zero() {
            return Err(MoranError::ReducibleInterior(n));
        }
        if kernel.cminus[n] <= T::zero() {
            return Err(MoranError::ReducibleInterior(n));
        }
    }
    if kernel.czero[0] != T::one() || kernel.czero[kernel.population] != T::one() {
        return Err(MoranError::InvalidState("endpoints are not absorbing".into()));
    }
    Ok(())
}

/// Fixation vector by the product-sum formula `F(n) = S(n) / S(N)` with
/// `S(n) = sum_{j<n} prod_{k=1..j} c-(k) / c+(k)`, accumulated in log space.
pub fn fixation_vector<T: Real>(kernel: &TransitionKernel<T>) -> Result<FixationVector<T>> {
    check_irreducible(kernel)?;
    let big_n = kernel.population;
    let mut logs = Vec::with_capacity(big_n);
    let mut acc = T::zero();
    logs.push(acc);
    for k in 1..big_n {
        acc = acc + (kernel.cminus[k] / kernel.cplus[k]).ln();
        logs.push(acc);
    }
    let shift = logs.iter().cloned().fold(T::neg_infinity(), T::max);
    let mut partial = Vec::with_capacity(big_n + 1);
    let mut sum = T::zero();
    partial.push(sum);
    for l in &logs {
        sum = sum + (*l - shift).exp();
        partial.push(sum);
    }
    let total = partial[big_n];
    let mut values: Vec<T> = partial.into_iter().map(|s| s / total).collect();
    values[big_n] = T::one();
    Ok(FixationVector { values })
}

/// Same recurrence with plain products; exact for rational scalars.
pub fn fixation_vector_exact<T: Scalar>(kernel: &TransitionKernel<T>) -> Result<FixationVector<T>> {
    check_irreducible(kernel)?;
    let big_n = kernel.population;
    let mut partial = Vec::with_capacity(big_n + 1);
    let mut prod = T::one();
    let mut sum = T::zero();
    partial.push(sum.clone());
    for j in 0..big_n {
        if j > 0 {
            prod = prod * kernel.cminus[j].clone() / kernel.cplus[j].clone();
        }
        sum = sum + prod.clone();
        partial.push(sum.clone());
    }
    let total = partial[big_n].clone();
    Ok(FixationVector { values: partial.into_iter().map(|s| s / total.clone()).collect() })
}

/// Absorption probabilities `(pi0, pi1)` from `pi1 = <F, P>`.
pub fn absorb<T: Real>(state: &ChainState<T>, kernel: &TransitionKernel<T>) -> Result<(T, T)> {
    check_dims(state, kernel)?;
    let f = fixation_vector(kernel)?;
    let pi1 = state.pair(&f.values);
    Ok((T::one() - pi1, pi1))
}

/// Result of iterating the chain until the interior is (numerically) empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedAbsorption<T> {
    pub pi0: T,
    pub pi1: T,
    pub steps: u64,
    pub interior_mass: T,
}

/// Iterates until the interior mass drops below `threshold` or `50 N^2` steps
/// have elapsed.
pub fn absorb_by_iteration<T: Real>(
    state: &ChainState<T>,
    kernel: &TransitionKernel<T>,
    threshold: T,
) -> Result<IteratedAbsorption<T>> {
    check_dims(state, kernel)?;
    let big_n = kernel.population as u64;
    let cap = 50 * big_n * big_n;
    let mut cur = state.clone();
    let chunk = big_n.max(1);
    let mut steps = 0;
    while steps < cap && cur.interior_mass() >= threshold {
        let k = chunk.min(cap - steps);
        evolve_in_place(&mut cur, kernel, k)?;
        steps += k;
    }
    let last = cur.probs.len() - 1;
    Ok(IteratedAbsorption { pi0: cur.probs[0], pi1: cur.probs[last], steps, interior_mass: cur.interior_mass() })
}
