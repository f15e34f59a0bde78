//! Generalized Moran process and its continuum limits.
//!
//! * [`discrete`]: the finite-population birth-death chain, its fixation
//!   vector and absorption.
//! * [`expansion`]: large-`N` expansion of the transition kernel and the
//!   classification of time/selection scalings.
//! * [`forward`]: the replicator-diffusion equation with boundary masses, the
//!   fixation profile `psi` and the spectral gap.
//! * [`hyperbolic`]: the replicator ODE and the pure-drift limit.
//! * [`kimura`]: the backward equation and its duality with the forward one.
//! * [`mixed`]: populations of mixed strategists.
//!
//! Continuum code is generic over [`Real`] (`f32`, `f64`); the discrete chain
//! over [`Scalar`], which includes exact rationals.

pub mod discrete;
pub mod error;
pub mod expansion;
pub mod forward;
pub mod hyperbolic;
pub mod kimura;
pub mod mixed;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod tridiag;

pub use error::{MoranError, Result};
pub use scalar::{Real, Scalar};

pub use discrete::{
    absorb, absorb_by_iteration, evolve, evolve_in_place, fixation_vector, fixation_vector_exact,
    step_probabilities, KernelVariant,
};
pub use expansion::{classify_balance, drift_limit, expand_kernel, first_order_sum_limit, Balance};
pub use forward::{fixation_probability, psi_profile, rescale_strong_selection, spectral_gap, step_complete, TimeScheme};
pub use hyperbolic::{flow, lagrangian_density, lyapunov_moment, solve_nodiffusion};
pub use kimura::{adjointness_residual, duality_map, solve_kimura};
pub use mixed::{dominates, dominates_by_fixation, mixed_fixation, reduce_payoffs};

/// Exact rational arithmetic for the discrete chain.
pub type Rational = num_rational::BigRational;

pub type PayoffMatrix = discrete::PayoffMatrix<f64>;
pub type ScaledGame = discrete::ScaledGame<f64>;
pub type TransitionKernel = discrete::TransitionKernel<f64>;
pub type ChainState = discrete::ChainState<f64>;
pub type FixationVector = discrete::FixationVector<f64>;
pub type ExactKernel = discrete::TransitionKernel<Rational>;
pub type ExactChainState = discrete::ChainState<Rational>;
pub type KernelExpansion = expansion::KernelExpansion<f64>;
pub type DensityField = forward::DensityField<f64>;
pub type ForwardProblem = forward::ForwardProblem<f64>;
pub type CompleteOperator = forward::CompleteOperator<f64>;
pub type FixationProfile = forward::FixationProfile<f64>;
pub type InitialDensity = forward::InitialDensity<f64>;
pub type ReplicatorFlow = hyperbolic::ReplicatorFlow<f64>;
pub type HyperbolicSolution = hyperbolic::HyperbolicSolution<f64>;
pub type KimuraParams = kimura::KimuraParams<f64>;
pub type KimuraSolution = kimura::KimuraSolution<f64>;
pub type MixedGame = mixed::MixedGame<f64>;
