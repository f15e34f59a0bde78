//! Experiment configuration, read from a single JSON document.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use moran_core::forward::TimeScheme;
use moran_core::{quadrature, InitialDensity, ScaledGame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DiscreteVsPde,
    StrongSelection,
    HawkdovePeak,
    KimuraStationary,
    MixedDominance,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::DiscreteVsPde,
        Experiment::StrongSelection,
        Experiment::HawkdovePeak,
        Experiment::KimuraStationary,
        Experiment::MixedDominance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DiscreteVsPde => "discrete-vs-pde",
            Experiment::StrongSelection => "strong-selection",
            Experiment::HawkdovePeak => "hawkdove-peak",
            Experiment::KimuraStationary => "kimura-stationary",
            Experiment::MixedDominance => "mixed-dominance",
        }
    }

    pub fn has_study(self) -> bool {
        matches!(self, Experiment::DiscreteVsPde | Experiment::StrongSelection | Experiment::KimuraStationary)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .with_context(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Game parameters, either as drift parameters or as scaled payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Game {
    Drift { alpha: f64, beta: f64 },
    Payoffs { a: f64, b: f64, c: f64, d: f64 },
}

impl Game {
    pub fn drift(&self) -> (f64, f64) {
        match *self {
            Game::Drift { alpha, beta } => (alpha, beta),
            Game::Payoffs { a, b, c, d } => (a - c, b - d),
        }
    }

    /// Scaled payoffs with `nu = 1`. Drift parameters are split so that every
    /// scaled payoff is nonnegative.
    pub fn scaled(&self) -> Result<ScaledGame> {
        let (a, b, c, d) = match *self {
            Game::Drift { alpha, beta } => (alpha.max(0.0), beta.max(0.0), (-alpha).max(0.0), (-beta).max(0.0)),
            Game::Payoffs { a, b, c, d } => (a, b, c, d),
        };
        Ok(ScaledGame::new(a, b, c, d, 1.0)?)
    }
}

/// Initial interior density on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// `sum_k coefficients[k] x^k`, used as given (a mass other than one is
    /// reported and renormalized).
    Polynomial { coefficients: Vec<f64> },
    /// Gaussian bump normalized to unit mass on `(0, 1)`.
    Bump { center: f64, width: f64 },
    Uniform,
}

impl Initial {
    fn eval_poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, k| acc * x + k)
    }

    pub fn density(&self) -> Result<InitialDensity> {
        match self {
            Initial::Polynomial { coefficients } => {
                ensure!(!coefficients.is_empty(), "polynomial initial density needs coefficients");
                ensure!(coefficients.iter().all(|c| c.is_finite()), "polynomial coefficients must be finite");
                if let Some(k) = (0..=1000).find(|k| Self::eval_poly(coefficients, *k as f64 / 1000.0) < 0.0) {
                    bail!("polynomial initial density is negative at x = {}", k as f64 / 1000.0);
                }
                let c = coefficients.clone();
                Ok(InitialDensity::from_fn(move |x| Self::eval_poly(&c, x))?)
            }
            Initial::Bump { center, width } => {
                let (c, w) = (*center, *width);
                ensure!(c > 0.0 && c < 1.0, "bump center {c} not in (0, 1)");
                ensure!(w > 0.0 && w < 1.0, "bump width {w} not in (0, 1)");
                let shape = move |x: f64| (-(x - c) * (x - c) / (2.0 * w * w)).exp();
                let mass = quadrature::integrate(shape, 0.0, 1.0, 1e-13)?;
                Ok(InitialDensity::from_fn(move |x| shape(x) / mass)?)
            }
            Initial::Uniform => Ok(InitialDensity::from_fn(|_| 1.0)?),
        }
    }
}

/// One game / initial datum pair; outputs go to a subdirectory named `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub label: String,
    pub game: Game,
    pub initial: Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    Explicit { cfl: f64 },
    Implicit { dt: f64 },
}

impl Scheme {
    pub fn time_scheme(self) -> TimeScheme<f64> {
        match self {
            Scheme::Explicit { cfl } => TimeScheme::Explicit { cfl },
            Scheme::Implicit { dt } => TimeScheme::Implicit { dt },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub cases: Vec<Case>,
    /// Finite-volume cells (nodes minus one for the backward equation).
    pub cells: usize,
    /// Population sizes for the discrete chain.
    #[serde(default)]
    pub populations: Vec<usize>,
    /// Diffusion strengths for the strong-selection runs.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Cell counts for grid-refinement studies.
    #[serde(default)]
    pub refinements: Vec<usize>,
    pub t_end: f64,
    /// Number of output times after `t = 0`.
    pub snapshots: usize,
    pub scheme: Scheme,
    /// Strategist pairs `[theta1, theta2]`.
    #[serde(default)]
    pub thetas: Vec<[f64; 2]>,
    /// Random draws for the mixed-strategy criteria comparison.
    #[serde(default)]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn case(label: &str, game: Game, initial: Initial) -> Case {
    Case { label: label.into(), game, initial }
}

fn hawk_dove_cubic() -> Initial {
    Initial::Polynomial { coefficients: vec![0.0, 0.0, 0.0, 20.0, -20.0] }
}

impl ExperimentConfig {
    pub fn default_for(experiment: Experiment) -> Self {
        let hawk_dove = Game::Drift { alpha: -20.0, beta: 20.0 };
        let mut cfg = ExperimentConfig {
            experiment,
            cases: Vec::new(),
            cells: 200,
            populations: Vec::new(),
            epsilons: Vec::new(),
            refinements: Vec::new(),
            t_end: 1.0,
            snapshots: 10,
            scheme: Scheme::Explicit { cfl: 0.9 },
            thetas: Vec::new(),
            draws: 0,
            seed: 0,
            output_dir: None,
        };
        match experiment {
            Experiment::DiscreteVsPde => {
                cfg.cases = vec![case(
                    "hawkdove",
                    Game::Payoffs { a: 0.0, b: 20.0, c: 20.0, d: 0.0 },
                    hawk_dove_cubic(),
                )];
                cfg.cells = 2048;
                cfg.populations = vec![100, 200, 400, 800];
                cfg.t_end = 0.1;
                cfg.snapshots = 4;
            }
            Experiment::StrongSelection => {
                cfg.cases = vec![case("hawkdove", hawk_dove, Initial::Bump { center: 0.15, width: 0.02 })];
                cfg.epsilons = vec![0.1, 0.05, 0.025];
                cfg.snapshots = 100;
            }
            Experiment::HawkdovePeak => {
                cfg.cases = vec![
                    case("hawkdove", hawk_dove, hawk_dove_cubic()),
                    case(
                        "selection",
                        Game::Drift { alpha: 20.0, beta: 20.0 },
                        Initial::Polynomial { coefficients: vec![0.0, 6.0, -6.0] },
                    ),
                ];
                cfg.cells = 400;
                cfg.snapshots = 20;
            }
            Experiment::KimuraStationary => {
                cfg.cases = vec![case("gamma20", Game::Drift { alpha: 20.0, beta: 20.0 }, Initial::Uniform)];
                cfg.cells = 1024;
                cfg.refinements = vec![128, 256, 512, 1024];
                cfg.t_end = 3.0;
                cfg.snapshots = 6;
                cfg.scheme = Scheme::Implicit { dt: 1e-3 };
            }
            Experiment::MixedDominance => {
                cfg.cases = vec![case("hawkdove", hawk_dove, Initial::Polynomial { coefficients: vec![0.0, 6.0, -6.0] })];
                cfg.thetas = vec![[0.9, 0.6], [0.6, 0.9], [0.2, 0.5], [0.5, 0.2], [1.0, 0.0], [0.3, 0.3]];
                cfg.draws = 20;
                cfg.seed = 11;
            }
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.cases.is_empty(), "at least one case is required");
        for (i, c) in self.cases.iter().enumerate() {
            ensure!(
                !c.label.is_empty() && c.label.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_'),
                "case label `{}` must be nonempty and use only [A-Za-z0-9_-]",
                c.label
            );
            ensure!(
                self.cases[..i].iter().all(|o| o.label != c.label),
                "duplicate case label `{}`",
                c.label
            );
            let (alpha, beta) = c.game.drift();
            ensure!(alpha.is_finite() && beta.is_finite(), "case `{}`: game parameters must be finite", c.label);
        }
        ensure!((8..=1 << 20).contains(&self.cells), "cells = {} not in [8, 2^20]", self.cells);
        ensure!(self.t_end.is_finite() && self.t_end > 0.0, "t_end = {} must be positive", self.t_end);
        ensure!(self.snapshots >= 1 && self.snapshots <= 100_000, "snapshots = {} not in [1, 100000]", self.snapshots);
        ensure!(
            self.populations.iter().all(|n| *n >= 2) && self.populations.windows(2).all(|w| w[0] < w[1]),
            "populations must be increasing and at least 2"
        );
        ensure!(
            self.epsilons.iter().all(|e| *e > 0.0 && *e <= 1.0),
            "epsilons must lie in (0, 1]"
        );
        ensure!(
            self.refinements.iter().all(|m| *m >= 8) && self.refinements.windows(2).all(|w| w[0] < w[1]),
            "refinements must be increasing and at least 8"
        );
        match self.scheme {
            Scheme::Explicit { cfl } => ensure!(cfl > 0.0 && cfl <= 1.0, "cfl = {cfl} not in (0, 1]"),
            Scheme::Implicit { dt } => ensure!(dt.is_finite() && dt > 0.0, "dt = {dt} must be positive"),
        }
        ensure!(
            self.thetas.iter().flatten().all(|t| (0.0..=1.0).contains(t)),
            "thetas must lie in [0, 1]"
        );
        ensure!(self.draws <= 1_000_000, "draws = {} exceeds 10^6", self.draws);
        match self.experiment {
            Experiment::DiscreteVsPde => ensure!(!self.populations.is_empty(), "discrete-vs-pde needs populations"),
            Experiment::StrongSelection => ensure!(!self.epsilons.is_empty(), "strong-selection needs epsilons"),
            Experiment::MixedDominance => {
                ensure!(!self.thetas.is_empty() || self.draws > 0, "mixed-dominance needs thetas or draws")
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks the extra requirements of a convergence study.
    pub fn validate_study(&self) -> Result<()> {
        match self.experiment {
            Experiment::DiscreteVsPde => {
                let p = &self.populations;
                ensure!(
                    p.len() >= 4 && p.windows(2).all(|w| w[1] == 2 * w[0]),
                    "convergence study needs at least three doublings of N, got {p:?}"
                );
            }
            Experiment::StrongSelection => ensure!(
                self.epsilons.len() >= 3 && self.epsilons.windows(2).all(|w| w[1] < w[0]),
                "strong-selection study needs at least three decreasing epsilons"
            ),
            Experiment::KimuraStationary => {
                ensure!(self.refinements.len() >= 3, "kimura-stationary study needs at least three refinements")
            }
            e => bail!("experiment {e} has no convergence study"),
        }
        Ok(())
    }
}
