//! The five experiments. Each runs one [`Case`] at a time and fans out over
//! its own parameter list.

mod discrete_vs_pde;
mod hawkdove;
mod kimura;
mod mixed;
mod strong_selection;

use std::time::Instant;

use anyhow::{Context, Result};
use moran_core::InitialDensity;
use moran_core::DensityField;

use crate::config::{Case, Experiment, ExperimentConfig};
use crate::report::{Frame, RunReport};

pub use mixed::{draw_games, DRAW_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Study,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Study => "study",
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    execute(config, Mode::Run)
}

pub fn convergence_study(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    config.validate_study()?;
    execute(config, Mode::Study)
}

fn execute(config: &ExperimentConfig, mode: Mode) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = RunReport::new(config, mode.name());
    for case in &config.cases {
        let init = case.initial.density().with_context(|| format!("case `{}`", case.label))?;
        if let Some(mass) = init.normalization_warning() {
            report.warn(format!("case `{}`: initial density has mass {mass}; renormalized to 1", case.label));
        }
        log::info!("{} `{}`", config.experiment, case.label);
        let ctx = Ctx { config, case, init: &init, mode };
        let outcome = match config.experiment {
            Experiment::DiscreteVsPde => discrete_vs_pde::run(&ctx, &mut report),
            Experiment::StrongSelection => strong_selection::run(&ctx, &mut report),
            Experiment::HawkdovePeak => hawkdove::run(&ctx, &mut report),
            Experiment::KimuraStationary => kimura::run(&ctx, &mut report),
            Experiment::MixedDominance => mixed::run(&ctx, &mut report),
        };
        outcome.with_context(|| format!("case `{}`", case.label))?;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    case: &'a Case,
    init: &'a InitialDensity,
    mode: Mode,
}

impl Ctx<'_> {
    fn label(&self) -> &str {
        &self.case.label
    }

    /// `0, t_end / s, ..., t_end` for `s` snapshots.
    fn times(&self) -> Vec<f64> {
        let s = self.config.snapshots;
        (0..=s).map(|k| self.config.t_end * k as f64 / s as f64).collect()
    }
}

fn frame_of(field: &DensityField) -> Frame {
    Frame { t: field.t, x: field.centers(), q: field.q.clone(), width: field.dx(), a: field.a, b: field.b }
}

/// Linear interpolation of cell-centred values, extrapolated linearly into the
/// outer half cells.
fn interpolate_cells(q: &[f64], x: f64) -> f64 {
    let m = q.len();
    let s = x * m as f64 - 0.5;
    let i = (s.floor().max(0.0) as usize).min(m - 2);
    let f = s - i as f64;
    q[i] * (1.0 - f) + q[i + 1] * f
}

/// Location of the maximum of the initial density, to `1e-5`.
fn initial_peak(init: &InitialDensity) -> f64 {
    let samples = 100_000;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 1..samples {
        let x = k as f64 / samples as f64;
        let v = init.interior(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let m = 16;
        let q: Vec<f64> = (0..m).map(|i| 3.0 * (i as f64 + 0.5) / m as f64 - 1.0).collect();
        for x in [0.0, 0.01, 0.37, 0.5, 0.99, 1.0] {
            assert!((interpolate_cells(&q, x) - (3.0 * x - 1.0)).abs() < 1e-12);
        }
    }
}
