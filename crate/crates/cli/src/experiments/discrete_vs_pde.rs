use anyhow::Result;
use moran_core::discrete::{evolve_in_place, fixation_vector};
use moran_core::forward::{fixation_probability, psi_profile, ForwardProblem};
use moran_core::{ChainState, CompleteOperator, DensityField, ScaledGame, TransitionKernel};
use rayon::prelude::*;

use super::{frame_of, interpolate_cells, Ctx, Mode};
use crate::report::{with_orders, Display, Frame, RunReport, SnapshotSet, StudyRow, Table};

const MASS_TOL: f64 = 1e-10;

struct DiscreteRun {
    population: usize,
    frames: Vec<Frame>,
    fixation: Vec<f64>,
    /// `<F, P(0)>`.
    fixation_of_initial: f64,
}

/// Initial chain state: endpoint masses from the datum, interior proportional
/// to `q0(n / N)`.
fn discretize(ctx: &Ctx, population: usize) -> Result<ChainState> {
    let n = population;
    let (a0, b0) = (ctx.init.a0(), ctx.init.b0());
    let mut probs: Vec<f64> = (0..=n).map(|k| ctx.init.interior(k as f64 / n as f64)).collect();
    probs[0] = 0.0;
    probs[n] = 0.0;
    let interior: f64 = probs.iter().sum();
    anyhow::ensure!(interior > 0.0 || a0 + b0 > 0.0, "initial density vanishes on the lattice for N = {n}");
    if interior > 0.0 {
        let scale = (1.0 - a0 - b0) / interior;
        probs.iter_mut().for_each(|p| *p *= scale);
    }
    probs[0] = a0;
    probs[n] = b0;
    Ok(ChainState::new(probs)?)
}

fn chain_frame(state: &ChainState, steps: u64) -> Frame {
    let n = state.population();
    let nf = n as f64;
    Frame {
        t: steps as f64 / (nf * nf),
        x: (1..n).map(|k| k as f64 / nf).collect(),
        q: state.probs[1..n].iter().map(|p| p * nf).collect(),
        width: 1.0 / nf,
        a: state.probs[0],
        b: state.probs[n],
    }
}

fn run_chain(ctx: &Ctx, game: &ScaledGame, population: usize, times: &[f64]) -> Result<DiscreteRun> {
    let n = population;
    let kernel = TransitionKernel::build(&game.payoffs_at(n)?, n)?;
    let fv = fixation_vector(&kernel)?;
    let mut state = discretize(ctx, n)?;
    let fixation_of_initial = state.pair(&fv.values);
    let n2 = (n * n) as f64;
    let mut frames = vec![chain_frame(&state, 0)];
    let mut done = 0u64;
    for &t in &times[1..] {
        let target = (t * n2).round() as u64;
        evolve_in_place(&mut state, &kernel, target - done)?;
        done = target;
        frames.push(chain_frame(&state, done));
    }
    Ok(DiscreteRun { population: n, frames, fixation: fv.values, fixation_of_initial })
}

pub(super) fn run(ctx: &Ctx, report: &mut RunReport) -> Result<()> {
    let cfg = ctx.config;
    let label = ctx.label();
    let game = ctx.case.game.scaled()?;
    let (alpha, beta) = (game.alpha(), game.beta());
    let times = ctx.times();

    let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), cfg.cells)?;
    let mut field = DensityField::from_initial(cfg.cells, ctx.init);
    let mut pde_frames = vec![frame_of(&field)];
    for &t in &times[1..] {
        op.advance(&mut field, t, cfg.scheme.time_scheme())?;
        pde_frames.push(frame_of(&field));
    }
    let pde_final = pde_frames.last().expect("at least one frame");
    let pi1 = fixation_probability(ctx.init, alpha, beta)?;
    let profile = psi_profile(alpha, beta);

    let runs: Vec<DiscreteRun> = cfg
        .populations
        .par_iter()
        .map(|&n| run_chain(ctx, &game, n, &times))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for run in &runs {
        let n = run.population;
        let last = run.frames.last().expect("at least one frame");
        let error_l1 = last
            .x
            .iter()
            .zip(&last.q)
            .map(|(x, q)| (q - interpolate_cells(&pde_final.q, *x)).abs())
            .sum::<f64>()
            * last.width;
        let error_fix = run
            .fixation
            .iter()
            .enumerate()
            .map(|(k, f)| (f - profile.psi(k as f64 / n as f64)).abs())
            .fold(0.0, f64::max);
        rows.push(StudyRow { param: n as f64, error_l1, error_fix, order_estimate: None });
        report.summarize(label, &format!("initial_fixation_error_N{n}"), (run.fixation_of_initial - pi1).abs());
        report.summarize(label, &format!("boundary_error_N{n}"), (last.a - pde_final.a).abs() + (last.b - pde_final.b).abs());

        let mut table = Table::new(format!("fixation_N{n}.csv"), &["n", "x", "fixation", "psi"]);
        for (k, f) in run.fixation.iter().enumerate() {
            let x = k as f64 / n as f64;
            table.push(vec![k.into(), x.into(), (*f).into(), profile.psi(x).into()]);
        }
        report.tables.push((label.into(), table));
    }
    report.summarize(label, "pi1", pi1);
    report.summarize(label, "pde_t", pde_final.t);

    if ctx.mode == Mode::Run {
        report.snapshots.push((
            label.into(),
            SnapshotSet { file: "pde.csv".into(), frames: pde_frames, mass_tol: MASS_TOL, display: Display::default() },
        ));
        for run in runs {
            report.snapshots.push((
                label.into(),
                SnapshotSet {
                    file: format!("discrete_N{}.csv", run.population),
                    frames: run.frames,
                    mass_tol: MASS_TOL,
                    display: Display::default(),
                },
            ));
        }
    }
    report.studies.push((label.into(), with_orders(rows)));
    Ok(())
}
