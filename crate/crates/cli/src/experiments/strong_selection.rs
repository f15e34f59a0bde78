use anyhow::Result;
use moran_core::forward::rescale_strong_selection;
use moran_core::{CompleteOperator, DensityField, HyperbolicSolution, ReplicatorFlow};
use rayon::prelude::*;

use super::{frame_of, initial_peak, Ctx, Mode};
use crate::report::{with_orders, Display, Frame, RunReport, SnapshotSet, StudyRow, Table};

/// Cells around `x*` (or the endpoints) where peak tracking stops.
pub const TRACKING_MARGIN: f64 = 3.0;

struct EpsilonRun {
    epsilon: f64,
    frames: Vec<Frame>,
    sup_l1: f64,
    sup_weighted_l2: f64,
    /// Largest `|peak - Phi_t(x_peak)|` in cells while tracking applies.
    peak_deviation: f64,
    tracked_until: f64,
    boundary_error: f64,
}

fn run_epsilon(ctx: &Ctx, epsilon: f64, exact: &[Vec<f64>], times: &[f64], x_peak: f64) -> Result<EpsilonRun> {
    let cfg = ctx.config;
    let (alpha, beta) = ctx.case.game.drift();
    let scaled = rescale_strong_selection(alpha, beta, epsilon)?;
    let op = CompleteOperator::new(scaled.problem, cfg.cells)?;
    let flow = ReplicatorFlow::new(alpha, beta);
    let mut field = DensityField::from_initial(cfg.cells, ctx.init);
    let dx = field.dx();
    let x = field.centers();
    let stop = TRACKING_MARGIN * dx;
    let mut run = EpsilonRun {
        epsilon,
        frames: Vec::with_capacity(times.len()),
        sup_l1: 0.0,
        sup_weighted_l2: 0.0,
        peak_deviation: 0.0,
        tracked_until: 0.0,
        boundary_error: 0.0,
    };
    let mut tracking = true;
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            op.advance(&mut field, t, cfg.scheme.time_scheme())?;
        }
        let (mut l1, mut wl2) = (0.0, 0.0);
        for ((q, e), xi) in field.q.iter().zip(&exact[k]).zip(&x) {
            let d = q - e;
            l1 += d.abs() * dx;
            wl2 += xi * (1.0 - xi) * d * d * dx;
        }
        run.sup_l1 = run.sup_l1.max(l1);
        run.sup_weighted_l2 = run.sup_weighted_l2.max(wl2.sqrt());
        let target = flow.flow(x_peak, t);
        let near_rest = match flow.x_star() {
            Some(xs) => (target - xs).abs() <= stop,
            None => false,
        } || target <= stop
            || target >= 1.0 - stop;
        tracking = tracking && !near_rest;
        if tracking {
            let dev = (x[field.peak_cell()] - target).abs() / dx;
            run.peak_deviation = run.peak_deviation.max(dev);
            run.tracked_until = t;
        }
        run.frames.push(frame_of(&field));
    }
    let atoms = ctx.init.a0() + ctx.init.b0();
    run.boundary_error = (field.a + field.b - atoms).abs();
    Ok(run)
}

pub(super) fn run(ctx: &Ctx, report: &mut RunReport) -> Result<()> {
    let cfg = ctx.config;
    let label = ctx.label();
    let (alpha, beta) = ctx.case.game.drift();
    let times = ctx.times();
    let hyperbolic = HyperbolicSolution::new(ctx.init.clone(), alpha, beta);
    let exact: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| hyperbolic.cell_averages(t, cfg.cells).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let x_peak = initial_peak(ctx.init);

    let runs: Vec<EpsilonRun> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| run_epsilon(ctx, eps, &exact, &times, x_peak))
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "tracking.csv",
        &["epsilon", "sup_l1", "sup_weighted_l2", "peak_deviation_cells", "tracked_until"],
    );
    let mut rows = Vec::new();
    for r in &runs {
        table.push(vec![
            r.epsilon.into(),
            r.sup_l1.into(),
            r.sup_weighted_l2.into(),
            r.peak_deviation.into(),
            r.tracked_until.into(),
        ]);
        rows.push(StudyRow { param: r.epsilon, error_l1: r.sup_l1, error_fix: r.boundary_error, order_estimate: None });
    }
    report.tables.push((label.into(), table));
    report.summarize(label, "initial_peak", x_peak);

    if ctx.mode == Mode::Run {
        let x = DensityField::from_initial(cfg.cells, ctx.init).centers();
        let width = 1.0 / cfg.cells as f64;
        let nodiffusion = times
            .iter()
            .zip(exact)
            .map(|(&t, q)| Frame { t, x: x.clone(), q, width, a: ctx.init.a0(), b: ctx.init.b0() })
            .collect();
        report.snapshots.push((
            label.into(),
            SnapshotSet { file: "nodiffusion.csv".into(), frames: nodiffusion, mass_tol: 1e-8, display: Display::default() },
        ));
        for r in runs {
            report.snapshots.push((
                label.into(),
                SnapshotSet {
                    file: format!("eps_{}.csv", r.epsilon),
                    frames: r.frames,
                    mass_tol: 1e-10,
                    display: Display::default(),
                },
            ));
        }
    }
    report.studies.push((label.into(), with_orders(rows)));
    Ok(())
}
