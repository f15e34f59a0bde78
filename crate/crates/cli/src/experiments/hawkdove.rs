use anyhow::Result;
use moran_core::forward::ForwardProblem;
use moran_core::{CompleteOperator, DensityField, HyperbolicSolution, ReplicatorFlow};
use rayon::prelude::*;

use super::{frame_of, Ctx};
use crate::report::{Display, Frame, RunReport, SnapshotSet, Table};

/// Plot convention: outermost cells dropped, heights reported as `dx * p`.
const DISPLAY: Display = Display { trim: 1, times_width: true };

/// Peak cell among the displayed ones.
fn displayed_peak(q: &[f64]) -> usize {
    let keep = DISPLAY.trim..q.len() - DISPLAY.trim;
    let mut best = keep.start;
    for i in keep {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

pub(super) fn run(ctx: &Ctx, report: &mut RunReport) -> Result<()> {
    let cfg = ctx.config;
    let label = ctx.label();
    let (alpha, beta) = ctx.case.game.drift();
    let times = ctx.times();

    let op = CompleteOperator::new(ForwardProblem::new(alpha, beta), cfg.cells)?;
    let mut field = DensityField::from_initial(cfg.cells, ctx.init);
    let x = field.centers();
    let dx = field.dx();
    let mut complete = vec![frame_of(&field)];
    for &t in &times[1..] {
        op.advance(&mut field, t, cfg.scheme.time_scheme())?;
        complete.push(frame_of(&field));
    }

    let hyperbolic = HyperbolicSolution::new(ctx.init.clone(), alpha, beta);
    let nodiffusion: Vec<Frame> = times
        .par_iter()
        .map(|&t| {
            let q = hyperbolic.cell_averages(t, cfg.cells)?;
            Ok(Frame { t, x: x.clone(), q, width: dx, a: ctx.init.a0(), b: ctx.init.b0() })
        })
        .collect::<Result<_>>()?;

    // The drift-only height is rescaled by the interior mass the complete
    // equation has left, so both markers refer to the same amount of mass.
    let mut peaks = Table::new(
        "peaks.csv",
        &["t", "complete_peak", "complete_height", "nodiffusion_peak", "nodiffusion_height"],
    );
    for (c, h) in complete.iter().zip(&nodiffusion) {
        let (ic, ih) = (displayed_peak(&c.q), displayed_peak(&h.q));
        let interior = 1.0 - c.a - c.b;
        peaks.push(vec![
            c.t.into(),
            x[ic].into(),
            (dx * c.q[ic]).into(),
            x[ih].into(),
            (dx * h.q[ih] * interior).into(),
        ]);
    }

    let last = complete.last().expect("at least one frame");
    let last_h = nodiffusion.last().expect("at least one frame");
    report.summarize(label, "complete_peak", x[displayed_peak(&last.q)]);
    report.summarize(label, "nodiffusion_peak", x[displayed_peak(&last_h.q)]);
    report.summarize(label, "a", last.a);
    report.summarize(label, "b", last.b);
    report.summarize(label, "x_star", ReplicatorFlow::new(alpha, beta).x_star());
    report.tables.push((label.into(), peaks));
    report.snapshots.push((
        label.into(),
        SnapshotSet { file: "complete.csv".into(), frames: complete, mass_tol: 1e-10, display: DISPLAY },
    ));
    report.snapshots.push((
        label.into(),
        SnapshotSet { file: "nodiffusion.csv".into(), frames: nodiffusion, mass_tol: 1e-8, display: DISPLAY },
    ));
    Ok(())
}
