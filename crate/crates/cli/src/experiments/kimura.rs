use anyhow::Result;
use moran_core::kimura::{stationarity_residual, Poly};
use moran_core::{adjointness_residual, solve_kimura, KimuraParams, KimuraSolution};
use rayon::prelude::*;

use super::{Ctx, Mode};
use crate::report::{with_orders, RunReport, StudyRow, Table};

/// Backward profile from `f(0, x) = x` at `cells + 1` nodes.
fn solve(ctx: &Ctx, params: KimuraParams, cells: usize, t: f64) -> Result<KimuraSolution> {
    let f0: Vec<f64> = (0..=cells).map(|j| j as f64 / cells as f64).collect();
    Ok(solve_kimura(&f0, params, t, ctx.config.scheme.time_scheme())?)
}

fn errors(sol: &KimuraSolution) -> (f64, f64) {
    let fbar = sol.fbar();
    let h = 1.0 / (fbar.len() - 1) as f64;
    let l1 = fbar.iter().map(|v| v.abs()).sum::<f64>() * h;
    (l1, sol.stationary_error())
}

/// `(fbar, q)` pairs with `fbar` vanishing at both ends.
fn test_pairs() -> Vec<(Poly<f64>, Poly<f64>)> {
    vec![
        (Poly(vec![1.0]).times_bubble(), Poly(vec![1.0])),
        (Poly(vec![1.0, 2.0]).times_bubble(), Poly(vec![1.0, 0.0, 3.0])),
        (Poly(vec![0.5, -1.0, 0.25]).times_bubble(), Poly(vec![-2.0, 1.0, 0.0, 1.0])),
    ]
}

pub(super) fn run(ctx: &Ctx, report: &mut RunReport) -> Result<()> {
    let cfg = ctx.config;
    let label = ctx.label();
    let (alpha, beta) = ctx.case.game.drift();
    let params = KimuraParams::new(alpha, beta);

    match ctx.mode {
        Mode::Run => {
            let times = ctx.times();
            let mut profile = Table::new("profile.csv", &["t", "x", "f", "stationary"]);
            let mut sol = solve(ctx, params, cfg.cells, 0.0)?;
            for (k, &t) in times.iter().enumerate() {
                if k > 0 {
                    sol = solve_kimura(&sol.f, params, t - times[k - 1], cfg.scheme.time_scheme())?;
                    sol.t = t;
                }
                for (x, f) in sol.x.iter().zip(&sol.f) {
                    profile.push(vec![t.into(), (*x).into(), (*f).into(), params.stationary(*x).into()]);
                }
            }
            let h = 1.0 / cfg.cells as f64;
            let (l1, max) = errors(&sol);
            report.summarize(label, "stationary_error_max", max);
            report.summarize(label, "stationary_error_l1", l1);
            report.summarize(label, "bound_5dx2", 5.0 * h * h);
            report.summarize(label, "monotone", sol.is_monotone());
            report.summarize(label, "stationarity_residual", stationarity_residual(&sol.f, &params));
            let worst = test_pairs()
                .iter()
                .map(|(f, q)| adjointness_residual(f, q, &params))
                .try_fold(0.0, |m, r| r.map(|r| f64::max(m, r)))?;
            report.summarize(label, "adjointness_residual", worst);
            report.tables.push((label.into(), profile));
        }
        Mode::Study => {
            let rows: Vec<StudyRow> = cfg
                .refinements
                .par_iter()
                .map(|&m| {
                    let (l1, max) = errors(&solve(ctx, params, m, cfg.t_end)?);
                    Ok(StudyRow { param: m as f64, error_l1: l1, error_fix: max, order_estimate: None })
                })
                .collect::<Result<_>>()?;
            report.studies.push((label.into(), with_orders(rows)));
        }
    }
    Ok(())
}
