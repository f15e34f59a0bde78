use anyhow::Result;
use moran_core::{dominates, dominates_by_fixation, mixed_fixation, InitialDensity, MixedGame, ReplicatorFlow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Ctx;
use crate::report::{RunReport, Table};

/// Drift parameters of random draws are uniform in `[-DRAW_RANGE, DRAW_RANGE]`.
pub const DRAW_RANGE: f64 = 20.0;

/// `count` draws `(theta1, theta2, alpha, beta)`: thetas uniform in `[0, 1]`,
/// drifts uniform in `[-DRAW_RANGE, DRAW_RANGE]`, from a ChaCha8 stream seeded with `seed`.
pub fn draw_games(seed: u64, count: usize) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta1 = rng.gen::<f64>();
            let theta2 = rng.gen::<f64>();
            let alpha = rng.gen_range(-DRAW_RANGE..=DRAW_RANGE);
            let beta = rng.gen_range(-DRAW_RANGE..=DRAW_RANGE);
            [theta1, theta2, alpha, beta]
        })
        .collect()
}

/// Both criteria, or `None` for identical strategists.
fn criteria(theta1: f64, theta2: f64, alpha: f64, beta: f64) -> Result<Option<(bool, bool)>> {
    if theta1 == theta2 {
        return Ok(None);
    }
    Ok(Some((dominates(theta1, theta2, alpha, beta)?, dominates_by_fixation(theta1, theta2, alpha, beta)?)))
}

pub(super) fn run(ctx: &Ctx, report: &mut RunReport) -> Result<()> {
    let cfg = ctx.config;
    let label = ctx.label();
    let (alpha, beta) = ctx.case.game.drift();
    // already renormalized (with a warning) when the case was loaded
    let init = ctx.init.clone();
    let p0 = InitialDensity::from_fn(move |x| init.interior(x))?;

    let mut pairs = Table::new(
        "pairs.csv",
        &["theta1", "theta2", "alpha_eff", "beta_eff", "pi1", "flow_dominates", "fixation_dominates"],
    );
    for &[theta1, theta2] in &cfg.thetas {
        let game = MixedGame::new(theta1, theta2, alpha, beta)?;
        let pi1 = mixed_fixation(&p0, &game)?;
        let verdicts = criteria(theta1, theta2, alpha, beta)?;
        pairs.push(vec![
            theta1.into(),
            theta2.into(),
            game.alpha_eff().into(),
            game.beta_eff().into(),
            pi1.into(),
            verdicts.map(|v| v.0).into(),
            verdicts.map(|v| v.1).into(),
        ]);
    }
    report.tables.push((label.into(), pairs));

    let flow = ReplicatorFlow::new(alpha, beta);
    match flow.x_star().filter(|_| alpha < 0.0) {
        Some(theta_star) => {
            let mut ess = Table::new("ess.csv", &["theta", "theta_star", "flow_dominates", "fixation_dominates"]);
            let mut all = true;
            for k in 0..=10 {
                let theta = k as f64 / 10.0;
                if theta == theta_star {
                    continue;
                }
                let (flow_dom, fix_dom) = (
                    dominates(theta, theta_star, alpha, beta)?,
                    dominates_by_fixation(theta, theta_star, alpha, beta)?,
                );
                all &= flow_dom && fix_dom;
                ess.push(vec![theta.into(), theta_star.into(), flow_dom.into(), fix_dom.into()]);
            }
            report.summarize(label, "ess_dominates", all);
            report.tables.push((label.into(), ess));
        }
        None => report.warn(format!("case `{label}`: no stable interior equilibrium, ESS table skipped")),
    }

    if cfg.draws > 0 {
        let draws = draw_games(cfg.seed, cfg.draws);
        let verdicts: Vec<Option<(bool, bool)>> =
            draws.par_iter().map(|d| criteria(d[0], d[1], d[2], d[3])).collect::<Result<_>>()?;
        let mut table = Table::new("draws.csv", &["theta1", "theta2", "alpha", "beta", "flow_dominates", "fixation_dominates"]);
        let mut agree = 0;
        for (d, v) in draws.iter().zip(&verdicts) {
            agree += v.map_or(1, |(a, b)| usize::from(a == b));
            table.push(vec![
                d[0].into(),
                d[1].into(),
                d[2].into(),
                d[3].into(),
                v.map(|v| v.0).into(),
                v.map(|v| v.1).into(),
            ]);
        }
        report.summarize(label, "draws", draws.len());
        report.summarize(label, "criteria_agree", agree);
        if agree < draws.len() {
            report.warn(format!(
                "case `{label}`: flow and fixation dominance disagree on {} of {} draws",
                draws.len() - agree,
                draws.len()
            ));
        }
        report.tables.push((label.into(), table));
    }
    Ok(())
}
