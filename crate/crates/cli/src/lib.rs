//! Reproducible experiments on the Moran process and its continuum limits.
//!
//! A run is described by an [`ExperimentConfig`] (a JSON document) and
//! produces a [`RunReport`]: snapshot CSVs with the `t,x,q,a,b` schema,
//! convergence tables with `param,error_l1,error_fix,order_estimate`, a few
//! experiment-specific tables, and `report.json` echoing the config.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Case, Experiment, ExperimentConfig, Game, Initial, Scheme};
pub use experiments::{convergence_study, draw_games, run_experiment, Mode};
pub use report::{RunReport, StudyRow};
