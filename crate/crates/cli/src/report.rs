//! Run reports and their CSV / JSON serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Density on a grid with its boundary masses at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    /// Cell width attached to each `q` value for the mass balance.
    pub width: f64,
    pub a: f64,
    pub b: f64,
}

impl Frame {
    pub fn mass(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.width + self.a + self.b
    }
}

/// How a snapshot set is written out.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Display {
    /// Cells dropped at each end.
    pub trim: usize,
    /// Write `width * q` instead of `q`.
    pub times_width: bool,
}

/// Snapshot series written with the `t,x,q,a,b` schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub file: String,
    pub frames: Vec<Frame>,
    /// Allowed `|mass - 1|`, re-checked when writing.
    pub mass_tol: f64,
    pub display: Display,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub param: f64,
    pub error_l1: f64,
    pub error_fix: f64,
    pub order_estimate: Option<f64>,
}

/// Fills in `order_estimate` from consecutive `error_l1` values.
pub fn with_orders(mut rows: Vec<StudyRow>) -> Vec<StudyRow> {
    for k in 1..rows.len() {
        let (prev, cur) = (rows[k - 1], rows[k]);
        let ratio = (cur.param / prev.param).ln().abs();
        rows[k].order_estimate = Some((prev.error_l1 / cur.error_l1).ln() / ratio);
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Self { file: file.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    pub version: &'static str,
    pub wall_time_s: f64,
}

/// Everything an experiment produced, keyed by case label.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub command: String,
    pub snapshots: Vec<(String, SnapshotSet)>,
    pub studies: Vec<(String, Vec<StudyRow>)>,
    pub tables: Vec<(String, Table)>,
    pub summary: BTreeMap<String, BTreeMap<String, serde_json::Value>>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, command: &str) -> Self {
        Self {
            config: config.clone(),
            command: command.into(),
            snapshots: Vec::new(),
            studies: Vec::new(),
            tables: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn summarize(&mut self, label: &str, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("summary values serialize");
        self.summary.entry(label.into()).or_default().insert(key.into(), value);
    }

    pub fn summary_f64(&self, label: &str, key: &str) -> Option<f64> {
        self.summary.get(label)?.get(key)?.as_f64()
    }

    pub fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub fn table(&self, label: &str, file: &str) -> Option<&Table> {
        self.tables.iter().find(|(l, t)| l == label && t.file == file).map(|(_, t)| t)
    }

    pub fn snapshot_set(&self, label: &str, file: &str) -> Option<&SnapshotSet> {
        self.snapshots.iter().find(|(l, s)| l == label && s.file == file).map(|(_, s)| s)
    }

    pub fn study(&self, label: &str) -> Option<&[StudyRow]> {
        self.studies.iter().find(|(l, _)| l == label).map(|(_, r)| r.as_slice())
    }

    /// Writes every CSV plus `report.json` under `dir`; returns the files written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let mut written = Vec::new();
        for (label, set) in &self.snapshots {
            let path = case_dir(dir, label)?.join(&set.file);
            write_snapshots(&path, set)?;
            written.push(path);
        }
        for (label, rows) in &self.studies {
            let path = case_dir(dir, label)?.join("study.csv");
            write_study(&path, rows)?;
            written.push(path);
        }
        for (label, table) in &self.tables {
            let path = case_dir(dir, label)?.join(&table.file);
            write_table(&path, table)?;
            written.push(path);
        }
        let files: Vec<String> = written
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        let json = serde_json::json!({
            "config": self.config,
            "metadata": Metadata {
                command: self.command.clone(),
                version: env!("CARGO_PKG_VERSION"),
                wall_time_s: self.wall_time_s,
            },
            "warnings": self.warnings,
            "summary": self.summary,
            "files": files,
        });
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&json)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

fn case_dir(dir: &Path, label: &str) -> Result<PathBuf> {
    let d = dir.join(label);
    fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
    Ok(d)
}

/// Shortest representation that round-trips, `.` as decimal separator.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_snapshots(path: &Path, set: &SnapshotSet) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "x", "q", "a", "b"])?;
    for frame in &set.frames {
        let mass = frame.mass();
        ensure!(
            (mass - 1.0).abs() <= set.mass_tol,
            "{}: mass {mass} at t = {} violates the balance tolerance {}",
            set.file,
            frame.t,
            set.mass_tol
        );
        let m = frame.q.len();
        let keep = set.display.trim..m.saturating_sub(set.display.trim);
        let (t, a, b) = (fmt_f64(frame.t), fmt_f64(frame.a), fmt_f64(frame.b));
        for i in keep {
            let q = if set.display.times_width { frame.width * frame.q[i] } else { frame.q[i] };
            w.write_record([t.as_str(), &fmt_f64(frame.x[i]), &fmt_f64(q), a.as_str(), b.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_study(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["param", "error_l1", "error_fix", "order_estimate"])?;
    for r in rows {
        let order = r.order_estimate.map(fmt_f64).unwrap_or_default();
        w.write_record([fmt_f64(r.param), fmt_f64(r.error_l1), fmt_f64(r.error_fix), order])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}
