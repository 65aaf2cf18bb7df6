//! Repeats one run over a list of `eps` at a fixed `h / eps` and compares
//! the discrepancy and the clamping term at the final time.

use std::path::Path;

use serde::Serialize;

use crate::config::{Choice, RunConfig};
use crate::diagnostics::l_term;
use crate::error::{invalid, Result};
use crate::runner::{execute, prepare};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub eps: Vec<f64>,
    /// `n = next_pow2(ceil(cells_per_eps / eps))`.
    pub cells_per_eps: f64,
    /// `L` is pinned to `eps^-gamma`.
    pub gamma: f64,
    /// `dt = eps^2 / dt_divisor`; `None` keeps the configured `dt`.
    pub dt_divisor: Option<f64>,
}

impl SweepOptions {
    pub fn new(eps: Vec<f64>, gamma: f64) -> Self {
        SweepOptions { eps, cells_per_eps: 4.0, gamma, dt_divisor: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub n: usize,
    pub dt: f64,
    pub l: f64,
    pub t: f64,
    pub xi_l1: f64,
    pub l_term: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `l_term(eps_k) / l_term(eps_{k+1})` for consecutive entries.
    pub l_ratios: Vec<f64>,
    pub xi_decreasing: bool,
    pub l_decreasing: bool,
    pub warnings: Vec<String>,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.xi_decreasing && self.l_decreasing
    }
}

pub fn cells_for(eps: f64, cells_per_eps: f64) -> usize {
    ((cells_per_eps / eps).ceil() as usize).next_power_of_two().max(4)
}

fn strictly_decreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn sweep(base: &RunConfig, opts: &SweepOptions) -> Result<SweepReport> {
    if opts.eps.is_empty() {
        return Err(invalid("sweep needs at least one eps"));
    }
    if opts.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("sweep eps must be strictly descending"));
    }
    let mut rows = Vec::new();
    for &eps in &opts.eps {
        let mut cfg = base.clone();
        cfg.eps = Choice::Value(eps);
        cfg.epsilon = None;
        cfg.n = cells_for(eps, opts.cells_per_eps);
        cfg.forcing.l_override = Some(eps.powf(-opts.gamma));
        cfg.probes.clear();
        cfg.snapshot_times.clear();
        cfg.diagnostics.energy_trace = false;
        if let Some(k) = opts.dt_divisor {
            cfg.dt = Choice::Value(eps * eps / k);
        }
        let mut run = prepare(&cfg)?;
        let out = execute(&mut run)?;
        let last = out.records.last().or(out.initial.as_ref()).expect("initial record");
        rows.push(SweepRow {
            eps,
            n: cfg.n,
            dt: run.state.dt,
            l: run.state.forcing.l_eps,
            t: run.state.t,
            xi_l1: last.xi_l1,
            l_term: l_term(&run.state),
        });
    }
    let l_ratios = rows.windows(2).map(|w| w[0].l_term / w[1].l_term).collect();
    let mut warnings = Vec::new();
    if rows.len() < 2 {
        warnings.push("no trend: a single eps gives nothing to compare".to_string());
    }
    Ok(SweepReport {
        xi_decreasing: strictly_decreasing(rows.iter().map(|r| r.xi_l1)),
        l_decreasing: strictly_decreasing(rows.iter().map(|r| r.l_term)),
        rows,
        l_ratios,
        warnings,
    })
}

pub fn write_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
