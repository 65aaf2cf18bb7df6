//! Builds a run from a [`RunConfig`], executes it with diagnostics hooks and
//! writes the output files.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use crate::config::{Choice, ForcingPreset, RunConfig};
use crate::diagnostics::{record, DensitySampling, DiagOptions, DiagnosticsRecord, EnergySample};
use crate::error::{invalid, Error, Result};
use crate::fields::{initial_phi_with, mollify_forcing, select_epsilon, ForcingData, DEFAULT_CLAMP_DELTA};
use crate::grid::{snapshot, ScalarField, TorusGrid, VectorField};
use crate::monotonicity::{sample, KernelSpec, MonoSample, MAX_HORIZON};
use crate::potential::{make_standard_potential, profile};
use crate::solver::{run_with, SimState};

pub struct PreparedRun {
    pub state: SimState,
    pub diag: DiagOptions,
    pub probes: Vec<KernelSpec>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    /// Row at the start time, also the first row of `records` when any step ran.
    pub initial: Option<DiagnosticsRecord>,
    pub records: Vec<DiagnosticsRecord>,
    /// Per-step energy samples, empty unless `diagnostics.energy_trace` is set.
    pub energy: Vec<EnergySample>,
    /// One sample list per probe.
    pub mono: Vec<Vec<MonoSample>>,
    pub snapshots: Vec<(f64, ScalarField)>,
    /// Time of the last hook, when the interface vanished before `t_end`.
    pub extinct_at: Option<f64>,
}

/// Default mollifier radius in cells.
pub const MOLLIFY_CELLS: f64 = 4.0;

fn forcing_from(cfg: &RunConfig, grid: TorusGrid) -> Result<ForcingData> {
    let f = &cfg.forcing;
    let delta = f.delta.unwrap_or(MOLLIFY_CELLS * grid.h());
    let mut fd = match f.preset {
        ForcingPreset::None => ForcingData::none(grid),
        ForcingPreset::Constant => {
            let u = f.u.clone().unwrap_or_else(|| vec![0.0; cfg.d]);
            let raw_u = VectorField::constant(grid, &u)?;
            mollify_forcing(&raw_u, &ScalarField::constant(grid, f.g), delta)?
        }
        ForcingPreset::Shear => {
            if cfg.d < 2 {
                return Err(invalid("shear forcing needs d >= 2"));
            }
            let a = f.amplitude;
            let raw_u = VectorField::from_fn(grid, |x| [a * (TAU * x[1]).sin(), 0.0, 0.0]);
            mollify_forcing(&raw_u, &ScalarField::constant(grid, f.g), delta)?
        }
        ForcingPreset::Snapshot => {
            let load = |p: &Path| -> Result<ScalarField> {
                let s = snapshot::load(p)?;
                if s.field.grid() != &grid {
                    return Err(invalid(format!("snapshot {} does not match the run grid", p.display())));
                }
                Ok(s.field)
            };
            let raw_u = if f.u_paths.is_empty() {
                VectorField::zeros(grid)
            } else {
                if f.u_paths.len() != cfg.d {
                    return Err(invalid(format!("forcing.u_paths has {} entries, need {}", f.u_paths.len(), cfg.d)));
                }
                VectorField::from_components(grid, f.u_paths.iter().map(|p| load(p)).collect::<Result<_>>()?)?
            };
            let raw_g = match &f.g_path {
                Some(p) => load(p)?,
                None => ScalarField::constant(grid, f.g),
            };
            mollify_forcing(&raw_u, &raw_g, delta)?
        }
    };
    if let Some(l) = f.l_override {
        fd.pin_l(l);
    }
    Ok(fd)
}

pub fn prepare(cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    let grid = TorusGrid::new(cfg.d, cfg.n)?;
    let mut forcing = forcing_from(cfg, grid)?;
    let eps = match (cfg.eps, &cfg.epsilon) {
        (Choice::Value(v), _) => v,
        (Choice::Auto(_), Some(e)) => select_epsilon(&mut forcing, e.gamma, &e.candidates)?,
        (Choice::Auto(_), None) => return Err(Error::Config("eps = \"auto\" needs an [epsilon] section".into())),
    };
    let potential = make_standard_potential();
    let prof = profile(&potential, eps)?;
    let phi = initial_phi_with(grid, &cfg.shape, &prof, &cfg.init)?;
    let state = SimState::with_clamp_delta(
        phi,
        eps,
        potential,
        forcing,
        cfg.scheme,
        cfg.dt.value(),
        cfg.clamp_delta.unwrap_or(DEFAULT_CLAMP_DELTA),
    )?;
    let mut diag = DiagOptions::new(&grid);
    diag.sampling = DensitySampling::geometric(&grid, cfg.diagnostics.density_lattice, cfg.diagnostics.radii_per_octave);
    if let Some(c) = cfg.shape.sphere_center() {
        diag = diag.with_center(c);
    }
    let probes = cfg.probes.iter().map(|p| KernelSpec::new(&p.y, p.s, p.cutoff)).collect();
    Ok(PreparedRun { state, diag, probes, config: cfg.clone() })
}

fn sample_probes(state: &SimState, probes: &[KernelSpec], out: &mut [Vec<MonoSample>]) -> Result<()> {
    for (yks, acc) in probes.iter().zip(out.iter_mut()) {
        if state.t < yks.s && yks.s - state.t <= MAX_HORIZON {
            acc.push(sample(state, yks)?);
        }
    }
    Ok(())
}

/// Runs to `t_end`. Records are taken at the start and at every hook; a
/// vanished interface ends the run early without error.
pub fn execute(run: &mut PreparedRun) -> Result<RunOutput> {
    let PreparedRun { state, diag, probes, config } = run;
    let mut out = RunOutput { mono: vec![Vec::new(); probes.len()], ..Default::default() };
    let t0 = state.t;
    let mut stops: Vec<f64> = config.snapshot_times.iter().copied().filter(|&t| t > t0 && t < config.t_end).collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(config.t_end);
    if config.snapshot_times.contains(&t0) {
        out.snapshots.push((t0, state.phi.clone()));
    }
    let initial = match record(state, diag) {
        Ok(r) => r,
        Err(Error::Extinct) => return Err(invalid("initial data has no interface around the configured center")),
        Err(e) => return Err(e),
    };
    out.initial = Some(initial.clone());
    if config.t_end <= t0 {
        return Ok(out);
    }
    out.records.push(initial);
    sample_probes(state, probes, &mut out.mono)?;
    let trace = config.diagnostics.energy_trace;
    if trace {
        out.energy.push(EnergySample::of(state));
    }
    for stop in stops {
        let energy = &mut out.energy;
        let records = &mut out.records;
        let mono = &mut out.mono;
        let result = run_with(
            state,
            stop,
            config.hook_every,
            |s| {
                if trace {
                    energy.push(EnergySample::of(s));
                }
                Ok(())
            },
            |s| {
                records.push(record(s, diag)?);
                sample_probes(s, probes, mono)
            },
        );
        match result {
            Ok(()) => {}
            Err(Error::Extinct) => {
                out.extinct_at = out.records.last().map(|r| r.t);
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        if config.snapshot_times.contains(&stop) {
            out.snapshots.push((stop, state.phi.clone()));
        }
    }
    Ok(out)
}

/// Writes `diag.csv`, `mono_<i>.csv`, `energy.csv` (when traced) and
/// `snapshots/*.pfmc`, plus a PGM per snapshot when images are enabled.
pub fn write_outputs(out: &RunOutput, run: &PreparedRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("diag.csv"))?;
    if out.records.is_empty() {
        w.write_record(crate::diagnostics::RECORD_COLUMNS)?;
    }
    for r in &out.records {
        w.serialize(r)?;
    }
    w.flush()?;
    for (i, samples) in out.mono.iter().enumerate() {
        let mut w = csv::Writer::from_path(dir.join(format!("mono_{i}.csv")))?;
        if samples.is_empty() {
            w.write_record(["t", "i_value", "rhs_density", "mu_half_ball", "xi_weighted"])?;
        }
        for s in samples {
            w.serialize(s)?;
        }
        w.flush()?;
    }
    if !out.energy.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("energy.csv"))?;
        w.write_record(["t", "mu", "dissipation", "forcing"])?;
        for e in &out.energy {
            w.write_record([e.t, e.mu, e.dissipation, e.forcing].map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    if !out.snapshots.is_empty() {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for (k, (t, phi)) in out.snapshots.iter().enumerate() {
            snapshot::save(&snap_dir.join(format!("phi_{k:04}.pfmc")), phi, run.state.eps, *t)?;
            if run.config.diagnostics.images {
                write_pgm(&snap_dir.join(format!("phi_{k:04}.pgm")), phi)?;
            }
        }
    }
    Ok(())
}

/// Binary PGM of `{phi > 0}`, one byte per cell. 3-D fields are written as
/// stacked `n x n` slices.
pub fn write_pgm(path: &Path, phi: &ScalarField) -> Result<()> {
    let g = phi.grid();
    let n = g.n();
    let rows = g.len() / n;
    let mut buf = format!("P5\n{n} {rows}\n255\n").into_bytes();
    buf.extend(phi.data.iter().map(|&v| if v > 0.0 { 255u8 } else { 0 }));
    fs::write(path, buf)?;
    Ok(())
}

/// Runs `f` on a rayon pool with `workers` threads; 0 uses the global pool.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
