use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pfmc_core::config::{ForcingPreset, RunConfig};
use pfmc_core::fields::InitialShape;
use pfmc_core::runner::{execute, prepare, with_workers, write_outputs};
use pfmc_core::sweep::{sweep, write_csv, SweepOptions};
use pfmc_core::verify::verify;
use pfmc_core::{oracles, Error, Result};

#[derive(Parser)]
#[command(name = "pfmc", version, about = "Phase-field curvature flow on the torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `workers` from the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Accepted for compatibility; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run and write diag.csv, mono_<i>.csv and snapshots.
    Run(Common),
    /// Run and evaluate the invariant suite.
    Verify(Common),
    /// Repeat the run over several eps.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
        #[arg(long, default_value_t = 4.0)]
        cells_per_eps: f64,
        /// Use `dt = eps^2 / K`.
        #[arg(long)]
        dt_divisor: Option<f64>,
    },
    /// Print oracle values for the configured run.
    Oracle(Common),
}

fn load(c: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    let out = c.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn cmd_run(c: &Common) -> Result<bool> {
    let (cfg, out_dir) = load(c)?;
    with_workers(cfg.workers, || {
        let mut run = prepare(&cfg)?;
        let out = execute(&mut run)?;
        write_outputs(&out, &run, &out_dir)?;
        if let Some(t) = out.extinct_at {
            println!("interface extinct after t = {t}");
        }
        println!("wrote {} rows to {}", out.records.len(), out_dir.join("diag.csv").display());
        Ok(true)
    })?
}

fn cmd_verify(c: &Common) -> Result<bool> {
    let (mut cfg, out_dir) = load(c)?;
    cfg.diagnostics.energy_trace = true;
    with_workers(cfg.workers, || {
        let mut run = prepare(&cfg)?;
        let out = execute(&mut run)?;
        write_outputs(&out, &run, &out_dir)?;
        let rep = verify(&out, &run, &cfg.tolerances)?;
        for (i, m) in rep.mono.iter().enumerate() {
            let mut w = csv::Writer::from_path(out_dir.join(format!("mono_report_{i}.csv")))?;
            for r in &m.rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        let mut w = csv::Writer::from_path(out_dir.join("verify.csv"))?;
        for ch in &rep.checks {
            w.serialize(ch)?;
        }
        w.flush()?;
        for line in rep.lines() {
            println!("{line}");
        }
        println!("verify {}", if rep.pass { "PASS" } else { "FAIL" });
        Ok(rep.pass)
    })?
}

fn cmd_sweep(c: &Common, opts: SweepOptions) -> Result<bool> {
    let (cfg, out_dir) = load(c)?;
    with_workers(cfg.workers, || {
        let rep = sweep(&cfg, &opts)?;
        std::fs::create_dir_all(&out_dir)?;
        write_csv(&rep, &out_dir.join("sweep.csv"))?;
        for r in &rep.rows {
            println!("eps={} n={} xi_l1={:.6e} l_term={:.6e}", r.eps, r.n, r.xi_l1, r.l_term);
        }
        for (k, q) in rep.l_ratios.iter().enumerate() {
            println!("l_term ratio {}->{}: {q:.4}", rep.rows[k].eps, rep.rows[k + 1].eps);
        }
        for w in &rep.warnings {
            eprintln!("warning: {w}");
        }
        println!("xi_l1 decreasing: {}", rep.xi_decreasing);
        println!("l_term decreasing: {}", rep.l_decreasing);
        Ok(rep.pass())
    })?
}

fn cmd_oracle(c: &Common) -> Result<bool> {
    let (cfg, _) = load(c)?;
    let pot = pfmc_core::make_standard_potential();
    println!("sigma = {:.12}", pot.sigma);
    let g = cfg.forcing.g;
    let u = match cfg.forcing.preset {
        ForcingPreset::Constant => cfg.forcing.u.clone().unwrap_or_else(|| vec![0.0; cfg.d]),
        _ => vec![0.0; cfg.d],
    };
    match &cfg.shape {
        InitialShape::Strip { axis, .. } => {
            let mut nu = vec![0.0; cfg.d];
            nu[*axis] = 1.0;
            println!("planar speed = {:.12}", oracles::traveling_wave_speed(&u, g, &nu)?);
        }
        InitialShape::Sphere { radius, .. } => match oracles::sphere_radius(*radius, g, cfg.d, cfg.t_end) {
            Ok(r) => println!("sphere radius at t = {} : {r:.12}", cfg.t_end),
            Err(Error::ExtinctAt(t)) => println!("sphere extinct at t = {t:.12}"),
            Err(e) => return Err(e),
        },
        _ => println!("no closed-form oracle for this shape"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(c) => cmd_run(c),
        Cmd::Verify(c) => cmd_verify(c),
        Cmd::Sweep { common, eps, gamma, cells_per_eps, dt_divisor } => {
            let opts = SweepOptions { eps: eps.clone(), gamma: *gamma, cells_per_eps: *cells_per_eps, dt_divisor: *dt_divisor };
            cmd_sweep(common, opts)
        }
        Cmd::Oracle(c) => cmd_oracle(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("reason={} {}", e.kind(), e);
            ExitCode::from(2)
        }
    }
}

