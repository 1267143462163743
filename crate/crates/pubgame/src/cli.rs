//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a failing check, 2 for
//! malformed configuration or IO errors, 3 for unsupported parameter
//! combinations such as smooth dynamics with the PRP ranking.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use pubgame_core::dynamics::run_dynamic;

use crate::config::{resolve_globals, FileConfig, FiguresParams, Globals, SimulateParams, SweepParams, VerifyParams, SEED_ENV};
use crate::experiments::{reproduce_figures, run_experiment};
use crate::trace::write_trace;
use crate::verify::{run_checks, Faults};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "pubgame", version, about = "Simulate and verify the strategic publishers game")]
pub struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed [env: PUBGAME_SEED] [default: 42]
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory [default: .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one better-response dynamic and write its trace
    Simulate(SimulateParams),
    /// Sweep lambda or k over sampled games and summarize convergence and welfare
    Sweep(SweepParams),
    /// Run the numerical check table
    Verify {
        #[command(flatten)]
        params: VerifyParams,
        /// Accept every linear slope, to see the slope checks fail
        #[arg(long, hide = true)]
        fault_disable_slope_validation: bool,
    },
    /// Produce fig1.csv, fig2.csv, fig3.csv and runs.jsonl
    Figures(FiguresParams),
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let globals = resolve_globals(cli.seed, cli.out, cli.jobs, &file, env_seed.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(globals.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a pool of {} threads: {e}", globals.jobs)))?;
    pool.install(|| match cli.command {
        Command::Simulate(p) => simulate(p.overlay(&file.simulate), &globals),
        Command::Sweep(p) => sweep(p.overlay(&file.sweep), &globals),
        Command::Verify {
            params,
            fault_disable_slope_validation,
        } => verify(
            params.overlay(&file.verify),
            &globals,
            Faults {
                disable_slope_validation: fault_disable_slope_validation,
            },
        ),
        Command::Figures(p) => figures(p.overlay(&file.figures), &globals),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn simulate(params: SimulateParams, globals: &Globals) -> Result<i32> {
    let plan = params.resolve(globals)?;
    let trace = run_dynamic(&plan.game, &plan.dynamics)?;
    let mut buf = Vec::new();
    write_trace(&mut buf, &plan.game, &plan.dynamics, &trace)?;
    write_file(&plan.trace, std::str::from_utf8(&buf).expect("serde_json writes UTF-8"))?;
    println!(
        "converged={} iters={} max_iters={} publishers_welfare={} users_welfare={} trace={}",
        trace.converged,
        trace.iterations_used,
        plan.dynamics.max_iters,
        trace.final_welfare.publishers_welfare,
        trace.final_welfare.users_welfare,
        plan.trace.display()
    );
    Ok(0)
}

fn sweep(params: SweepParams, globals: &Globals) -> Result<i32> {
    let config = params.resolve(globals)?;
    ensure_dir(&globals.out)?;
    let summary = run_experiment(&config)?;
    let csv = globals.out.join("sweep.csv");
    write_file(&csv, &summary.to_csv())?;
    write_file(&globals.out.join("sweep_runs.jsonl"), &summary.runs_jsonl()?)?;
    println!("wrote {} ({} cells, {} runs)", csv.display(), summary.cells.len(), summary.runs.len());
    Ok(0)
}

fn figures(params: FiguresParams, globals: &Globals) -> Result<i32> {
    let config = params.resolve(globals)?;
    ensure_dir(&globals.out)?;
    let summaries = reproduce_figures(&config)?;
    let mut runs = String::new();
    for s in &summaries {
        let path = globals.out.join(format!("{}.csv", s.figure));
        write_file(&path, &s.to_csv())?;
        println!("wrote {}", path.display());
        runs.push_str(&s.runs_jsonl()?);
    }
    write_file(&globals.out.join("runs.jsonl"), &runs)?;
    Ok(0)
}

fn verify(params: VerifyParams, globals: &Globals, faults: Faults) -> Result<i32> {
    let mut opts = params.resolve(globals)?;
    opts.faults = faults;
    let rows = run_checks(&opts)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &rows {
        let _ = writeln!(out, "{r}");
    }
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{}/{}", r.group, r.name)).collect();
    if failed.is_empty() {
        let _ = writeln!(out, "all {} checks passed", rows.len());
        Ok(0)
    } else {
        let _ = writeln!(out, "{} of {} checks failed: {}", failed.len(), rows.len(), failed.join(", "));
        Ok(1)
    }
}
