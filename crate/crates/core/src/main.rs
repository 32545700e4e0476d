use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use closed_entanglement::bounds::Statistics;
use closed_entanglement::experiment::commands::{
    bound_csv, bound_rows, bound_table, evolve_trace, maxstate, render_checks, selftest, tau_grid,
    EvolveRequest,
};
use closed_entanglement::experiment::config::{
    ExperimentConfig, HamiltonianChoice, OneOrMany, OutputFormat,
};
use closed_entanglement::experiment::plot::render_svg;
use closed_entanglement::experiment::sweep::{read_csv, run_sweep, write_csv, SweepRow};
use closed_entanglement::hamiltonian::{Boundary, HamiltonianParams, Preset};
use closed_entanglement::maximizer::Progress;
use closed_entanglement::Result;

/// Entanglement bounds for particle-number-conserving systems and a
/// fermion-chain saturation harness.
#[derive(Parser)]
#[command(name = "entbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the entanglement bounds for one or more subsystem sizes.
    Bound(BoundArgs),
    /// Run a saturation sweep from a JSON config.
    Sweep(SweepArgs),
    /// Build and verify the canonical maximally entangled state.
    Maxstate(MaxstateArgs),
    /// Time-evolve a random pure thermal state and trace its entropies.
    Evolve(EvolveArgs),
    /// Check the production routines against the reference oracles.
    Selftest(SelftestArgs),
    /// Re-render a sweep SVG from its CSV.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long = "L")]
    l: usize,
    /// Subsystem sizes (comma separated); defaults to every M in 1..=L.
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "fermionic")]
    stats: Statistics,
    #[arg(long, value_enum, default_value = "table")]
    format: TableFormat,
    /// Also report bounds in bits.
    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; the built-in desk-scale sweep when omitted.
    config: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Permit L = 12, 13.
    #[arg(long)]
    allow_large: bool,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    l_values: Option<Vec<usize>>,
    /// Random pure thermal states per point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Replace the configured Hamiltonians with these presets.
    #[arg(long, value_delimiter = ',')]
    preset: Option<Vec<Preset>>,
    #[arg(long)]
    boundary: Option<Boundary>,
    /// Report every finished restart on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct MaxstateArgs {
    #[arg(long = "L")]
    l: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Write the state vector (text format) to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long = "L")]
    l: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "nonintegrable")]
    preset: Preset,
    /// Explicit couplings `t,t',V,V'`, overriding the preset.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    couplings: Option<Vec<f64>>,
    #[arg(long, default_value = "open")]
    boundary: Boundary,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 0.05)]
    tau_step: f64,
    /// Explicit tau values, overriding the uniform grid.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Trace CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    /// Destination; defaults to the CSV path with an .svg extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "Maximal entanglement entropy vs L")]
    title: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Maxstate(a) => cmd_maxstate(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Selftest(a) => cmd_selftest(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("entbound: {e}");
            if e.is_invalid_input() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_bound(a: BoundArgs) -> Result<ExitCode> {
    let rows = bound_rows(a.l, &a.m, a.n, a.stats)?;
    match a.format {
        TableFormat::Table => print(&bound_table(&rows, a.bits))?,
        TableFormat::Csv => print(&bound_csv(&rows, a.bits)?)?,
        TableFormat::Json => print(&(serde_json::to_string_pretty(&rows)? + "\n"))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &SweepArgs) {
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    if let Some(dir) = &a.out {
        cfg.output.dir = Some(dir.clone());
    }
    if a.allow_large {
        cfg.allow_large = true;
    }
    if let Some(b) = &a.betas {
        cfg.betas = b.clone();
    }
    if let Some(l) = &a.l_values {
        cfg.l_values = l.clone();
    }
    if let Some(s) = a.seeds {
        cfg.maximizer.rpts_seeds = s;
    }
    if let Some(p) = &a.preset {
        cfg.hamiltonian = OneOrMany::Many(p.iter().map(|&p| HamiltonianChoice::Preset(p)).collect());
    }
    if let Some(b) = a.boundary {
        cfg.boundary = b;
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::desk_default(),
    };
    apply_overrides(&mut cfg, &a);
    cfg.validate()?;
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let log = |p: Progress| {
        eprintln!(
            "  seed {} restart {}: S = {:.6} after {} iterations",
            p.seed_index, p.restart, p.best_entropy, p.iterations
        );
    };
    let start = Instant::now();
    let reports = run_sweep(&cfg, jobs, a.verbose.then_some(&log as _))?;
    for r in &reports {
        let row = &r.row;
        match (&row.error, row.mean_max_entropy) {
            (None, Some(mean)) => eprintln!(
                "{} L={} beta={}: S_max = {:.6} ± {:.6} (bound {:.6}) in {:.1}s",
                row.preset,
                row.l,
                row.beta,
                mean,
                row.std_dev.unwrap_or(0.0),
                row.bound,
                r.wall_time_s
            ),
            (err, _) => eprintln!(
                "{} L={} beta={}: FAILED: {}",
                row.preset,
                row.l,
                row.beta,
                err.as_deref().unwrap_or("no result")
            ),
        }
    }
    eprintln!("sweep finished in {:.1}s", start.elapsed().as_secs_f64());

    let rows: Vec<SweepRow> = reports.iter().map(|r| r.row.clone()).collect();
    let dir = cfg.output.resolved_dir();
    let stem = dir.join(&cfg.output.name);
    for format in &cfg.output.formats {
        let (path, contents) = match format {
            OutputFormat::Csv => (stem.with_extension("csv"), write_csv(&rows)?),
            OutputFormat::Json => (
                stem.with_extension("json"),
                serde_json::to_string_pretty(&serde_json::json!({
                    "config": cfg,
                    "points": reports,
                }))? + "\n",
            ),
            OutputFormat::Svg => (
                stem.with_extension("svg"),
                render_svg(&rows, "Maximal entanglement entropy vs L"),
            ),
        };
        write_file(&path, &contents)?;
        println!("{}", path.display());
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed", rows.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_maxstate(a: MaxstateArgs) -> Result<ExitCode> {
    let report = maxstate(a.l, a.m, a.n)?;
    if let Some(path) = &a.dump {
        write_file(path, &report.state.to_text())?;
    }
    if a.json {
        print(&(serde_json::to_string_pretty(&report)? + "\n"))?;
    } else {
        print(&report.render())?;
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Largest tolerated spread of `<H>` along a trace.
const ENERGY_DRIFT_TOL: f64 = 1e-9;

fn cmd_evolve(a: EvolveArgs) -> Result<ExitCode> {
    let params = match &a.couplings {
        Some(c) => HamiltonianParams {
            t: c[0],
            t_prime: c[1],
            v: c[2],
            v_prime: c[3],
            boundary: a.boundary,
        },
        None => a.preset.params().with_boundary(a.boundary),
    };
    let taus = match &a.taus {
        Some(t) => t.clone(),
        None => tau_grid(a.tau_max, a.tau_step)?,
    };
    let trace = evolve_trace(&EvolveRequest {
        l: a.l,
        m: a.m,
        n: a.n,
        params,
        beta: a.beta,
        seed: a.seed,
        taus,
    })?;
    let csv = trace.to_csv()?;
    match &a.out {
        Some(path) => write_file(path, &csv)?,
        None => print(&csv)?,
    }
    if let Some(path) = &a.svg {
        let title = format!("L = {}, M = {}, n = {}, beta = {}", a.l, a.m, a.n, a.beta);
        write_file(path, &trace.to_svg(&title))?;
    }
    let drift = trace.energy_drift();
    if drift > ENERGY_DRIFT_TOL {
        eprintln!("entbound: energy drifted by {drift:e} along the trace");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(a: SelftestArgs) -> Result<ExitCode> {
    let checks = selftest(a.seed);
    print(&render_checks(&checks))?;
    Ok(if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_plot(a: PlotArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.csv)?;
    let rows = read_csv(&text)?;
    let out = a.out.unwrap_or_else(|| a.csv.with_extension("svg"));
    write_file(&out, &render_svg(&rows, &a.title))?;
    println!("{}", out.display());
    Ok(ExitCode::SUCCESS)
}
