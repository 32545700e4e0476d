//! Saturation sweeps over lattice size, temperature and couplings.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, HamiltonianChoice};
use crate::basis::SectorBasis;
use crate::bounds::{closed_system_bound, SystemSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, diagonalize, Boundary};
use crate::maximizer::{derive_seed, maximize_entropy, MaximizationResult, ProgressHook};
use crate::states::ThermalEnsembleSpec;

pub const CSV_SCHEMA: &str = "# closed-entanglement sweep v1";

pub const CSV_COLUMNS: [&str; 12] = [
    "L",
    "M",
    "n",
    "beta",
    "preset",
    "boundary",
    "mean_max_entropy_nats",
    "std_dev",
    "bound_nats",
    "mean_nA_at_max",
    "seeds",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub preset: String,
    pub boundary: Boundary,
    pub mean_max_entropy: Option<f64>,
    pub std_dev: Option<f64>,
    pub bound: f64,
    pub mean_n_a_at_max: Option<f64>,
    pub seeds: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPointReport {
    pub row: SweepRow,
    pub wall_time_s: f64,
    pub detail: Option<MaximizationResult>,
}

#[derive(Clone, Debug)]
struct Point {
    hamiltonian: HamiltonianChoice,
    l: usize,
    beta: f64,
}

fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    let mut out = Vec::new();
    for h in cfg.hamiltonians() {
        for &l in &cfg.l_values {
            for &beta in &cfg.betas {
                out.push(Point {
                    hamiltonian: h.clone(),
                    l,
                    beta,
                });
            }
        }
    }
    out
}

fn run_point(
    cfg: &ExperimentConfig,
    p: &Point,
    progress: Option<ProgressHook<'_>>,
) -> SweepPointReport {
    let start = Instant::now();
    let (m, n) = (cfg.system.m, cfg.system.n);
    let params = p.hamiltonian.params(cfg.boundary);
    let bound = SystemSpec::fermionic(p.l, m, n)
        .map(|s| closed_system_bound(&s))
        .unwrap_or(f64::NAN);

    let outcome = (|| -> Result<MaximizationResult> {
        let basis = Arc::new(SectorBasis::new(p.l, m, n)?);
        let h = build_hamiltonian(basis, params)?;
        let spectral = diagonalize(&h)?;
        // same random coefficients for every beta and coupling at a given L
        let ensemble = ThermalEnsembleSpec {
            beta: p.beta,
            seed: derive_seed(cfg.master_seed, p.l as u64),
        };
        maximize_entropy(&spectral, &ensemble, &cfg.maximizer, progress)
    })();

    let mut row = SweepRow {
        l: p.l,
        m,
        n,
        beta: p.beta,
        preset: p.hamiltonian.label(),
        boundary: params.boundary,
        mean_max_entropy: None,
        std_dev: None,
        bound,
        mean_n_a_at_max: None,
        seeds: cfg.maximizer.rpts_seeds,
        error: None,
    };
    let detail = match outcome {
        Ok(r) => {
            row.mean_max_entropy = Some(r.mean);
            row.std_dev = Some(r.std_dev);
            row.mean_n_a_at_max = Some(r.best_state_number_mean);
            Some(r)
        }
        Err(e) => {
            row.error = Some(e.to_string());
            None
        }
    };
    SweepPointReport {
        row,
        wall_time_s: start.elapsed().as_secs_f64(),
        detail,
    }
}

/// Run every point on a pool of `jobs` threads. Results come back in
/// (hamiltonian, L, beta) order regardless of completion order.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    jobs: usize,
    progress: Option<ProgressHook<'_>>,
) -> Result<Vec<SweepPointReport>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let pts = points(cfg);
    Ok(pool.install(|| pts.par_iter().map(|p| run_point(cfg, p, progress)).collect()))
}

/// `x` with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("CSV: {e}"))
}

/// Versioned CSV: one `#` schema line, the header, then one row per point.
pub fn write_csv(rows: &[SweepRow]) -> Result<String> {
    let mut out = format!("{CSV_SCHEMA}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for r in rows {
            w.write_record([
                r.l.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                fmt_sig(r.beta),
                r.preset.clone(),
                r.boundary.to_string(),
                opt(r.mean_max_entropy),
                opt(r.std_dev),
                fmt_sig(r.bound),
                opt(r.mean_n_a_at_max),
                r.seeds.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Parse a sweep CSV written by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    match text.lines().next() {
        Some(first) if first.trim() == CSV_SCHEMA => {}
        Some(first) => return Err(Error::Parse(format!("unsupported schema line '{first}'"))),
        None => return Err(Error::Parse("empty CSV".into())),
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let f = rec.map_err(csv_err)?;
            let bad = |what: &str| Error::Parse(format!("bad {what} in {f:?}"));
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            let opt_num = |s: &str, what: &str| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s, what).map(Some)
                }
            };
            Ok(SweepRow {
                l: f[0].parse().map_err(|_| bad("L"))?,
                m: f[1].parse().map_err(|_| bad("M"))?,
                n: f[2].parse().map_err(|_| bad("n"))?,
                beta: num(&f[3], "beta")?,
                preset: f[4].to_string(),
                boundary: f[5].parse().map_err(|_| bad("boundary"))?,
                mean_max_entropy: opt_num(&f[6], "mean")?,
                std_dev: opt_num(&f[7], "std_dev")?,
                bound: num(&f[8], "bound")?,
                mean_n_a_at_max: opt_num(&f[9], "mean_nA")?,
                seeds: f[10].parse().map_err(|_| bad("seeds"))?,
                error: (!f[11].is_empty()).then(|| f[11].to_string()),
            })
        })
        .collect()
}
