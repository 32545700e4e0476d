//! Maximum entanglement reachable by unitary evolution.
//!
//! Evolving for time `τ` multiplies each energy component by `e^{-iEτ}`.
//! Instead of scanning `τ`, the phases `φ_E` are treated as free coordinates
//! on a torus and the entropy is maximized over them with Nelder-Mead. When
//! the gaps are rationally independent the time orbit is dense on that torus,
//! so both searches have the same supremum.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{closed_system_bound, SystemSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralData;
use crate::measures::{entropy_of_amplitudes, number_distribution_of};
use crate::nelder_mead::{self, Coefficients};
use crate::states::{
    phase_groups, random_pure_thermal_state, EigenExpansion, PhaseGroups, StateVector,
    ThermalEnsembleSpec,
};

pub const MAX_SIMPLEX_DIMENSION: usize = 400;

/// Slack allowed when checking entropies against the bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PhaseSimplex,
    TimeScan,
}

/// Nelder-Mead coefficient set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexScheme {
    /// Reflection 1, expansion 2, contraction 1/2, shrink 1/2.
    Standard,
    /// Dimension-dependent coefficients.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeScanConfig {
    pub tau_max: f64,
    pub step: f64,
}

impl Default for TimeScanConfig {
    fn default() -> Self {
        TimeScanConfig {
            tau_max: 200.0,
            step: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximizationConfig {
    /// Nelder-Mead runs per RPTS seed before the saturation check.
    pub restarts_per_seed: usize,
    /// Hard cap on runs per seed while the best value is short of the bound.
    pub max_restarts: usize,
    /// Keep restarting while the best entropy is this far below the bound.
    pub saturation_margin: f64,
    pub rpts_seeds: usize,
    pub max_iterations: usize,
    /// Simplex spread (in nats) at which a run counts as converged.
    pub convergence_tol: f64,
    /// Offset of the initial simplex vertices, in radians.
    pub initial_step: f64,
    pub scheme: SimplexScheme,
    pub mode: Mode,
    pub time_scan: TimeScanConfig,
}

impl Default for MaximizationConfig {
    fn default() -> Self {
        MaximizationConfig {
            restarts_per_seed: 3,
            max_restarts: 10,
            saturation_margin: 0.02,
            rpts_seeds: 6,
            max_iterations: 20_000,
            convergence_tol: 1e-7,
            initial_step: 0.5,
            scheme: SimplexScheme::Standard,
            mode: Mode::PhaseSimplex,
            time_scan: TimeScanConfig::default(),
        }
    }
}

impl MaximizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts_per_seed == 0 || self.rpts_seeds == 0 || self.max_iterations == 0 {
            return Err(Error::domain("restart, seed and iteration counts must be positive"));
        }
        if self.max_restarts < self.restarts_per_seed {
            return Err(Error::domain("max_restarts must be at least restarts_per_seed"));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::domain("convergence_tol must be positive"));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0)
            || !self.saturation_margin.is_finite()
        {
            return Err(Error::domain("initial_step must be positive and saturation_margin finite"));
        }
        if self.mode == Mode::TimeScan {
            check_scan(self.time_scan.tau_max, self.time_scan.step)?;
        }
        Ok(())
    }
}

fn check_scan(tau_max: f64, step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("time step must be positive (got {step})")));
    }
    if !(tau_max.is_finite() && tau_max >= 0.0) {
        return Err(Error::domain(format!("tau_max must be non-negative (got {tau_max})")));
    }
    Ok(())
}

/// One Nelder-Mead run (or one time scan) for one initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub restart: usize,
    pub best_entropy: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedResult {
    pub rpts_seed: u64,
    pub initial_entropy: f64,
    pub max_entropy: f64,
    /// Full phase vector (one per degenerate group, group 0 pinned to 0).
    pub best_phases: Vec<f64>,
    pub mean_n_a_at_max: f64,
    pub runs: Vec<RunReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizationResult {
    pub per_seed_maxima: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single seed.
    pub std_dev: f64,
    pub bound: f64,
    /// Phases of the overall best seed.
    pub best_phases: Vec<f64>,
    /// Mean `nA` over the per-seed maximizing states.
    pub best_state_number_mean: f64,
    pub seeds: Vec<SeedResult>,
}

/// Progress notifications for verbose front-ends.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub seed_index: usize,
    pub restart: usize,
    pub iterations: usize,
    pub best_entropy: f64,
}

pub type ProgressHook<'a> = &'a (dyn Fn(Progress) + Sync);

/// SplitMix64 step; derives independent child seeds from a parent.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn bound_for(spectral: &SpectralData) -> f64 {
    let b = spectral.basis();
    closed_system_bound(&SystemSpec::fermionic(b.l(), b.m(), b.n()).expect("valid basis"))
}

/// Entropy as a function of gauge-fixed phases (group 0 pinned to zero).
pub struct PhaseObjective<'a> {
    expansion: EigenExpansion<'a>,
    groups: PhaseGroups,
}

impl<'a> PhaseObjective<'a> {
    pub fn new(state: &StateVector, spectral: &'a SpectralData) -> Result<Self> {
        Ok(PhaseObjective {
            expansion: EigenExpansion::new(state, spectral)?,
            groups: phase_groups(spectral),
        })
    }

    /// Number of free coordinates after gauge fixing.
    pub fn dimension(&self) -> usize {
        self.groups.count.saturating_sub(1)
    }

    pub fn groups(&self) -> &PhaseGroups {
        &self.groups
    }

    /// Full per-group phase vector from free coordinates, wrapped to [0, 2π).
    pub fn full_phases(&self, free: &[f64]) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(free.iter().map(|p| p.rem_euclid(TAU)))
            .take(self.groups.count)
            .collect()
    }

    pub fn amplitudes(&self, full_phases: &[f64]) -> Vec<crate::states::C64> {
        self.expansion.phased_amplitudes(full_phases, &self.groups)
    }

    pub fn entropy_full(&self, full_phases: &[f64]) -> f64 {
        let amps = self.amplitudes(full_phases);
        entropy_of_amplitudes(self.expansion.spectral().basis(), &amps).unwrap_or(f64::NAN)
    }

    pub fn entropy(&self, free: &[f64]) -> f64 {
        self.entropy_full(&self.full_phases(free))
    }

    pub fn mean_n_a(&self, full_phases: &[f64]) -> f64 {
        let amps = self.amplitudes(full_phases);
        number_distribution_of(self.expansion.spectral().basis(), &amps).mean
    }
}

/// Maximize entropy over eigen-phases for a single initial state.
pub fn maximize_for_state(
    state: &StateVector,
    spectral: &SpectralData,
    config: &MaximizationConfig,
    rng_seed: u64,
    bound: f64,
    progress: Option<(ProgressHook<'_>, usize)>,
) -> Result<SeedResult> {
    let objective = PhaseObjective::new(state, spectral)?;
    let dim = objective.dimension();
    if dim > MAX_SIMPLEX_DIMENSION {
        return Err(Error::domain(format!(
            "phase space has {dim} dimensions (limit {MAX_SIMPLEX_DIMENSION}); use time-scan mode"
        )));
    }
    let initial_phases = vec![0.0; objective.groups().count];
    let initial_entropy = objective.entropy_full(&initial_phases);

    let options = nelder_mead::Options {
        coefficients: match config.scheme {
            SimplexScheme::Standard => Coefficients::STANDARD,
            SimplexScheme::Adaptive => Coefficients::adaptive(dim),
        },
        max_iterations: config.max_iterations,
        f_tolerance: config.convergence_tol,
        initial_step: config.initial_step,
    };

    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut best_free: Vec<f64> = vec![0.0; dim];
    let mut best = initial_entropy;
    let mut runs = Vec::new();
    let mut restart = 0;
    while restart < config.max_restarts {
        if restart >= config.restarts_per_seed && best >= bound - config.saturation_margin {
            break;
        }
        // the first run starts from a random torus point; later runs restart
        // the simplex around the incumbent
        let start: Vec<f64> = if restart == 0 {
            (0..dim).map(|_| rng.gen::<f64>() * TAU).collect()
        } else {
            best_free.clone()
        };
        let outcome = nelder_mead::minimize(|x| -objective.entropy(x), &start, &options);
        let value = -outcome.f;
        if let Some((hook, seed_index)) = progress {
            hook(Progress {
                seed_index,
                restart,
                iterations: outcome.iterations,
                best_entropy: value.max(best),
            });
        }
        runs.push(RunReport {
            restart,
            best_entropy: value,
            iterations: outcome.iterations,
            evaluations: outcome.evaluations,
            converged: outcome.converged,
        });
        if value > best {
            best = value;
            best_free = outcome.x;
        }
        restart += 1;
    }

    let best_phases = objective.full_phases(&best_free);
    Ok(SeedResult {
        rpts_seed: state.provenance().seed.unwrap_or(0),
        initial_entropy,
        max_entropy: best,
        mean_n_a_at_max: objective.mean_n_a(&best_phases),
        best_phases,
        runs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeScanResult {
    pub best_tau: f64,
    pub best_entropy: f64,
    pub mean_n_a_at_max: f64,
    pub trace: Vec<(f64, f64)>,
}

/// Evaluate the entropy on the grid `0, step, 2 step, ... <= tau_max`.
pub fn time_scan(
    state: &StateVector,
    spectral: &SpectralData,
    tau_max: f64,
    step: f64,
) -> Result<TimeScanResult> {
    check_scan(tau_max, step)?;
    let expansion = EigenExpansion::new(state, spectral)?;
    // one "group" per eigen-index so φ_k = E_k τ exactly
    let singles = PhaseGroups {
        group_of: (0..spectral.dim()).collect(),
        count: spectral.dim(),
    };
    let basis = spectral.basis();
    let steps = (tau_max / step + 1e-9).floor() as usize;
    let mut trace = Vec::with_capacity(steps + 1);
    let mut best = (0.0, f64::NEG_INFINITY, 0.0);
    for i in 0..=steps {
        let tau = i as f64 * step;
        let phases: Vec<f64> = spectral.eigenvalues().iter().map(|e| e * tau).collect();
        let amps = expansion.phased_amplitudes(&phases, &singles);
        let s = entropy_of_amplitudes(basis, &amps)?;
        trace.push((tau, s));
        if s > best.1 {
            best = (tau, s, number_distribution_of(basis, &amps).mean);
        }
    }
    Ok(TimeScanResult {
        best_tau: best.0,
        best_entropy: best.1,
        mean_n_a_at_max: best.2,
        trace,
    })
}

/// Run the full protocol: `rpts_seeds` random pure thermal states at
/// `ensemble.beta`, child seeds derived from `ensemble.seed`, each maximized
/// independently; statistics over the per-seed maxima.
pub fn maximize_entropy(
    spectral: &SpectralData,
    ensemble: &ThermalEnsembleSpec,
    config: &MaximizationConfig,
    progress: Option<ProgressHook<'_>>,
) -> Result<MaximizationResult> {
    config.validate()?;
    let bound = bound_for(spectral);

    let seeds: Vec<SeedResult> = (0..config.rpts_seeds)
        .into_par_iter()
        .map(|i| {
            let rpts_seed = derive_seed(ensemble.seed, i as u64);
            let state = random_pure_thermal_state(
                spectral,
                &ThermalEnsembleSpec {
                    beta: ensemble.beta,
                    seed: rpts_seed,
                },
            )?;
            match config.mode {
                Mode::PhaseSimplex => maximize_for_state(
                    &state,
                    spectral,
                    config,
                    derive_seed(rpts_seed, 0x5EED),
                    bound,
                    progress.map(|hook| (hook, i)),
                ),
                Mode::TimeScan => {
                    let scan = time_scan(
                        &state,
                        spectral,
                        config.time_scan.tau_max,
                        config.time_scan.step,
                    )?;
                    let groups = phase_groups(spectral);
                    let phases = groups
                        .group_energies(spectral)
                        .iter()
                        .map(|e| (e * scan.best_tau).rem_euclid(TAU))
                        .collect();
                    Ok(SeedResult {
                        rpts_seed,
                        initial_entropy: scan.trace[0].1,
                        max_entropy: scan.best_entropy,
                        best_phases: phases,
                        mean_n_a_at_max: scan.mean_n_a_at_max,
                        runs: vec![RunReport {
                            restart: 0,
                            best_entropy: scan.best_entropy,
                            iterations: scan.trace.len(),
                            evaluations: scan.trace.len(),
                            converged: true,
                        }],
                    })
                }
            }
        })
        .collect::<Result<_>>()?;

    let per_seed_maxima: Vec<f64> = seeds.iter().map(|s| s.max_entropy).collect();
    let (mean, std_dev) = mean_and_sample_std(&per_seed_maxima);
    let best_index = per_seed_maxima
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let best_state_number_mean =
        seeds.iter().map(|s| s.mean_n_a_at_max).sum::<f64>() / seeds.len() as f64;

    Ok(MaximizationResult {
        mean,
        std_dev,
        bound,
        best_phases: seeds[best_index].best_phases.clone(),
        best_state_number_mean,
        per_seed_maxima,
        seeds,
    })
}
