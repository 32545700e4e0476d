//! Subcommand bodies. Each returns its report as data or text so the binary
//! stays a thin argument parser.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::plot::render_trace_svg;
use super::sweep::fmt_sig;
use crate::basis::SectorBasis;
use crate::bounds::{
    closed_system_bound, flattened_bound, flattening_threshold, general_bound,
    max_ent_number_distribution, mean_subsystem_particles, n_a_range, Statistics, SystemSpec,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, diagonalize, HamiltonianParams, Preset};
use crate::measures::{
    entanglement_entropy, entanglement_entropy_side, max_entanglement_test, number_distribution,
    renyi_entropy, Side, Verdict,
};
use crate::oracle;
use crate::states::{
    describe, energy_expectation, evolve, max_entangled_state, random_pure_thermal_state,
    StateVector, ThermalEnsembleSpec, C64,
};

// ---------------------------------------------------------------- bound

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub statistics: Statistics,
    pub closed_bound: f64,
    pub general_bound: f64,
    /// Fermionic only.
    pub flattened_bound: Option<f64>,
    pub flattening_threshold: Option<usize>,
    /// `(nA, p)` for a maximally entangled state.
    pub distribution: Vec<(usize, f64)>,
    pub mean_n_a: f64,
}

/// One row per subsystem size; `ms` empty means every `M` in `1..=L`.
pub fn bound_rows(l: usize, ms: &[usize], n: usize, statistics: Statistics) -> Result<Vec<BoundRow>> {
    let ms: Vec<usize> = if ms.is_empty() { (1..=l).collect() } else { ms.to_vec() };
    ms.into_iter()
        .map(|m| {
            let spec = SystemSpec::new(l, m, n, statistics)?;
            let (flat, threshold) = match statistics {
                Statistics::Fermionic => (
                    Some(flattened_bound(m, n, statistics)?),
                    Some(flattening_threshold(m, n, statistics)?),
                ),
                Statistics::Bosonic => (None, None),
            };
            Ok(BoundRow {
                l,
                m,
                n,
                statistics,
                closed_bound: closed_system_bound(&spec),
                general_bound: general_bound(&spec),
                flattened_bound: flat,
                flattening_threshold: threshold,
                distribution: max_ent_number_distribution(&spec),
                mean_n_a: mean_subsystem_particles(&spec),
            })
        })
        .collect()
}

fn distribution_field(d: &[(usize, f64)]) -> String {
    d.iter()
        .map(|(k, p)| format!("{k}:{}", fmt_sig(*p)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// CSV with the bound columns, optionally repeated in bits.
pub fn bound_csv(rows: &[BoundRow], bits: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "L", "M", "n", "statistics", "closed_bound_nats", "general_bound_nats",
    ];
    if bits {
        header.extend(["closed_bound_bits", "general_bound_bits"]);
    }
    header.extend(["flattened_bound_nats", "flattening_threshold", "mean_nA", "p_nA"]);
    let csv_err = |e: csv::Error| Error::Parse(format!("CSV: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.l.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.statistics.to_string(),
            fmt_sig(r.closed_bound),
            fmt_sig(r.general_bound),
        ];
        if bits {
            rec.push(fmt_sig(r.closed_bound / std::f64::consts::LN_2));
            rec.push(fmt_sig(r.general_bound / std::f64::consts::LN_2));
        }
        rec.push(r.flattened_bound.map(fmt_sig).unwrap_or_default());
        rec.push(r.flattening_threshold.map(|t| t.to_string()).unwrap_or_default());
        rec.push(fmt_sig(r.mean_n_a));
        rec.push(distribution_field(&r.distribution));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Aligned human-readable table.
pub fn bound_table(rows: &[BoundRow], bits: bool) -> String {
    let unit = if bits { "bits" } else { "nats" };
    let scale = if bits { std::f64::consts::LN_2.recip() } else { 1.0 };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>4} {:>4} {:>10} {:>12} {:>12} {:>12} {:>9} {:>8}  p(nA)",
        "L", "M", "n", "stats", format!("bound/{unit}"), "general", "flattened", "L*", "mean nA"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>4} {:>4} {:>4} {:>10} {:>12.6} {:>12.6} {:>12} {:>9} {:>8.4}  {}",
            r.l,
            r.m,
            r.n,
            r.statistics,
            r.closed_bound * scale,
            r.general_bound * scale,
            r.flattened_bound
                .map(|b| format!("{:.6}", b * scale))
                .unwrap_or_else(|| "-".into()),
            r.flattening_threshold
                .map(|t| t.to_string())
                .unwrap_or_else(|| "-".into()),
            r.mean_n_a,
            r.distribution
                .iter()
                .map(|(k, p)| format!("{k}:{p:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    out
}

// ---------------------------------------------------------------- maxstate

#[derive(Clone, Debug, Serialize)]
pub struct MaxStateReport {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub entropy: f64,
    pub bound: f64,
    pub difference: f64,
    pub nonzero_amplitudes: usize,
    pub distribution_distance: f64,
    pub distribution_consistent: bool,
    pub mean_n_a: f64,
    #[serde(skip)]
    pub state: StateVector,
}

/// Largest tolerated `|S - bound|` for the constructed state.
pub const MAXSTATE_TOL: f64 = 1e-10;

pub fn maxstate(l: usize, m: usize, n: usize) -> Result<MaxStateReport> {
    let spec = SystemSpec::fermionic(l, m, n)?;
    let basis = Arc::new(SectorBasis::new(l, m, n)?);
    let state = max_entangled_state(basis);
    let entropy = entanglement_entropy(&state)?;
    let bound = closed_system_bound(&spec);
    let check = max_entanglement_test(&state, 1e-10);
    Ok(MaxStateReport {
        l,
        m,
        n,
        entropy,
        bound,
        difference: entropy - bound,
        nonzero_amplitudes: state.amplitudes().iter().filter(|a| a.norm() > 0.0).count(),
        distribution_distance: check.distance,
        distribution_consistent: check.verdict == Verdict::Possible,
        mean_n_a: number_distribution(&state).mean,
        state,
    })
}

impl MaxStateReport {
    pub fn passed(&self) -> bool {
        self.difference.abs() < MAXSTATE_TOL && self.distribution_consistent
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "L = {}, M = {}, n = {}", self.l, self.m, self.n);
        let _ = writeln!(out, "entropy            {:.15}", self.entropy);
        let _ = writeln!(out, "bound              {:.15}", self.bound);
        let _ = writeln!(out, "entropy - bound    {:.3e}", self.difference);
        let _ = writeln!(out, "nonzero amplitudes {}", self.nonzero_amplitudes);
        let _ = writeln!(out, "mean nA            {:.12}", self.mean_n_a);
        let _ = writeln!(
            out,
            "p(nA) check        {} (TV distance {:.3e})",
            if self.distribution_consistent { "consistent" } else { "INCONSISTENT" },
            self.distribution_distance
        );
        let _ = writeln!(out, "status             {}", if self.passed() { "OK" } else { "FAILED" });
        out.push_str("state:\n");
        out.push_str(&describe(&self.state, 0.0));
        out
    }
}

// ---------------------------------------------------------------- evolve

#[derive(Clone, Debug)]
pub struct EvolveRequest {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub params: HamiltonianParams,
    pub beta: f64,
    pub seed: u64,
    pub taus: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub tau: f64,
    pub s1: f64,
    pub s2: f64,
    pub energy: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveTrace {
    pub bound: f64,
    pub n_a_values: Vec<usize>,
    pub points: Vec<TracePoint>,
}

/// Uniform grid `0, step, ..., <= tau_max`.
pub fn tau_grid(tau_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(tau_max.is_finite() && tau_max >= 0.0) {
        return Err(Error::domain(format!("tau_max must be finite and >= 0 (got {tau_max})")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("tau step must be positive (got {step})")));
    }
    let count = (tau_max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| i as f64 * step).collect())
}

pub fn evolve_trace(req: &EvolveRequest) -> Result<EvolveTrace> {
    if req.taus.is_empty() {
        return Err(Error::domain("the tau grid is empty"));
    }
    if let Some(bad) = req.taus.iter().find(|t| !t.is_finite()) {
        return Err(Error::domain(format!("tau values must be finite (got {bad})")));
    }
    let spec = SystemSpec::fermionic(req.l, req.m, req.n)?;
    let basis = Arc::new(SectorBasis::new(req.l, req.m, req.n)?);
    let h = build_hamiltonian(basis, req.params)?;
    let spectral = diagonalize(&h)?;
    let psi0 = random_pure_thermal_state(
        &spectral,
        &ThermalEnsembleSpec {
            beta: req.beta,
            seed: req.seed,
        },
    )?;
    let points = req
        .taus
        .iter()
        .map(|&tau| {
            let psi = evolve(&psi0, &spectral, tau)?;
            Ok(TracePoint {
                tau,
                s1: entanglement_entropy(&psi)?,
                s2: renyi_entropy(&psi, 2.0)?,
                energy: energy_expectation(&psi, &h),
                probabilities: number_distribution(&psi)
                    .probabilities
                    .into_iter()
                    .map(|(_, p)| p)
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolveTrace {
        bound: closed_system_bound(&spec),
        n_a_values: n_a_range(&spec).collect(),
        points,
    })
}

impl EvolveTrace {
    /// Spread of the energy column.
    pub fn energy_drift(&self) -> f64 {
        let e = self.points.iter().map(|p| p.energy);
        let lo = e.clone().fold(f64::INFINITY, f64::min);
        let hi = e.fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn to_csv(&self) -> Result<String> {
        let csv_err = |e: csv::Error| Error::Parse(format!("CSV: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["tau", "S1", "S2", "energy", "bound"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.n_a_values.iter().map(|k| format!("p_nA_{k}")));
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            let mut rec = vec![
                fmt_sig(p.tau),
                fmt_sig(p.s1),
                fmt_sig(p.s2),
                fmt_sig(p.energy),
                fmt_sig(self.bound),
            ];
            rec.extend(p.probabilities.iter().map(|&q| fmt_sig(q)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_svg(&self, title: &str) -> String {
        let taus: Vec<f64> = self.points.iter().map(|p| p.tau).collect();
        render_trace_svg(
            title,
            &taus,
            &[
                ("S1", self.points.iter().map(|p| p.s1).collect()),
                ("S2", self.points.iter().map(|p| p.s2).collect()),
            ],
            self.bound,
        )
    }
}

// ---------------------------------------------------------------- selftest

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn random_amplitudes(rng: &mut ChaCha20Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Compare the production routines against the independent oracles on
/// small systems.
pub fn selftest(seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    // bound counting
    let mut worst = 0u64;
    let mut cases = 0;
    for stats in [Statistics::Fermionic, Statistics::Bosonic] {
        for l in 1..=8 {
            for m in 1..=l {
                for n in 0..=l {
                    let Ok(spec) = SystemSpec::new(l, m, n, stats) else { continue };
                    cases += 1;
                    let fast = crate::bounds::sector_table(&spec).total_d();
                    let slow = oracle::brute_force_bound_count(&spec);
                    if fast != slow.into() {
                        worst += 1;
                    }
                }
            }
        }
    }
    out.push(check(
        "bound counting vs enumeration",
        worst == 0,
        format!("{cases} systems, {worst} mismatches"),
    ));

    // Hamiltonian vs Jordan-Wigner projection, both boundaries
    let mut max_diff = 0.0f64;
    for boundary in [crate::hamiltonian::Boundary::Open, crate::hamiltonian::Boundary::Periodic] {
        for l in 2..=5 {
            for m in 1..l {
                for n in 0..=l {
                    let basis = match SectorBasis::new(l, m, n) {
                        Ok(b) => Arc::new(b),
                        Err(_) => continue,
                    };
                    let params = Preset::Nonintegrable.params().with_boundary(boundary);
                    let Ok(h) = build_hamiltonian(basis.clone(), params) else { continue };
                    let reference = oracle::projected_full_space_hamiltonian(&basis, &params);
                    max_diff = max_diff.max((h.matrix() - reference).amax());
                }
            }
        }
    }
    out.push(check(
        "sector Hamiltonian vs Jordan-Wigner projection",
        max_diff == 0.0,
        format!("max |difference| = {max_diff:e}"),
    ));

    // entropies vs full-space partial trace
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut max_err = 0.0f64;
    let mut states = 0;
    for l in 2..=6 {
        for m in 1..l {
            for n in 0..=l {
                let Ok(basis) = SectorBasis::new(l, m, n) else { continue };
                let basis = Arc::new(basis);
                for _ in 0..3 {
                    let amps = random_amplitudes(&mut rng, basis.dim());
                    let Ok(state) = StateVector::normalized(basis.clone(), amps) else { continue };
                    let (Ok(sa), Ok(sb)) = (
                        entanglement_entropy_side(&state, Side::A),
                        entanglement_entropy_side(&state, Side::B),
                    ) else {
                        max_err = f64::INFINITY;
                        continue;
                    };
                    let reference = oracle::full_space_entropy(&basis, state.amplitudes());
                    max_err = max_err.max((sa - reference).abs()).max((sb - reference).abs());
                    states += 1;
                }
            }
        }
    }
    out.push(check(
        "sector entropy vs full-space partial trace",
        max_err < 1e-10,
        format!("{states} states, max error {max_err:.3e}"),
    ));

    // spectra vs Jacobi
    let mut max_err = 0.0f64;
    for l in 3..=7 {
        let Ok(basis) = SectorBasis::new(l, l / 2, l / 2) else { continue };
        let Ok(h) = build_hamiltonian(Arc::new(basis), Preset::Nonintegrable.params()) else { continue };
        let Ok(spectral) = diagonalize(&h) else {
            max_err = f64::INFINITY;
            continue;
        };
        let dense: Vec<Vec<f64>> = (0..h.dim())
            .map(|i| (0..h.dim()).map(|j| h.matrix()[(i, j)]).collect())
            .collect();
        let mut reference = oracle::jacobi_eigenvalues(&dense);
        reference.sort_by(f64::total_cmp);
        let scale = spectral.max_abs_energy().max(1.0);
        for (a, b) in spectral.eigenvalues().iter().zip(&reference) {
            max_err = max_err.max((a - b).abs() / scale);
        }
    }
    out.push(check(
        "eigenvalues vs Jacobi",
        max_err < 1e-10,
        format!("max relative error {max_err:.3e}"),
    ));

    // constructed maximally entangled states
    let mut max_gap = 0.0f64;
    for l in 2..=10 {
        for m in 1..l {
            for n in 1..l {
                if let Ok(r) = maxstate(l, m, n) {
                    max_gap = max_gap.max(r.difference.abs());
                }
            }
        }
    }
    out.push(check(
        "maximally entangled state attains the bound",
        max_gap < MAXSTATE_TOL,
        format!("max |S - bound| = {max_gap:.3e}"),
    ));
    out
}

pub fn render_checks(checks: &[CheckOutcome]) -> String {
    let mut out = String::new();
    for c in checks {
        let _ = writeln!(
            out,
            "{} {:<48} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_rows_default_to_every_m() {
        let rows = bound_rows(4, &[], 2, Statistics::Fermionic).unwrap();
        assert_eq!(rows.iter().map(|r| r.m).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(rows[3].closed_bound, 0.0);
        let csv = bound_csv(&rows, true).unwrap();
        assert!(csv.starts_with("L,M,n,statistics,closed_bound_nats,general_bound_nats,closed_bound_bits"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn bosonic_rows_have_no_flattening() {
        let rows = bound_rows(4, &[2], 4, Statistics::Bosonic).unwrap();
        assert!(rows[0].flattened_bound.is_none());
        assert!(bound_table(&rows, false).contains(" - "));
    }

    #[test]
    fn invalid_spec_is_domain_error() {
        let err = bound_rows(4, &[5], 2, Statistics::Fermionic).unwrap_err();
        assert!(err.is_invalid_input());
    }

    #[test]
    fn maxstate_bell_pair() {
        let r = maxstate(2, 1, 1).unwrap();
        assert!((r.entropy - 2f64.ln()).abs() < 1e-12);
        assert_eq!(r.nonzero_amplitudes, 2);
        assert!(r.passed());
        assert!(r.render().contains("status             OK"));
    }

    #[test]
    fn single_point_grid() {
        assert_eq!(tau_grid(0.0, 0.1).unwrap(), vec![0.0]);
        assert_eq!(tau_grid(1.0, 0.25).unwrap().len(), 5);
        assert!(tau_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn evolve_conserves_energy() {
        let trace = evolve_trace(&EvolveRequest {
            l: 6,
            m: 3,
            n: 2,
            params: Preset::Nonintegrable.params(),
            beta: 0.5,
            seed: 4,
            taus: tau_grid(2.0, 0.5).unwrap(),
        })
        .unwrap();
        assert!(trace.energy_drift() < 1e-10);
        for p in &trace.points {
            assert!(p.s1 <= trace.bound + 1e-10);
            assert!(p.s2 <= p.s1 + 1e-10);
        }
        let csv = trace.to_csv().unwrap();
        assert!(csv.starts_with("tau,S1,S2,energy,bound,p_nA_0,p_nA_1,p_nA_2\n"));
    }

    #[test]
    fn selftest_passes() {
        let checks = selftest(11);
        assert!(checks.iter().all(|c| c.passed), "{}", render_checks(&checks));
    }
}
