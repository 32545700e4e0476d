//! Pure states in a fixed-`n` sector: random pure thermal states, their
//! unitary (or phase-shifted) evolutions, and explicit maximally entangled
//! states.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::{Complex, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianMatrix, SpectralData};

pub type C64 = Complex<f64>;

pub const NORM_TOL: f64 = 1e-12;

/// Where a state came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    /// Evolution time, when the state was produced by `evolve`.
    pub tau: Option<f64>,
    /// True once arbitrary eigen-phases have been applied.
    pub phased: bool,
}

#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<C64>,
    provenance: Provenance,
}

impl StateVector {
    /// Wrap amplitudes, rejecting wrong lengths and non-unit norm.
    pub fn new(basis: Arc<SectorBasis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("state norm is {norm}, expected 1")));
        }
        Ok(StateVector {
            basis,
            amplitudes,
            provenance: Provenance::default(),
        })
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(basis: Arc<SectorBasis>, mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Self::new(basis, amplitudes)
    }

    /// A single occupation basis state.
    pub fn basis_state(basis: Arc<SectorBasis>, state: u32) -> Result<Self> {
        let idx = basis.index_of(state).ok_or_else(|| {
            Error::domain(format!("state {state:#b} is not in the n = {} sector", basis.n()))
        })?;
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Self::new(basis, amps)
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Text dump: a `basis L M n` line, then `index real imag` rows.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "basis {} {} {}", self.basis.l(), self.basis.m(), self.basis.n())?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{i} {:.17e} {:.17e}", a.re, a.im)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    /// Inverse of [`StateVector::write_text`]. Missing indices are zero.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty state file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dims: Vec<usize> = match fields.as_slice() {
            ["basis", l, m, n] => [l, m, n]
                .iter()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad basis line '{header}'"))))
                .collect::<Result<_>>()?,
            _ => return Err(Error::Parse(format!("expected 'basis L M n', got '{header}'"))),
        };
        let basis = Arc::new(SectorBasis::new(dims[0], dims[1], dims[2])?);
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [i, re, im] = parts.as_slice() else {
                return Err(Error::Parse(format!("expected 'index real imag', got '{line}'")));
            };
            let bad = || Error::Parse(format!("bad amplitude row '{line}'"));
            let i: usize = i.parse().map_err(|_| bad())?;
            if i >= amps.len() {
                return Err(Error::Parse(format!("index {i} out of range in '{line}'")));
            }
            amps[i] = C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?);
        }
        Self::new(basis, amps)
    }
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Parameters of a random pure thermal state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalEnsembleSpec {
    pub beta: f64,
    pub seed: u64,
}

/// `|psi> = Z^{-1/2} Σ_E c_E e^{-beta E / 2} |E>` with `c_E = (x + i y)/√2`,
/// `x, y ~ N(0, 1)`.
///
/// Normal variates come from a ChaCha20 stream seeded with `seed`
/// (`seed_from_u64`) through `rand_distr::StandardNormal`, drawn as
/// `x_0, y_0, x_1, y_1, ...` in ascending energy order. Energies are shifted
/// by the ground energy before exponentiation; the shift cancels in `Z`.
pub fn random_pure_thermal_state(
    spectral: &SpectralData,
    ensemble: &ThermalEnsembleSpec,
) -> Result<StateVector> {
    let beta = ensemble.beta;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::domain(format!("beta must be finite and non-negative (got {beta})")));
    }
    let dim = spectral.dim();
    let energies = spectral.eigenvalues();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha20Rng::seed_from_u64(ensemble.seed);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut coefs = Vec::with_capacity(dim);
    for k in 0..dim {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        let weight = (-0.5 * beta * (energies[k] - e_min)).exp();
        coefs.push(C64::new(x, y) * (inv_sqrt2 * weight));
    }
    let z: f64 = coefs.iter().map(|c| c.norm_sqr()).sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::ThermalUnderflow { beta });
    }
    let scale = z.sqrt().recip();
    coefs.iter_mut().for_each(|c| *c *= scale);

    let amplitudes = from_eigen_coefficients(spectral, &coefs);
    Ok(StateVector::normalized(spectral.basis().clone(), amplitudes)?.with_provenance(
        Provenance {
            seed: Some(ensemble.seed),
            beta: Some(beta),
            ..Provenance::default()
        },
    ))
}

fn check_same_basis(state: &StateVector, spectral: &SpectralData) -> Result<()> {
    if state.basis().same_shape(spectral.basis()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: spectral.dim(),
            actual: state.basis().dim(),
        })
    }
}

/// `<E_k|psi>` for every eigenvector.
pub fn eigen_coefficients(state: &StateVector, spectral: &SpectralData) -> Result<Vec<C64>> {
    check_same_basis(state, spectral)?;
    let v = spectral.eigenvectors();
    let re = DVector::from_iterator(state.amplitudes.len(), state.amplitudes.iter().map(|a| a.re));
    let im = DVector::from_iterator(state.amplitudes.len(), state.amplitudes.iter().map(|a| a.im));
    let cr = v.tr_mul(&re);
    let ci = v.tr_mul(&im);
    Ok(cr.iter().zip(ci.iter()).map(|(&r, &i)| C64::new(r, i)).collect())
}

/// `Σ_k coefs[k] |E_k>` in the occupation basis.
pub fn from_eigen_coefficients(spectral: &SpectralData, coefs: &[C64]) -> Vec<C64> {
    let v = spectral.eigenvectors();
    let n = coefs.len();
    let cr = DVector::from_iterator(n, coefs.iter().map(|c| c.re));
    let ci = DVector::from_iterator(n, coefs.iter().map(|c| c.im));
    let re = v * cr;
    let im = v * ci;
    re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)).collect()
}

/// `e^{-iHτ}|psi>` through the eigen-decomposition.
pub fn evolve(state: &StateVector, spectral: &SpectralData, tau: f64) -> Result<StateVector> {
    let mut coefs = eigen_coefficients(state, spectral)?;
    for (c, &e) in coefs.iter_mut().zip(spectral.eigenvalues().iter()) {
        *c *= C64::from_polar(1.0, -e * tau);
    }
    let amplitudes = from_eigen_coefficients(spectral, &coefs);
    let provenance = Provenance {
        tau: Some(state.provenance.tau.unwrap_or(0.0) + tau),
        ..state.provenance.clone()
    };
    Ok(StateVector::normalized(state.basis.clone(), amplitudes)?.with_provenance(provenance))
}

/// Partition of eigen-indices into groups of (numerically) equal energy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseGroups {
    /// Group id of each eigen-index, ascending with energy.
    pub group_of: Vec<usize>,
    pub count: usize,
}

pub const DEGENERACY_REL_TOL: f64 = 1e-10;

/// Group consecutive eigenvalues closer than `1e-10 · max|E|`.
pub fn phase_groups(spectral: &SpectralData) -> PhaseGroups {
    let e = spectral.eigenvalues();
    let tol = DEGENERACY_REL_TOL * spectral.max_abs_energy();
    let mut group_of = Vec::with_capacity(e.len());
    let mut g = 0;
    for k in 0..e.len() {
        if k > 0 && e[k] - e[k - 1] > tol {
            g += 1;
        }
        group_of.push(g);
    }
    let count = if e.is_empty() { 0 } else { g + 1 };
    PhaseGroups { group_of, count }
}

impl PhaseGroups {
    /// One representative energy (the lowest) per group.
    pub fn group_energies(&self, spectral: &SpectralData) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.count];
        for (k, &g) in self.group_of.iter().enumerate().rev() {
            out[g] = spectral.eigenvalues()[k];
        }
        out
    }
}

/// Multiply every eigencomponent of group `g` by `e^{-i φ_g}`.
pub fn phase_state(
    state: &StateVector,
    spectral: &SpectralData,
    phases: &[f64],
) -> Result<StateVector> {
    let groups = phase_groups(spectral);
    if phases.len() != groups.count {
        return Err(Error::DimensionMismatch {
            expected: groups.count,
            actual: phases.len(),
        });
    }
    let expansion = EigenExpansion::new(state, spectral)?;
    let amplitudes = expansion.phased_amplitudes(phases, &groups);
    let provenance = Provenance {
        phased: true,
        ..state.provenance.clone()
    };
    Ok(StateVector::normalized(state.basis.clone(), amplitudes)?.with_provenance(provenance))
}

/// A state's expansion in a fixed eigenbasis, for repeated re-phasing.
#[derive(Clone, Debug)]
pub struct EigenExpansion<'a> {
    spectral: &'a SpectralData,
    coefficients: Vec<C64>,
}

impl<'a> EigenExpansion<'a> {
    pub fn new(state: &StateVector, spectral: &'a SpectralData) -> Result<Self> {
        Ok(EigenExpansion {
            spectral,
            coefficients: eigen_coefficients(state, spectral)?,
        })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn spectral(&self) -> &SpectralData {
        self.spectral
    }

    /// Occupation-basis amplitudes after applying per-group phases.
    pub fn phased_amplitudes(&self, phases: &[f64], groups: &PhaseGroups) -> Vec<C64> {
        let coefs: Vec<C64> = self
            .coefficients
            .iter()
            .zip(&groups.group_of)
            .map(|(c, &g)| c * C64::from_polar(1.0, -phases[g]))
            .collect();
        from_eigen_coefficients(self.spectral, &coefs)
    }
}

/// A state saturating the closed-system bound: in every `nA` sector, the
/// k-th A configuration is paired with the k-th B configuration for
/// `k < d(nA)`, all with amplitude `(Σ d)^{-1/2}`.
pub fn max_entangled_state(basis: Arc<SectorBasis>) -> StateVector {
    let total: usize = basis.shapes().iter().map(|s| s.rows.min(s.cols)).sum();
    let amp = C64::new((total as f64).sqrt().recip(), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
    for (shape, block) in basis.sectors() {
        for k in 0..shape.rows.min(shape.cols) {
            amps[block[k * shape.cols + k]] = amp;
        }
    }
    StateVector::normalized(basis, amps).expect("at least one sector is populated")
}

/// `<psi|H|psi>` computed directly from the matrix.
pub fn energy_expectation(state: &StateVector, h: &HamiltonianMatrix) -> f64 {
    let a = state.amplitudes();
    let m = h.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.len() {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..a.len() {
            col += a[i].conj() * m[(i, j)];
        }
        acc += col * a[j];
    }
    acc.re
}

/// `|<a|b>|`.
pub fn overlap(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm()
}

/// Ket listing of the nonzero amplitudes, for human-readable reports.
pub fn describe(state: &StateVector, threshold: f64) -> String {
    let mut out = String::new();
    let l = state.basis().l();
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm() > threshold {
            let _ = writeln!(
                out,
                "|{}>  {:+.12} {:+.12}i",
                crate::basis::ket_string(state.basis().state(i), l),
                a.re,
                a.im
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, parse_ket};
    use crate::hamiltonian::{build_hamiltonian, diagonalize, Preset};

    fn setup(l: usize, m: usize, n: usize, preset: Preset) -> (HamiltonianMatrix, SpectralData) {
        let basis = Arc::new(build_basis(l, m, n).unwrap());
        let h = build_hamiltonian(basis, preset.params()).unwrap();
        let s = diagonalize(&h).unwrap();
        (h, s)
    }

    #[test]
    fn thermal_state_is_normalized_and_deterministic() {
        let (_, s) = setup(8, 4, 3, Preset::Nonintegrable);
        let spec = ThermalEnsembleSpec { beta: 0.01, seed: 7 };
        let a = random_pure_thermal_state(&s, &spec).unwrap();
        let b = random_pure_thermal_state(&s, &spec).unwrap();
        assert!((a.norm() - 1.0).abs() < NORM_TOL);
        assert_eq!(a.amplitudes(), b.amplitudes());
        let c = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta: 0.01, seed: 8 }).unwrap();
        assert_ne!(a.amplitudes(), c.amplitudes());
        assert_eq!(a.provenance().seed, Some(7));
    }

    #[test]
    fn thermal_state_rejects_bad_beta() {
        let (_, s) = setup(4, 2, 2, Preset::Nonintegrable);
        for beta in [f64::NAN, f64::INFINITY, -1.0] {
            assert!(random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta, seed: 0 }).is_err());
        }
    }

    #[test]
    fn low_temperature_approaches_ground_state() {
        let (_, s) = setup(8, 4, 3, Preset::Nonintegrable);
        let gap = s.eigenvalues()[1] - s.eigenvalues()[0];
        assert!(gap > 1e-6);
        let beta = 30.0 / gap;
        let psi = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta, seed: 3 }).unwrap();
        let ground: Vec<C64> = s.eigenvectors().column(0).iter().map(|&x| C64::new(x, 0.0)).collect();
        let ground = StateVector::new(s.basis().clone(), ground).unwrap();
        assert!(overlap(&psi, &ground).powi(2) > 0.99);
    }

    #[test]
    fn huge_beta_does_not_underflow() {
        let (_, s) = setup(6, 3, 2, Preset::Nonintegrable);
        let psi = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta: 1e6, seed: 1 }).unwrap();
        assert!((psi.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn evolution_basics() {
        let (h, s) = setup(7, 3, 3, Preset::Nonintegrable);
        let psi = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta: 0.3, seed: 11 }).unwrap();
        let same = evolve(&psi, &s, 0.0).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(same.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        let e0 = energy_expectation(&psi, &h);
        for tau in [0.1, 1.0, 17.3, 250.0] {
            let later = evolve(&psi, &s, tau).unwrap();
            assert!((later.norm() - 1.0).abs() < NORM_TOL);
            assert!((energy_expectation(&later, &h) - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenstate_only_gains_a_phase() {
        let (_, s) = setup(6, 3, 2, Preset::Nonintegrable);
        let k = 4;
        let v: Vec<C64> = s.eigenvectors().column(k).iter().map(|&x| C64::new(x, 0.0)).collect();
        let psi = StateVector::new(s.basis().clone(), v).unwrap();
        let later = evolve(&psi, &s, 3.7).unwrap();
        assert!((overlap(&psi, &later) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phases_reproduce_time_evolution() {
        let (_, s) = setup(7, 3, 2, Preset::Nonintegrable);
        let psi = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta: 0.01, seed: 5 }).unwrap();
        let groups = phase_groups(&s);
        let tau = 2.25;
        let phases: Vec<f64> = groups.group_energies(&s).iter().map(|e| e * tau).collect();
        let a = phase_state(&psi, &s, &phases).unwrap();
        let b = evolve(&psi, &s, tau).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-10);
        }
        let zero = phase_state(&psi, &s, &vec![0.0; groups.count]).unwrap();
        for (x, y) in psi.amplitudes().iter().zip(zero.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(phase_state(&psi, &s, &[0.0]).is_err());
    }

    #[test]
    fn degenerate_levels_share_a_phase() {
        let (_, s) = setup(6, 3, 2, Preset::InteractionOnly);
        let groups = phase_groups(&s);
        // diagonal energies take few distinct values
        assert!(groups.count < s.dim());
        assert!(groups.count >= 2);
    }

    #[test]
    fn bell_pair() {
        let basis = Arc::new(build_basis(2, 1, 1).unwrap());
        let psi = max_entangled_state(basis);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for a in psi.amplitudes() {
            assert!((a.re - h).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn five_term_state() {
        let basis = Arc::new(build_basis(6, 3, 2).unwrap());
        let psi = max_entangled_state(basis);
        let nonzero = psi.amplitudes().iter().filter(|a| a.norm() > 0.0).count();
        assert_eq!(nonzero, 5);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let (_, s) = setup(5, 2, 2, Preset::Nonintegrable);
        let psi = random_pure_thermal_state(&s, &ThermalEnsembleSpec { beta: 0.5, seed: 2 }).unwrap();
        let text = psi.to_text();
        assert!(text.starts_with("basis 5 2 2\n"));
        let back = StateVector::read_text(text.as_bytes()).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn text_rejects_garbage() {
        assert!(StateVector::read_text("".as_bytes()).is_err());
        assert!(StateVector::read_text("basis 2 1\n".as_bytes()).is_err());
        assert!(StateVector::read_text("basis 2 1 1\n0 1 x\n".as_bytes()).is_err());
        assert!(StateVector::read_text("basis 2 1 1\n5 1 0\n".as_bytes()).is_err());
        // unnormalized
        assert!(StateVector::read_text("basis 2 1 1\n0 1 0\n1 1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn basis_state_lookup() {
        let basis = Arc::new(build_basis(6, 3, 2).unwrap());
        let psi = StateVector::basis_state(basis.clone(), parse_ket("110000").unwrap()).unwrap();
        assert_eq!(psi.norm(), 1.0);
        assert!(StateVector::basis_state(basis, 0b111).is_err());
    }
}
