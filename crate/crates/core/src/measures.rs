//! Entanglement measures computed sector by sector.
//!
//! Particle-number conservation makes the reduced density matrix of A block
//! diagonal in `nA`. Each block is the Gram matrix of the state's
//! `dim A(nA) x dim B(n - nA)` coefficient matrix, so the full spectrum is the
//! union of small per-sector spectra.

use nalgebra::DMatrix;

use crate::basis::SectorBasis;
use crate::bounds::{max_ent_number_distribution, SystemSpec};
use crate::error::{Error, Result};
use crate::states::{StateVector, C64};

/// Eigenvalues in `[-CLAMP_TOL, 0)` are roundoff and become 0.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SectorSpectrum {
    pub n_a: usize,
    /// Probability of finding `nA` particles in A.
    pub weight: f64,
    /// Eigenvalues of this block of the reduced density matrix, descending.
    /// They sum to `weight`.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorSchmidt {
    pub sectors: Vec<SectorSpectrum>,
}

impl SectorSchmidt {
    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.sectors.iter().flat_map(|s| s.eigenvalues.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.eigenvalues().sum()
    }

    pub fn entropy(&self) -> f64 {
        von_neumann(self.eigenvalues())
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues().filter(|&x| x > threshold).count()
    }
}

/// Which side's Gram matrix to diagonalize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `C C^†`: the reduced density matrix of A.
    A,
    /// `C^† C`: the reduced density matrix of B.
    B,
    /// Whichever Gram matrix is smaller (same nonzero spectrum).
    Smaller,
}

fn block_matrix(rows: usize, cols: usize, block: &[usize], amps: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |i, j| amps[block[i * cols + j]])
}

fn clamp(n_a: usize, mut ev: Vec<f64>) -> Result<Vec<f64>> {
    for x in ev.iter_mut() {
        if *x < 0.0 {
            if *x < -CLAMP_TOL {
                return Err(Error::NegativeEigenvalue { n_a, value: *x });
            }
            *x = 0.0;
        }
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

fn gram_eigenvalues(c: &DMatrix<C64>, side: Side) -> Vec<f64> {
    let use_a = match side {
        Side::A => true,
        Side::B => false,
        Side::Smaller => c.nrows() <= c.ncols(),
    };
    let gram = if use_a { c * c.adjoint() } else { c.adjoint() * c };
    match gram.nrows() {
        0 => Vec::new(),
        1 => vec![gram[(0, 0)].re],
        2 => {
            // closed form for 2x2 Hermitian blocks
            let a = gram[(0, 0)].re;
            let d = gram[(1, 1)].re;
            let b = gram[(0, 1)].norm_sqr();
            let mean = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b).sqrt();
            vec![mean + disc, mean - disc]
        }
        _ => gram.symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Per-sector reduced-density spectra of raw amplitudes over `basis`.
pub fn sector_spectra(basis: &SectorBasis, amps: &[C64], side: Side) -> Result<SectorSchmidt> {
    if amps.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: amps.len(),
        });
    }
    let sectors = basis
        .sectors()
        .map(|(shape, block)| {
            let weight: f64 = block.iter().map(|&i| amps[i].norm_sqr()).sum();
            let c = block_matrix(shape.rows, shape.cols, block, amps);
            let eigenvalues = clamp(shape.n_a, gram_eigenvalues(&c, side))?;
            Ok(SectorSpectrum {
                n_a: shape.n_a,
                weight,
                eigenvalues,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SectorSchmidt { sectors })
}

pub fn sector_schmidt(state: &StateVector) -> Result<SectorSchmidt> {
    sector_spectra(state.basis(), state.amplitudes(), Side::Smaller)
}

/// `-Σ λ ln λ` with `0 ln 0 = 0`.
pub fn von_neumann(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    eigenvalues
        .into_iter()
        .map(|x| if x > 0.0 { -x * x.ln() } else { 0.0 })
        .sum()
}

/// `ln(Σ λ^α) / (1 - α)`.
pub fn renyi_of_spectrum(eigenvalues: impl IntoIterator<Item = f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let sum: f64 = eigenvalues
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| x.powf(alpha))
        .sum();
    Ok(sum.ln() / (1.0 - alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("Renyi order must be positive and finite (got {alpha})")));
    }
    if alpha == 1.0 {
        return Err(Error::domain(
            "Renyi order 1 is the von Neumann entropy; use entanglement_entropy",
        ));
    }
    Ok(())
}

/// Entanglement entropy (nats) of the first `M` sites.
pub fn entanglement_entropy(state: &StateVector) -> Result<f64> {
    Ok(sector_schmidt(state)?.entropy())
}

/// Entropy computed from a chosen side's blocks.
pub fn entanglement_entropy_side(state: &StateVector, side: Side) -> Result<f64> {
    Ok(sector_spectra(state.basis(), state.amplitudes(), side)?.entropy())
}

/// Entropy of raw amplitudes, for inner loops that skip `StateVector`.
pub fn entropy_of_amplitudes(basis: &SectorBasis, amps: &[C64]) -> Result<f64> {
    Ok(sector_spectra(basis, amps, Side::Smaller)?.entropy())
}

pub fn renyi_entropy(state: &StateVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    renyi_of_spectrum(sector_schmidt(state)?.eigenvalues(), alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumberDistribution {
    /// `(nA, probability)` over the admissible range, ascending.
    pub probabilities: Vec<(usize, f64)>,
    pub mean: f64,
}

pub fn number_distribution_of(basis: &SectorBasis, amps: &[C64]) -> NumberDistribution {
    let probabilities: Vec<(usize, f64)> = basis
        .sectors()
        .map(|(shape, block)| (shape.n_a, block.iter().map(|&i| amps[i].norm_sqr()).sum()))
        .collect();
    let mean = probabilities.iter().map(|&(k, p)| k as f64 * p).sum();
    NumberDistribution {
        probabilities,
        mean,
    }
}

pub fn number_distribution(state: &StateVector) -> NumberDistribution {
    number_distribution_of(state.basis(), state.amplitudes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Number statistics match a maximally entangled state (necessary only).
    Possible,
    RuledOut,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxEntanglementCheck {
    pub verdict: Verdict,
    /// Total-variation distance to the maximally entangled distribution.
    pub distance: f64,
}

/// Compare the measured `nA` distribution against the one every maximally
/// entangled state must have. Passing is necessary but not sufficient.
pub fn max_entanglement_test(state: &StateVector, tolerance: f64) -> MaxEntanglementCheck {
    let basis = state.basis();
    let spec = SystemSpec::fermionic(basis.l(), basis.m(), basis.n())
        .expect("a valid basis is a valid fermionic spec");
    let target = max_ent_number_distribution(&spec);
    let measured = number_distribution(state);
    let distance = 0.5
        * target
            .iter()
            .zip(&measured.probabilities)
            .map(|((_, p), (_, q))| (p - q).abs())
            .sum::<f64>();
    let verdict = if distance > tolerance {
        Verdict::RuledOut
    } else {
        Verdict::Possible
    };
    MaxEntanglementCheck { verdict, distance }
}
