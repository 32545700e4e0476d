//! t-t'-V-V' spinless-fermion chain in a fixed particle-number sector.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    /// Bonds wrap around; the sum over sites is taken literally, so short
    /// rings (L <= 2 for NN, L <= 4 for NNN) count a bond twice.
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Open => f.write_str("open"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" | "obc" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            other => Err(Error::domain(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    /// Nearest-neighbour hopping.
    pub t: f64,
    /// Next-nearest-neighbour hopping.
    pub t_prime: f64,
    /// Nearest-neighbour density interaction.
    #[serde(rename = "V")]
    pub v: f64,
    /// Next-nearest-neighbour density interaction.
    #[serde(rename = "V_prime")]
    pub v_prime: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl HamiltonianParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.t, self.t_prime, self.v, self.v_prime];
        if all.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain(format!("couplings must be finite: {all:?}")))
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }
}

/// Named coupling sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// t = t' = 1.9, V = V' = 0.5
    Nonintegrable,
    /// t = 1.9, V = 0.5, t' = V' = 0
    Integrable,
    /// t = 1.9, everything else zero
    NnHoppingOnly,
    /// V = V' = 0.5, no hopping
    InteractionOnly,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Nonintegrable,
        Preset::Integrable,
        Preset::NnHoppingOnly,
        Preset::InteractionOnly,
    ];

    pub fn params(self) -> HamiltonianParams {
        let (t, t_prime, v, v_prime) = match self {
            Preset::Nonintegrable => (1.9, 1.9, 0.5, 0.5),
            Preset::Integrable => (1.9, 0.0, 0.5, 0.0),
            Preset::NnHoppingOnly => (1.9, 0.0, 0.0, 0.0),
            Preset::InteractionOnly => (0.0, 0.0, 0.5, 0.5),
        };
        HamiltonianParams {
            t,
            t_prime,
            v,
            v_prime,
            boundary: Boundary::Open,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nonintegrable => "nonintegrable",
            Preset::Integrable => "integrable",
            Preset::NnHoppingOnly => "nn_hopping_only",
            Preset::InteractionOnly => "interaction_only",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::domain(format!("unknown preset '{s}' (known: {})", names.join(", ")))
            })
    }
}

/// Site pairs `(i, j)` (0-based) coupled at separation `distance`.
pub fn bonds(l: usize, distance: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    match boundary {
        Boundary::Open => (0..l.saturating_sub(distance)).map(|i| (i, i + distance)).collect(),
        Boundary::Periodic => (0..l)
            .map(|i| (i, (i + distance) % l))
            .filter(|(i, j)| i != j)
            .collect(),
    }
}

/// Jordan-Wigner sign of moving a particle between sites `a` and `b`:
/// `(-1)^(occupied sites strictly between them)`.
pub fn hop_sign(state: u32, a: usize, b: usize) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let between = if hi - lo <= 1 {
        0
    } else {
        let mask = ((1u32 << (hi - lo - 1)) - 1) << (lo + 1);
        (state & mask).count_ones()
    };
    if between % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    basis: Arc<SectorBasis>,
    params: HamiltonianParams,
    elements: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn params(&self) -> &HamiltonianParams {
        &self.params
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// Write nonzero elements as `row,col,value` lines.
    pub fn write_triples<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,value")?;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let v = self.elements[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i},{j},{v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn build_hamiltonian(
    basis: Arc<SectorBasis>,
    params: HamiltonianParams,
) -> Result<HamiltonianMatrix> {
    params.validate()?;
    let l = basis.l();
    let dim = basis.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let terms = [
        (bonds(l, 1, params.boundary), params.t, params.v),
        (bonds(l, 2, params.boundary), params.t_prime, params.v_prime),
    ];

    for (col, &state) in basis.states().iter().enumerate() {
        for (bond_list, hopping, interaction) in &terms {
            for &(a, b) in bond_list {
                let occ_a = state >> a & 1 == 1;
                let occ_b = state >> b & 1 == 1;
                if occ_a && occ_b {
                    if *interaction != 0.0 {
                        h[(col, col)] += interaction;
                    }
                } else if (occ_a || occ_b) && *hopping != 0.0 {
                    let target = state ^ (1 << a) ^ (1 << b);
                    let row = basis
                        .index_of(target)
                        .expect("hop preserves particle number");
                    h[(row, col)] += -hopping * hop_sign(state, a, b);
                }
            }
        }
    }

    Ok(HamiltonianMatrix {
        basis,
        params,
        elements: h,
    })
}

/// Eigen-decomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralData {
    basis: Arc<SectorBasis>,
    eigenvalues: DVector<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }
}

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralData> {
    let (eigenvalues, eigenvectors) = symmetric_eigen(h.matrix())?;
    let spectral = SpectralData {
        basis: h.basis().clone(),
        eigenvalues,
        eigenvectors,
    };
    check_spectral(h, &spectral)?;
    Ok(spectral)
}

fn check_spectral(h: &HamiltonianMatrix, s: &SpectralData) -> Result<()> {
    let dim = h.dim();
    let norm = h.matrix().norm().max(f64::MIN_POSITIVE);
    for k in 0..dim {
        let v = s.eigenvectors.column(k);
        let residual = (h.matrix() * v - v * s.eigenvalues[k]).norm();
        if residual > RESIDUAL_TOL * norm {
            return Err(Error::NoConvergence {
                dim,
                max_iterations: 0,
                eps: residual / norm,
            });
        }
    }
    let gram = s.eigenvectors.transpose() * &s.eigenvectors;
    let off = (gram - DMatrix::<f64>::identity(dim, dim)).amax();
    if off > ORTHONORMALITY_TOL {
        return Err(Error::NoConvergence {
            dim,
            max_iterations: 0,
            eps: off,
        });
    }
    Ok(())
}

/// Spectral data straight from an already-diagonal Hamiltonian.
///
/// Used for cross-checks only; [`diagonalize`] handles diagonal input too.
pub fn spectral_from_parts(
    basis: Arc<SectorBasis>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
) -> Result<SpectralData> {
    let dim = basis.dim();
    if eigenvalues.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: eigenvalues.len(),
        });
    }
    if eigenvectors.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: eigenvectors.nrows(),
        });
    }
    Ok(SpectralData {
        basis,
        eigenvalues,
        eigenvectors,
    })
}
