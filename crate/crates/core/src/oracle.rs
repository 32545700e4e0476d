//! Independent reference computations used by the test suites and the
//! `selftest` subcommand.
//!
//! Nothing here shares code paths with the production routines: bounds are
//! counted by enumerating configurations, operators are built as explicit
//! `2^L x 2^L` Kronecker products, reduced density matrices come from a
//! full-space partial trace, and eigenvalues from a cyclic Jacobi sweep.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Complex, DMatrix};

use crate::basis::SectorBasis;
use crate::bounds::{Statistics, SystemSpec};
use crate::hamiltonian::{Boundary, HamiltonianParams};

/// Distinct A and B occupation patterns, keyed by `nA`.
type Halves = BTreeMap<usize, (BTreeSet<Vec<usize>>, BTreeSet<Vec<usize>>)>;

/// All occupation vectors of `sites` sites holding `n` particles.
fn occupations(sites: usize, n: usize, max_per_site: usize) -> Vec<Vec<usize>> {
    fn rec(
        sites: usize,
        left: usize,
        cap: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == sites {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left.min(cap) {
            cur.push(k);
            rec(sites, left - k, cap, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(sites, n, max_per_site, &mut Vec::new(), &mut out);
    out
}

/// `Σ_nA min(#A configurations, #B configurations)` by enumerating every
/// global configuration and collecting the distinct A and B halves.
pub fn brute_force_bound_count(spec: &SystemSpec) -> u64 {
    let cap = match spec.statistics() {
        Statistics::Fermionic => 1,
        Statistics::Bosonic => spec.n(),
    };
    let mut halves: Halves = BTreeMap::new();
    for occ in occupations(spec.l(), spec.n(), cap) {
        let (a, b) = occ.split_at(spec.m());
        let n_a = a.iter().sum();
        let entry = halves.entry(n_a).or_default();
        entry.0.insert(a.to_vec());
        entry.1.insert(b.to_vec());
    }
    halves
        .values()
        .map(|(a, b)| a.len().min(b.len()) as u64)
        .sum()
}

/// Same as [`brute_force_bound_count`] but returning the per-sector minima.
pub fn brute_force_sector_minima(spec: &SystemSpec) -> Vec<(usize, u64)> {
    let cap = match spec.statistics() {
        Statistics::Fermionic => 1,
        Statistics::Bosonic => spec.n(),
    };
    let mut halves: Halves = BTreeMap::new();
    for occ in occupations(spec.l(), spec.n(), cap) {
        let (a, b) = occ.split_at(spec.m());
        let entry = halves.entry(a.iter().sum()).or_default();
        entry.0.insert(a.to_vec());
        entry.1.insert(b.to_vec());
    }
    halves
        .into_iter()
        .map(|(k, (a, b))| (k, a.len().min(b.len()) as u64))
        .collect()
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                // rows p and q are both borrowed from `a`
                #[allow(clippy::needless_range_loop)]
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Eigenvalues of a complex Hermitian matrix via its real `2n x 2n`
/// embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is each eigenvalue twice.
pub fn hermitian_eigenvalues(matrix: &[Vec<Complex<f64>>]) -> Vec<f64> {
    let n = matrix.len();
    let mut real = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = matrix[i][j];
            real[i][j] = z.re;
            real[i + n][j + n] = z.re;
            real[i][j + n] = -z.im;
            real[i + n][j] = z.im;
        }
    }
    let mut ev = jacobi_eigenvalues(&real);
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter().step_by(2).collect()
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Annihilation operators `f_1 .. f_L` on the full `2^L` Fock space.
///
/// Built as Kronecker products with site `L` as the leftmost factor, so the
/// row index equals the occupation mask with site 1 in the lowest bit. The
/// Jordan-Wigner string acts on sites `1..i`.
pub fn full_space_annihilators(l: usize) -> Vec<DMatrix<f64>> {
    let id = DMatrix::<f64>::identity(2, 2);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    // |0> = e0, |1> = e1; a|1> = |0>
    let lower = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    (0..l)
        .map(|site| {
            let mut op = DMatrix::<f64>::identity(1, 1);
            for k in (0..l).rev() {
                let factor = if k == site {
                    &lower
                } else if k < site {
                    &z
                } else {
                    &id
                };
                op = kron(&op, factor);
            }
            op
        })
        .collect()
}

fn oracle_bonds(l: usize, d: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..l {
        let j = i + d;
        if j < l {
            out.push((i, j));
        } else if boundary == Boundary::Periodic && j % l != i {
            out.push((i, j % l));
        }
    }
    out
}

/// The chain Hamiltonian on the full Fock space, assembled from operator
/// products.
pub fn full_space_hamiltonian(l: usize, params: &HamiltonianParams) -> DMatrix<f64> {
    let f = full_space_annihilators(l);
    let dim = 1usize << l;
    let num: Vec<DMatrix<f64>> = f.iter().map(|c| c.transpose() * c).collect();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (d, hop, int) in [
        (1, params.t, params.v),
        (2, params.t_prime, params.v_prime),
    ] {
        for (i, j) in oracle_bonds(l, d, params.boundary) {
            let term = f[i].transpose() * &f[j];
            h -= (&term + term.transpose()) * hop;
            h += &num[i] * &num[j] * int;
        }
    }
    h
}

pub fn full_space_number(l: usize) -> DMatrix<f64> {
    let f = full_space_annihilators(l);
    let dim = 1usize << l;
    f.iter()
        .fold(DMatrix::zeros(dim, dim), |acc, c| acc + c.transpose() * c)
}

/// Restrict the full-space Hamiltonian to the basis' particle-number sector.
pub fn projected_full_space_hamiltonian(
    basis: &SectorBasis,
    params: &HamiltonianParams,
) -> DMatrix<f64> {
    let full = full_space_hamiltonian(basis.l(), params);
    let s = basis.states();
    DMatrix::from_fn(s.len(), s.len(), |i, j| full[(s[i] as usize, s[j] as usize)])
}

/// Reduced density matrix of the first `m` sites, from sector amplitudes
/// embedded in the full space and traced over B by explicit index sums.
pub fn full_space_reduced_density(
    basis: &SectorBasis,
    amplitudes: &[Complex<f64>],
) -> Vec<Vec<Complex<f64>>> {
    let l = basis.l();
    let m = basis.m();
    let mut full = vec![Complex::new(0.0, 0.0); 1 << l];
    for (i, &s) in basis.states().iter().enumerate() {
        full[s as usize] = amplitudes[i];
    }
    let da = 1usize << m;
    let db = 1usize << (l - m);
    let mut rho = vec![vec![Complex::new(0.0, 0.0); da]; da];
    for a in 0..da {
        for a2 in 0..da {
            let mut acc = Complex::new(0.0, 0.0);
            for b in 0..db {
                acc += full[a | (b << m)] * full[a2 | (b << m)].conj();
            }
            rho[a][a2] = acc;
        }
    }
    rho
}

/// Von Neumann entropy (nats) of subsystem A through the full-space route.
pub fn full_space_entropy(basis: &SectorBasis, amplitudes: &[Complex<f64>]) -> f64 {
    let rho = full_space_reduced_density(basis, amplitudes);
    hermitian_eigenvalues(&rho)
        .into_iter()
        .filter(|&x| x > 1e-15)
        .map(|x| -x * x.ln())
        .sum()
}
