//! Closed-form entanglement bounds for a fixed total particle number.
//!
//! Everything here is exact integer combinatorics; the only floating-point
//! step is the final logarithm. Entropies are in nats.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Particle exchange statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    /// Spinless fermions or hard-core bosons: at most one particle per site.
    Fermionic,
    Bosonic,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistics::Fermionic => f.write_str("fermionic"),
            Statistics::Bosonic => f.write_str("bosonic"),
        }
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermionic" | "fermion" | "fermions" | "f" => Ok(Statistics::Fermionic),
            "bosonic" | "boson" | "bosons" | "b" => Ok(Statistics::Bosonic),
            other => Err(Error::domain(format!(
                "unknown statistics '{other}' (expected fermionic or bosonic)"
            ))),
        }
    }
}

/// A lattice of `l` sites holding `n` particles, cut into subsystem A (the
/// first `m` sites) and subsystem B (the remaining `l - m`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    l: usize,
    m: usize,
    n: usize,
    statistics: Statistics,
}

impl SystemSpec {
    pub fn new(l: usize, m: usize, n: usize, statistics: Statistics) -> Result<Self> {
        if l == 0 {
            return Err(Error::domain("L must be at least 1"));
        }
        if m == 0 || m > l {
            return Err(Error::domain(format!("M must satisfy 1 <= M <= L (got M = {m}, L = {l})")));
        }
        if statistics == Statistics::Fermionic && n > l {
            return Err(Error::domain(format!(
                "fermionic n must satisfy n <= L (got n = {n}, L = {l})"
            )));
        }
        Ok(SystemSpec { l, m, n, statistics })
    }

    pub fn fermionic(l: usize, m: usize, n: usize) -> Result<Self> {
        Self::new(l, m, n, Statistics::Fermionic)
    }

    pub fn bosonic(l: usize, m: usize, n: usize) -> Result<Self> {
        Self::new(l, m, n, Statistics::Bosonic)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Same lattice and particle number with the cut moved to `m`.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.l, m, self.n, self.statistics)
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={} M={} n={} {}", self.l, self.m, self.n, self.statistics)
    }
}

/// One particle-number sector of the bipartition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorRow {
    pub n_a: usize,
    pub dim_a: BigUint,
    pub dim_b: BigUint,
    /// Largest possible Schmidt rank inside the sector, `min(dim_a, dim_b)`.
    pub d: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorTable {
    pub spec: SystemSpec,
    pub entries: Vec<SectorRow>,
}

impl SectorTable {
    pub fn total_d(&self) -> BigUint {
        self.entries.iter().map(|r| &r.d).sum()
    }

    pub fn total_dim_a(&self) -> BigUint {
        self.entries.iter().map(|r| &r.dim_a).sum()
    }

    pub fn total_dim_b(&self) -> BigUint {
        self.entries.iter().map(|r| &r.dim_b).sum()
    }

    pub fn n_a_values(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|r| r.n_a)
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of ways to place `k` particles on `sites` sites.
///
/// Fermions: `C(sites, k)`. Bosons: `C(sites + k - 1, k)`.
pub fn sector_dim(sites: usize, k: usize, statistics: Statistics) -> Result<BigUint> {
    if sites == 0 {
        return Err(Error::domain("sector_dim requires at least one site"));
    }
    Ok(subsystem_dim(sites, k, statistics))
}

// Like sector_dim, but an empty subsystem is allowed: it holds only the vacuum.
fn subsystem_dim(sites: usize, k: usize, statistics: Statistics) -> BigUint {
    if sites == 0 {
        return if k == 0 { BigUint::one() } else { BigUint::zero() };
    }
    match statistics {
        Statistics::Fermionic => binomial(sites as u64, k as u64),
        Statistics::Bosonic => binomial((sites + k - 1) as u64, k as u64),
    }
}

/// Range of particle numbers subsystem A can hold.
pub fn n_a_range(spec: &SystemSpec) -> std::ops::RangeInclusive<usize> {
    let (l, m, n) = (spec.l, spec.m, spec.n);
    match spec.statistics {
        Statistics::Fermionic => n.saturating_sub(l - m)..=n.min(m),
        // With an empty B every particle sits in A.
        Statistics::Bosonic if m == l => n..=n,
        Statistics::Bosonic => 0..=n,
    }
}

pub fn sector_table(spec: &SystemSpec) -> SectorTable {
    let entries = n_a_range(spec)
        .map(|n_a| {
            let dim_a = subsystem_dim(spec.m, n_a, spec.statistics);
            let dim_b = subsystem_dim(spec.l - spec.m, spec.n - n_a, spec.statistics);
            let d = (&dim_a).min(&dim_b).clone();
            SectorRow { n_a, dim_a, dim_b, d }
        })
        .collect();
    SectorTable { spec: *spec, entries }
}

/// Natural logarithm of an arbitrarily large positive integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite below 2^1000").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln Σ_nA min(dim A(nA), dim B(n - nA))`: the tight bound for closed systems.
pub fn closed_system_bound(spec: &SystemSpec) -> f64 {
    let total = sector_table(spec).total_d();
    if total.is_one() {
        0.0
    } else {
        ln_biguint(&total)
    }
}

/// `ln min(dim H_A, dim H_B)` with both dimensions restricted to the
/// particle numbers each side can hold.
pub fn general_bound(spec: &SystemSpec) -> f64 {
    let table = sector_table(spec);
    let smaller = table.total_dim_a().min(table.total_dim_b());
    if smaller.is_one() {
        0.0
    } else {
        ln_biguint(&smaller)
    }
}

/// Subsystem particle-number distribution of any maximally entangled state:
/// `p(nA) = d(nA) / Σ d`.
pub fn max_ent_number_distribution(spec: &SystemSpec) -> Vec<(usize, f64)> {
    let table = sector_table(spec);
    let ln_total = ln_biguint(&table.total_d());
    table
        .entries
        .iter()
        .map(|row| (row.n_a, (ln_biguint(&row.d) - ln_total).exp()))
        .collect()
}

pub fn mean_subsystem_particles(spec: &SystemSpec) -> f64 {
    let table = sector_table(spec);
    let weighted: BigUint = table.entries.iter().map(|r| &r.d * r.n_a).sum();
    if weighted.is_zero() {
        return 0.0;
    }
    (ln_biguint(&weighted) - ln_biguint(&table.total_d())).exp()
}

fn require_fermionic(statistics: Statistics, what: &str) -> Result<()> {
    match statistics {
        Statistics::Fermionic => Ok(()),
        Statistics::Bosonic => Err(Error::domain(format!(
            "{what} has no closed form for bosons"
        ))),
    }
}

/// Smallest `L` beyond which the fermionic bound no longer depends on `L`:
/// `max(max_nA C(M, nA), n) + M`.
pub fn flattening_threshold(m: usize, n: usize, statistics: Statistics) -> Result<usize> {
    require_fermionic(statistics, "the flattening threshold")?;
    if m == 0 {
        return Err(Error::domain("M must be at least 1"));
    }
    let widest = (0..=n.min(m))
        .map(|k| binomial(m as u64, k as u64))
        .max()
        .unwrap_or_else(BigUint::one);
    let widest = widest
        .to_usize()
        .ok_or_else(|| Error::domain(format!("threshold for M = {m} overflows usize")))?;
    Ok(widest.max(n) + m)
}

/// Large-`L` limit of the fermionic bound, `ln(1 + Σ_{nA < min(n, M)} C(M, nA))`.
/// Equals `M ln 2` once `n >= M`.
pub fn flattened_bound(m: usize, n: usize, statistics: Statistics) -> Result<f64> {
    require_fermionic(statistics, "the flattened bound")?;
    if m == 0 {
        return Err(Error::domain("M must be at least 1"));
    }
    let top = n.min(m);
    let sum: BigUint = BigUint::one()
        + (0..top)
            .map(|k| binomial(m as u64, k as u64))
            .sum::<BigUint>();
    Ok(if sum.is_one() { 0.0 } else { ln_biguint(&sum) })
}

/// Bounds implied for pure global states: `S(A|B) >= -B` and `I(A;B) <= 2B`,
/// where `B` is the closed-system bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCorollaries {
    pub conditional_entropy_lower_bound: f64,
    pub mutual_info_upper_bound: f64,
}

pub fn entropy_corollaries(spec: &SystemSpec) -> EntropyCorollaries {
    let bound = closed_system_bound(spec);
    EntropyCorollaries {
        conditional_entropy_lower_bound: -bound,
        mutual_info_upper_bound: 2.0 * bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(spec: &SystemSpec) -> Vec<u64> {
        sector_table(spec)
            .entries
            .iter()
            .map(|r| r.d.to_u64().unwrap())
            .collect()
    }

    #[test]
    fn sector_dims() {
        assert_eq!(sector_dim(3, 1, Statistics::Fermionic).unwrap(), BigUint::from(3u8));
        assert_eq!(sector_dim(2, 3, Statistics::Bosonic).unwrap(), BigUint::from(4u8));
        for s in [Statistics::Fermionic, Statistics::Bosonic] {
            assert_eq!(sector_dim(7, 0, s).unwrap(), BigUint::one());
        }
        assert_eq!(sector_dim(3, 4, Statistics::Fermionic).unwrap(), BigUint::zero());
        assert!(sector_dim(0, 0, Statistics::Fermionic).is_err());
    }

    #[test]
    fn bosonic_dims_exceed_u64() {
        let big = sector_dim(200, 200, Statistics::Bosonic).unwrap();
        assert!(big.bits() > 64);
        // C(399, 200) ~ 10^118.71
        let ln = ln_biguint(&big);
        assert!((ln / std::f64::consts::LN_10 - 118.7116).abs() < 1e-3);
    }

    #[test]
    fn ln_of_huge_integer() {
        let x = BigUint::one() << 5000u32;
        assert!((ln_biguint(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let y = BigUint::from(3u8) << 2000u32;
        assert!((ln_biguint(&y) - (3f64.ln() + 2000.0 * std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn tables() {
        assert_eq!(ds(&SystemSpec::fermionic(6, 3, 2).unwrap()), vec![1, 3, 1]);
        assert_eq!(ds(&SystemSpec::fermionic(8, 4, 3).unwrap()), vec![1, 4, 4, 1]);
        for s in [Statistics::Fermionic, Statistics::Bosonic] {
            let t = sector_table(&SystemSpec::new(2, 1, 0, s).unwrap());
            assert_eq!(t.entries.len(), 1);
            assert_eq!(t.entries[0].n_a, 0);
            assert!(t.entries[0].d.is_one());
        }
        let t = sector_table(&SystemSpec::fermionic(6, 3, 2).unwrap());
        assert_eq!(t.n_a_values().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn fermionic_range_with_many_particles() {
        let t = sector_table(&SystemSpec::fermionic(6, 4, 5).unwrap());
        assert_eq!(t.n_a_values().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn closed_bounds() {
        let b = closed_system_bound(&SystemSpec::fermionic(6, 3, 2).unwrap());
        assert!((b - 5f64.ln()).abs() < 1e-15);
        let b = closed_system_bound(&SystemSpec::fermionic(8, 4, 3).unwrap());
        assert!((b - 10f64.ln()).abs() < 1e-15);
        assert_eq!(closed_system_bound(&SystemSpec::bosonic(4, 4, 4).unwrap()), 0.0);
    }

    #[test]
    fn general_bounds() {
        let g = general_bound(&SystemSpec::fermionic(6, 3, 2).unwrap());
        assert!((g - 7f64.ln()).abs() < 1e-15);
        let g = general_bound(&SystemSpec::fermionic(8, 4, 3).unwrap());
        assert!((g - 15f64.ln()).abs() < 1e-15);
        assert_eq!(general_bound(&SystemSpec::fermionic(2, 1, 0).unwrap()), 0.0);
    }

    #[test]
    fn distributions_and_means() {
        let mean = |l, m, n| mean_subsystem_particles(&SystemSpec::fermionic(l, m, n).unwrap());
        assert!((mean(13, 4, 3) - 19.0 / 12.0).abs() < 1e-14);
        assert!((mean(8, 4, 3) - 1.5).abs() < 1e-14);
        assert!((mean(9, 4, 3) - 17.0 / 11.0).abs() < 1e-14);
        assert!((mean(2, 1, 2) - 1.0).abs() < 1e-14);

        let p = max_ent_number_distribution(&SystemSpec::fermionic(2, 1, 2).unwrap());
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].0, 1);
        assert!((p[0].1 - 1.0).abs() < 1e-15);

        let p = max_ent_number_distribution(&SystemSpec::fermionic(13, 4, 3).unwrap());
        let mean: f64 = p.iter().map(|(k, q)| *k as f64 * q).sum();
        assert!((mean - 19.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn flattening() {
        let f = Statistics::Fermionic;
        assert_eq!(flattening_threshold(4, 3, f).unwrap(), 10);
        assert_eq!(flattening_threshold(1, 1, f).unwrap(), 2);
        assert_eq!(flattening_threshold(5, 4, f).unwrap(), 15);
        assert!((flattened_bound(4, 3, f).unwrap() - 12f64.ln()).abs() < 1e-15);
        assert!((flattened_bound(4, 4, f).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-14);
        assert!((flattened_bound(1, 1, f).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(flattened_bound(3, 0, f).unwrap(), 0.0);
        assert!(flattening_threshold(4, 3, Statistics::Bosonic).is_err());
        assert!(flattened_bound(4, 3, Statistics::Bosonic).is_err());
    }

    #[test]
    fn corollaries() {
        let c = entropy_corollaries(&SystemSpec::fermionic(6, 3, 2).unwrap());
        assert!((c.conditional_entropy_lower_bound + 5f64.ln()).abs() < 1e-15);
        assert!((c.mutual_info_upper_bound - 2.0 * 5f64.ln()).abs() < 1e-15);
        let c = entropy_corollaries(&SystemSpec::fermionic(8, 4, 3).unwrap());
        assert!((c.conditional_entropy_lower_bound + 10f64.ln()).abs() < 1e-15);
        assert!((c.mutual_info_upper_bound - 2.0 * 10f64.ln()).abs() < 1e-15);
        let c = entropy_corollaries(&SystemSpec::bosonic(2, 1, 0).unwrap());
        assert_eq!(c.conditional_entropy_lower_bound, 0.0);
        assert_eq!(c.mutual_info_upper_bound, 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(SystemSpec::fermionic(0, 0, 0).is_err());
        assert!(SystemSpec::fermionic(4, 0, 1).is_err());
        assert!(SystemSpec::fermionic(4, 5, 1).is_err());
        assert!(SystemSpec::fermionic(4, 2, 5).is_err());
        assert!(SystemSpec::bosonic(4, 2, 50).is_ok());
    }

    #[test]
    fn edge_collapse() {
        for s in [Statistics::Fermionic, Statistics::Bosonic] {
            for l in 1..8 {
                let full = SystemSpec::new(l, l, l.min(5), s).unwrap();
                assert_eq!(closed_system_bound(&full), 0.0, "{full}");
                for m in 1..=l {
                    let empty = SystemSpec::new(l, m, 0, s).unwrap();
                    assert_eq!(closed_system_bound(&empty), 0.0, "{empty}");
                }
            }
        }
    }
}
