//! Fixed-particle-number occupation basis for spinless fermions.
//!
//! Site `i` (1-based) is bit `i - 1` of the mask. Subsystem A is sites
//! `1..=M`, i.e. the `M` low bits. Ket strings are written left to right as
//! sites `1..=L`, so `|110000>` has sites 1 and 2 occupied.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_SITES: usize = 30;

/// Location of a basis state inside its subsystem-particle-number block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SectorIndex {
    pub n_a: usize,
    /// Rank of the A bits among masks with the same popcount.
    pub a_index: usize,
    /// Rank of the B bits among masks with the same popcount.
    pub b_index: usize,
}

/// Block shape of one `nA` sector: rows index A configurations, columns B.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorShape {
    pub n_a: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    l: usize,
    m: usize,
    n: usize,
    states: Vec<u32>,
    index_of: HashMap<u32, usize>,
    sector_index: Vec<SectorIndex>,
    shapes: Vec<SectorShape>,
    /// For each sector (same order as `shapes`), the state indices laid out
    /// row-major in the `rows x cols` block.
    blocks: Vec<Vec<usize>>,
}

/// All `width`-bit masks with `ones` bits set, ascending.
pub fn masks_with_popcount(width: usize, ones: usize) -> Vec<u32> {
    if ones > width {
        return Vec::new();
    }
    if ones == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let limit: u64 = 1u64 << width;
    let mut v: u64 = (1u64 << ones) - 1;
    // Gosper's hack: next integer with the same popcount
    while v < limit {
        out.push(v as u32);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Number of particles on the first `m` sites.
pub fn number_in_a(state: u32, m: usize) -> usize {
    let mask = if m >= 32 { u32::MAX } else { (1u32 << m) - 1 };
    (state & mask).count_ones() as usize
}

/// Render a mask as a ket string, site 1 first.
pub fn ket_string(state: u32, l: usize) -> String {
    (0..l)
        .map(|i| if state >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parse a ket string (site 1 first) into a mask.
pub fn parse_ket(s: &str) -> Result<u32> {
    let s = s.trim().trim_start_matches('|').trim_end_matches('>');
    if s.len() > MAX_SITES {
        return Err(Error::Parse(format!("ket '{s}' longer than {MAX_SITES} sites")));
    }
    s.chars().enumerate().try_fold(0u32, |acc, (i, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(Error::Parse(format!("invalid occupation '{c}' in ket '{s}'"))),
    })
}

impl SectorBasis {
    pub fn new(l: usize, m: usize, n: usize) -> Result<Self> {
        if l == 0 || l > MAX_SITES {
            return Err(Error::domain(format!("L must satisfy 1 <= L <= {MAX_SITES} (got {l})")));
        }
        if m == 0 || m > l {
            return Err(Error::domain(format!("M must satisfy 1 <= M <= L (got M = {m}, L = {l})")));
        }
        if n > l {
            return Err(Error::domain(format!("n must satisfy n <= L (got n = {n}, L = {l})")));
        }

        let states = masks_with_popcount(l, n);
        let index_of: HashMap<u32, usize> =
            states.iter().enumerate().map(|(i, &s)| (s, i)).collect();

        let lb = l - m;
        let n_a_lo = n.saturating_sub(lb);
        let n_a_hi = n.min(m);

        // rank lookup tables for A and B sub-masks, per popcount
        let mut a_rank: HashMap<u32, usize> = HashMap::new();
        let mut b_rank: HashMap<u32, usize> = HashMap::new();
        let mut shapes = Vec::new();
        for n_a in n_a_lo..=n_a_hi {
            let a_masks = masks_with_popcount(m, n_a);
            let b_masks = masks_with_popcount(lb, n - n_a);
            for (r, &a) in a_masks.iter().enumerate() {
                a_rank.insert(a, r);
            }
            for (r, &b) in b_masks.iter().enumerate() {
                b_rank.insert(b, r);
            }
            shapes.push(SectorShape {
                n_a,
                rows: a_masks.len(),
                cols: b_masks.len(),
            });
        }

        let a_mask = if m >= 32 { u32::MAX } else { (1u32 << m) - 1 };
        let mut blocks: Vec<Vec<usize>> = shapes
            .iter()
            .map(|s| vec![usize::MAX; s.rows * s.cols])
            .collect();
        let sector_index: Vec<SectorIndex> = states
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let a = s & a_mask;
                let b = s >> m;
                let n_a = a.count_ones() as usize;
                let si = SectorIndex {
                    n_a,
                    a_index: a_rank[&a],
                    b_index: b_rank[&b],
                };
                let k = n_a - n_a_lo;
                blocks[k][si.a_index * shapes[k].cols + si.b_index] = i;
                si
            })
            .collect();
        debug_assert!(blocks.iter().flatten().all(|&i| i != usize::MAX));

        Ok(SectorBasis {
            l,
            m,
            n,
            states,
            index_of,
            sector_index,
            shapes,
            blocks,
        })
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

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u32 {
        self.states[i]
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.index_of.get(&state).copied()
    }

    pub fn sector_index(&self, i: usize) -> SectorIndex {
        self.sector_index[i]
    }

    /// Sector shapes in ascending `nA`.
    pub fn shapes(&self) -> &[SectorShape] {
        &self.shapes
    }

    /// State indices of sector `k` (position in `shapes()`), row-major.
    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    /// Iterate `(shape, row-major state indices)` over sectors.
    pub fn sectors(&self) -> impl Iterator<Item = (&SectorShape, &[usize])> {
        self.shapes.iter().zip(self.blocks.iter().map(Vec::as_slice))
    }

    pub fn same_shape(&self, other: &SectorBasis) -> bool {
        self.l == other.l && self.m == other.m && self.n == other.n
    }
}

/// Convenience wrapper matching the library's free-function style.
pub fn build_basis(l: usize, m: usize, n: usize) -> Result<SectorBasis> {
    SectorBasis::new(l, m, n)
}
