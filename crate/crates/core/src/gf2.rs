//! Subset algebra over GF(2).
//!
//! Vertex subsets are bitmasks (vertex `i` lives at bit `i - 1`), so the
//! disjunctive union is XOR. The kernel of a family of subsets is the set of
//! selections whose members XOR to the empty set; it is a GF(2) vector space
//! whose basis comes out of Gaussian elimination, while listing all of its
//! elements is exponential in the nullity.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the nullity that [`enumerate_kernel`] will expand.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 20;

/// Largest family a [`KernelBasis`] can index (selections are `u128`).
pub const MAX_FAMILY: usize = 128;

/// An n-bit vertex mask, vertex `i` at bit `i - 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSubset(pub u64);

impl VertexSubset {
    pub const EMPTY: VertexSubset = VertexSubset(0);

    /// Builds a subset from 1-indexed vertices.
    pub fn from_vertices<I: IntoIterator<Item = usize>>(vertices: I) -> Self {
        let mut bits = 0u64;
        for v in vertices {
            assert!((1..=64).contains(&v), "vertex {v} out of range 1..=64");
            bits |= 1 << (v - 1);
        }
        VertexSubset(bits)
    }

    /// The full vertex set `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            VertexSubset(u64::MAX)
        } else {
            VertexSubset((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        (1..=64).contains(&v) && self.0 >> (v - 1) & 1 == 1
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn xor(self, other: VertexSubset) -> VertexSubset {
        VertexSubset(self.0 ^ other.0)
    }

    pub fn complement(self, n: usize) -> VertexSubset {
        VertexSubset(!self.0 & Self::full(n).0)
    }

    /// Representative of `{S, S^c}` with vertex 1 on the excluded side.
    pub fn canonical(self, n: usize) -> VertexSubset {
        if self.0 & 1 == 1 {
            self.complement(n)
        } else {
            self
        }
    }

    /// True if every bit lies in positions `1..=n`.
    pub fn fits(self, n: usize) -> bool {
        self.0 & !Self::full(n).0 == 0
    }

    /// Ascending 1-indexed vertices.
    pub fn vertices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize + 1;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    /// True when exactly one endpoint of `(a, b)` is inside.
    #[inline]
    pub fn cuts_edge(self, a: usize, b: usize) -> bool {
        self.contains(a) != self.contains(b)
    }
}

impl fmt::Debug for VertexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.vertices()).finish()
    }
}

impl fmt::Display for VertexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.vertices().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// Serialized as the sorted vertex list.
impl serde::Serialize for VertexSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.vertices())
    }
}

impl std::ops::BitXor for VertexSubset {
    type Output = VertexSubset;
    fn bitxor(self, rhs: VertexSubset) -> VertexSubset {
        self.xor(rhs)
    }
}

impl std::ops::BitXorAssign for VertexSubset {
    fn bitxor_assign(&mut self, rhs: VertexSubset) {
        self.0 ^= rhs.0;
    }
}

pub fn xor_subsets(s1: VertexSubset, s2: VertexSubset) -> VertexSubset {
    s1 ^ s2
}

/// Indices `j` with exactly one of `a`, `b` in `ansatz[j]`.
pub fn cut_set_elements(ansatz: &[VertexSubset], a: usize, b: usize) -> Vec<usize> {
    debug_assert_ne!(a, b);
    ansatz
        .iter()
        .enumerate()
        .filter(|(_, s)| s.cuts_edge(a, b))
        .map(|(j, _)| j)
        .collect()
}

/// XOR of the family members picked by `selection` (bit `i` picks member `i`).
pub fn xor_selection(family: &[VertexSubset], selection: u128) -> VertexSubset {
    let mut acc = VertexSubset::EMPTY;
    let mut sel = selection;
    while sel != 0 {
        let i = sel.trailing_zeros() as usize;
        acc ^= family[i];
        sel &= sel - 1;
    }
    acc
}

/// Row-reduced echelon data for a family: pivot rows with the member
/// combinations that produced them.
#[derive(Debug, Clone)]
struct Echelon {
    /// (reduced mask, combination of members producing it), pivot = highest bit.
    pivots: Vec<(u64, u128)>,
    kernel: Vec<u128>,
}

fn eliminate(family: &[VertexSubset]) -> Echelon {
    let mut pivots: Vec<(u64, u128)> = Vec::new();
    let mut kernel = Vec::new();
    for (i, member) in family.iter().enumerate() {
        let mut row = member.0;
        let mut combo = 1u128 << i;
        // pivots are kept sorted by descending leading bit
        for &(p, c) in &pivots {
            let lead = 63 - p.leading_zeros();
            if row >> lead & 1 == 1 {
                row ^= p;
                combo ^= c;
            }
        }
        if row == 0 {
            kernel.push(combo);
        } else {
            let lead = 63 - row.leading_zeros();
            let pos = pivots
                .iter()
                .position(|&(p, _)| 63 - p.leading_zeros() < lead)
                .unwrap_or(pivots.len());
            pivots.insert(pos, (row, combo));
        }
    }
    Echelon { pivots, kernel }
}

fn reduce(pivots: &[(u64, u128)], target: u64) -> (u64, u128) {
    let mut row = target;
    let mut combo = 0u128;
    for &(p, c) in pivots {
        let lead = 63 - p.leading_zeros();
        if row >> lead & 1 == 1 {
            row ^= p;
            combo ^= c;
        }
    }
    (row, combo)
}

/// GF(2) kernel basis of a family of vertex masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelBasis {
    /// Number of family members.
    pub ambient: usize,
    /// Selection masks over family members; each XORs to the empty set.
    pub basis: Vec<u128>,
}

impl KernelBasis {
    pub fn nullity(&self) -> usize {
        self.basis.len()
    }

    pub fn rank(&self) -> usize {
        self.ambient - self.basis.len()
    }

    /// `|K| = 2^nullity` as a float (exact for nullity < 1024).
    pub fn kernel_size(&self) -> f64 {
        (self.nullity() as f64).exp2()
    }
}

/// Kernel basis by Gaussian elimination; nullity is `|family| - rank`.
pub fn kernel_basis(family: &[VertexSubset]) -> Result<KernelBasis> {
    if family.len() > MAX_FAMILY {
        return Err(Error::LimitExceeded {
            what: "family size",
            got: family.len(),
            limit: MAX_FAMILY,
        });
    }
    let ech = eliminate(family);
    Ok(KernelBasis {
        ambient: family.len(),
        basis: ech.kernel,
    })
}

/// Dimension of the GF(2) span of the family.
pub fn span_rank(family: &[VertexSubset]) -> usize {
    if family.len() <= MAX_FAMILY {
        eliminate(family).pivots.len()
    } else {
        // only the rank is needed; combos may overflow, so reduce masks alone
        let mut rows: Vec<u64> = Vec::new();
        for m in family {
            let mut r = m.0;
            for &p in &rows {
                r = r.min(r ^ p);
            }
            if r != 0 {
                rows.push(r);
                rows.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        rows.len()
    }
}

/// A selection of family members XOR-ing to `target`, if one exists.
pub fn solve_span(family: &[VertexSubset], target: VertexSubset) -> Result<Option<u128>> {
    if family.len() > MAX_FAMILY {
        return Err(Error::LimitExceeded {
            what: "family size",
            got: family.len(),
            limit: MAX_FAMILY,
        });
    }
    let ech = eliminate(family);
    let (rest, combo) = reduce(&ech.pivots, target.0);
    Ok((rest == 0).then_some(combo))
}

/// Gray-code walk over every kernel element, starting at the empty selection.
#[derive(Debug, Clone)]
pub struct KernelIter {
    basis: Vec<u128>,
    current: u128,
    step: u64,
    total: u64,
}

impl Iterator for KernelIter {
    type Item = u128;

    fn next(&mut self) -> Option<u128> {
        if self.step >= self.total {
            return None;
        }
        if self.step > 0 {
            let flip = self.step.trailing_zeros() as usize;
            self.current ^= self.basis[flip];
        }
        self.step += 1;
        Some(self.current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.step) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for KernelIter {}

/// Enumerates all `2^nullity` kernel selections; refuses above `limit`.
pub fn enumerate_kernel(basis: &KernelBasis, limit: usize) -> Result<KernelIter> {
    if basis.nullity() > limit {
        return Err(Error::LimitExceeded {
            what: "kernel nullity",
            got: basis.nullity(),
            limit,
        });
    }
    Ok(KernelIter {
        basis: basis.basis.clone(),
        current: 0,
        step: 0,
        total: 1u64 << basis.nullity(),
    })
}
