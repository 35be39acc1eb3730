//! Simple (commuting Pauli-X product) ansaetze and their text format.

use crate::error::{Error, Result};
use crate::gf2::VertexSubset;

/// Ordered list of nonempty vertex subsets, one generator `prod_{i in S} X_i`
/// each. Duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleAnsatz {
    n: usize,
    elements: Vec<VertexSubset>,
}

impl SimpleAnsatz {
    pub fn new(n: usize, elements: Vec<VertexSubset>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidArgument(format!(
                "qubit count {n} outside 1..=64"
            )));
        }
        for (j, s) in elements.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "element {j} is the empty set"
                )));
            }
            if !s.fits(n) {
                return Err(Error::InvalidArgument(format!(
                    "element {j} = {s} has vertices outside 1..={n}"
                )));
            }
        }
        Ok(SimpleAnsatz { n, elements })
    }

    /// The n single-qubit generators `X_1, ..., X_n`.
    pub fn classical(n: usize) -> Self {
        let elements = (1..=n).map(|v| VertexSubset::from_vertices([v])).collect();
        SimpleAnsatz { n, elements }
    }

    /// Every subset with `1 <= |S| <= depth`, grouped by size, each group in
    /// lexicographic order of its sorted vertex tuple.
    pub fn k_body(n: usize, depth: usize) -> Result<Self> {
        if depth == 0 || depth > n {
            return Err(Error::InvalidArgument(format!(
                "depth {depth} outside 1..={n}"
            )));
        }
        let mut elements = Vec::new();
        for k in 1..=depth {
            let mut combo: Vec<usize> = (1..=k).collect();
            loop {
                elements.push(VertexSubset::from_vertices(combo.iter().copied()));
                // next combination in lexicographic order
                let mut i = k;
                while i > 0 && combo[i - 1] == n - k + i {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..k {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        SimpleAnsatz::new(n, elements)
    }

    /// All `2^(n-1) - 1` nonempty subsets that exclude vertex 1, one per
    /// complementary pair.
    pub fn full_nonsymmetric(n: usize) -> Result<Self> {
        if !(2..=20).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "full ansatz supports 2 <= n <= 20, got {n}"
            )));
        }
        let elements = (1u64..1 << (n - 1)).map(|m| VertexSubset(m << 1)).collect();
        SimpleAnsatz::new(n, elements)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[VertexSubset] {
        &self.elements
    }

    /// Largest element cardinality.
    pub fn depth(&self) -> usize {
        self.elements.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.elements {
            let line: Vec<String> = e.vertices().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Parses the ansatz format: one element per line as vertex indices, or a
/// single `depth D` directive. `#` starts a comment line.
pub fn parse_ansatz(text: &str, n: usize) -> Result<SimpleAnsatz> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if let Some(&(ln, first)) = lines.first() {
        if let Some(rest) = first.strip_prefix("depth") {
            if lines.len() != 1 {
                return Err(Error::Parse {
                    line: lines[1].0,
                    msg: "a depth directive must be the only line".into(),
                });
            }
            let d: usize = rest.trim().parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad depth {:?}", rest.trim()),
            })?;
            return SimpleAnsatz::k_body(n, d).map_err(|e| Error::Parse {
                line: ln,
                msg: e.to_string(),
            });
        }
    }
    let mut elements = Vec::with_capacity(lines.len());
    for (ln, line) in lines {
        let mut bits = 0u64;
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad vertex {tok:?}"),
            })?;
            if v < 1 || v > n {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("vertex {v} outside 1..={n}"),
                });
            }
            bits |= 1 << (v - 1);
        }
        elements.push(VertexSubset(bits));
    }
    if elements.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "ansatz has no elements".into(),
        });
    }
    SimpleAnsatz::new(n, elements)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Parameter count of the depth-`d` k-body ansatz, `sum_{k<=d} C(n, k)`.
pub fn k_body_size(n: usize, depth: usize) -> usize {
    (1..=depth.min(n)).map(|k| binomial(n, k)).sum()
}
