//! Weighted graphs, cut values and the exact MaxCut oracle.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::VertexSubset;

/// Default vertex cap for exhaustive cut enumeration.
pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 24;

/// A cut is named by the vertex set on one side.
pub type Cut = VertexSubset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// Undirected graph on vertices `1..=n` with nonnegative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Validates and builds a graph. Edges keep the given order.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one vertex".into(),
            ));
        }
        if n > 64 {
            return Err(Error::LimitExceeded {
                what: "vertex count",
                got: n,
                limit: 64,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            check_edge(n, e).map_err(Error::InvalidArgument)?;
            if !seen.insert((e.a, e.b)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    e.a, e.b
                )));
            }
        }
        Ok(Graph { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Same graph with every weight multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Graph {
        Graph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| Edge { w: e.w * c, ..*e })
                .collect(),
        }
    }

    /// Serializes into the text graph format.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, e.w);
        }
        s
    }
}

fn check_edge(n: usize, e: &Edge) -> std::result::Result<(), String> {
    if e.a < 1 || e.b > n || e.a > n || e.b < 1 {
        return Err(format!(
            "vertex out of range 1..={n} in edge ({}, {})",
            e.a, e.b
        ));
    }
    if e.a >= e.b {
        return Err(format!("edge ({}, {}) must satisfy a < b", e.a, e.b));
    }
    if !(e.w >= 0.0) || !e.w.is_finite() {
        return Err(format!(
            "edge ({}, {}) has invalid weight {}",
            e.a, e.b, e.w
        ));
    }
    Ok(())
}

/// Parses the text graph format: `#` comments, a `n m` header, then `m`
/// lines of `a b w`.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header line \"n m\"".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header must be \"n m\", got {header:?}"),
        });
    }
    let parse_count = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("bad {what} {s:?}"),
        })
    };
    let n = parse_count(fields[0], "vertex count")?;
    let m = parse_count(fields[1], "edge count")?;
    if n == 0 || n > 64 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("vertex count {n} outside 1..=64"),
        });
    }

    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..m {
        let (ln, line) = lines.next().ok_or(Error::Parse {
            line: text.lines().count().max(1),
            msg: format!("expected {m} edge lines, found {}", edges.len()),
        })?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("edge line must be \"a b w\", got {line:?}"),
            });
        }
        let bad = |msg: String| Error::Parse { line: ln, msg };
        let a: usize = f[0]
            .parse()
            .map_err(|_| bad(format!("bad vertex {:?}", f[0])))?;
        let b: usize = f[1]
            .parse()
            .map_err(|_| bad(format!("bad vertex {:?}", f[1])))?;
        let w: f64 = f[2]
            .parse()
            .map_err(|_| bad(format!("bad weight {:?}", f[2])))?;
        let e = Edge { a, b, w };
        check_edge(n, &e).map_err(bad)?;
        if !seen.insert((a, b)) {
            return Err(bad(format!("duplicate edge ({a}, {b})")));
        }
        edges.push(e);
    }
    if let Some((ln, extra)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: format!("unexpected trailing line {extra:?}"),
        });
    }
    Graph::new(n, edges)
}

/// `K_n` with i.i.d. uniform weights in `[w_min, w_max]`, edges in
/// lexicographic order.
pub fn random_complete_graph(n: usize, w_min: f64, w_max: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    if !(w_min <= w_max) || w_min < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "weight range [{w_min}, {w_max}] is invalid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for a in 1..=n {
        for b in a + 1..=n {
            let w = if w_min == w_max {
                w_min
            } else {
                rng.random_range(w_min..=w_max)
            };
            edges.push(Edge { a, b, w });
        }
    }
    Graph::new(n, edges)
}

/// Total weight of edges with exactly one endpoint in `c`.
pub fn cut_value(g: &Graph, c: Cut) -> f64 {
    let mut v = 0.0;
    for e in &g.edges {
        if c.cuts_edge(e.a, e.b) {
            v += e.w;
        }
    }
    v
}

/// `sum w_ab z_a z_b` with `z = -1` inside `c`; equals `W - 2 cut_value`.
pub fn ising_energy(g: &Graph, c: Cut) -> f64 {
    let mut v = 0.0;
    for e in &g.edges {
        if c.cuts_edge(e.a, e.b) {
            v -= e.w;
        } else {
            v += e.w;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCut {
    pub value: f64,
    /// Every maximizing cut, canonicalized, ascending.
    pub argmax: Vec<Cut>,
}

impl MaxCut {
    pub fn contains(&self, c: Cut, n: usize) -> bool {
        self.argmax.binary_search(&c.canonical(n)).is_ok()
    }
}

/// Exhaustive MaxCut over all canonical cuts.
pub fn max_cut_exact(g: &Graph) -> Result<MaxCut> {
    max_cut_exact_with_limit(g, DEFAULT_BRUTE_FORCE_LIMIT)
}

/// Gray-code walk over the `2^(n-1)` canonical cuts with O(deg) updates.
/// Near-maximal candidates are re-scored with [`cut_value`] so the reported
/// value and argmax agree with direct evaluation.
pub fn max_cut_exact_with_limit(g: &Graph, limit: usize) -> Result<MaxCut> {
    let n = g.n;
    if n > limit {
        return Err(Error::LimitExceeded {
            what: "vertex count",
            got: n,
            limit,
        });
    }
    if n == 1 {
        return Ok(MaxCut {
            value: 0.0,
            argmax: vec![VertexSubset::EMPTY],
        });
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &g.edges {
        adj[e.a - 1].push((e.b - 1, e.w));
        adj[e.b - 1].push((e.a - 1, e.w));
    }
    let slack = 1e-9 * (1.0 + g.total_weight());
    // vertex 1 (bit 0) stays out; walk bits 1..n
    let mut mask = 0u64;
    let mut value = 0.0f64;
    let mut best = 0.0f64;
    let mut candidates = vec![0u64];
    let total: u64 = 1 << (n - 1);
    for step in 1..total {
        let bit = step.trailing_zeros() as usize + 1;
        let inside = mask >> bit & 1 == 1;
        let mut delta = 0.0;
        for &(u, w) in &adj[bit] {
            let u_inside = mask >> u & 1 == 1;
            // moving `bit` across flips the cut status of each incident edge
            if u_inside == inside {
                delta += w;
            } else {
                delta -= w;
            }
        }
        mask ^= 1 << bit;
        value += delta;
        if value > best + slack {
            best = value;
            candidates.clear();
            candidates.push(mask);
        } else if value >= best - slack {
            if value > best {
                best = value;
            }
            candidates.push(mask);
        }
    }
    let scored: Vec<(u64, f64)> = candidates
        .into_iter()
        .map(|m| (m, cut_value(g, VertexSubset(m))))
        .collect();
    let exact = scored
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut argmax: Vec<Cut> = scored
        .into_iter()
        .filter(|&(_, v)| (exact - v).abs() <= 1e-12)
        .map(|(m, _)| VertexSubset(m))
        .collect();
    argmax.sort_unstable();
    Ok(MaxCut {
        value: exact,
        argmax,
    })
}
