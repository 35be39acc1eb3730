//! Closed-form objective, gradient and Hessian for simple ansaetze.
//!
//! For an edge `(a, b)` let `C` be the ansatz elements containing exactly one
//! endpoint and `K` the selections of `C` whose masks XOR to the empty set.
//! Conjugating `Z_a Z_b` by each element in `C` gives a factor
//! `cos(2θ_j) + i sin(2θ_j) H_j`, and only products of `H_j` equal to the
//! identity survive on `|0…0⟩`, so
//!
//! ```text
//! J(θ) = Σ_(a,b) w_ab Σ_{K} (-1)^{|K|/2} Π_{j∈C∖K} cos 2θ_j Π_{j∈K} sin 2θ_j
//! ```
//!
//! Every selection has even size because each element of `C` holds exactly
//! one endpoint. Derivatives act factor by factor; the coefficient
//! aggregates `S_k`, `T_k` are formed by leaving the `k`-th factor out of the
//! product instead of dividing it away, so they stay finite at every angle.

use crate::ansatz::SimpleAnsatz;
use crate::error::{Error, Result};
use crate::gf2::{self, VertexSubset};
use crate::graph::Graph;

/// Precomputed kernel expansion of one edge.
#[derive(Debug, Clone)]
pub struct EdgeTerm {
    pub a: usize,
    pub b: usize,
    pub w: f64,
    /// Ansatz indices of `C_(a,b)`, ascending.
    pub members: Vec<usize>,
    pub kernel: gf2::KernelBasis,
    /// Every kernel selection over local indices of `members`.
    pub selections: Vec<u128>,
    /// `(-1)^{|K|/2}` per selection.
    pub signs: Vec<f64>,
}

/// Per-edge precomputation for a (graph, simple ansatz) pair.
#[derive(Debug, Clone)]
pub struct EdgeExpansion {
    graph: Graph,
    ansatz: SimpleAnsatz,
    edges: Vec<EdgeTerm>,
    /// For each ansatz element: (edge index, local index) where it appears.
    incidence: Vec<Vec<(usize, usize)>>,
    work: u64,
}

pub fn build_expansion(g: &Graph, ansatz: &SimpleAnsatz) -> Result<EdgeExpansion> {
    build_expansion_with_limit(g, ansatz, gf2::DEFAULT_ENUMERATION_LIMIT)
}

pub fn build_expansion_with_limit(
    g: &Graph,
    ansatz: &SimpleAnsatz,
    limit: usize,
) -> Result<EdgeExpansion> {
    if g.n() != ansatz.n() {
        return Err(Error::InvalidArgument(format!(
            "graph has {} vertices but the ansatz acts on {}",
            g.n(),
            ansatz.n()
        )));
    }
    let elems = ansatz.elements();
    let mut edges = Vec::with_capacity(g.edges().len());
    let mut incidence = vec![Vec::new(); elems.len()];
    let mut work = 0u64;
    for (ei, e) in g.edges().iter().enumerate() {
        let members = gf2::cut_set_elements(elems, e.a, e.b);
        let family: Vec<VertexSubset> = members.iter().map(|&j| elems[j]).collect();
        let kernel = gf2::kernel_basis(&family)?;
        if kernel.nullity() > limit {
            return Err(Error::EnumerationLimit {
                a: e.a,
                b: e.b,
                nullity: kernel.nullity(),
                limit,
            });
        }
        let selections: Vec<u128> = gf2::enumerate_kernel(&kernel, limit)?.collect();
        let signs = selections
            .iter()
            .map(|&s| {
                let size = s.count_ones();
                assert!(
                    size % 2 == 0,
                    "odd kernel selection inside C({},{}): internal inconsistency",
                    e.a,
                    e.b
                );
                if (size / 2) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        work += selections.len() as u64 * members.len().max(1) as u64;
        for (li, &j) in members.iter().enumerate() {
            incidence[j].push((ei, li));
        }
        edges.push(EdgeTerm {
            a: e.a,
            b: e.b,
            w: e.w,
            members,
            kernel,
            selections,
            signs,
        });
    }
    Ok(EdgeExpansion {
        graph: g.clone(),
        ansatz: ansatz.clone(),
        edges,
        incidence,
        work,
    })
}

/// Both trigonometric factors for every parameter.
struct Trig {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Trig {
    fn new(theta: &[f64]) -> Self {
        let (sin, cos) = theta.iter().map(|t| (2.0 * t).sin_cos()).unzip();
        Trig { cos, sin }
    }
}

/// Objective value with the per-element aggregates `S_k`, `T_k`.
#[derive(Debug, Clone)]
pub struct Aggregates {
    pub value: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl EdgeExpansion {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn ansatz(&self) -> &SimpleAnsatz {
        &self.ansatz
    }

    pub fn edge_terms(&self) -> &[EdgeTerm] {
        &self.edges
    }

    /// `Σ_edges 2^nullity · |C|`, the cost of one evaluation.
    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn num_params(&self) -> usize {
        self.ansatz.len()
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.ansatz.len() {
            return Err(Error::ParamCount {
                expected: self.ansatz.len(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let trig = Trig::new(theta);
        let mut total = 0.0;
        for e in &self.edges {
            let mut edge_sum = 0.0;
            for (&sel, &sign) in e.selections.iter().zip(&e.signs) {
                let mut prod = sign;
                for (li, &j) in e.members.iter().enumerate() {
                    prod *= if sel >> li & 1 == 1 {
                        trig.sin[j]
                    } else {
                        trig.cos[j]
                    };
                }
                edge_sum += prod;
            }
            total += e.w * edge_sum;
        }
        Ok(total)
    }

    /// One pass producing `J`, and `S_k`, `T_k` for every `k`.
    pub fn aggregates(&self, theta: &[f64]) -> Result<Aggregates> {
        self.check(theta)?;
        let m = self.ansatz.len();
        let trig = Trig::new(theta);
        let mut s = vec![0.0; m];
        let mut t = vec![0.0; m];
        let mut value = 0.0;
        let mut factors = Vec::new();
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        for e in &self.edges {
            let c = e.members.len();
            let mut edge_sum = 0.0;
            for (&sel, &sign) in e.selections.iter().zip(&e.signs) {
                factors.clear();
                factors.extend(e.members.iter().enumerate().map(|(li, &j)| {
                    if sel >> li & 1 == 1 {
                        trig.sin[j]
                    } else {
                        trig.cos[j]
                    }
                }));
                prefix_suffix(&factors, &mut prefix, &mut suffix);
                edge_sum += sign * prefix[c];
                for (li, &j) in e.members.iter().enumerate() {
                    let rest = e.w * sign * prefix[li] * suffix[li + 1];
                    if sel >> li & 1 == 1 {
                        t[j] += rest;
                    } else {
                        s[j] += rest;
                    }
                }
            }
            value += e.w * edge_sum;
        }
        Ok(Aggregates { value, s, t })
    }

    /// `(S_k, T_k)`: the cosine and sine coefficients of `θ_k`, each a sum
    /// over kernel selections with the `k`-th factor left out.
    pub fn s_t_terms(&self, theta: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check(theta)?;
        if k >= self.ansatz.len() {
            return Err(Error::InvalidArgument(format!(
                "element index {k} out of range 0..{}",
                self.ansatz.len()
            )));
        }
        let trig = Trig::new(theta);
        let (mut s, mut t) = (0.0, 0.0);
        for &(ei, lk) in &self.incidence[k] {
            let e = &self.edges[ei];
            for (&sel, &sign) in e.selections.iter().zip(&e.signs) {
                let mut prod = e.w * sign;
                for (li, &j) in e.members.iter().enumerate() {
                    if li == lk {
                        continue;
                    }
                    prod *= if sel >> li & 1 == 1 {
                        trig.sin[j]
                    } else {
                        trig.cos[j]
                    };
                }
                if sel >> lk & 1 == 1 {
                    t += prod;
                } else {
                    s += prod;
                }
            }
        }
        Ok((s, t))
    }

    /// `∂_k J = 2[-sin(2θ_k) S_k + cos(2θ_k) T_k]`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(theta)?.1)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let agg = self.aggregates(theta)?;
        let grad = theta
            .iter()
            .zip(agg.s.iter().zip(&agg.t))
            .map(|(th, (s, t))| {
                let (sn, cs) = (2.0 * th).sin_cos();
                2.0 * (-sn * s + cs * t)
            })
            .collect();
        Ok((agg.value, grad))
    }

    /// Full Hessian, row-major `M x M`. Each kernel summand is a product of
    /// one factor per member; differentiating a factor maps
    /// `cos 2θ -> -2 sin 2θ` and `sin 2θ -> 2 cos 2θ`.
    pub fn hessian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(theta)?;
        let m = self.ansatz.len();
        let trig = Trig::new(theta);
        let mut h = vec![vec![0.0; m]; m];
        let mut f = Vec::new();
        let mut d = Vec::new();
        let mut g = Vec::new();
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        for e in &self.edges {
            let c = e.members.len();
            if c == 0 {
                continue;
            }
            for (&sel, &sign) in e.selections.iter().zip(&e.signs) {
                f.clear();
                d.clear();
                for (li, &j) in e.members.iter().enumerate() {
                    if sel >> li & 1 == 1 {
                        f.push(trig.sin[j]);
                        d.push(2.0 * trig.cos[j]);
                    } else {
                        f.push(trig.cos[j]);
                        d.push(-2.0 * trig.sin[j]);
                    }
                }
                let coef = e.w * sign;
                let full: f64 = f.iter().product();
                for lj in 0..c {
                    let j = e.members[lj];
                    // second derivative of either factor is -4 times itself
                    h[j][j] += -4.0 * coef * full;
                    g.clear();
                    g.extend_from_slice(&f);
                    g[lj] = d[lj];
                    prefix_suffix(&g, &mut prefix, &mut suffix);
                    for ll in lj + 1..c {
                        let l = e.members[ll];
                        let v = coef * d[ll] * prefix[ll] * suffix[ll + 1];
                        h[j][l] += v;
                        h[l][j] += v;
                    }
                }
            }
        }
        Ok(h)
    }
}

/// `prefix[i] = Π_{<i} x`, `suffix[i] = Π_{>=i} x`; both have `len + 1` slots.
fn prefix_suffix(x: &[f64], prefix: &mut Vec<f64>, suffix: &mut Vec<f64>) {
    let n = x.len();
    prefix.clear();
    prefix.resize(n + 1, 1.0);
    suffix.clear();
    suffix.resize(n + 1, 1.0);
    for i in 0..n {
        prefix[i + 1] = prefix[i] * x[i];
    }
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * x[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_graph, random_complete_graph};

    fn triangle() -> Graph {
        load_graph("3 3\n1 2 1\n1 3 1\n2 3 1").unwrap()
    }

    #[test]
    fn classical_expansion_has_trivial_kernels() {
        let g = triangle();
        let exp = build_expansion(&g, &SimpleAnsatz::classical(3)).unwrap();
        for e in exp.edge_terms() {
            assert_eq!(e.members.len(), 2);
            assert_eq!(e.kernel.nullity(), 0);
        }
    }

    #[test]
    fn duplicated_classical_has_nullity_two() {
        let g = triangle();
        let mut elems = SimpleAnsatz::classical(3).elements().to_vec();
        elems.extend_from_within(..);
        let exp = build_expansion(&g, &SimpleAnsatz::new(3, elems).unwrap()).unwrap();
        for e in exp.edge_terms() {
            assert_eq!(e.members.len(), 4);
            assert_eq!(e.kernel.nullity(), 2);
        }
    }

    #[test]
    fn element_cutting_nothing_is_absent() {
        let g = load_graph("3 1\n1 2 1").unwrap();
        let a = SimpleAnsatz::new(
            3,
            vec![
                VertexSubset::from_vertices([1]),
                VertexSubset::from_vertices([3]),
            ],
        )
        .unwrap();
        let exp = build_expansion(&g, &a).unwrap();
        assert_eq!(exp.edge_terms()[0].members, vec![0]);
        assert_eq!(exp.gradient(&[0.3, 0.7]).unwrap()[1], 0.0);
    }

    #[test]
    fn limit_names_the_edge() {
        let g = load_graph("2 1\n1 2 1").unwrap();
        let a = SimpleAnsatz::new(2, vec![VertexSubset::from_vertices([1]); 5]).unwrap();
        match build_expansion_with_limit(&g, &a, 3) {
            Err(Error::EnumerationLimit {
                a: 1,
                b: 2,
                nullity: 4,
                limit: 3,
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_angles() {
        let g = random_complete_graph(5, 0.0, 5.0, 2).unwrap();
        let exp = build_expansion(&g, &SimpleAnsatz::k_body(5, 2).unwrap()).unwrap();
        let theta = vec![0.0; exp.num_params()];
        assert!((exp.objective(&theta).unwrap() - g.total_weight()).abs() < 1e-12);
        assert!(exp
            .gradient(&theta)
            .unwrap()
            .iter()
            .all(|x| x.abs() < 1e-12));
        for k in 0..exp.num_params() {
            assert_eq!(exp.s_t_terms(&theta, k).unwrap().1, 0.0);
        }
    }

    #[test]
    fn classical_closed_forms() {
        let g = random_complete_graph(4, 0.0, 5.0, 9).unwrap();
        let exp = build_expansion(&g, &SimpleAnsatz::classical(4)).unwrap();
        let theta: [f64; 4] = [0.3, -1.1, 2.0, 0.45];
        let c = |i: usize| (2.0 * theta[i - 1]).cos();
        let s = |i: usize| (2.0 * theta[i - 1]).sin();
        let j: f64 = g.edges().iter().map(|e| e.w * c(e.a) * c(e.b)).sum();
        assert!((exp.objective(&theta).unwrap() - j).abs() < 1e-12);

        let grad = exp.gradient(&theta).unwrap();
        let hess = exp.hessian(&theta).unwrap();
        for a in 1..=4 {
            let nb: f64 = g
                .edges()
                .iter()
                .filter_map(|e| {
                    if e.a == a {
                        Some(e.w * c(e.b))
                    } else if e.b == a {
                        Some(e.w * c(e.a))
                    } else {
                        None
                    }
                })
                .sum();
            assert!((grad[a - 1] + 2.0 * s(a) * nb).abs() < 1e-12);
            let (sk, tk) = exp.s_t_terms(&theta, a - 1).unwrap();
            assert!((sk - nb).abs() < 1e-12);
            assert_eq!(tk, 0.0);
        }
        for e in g.edges() {
            let want = 4.0 * s(e.a) * s(e.b) * e.w;
            assert!((hess[e.a - 1][e.b - 1] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn s_t_are_independent_of_own_angle() {
        let g = random_complete_graph(5, 0.0, 5.0, 4).unwrap();
        let exp = build_expansion(&g, &SimpleAnsatz::k_body(5, 2).unwrap()).unwrap();
        let mut theta: Vec<f64> = (0..exp.num_params())
            .map(|i| 0.37 * i as f64 - 1.0)
            .collect();
        for k in 0..exp.num_params() {
            let before = exp.s_t_terms(&theta, k).unwrap();
            let keep = theta[k];
            theta[k] += 0.913;
            let after = exp.s_t_terms(&theta, k).unwrap();
            theta[k] = keep;
            assert_eq!(before, after);
        }
    }

    #[test]
    fn s_t_decomposition_reproduces_objective() {
        let g = random_complete_graph(5, 0.0, 5.0, 6).unwrap();
        let exp = build_expansion(&g, &SimpleAnsatz::k_body(5, 2).unwrap()).unwrap();
        let mut theta: Vec<f64> = (0..exp.num_params())
            .map(|i| (i as f64).sin() * 2.0)
            .collect();
        for k in [0, 3, 7, 12] {
            let (s, t) = exp.s_t_terms(&theta, k).unwrap();
            let base = exp.objective(&theta).unwrap();
            let v = base - ((2.0 * theta[k]).cos() * s + (2.0 * theta[k]).sin() * t);
            theta[k] += 0.77;
            let moved = exp.objective(&theta).unwrap();
            let v2 = moved - ((2.0 * theta[k]).cos() * s + (2.0 * theta[k]).sin() * t);
            assert!((v - v2).abs() < 1e-10, "V_k changed: {v} vs {v2}");
        }
    }

    #[test]
    fn zero_angle_hessian_is_diagonal_cut_values() {
        let g = random_complete_graph(5, 0.0, 5.0, 8).unwrap();
        let a = SimpleAnsatz::k_body(5, 2).unwrap();
        let exp = build_expansion(&g, &a).unwrap();
        let h = exp.hessian(&vec![0.0; a.len()]).unwrap();
        for (k, s) in a.elements().iter().enumerate() {
            let want = -4.0 * crate::graph::cut_value(&g, *s);
            assert!((h[k][k] - want).abs() < 1e-12);
            for l in 0..a.len() {
                if l != k {
                    assert!(h[k][l].abs() < 1e-12);
                }
            }
        }
    }
}
