//! Eigenstate parameters, local-minimum inequalities over cuts, critical
//! point classification, the flip local search and rounding to a cut.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::EdgeExpansion;
use crate::ansatz::SimpleAnsatz;
use crate::error::{Error, Result};
use crate::gf2::{solve_span, span_rank, VertexSubset};
use crate::graph::{cut_value, max_cut_exact, Cut, Graph};

/// Largest `n` for [`enumerate_inequality_cuts`].
pub const DEFAULT_CUT_ENUMERATION_LIMIT: usize = 20;
/// Largest `n` for [`verify_trap_free_full_ansatz`].
pub const TRAP_FREE_LIMIT: usize = 8;

/// Indices (into `family`) of a maximal independent subfamily, first come
/// first kept.
fn independent_subfamily(family: &[VertexSubset]) -> Vec<usize> {
    let mut basis: Vec<u64> = Vec::new();
    let mut keep = Vec::new();
    for (j, s) in family.iter().enumerate() {
        let mut v = s.bits();
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            keep.push(j);
        }
    }
    keep
}

/// Angles in `{0, π/2}` whose `π/2` elements XOR to `c`, or failing that to
/// its complement.
pub fn eigenstate_params(c: Cut, ansatz: &SimpleAnsatz) -> Result<Vec<f64>> {
    let n = ansatz.n();
    if !c.fits(n) {
        return Err(Error::InvalidArgument(format!("cut {c} outside 1..={n}")));
    }
    let elements = ansatz.elements();
    let keep = independent_subfamily(elements);
    let sub: Vec<VertexSubset> = keep.iter().map(|&j| elements[j]).collect();
    let selection = match solve_span(&sub, c)? {
        Some(sel) => sel,
        None => match solve_span(&sub, c.complement(n))? {
            Some(sel) => sel,
            None => {
                return Err(Error::Unreachable {
                    span_dim: span_rank(&sub),
                })
            }
        },
    };
    let mut theta = vec![0.0; elements.len()];
    for (i, &j) in keep.iter().enumerate() {
        if selection >> i & 1 == 1 {
            theta[j] = FRAC_PI_2;
        }
    }
    Ok(theta)
}

/// `4 [CutVal(c) − CutVal(c ⊕ H_k)]` for every element.
pub fn eigenstate_hessian_diag(g: &Graph, ansatz: &SimpleAnsatz, c: Cut) -> Vec<f64> {
    let base = cut_value(g, c);
    ansatz
        .elements()
        .iter()
        .map(|&h| 4.0 * (base - cut_value(g, c ^ h)))
        .collect()
}

/// No single element flip raises the cut value (ties allowed).
pub fn is_local_min_cut(g: &Graph, ansatz: &SimpleAnsatz, c: Cut) -> bool {
    let base = cut_value(g, c);
    ansatz
        .elements()
        .iter()
        .all(|&h| base >= cut_value(g, c ^ h))
}

pub fn enumerate_inequality_cuts(g: &Graph, ansatz: &SimpleAnsatz) -> Result<BTreeSet<Cut>> {
    enumerate_inequality_cuts_with_limit(g, ansatz, DEFAULT_CUT_ENUMERATION_LIMIT)
}

/// All canonical cuts satisfying [`is_local_min_cut`].
pub fn enumerate_inequality_cuts_with_limit(
    g: &Graph,
    ansatz: &SimpleAnsatz,
    limit: usize,
) -> Result<BTreeSet<Cut>> {
    let n = g.n();
    check_same_n(g, ansatz)?;
    if n > limit {
        return Err(Error::LimitExceeded {
            what: "vertex count for cut enumeration",
            got: n,
            limit,
        });
    }
    let values: Vec<f64> = (0..1u64 << n)
        .map(|x| cut_value(g, VertexSubset(x)))
        .collect();
    let mut out = BTreeSet::new();
    for half in 0..1u64 << (n - 1) {
        let x = half << 1;
        let v = values[x as usize];
        if ansatz
            .elements()
            .iter()
            .all(|h| v >= values[(x ^ h.bits()) as usize])
        {
            out.insert(VertexSubset(x));
        }
    }
    Ok(out)
}

fn check_same_n(g: &Graph, ansatz: &SimpleAnsatz) -> Result<()> {
    if g.n() != ansatz.n() {
        return Err(Error::InvalidArgument(format!(
            "graph has {} vertices but the ansatz acts on {} qubits",
            g.n(),
            ansatz.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapFreeReport {
    pub trap_free: bool,
    /// A cut satisfying the inequalities that is not a maximum cut.
    pub witness: Option<Cut>,
    pub inequality_cuts: BTreeSet<Cut>,
    pub max_cuts: BTreeSet<Cut>,
}

/// Compares the inequality cuts of the all-subsets ansatz with the maximum
/// cuts.
pub fn verify_trap_free_full_ansatz(g: &Graph) -> Result<TrapFreeReport> {
    let n = g.n();
    if n > TRAP_FREE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "vertex count for the full ansatz",
            got: n,
            limit: TRAP_FREE_LIMIT,
        });
    }
    let ansatz = SimpleAnsatz::full_nonsymmetric(n)?;
    let inequality_cuts = enumerate_inequality_cuts(g, &ansatz)?;
    let max_cuts: BTreeSet<Cut> = max_cut_exact(g)?.argmax.into_iter().collect();
    let witness = inequality_cuts.difference(&max_cuts).next().copied();
    Ok(TrapFreeReport {
        trap_free: inequality_cuts == max_cuts,
        witness,
        inequality_cuts,
        max_cuts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    GlobalMinimum,
    /// A local minimum that is not global, or a local maximum.
    Trap,
    StrictSaddle,
    Degenerate,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::GlobalMinimum => "global-minimum",
            Classification::Trap => "trap",
            Classification::StrictSaddle => "strict-saddle",
            Classification::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestEigenstate {
    pub cut: Cut,
    /// Euclidean distance from `θ` to the snapped parameters.
    pub distance: f64,
}

/// Finite-difference evidence along a near-kernel Hessian direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateProbe {
    pub direction: Vec<f64>,
    pub third_derivative: f64,
    /// `J(θ) − J(θ + h·direction)`, positive when it descends.
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointReport {
    pub theta: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub hessian_spectrum: Vec<f64>,
    pub tol_eig: f64,
    pub classification: Classification,
    pub nearest_eigenstate: Option<NearestEigenstate>,
    /// Set for degenerate points when some near-kernel direction descends.
    pub descent_probe: Option<DegenerateProbe>,
}

pub const DEFAULT_TOL_GRAD: f64 = 1e-7;
const PROBE_STEP: f64 = 1e-3;

/// `1e-7 (1 + ‖H‖∞)`.
pub fn default_tol_eig(hessian: &[Vec<f64>]) -> f64 {
    let norm = hessian
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    1e-7 * (1.0 + norm)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_spectrum(h: &[Vec<f64>]) -> Vec<f64> {
    let m = h.len();
    let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_fn(m, m, |i, j| h[i][j]))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Snaps every angle to the nearest multiple of `π/2`.
pub fn nearest_eigenstate(ansatz: &SimpleAnsatz, theta: &[f64]) -> NearestEigenstate {
    let mut cut = VertexSubset::EMPTY;
    let mut dist2 = 0.0;
    for (&t, &h) in theta.iter().zip(ansatz.elements()) {
        let q = (t / FRAC_PI_2).round();
        dist2 += (t - q * FRAC_PI_2).powi(2);
        if q.rem_euclid(2.0) == 1.0 {
            cut ^= h;
        }
    }
    NearestEigenstate {
        cut,
        distance: dist2.sqrt(),
    }
}

/// Classifies a critical point by its Hessian spectrum. `tol_eig = None`
/// uses [`default_tol_eig`].
pub fn classify_critical_point(
    exp: &EdgeExpansion,
    theta: &[f64],
    tol_grad: f64,
    tol_eig: Option<f64>,
) -> Result<CriticalPointReport> {
    let (value, grad) = exp.value_and_gradient(theta)?;
    let grad_norm = grad.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if grad_norm > tol_grad {
        return Err(Error::NotCritical {
            grad_norm,
            tol: tol_grad,
        });
    }
    let h = exp.hessian(theta)?;
    let m = h.len();
    let tol_eig = tol_eig.unwrap_or_else(|| default_tol_eig(&h));
    let eig = SymmetricEigen::new(DMatrix::from_fn(m, m, |i, j| h[i][j]));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let g = exp.graph();
    let w = g.total_weight();
    let best = max_cut_exact(g)?.value;
    let has_pos = spectrum.iter().any(|&l| l > tol_eig);
    let has_neg = spectrum.iter().any(|&l| l < -tol_eig);
    let all_pos = spectrum.iter().all(|&l| l > tol_eig);
    let all_neg = spectrum.iter().all(|&l| l < -tol_eig);

    let classification = if value <= w - 2.0 * best + 1e-7 * (1.0 + w) {
        Classification::GlobalMinimum
    } else if has_pos && has_neg {
        Classification::StrictSaddle
    } else if all_pos || all_neg {
        Classification::Trap
    } else {
        Classification::Degenerate
    };

    let descent_probe = if classification == Classification::Degenerate {
        let f = |t: &[f64]| exp.objective(t).expect("parameter count already checked");
        order
            .iter()
            .filter(|&&i| eig.eigenvalues[i].abs() <= tol_eig)
            .filter_map(|&i| {
                let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                probe_direction(&f, theta, value, &v)
            })
            .max_by(|a, b| a.decrease.total_cmp(&b.decrease))
    } else {
        None
    };

    Ok(CriticalPointReport {
        theta: theta.to_vec(),
        value,
        grad_norm,
        hessian_spectrum: spectrum,
        tol_eig,
        classification,
        nearest_eigenstate: Some(nearest_eigenstate(exp.ansatz(), theta)),
        descent_probe,
    })
}

fn probe_direction(
    f: &impl Fn(&[f64]) -> f64,
    theta: &[f64],
    value: f64,
    v: &[f64],
) -> Option<DegenerateProbe> {
    let at = |s: f64| {
        let t: Vec<f64> = theta
            .iter()
            .zip(v)
            .map(|(a, b)| a + s * PROBE_STEP * b)
            .collect();
        f(&t)
    };
    let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
    let third = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * PROBE_STEP.powi(3));
    let (decrease, sign) = if p1 <= m1 {
        (value - p1, 1.0)
    } else {
        (value - m1, -1.0)
    };
    (decrease > 1e-12 * (1.0 + value.abs())).then(|| DegenerateProbe {
        direction: v.iter().map(|x| sign * x).collect(),
        third_derivative: third,
        decrease,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipPolicy {
    /// Largest improvement, lowest index on ties.
    #[default]
    Greedy,
    /// Uniform among improving elements.
    RandomImproving,
    /// First improving element in ansatz order, rescanning from the start
    /// after each flip.
    FirstImproving,
}

impl std::str::FromStr for FlipPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(FlipPolicy::Greedy),
            "random" | "random-improving" => Ok(FlipPolicy::RandomImproving),
            "first" | "first-improving" => Ok(FlipPolicy::FirstImproving),
            other => Err(Error::InvalidArgument(format!(
                "unknown flip policy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipStep {
    pub iteration: usize,
    pub element: usize,
    pub cut: Cut,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlipTrace {
    pub steps: Vec<FlipStep>,
}

/// Local search over cuts: XOR an improving ansatz element into the cut
/// until none improves.
pub fn flip_algorithm(
    g: &Graph,
    ansatz: &SimpleAnsatz,
    start: Cut,
    policy: FlipPolicy,
    seed: u64,
) -> Result<(Cut, FlipTrace)> {
    check_same_n(g, ansatz)?;
    if !start.fits(g.n()) {
        return Err(Error::InvalidArgument(format!(
            "start cut {start} outside 1..={}",
            g.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cut = start;
    let mut value = cut_value(g, cut);
    let mut trace = FlipTrace::default();
    let elements = ansatz.elements();
    loop {
        let pick = match policy {
            FlipPolicy::FirstImproving => elements.iter().enumerate().find_map(|(k, &h)| {
                let v = cut_value(g, cut ^ h);
                (v > value).then_some((k, v))
            }),
            FlipPolicy::Greedy => {
                let mut best: Option<(usize, f64)> = None;
                for (k, &h) in elements.iter().enumerate() {
                    let v = cut_value(g, cut ^ h);
                    if v > value && best.is_none_or(|(_, b)| v > b) {
                        best = Some((k, v));
                    }
                }
                best
            }
            FlipPolicy::RandomImproving => {
                let improving: Vec<(usize, f64)> = elements
                    .iter()
                    .enumerate()
                    .map(|(k, &h)| (k, cut_value(g, cut ^ h)))
                    .filter(|&(_, v)| v > value)
                    .collect();
                (!improving.is_empty()).then(|| improving[rng.random_range(0..improving.len())])
            }
        };
        let Some((k, v)) = pick else {
            return Ok((cut, trace));
        };
        cut ^= elements[k];
        value = v;
        trace.steps.push(FlipStep {
            iteration: trace.steps.len() + 1,
            element: k,
            cut,
            value,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundedCut {
    pub cut: Cut,
    pub cut_value: f64,
    /// `(W − J(θ))/2` for the input angles.
    pub continuous_value: f64,
    /// Angles after the snapping passes, before the flip descent.
    pub snapped: Vec<f64>,
}

/// Rounds `θ` to a cut with the analytic objective.
pub fn round_to_cut(exp: &EdgeExpansion, theta: &[f64]) -> Result<RoundedCut> {
    round_to_cut_with(exp.graph(), exp.ansatz(), theta, |t| {
        exp.objective(t).expect("parameter count already checked")
    })
}

/// Rounds `θ` to a cut:
/// 1. each angle in turn goes to the best of `0, π/2, π/4, 3π/4` (earlier
///    candidates win ties);
/// 2. angles left at `π/4` or `3π/4` go to the better of `0, π/2`;
/// 3. the `π/2` elements are XORed into a cut;
/// 4. a greedy flip ascent finishes from there.
pub fn round_to_cut_with(
    g: &Graph,
    ansatz: &SimpleAnsatz,
    theta: &[f64],
    mut objective: impl FnMut(&[f64]) -> f64,
) -> Result<RoundedCut> {
    check_same_n(g, ansatz)?;
    if theta.len() != ansatz.len() {
        return Err(Error::ParamCount {
            expected: ansatz.len(),
            got: theta.len(),
        });
    }
    let continuous_value = 0.5 * (g.total_weight() - objective(theta));
    let mut t = theta.to_vec();
    let mut snap = |t: &mut Vec<f64>, k: usize, candidates: &[f64]| {
        let mut best = (f64::INFINITY, candidates[0]);
        for &c in candidates {
            t[k] = c;
            let v = objective(t);
            if v < best.0 {
                best = (v, c);
            }
        }
        t[k] = best.1;
    };
    for k in 0..t.len() {
        snap(&mut t, k, &[0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4]);
    }
    for k in 0..t.len() {
        if t[k] == FRAC_PI_4 || t[k] == 3.0 * FRAC_PI_4 {
            snap(&mut t, k, &[0.0, FRAC_PI_2]);
        }
    }
    let mut start = VertexSubset::EMPTY;
    for (&a, &h) in t.iter().zip(ansatz.elements()) {
        if a == FRAC_PI_2 {
            start ^= h;
        }
    }
    let (cut, _) = flip_algorithm(g, ansatz, start, FlipPolicy::Greedy, 0)?;
    Ok(RoundedCut {
        cut,
        cut_value: cut_value(g, cut),
        continuous_value,
        snapped: t,
    })
}
