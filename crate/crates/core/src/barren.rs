//! Variance of a single gradient component over uniformly random angles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::analytic::EdgeExpansion;
use crate::ansatz::SimpleAnsatz;
use crate::error::{Error, Result};
use crate::gf2::{cut_set_elements, span_rank};
use crate::graph::Graph;
use crate::seeds::derive_seed;
use crate::statevector::{reverse_gradient, Circuit, IsingTable};

const CHUNK: usize = 1024;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeVarianceTerm {
    pub a: usize,
    pub b: usize,
    pub w_squared: f64,
    /// `|K| = 2^nullity`.
    pub kernel_size: f64,
    pub c_size: usize,
}

impl EdgeVarianceTerm {
    pub fn contribution(&self) -> f64 {
        4.0 * self.w_squared * self.kernel_size / 2f64.powi(self.c_size as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub variance: f64,
    /// Standard error of `variance`, `sqrt((m4 − s⁴)/N)`.
    pub variance_stderr: f64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub k: usize,
    pub analytic: Option<f64>,
    pub per_edge_terms: Vec<EdgeVarianceTerm>,
    pub monte_carlo: Option<MonteCarloEstimate>,
    /// Set when both values exist: whether they differ by more than five
    /// standard errors.
    pub discrepancy: Option<bool>,
}

impl VarianceReport {
    /// Sum of per-edge contributions.
    pub fn recompute_analytic(&self) -> f64 {
        self.per_edge_terms.iter().map(|t| t.contribution()).sum()
    }

    fn update_discrepancy(&mut self) {
        self.discrepancy = match (&self.analytic, &self.monte_carlo) {
            (Some(a), Some(mc)) => Some((a - mc.variance).abs() > 5.0 * mc.variance_stderr),
            _ => None,
        };
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k >= m {
        return Err(Error::InvalidArgument(format!(
            "element index {k} out of range 0..{m}"
        )));
    }
    Ok(())
}

/// `4 Σ_{edges cut by H_k} w² |K| / 2^{|C|}` with `|K|` from the GF(2) rank.
pub fn variance_analytic(g: &Graph, ansatz: &SimpleAnsatz, k: usize) -> Result<VarianceReport> {
    check_k(k, ansatz.len())?;
    let h = ansatz.elements()[k];
    let mut per_edge_terms = Vec::new();
    for e in g.edges() {
        if !h.cuts_edge(e.a, e.b) {
            continue;
        }
        let members: Vec<_> = cut_set_elements(ansatz.elements(), e.a, e.b)
            .into_iter()
            .map(|j| ansatz.elements()[j])
            .collect();
        let nullity = members.len() - span_rank(&members);
        per_edge_terms.push(EdgeVarianceTerm {
            a: e.a,
            b: e.b,
            w_squared: e.w * e.w,
            kernel_size: 2f64.powi(nullity as i32),
            c_size: members.len(),
        });
    }
    let mut report = VarianceReport {
        k,
        analytic: None,
        per_edge_terms,
        monte_carlo: None,
        discrepancy: None,
    };
    report.analytic = Some(report.recompute_analytic());
    Ok(report)
}

/// Draws `samples` values of `sample(rng)` in fixed-size chunks, each with
/// its own stream derived from `(seed, chunk)`.
fn estimate<F>(samples: usize, seed: u64, sample: F) -> Result<MonteCarloEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK);
    let values: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len)
                .map(|_| sample(&mut rng))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = values.iter().flatten().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in values.iter().flatten() {
        let d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    let m4 = m4 / n;
    let pop_var = m2 / n;
    Ok(MonteCarloEstimate {
        variance,
        variance_stderr: ((m4 - pop_var * pop_var).max(0.0) / n).sqrt(),
        mean,
        mean_stderr: (variance / n).sqrt(),
        samples,
    })
}

fn uniform_angles(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Sample variance and mean of `∂_k J` over i.i.d. uniform `[0, 2π)` angles.
pub fn variance_monte_carlo(
    exp: &EdgeExpansion,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let m = exp.num_params();
    check_k(k, m)?;
    let mc = estimate(samples, seed, |rng| {
        let theta = uniform_angles(rng, m);
        let (s, t) = exp.s_t_terms(&theta, k)?;
        let (sin, cos) = (2.0 * theta[k]).sin_cos();
        Ok(2.0 * (-sin * s + cos * t))
    })?;
    Ok(VarianceReport {
        k,
        analytic: None,
        per_edge_terms: Vec::new(),
        monte_carlo: Some(mc),
        discrepancy: None,
    })
}

/// Analytic formula and Monte Carlo estimate together, with the
/// discrepancy flag.
pub fn variance_report(
    exp: &EdgeExpansion,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let mut report = variance_analytic(exp.graph(), exp.ansatz(), k)?;
    report.monte_carlo = variance_monte_carlo(exp, k, samples, seed)?.monte_carlo;
    report.update_discrepancy();
    Ok(report)
}

/// Empirical variance of `∂_k J` for an arbitrary circuit, from adjoint
/// gradients. There is no closed form to compare against.
pub fn variance_monte_carlo_circuit(
    circ: &Circuit,
    table: &IsingTable,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let m = circ.num_params();
    check_k(k, m)?;
    estimate(samples, seed, |rng| {
        let theta = uniform_angles(rng, m);
        Ok(reverse_gradient(circ, &theta, table)?.1[k])
    })
}
