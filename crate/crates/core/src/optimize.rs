//! Dense BFGS with a strong-Wolfe line search.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsConfig {
    /// Stop once `‖∇J‖∞` drops to this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search_steps: usize,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            grad_tol: 1e-8,
            max_iters: 2000,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 50,
        }
    }
}

impl BfgsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && 0.0 < self.wolfe_c1
            && self.wolfe_c1 < self.wolfe_c2
            && self.wolfe_c2 < 1.0
            && self.max_line_search_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid optimizer settings {self:?} (need grad_tol > 0, 0 < c1 < c2 < 1, line search steps > 0)"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
    LineSearchFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max-iters",
            Termination::LineSearchFailure => "line-search-failure",
        })
    }
}

impl std::str::FromStr for Termination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Termination::Converged),
            "max-iters" => Ok(Termination::MaxIters),
            "line-search-failure" => Ok(Termination::LineSearchFailure),
            other => Err(Error::InvalidArgument(format!(
                "unknown termination {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    /// Final parameters, unwrapped.
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// `‖∇J‖∞` at the final iterate.
    pub grad_norm: f64,
    pub termination: Termination,
    pub evaluations: usize,
}

/// I.i.d. uniform angles in `[0, 2π)`.
pub fn random_init(m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "parameter count must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| rng.random_range(0.0..TAU)).collect())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `t` reduced into `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

struct Point {
    alpha: f64,
    f: f64,
    d: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

struct Evaluator<'a, F> {
    f: &'a mut F,
    evaluations: usize,
    iteration: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Evaluator<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (f, g) = (self.f)(x);
        if !f.is_finite() || g.len() != x.len() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: self.iteration,
            });
        }
        Ok((f, g))
    }

    fn probe(&mut self, x0: &[f64], p: &[f64], alpha: f64) -> Result<Point> {
        let x: Vec<f64> = x0.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let (f, g) = self.eval(&x)?;
        Ok(Point {
            alpha,
            f,
            d: dot(&g, p),
            x,
            g,
        })
    }
}

/// Minimizer of the cubic through two points with slopes, or `None`.
fn cubic_min(lo: &Point, hi: &Point) -> Option<f64> {
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
    let disc = d1 * d1 - lo.d * hi.d;
    if disc < 0.0 {
        return None;
    }
    let d2 = (hi.alpha - lo.alpha).signum() * disc.sqrt();
    let a = hi.alpha - (hi.alpha - lo.alpha) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
    a.is_finite().then_some(a)
}

/// One extra trial at the cubic interpolant of an accepted point, kept if
/// it also satisfies the Wolfe conditions and lowers `f`. Makes steps exact
/// on quadratics.
fn refine<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    ev: &mut Evaluator<'_, F>,
    x0: &[f64],
    p: &[f64],
    prev: &Point,
    cur: Point,
    can_probe: bool,
    armijo: &impl Fn(&Point) -> bool,
    curvature: &impl Fn(&Point) -> bool,
) -> Result<Option<Point>> {
    let Some(a) = cubic_min(prev, &cur) else {
        return Ok(Some(cur));
    };
    if !can_probe || a <= 0.0 || (a - cur.alpha).abs() <= 1e-3 * cur.alpha {
        return Ok(Some(cur));
    }
    let alt = ev.probe(x0, p, a)?;
    if alt.f < cur.f && armijo(&alt) && curvature(&alt) {
        Ok(Some(alt))
    } else {
        Ok(Some(cur))
    }
}

/// Strong-Wolfe line search by bracketing and zoom. Returns the accepted
/// point, or `None` when the evaluation budget runs out or the bracket
/// collapses.
fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    ev: &mut Evaluator<'_, F>,
    x0: &[f64],
    f0: f64,
    d0: f64,
    p: &[f64],
    cfg: &BfgsConfig,
) -> Result<Option<Point>> {
    let (c1, c2) = (cfg.wolfe_c1, cfg.wolfe_c2);
    let budget = cfg.max_line_search_steps;
    let mut used = 0;
    let armijo = |pt: &Point| pt.f <= f0 + c1 * pt.alpha * d0;
    let curvature = |pt: &Point| pt.d.abs() <= -c2 * d0;

    let mut prev = Point {
        alpha: 0.0,
        f: f0,
        d: d0,
        x: Vec::new(),
        g: Vec::new(),
    };
    let mut alpha = 1.0;
    let (mut lo, mut hi);
    loop {
        if used == budget {
            return Ok(None);
        }
        used += 1;
        let cur = ev.probe(x0, p, alpha)?;
        if !armijo(&cur) || (used > 1 && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return refine(ev, x0, p, &prev, cur, used < budget, &armijo, &curvature);
        }
        if cur.d >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        alpha *= 2.0;
        prev = cur;
    }

    loop {
        if used == budget {
            return Ok(None);
        }
        let width = (hi.alpha - lo.alpha).abs();
        if width <= f64::EPSILON * lo.alpha.abs().max(hi.alpha.abs()) {
            return Ok(None);
        }
        let (a_min, a_max) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let guard = 0.1 * width;
        let a = match cubic_min(&lo, &hi) {
            Some(a) if a > a_min + guard && a < a_max - guard => a,
            _ => 0.5 * (lo.alpha + hi.alpha),
        };
        used += 1;
        let cur = ev.probe(x0, p, a)?;
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Minimizes `f`, which returns the objective and its gradient.
pub fn minimize<F>(f: F, theta0: &[f64], cfg: &BfgsConfig) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_observed(f, theta0, cfg, |_| {})
}

fn minimize_observed<F, O>(
    mut f: F,
    theta0: &[f64],
    cfg: &BfgsConfig,
    mut on_step: O,
) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    O: FnMut(f64),
{
    cfg.validate()?;
    if theta0.is_empty() {
        return Err(Error::InvalidArgument("empty parameter vector".into()));
    }
    let m = theta0.len();
    let mut ev = Evaluator {
        f: &mut f,
        evaluations: 0,
        iteration: 0,
    };
    let mut x = theta0.to_vec();
    let (mut fx, mut g) = ev.eval(&x)?;
    let mut h = identity(m);
    let mut fresh = true;
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&g) <= cfg.grad_tol {
            break Termination::Converged;
        }
        if iterations == cfg.max_iters {
            break Termination::MaxIters;
        }
        ev.iteration = iterations;
        let mut p = mat_vec(&h, &g, m);
        p.iter_mut().for_each(|v| *v = -*v);
        let mut d0 = dot(&g, &p);
        if !(d0 < 0.0) {
            h = identity(m);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            d0 = dot(&g, &p);
        }
        let Some(pt) = line_search(&mut ev, &x, fx, d0, &p, cfg)? else {
            break Termination::LineSearchFailure;
        };
        let s: Vec<f64> = pt.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        let yy = dot(&y, &y);
        if ys > 1e-12 * yy.sqrt() * dot(&s, &s).sqrt() {
            if fresh {
                let scale = ys / yy;
                h.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, ys, m);
        }
        x = pt.x;
        fx = pt.f;
        on_step(fx);
        g = pt.g;
        iterations += 1;
    };

    Ok(OptResult {
        grad_norm: inf_norm(&g),
        theta: x,
        value: fx,
        iterations,
        termination,
        evaluations: ev.evaluations,
    })
}

fn identity(m: usize) -> Vec<f64> {
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        h[i * m + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], m: usize) -> Vec<f64> {
    h.chunks_exact(m).map(|row| dot(row, v)).collect()
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ` with `ρ = 1/yᵀs`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], ys: f64, m: usize) {
    let rho = 1.0 / ys;
    let hy = mat_vec(h, y, m);
    let yhy = dot(y, &hy);
    let a = rho + rho * rho * yhy;
    for i in 0..m {
        let row = &mut h[i * m..(i + 1) * m];
        for j in 0..m {
            row[j] += a * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
