//! Seeded batches of random complete graphs optimized under the X, XZ and
//! QAOA families, with CSV output and per-group aggregation.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{build_expansion_with_limit, EdgeExpansion};
use crate::ansatz::SimpleAnsatz;
use crate::error::{Error, Result};
use crate::gf2::DEFAULT_ENUMERATION_LIMIT;
use crate::graph::{max_cut_exact, random_complete_graph, Graph, MaxCut};
use crate::landscape::round_to_cut_with;
use crate::optimize::{minimize, random_init, wrap_angle, BfgsConfig, Termination};
use crate::seeds::{derive_seed, mix64};
use crate::statevector::{
    reverse_gradient, run_circuit, sample_cuts, Circuit, InitState, IsingTable, Layer,
};

pub const CSV_HEADER: [&str; 12] = [
    "experiment",
    "n",
    "depth",
    "m_params",
    "realization",
    "seed",
    "alpha_continuous",
    "alpha_rounded",
    "iterations",
    "termination",
    "grad_norm",
    "runtime_ms",
];

/// Largest `n` accepted without `allow_large`.
pub const DESK_SCALE_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(alias = "kbody")]
    KbodySweep,
    #[serde(alias = "xz")]
    XzSweep,
    #[serde(alias = "qaoa")]
    QaoaCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XzVariant {
    /// Z product on the same subset after each X element.
    A,
    /// Global `Σ Z_i` after each X element.
    B,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbodySettings {
    /// Defaults to `1..=n-1`.
    pub depths: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XzSettings {
    /// Defaults to `1..=n-1`.
    pub depths: Option<Vec<usize>>,
    pub variants: Vec<XzVariant>,
    /// Also run the plain X ansatz at each depth.
    pub include_x: bool,
}

impl Default for XzSettings {
    fn default() -> Self {
        XzSettings {
            depths: None,
            variants: vec![XzVariant::A, XzVariant::B],
            include_x: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaVariant {
    pub init: InitState,
    /// Independent per-qubit X angles in place of the shared mixer.
    pub xlocal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaoaSettings {
    pub variants: Vec<QaoaVariant>,
    /// Layer counts `p` for variants with the shared mixer (`M = 2p`).
    pub standard_layers: Vec<usize>,
    /// Layer counts `p` for xlocal variants (`M = n + p(n+1)`).
    pub xlocal_layers: Vec<usize>,
    /// X ansatz depths run as a baseline.
    pub x_depths: Vec<usize>,
    /// XZ (variant a) depths run as a baseline.
    pub xz_depths: Vec<usize>,
}

impl Default for QaoaSettings {
    fn default() -> Self {
        QaoaSettings {
            variants: vec![
                QaoaVariant {
                    init: InitState::Plus,
                    xlocal: false,
                },
                QaoaVariant {
                    init: InitState::Plus,
                    xlocal: true,
                },
                QaoaVariant {
                    init: InitState::Zeros,
                    xlocal: true,
                },
            ],
            standard_layers: vec![1, 2, 4, 8, 12, 16, 20, 24, 28],
            xlocal_layers: (0..=6).collect(),
            x_depths: vec![1, 2, 3],
            xz_depths: vec![1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub realizations: usize,
    pub master_seed: u64,
    pub w_min: f64,
    pub w_max: f64,
    /// Shots drawn to read a cut off a noncommuting circuit.
    pub shots: usize,
    /// Record wall time; off keeps output byte-reproducible.
    pub timing: bool,
    /// Permit `n` above the desk-scale default.
    pub allow_large: bool,
    pub kbody: KbodySettings,
    pub xz: XzSettings,
    pub qaoa: QaoaSettings,
    pub optimizer: BfgsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::KbodySweep,
            n: 8,
            realizations: 100,
            master_seed: 0,
            w_min: 0.0,
            w_max: 5.0,
            shots: 2048,
            timing: false,
            allow_large: false,
            kbody: KbodySettings::default(),
            xz: XzSettings::default(),
            qaoa: QaoaSettings::default(),
            optimizer: BfgsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// JSON for `.json` files, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn default_depths(&self) -> Vec<usize> {
        (1..self.n).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return bad(format!("n = {} (need at least 2)", self.n));
        }
        if self.n > DESK_SCALE_N && !self.allow_large {
            return bad(format!(
                "n = {} is above {DESK_SCALE_N}; set allow_large to run it",
                self.n
            ));
        }
        if self.realizations == 0 {
            return bad("realizations must be >= 1".into());
        }
        if !(self.w_min >= 0.0 && self.w_max >= self.w_min && self.w_max > 0.0) {
            return bad(format!("weight range [{}, {}]", self.w_min, self.w_max));
        }
        if self.shots == 0 {
            return bad("shots must be >= 1".into());
        }
        let depth_ok = |d: &usize| (1..self.n).contains(d);
        let lists = [
            (
                "kbody.depths",
                self.kbody.depths.clone().unwrap_or_default(),
            ),
            ("xz.depths", self.xz.depths.clone().unwrap_or_default()),
            ("qaoa.x_depths", self.qaoa.x_depths.clone()),
            ("qaoa.xz_depths", self.qaoa.xz_depths.clone()),
        ];
        for (name, list) in lists {
            if let Some(d) = list.iter().find(|d| !depth_ok(d)) {
                return bad(format!("{name} contains {d}, outside [1, {}]", self.n - 1));
            }
        }
        if self.qaoa.standard_layers.contains(&0) {
            return bad("qaoa.standard_layers must be >= 1".into());
        }
        self.optimizer
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Which circuit a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// All X products of size at most `depth`.
    X {
        depth: usize,
    },
    Xz {
        depth: usize,
        variant: XzVariant,
    },
    Qaoa {
        layers: usize,
        variant: QaoaVariant,
    },
}

impl Family {
    /// Name used for the seed stream and, except in the k-body sweep, the
    /// CSV label.
    pub fn name(&self) -> String {
        match self {
            Family::X { .. } => "x".into(),
            Family::Xz { variant, .. } => match variant {
                XzVariant::A => "xz-a".into(),
                XzVariant::B => "xz-b".into(),
            },
            Family::Qaoa { variant, .. } => {
                let mut s = String::from("qaoa");
                if variant.xlocal {
                    s.push_str("-xlocal");
                }
                if variant.init == InitState::Zeros {
                    s.push_str("-zeros");
                }
                s
            }
        }
    }

    pub fn depth(&self) -> usize {
        match *self {
            Family::X { depth } | Family::Xz { depth, .. } => depth,
            Family::Qaoa { layers, .. } => layers,
        }
    }

    pub fn commuting(&self) -> bool {
        matches!(self, Family::X { .. })
    }

    /// The circuit on `n` qubits.
    pub fn circuit(&self, n: usize) -> Result<Circuit> {
        match *self {
            Family::X { depth } => Ok(Circuit::from_simple_ansatz(&SimpleAnsatz::k_body(
                n, depth,
            )?)),
            Family::Xz { depth, variant } => {
                let mut layers = Vec::new();
                for &s in SimpleAnsatz::k_body(n, depth)?.elements() {
                    layers.push(Layer::XRotation(s));
                    layers.push(match variant {
                        XzVariant::A => Layer::ZRotation(s),
                        XzVariant::B => Layer::ZField,
                    });
                }
                Circuit::new(n, layers, InitState::Zeros)
            }
            Family::Qaoa { layers: p, variant } => {
                let mut layers = Vec::new();
                if variant.xlocal {
                    layers.push(Layer::XLocal);
                    for _ in 0..p {
                        layers.extend([Layer::IsingEvolution, Layer::XLocal]);
                    }
                } else {
                    for _ in 0..p {
                        layers.extend([Layer::IsingEvolution, Layer::XMixer]);
                    }
                }
                Circuit::new(n, layers, variant.init)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub experiment: String,
    pub family: Family,
}

/// Runs of one experiment in output order, before realizations are
/// expanded.
pub fn plan(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let spec = |family: Family| RunSpec {
        experiment: family.name(),
        family,
    };
    let mut out = Vec::new();
    match cfg.kind {
        ExperimentKind::KbodySweep => {
            for d in cfg
                .kbody
                .depths
                .clone()
                .unwrap_or_else(|| cfg.default_depths())
            {
                out.push(RunSpec {
                    experiment: "kbody".into(),
                    family: Family::X { depth: d },
                });
            }
        }
        ExperimentKind::XzSweep => {
            let depths = cfg
                .xz
                .depths
                .clone()
                .unwrap_or_else(|| cfg.default_depths());
            if cfg.xz.include_x {
                out.extend(depths.iter().map(|&depth| spec(Family::X { depth })));
            }
            for &variant in &cfg.xz.variants {
                out.extend(
                    depths
                        .iter()
                        .map(|&depth| spec(Family::Xz { depth, variant })),
                );
            }
        }
        ExperimentKind::QaoaCompare => {
            for &variant in &cfg.qaoa.variants {
                let layers = if variant.xlocal {
                    &cfg.qaoa.xlocal_layers
                } else {
                    &cfg.qaoa.standard_layers
                };
                out.extend(
                    layers
                        .iter()
                        .map(|&layers| spec(Family::Qaoa { layers, variant })),
                );
            }
            out.extend(
                cfg.qaoa
                    .x_depths
                    .iter()
                    .map(|&depth| spec(Family::X { depth })),
            );
            out.extend(cfg.qaoa.xz_depths.iter().map(|&depth| {
                spec(Family::Xz {
                    depth,
                    variant: XzVariant::A,
                })
            }));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub n: usize,
    /// k-body depth, or layer count for QAOA.
    pub depth: usize,
    pub m_params: usize,
    pub realization: usize,
    /// Graph seed of the realization.
    pub seed: u64,
    pub alpha_continuous: f64,
    pub alpha_rounded: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub grad_norm: f64,
    pub runtime_ms: u64,
}

/// A finished run with the optimum that produced its record.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub graph: Graph,
    pub theta: Vec<f64>,
    pub value: f64,
}

/// Graph seed of realization `r`.
pub fn realization_seed(master: u64, realization: usize) -> u64 {
    derive_seed(master, realization as u64)
}

/// Initial-angle seed: the graph seed XOR a hash of the family name, then
/// stream `depth`.
pub fn init_seed(graph_seed: u64, family: &Family) -> u64 {
    let tag = family
        .name()
        .bytes()
        .fold(0u64, |h, b| mix64(h ^ u64::from(b)));
    derive_seed(graph_seed ^ tag, family.depth() as u64)
}

enum Objective {
    Analytic(EdgeExpansion),
    Circuit(Circuit, IsingTable),
}

impl Objective {
    fn new(family: &Family, g: &Graph) -> Result<Self> {
        let n = g.n();
        if let Family::X { depth } = *family {
            let ansatz = SimpleAnsatz::k_body(n, depth)?;
            if let Ok(exp) = build_expansion_with_limit(g, &ansatz, DEFAULT_ENUMERATION_LIMIT) {
                if exp.work() <= (ansatz.len() as u64) << n {
                    return Ok(Objective::Analytic(exp));
                }
            }
        }
        Ok(Objective::Circuit(family.circuit(n)?, IsingTable::new(g)?))
    }

    fn num_params(&self) -> usize {
        match self {
            Objective::Analytic(e) => e.num_params(),
            Objective::Circuit(c, _) => c.num_params(),
        }
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Objective::Analytic(e) => e.value_and_gradient(theta),
            Objective::Circuit(c, t) => reverse_gradient(c, theta, t),
        }
        .expect("parameter count fixed by construction")
    }

    fn wrap(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Objective::Analytic(_) => theta.iter().map(|&t| wrap_angle(t)).collect(),
            Objective::Circuit(c, _) => c.wrap_params(theta),
        }
    }

    fn value(&self, theta: &[f64]) -> f64 {
        match self {
            Objective::Analytic(e) => e.objective(theta),
            Objective::Circuit(c, t) => run_circuit(c, theta, t).map(|(_, j)| j),
        }
        .expect("parameter count fixed by construction")
    }
}

fn ratio(value: f64, best: f64) -> f64 {
    if best > 0.0 {
        value / best
    } else {
        1.0
    }
}

/// One optimization: random start, BFGS, then both approximation ratios.
pub fn run_single(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    realization: usize,
    graph: &Graph,
    max_cut: &MaxCut,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let graph_seed = realization_seed(cfg.master_seed, realization);
    let seed = init_seed(graph_seed, &spec.family);
    let objective = Objective::new(&spec.family, graph)?;
    let m = objective.num_params();
    let theta0 = random_init(m, seed)?;
    let opt = minimize(|t| objective.value_and_gradient(t), &theta0, &cfg.optimizer)?;
    let theta = objective.wrap(&opt.theta);
    let w = graph.total_weight();
    let alpha_continuous = ratio(0.5 * (w - opt.value), max_cut.value);
    let rounded_value = if spec.family.commuting() {
        let ansatz = SimpleAnsatz::k_body(graph.n(), spec.family.depth())?;
        round_to_cut_with(graph, &ansatz, &theta, |t| objective.value(t))?.cut_value
    } else {
        let Objective::Circuit(circ, table) = &objective else {
            unreachable!("noncommuting families use the statevector")
        };
        let (state, _) = run_circuit(circ, &theta, table)?;
        sample_cuts(&state, graph, cfg.shots, derive_seed(seed, 1))?.best_value
    };
    let runtime_ms = if cfg.timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(RunOutcome {
        record: RunRecord {
            experiment: spec.experiment.clone(),
            n: graph.n(),
            depth: spec.family.depth(),
            m_params: m,
            realization,
            seed: graph_seed,
            alpha_continuous,
            alpha_rounded: ratio(rounded_value, max_cut.value),
            iterations: opt.iterations,
            termination: opt.termination,
            grad_norm: opt.grad_norm,
            runtime_ms,
        },
        graph: graph.clone(),
        theta,
        value: opt.value,
    })
}

/// Random graph and exact maximum cut of one realization.
pub fn realization_graph(cfg: &ExperimentConfig, realization: usize) -> Result<(Graph, MaxCut)> {
    let g = random_complete_graph(
        cfg.n,
        cfg.w_min,
        cfg.w_max,
        realization_seed(cfg.master_seed, realization),
    )?;
    let best = max_cut_exact(&g)?;
    Ok((g, best))
}

/// Runs every planned spec on every realization. Records come back in plan
/// order, then realization order. `progress` sees (finished, total).
pub fn run_specs(
    cfg: &ExperimentConfig,
    specs: &[RunSpec],
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<RunOutcome>> {
    cfg.validate()?;
    let graphs: Vec<(Graph, MaxCut)> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| realization_graph(cfg, r))
        .collect::<Result<_>>()?;
    let total = specs.len() * cfg.realizations;
    let done = AtomicUsize::new(0);
    (0..total)
        .into_par_iter()
        .map(|job| {
            let (s, r) = (job / cfg.realizations, job % cfg.realizations);
            let spec = &specs[s];
            let out =
                run_single(cfg, spec, r, &graphs[r].0, &graphs[r].1).map_err(|e| Error::Run {
                    experiment: spec.experiment.clone(),
                    depth: spec.family.depth(),
                    realization: r,
                    source: Box::new(e),
                });
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            out
        })
        .collect()
}

fn run_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Vec<RunRecord>> {
    let cfg = ExperimentConfig {
        kind,
        ..cfg.clone()
    };
    Ok(run_specs(&cfg, &plan(&cfg), &|_, _| {})?
        .into_iter()
        .map(|o| o.record)
        .collect())
}

pub fn run_kbody_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_kind(cfg, ExperimentKind::KbodySweep)
}

pub fn run_xz_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_kind(cfg, ExperimentKind::XzSweep)
}

pub fn run_qaoa_compare(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_kind(cfg, ExperimentKind::QaoaCompare)
}

/// Dispatches on `cfg.kind`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<RunRecord>> {
    Ok(run_specs(cfg, &plan(cfg), progress)?
        .into_iter()
        .map(|o| o.record)
        .collect())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the header and one row per record, floats at 17 significant
/// digits.
pub fn emit_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            r.depth.to_string(),
            r.m_params.to_string(),
            r.realization.to_string(),
            r.seed.to_string(),
            fmt_f64(r.alpha_continuous),
            fmt_f64(r.alpha_rounded),
            r.iterations.to_string(),
            r.termination.to_string(),
            fmt_f64(r.grad_norm),
            r.runtime_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| row.get(j).unwrap_or_default();
        fn num<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {name} {s:?}"),
            })
        }
        out.push(RunRecord {
            experiment: field(0).to_string(),
            n: num(field(1), line, "n")?,
            depth: num(field(2), line, "depth")?,
            m_params: num(field(3), line, "m_params")?,
            realization: num(field(4), line, "realization")?,
            seed: num(field(5), line, "seed")?,
            alpha_continuous: num(field(6), line, "alpha_continuous")?,
            alpha_rounded: num(field(7), line, "alpha_rounded")?,
            iterations: num(field(8), line, "iterations")?,
            termination: field(9).parse().map_err(|e: Error| Error::Parse {
                line,
                msg: e.to_string(),
            })?,
            grad_norm: num(field(10), line, "grad_norm")?,
            runtime_ms: num(field(11), line, "runtime_ms")?,
        });
    }
    Ok(out)
}

pub fn write_csv_file(records: &[RunRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    emit_csv(records, std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub experiment: String,
    pub n: usize,
    pub depth: usize,
    pub m_params: usize,
    pub count: usize,
    pub mean_alpha_continuous: f64,
    /// Population standard deviation.
    pub std_alpha_continuous: f64,
    pub mean_alpha_rounded: f64,
    pub std_alpha_rounded: f64,
    pub converged: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    // shifted by the first value so identical inputs give exactly zero
    let mean = xs[0] + xs.iter().map(|x| x - xs[0]).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups by (experiment, n, depth) in first-appearance order.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::Empty("no records to aggregate"));
    }
    let mut order: Vec<(String, usize, usize)> = Vec::new();
    let mut groups: BTreeMap<(String, usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.experiment.clone(), r.n, r.depth);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let cont: Vec<f64> = rs.iter().map(|r| r.alpha_continuous).collect();
            let rounded: Vec<f64> = rs.iter().map(|r| r.alpha_rounded).collect();
            let (mc, sc) = mean_std(&cont);
            let (mr, sr) = mean_std(&rounded);
            GroupSummary {
                m_params: rs[0].m_params,
                experiment: key.0,
                n: key.1,
                depth: key.2,
                count: rs.len(),
                mean_alpha_continuous: mc,
                std_alpha_continuous: sc,
                mean_alpha_rounded: mr,
                std_alpha_rounded: sr,
                converged: rs
                    .iter()
                    .filter(|r| r.termination == Termination::Converged)
                    .count(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(alpha: f64) -> RunRecord {
        RunRecord {
            experiment: "kbody".into(),
            n: 4,
            depth: 1,
            m_params: 4,
            realization: 0,
            seed: 1,
            alpha_continuous: alpha,
            alpha_rounded: alpha,
            iterations: 3,
            termination: Termination::Converged,
            grad_norm: 1e-9,
            runtime_ms: 0,
        }
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[record(0.9)]).unwrap();
        assert_eq!(
            (
                one[0].mean_alpha_continuous,
                one[0].std_alpha_continuous,
                one[0].count
            ),
            (0.9, 0.0, 1)
        );
        let same = aggregate(&[record(0.7), record(0.7), record(0.7)]).unwrap();
        assert_eq!(same[0].std_alpha_continuous, 0.0);
        let two = aggregate(&[record(0.9), record(1.0)]).unwrap();
        assert!((two[0].mean_alpha_continuous - 0.95).abs() < 1e-15);
        assert!((two[0].std_alpha_continuous - 0.05).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        emit_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn csv_round_trip() {
        let mut r = record(0.123_456_789_012_345_67);
        r.grad_norm = 3.3e-12;
        r.seed = u64::MAX;
        r.termination = Termination::LineSearchFailure;
        let mut buf = Vec::new();
        emit_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        assert_eq!(parse_csv(&buf[..]).unwrap(), vec![r]);
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn family_parameter_counts() {
        let n = 8;
        assert_eq!(Family::X { depth: 2 }.circuit(n).unwrap().num_params(), 36);
        let xz = Family::Xz {
            depth: 4,
            variant: XzVariant::A,
        };
        assert_eq!(xz.circuit(n).unwrap().num_params(), 2 * 162);
        let modified = |layers| Family::Qaoa {
            layers,
            variant: QaoaVariant {
                init: InitState::Zeros,
                xlocal: true,
            },
        };
        let ms: Vec<usize> = (0..=6)
            .map(|p| modified(p).circuit(n).unwrap().num_params())
            .collect();
        assert_eq!(ms, [8, 17, 26, 35, 44, 53, 62]);
        let standard = Family::Qaoa {
            layers: 3,
            variant: QaoaVariant {
                init: InitState::Plus,
                xlocal: false,
            },
        };
        assert_eq!(standard.circuit(n).unwrap().num_params(), 6);
        assert_eq!(standard.name(), "qaoa");
        assert_eq!(modified(1).name(), "qaoa-xlocal-zeros");
    }

    #[test]
    fn config_formats_and_validation() {
        let toml_text = r#"
kind = "kbody"
n = 4
realizations = 3

[kbody]
depths = [1, 2]

[optimizer]
grad_tol = 1e-7
"#;
        let cfg = ExperimentConfig::from_toml_str(toml_text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::KbodySweep);
        assert_eq!(cfg.kbody.depths, Some(vec![1, 2]));
        assert_eq!(cfg.optimizer.max_iters, 2000);
        cfg.validate().unwrap();
        assert_eq!(
            ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );

        let json = r#"{"kind": "qaoa-compare", "n": 6, "qaoa": {"xlocal_layers": [0, 1]}}"#;
        let cfg = ExperimentConfig::from_json_str(json).unwrap();
        assert_eq!(cfg.qaoa.xlocal_layers, vec![0, 1]);

        assert!(ExperimentConfig::from_toml_str("kind = \"kbody\"\nbogus = 1\n").is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::KbodySweep);
        cfg.kbody.depths = Some(vec![8]);
        assert!(cfg.validate().is_err());
        cfg.kbody.depths = None;
        cfg.n = 10;
        assert!(cfg.validate().is_err());
        cfg.allow_large = true;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn small_sweep_is_deterministic_and_bounded() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::KbodySweep);
        cfg.n = 4;
        cfg.realizations = 3;
        let a = run_kbody_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 9);
        assert_eq!(a, run_kbody_sweep(&cfg).unwrap());
        for r in &a {
            assert!(r.alpha_continuous <= 1.0 + 1e-9);
            assert!((0.0..=1.0).contains(&r.alpha_rounded));
        }
        let depths: Vec<usize> = a.iter().map(|r| r.depth).collect();
        assert_eq!(depths, [1, 1, 1, 2, 2, 2, 3, 3, 3]);
    }
}
