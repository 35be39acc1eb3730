//! `mcl`: command-line front end for the Max-Cut landscape library.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use maxcut_landscape::analytic::{build_expansion, EdgeExpansion};
use maxcut_landscape::ansatz::{parse_ansatz, SimpleAnsatz};
use maxcut_landscape::barren::{variance_monte_carlo_circuit, variance_report};
use maxcut_landscape::experiment::{
    aggregate, emit_csv, run_experiment, ExperimentConfig, ExperimentKind, XzVariant,
};
use maxcut_landscape::gf2::VertexSubset;
use maxcut_landscape::graph::{
    cut_value, load_graph, max_cut_exact, random_complete_graph, Cut, Graph,
};
use maxcut_landscape::landscape::{
    classify_critical_point, eigenstate_hessian_diag, enumerate_inequality_cuts, flip_algorithm,
    is_local_min_cut, round_to_cut, round_to_cut_with, symmetric_spectrum,
    verify_trap_free_full_ansatz, FlipPolicy, DEFAULT_TOL_GRAD,
};
use maxcut_landscape::optimize::{minimize, random_init, wrap_angle, BfgsConfig};
use maxcut_landscape::statevector::{
    parse_circuit, reverse_gradient, run_circuit, sample_cuts, Circuit, IsingTable,
};
use maxcut_landscape::Error as LibError;

#[derive(Parser)]
#[command(
    name = "mcl",
    version,
    about = "Max-Cut optimization landscapes under commuting and QAOA-style ansaetze"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random complete graph with uniform weights.
    Gen(GenArgs),
    /// Exact maximum cut by enumeration.
    Exact(GraphArgs),
    /// Objective value at given angles.
    Eval(PointArgs),
    /// Objective and gradient at given angles.
    Grad(PointArgs),
    /// Hessian and its spectrum at given angles.
    Hess(HessArgs),
    /// BFGS from random or given angles.
    Optimize(OptimizeArgs),
    /// Flip local search over cuts.
    Flip(FlipArgs),
    /// Cuts satisfying the local-minimum inequalities.
    ScanCuts(ModelArgs),
    /// Check the all-subsets ansatz for traps.
    VerifyTrapfree(GraphArgs),
    /// Variance of one gradient component over uniform angles.
    Variance(VarianceArgs),
    /// Seeded batch experiments with CSV output.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    w_min: f64,
    #[arg(long, default_value_t = 5.0)]
    w_max: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Ansatz file: vertex subsets one per line, or `depth D`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["depth", "circuit"])]
    ansatz: Option<PathBuf>,
    /// k-body ansatz of this depth.
    #[arg(long, conflicts_with = "circuit")]
    depth: Option<usize>,
    /// Layered circuit file, simulated on the statevector.
    #[arg(long, value_name = "FILE")]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated angles.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    theta: Vec<f64>,
}

#[derive(Args)]
struct HessArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Also classify the point as a critical point.
    #[arg(long)]
    classify: bool,
    #[arg(long, default_value_t = DEFAULT_TOL_GRAD)]
    tol_grad: f64,
    #[arg(long)]
    tol_eig: Option<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seed of the random initial angles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start here instead of at random angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Shots drawn from the final state of a circuit.
    #[arg(long, default_value_t = 2048)]
    shots: usize,
    /// Classify the optimum (commuting ansatz only).
    #[arg(long)]
    classify: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Random,
    First,
}

impl From<PolicyArg> for FlipPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Greedy => FlipPolicy::Greedy,
            PolicyArg::Random => FlipPolicy::RandomImproving,
            PolicyArg::First => FlipPolicy::FirstImproving,
        }
    }
}

#[derive(Args)]
struct FlipArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Starting cut as comma-separated vertices; empty for the trivial cut.
    #[arg(long, default_value = "")]
    start: String,
    #[arg(long, value_enum, default_value = "greedy")]
    policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VarianceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Zero-based parameter index.
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// X ansatz over k-body depths.
    Kbody(ExperimentArgs),
    /// X against XZ ansaetze over depths.
    Xz(ExperimentArgs),
    /// QAOA variants against X and XZ baselines.
    Qaoa(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file, JSON for `.json` and TOML otherwise.
    #[arg(long, visible_alias = "config", value_name = "FILE")]
    json_config: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    /// Depths (kbody, xz) or xlocal layer counts (qaoa); repeatable or
    /// comma-separated.
    #[arg(long, value_delimiter = ',')]
    depth: Vec<usize>,
    /// XZ variants to run.
    #[arg(long, value_delimiter = ',')]
    variant: Vec<String>,
    /// Record wall time per run.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    allow_large: bool,
    /// Print per-group means to stderr.
    #[arg(long)]
    summary: bool,
    /// No progress on stderr.
    #[arg(long, short)]
    quiet: bool,
    /// Write the resolved config and exit.
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(out: &OutArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_json(out: &OutArgs, v: &Value) -> Result<()> {
    write_out(out, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn load_graph_file(path: &Path) -> Result<Graph> {
    load_graph(&read(path)?).with_context(|| format!("parsing graph {}", path.display()))
}

fn parse_cut(text: &str, n: usize) -> Result<Cut> {
    let trimmed = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut vs = Vec::new();
    for tok in trimmed.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let v: usize = tok.parse().with_context(|| format!("bad vertex {tok:?}"))?;
        if v < 1 || v > n {
            bail!("vertex {v} outside 1..={n}");
        }
        vs.push(v);
    }
    Ok(VertexSubset::from_vertices(vs))
}

enum Model {
    Analytic(EdgeExpansion),
    Circuit {
        circuit: Circuit,
        table: IsingTable,
        graph: Graph,
        /// Set for a commuting ansatz too large to expand analytically.
        ansatz: Option<SimpleAnsatz>,
    },
}

impl Model {
    fn graph(&self) -> &Graph {
        match self {
            Model::Analytic(e) => e.graph(),
            Model::Circuit { graph, .. } => graph,
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Model::Analytic(e) => e.num_params(),
            Model::Circuit { circuit, .. } => circuit.num_params(),
        }
    }

    fn value_and_gradient(&self, theta: &[f64]) -> maxcut_landscape::Result<(f64, Vec<f64>)> {
        match self {
            Model::Analytic(e) => e.value_and_gradient(theta),
            Model::Circuit { circuit, table, .. } => reverse_gradient(circuit, theta, table),
        }
    }

    fn value(&self, theta: &[f64]) -> maxcut_landscape::Result<f64> {
        match self {
            Model::Analytic(e) => e.objective(theta),
            Model::Circuit { circuit, table, .. } => {
                run_circuit(circuit, theta, table).map(|(_, j)| j)
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Model::Analytic(_) => "analytic",
            Model::Circuit { .. } => "statevector",
        }
    }
}

fn simple_ansatz(args: &ModelArgs, n: usize) -> Result<SimpleAnsatz> {
    match (&args.ansatz, args.depth) {
        (Some(path), _) => parse_ansatz(&read(path)?, n)
            .with_context(|| format!("parsing ansatz {}", path.display())),
        (None, Some(d)) => Ok(SimpleAnsatz::k_body(n, d)?),
        (None, None) => bail!("give --ansatz, --depth or --circuit"),
    }
}

fn load_model(args: &ModelArgs) -> Result<Model> {
    let graph = load_graph_file(&args.graph)?;
    if let Some(path) = &args.circuit {
        let circuit = parse_circuit(&read(path)?, graph.n())
            .with_context(|| format!("parsing circuit {}", path.display()))?;
        let table = IsingTable::new(&graph)?;
        return Ok(Model::Circuit {
            circuit,
            table,
            graph,
            ansatz: None,
        });
    }
    let ansatz = simple_ansatz(args, graph.n())?;
    match build_expansion(&graph, &ansatz) {
        Ok(exp) => Ok(Model::Analytic(exp)),
        Err(LibError::EnumerationLimit { .. }) => Ok(Model::Circuit {
            circuit: Circuit::from_simple_ansatz(&ansatz),
            table: IsingTable::new(&graph)?,
            graph,
            ansatz: Some(ansatz),
        }),
        Err(e) => Err(e.into()),
    }
}

fn commuting_only(args: &ModelArgs, what: &str) -> Result<(Graph, SimpleAnsatz)> {
    if args.circuit.is_some() {
        bail!("{what} needs a commuting ansatz; use --ansatz or --depth");
    }
    let graph = load_graph_file(&args.graph)?;
    let ansatz = simple_ansatz(args, graph.n())?;
    Ok((graph, ansatz))
}

fn cut_json(g: &Graph, c: Cut) -> Value {
    json!({ "cut": c, "value": cut_value(g, c) })
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let g = random_complete_graph(a.n, a.w_min, a.w_max, a.seed)?;
    write_out(&a.out, &g.to_text())
}

fn cmd_exact(a: &GraphArgs) -> Result<()> {
    let g = load_graph_file(&a.graph)?;
    let best = max_cut_exact(&g)?;
    write_json(
        &a.out,
        &json!({
            "n": g.n(),
            "total_weight": g.total_weight(),
            "max_cut": best.value,
            "argmax": best.argmax,
        }),
    )
}

fn cmd_eval(a: &PointArgs, with_grad: bool) -> Result<()> {
    let model = load_model(&a.model)?;
    let out = if with_grad {
        let (value, grad) = model.value_and_gradient(&a.theta)?;
        json!({ "method": model.kind(), "value": value, "gradient": grad })
    } else {
        json!({ "method": model.kind(), "value": model.value(&a.theta)? })
    };
    write_json(&a.model.out, &out)
}

/// Central differences of adjoint gradients, symmetrized.
fn fd_hessian(model: &Model, theta: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let m = theta.len();
    let mut rows = Vec::with_capacity(m);
    let mut t = theta.to_vec();
    for j in 0..m {
        t[j] = theta[j] + h;
        let (_, gp) = model.value_and_gradient(&t)?;
        t[j] = theta[j] - h;
        let (_, gm) = model.value_and_gradient(&t)?;
        t[j] = theta[j];
        rows.push(
            gp.iter()
                .zip(&gm)
                .map(|(p, q)| (p - q) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    Ok((0..m)
        .map(|i| (0..m).map(|j| 0.5 * (rows[i][j] + rows[j][i])).collect())
        .collect())
}

fn cmd_hess(a: &HessArgs) -> Result<()> {
    let p = &a.point;
    let model = load_model(&p.model)?;
    let theta = &p.theta;
    let (hessian, method) = match &model {
        Model::Analytic(e) => (e.hessian(theta)?, "analytic"),
        Model::Circuit { .. } => {
            if theta.len() != model.num_params() {
                bail!(
                    "expected {} parameters, got {}",
                    model.num_params(),
                    theta.len()
                );
            }
            (fd_hessian(&model, theta, 1e-4)?, "finite-difference")
        }
    };
    let mut out = json!({
        "method": method,
        "hessian": hessian,
        "spectrum": symmetric_spectrum(&hessian),
    });
    if a.classify {
        let Model::Analytic(e) = &model else {
            bail!("--classify needs a commuting ansatz");
        };
        out["critical_point"] =
            serde_json::to_value(classify_critical_point(e, theta, a.tol_grad, a.tol_eig)?)?;
    }
    write_json(&p.model.out, &out)
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let m = model.num_params();
    let theta0 = match &a.theta {
        Some(t) => t.clone(),
        None => random_init(m, a.seed)?,
    };
    let cfg = BfgsConfig {
        grad_tol: a.grad_tol,
        max_iters: a.max_iters,
        ..BfgsConfig::default()
    };
    cfg.validate()?;
    if theta0.len() != m {
        bail!("expected {m} parameters, got {}", theta0.len());
    }
    let opt = minimize(
        |t| {
            model
                .value_and_gradient(t)
                .expect("parameter count checked")
        },
        &theta0,
        &cfg,
    )?;
    let theta = match &model {
        Model::Analytic(_) => opt.theta.iter().map(|&t| wrap_angle(t)).collect(),
        Model::Circuit { circuit, .. } => circuit.wrap_params(&opt.theta),
    };
    let g = model.graph();
    let best = max_cut_exact(g)?.value;
    let ratio = |v: f64| if best > 0.0 { v / best } else { 1.0 };
    let continuous = 0.5 * (g.total_weight() - opt.value);
    let mut out = json!({
        "method": model.kind(),
        "m_params": m,
        "theta": theta,
        "value": opt.value,
        "iterations": opt.iterations,
        "evaluations": opt.evaluations,
        "termination": opt.termination.to_string(),
        "grad_norm": opt.grad_norm,
        "max_cut": best,
        "alpha_continuous": ratio(continuous),
    });
    match &model {
        Model::Analytic(e) => {
            let r = round_to_cut(e, &theta)?;
            out["rounded"] = cut_json(g, r.cut);
            out["alpha_rounded"] = json!(ratio(r.cut_value));
            if a.classify {
                out["critical_point"] =
                    match classify_critical_point(e, &theta, DEFAULT_TOL_GRAD, None) {
                        Ok(rep) => serde_json::to_value(rep)?,
                        Err(err) => json!({ "error": err.to_string() }),
                    };
            }
        }
        Model::Circuit {
            ansatz: Some(ansatz),
            ..
        } => {
            if a.classify {
                bail!("--classify needs an ansatz small enough to expand analytically");
            }
            let r = round_to_cut_with(g, ansatz, &theta, |t| {
                model.value(t).expect("parameter count checked")
            })?;
            out["rounded"] = cut_json(g, r.cut);
            out["alpha_rounded"] = json!(ratio(r.cut_value));
        }
        Model::Circuit { circuit, table, .. } => {
            if a.classify {
                bail!("--classify needs a commuting ansatz");
            }
            let (state, _) = run_circuit(circuit, &theta, table)?;
            let s = sample_cuts(&state, g, a.shots, a.seed)?;
            out["sampled"] = cut_json(g, s.best);
            out["alpha_rounded"] = json!(ratio(s.best_value));
        }
    }
    write_json(&a.model.out, &out)
}

fn cmd_flip(a: &FlipArgs) -> Result<()> {
    let (g, ansatz) = commuting_only(&a.model, "flip")?;
    let start = parse_cut(&a.start, g.n())?;
    let (end, trace) = flip_algorithm(&g, &ansatz, start, a.policy.into(), a.seed)?;
    write_json(
        &a.model.out,
        &json!({
            "start": cut_json(&g, start),
            "end": cut_json(&g, end),
            "max_cut": max_cut_exact(&g)?.value,
            "steps": trace.steps,
        }),
    )
}

fn cmd_scan_cuts(a: &ModelArgs) -> Result<()> {
    let (g, ansatz) = commuting_only(a, "scan-cuts")?;
    let best = max_cut_exact(&g)?;
    let cuts: Vec<Value> = enumerate_inequality_cuts(&g, &ansatz)?
        .into_iter()
        .map(|c| {
            json!({
                "cut": c,
                "value": cut_value(&g, c),
                "maximum": best.contains(c, g.n()),
                "strict": is_local_min_cut(&g, &ansatz, c),
                "hessian_diag": eigenstate_hessian_diag(&g, &ansatz, c),
            })
        })
        .collect();
    write_json(
        &a.out,
        &json!({ "m_params": ansatz.len(), "max_cut": best.value, "cuts": cuts }),
    )
}

fn cmd_verify(a: &GraphArgs) -> Result<()> {
    let g = load_graph_file(&a.graph)?;
    let r = verify_trap_free_full_ansatz(&g)?;
    write_json(
        &a.out,
        &json!({
            "trap_free": r.trap_free,
            "witness": r.witness,
            "inequality_cuts": r.inequality_cuts,
            "max_cuts": r.max_cuts,
        }),
    )
}

fn cmd_variance(a: &VarianceArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let out = match &model {
        Model::Analytic(e) => serde_json::to_value(variance_report(e, a.k, a.samples, a.seed)?)?,
        Model::Circuit { circuit, table, .. } => json!({
            "k": a.k,
            "empirical": true,
            "monte_carlo": variance_monte_carlo_circuit(circuit, table, a.k, a.samples, a.seed)?,
        }),
    };
    write_json(&a.model.out, &out)
}

fn resolve_config(kind: ExperimentKind, a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.json_config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.kind = kind;
    if let Some(r) = a.realizations {
        cfg.realizations = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if a.timing {
        cfg.timing = true;
    }
    if a.allow_large {
        cfg.allow_large = true;
    }
    if !a.depth.is_empty() {
        match kind {
            ExperimentKind::KbodySweep => cfg.kbody.depths = Some(a.depth.clone()),
            ExperimentKind::XzSweep => cfg.xz.depths = Some(a.depth.clone()),
            ExperimentKind::QaoaCompare => cfg.qaoa.xlocal_layers = a.depth.clone(),
        }
    }
    if !a.variant.is_empty() {
        cfg.xz.variants = a
            .variant
            .iter()
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "a" => Ok(XzVariant::A),
                "b" => Ok(XzVariant::B),
                other => bail!("unknown XZ variant {other:?}"),
            })
            .collect::<Result<_>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_experiment(kind: ExperimentKind, a: &ExperimentArgs) -> Result<()> {
    let cfg = resolve_config(kind, a)?;
    if a.print_config {
        return write_out(&a.out, &cfg.to_toml_string());
    }
    let quiet = a.quiet;
    let records = run_experiment(&cfg, &move |done, total| {
        if !quiet && (done == total || done % 10 == 0) {
            eprint!("\r{done}/{total} runs");
            if done == total {
                eprintln!();
            }
        }
    })?;
    let mut buf = Vec::new();
    emit_csv(&records, &mut buf)?;
    write_out(&a.out, std::str::from_utf8(&buf)?)?;
    if a.summary {
        eprintln!(
            "{:<20} {:>5} {:>6} {:>7} {:>10} {:>10} {:>10}",
            "experiment", "depth", "M", "count", "alpha", "std", "rounded"
        );
        for s in aggregate(&records)? {
            eprintln!(
                "{:<20} {:>5} {:>6} {:>7} {:>10.4} {:>10.4} {:>10.4}",
                s.experiment,
                s.depth,
                s.m_params,
                s.count,
                s.mean_alpha_continuous,
                s.std_alpha_continuous,
                s.mean_alpha_rounded
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Eval(a) => cmd_eval(a, false),
        Command::Grad(a) => cmd_eval(a, true),
        Command::Hess(a) => cmd_hess(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Flip(a) => cmd_flip(a),
        Command::ScanCuts(a) => cmd_scan_cuts(a),
        Command::VerifyTrapfree(a) => cmd_verify(a),
        Command::Variance(a) => cmd_variance(a),
        Command::Experiment(ExperimentCommand::Kbody(a)) => {
            cmd_experiment(ExperimentKind::KbodySweep, a)
        }
        Command::Experiment(ExperimentCommand::Xz(a)) => cmd_experiment(ExperimentKind::XzSweep, a),
        Command::Experiment(ExperimentCommand::Qaoa(a)) => {
            cmd_experiment(ExperimentKind::QaoaCompare, a)
        }
    }
}
