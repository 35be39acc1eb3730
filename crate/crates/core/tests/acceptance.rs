//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use maxcut_landscape::analytic::build_expansion;
use maxcut_landscape::ansatz::SimpleAnsatz;
use maxcut_landscape::barren::{variance_analytic, variance_monte_carlo};
use maxcut_landscape::experiment::{
    aggregate, run_experiment, ExperimentConfig, ExperimentKind, GroupSummary, QaoaVariant,
    XzVariant,
};
use maxcut_landscape::gf2::VertexSubset;
use maxcut_landscape::graph::{cut_value, random_complete_graph, Graph};
use maxcut_landscape::landscape::{
    eigenstate_hessian_diag, eigenstate_params, enumerate_inequality_cuts, flip_algorithm,
    round_to_cut, verify_trap_free_full_ansatz, FlipPolicy,
};
use maxcut_landscape::statevector::{run_circuit, Circuit, InitState, IsingTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_ansatz(rng: &mut ChaCha8Rng, n: usize, m: usize, distinct: bool) -> SimpleAnsatz {
    let full = (1u64 << n) - 1;
    let m = if distinct { m.min(full as usize) } else { m };
    let mut seen = BTreeSet::new();
    let mut elements = Vec::with_capacity(m);
    while elements.len() < m {
        let s = VertexSubset(rng.random_range(1..=full));
        if !distinct || seen.insert(s) {
            elements.push(s);
        }
    }
    SimpleAnsatz::new(n, elements).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    random_complete_graph(n, 0.0, 5.0, rng.random()).unwrap()
}

/// Random (graph, ansatz, θ) with `n <= 8`, `M <= 12`.
fn corpus(seed: u64, count: usize) -> Vec<(Graph, SimpleAnsatz, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=8);
            let m = rng.random_range(1..=12);
            let g = random_graph(&mut rng, n);
            let a = random_ansatz(&mut rng, n, m, false);
            let theta = (0..m)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            (g, a, theta)
        })
        .collect()
}

fn equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let cases = corpus(101, 200);
    for (g, a, theta) in &cases {
        let an = build_expansion(g, a).unwrap().objective(theta).unwrap();
        let table = IsingTable::new(g).unwrap();
        let (_, sv) = run_circuit(&Circuit::from_simple_ansatz(a), theta, &table).unwrap();
        worst = worst.max((an - sv).abs());
    }
    outcome(
        worst <= 1e-10,
        format!("{} cases, max |dJ| = {worst:.2e}", cases.len()),
    )
}

fn finite_differences() -> Outcome {
    let mut worst_g = 0.0f64;
    let mut worst_h = 0.0f64;
    let cases = corpus(101, 200);
    for (g, a, theta) in &cases {
        let exp = build_expansion(g, a).unwrap();
        let f = |t: &[f64]| exp.objective(t).unwrap();
        let grad = exp.gradient(theta).unwrap();
        let hess = exp.hessian(theta).unwrap();
        let m = theta.len();
        let h = 1e-5;
        for j in 0..m {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let fd = (f(&tp) - f(&tm)) / (2.0 * h);
            worst_g = worst_g.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
        }
        let norm = hess
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let h = 1e-4;
        for i in 0..m {
            for j in 0..m {
                let at = |di: f64, dj: f64| {
                    let mut t = theta.clone();
                    t[i] += di;
                    t[j] += dj;
                    f(&t)
                };
                let fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                worst_h = worst_h.max((fd - hess[i][j]).abs() / (1.0 + norm));
            }
        }
    }
    outcome(
        worst_g <= 1e-6 && worst_h <= 1e-5,
        format!(
            "{} cases, gradient rel err {worst_g:.2e}, Hessian err / (1+|H|) {worst_h:.2e}",
            cases.len()
        ),
    )
}

fn eigenstate_hessian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut cases, mut worst_off, mut worst_diag) = (0, 0.0f64, 0.0f64);
    while cases < 250 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=12);
        let g = random_graph(&mut rng, n);
        let a = random_ansatz(&mut rng, n, m, true);
        let c = VertexSubset(rng.random_range(0..1u64 << n));
        let Ok(theta) = eigenstate_params(c, &a) else {
            continue;
        };
        let hess = build_expansion(&g, &a).unwrap().hessian(&theta).unwrap();
        let diag = eigenstate_hessian_diag(&g, &a, c);
        for (k, row) in hess.iter().enumerate() {
            let want = 4.0 * (cut_value(&g, c) - cut_value(&g, c ^ a.elements()[k]));
            worst_diag = worst_diag
                .max((row[k] - want).abs())
                .max((diag[k] - want).abs());
            for (l, v) in row.iter().enumerate() {
                if l != k {
                    worst_off = worst_off.max(v.abs());
                }
            }
        }
        cases += 1;
    }
    outcome(
        worst_off <= 1e-9 && worst_diag <= 1e-9,
        format!("{cases} cases, max off-diagonal {worst_off:.2e}, diagonal err {worst_diag:.2e}"),
    )
}

fn trap_free() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut bad = 0;
    for i in 0..50 {
        let n = 3 + i % 5;
        let g = random_graph(&mut rng, n);
        if !verify_trap_free_full_ansatz(&g).unwrap().trap_free {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("50 graphs, n in 3..=7, {bad} with traps"))
}

fn fixed_points() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut bad = 0;
    let mut sizes = 0;
    for _ in 0..30 {
        let n = rng.random_range(3..=8);
        let m = rng.random_range(1..=2 * n);
        let g = random_graph(&mut rng, n);
        let a = random_ansatz(&mut rng, n, m, false);
        let want = enumerate_inequality_cuts(&g, &a).unwrap();
        let got: BTreeSet<VertexSubset> = (0..1u64 << (n - 1))
            .map(|b| {
                flip_algorithm(&g, &a, VertexSubset(b << 1), FlipPolicy::Greedy, 0)
                    .unwrap()
                    .0
                    .canonical(n)
            })
            .collect();
        sizes += want.len();
        if got != want {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("30 pairs, {sizes} inequality cuts in total, {bad} mismatches"),
    )
}

fn rounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let n = 6;
    let a = SimpleAnsatz::classical(n);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let g = random_graph(&mut rng, n);
        let exp = build_expansion(&g, &a).unwrap();
        let theta: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let j = exp.objective(&theta).unwrap();
        let r = round_to_cut(&exp, &theta).unwrap();
        let energy = g.total_weight() - 2.0 * cut_value(&g, r.cut);
        worst = worst.max(energy - j);
    }
    outcome(
        worst <= 1e-9,
        format!("100 angle sets, max J(cut) - J(theta) = {worst:.3e}"),
    )
}

fn barren() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut exact_bad, mut var_bad, mut mean_bad) = (0, 0, 0);
    let mut worst_z = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(3..=8);
        let g = random_graph(&mut rng, n);
        let a = SimpleAnsatz::classical(n);
        let k = i % n;
        let v = k + 1;
        let want: f64 = g
            .edges()
            .iter()
            .filter(|e| e.a == v || e.b == v)
            .map(|e| e.w * e.w)
            .sum();
        let analytic = variance_analytic(&g, &a, k).unwrap().analytic.unwrap();
        if (analytic - want).abs() > 1e-9 * (1.0 + want) {
            exact_bad += 1;
        }
        let exp = build_expansion(&g, &a).unwrap();
        let mc = variance_monte_carlo(&exp, k, 100_000, rng.random())
            .unwrap()
            .monte_carlo
            .unwrap();
        let z = (mc.variance - analytic).abs() / mc.variance_stderr;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            var_bad += 1;
        }
        if mc.mean.abs() > 3.0 * mc.mean_stderr {
            mean_bad += 1;
        }
    }
    outcome(
        exact_bad + var_bad + mean_bad == 0,
        format!(
            "20 graphs: formula mismatches {exact_bad}, variance outside 3 se {var_bad} (max {worst_z:.2} se), mean outside 3 se {mean_bad}"
        ),
    )
}

fn desk_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.n = 8;
    cfg.realizations = 100;
    cfg.w_min = 0.0;
    cfg.w_max = 5.0;
    cfg
}

fn mean_of(groups: &[GroupSummary], experiment: &str, depth: usize) -> f64 {
    groups
        .iter()
        .find(|g| g.experiment == experiment && g.depth == depth)
        .unwrap_or_else(|| panic!("no group {experiment} {depth}"))
        .mean_alpha_continuous
}

fn run(cfg: &ExperimentConfig) -> Vec<GroupSummary> {
    aggregate(&run_experiment(cfg, &|_, _| {}).unwrap()).unwrap()
}

fn main() -> ExitCode {
    let mut results: Vec<(String, Outcome, f64)> = Vec::new();
    let mut check = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} {name}: {} ({secs:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name.to_string(), o, secs));
    };

    check("1 analytic vs statevector", &mut equivalence);
    check(
        "2 derivatives vs finite differences",
        &mut finite_differences,
    );
    check("3 eigenstate Hessian", &mut eigenstate_hessian);
    check("4 full ansatz is trap-free", &mut trap_free);
    check("5 flip fixed points", &mut fixed_points);
    check("6 classical rounding", &mut rounding);
    check("7 gradient variance", &mut barren);

    let mut kbody = Vec::new();
    check("8 k-body depth 1", &mut || {
        let mut cfg = desk_config(ExperimentKind::KbodySweep);
        cfg.kbody.depths = Some(vec![1, 2, 7]);
        kbody = run(&cfg);
        let d1 = mean_of(&kbody, "kbody", 1);
        outcome(d1 >= 0.93, format!("mean alpha {d1:.4} (need >= 0.93)"))
    });
    let (d1, d2, d7) = (
        mean_of(&kbody, "kbody", 1),
        mean_of(&kbody, "kbody", 2),
        mean_of(&kbody, "kbody", 7),
    );
    check("9 k-body full depth", &mut || {
        outcome(
            d7 >= 0.985,
            format!("mean alpha at D=7 {d7:.4} (need >= 0.985)"),
        )
    });
    check("10 k-body dip", &mut || {
        outcome(d2 < d1, format!("D=2 {d2:.4} vs D=1 {d1:.4}"))
    });
    check("11 XZ advantage", &mut || {
        let mut cfg = desk_config(ExperimentKind::XzSweep);
        cfg.xz.depths = Some(vec![4]);
        cfg.xz.variants = vec![XzVariant::A];
        cfg.xz.include_x = true;
        let g = run(&cfg);
        let (xz, x) = (mean_of(&g, "xz-a", 4), mean_of(&g, "x", 4));
        outcome(
            (0.95..=1.0).contains(&xz) && xz > x,
            format!("XZ(a) {xz:.4} in [0.95, 1.0], X {x:.4}"),
        )
    });
    check("12 modified QAOA", &mut || {
        let mut cfg = desk_config(ExperimentKind::QaoaCompare);
        cfg.qaoa.variants = vec![QaoaVariant {
            init: InitState::Zeros,
            xlocal: true,
        }];
        cfg.qaoa.xlocal_layers = vec![0, 3, 4, 5];
        cfg.qaoa.x_depths.clear();
        cfg.qaoa.xz_depths.clear();
        let g = run(&cfg);
        let at_n = g
            .iter()
            .find(|s| s.m_params == cfg.n)
            .unwrap()
            .mean_alpha_continuous;
        let band: Vec<(usize, f64)> = g
            .iter()
            .filter(|s| (35..=55).contains(&s.m_params))
            .map(|s| (s.m_params, s.mean_alpha_continuous))
            .collect();
        let best = band.iter().map(|b| b.1).fold(0.0, f64::max);
        let listed: Vec<String> = band.iter().map(|(m, a)| format!("M={m} {a:.4}")).collect();
        outcome(
            at_n >= 0.94 && best >= 0.97,
            format!("M=n {at_n:.4} (need >= 0.94); {}", listed.join(", ")),
        )
    });

    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.1.pass)
        .map(|r| r.0.as_str())
        .collect();
    let total: f64 = results.iter().map(|r| r.2).sum();
    println!(
        "{} of {} criteria passed in {total:.0} s",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
