use std::collections::BTreeSet;

use maxcut_landscape::ansatz::SimpleAnsatz;
use maxcut_landscape::experiment::{
    aggregate, emit_csv, parse_csv, plan, run_experiment, run_specs, ExperimentConfig,
    ExperimentKind, QaoaVariant, CSV_HEADER,
};
use maxcut_landscape::gf2::VertexSubset;
use maxcut_landscape::graph::random_complete_graph;
use maxcut_landscape::landscape::{enumerate_inequality_cuts, flip_algorithm, FlipPolicy};
use maxcut_landscape::statevector::{run_circuit, InitState, IsingTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.n = 5;
    cfg.realizations = 3;
    cfg.master_seed = 17;
    cfg.kbody.depths = Some(vec![1, 2, 4]);
    cfg.xz.depths = Some(vec![1, 2]);
    cfg.qaoa.standard_layers = vec![1, 3];
    cfg.qaoa.xlocal_layers = vec![0, 2];
    cfg.qaoa.x_depths = vec![1];
    cfg.qaoa.xz_depths = vec![1];
    cfg
}

fn all_kinds() -> [ExperimentKind; 3] {
    [
        ExperimentKind::KbodySweep,
        ExperimentKind::XzSweep,
        ExperimentKind::QaoaCompare,
    ]
}

#[test]
fn optima_replay_to_their_recorded_values() {
    for kind in all_kinds() {
        let cfg = small(kind);
        let specs = plan(&cfg);
        let outcomes = run_specs(&cfg, &specs, &|_, _| {}).unwrap();
        assert_eq!(outcomes.len(), specs.len() * cfg.realizations);
        for (i, o) in outcomes.iter().enumerate() {
            let spec = &specs[i / cfg.realizations];
            let circ = spec.family.circuit(o.graph.n()).unwrap();
            let table = IsingTable::new(&o.graph).unwrap();
            let (_, j) = run_circuit(&circ, &o.theta, &table).unwrap();
            assert!(
                (j - o.value).abs() <= 1e-9,
                "{}: {j} vs {}",
                spec.experiment,
                o.value
            );
            let r = &o.record;
            assert!(r.alpha_continuous <= 1.0 + 1e-9);
            assert!((0.0..=1.0).contains(&r.alpha_rounded));
            assert_eq!(r.m_params, o.theta.len());
        }
    }
}

#[test]
fn csv_is_byte_reproducible() {
    for kind in all_kinds() {
        let cfg = small(kind);
        let emit = || {
            let mut buf = Vec::new();
            emit_csv(&run_experiment(&cfg, &|_, _| {}).unwrap(), &mut buf).unwrap();
            buf
        };
        let a = emit();
        assert_eq!(a, emit());
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let parsed = parse_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed, run_experiment(&cfg, &|_, _| {}).unwrap());
    }
}

#[test]
fn seed_changes_the_batch() {
    let cfg = small(ExperimentKind::KbodySweep);
    let other = ExperimentConfig {
        master_seed: 18,
        ..cfg.clone()
    };
    let a = run_experiment(&cfg, &|_, _| {}).unwrap();
    let b = run_experiment(&other, &|_, _| {}).unwrap();
    assert_ne!(a[0].seed, b[0].seed);
}

#[test]
fn rows_follow_plan_then_realization_order() {
    let cfg = small(ExperimentKind::QaoaCompare);
    let records = run_experiment(&cfg, &|_, _| {}).unwrap();
    let labels: Vec<&str> = records
        .iter()
        .step_by(cfg.realizations)
        .map(|r| r.experiment.as_str())
        .collect();
    assert_eq!(
        labels,
        [
            "qaoa",
            "qaoa",
            "qaoa-xlocal",
            "qaoa-xlocal",
            "qaoa-xlocal-zeros",
            "qaoa-xlocal-zeros",
            "x",
            "xz-a"
        ]
    );
    for chunk in records.chunks(cfg.realizations) {
        let idx: Vec<usize> = chunk.iter().map(|r| r.realization).collect();
        assert_eq!(idx, (0..cfg.realizations).collect::<Vec<_>>());
    }
    let m: Vec<usize> = records
        .iter()
        .step_by(cfg.realizations)
        .map(|r| r.m_params)
        .collect();
    assert_eq!(m, [2, 6, 5, 17, 5, 17, 5, 10]);

    let groups = aggregate(&records).unwrap();
    assert_eq!(groups.len(), 8);
    assert!(groups.iter().all(|g| g.count == cfg.realizations));
}

#[test]
fn paired_realizations_share_graphs() {
    let cfg = small(ExperimentKind::XzSweep);
    let records = run_experiment(&cfg, &|_, _| {}).unwrap();
    let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), cfg.realizations);
}

#[test]
fn xlocal_variants_differ_only_in_the_start() {
    let mut cfg = small(ExperimentKind::QaoaCompare);
    cfg.qaoa.variants = vec![QaoaVariant {
        init: InitState::Zeros,
        xlocal: true,
    }];
    cfg.qaoa.x_depths.clear();
    cfg.qaoa.xz_depths.clear();
    let records = run_experiment(&cfg, &|_, _| {}).unwrap();
    assert!(records.iter().all(|r| r.experiment == "qaoa-xlocal-zeros"));
}

#[test]
fn flip_fixed_points_are_the_inequality_cuts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..12 {
        let n = rng.random_range(3..=7);
        let g = random_complete_graph(n, 0.0, 5.0, rng.random()).unwrap();
        let m = rng.random_range(1..=2 * n);
        let full = (1u64 << n) - 1;
        let elements = (0..m)
            .map(|_| VertexSubset(rng.random_range(1..=full)))
            .collect();
        let a = SimpleAnsatz::new(n, elements).unwrap();
        let want = enumerate_inequality_cuts(&g, &a).unwrap();
        for policy in [FlipPolicy::Greedy, FlipPolicy::FirstImproving] {
            let got: BTreeSet<VertexSubset> = (0..1u64 << (n - 1))
                .map(|b| {
                    let start = VertexSubset(b << 1);
                    flip_algorithm(&g, &a, start, policy, 0)
                        .unwrap()
                        .0
                        .canonical(n)
                })
                .collect();
            assert_eq!(got, want, "{policy:?}");
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(ExperimentKind::KbodySweep);
    cfg.kbody.depths = Some(vec![5]);
    assert!(run_experiment(&cfg, &|_, _| {}).is_err());
    let mut cfg = small(ExperimentKind::KbodySweep);
    cfg.realizations = 0;
    assert!(cfg.validate().is_err());
    assert!(ExperimentConfig::from_toml_str("n = 4\nbogus = 1\n").is_err());
    let cfg =
        ExperimentConfig::from_toml_str("kind = \"xz\"\nn = 6\n[optimizer]\nmax_iters = 10\n")
            .unwrap();
    assert_eq!(cfg.kind, ExperimentKind::XzSweep);
    assert_eq!(cfg.optimizer.max_iters, 10);
    assert_eq!(cfg.realizations, 100);
}
