use maxcut_landscape::analytic::build_expansion;
use maxcut_landscape::ansatz::SimpleAnsatz;
use maxcut_landscape::gf2::VertexSubset;
use maxcut_landscape::graph::{cut_value, random_complete_graph, Graph};
use maxcut_landscape::landscape::{eigenstate_hessian_diag, eigenstate_params};
use maxcut_landscape::statevector::{
    reverse_gradient, run_circuit, Circuit, InitState, IsingTable, Layer,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_ansatz(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SimpleAnsatz {
    let full = (1u64 << n) - 1;
    let elements = (0..m)
        .map(|_| VertexSubset(rng.random_range(1..=full)))
        .collect();
    SimpleAnsatz::new(n, elements).unwrap()
}

/// Pairwise distinct elements.
fn distinct_ansatz(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SimpleAnsatz {
    let full = (1u64 << n) - 1;
    let m = m.min(full as usize);
    let mut seen = std::collections::BTreeSet::new();
    let mut elements = Vec::new();
    while elements.len() < m {
        let s = VertexSubset(rng.random_range(1..=full));
        if seen.insert(s) {
            elements.push(s);
        }
    }
    SimpleAnsatz::new(n, elements).unwrap()
}

fn random_case(rng: &mut ChaCha8Rng) -> (Graph, SimpleAnsatz, Vec<f64>) {
    let n = rng.random_range(2..=8);
    let m = rng.random_range(1..=12);
    let g = random_complete_graph(n, 0.0, 5.0, rng.random()).unwrap();
    let a = random_ansatz(rng, n, m);
    let theta = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
    (g, a, theta)
}

#[test]
fn analytic_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..150 {
        let (g, a, theta) = random_case(&mut rng);
        let exp = build_expansion(&g, &a).unwrap();
        let table = IsingTable::new(&g).unwrap();
        let circ = Circuit::from_simple_ansatz(&a);
        let (_, sv) = run_circuit(&circ, &theta, &table).unwrap();
        let an = exp.objective(&theta).unwrap();
        assert!((an - sv).abs() <= 1e-10, "{an} vs {sv}");

        let (_, g_an) = exp.value_and_gradient(&theta).unwrap();
        let (_, g_sv) = reverse_gradient(&circ, &theta, &table).unwrap();
        for (x, y) in g_an.iter().zip(&g_sv) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..60 {
        let (g, a, theta) = random_case(&mut rng);
        let exp = build_expansion(&g, &a).unwrap();
        let f = |t: &[f64]| exp.objective(t).unwrap();
        let grad = exp.gradient(&theta).unwrap();
        let hess = exp.hessian(&theta).unwrap();
        let m = theta.len();
        let h = 1e-5;
        for j in 0..m {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let fd = (f(&tp) - f(&tm)) / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-6 * (1.0 + grad[j].abs()));
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
                assert!((fd - hess[i][j]).abs() <= 1e-5 * (1.0 + norm));
            }
        }
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences_on_every_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5;
    let g = random_complete_graph(n, 0.0, 5.0, 7).unwrap();
    let table = IsingTable::new(&g).unwrap();
    let s = |v: &[usize]| VertexSubset::from_vertices(v.iter().copied());
    for init in [InitState::Zeros, InitState::Plus] {
        let layers = vec![
            Layer::XLocal,
            Layer::IsingEvolution,
            Layer::XRotation(s(&[1, 3])),
            Layer::ZRotation(s(&[2, 3, 5])),
            Layer::XMixer,
            Layer::ZField,
            Layer::IsingEvolution,
            Layer::XRotation(s(&[4])),
            Layer::ZRotation(s(&[1])),
        ];
        let circ = Circuit::new(n, layers, init).unwrap();
        let m = circ.num_params();
        let theta: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..6.3)).collect();
        let (j, grad) = reverse_gradient(&circ, &theta, &table).unwrap();
        let f = |t: &[f64]| run_circuit(&circ, t, &table).unwrap().1;
        assert!((j - f(&theta)).abs() < 1e-12);
        let h = 1e-5;
        for k in 0..m {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let fd = (f(&tp) - f(&tm)) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() <= 1e-6 * (1.0 + fd.abs()),
                "{init:?} k={k}"
            );
        }
    }
}

#[test]
fn eigenstate_hessians_are_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 80 {
        let n = rng.random_range(2..=8);
        let g = random_complete_graph(n, 0.0, 5.0, rng.random()).unwrap();
        let m = rng.random_range(1..=12);
        let a = distinct_ansatz(&mut rng, n, m);
        let c = VertexSubset(rng.random_range(0..1u64 << n));
        let Ok(theta) = eigenstate_params(c, &a) else {
            continue;
        };
        let exp = build_expansion(&g, &a).unwrap();
        let (value, grad) = exp.value_and_gradient(&theta).unwrap();
        assert!((value - (g.total_weight() - 2.0 * cut_value(&g, c))).abs() < 1e-9);
        assert!(grad.iter().all(|v| v.abs() < 1e-9));
        let hess = exp.hessian(&theta).unwrap();
        let diag = eigenstate_hessian_diag(&g, &a, c);
        for (k, row) in hess.iter().enumerate() {
            for (l, &v) in row.iter().enumerate() {
                let want = if k == l { diag[k] } else { 0.0 };
                assert!((v - want).abs() <= 1e-9);
            }
            let h = a.elements()[k];
            assert!((diag[k] - 4.0 * (cut_value(&g, c) - cut_value(&g, c ^ h))).abs() <= 1e-9);
        }
        checked += 1;
    }
}

#[test]
fn repeated_elements_couple_at_eigenstates() {
    let g = random_complete_graph(4, 0.0, 5.0, 5).unwrap();
    let s = |v: &[usize]| VertexSubset::from_vertices(v.iter().copied());
    let a = SimpleAnsatz::new(4, vec![s(&[1, 2]), s(&[3, 4]), s(&[1, 2]), s(&[1])]).unwrap();
    let exp = build_expansion(&g, &a).unwrap();
    let hess = exp.hessian(&[0.0; 4]).unwrap();
    let diag = eigenstate_hessian_diag(&g, &a, VertexSubset::EMPTY);
    // a repeated element only sees the sum of its two angles
    assert!((hess[0][2] - diag[0]).abs() < 1e-9);
    assert!(hess[0][2].abs() > 1e-3);
    // a complement pair stays uncoupled
    assert!(hess[0][1].abs() < 1e-9);
}
