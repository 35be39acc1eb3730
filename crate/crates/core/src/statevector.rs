//! Dense statevector simulation of X/Z-product rotations, Ising evolution
//! and transverse mixers, with adjoint gradients.
//!
//! Basis index bit `i - 1` holds qubit (vertex) `i`; a set bit means the
//! vertex is on the "1" side of the cut.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::SimpleAnsatz;
use crate::error::{Error, Result};
use crate::gf2::VertexSubset;
use crate::graph::{cut_value, Cut, Graph};
use crate::optimize::wrap_angle;

/// Default qubit cap (2^26 amplitudes, 1 GiB).
pub const DEFAULT_QUBIT_LIMIT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    /// `|0…0⟩`
    #[default]
    Zeros,
    /// `|+…+⟩`
    Plus,
}

impl std::str::FromStr for InitState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" | "zero" | "0" => Ok(InitState::Zeros),
            "plus" | "+" => Ok(InitState::Plus),
            other => Err(Error::InvalidArgument(format!(
                "unknown initial state {other:?}"
            ))),
        }
    }
}

/// Diagonal of the Ising Hamiltonian `Σ w_ab Z_a Z_b` over basis states.
#[derive(Debug, Clone)]
pub struct IsingTable {
    n: usize,
    energies: Vec<f64>,
    total_weight: f64,
}

impl IsingTable {
    pub fn new(g: &Graph) -> Result<Self> {
        Self::with_limit(g, DEFAULT_QUBIT_LIMIT)
    }

    /// Builds the table by doubling: adding the highest vertex `t` to a
    /// state on lower vertices changes the energy by
    /// `-2 (Σ_{u>t} w_tu + Σ_{u<t} w_tu z_u)`.
    pub fn with_limit(g: &Graph, limit: usize) -> Result<Self> {
        let n = g.n();
        check_qubits(n, limit)?;
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in g.edges() {
            adj[e.a - 1].push((e.b - 1, e.w));
            adj[e.b - 1].push((e.a - 1, e.w));
        }
        let total_weight = g.total_weight();
        let mut energies = vec![0.0; 1 << n];
        energies[0] = total_weight;
        for t in 0..n {
            let upper: f64 = adj[t]
                .iter()
                .filter(|&&(u, _)| u > t)
                .map(|&(_, w)| w)
                .sum();
            let lower: Vec<(usize, f64)> = adj[t].iter().copied().filter(|&(u, _)| u < t).collect();
            for x in 0..1usize << t {
                let mut d = upper;
                for &(u, w) in &lower {
                    if x >> u & 1 == 1 {
                        d -= w;
                    } else {
                        d += w;
                    }
                }
                energies[x | 1 << t] = energies[x] - 2.0 * d;
            }
        }
        Ok(IsingTable {
            n,
            energies,
            total_weight,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

fn check_qubits(n: usize, limit: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if n > limit {
        return Err(Error::LimitExceeded {
            what: "qubit count",
            got: n,
            limit,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

pub fn init_state(n: usize, tag: InitState) -> Result<StateVector> {
    StateVector::new(n, tag, DEFAULT_QUBIT_LIMIT)
}

impl StateVector {
    pub fn new(n: usize, tag: InitState, limit: usize) -> Result<Self> {
        check_qubits(n, limit)?;
        let dim = 1usize << n;
        let amps = match tag {
            InitState::Zeros => {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            InitState::Plus => vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim],
        };
        Ok(StateVector { n, amps })
    }

    /// The computational basis state of a cut.
    pub fn basis(n: usize, cut: Cut) -> Result<Self> {
        check_qubits(n, DEFAULT_QUBIT_LIMIT)?;
        if !cut.fits(n) {
            return Err(Error::InvalidArgument(format!("cut {cut} outside 1..={n}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[cut.bits() as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `e^{-iθ X_S}` = `cos θ - i sin θ X_S`, applied pairwise on `(x, x ^ S)`.
    pub fn apply_x_rotation(&mut self, mask: VertexSubset, theta: f64) {
        let m = mask.bits() as usize;
        debug_assert!(m != 0 && m >> self.n == 0);
        let low = m & m.wrapping_neg();
        let (s, c) = theta.sin_cos();
        let amps = &mut self.amps;
        for_each_pair(amps.len(), m, low, |x, y| {
            let (ax, ay) = (amps[x], amps[y]);
            amps[x] = Complex64::new(c * ax.re + s * ay.im, c * ax.im - s * ay.re);
            amps[y] = Complex64::new(c * ay.re + s * ax.im, c * ay.im - s * ax.re);
        });
    }

    /// `e^{-iθ Z_S}`: phase `e^{-iθ}` on even parity of `x & S`, `e^{iθ}` on odd.
    pub fn apply_z_rotation(&mut self, mask: VertexSubset, theta: f64) {
        let m = mask.bits() as usize;
        let (s, c) = theta.sin_cos();
        let even = Complex64::new(c, -s);
        let odd = Complex64::new(c, s);
        let phase = [even, odd];
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a *= phase[((x & m).count_ones() & 1) as usize];
        }
    }

    /// `e^{-iθ H_p}`: phase `e^{-iθ E(x)}`.
    pub fn apply_ising_evolution(&mut self, table: &IsingTable, theta: f64) {
        debug_assert_eq!(table.n, self.n);
        for (a, &e) in self.amps.iter_mut().zip(&table.energies) {
            let (s, c) = (theta * e).sin_cos();
            *a *= Complex64::new(c, -s);
        }
    }

    /// `e^{-iθ Σ_q X_q}`.
    pub fn apply_x_mixer(&mut self, theta: f64) {
        for q in 1..=self.n {
            self.apply_x_rotation(VertexSubset::from_vertices([q]), theta);
        }
    }

    /// `e^{-iθ Σ_q Z_q}`: phase `e^{-iθ (n - 2|x|)}`.
    pub fn apply_z_field(&mut self, theta: f64) {
        let n = self.n as f64;
        for (x, a) in self.amps.iter_mut().enumerate() {
            let p = n - 2.0 * x.count_ones() as f64;
            let (s, c) = (theta * p).sin_cos();
            *a *= Complex64::new(c, -s);
        }
    }

    /// `⟨ψ|H_p|ψ⟩`, summed in index order.
    pub fn expectation(&self, table: &IsingTable) -> f64 {
        debug_assert_eq!(table.n, self.n);
        let mut acc = 0.0;
        for (a, &e) in self.amps.iter().zip(&table.energies) {
            acc += a.norm_sqr() * e;
        }
        acc
    }

    fn apply_gate(&mut self, gate: Gate, table: &IsingTable, theta: f64) {
        match gate {
            Gate::X(m) => self.apply_x_rotation(m, theta),
            Gate::Z(m) => self.apply_z_rotation(m, theta),
            Gate::Ising => self.apply_ising_evolution(table, theta),
            Gate::XMixer => self.apply_x_mixer(theta),
            Gate::ZField => self.apply_z_field(theta),
        }
    }

    /// `Im ⟨other| G |self⟩` for the generator `G` of `gate`.
    fn generator_overlap_im(&self, other: &StateVector, gate: Gate, table: &IsingTable) -> f64 {
        let psi = &self.amps;
        let lam = &other.amps;
        let mut acc = Complex64::new(0.0, 0.0);
        match gate {
            Gate::X(m) => {
                let m = m.bits() as usize;
                for x in 0..psi.len() {
                    acc += lam[x].conj() * psi[x ^ m];
                }
            }
            Gate::Z(m) => {
                let m = m.bits() as usize;
                for x in 0..psi.len() {
                    let v = lam[x].conj() * psi[x];
                    if (x & m).count_ones().is_multiple_of(2) {
                        acc += v;
                    } else {
                        acc -= v;
                    }
                }
            }
            Gate::Ising => {
                for x in 0..psi.len() {
                    acc += lam[x].conj() * psi[x] * table.energies[x];
                }
            }
            Gate::XMixer => {
                for x in 0..psi.len() {
                    let mut g = Complex64::new(0.0, 0.0);
                    for q in 0..self.n {
                        g += psi[x ^ (1 << q)];
                    }
                    acc += lam[x].conj() * g;
                }
            }
            Gate::ZField => {
                let n = self.n as f64;
                for x in 0..psi.len() {
                    acc += lam[x].conj() * psi[x] * (n - 2.0 * x.count_ones() as f64);
                }
            }
        }
        acc.im
    }
}

/// Calls `f(x, x ^ m)` once per pair, `x` having the lowest bit of `m`
/// clear.
#[inline(always)]
fn for_each_pair(dim: usize, m: usize, low: usize, mut f: impl FnMut(usize, usize)) {
    for block in (0..dim).step_by(2 * low) {
        for x in block..block + low {
            f(x, x ^ m);
        }
    }
}

pub fn apply_x_rotation(state: &mut StateVector, mask: VertexSubset, theta: f64) {
    state.apply_x_rotation(mask, theta);
}

pub fn apply_z_rotation(state: &mut StateVector, mask: VertexSubset, theta: f64) {
    state.apply_z_rotation(mask, theta);
}

pub fn apply_ising_evolution(state: &mut StateVector, table: &IsingTable, theta: f64) {
    state.apply_ising_evolution(table, theta);
}

pub fn expectation(state: &StateVector, table: &IsingTable) -> f64 {
    state.expectation(table)
}

/// One circuit layer. All kinds take one parameter except `XLocal`, which
/// takes one per qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// `e^{-iθ Π_{i∈S} X_i}`
    XRotation(VertexSubset),
    /// `e^{-iθ Π_{i∈S} Z_i}`
    ZRotation(VertexSubset),
    /// `e^{-iθ H_p}` for the circuit's graph.
    IsingEvolution,
    /// `Π_q e^{-iθ_q X_q}` with independent angles.
    XLocal,
    /// `e^{-iθ Σ_q X_q}`, the standard QAOA mixer.
    XMixer,
    /// `e^{-iθ Σ_q Z_q}`.
    ZField,
}

impl Layer {
    pub fn num_params(&self, n: usize) -> usize {
        match self {
            Layer::XLocal => n,
            _ => 1,
        }
    }
}

/// Single-parameter primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    X(VertexSubset),
    Z(VertexSubset),
    Ising,
    XMixer,
    ZField,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Layer>,
    init: InitState,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Layer>, init: InitState) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidArgument(format!(
                "qubit count {n} outside 1..=64"
            )));
        }
        let mut gates = Vec::new();
        for (i, layer) in layers.iter().enumerate() {
            match *layer {
                Layer::XRotation(m) | Layer::ZRotation(m) if m.is_empty() || !m.fits(n) => {
                    return Err(Error::InvalidArgument(format!(
                        "layer {i} has mask {m} (must be nonempty within 1..={n})"
                    )))
                }
                Layer::XRotation(m) => gates.push(Gate::X(m)),
                Layer::ZRotation(m) => gates.push(Gate::Z(m)),
                Layer::IsingEvolution => gates.push(Gate::Ising),
                Layer::XLocal => {
                    gates.extend((1..=n).map(|q| Gate::X(VertexSubset::from_vertices([q]))))
                }
                Layer::XMixer => gates.push(Gate::XMixer),
                Layer::ZField => gates.push(Gate::ZField),
            }
        }
        Ok(Circuit {
            n,
            layers,
            init,
            gates,
        })
    }

    /// X-rotation layers for each element, starting from `|0…0⟩`.
    pub fn from_simple_ansatz(ansatz: &SimpleAnsatz) -> Self {
        let layers = ansatz
            .elements()
            .iter()
            .map(|&m| Layer::XRotation(m))
            .collect();
        Circuit::new(ansatz.n(), layers, InitState::Zeros)
            .expect("simple ansatz elements are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn init(&self) -> InitState {
        self.init
    }

    /// `θ` with every angle reduced into `[0, 2π)` except those of Ising
    /// evolutions, which are not `2π`-periodic for general weights.
    pub fn wrap_params(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.gates)
            .map(|(&t, g)| if *g == Gate::Ising { t } else { wrap_angle(t) })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.gates.len()
    }

    fn check(&self, theta: &[f64], table: &IsingTable) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::ParamCount {
                expected: self.num_params(),
                got: theta.len(),
            });
        }
        if table.n != self.n {
            return Err(Error::InvalidArgument(format!(
                "circuit has {} qubits but the graph has {} vertices",
                self.n, table.n
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "init {}\n",
            match self.init {
                InitState::Zeros => "zeros",
                InitState::Plus => "plus",
            }
        );
        for layer in &self.layers {
            let line = match layer {
                Layer::XRotation(m) => format!("xrot {}", join_vertices(*m)),
                Layer::ZRotation(m) => format!("zrot {}", join_vertices(*m)),
                Layer::IsingEvolution => "ising".into(),
                Layer::XLocal => "xlocal".into(),
                Layer::XMixer => "xmix".into(),
                Layer::ZField => "zfield".into(),
            };
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

fn join_vertices(m: VertexSubset) -> String {
    m.vertices()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses the circuit format: optional `init zeros|plus` header, then one
/// layer per line (`xrot 1 3`, `zrot 2`, `ising`, `xlocal`, `xmix`, `zfield`).
pub fn parse_circuit(text: &str, n: usize) -> Result<Circuit> {
    let mut init = InitState::Zeros;
    let mut layers = Vec::new();
    let mut seen_layer = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        let parse_mask = |toks: std::str::SplitWhitespace<'_>| -> Result<VertexSubset> {
            let mut bits = 0u64;
            for t in toks {
                let v: usize = t.parse().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("bad vertex {t:?}"),
                })?;
                if v < 1 || v > n {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("vertex {v} outside 1..={n}"),
                    });
                }
                bits |= 1 << (v - 1);
            }
            if bits == 0 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "rotation needs at least one vertex".into(),
                });
            }
            Ok(VertexSubset(bits))
        };
        let no_args = |mut toks: std::str::SplitWhitespace<'_>, layer: Layer| -> Result<Layer> {
            match toks.next() {
                None => Ok(layer),
                Some(t) => Err(Error::Parse {
                    line: ln,
                    msg: format!("unexpected argument {t:?}"),
                }),
            }
        };
        let layer = match head {
            "init" => {
                if seen_layer {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "init must precede all layers".into(),
                    });
                }
                let tag = toks.next().unwrap_or_default();
                init = tag.parse().map_err(|e: Error| Error::Parse {
                    line: ln,
                    msg: e.to_string(),
                })?;
                continue;
            }
            "xrot" => Layer::XRotation(parse_mask(toks)?),
            "zrot" => Layer::ZRotation(parse_mask(toks)?),
            "ising" => no_args(toks, Layer::IsingEvolution)?,
            "xlocal" => no_args(toks, Layer::XLocal)?,
            "xmix" => no_args(toks, Layer::XMixer)?,
            "zfield" => no_args(toks, Layer::ZField)?,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unknown layer {other:?}"),
                })
            }
        };
        seen_layer = true;
        layers.push(layer);
    }
    Circuit::new(n, layers, init)
}

/// Applies the circuit to its initial state and returns the state and `J`.
pub fn run_circuit(
    circ: &Circuit,
    theta: &[f64],
    table: &IsingTable,
) -> Result<(StateVector, f64)> {
    circ.check(theta, table)?;
    let mut state = StateVector::new(circ.n, circ.init, 64)?;
    for (&gate, &t) in circ.gates.iter().zip(theta) {
        state.apply_gate(gate, table, t);
    }
    let j = state.expectation(table);
    Ok((state, j))
}

/// Exact gradient by a forward pass and one backward sweep of the state and
/// its costate `λ = U_{>j}† H_p ψ`: `∂_j J = 2 Im ⟨λ_j|G_j|ψ_j⟩`.
pub fn reverse_gradient(
    circ: &Circuit,
    theta: &[f64],
    table: &IsingTable,
) -> Result<(f64, Vec<f64>)> {
    let (mut psi, value) = run_circuit(circ, theta, table)?;
    let mut lam = psi.clone();
    for (a, &e) in lam.amps.iter_mut().zip(&table.energies) {
        *a *= e;
    }
    let mut grad = vec![0.0; theta.len()];
    for j in (0..circ.gates.len()).rev() {
        let gate = circ.gates[j];
        grad[j] = 2.0 * back_step(&mut psi, &mut lam, gate, table, theta[j]);
    }
    Ok((value, grad))
}

/// `Im ⟨λ|G|ψ⟩`, then undoes the gate on both vectors. X and Z gates do it
/// in one pass; the overlap is unchanged by the undo since it commutes
/// with `G`.
fn back_step(
    psi: &mut StateVector,
    lam: &mut StateVector,
    gate: Gate,
    table: &IsingTable,
    theta: f64,
) -> f64 {
    let (s, c) = theta.sin_cos();
    match gate {
        Gate::X(m) => {
            let m = m.bits() as usize;
            let low = m & m.wrapping_neg();
            let mut acc = 0.0;
            let (pa, la) = (&mut psi.amps, &mut lam.amps);
            // (c + is X) on each pair
            let rot = |a: Complex64, b: Complex64| {
                Complex64::new(c * a.re - s * b.im, c * a.im + s * b.re)
            };
            for_each_pair(pa.len(), m, low, |x, y| {
                let (px, py, lx, ly) = (pa[x], pa[y], la[x], la[y]);
                acc += lx.re * py.im - lx.im * py.re + ly.re * px.im - ly.im * px.re;
                pa[x] = rot(px, py);
                pa[y] = rot(py, px);
                la[x] = rot(lx, ly);
                la[y] = rot(ly, lx);
            });
            acc
        }
        Gate::Z(m) => {
            let m = m.bits() as usize;
            let phase = [Complex64::new(c, s), Complex64::new(c, -s)];
            let sign = [1.0, -1.0];
            let mut acc = 0.0;
            for (x, (p, l)) in psi.amps.iter_mut().zip(lam.amps.iter_mut()).enumerate() {
                let par = ((x & m).count_ones() & 1) as usize;
                acc += sign[par] * (l.re * p.im - l.im * p.re);
                *p *= phase[par];
                *l *= phase[par];
            }
            acc
        }
        _ => {
            let v = psi.generator_overlap_im(lam, gate, table);
            psi.apply_gate(gate, table, -theta);
            lam.apply_gate(gate, table, -theta);
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub best: Cut,
    pub best_value: f64,
    /// Basis index -> number of shots.
    pub counts: BTreeMap<u64, usize>,
}

/// Draws `shots` computational-basis samples and keeps the best cut.
pub fn sample_cuts(
    state: &StateVector,
    g: &Graph,
    shots: usize,
    seed: u64,
) -> Result<SampleResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let mut cdf = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let mut idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        // skip zero-probability slots the search may land on at ties
        while state.amps[idx].norm_sqr() == 0.0 && idx + 1 < cdf.len() {
            idx += 1;
        }
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    let mut best = VertexSubset::EMPTY;
    let mut best_value = f64::NEG_INFINITY;
    for &x in counts.keys() {
        let v = cut_value(g, VertexSubset(x));
        if v > best_value {
            best_value = v;
            best = VertexSubset(x);
        }
    }
    Ok(SampleResult {
        best,
        best_value,
        counts,
    })
}
