//! Trotter-step compilers (sequential, low-rank, average-cost), product
//! formulas and the Hamming-weight-2 reduction gadget.

use std::sync::Arc;

use serde::Serialize;

use crate::blockenc::{ceil_log2, phase_register_width, preparation_cost, qubitization_step_count, selection_cost};
use crate::circuit::{
    append_pauli_exponential, pauli_exponential_cost, BitMapFn, Circuit, DiagonalPhase, Gate, Permutation,
    MAX_DENSE_QUBITS,
};
use crate::decomp::{bisection_decompose, lowrank_decompose, Subdivision};
use crate::error::{Error, Result};
use crate::hamlib::{CoeffMatrix, HamiltonianSpec, Interval, NormKind, PauliKind, PauliPair, Rect};
use crate::lowrank::{far_block, truncated_svd, TruncatedFactor};

/// Order-`p` product formula over an arbitrary number of stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProductFormula {
    pub order: u32,
}

pub fn make_product_formula(p: u32) -> Result<ProductFormula> {
    match p {
        1 | 2 | 4 => Ok(ProductFormula { order: p }),
        _ => Err(Error::domain(format!("unsupported product-formula order {p}"))),
    }
}

impl ProductFormula {
    /// `(stage, fraction)` entries with 1-based stages, adjacent repeats merged.
    pub fn schedule(&self, stages: usize) -> Vec<(usize, f64)> {
        if stages == 0 {
            return Vec::new();
        }
        let strang = |scale: f64| -> Vec<(usize, f64)> {
            let mut out: Vec<(usize, f64)> = (1..stages).map(|s| (s, scale / 2.0)).collect();
            out.push((stages, scale));
            out.extend((1..stages).rev().map(|s| (s, scale / 2.0)));
            out
        };
        let raw = match self.order {
            1 => (1..=stages).map(|s| (s, 1.0)).collect(),
            2 => strang(1.0),
            _ => {
                let u = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
                [u, u, 1.0 - 4.0 * u, u, u].iter().flat_map(|&c| strang(c)).collect()
            }
        };
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
        for (s, f) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += f,
                _ => merged.push((s, f)),
            }
        }
        merged
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sequential,
    Lowrank,
    Avgcost,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Sequential => "sequential",
            Method::Lowrank => "lowrank",
            Method::Avgcost => "avgcost",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Build the gate list (dense cap applies).
    Verify,
    /// Only tally costs.
    CountOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompileConfig {
    pub t: f64,
    pub formula: ProductFormula,
    pub mode: Mode,
    /// Target accuracy entering the phase-register width and cell step counts.
    pub epsilon: f64,
}

impl CompileConfig {
    pub fn new(t: f64, p: u32, mode: Mode) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time slice {t} must be positive")));
        }
        Ok(CompileConfig { t, formula: make_product_formula(p)?, mode, epsilon: 1e-3 })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompositeRecord {
    pub kind: String,
    pub cost: u64,
}

#[derive(Clone, Debug)]
pub struct CompiledStep {
    /// Present in verify mode only.
    pub circuit: Option<Circuit>,
    pub gate_count: u64,
    pub method: Method,
    pub time_slice: f64,
    pub stages: usize,
    pub composites: Vec<CompositeRecord>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    method: Method,
    gates: u64,
    composites: &'a [CompositeRecord],
}

impl CompiledStep {
    /// `{"method":…,"gates":N,"composites":[{"kind":…,"cost":…}]}`.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string(&Sidecar { method: self.method, gates: self.gate_count, composites: &self.composites })
            .expect("serializable sidecar")
    }
}

/// Collects gates, or only their cost in count-only mode.
struct Emitter {
    circuit: Option<Circuit>,
    gates: u64,
    composites: Vec<CompositeRecord>,
}

impl Emitter {
    fn new(mode: Mode, qubits: usize, system: usize) -> Result<Self> {
        let circuit = match mode {
            Mode::Verify => {
                if qubits > MAX_DENSE_QUBITS {
                    return Err(Error::capacity(format!(
                        "{qubits} qubits exceed the verification cap of {MAX_DENSE_QUBITS}"
                    )));
                }
                Some(Circuit::new(qubits, system))
            }
            Mode::CountOnly => None,
        };
        Ok(Emitter { circuit, gates: 0, composites: Vec::new() })
    }

    fn gate(&mut self, g: Gate) {
        self.gates += g.cost();
        if let Some(c) = self.circuit.as_mut() {
            c.push(g);
        }
    }

    fn pauli_exp(&mut self, ops: &[(usize, PauliKind)], theta: f64) {
        self.gates += pauli_exponential_cost(ops);
        if let Some(c) = self.circuit.as_mut() {
            append_pauli_exponential(c, ops, theta);
        }
    }

    fn phase(&mut self, phi: f64) {
        if let Some(c) = self.circuit.as_mut() {
            c.global_phase += phi;
        }
    }

    fn composite(&mut self, kind: &str, cost: u64, build: impl FnOnce() -> Gate) {
        self.gates += cost;
        self.composites.push(CompositeRecord { kind: kind.into(), cost });
        if let Some(c) = self.circuit.as_mut() {
            c.push(build());
        }
    }

    /// Rotates `σ` on a qubit into `Z` (`inverse` rotates back).
    fn basis_change(&mut self, qubit: usize, sigma: PauliKind, inverse: bool) {
        match (sigma, inverse) {
            (PauliKind::X, _) => self.gate(Gate::Hadamard(qubit)),
            (PauliKind::Y, false) => {
                self.gate(Gate::PhaseS { qubit, adjoint: true });
                self.gate(Gate::Hadamard(qubit));
            }
            (PauliKind::Y, true) => {
                self.gate(Gate::Hadamard(qubit));
                self.gate(Gate::PhaseS { qubit, adjoint: false });
            }
            _ => {}
        }
    }

    fn finish(self, method: Method, time_slice: f64, stages: usize) -> CompiledStep {
        CompiledStep { circuit: self.circuit, gate_count: self.gates, method, time_slice, stages, composites: self.composites }
    }
}

/// A group of mutually commuting terms evolved as one unit.
enum Stage {
    Term { ops: Vec<(usize, PauliKind)>, coeff: f64 },
    Commuting { pair: PauliPair, terms: Vec<(usize, usize, f64)> },
    FarBlock { pair: PauliPair, left: Interval, right: Interval, factor: Arc<TruncatedFactor<f64>>, width: u32 },
    Cell { pair: PauliPair, rect: Rect, terms: Arc<Vec<(usize, usize, f64)>>, l1: f64, unit_cost: u64, eps: f64 },
}

fn pair_ops(pair: PauliPair, j: usize, k: usize) -> Vec<(usize, PauliKind)> {
    vec![(j - 1, pair.0), (k - 1, pair.1)]
}

/// Exact diagonal phase `−τ Σ β z_u z_v` on the sites listed in `qubits`.
fn zz_phase(qubits: &[usize], terms: &[(usize, usize, f64)], tau: f64) -> Arc<crate::circuit::PhaseFn> {
    let pos = |site: usize| qubits.iter().position(|q| *q == site - 1).expect("site in composite");
    let idx: Vec<(usize, usize, f64)> = terms.iter().map(|&(u, v, b)| (pos(u), pos(v), b)).collect();
    Arc::new(move |bits: &[bool]| {
        let z = |i: usize| if bits[i] { -1.0 } else { 1.0 };
        -tau * idx.iter().map(|&(a, b, beta)| beta * z(a) * z(b)).sum::<f64>()
    })
}

impl Stage {
    fn emit(&self, em: &mut Emitter, tau: f64) -> Result<()> {
        match self {
            Stage::Term { ops, coeff } => em.pauli_exp(ops, coeff * tau),
            Stage::Commuting { pair, terms } => {
                for &(j, k, b) in terms {
                    em.pauli_exp(&pair_ops(*pair, j, k), b * tau);
                }
            }
            Stage::FarBlock { pair, left, right, factor, width } => {
                let qubits: Vec<usize> = left.sites().chain(right.sites()).map(|s| s - 1).collect();
                let cost = left.len() as u64 * factor.rank as u64 * *width as u64;
                for s in left.sites() {
                    em.basis_change(s - 1, pair.0, false);
                }
                for s in right.sites() {
                    em.basis_change(s - 1, pair.1, false);
                }
                let (f, h) = (factor.clone(), left.len());
                let q = qubits.clone();
                em.composite("diagonal_phase", cost, move || {
                    let phase = Arc::new(move |bits: &[bool]| {
                        let z = |i: usize| if bits[i] { -1.0 } else { 1.0 };
                        let mut acc = 0.0;
                        for r in 0..f.rank {
                            let a: f64 = (0..h).map(|u| f.left.get(u, r) * z(u)).sum();
                            let b: f64 = (0..f.right.rows).map(|v| f.right.get(v, r) * z(h + v)).sum();
                            acc += f.singular[r] * a * b;
                        }
                        -tau * acc
                    });
                    Gate::DiagonalPhase(Arc::new(DiagonalPhase::new("far_block", q, cost, phase)))
                });
                for s in left.sites() {
                    em.basis_change(s - 1, pair.0, true);
                }
                for s in right.sites() {
                    em.basis_change(s - 1, pair.1, true);
                }
            }
            Stage::Cell { pair, rect, terms, l1, unit_cost, eps } => {
                let r = qubitization_step_count(l1 * tau.abs(), *eps)?;
                let cost = r * unit_cost;
                for s in rect.rows.sites() {
                    em.basis_change(s - 1, pair.0, false);
                }
                for s in rect.cols.sites() {
                    em.basis_change(s - 1, pair.1, false);
                }
                let qubits: Vec<usize> = rect.rows.sites().chain(rect.cols.sites()).map(|s| s - 1).collect();
                let terms = terms.clone();
                em.composite("diagonal_phase", cost, move || {
                    let phase = zz_phase(&qubits, &terms, tau);
                    Gate::DiagonalPhase(Arc::new(DiagonalPhase::new("cell", qubits, cost, phase)))
                });
                for s in rect.rows.sites() {
                    em.basis_change(s - 1, pair.0, true);
                }
                for s in rect.cols.sites() {
                    em.basis_change(s - 1, pair.1, true);
                }
            }
        }
        Ok(())
    }
}

fn on_site_stages(spec: &HamiltonianSpec<f64>) -> Vec<Stage> {
    let mut out = Vec::new();
    for (sigma, values) in spec.on_site() {
        for (i, v) in values.iter().enumerate() {
            if *v != 0.0 {
                out.push(Stage::Term { ops: vec![(i, *sigma)], coeff: *v });
            }
        }
    }
    out
}

fn run_formula(spec: &HamiltonianSpec<f64>, stages: &[Stage], cfg: &CompileConfig, method: Method) -> Result<CompiledStep> {
    let n = spec.n();
    let mut em = Emitter::new(cfg.mode, n, n)?;
    for (s, frac) in cfg.formula.schedule(stages.len()) {
        stages[s - 1].emit(&mut em, frac * cfg.t)?;
    }
    em.phase(-spec.identity() * cfg.t);
    Ok(em.finish(method, cfg.t, stages.len()))
}

/// One Pauli exponential per nonzero term per stage, terms in `(σ, σ', j, k)` order.
pub fn compile_sequential_step(spec: &HamiltonianSpec<f64>, cfg: &CompileConfig) -> Result<CompiledStep> {
    let mut stages: Vec<Stage> = Vec::with_capacity(spec.term_count());
    for (pair, m) in spec.two_local() {
        for (j, k, b) in m.entries() {
            if b != 0.0 {
                stages.push(Stage::Term { ops: pair_ops(*pair, j, k), coeff: b });
            }
        }
    }
    stages.extend(on_site_stages(spec));
    run_formula(spec, &stages, cfg, Method::Sequential)
}

fn upper_terms(m: &CoeffMatrix<f64>, rows: Interval, cols: Interval) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for j in rows.sites() {
        for k in cols.sites() {
            if j < k {
                let b = m.get(j, k);
                if b != 0.0 {
                    out.push((j, k, b));
                }
            }
        }
    }
    out
}

/// Far blocks become rank-`ρ` diagonal-phase composites; near and within blocks are sequential.
pub fn compile_lowrank_step(
    spec: &HamiltonianSpec<f64>,
    tol: f64,
    cutoff: usize,
    cfg: &CompileConfig,
) -> Result<CompiledStep> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let n = spec.n();
    let decomp = lowrank_decompose(n, cutoff)?;
    let width = phase_register_width(n, cfg.t, cfg.epsilon);
    let mut stages = Vec::new();
    for (pair, m) in spec.two_local() {
        let factors: Vec<Result<TruncatedFactor<f64>>> = {
            use rayon::prelude::*;
            decomp.far.par_iter().map(|b| truncated_svd(&far_block(m, b), tol)).collect()
        };
        for (b, f) in decomp.far.iter().zip(factors) {
            let f = f?;
            if f.rank > 0 {
                stages.push(Stage::FarBlock { pair: *pair, left: b.left, right: b.right, factor: Arc::new(f), width });
            }
        }
        for b in &decomp.near {
            let terms = upper_terms(m, b.left, b.right);
            if !terms.is_empty() {
                stages.push(Stage::Commuting { pair: *pair, terms });
            }
        }
        for iv in &decomp.within {
            for (j, k, b) in upper_terms(m, *iv, *iv) {
                stages.push(Stage::Term { ops: pair_ops(*pair, j, k), coeff: b });
            }
        }
    }
    stages.extend(on_site_stages(spec));
    run_formula(spec, &stages, cfg, Method::Lowrank)
}

/// Per-cell cost unit `select + prep` of the average-cost encoding.
pub fn cell_unit_cost(m: &CoeffMatrix<f64>, rect: Rect, width: u32) -> Result<u64> {
    let region = crate::hamlib::IndexRegion::single(rect);
    let one = m.norm(&NormKind::Restricted1(&region))?;
    let max = m.norm(&NormKind::RestrictedMax(&region))?;
    let ratio = if one > 0.0 { rect.area() as f64 * max / one } else { 1.0 };
    let sites = rect.rows.len() + rect.cols.len();
    Ok(selection_cost(sites) + preparation_cost(1, sites, width, ratio))
}

/// One exact diagonal-evolution composite per subdivision cell of every bisection block.
pub fn compile_avgcost_step(spec: &HamiltonianSpec<f64>, m: usize, cfg: &CompileConfig) -> Result<CompiledStep> {
    let n = spec.n();
    if m == 0 || m > n / 2 {
        return Err(Error::domain(format!("m = {m} outside 1..={}", n / 2)));
    }
    let decomp = bisection_decompose(n)?;
    let width = phase_register_width(n, cfg.t, cfg.epsilon);
    let eps_cell = cfg.epsilon / (m * m * n) as f64;
    let mut stages = Vec::new();
    for (pair, matrix) in spec.two_local() {
        for block in &decomp.pairs {
            let h = block.left.len();
            let sub = Subdivision::new(h, m.min(h))?;
            for rect in sub.cell_rects(block.left, block.right) {
                let terms = upper_terms(matrix, rect.rows, rect.cols);
                if terms.is_empty() {
                    continue;
                }
                let l1 = terms.iter().map(|t| t.2.abs()).sum();
                let unit_cost = cell_unit_cost(matrix, rect, width)?;
                stages.push(Stage::Cell { pair: *pair, rect, terms: Arc::new(terms), l1, unit_cost, eps: eps_cell });
            }
        }
    }
    stages.extend(on_site_stages(spec));
    run_formula(spec, &stages, cfg, Method::Avgcost)
}

/// Register layout of the Hamming-weight-2 reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetLayout {
    pub n: usize,
    pub index_bits: usize,
    /// Register `j` occupies qubits `0..index_bits`, storing `j − 1`.
    pub j: Vec<usize>,
    pub k: Vec<usize>,
    pub lt: usize,
    pub gt: usize,
    /// Unary register, qubit of site `u` at position `u − 1`.
    pub unary: Vec<usize>,
}

impl GadgetLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::domain(format!("n = {n} must be a power of 2, at least 2")));
        }
        let b = n.trailing_zeros() as usize;
        Ok(GadgetLayout {
            n,
            index_bits: b,
            j: (0..b).collect(),
            k: (b..2 * b).collect(),
            lt: 2 * b,
            gt: 2 * b + 1,
            unary: (2 * b + 2..2 * b + 2 + n).collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        2 * self.index_bits + 2 + self.n
    }

    /// Basis index of `|j⟩|k⟩` with every ancilla at zero (1-based `j`, `k`).
    pub fn input_index(&self, j: usize, k: usize) -> usize {
        (j - 1) | ((k - 1) << self.index_bits)
    }
}

#[derive(Clone, Debug)]
pub struct Hamming2Gadget {
    pub layout: GadgetLayout,
    pub circuit: Option<Circuit>,
    pub gate_count: u64,
    /// Gates inside the two ZZ-evolution blocks.
    pub zz_gates: u64,
}

impl Hamming2Gadget {
    pub fn overhead_gates(&self) -> u64 {
        self.gate_count - self.zz_gates
    }
}

fn read_reg(bits: &[bool]) -> usize {
    bits.iter().enumerate().fold(0, |acc, (i, b)| acc | (usize::from(*b) << i))
}

fn emit_zz_evolution(em: &mut Emitter, layout: &GadgetLayout, coeffs: &CoeffMatrix<f64>) -> u64 {
    let before = em.gates;
    let q = |u: usize| layout.unary[u - 1];
    for (u, v, b) in coeffs.entries() {
        em.pauli_exp(&[(q(u), PauliKind::Z), (q(v), PauliKind::Z)], b);
    }
    let zz = em.gates - before;
    // 4β n_u n_v = β(I − Z_u − Z_v + Z_u Z_v): single-Z and global corrections.
    for u in 1..=layout.n {
        let c: f64 = (1..=layout.n).filter(|v| *v != u).map(|v| coeffs.sym(u, v)).sum();
        if c != 0.0 {
            em.gate(Gate::PauliRotation { axis: PauliKind::Z, qubit: q(u), angle: -2.0 * c });
        }
    }
    em.phase(-coeffs.entries().iter().map(|e| e.2).sum::<f64>());
    zz
}

/// Applies `e^{−i4β_{j,k}}` to `|j⟩|k⟩` for `j ≠ k`, identity for `j = k`, ancillas restored.
pub fn compile_hamming2_reduction(coeffs: &CoeffMatrix<f64>, mode: Mode) -> Result<Hamming2Gadget> {
    let layout = GadgetLayout::new(coeffs.n())?;
    let b = layout.index_bits;
    let n = layout.n;
    let mut em = Emitter::new(mode, layout.qubits(), 2 * b)?;
    let lg = ceil_log2(n).max(1);

    let mut flag_qubits = layout.j.clone();
    flag_qubits.extend(&layout.k);
    flag_qubits.extend([layout.lt, layout.gt]);
    let ineq: Arc<BitMapFn> = Arc::new(move |i: &[bool], o: &mut [bool]| {
        o.copy_from_slice(i);
        let (j, k) = (read_reg(&i[..b]), read_reg(&i[b..2 * b]));
        o[2 * b] ^= j < k;
        o[2 * b + 1] ^= j > k;
    });
    let ineq_cost = 4 * b as u64;
    let ineq_gate = {
        let q = flag_qubits.clone();
        let f = ineq.clone();
        move || Gate::Permutation(Arc::new(Permutation::involution("inequality_test", q, ineq_cost, f)))
    };

    let mut conv_qubits = vec![layout.lt, layout.gt];
    conv_qubits.extend(&layout.j);
    conv_qubits.extend(&layout.k);
    conv_qubits.extend(&layout.unary);
    let convert = |flag: usize| -> Arc<BitMapFn> {
        Arc::new(move |i: &[bool], o: &mut [bool]| {
            o.copy_from_slice(i);
            if i[flag] {
                let (j, k) = (read_reg(&i[2..2 + b]), read_reg(&i[2 + b..2 + 2 * b]));
                o[2 + 2 * b + j] ^= true;
                o[2 + 2 * b + k] ^= true;
            }
        })
    };
    let conv_cost = 2 * n as u64 * lg;
    let conv_gate = |flag: usize| {
        let q = conv_qubits.clone();
        let f = convert(flag);
        move || Gate::Permutation(Arc::new(Permutation::involution("binary_to_unary", q, conv_cost, f)))
    };

    let mut swap_qubits = vec![layout.gt];
    swap_qubits.extend(&layout.j);
    swap_qubits.extend(&layout.k);
    let cswap: Arc<BitMapFn> = Arc::new(move |i: &[bool], o: &mut [bool]| {
        o.copy_from_slice(i);
        if i[0] {
            o[1..1 + b].copy_from_slice(&i[1 + b..1 + 2 * b]);
            o[1 + b..1 + 2 * b].copy_from_slice(&i[1..1 + b]);
        }
    });
    let swap_cost = 3 * b as u64;
    let swap_gate = || {
        let q = swap_qubits.clone();
        let f = cswap.clone();
        move || Gate::Permutation(Arc::new(Permutation::involution("controlled_swap", q, swap_cost, f)))
    };

    let mut zz_gates = 0;
    em.composite("permutation", ineq_cost, ineq_gate.clone());
    em.composite("permutation", conv_cost, conv_gate(0));
    zz_gates += emit_zz_evolution(&mut em, &layout, coeffs);
    em.composite("permutation", conv_cost, conv_gate(0));
    em.composite("permutation", swap_cost, swap_gate());
    em.composite("permutation", conv_cost, conv_gate(1));
    zz_gates += emit_zz_evolution(&mut em, &layout, coeffs);
    em.composite("permutation", conv_cost, conv_gate(1));
    em.composite("permutation", swap_cost, swap_gate());
    em.composite("permutation", ineq_cost, ineq_gate);
    Ok(Hamming2Gadget { layout, circuit: em.circuit, gate_count: em.gates, zz_gates })
}
