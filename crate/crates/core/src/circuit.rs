//! Gate IR, dense simulator and distances between unitaries.
//!
//! Qubit `q` is bit `q` of a computational-basis index (qubit 0 least
//! significant). Site `j` of a Hamiltonian lives on qubit `j − 1`. Gates are
//! listed in application order, so the lowered unitary is `G_m ⋯ G_1`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamlib::{HamiltonianSpec, PauliKind};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

/// Largest qubit count that may be lowered to a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub type PhaseFn = dyn Fn(&[bool]) -> f64 + Send + Sync;
pub type BitMapFn = dyn Fn(&[bool], &mut [bool]) + Send + Sync;

/// Diagonal gate `|x⟩ ↦ e^{i·sign·φ(x)}|x⟩`, `x` the bits of `qubits` in order.
#[derive(Clone)]
pub struct DiagonalPhase {
    pub label: String,
    pub qubits: Vec<usize>,
    pub cost: u64,
    phase: Arc<PhaseFn>,
    sign: f64,
}

impl DiagonalPhase {
    pub fn new(label: impl Into<String>, qubits: Vec<usize>, cost: u64, phase: Arc<PhaseFn>) -> Self {
        DiagonalPhase { label: label.into(), qubits, cost, phase, sign: 1.0 }
    }

    pub fn phase_of(&self, bits: &[bool]) -> f64 {
        self.sign * (self.phase)(bits)
    }
}

/// Unitary mapping `|0…0⟩` to the normalized target amplitudes (Householder form).
#[derive(Clone, Debug)]
pub struct StatePrep {
    pub label: String,
    pub qubits: Vec<usize>,
    pub cost: u64,
    pub amplitudes: Vec<C64>,
    adjoint: bool,
}

impl StatePrep {
    pub fn new(label: impl Into<String>, qubits: Vec<usize>, cost: u64, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << qubits.len() {
            return Err(Error::validation("amplitude count must be 2^qubits"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::validation("target state must be nonzero and finite"));
        }
        let amplitudes = amplitudes.iter().map(|a| a / norm).collect();
        Ok(StatePrep { label: label.into(), qubits, cost, amplitudes, adjoint: false })
    }

    /// Dense unitary `U` with `U e₀ = ψ`.
    pub fn unitary(&self) -> CMatrix {
        let dim = self.amplitudes.len();
        let psi = &self.amplitudes;
        let phase = if psi[0].norm() > 0.0 { psi[0] / psi[0].norm() } else { ONE };
        // W = I − 2ww†/‖w‖² with w = e₀ − φ̄ψ maps e₀ to φ̄ψ.
        let mut w: Vec<C64> = psi.iter().map(|a| -a * phase.conj()).collect();
        w[0] += ONE;
        let wn: f64 = w.iter().map(|a| a.norm_sqr()).sum();
        let mut u = CMatrix::identity(dim, dim);
        if wn > 1e-300 {
            for r in 0..dim {
                for c in 0..dim {
                    u[(r, c)] -= w[r] * w[c].conj() * (2.0 / wn);
                }
            }
        }
        u *= phase;
        if self.adjoint {
            u.adjoint()
        } else {
            u
        }
    }
}

/// Reversible classical map on the bits of `qubits`.
#[derive(Clone)]
pub struct Permutation {
    pub label: String,
    pub qubits: Vec<usize>,
    pub cost: u64,
    forward: Arc<BitMapFn>,
    backward: Arc<BitMapFn>,
}

impl Permutation {
    pub fn new(
        label: impl Into<String>,
        qubits: Vec<usize>,
        cost: u64,
        forward: Arc<BitMapFn>,
        backward: Arc<BitMapFn>,
    ) -> Self {
        Permutation { label: label.into(), qubits, cost, forward, backward }
    }

    /// Self-inverse map.
    pub fn involution(label: impl Into<String>, qubits: Vec<usize>, cost: u64, map: Arc<BitMapFn>) -> Self {
        Self::new(label, qubits, cost, map.clone(), map)
    }
}

#[derive(Clone)]
pub enum Gate {
    /// `exp(−i·angle/2·P)` for `P ∈ {X, Y, Z}`.
    PauliRotation { axis: PauliKind, qubit: usize, angle: f64 },
    Hadamard(usize),
    PhaseS { qubit: usize, adjoint: bool },
    Cnot { ctrl: usize, tgt: usize },
    Cz(usize, usize),
    /// `diag(1, 1, 1, e^{i·angle})`.
    ControlledPhase { ctrl: usize, tgt: usize, angle: f64 },
    DiagonalPhase(Arc<DiagonalPhase>),
    StatePrep(Arc<StatePrep>),
    Permutation(Arc<Permutation>),
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text_line())
    }
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::PauliRotation { qubit, .. } | Gate::PhaseS { qubit, .. } | Gate::Hadamard(qubit) => vec![*qubit],
            Gate::Cnot { ctrl, tgt } | Gate::ControlledPhase { ctrl, tgt, .. } => vec![*ctrl, *tgt],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::DiagonalPhase(g) => g.qubits.clone(),
            Gate::StatePrep(g) => g.qubits.clone(),
            Gate::Permutation(g) => g.qubits.clone(),
        }
    }

    /// Primitive gates cost 1; composites carry their declared cost.
    pub fn cost(&self) -> u64 {
        match self {
            Gate::DiagonalPhase(g) => g.cost,
            Gate::StatePrep(g) => g.cost,
            Gate::Permutation(g) => g.cost,
            _ => 1,
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, Gate::DiagonalPhase(_) | Gate::StatePrep(_) | Gate::Permutation(_))
    }

    /// Composite kind name used in listings.
    pub fn composite_kind(&self) -> Option<&'static str> {
        match self {
            Gate::DiagonalPhase(_) => Some("diagonal_phase"),
            Gate::StatePrep(_) => Some("state_prep"),
            Gate::Permutation(_) => Some("permutation"),
            _ => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::PauliRotation { axis, qubit, angle } => {
                Gate::PauliRotation { axis: *axis, qubit: *qubit, angle: -angle }
            }
            Gate::PhaseS { qubit, adjoint } => Gate::PhaseS { qubit: *qubit, adjoint: !adjoint },
            Gate::ControlledPhase { ctrl, tgt, angle } => Gate::ControlledPhase { ctrl: *ctrl, tgt: *tgt, angle: -angle },
            Gate::DiagonalPhase(g) => {
                let mut inv = (**g).clone();
                inv.sign = -inv.sign;
                Gate::DiagonalPhase(Arc::new(inv))
            }
            Gate::StatePrep(g) => {
                let mut inv = (**g).clone();
                inv.adjoint = !inv.adjoint;
                Gate::StatePrep(Arc::new(inv))
            }
            Gate::Permutation(g) => {
                let mut inv = (**g).clone();
                std::mem::swap(&mut inv.forward, &mut inv.backward);
                Gate::Permutation(Arc::new(inv))
            }
            other => other.clone(),
        }
    }

    pub fn text_line(&self) -> String {
        let join = |q: &[usize]| q.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self {
            Gate::PauliRotation { axis, qubit, angle } => format!("R{} {qubit},{angle:e}", axis.symbol()),
            Gate::Hadamard(q) => format!("H {q}"),
            Gate::PhaseS { qubit, adjoint: false } => format!("S {qubit}"),
            Gate::PhaseS { qubit, adjoint: true } => format!("SDG {qubit}"),
            Gate::Cnot { ctrl, tgt } => format!("CNOT {ctrl},{tgt}"),
            Gate::Cz(a, b) => format!("CZ {a},{b}"),
            Gate::ControlledPhase { ctrl, tgt, angle } => format!("CPHASE {ctrl},{tgt},{angle:e}"),
            Gate::DiagonalPhase(g) => {
                format!("COMPOSITE diagonal_phase cost={} qubits={}", g.cost, join(&g.qubits))
            }
            Gate::StatePrep(g) => format!("COMPOSITE state_prep cost={} qubits={}", g.cost, join(&g.qubits)),
            Gate::Permutation(g) => format!("COMPOSITE permutation cost={} qubits={}", g.cost, join(&g.qubits)),
        }
    }
}

/// Ordered gate list on `qubit_count` qubits, the first `system_qubits` being the system register.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub qubit_count: usize,
    pub system_qubits: usize,
    pub gates: Vec<Gate>,
    /// The lowered unitary is multiplied by `e^{i·global_phase}`.
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(qubit_count: usize, system_qubits: usize) -> Self {
        assert!(system_qubits <= qubit_count);
        Circuit { qubit_count, system_qubits, gates: Vec::new(), global_phase: 0.0 }
    }

    pub fn push(&mut self, gate: Gate) {
        debug_assert!(gate.qubits().iter().all(|q| *q < self.qubit_count), "{gate:?}");
        self.gates.push(gate);
    }

    pub fn append(&mut self, other: &Circuit) {
        assert!(other.qubit_count <= self.qubit_count);
        self.gates.extend(other.gates.iter().cloned());
        self.global_phase += other.global_phase;
    }

    /// Checks qubit ranges, distinctness and finite angles.
    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let qs = g.qubits();
            if qs.iter().any(|q| *q >= self.qubit_count) {
                return Err(Error::validation(format!("gate {g:?} outside {} qubits", self.qubit_count)));
            }
            let mut sorted = qs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != qs.len() {
                return Err(Error::validation(format!("gate {g:?} repeats a qubit")));
            }
            let angle = match g {
                Gate::PauliRotation { angle, .. } | Gate::ControlledPhase { angle, .. } => *angle,
                _ => 0.0,
            };
            if !angle.is_finite() {
                return Err(Error::validation("non-finite angle"));
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            qubit_count: self.qubit_count,
            system_qubits: self.system_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            global_phase: -self.global_phase,
        }
    }

    /// Sum of gate costs.
    pub fn gate_count(&self) -> u64 {
        self.gates.iter().map(Gate::cost).sum()
    }

    /// Line-per-gate listing preceded by `#` header lines.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# qubits={} system={}\n# global_phase={:e}\n",
            self.qubit_count, self.system_qubits, self.global_phase
        );
        for g in &self.gates {
            out.push_str(&g.text_line());
            out.push('\n');
        }
        out
    }
}

/// A parsed line of the circuit text format.
#[derive(Clone, Debug, PartialEq)]
pub enum GateLine {
    Primitive { name: String, qubits: Vec<usize>, angle: Option<f64> },
    Composite { kind: String, cost: u64, qubits: Vec<usize> },
}

/// Parses a circuit listing; header comments are skipped.
pub fn parse_circuit_text(text: &str) -> Result<Vec<GateLine>> {
    let bad = |line: &str| Error::validation(format!("malformed circuit line {line:?}"));
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (name, rest) = line.split_once(' ').ok_or_else(|| bad(line))?;
        if name == "COMPOSITE" {
            let mut parts = rest.split_whitespace();
            let kind = parts.next().ok_or_else(|| bad(line))?.to_string();
            let cost = parts
                .next()
                .and_then(|p| p.strip_prefix("cost="))
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(line))?;
            let qubits = parts
                .next()
                .and_then(|p| p.strip_prefix("qubits="))
                .map(|q| q.split(',').filter(|s| !s.is_empty()).map(str::parse).collect::<std::result::Result<Vec<usize>, _>>())
                .ok_or_else(|| bad(line))?
                .map_err(|_| bad(line))?;
            out.push(GateLine::Composite { kind, cost, qubits });
        } else {
            let fields: Vec<&str> = rest.split(',').collect();
            let arity = match name {
                "H" | "S" | "SDG" => 1,
                "CNOT" | "CZ" => 2,
                "RX" | "RY" | "RZ" => 1,
                "CPHASE" => 2,
                _ => return Err(bad(line)),
            };
            let has_angle = matches!(name, "RX" | "RY" | "RZ" | "CPHASE");
            if fields.len() != arity + usize::from(has_angle) {
                return Err(bad(line));
            }
            let qubits = fields[..arity]
                .iter()
                .map(|s| s.parse::<usize>().map_err(|_| bad(line)))
                .collect::<Result<Vec<_>>>()?;
            let angle = if has_angle { Some(fields[arity].parse::<f64>().map_err(|_| bad(line))?) } else { None };
            out.push(GateLine::Primitive { name: name.to_string(), qubits, angle });
        }
    }
    Ok(out)
}

fn gather(index: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (i, q)| acc | (((index >> q) & 1) << i))
}

fn scatter(sub: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (i, q)| acc | (((sub >> i) & 1) << q))
}

fn bits_of(sub: usize, k: usize) -> Vec<bool> {
    (0..k).map(|i| (sub >> i) & 1 == 1).collect()
}

fn from_bits(bits: &[bool]) -> usize {
    bits.iter().enumerate().fold(0, |acc, (i, b)| acc | (usize::from(*b) << i))
}

/// A gate with its action tabulated for fast repeated application.
enum Prepared {
    Single { q: usize, m: [[C64; 2]; 2] },
    Cnot { c: usize, t: usize },
    Phase11 { a: usize, b: usize, phase: C64 },
    Diagonal { qubits: Vec<usize>, table: Vec<C64> },
    Dense { qubits: Vec<usize>, u: CMatrix },
    Perm { qubits: Vec<usize>, table: Vec<usize> },
}

fn prepare(gate: &Gate) -> Prepared {
    let s = FRAC_1_SQRT_2;
    match gate {
        Gate::PauliRotation { axis, qubit, angle } => {
            let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let m = match axis {
                PauliKind::X => [[C64::new(c, 0.0), C64::new(0.0, -sn)], [C64::new(0.0, -sn), C64::new(c, 0.0)]],
                PauliKind::Y => [[C64::new(c, 0.0), C64::new(-sn, 0.0)], [C64::new(sn, 0.0), C64::new(c, 0.0)]],
                PauliKind::Z => [[C64::new(c, -sn), ZERO], [ZERO, C64::new(c, sn)]],
                PauliKind::I => [[C64::new(c, -sn), ZERO], [ZERO, C64::new(c, -sn)]],
            };
            Prepared::Single { q: *qubit, m }
        }
        Gate::Hadamard(q) => Prepared::Single { q: *q, m: [[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]] },
        Gate::PhaseS { qubit, adjoint } => {
            let p = if *adjoint { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
            Prepared::Single { q: *qubit, m: [[ONE, ZERO], [ZERO, p]] }
        }
        Gate::Cnot { ctrl, tgt } => Prepared::Cnot { c: *ctrl, t: *tgt },
        Gate::Cz(a, b) => Prepared::Phase11 { a: *a, b: *b, phase: -ONE },
        Gate::ControlledPhase { ctrl, tgt, angle } => {
            Prepared::Phase11 { a: *ctrl, b: *tgt, phase: C64::from_polar(1.0, *angle) }
        }
        Gate::DiagonalPhase(g) => {
            let k = g.qubits.len();
            let table = (0..1usize << k).map(|x| C64::from_polar(1.0, g.phase_of(&bits_of(x, k)))).collect();
            Prepared::Diagonal { qubits: g.qubits.clone(), table }
        }
        Gate::StatePrep(g) => Prepared::Dense { qubits: g.qubits.clone(), u: g.unitary() },
        Gate::Permutation(g) => {
            let k = g.qubits.len();
            let mut out = vec![false; k];
            let table = (0..1usize << k)
                .map(|x| {
                    (g.forward)(&bits_of(x, k), &mut out);
                    from_bits(&out)
                })
                .collect();
            Prepared::Perm { qubits: g.qubits.clone(), table }
        }
    }
}

fn apply_prepared(p: &Prepared, amps: &mut [C64]) {
    let dim = amps.len();
    match p {
        Prepared::Single { q, m } => {
            let bit = 1 << q;
            for i in 0..dim {
                if i & bit == 0 {
                    let (a, b) = (amps[i], amps[i | bit]);
                    amps[i] = m[0][0] * a + m[0][1] * b;
                    amps[i | bit] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
        Prepared::Cnot { c, t } => {
            let (cb, tb) = (1 << c, 1 << t);
            for i in 0..dim {
                if i & cb != 0 && i & tb == 0 {
                    amps.swap(i, i | tb);
                }
            }
        }
        Prepared::Phase11 { a, b, phase } => {
            let mask = (1 << a) | (1 << b);
            for (i, x) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *x *= phase;
                }
            }
        }
        Prepared::Diagonal { qubits, table } => {
            for (i, x) in amps.iter_mut().enumerate() {
                *x *= table[gather(i, qubits)];
            }
        }
        Prepared::Dense { qubits, u } => {
            let mask = scatter((1 << qubits.len()) - 1, qubits);
            let k = 1usize << qubits.len();
            let offsets: Vec<usize> = (0..k).map(|s| scatter(s, qubits)).collect();
            let mut buf = vec![ZERO; k];
            for base in (0..dim).filter(|i| i & mask == 0) {
                for (s, o) in offsets.iter().enumerate() {
                    buf[s] = amps[base | o];
                }
                for (r, o) in offsets.iter().enumerate() {
                    amps[base | o] = (0..k).map(|c| u[(r, c)] * buf[c]).sum();
                }
            }
        }
        Prepared::Perm { qubits, table } => {
            let mask = scatter((1 << qubits.len()) - 1, qubits);
            let old = amps.to_vec();
            for (i, a) in old.into_iter().enumerate() {
                let j = (i & !mask) | scatter(table[gather(i, qubits)], qubits);
                amps[j] = a;
            }
        }
    }
}

/// Statevector on up to [`MAX_DENSE_QUBITS`] qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub qubits: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        if qubits > MAX_DENSE_QUBITS {
            return Err(Error::capacity(format!("{qubits} qubits exceed the dense cap")));
        }
        let mut amps = vec![ZERO; 1 << qubits];
        amps[index] = ONE;
        Ok(StateVector { qubits, amps })
    }

    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.qubit_count != self.qubits {
            return Err(Error::validation("circuit and state qubit counts differ"));
        }
        for g in &circuit.gates {
            apply_prepared(&prepare(g), &mut self.amps);
        }
        let ph = C64::from_polar(1.0, circuit.global_phase);
        self.amps.iter_mut().for_each(|a| *a *= ph);
        Ok(())
    }
}

/// Dense unitary of a circuit.
pub fn circuit_to_unitary(c: &Circuit) -> Result<CMatrix> {
    if c.qubit_count > MAX_DENSE_QUBITS {
        return Err(Error::capacity(format!("{} qubits exceed the dense cap of {MAX_DENSE_QUBITS}", c.qubit_count)));
    }
    c.validate()?;
    let dim = 1usize << c.qubit_count;
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|j| {
            let mut v = vec![ZERO; dim];
            v[j] = ONE;
            v
        })
        .collect();
    for g in &c.gates {
        let p = prepare(g);
        cols.par_iter_mut().for_each(|col| apply_prepared(&p, col));
    }
    let ph = C64::from_polar(1.0, c.global_phase);
    Ok(CMatrix::from_fn(dim, dim, |r, j| cols[j][r] * ph))
}

/// Action of a Pauli string on a basis index: `P|x⟩ = phase·|x ⊕ flip⟩`.
fn pauli_action(ops: &[(usize, PauliKind)], x: usize) -> (usize, C64) {
    let mut y = x;
    let mut phase = ONE;
    for &(q, p) in ops {
        let bit = (x >> q) & 1;
        match p {
            PauliKind::I => {}
            PauliKind::X => y ^= 1 << q,
            PauliKind::Y => {
                y ^= 1 << q;
                phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
            }
            PauliKind::Z => {
                if bit == 1 {
                    phase = -phase;
                }
            }
        }
    }
    (y, phase)
}

/// Dense matrix of a Pauli string given as `(qubit, kind)` pairs.
pub fn pauli_matrix(qubits: usize, ops: &[(usize, PauliKind)]) -> CMatrix {
    let dim = 1 << qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let (y, ph) = pauli_action(ops, x);
        m[(y, x)] += ph;
    }
    m
}

/// Dense Hamiltonian matrix of a spec, site `j` on qubit `j − 1`.
pub fn hamiltonian_matrix(spec: &HamiltonianSpec<f64>) -> Result<CMatrix> {
    let n = spec.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::capacity(format!("{n} sites exceed the dense cap")));
    }
    let dim = 1 << n;
    let mut h = CMatrix::identity(dim, dim) * C64::new(spec.identity(), 0.0);
    for term in spec.terms() {
        let ops: Vec<_> = term.ops.iter().map(|(s, p)| (s - 1, *p)).collect();
        for x in 0..dim {
            let (y, ph) = pauli_action(&ops, x);
            h[(y, x)] += ph * term.coeff;
        }
    }
    Ok(h)
}

/// `e^{−itH}` for a Hermitian matrix, by eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    v * d * v.adjoint()
}

/// `e^{−itH}` of a spec.
pub fn exact_evolution(spec: &HamiltonianSpec<f64>, t: f64) -> Result<CMatrix> {
    Ok(hermitian_exp(&hamiltonian_matrix(spec)?, t))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = m.adjoint() * m;
    let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    g.symmetric_eigenvalues().iter().fold(0.0f64, |a, b| a.max(*b)).max(0.0).sqrt()
}

fn check_shapes(u: &CMatrix, v: &CMatrix) -> Result<()> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::validation("matrices must be square with equal shapes"));
    }
    Ok(())
}

pub fn spectral_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    check_shapes(u, v)?;
    Ok(spectral_norm(&(u - v)))
}

/// `min_φ ‖U − e^{iφ}V‖`, golden-section search around `arg tr(V†U)`.
pub fn phase_minimized_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    check_shapes(u, v)?;
    let center = (v.adjoint() * u).trace().arg();
    let f = |phi: f64| spectral_norm(&(u - v * C64::from_polar(1.0, phi)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (center - 1.0, center + 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    Ok(fc.min(fd).min(f(center)))
}

/// Projector onto the Hamming-weight-η subspace of `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceProjector {
    pub n: usize,
    pub eta: usize,
    pub indices: Vec<usize>,
}

impl SubspaceProjector {
    pub fn new(n: usize, eta: usize) -> Result<Self> {
        if eta > n {
            return Err(Error::domain(format!("eta = {eta} exceeds n = {n}")));
        }
        let indices = (0..1usize << n).filter(|x| x.count_ones() as usize == eta).collect();
        Ok(SubspaceProjector { n, eta, indices })
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn matrix(&self) -> CMatrix {
        let mut p = CMatrix::zeros(1 << self.n, 1 << self.n);
        for &i in &self.indices {
            p[(i, i)] = ONE;
        }
        p
    }

    /// Restriction `P M P` as a `rank × rank` matrix.
    pub fn restrict(&self, m: &CMatrix) -> CMatrix {
        let r = self.rank();
        CMatrix::from_fn(r, r, |a, b| m[(self.indices[a], self.indices[b])])
    }
}

pub fn subspace_distance(u: &CMatrix, v: &CMatrix, eta: usize) -> Result<f64> {
    check_shapes(u, v)?;
    let n = u.nrows().trailing_zeros() as usize;
    if 1 << n != u.nrows() {
        return Err(Error::validation("dimension is not a power of two"));
    }
    let p = SubspaceProjector::new(n, eta)?;
    Ok(spectral_norm(&p.restrict(&(u - v))))
}

/// `‖U†U − I‖`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    spectral_norm(&(u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols())))
}

/// Appends `exp(−iθ P)` for a Pauli string on 0-based qubits.
pub fn append_pauli_exponential(c: &mut Circuit, string: &[(usize, PauliKind)], theta: f64) {
    let ops: Vec<(usize, PauliKind)> = string.iter().copied().filter(|(_, p)| *p != PauliKind::I).collect();
    if ops.is_empty() {
        c.global_phase -= theta;
        return;
    }
    for &(q, p) in &ops {
        match p {
            PauliKind::X => c.push(Gate::Hadamard(q)),
            PauliKind::Y => {
                c.push(Gate::PhaseS { qubit: q, adjoint: true });
                c.push(Gate::Hadamard(q));
            }
            _ => {}
        }
    }
    for w in ops.windows(2) {
        c.push(Gate::Cnot { ctrl: w[0].0, tgt: w[1].0 });
    }
    let last = ops[ops.len() - 1].0;
    c.push(Gate::PauliRotation { axis: PauliKind::Z, qubit: last, angle: 2.0 * theta });
    for w in ops.windows(2).rev() {
        c.push(Gate::Cnot { ctrl: w[0].0, tgt: w[1].0 });
    }
    for &(q, p) in &ops {
        match p {
            PauliKind::X => c.push(Gate::Hadamard(q)),
            PauliKind::Y => {
                c.push(Gate::Hadamard(q));
                c.push(Gate::PhaseS { qubit: q, adjoint: false });
            }
            _ => {}
        }
    }
}

/// Gate cost of [`append_pauli_exponential`] without building it.
pub fn pauli_exponential_cost(string: &[(usize, PauliKind)]) -> u64 {
    let ops: Vec<_> = string.iter().filter(|(_, p)| *p != PauliKind::I).collect();
    if ops.is_empty() {
        return 0;
    }
    let basis: u64 = ops
        .iter()
        .map(|(_, p)| match p {
            PauliKind::X => 2,
            PauliKind::Y => 4,
            _ => 0,
        })
        .sum();
    basis + 2 * (ops.len() as u64 - 1) + 1
}

/// Circuit for `exp(−iθ P)` on `max qubit + 1` qubits.
pub fn pauli_string_exponential(string: &[(usize, PauliKind)], theta: f64) -> Result<Circuit> {
    if string.is_empty() {
        return Err(Error::validation("empty Pauli string"));
    }
    let mut qs: Vec<usize> = string.iter().map(|(q, _)| *q).collect();
    qs.sort_unstable();
    if qs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation("duplicate qubit in Pauli string"));
    }
    if !theta.is_finite() {
        return Err(Error::validation("non-finite angle"));
    }
    let n = qs[qs.len() - 1] + 1;
    let mut c = Circuit::new(n, n);
    append_pauli_exponential(&mut c, string, theta);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamlib::{build_power_law, CoeffMatrix, SignRule};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        spectral_norm(&(a - b)) <= tol
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_to_unitary(&Circuit::new(2, 2)).unwrap();
        assert!(close(&u, &CMatrix::identity(4, 4), 1e-15));
    }

    #[test]
    fn cnot_twice_is_identity() {
        let mut c = Circuit::new(2, 2);
        c.push(Gate::Cnot { ctrl: 0, tgt: 1 });
        c.push(Gate::Cnot { ctrl: 0, tgt: 1 });
        assert!(close(&circuit_to_unitary(&c).unwrap(), &CMatrix::identity(4, 4), 1e-15));
    }

    #[test]
    fn cnot_rz_cnot_is_zz_phase() {
        let theta = 0.37;
        let mut c = Circuit::new(2, 2);
        c.push(Gate::Cnot { ctrl: 0, tgt: 1 });
        c.push(Gate::PauliRotation { axis: PauliKind::Z, qubit: 1, angle: 2.0 * theta });
        c.push(Gate::Cnot { ctrl: 0, tgt: 1 });
        let u = circuit_to_unitary(&c).unwrap();
        let e = |s: f64| C64::from_polar(1.0, s * theta);
        let want = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![e(-1.0), e(1.0), e(1.0), e(-1.0)]));
        assert!(close(&u, &want, 1e-14));
    }

    #[test]
    fn capacity_cap() {
        assert!(matches!(circuit_to_unitary(&Circuit::new(15, 15)), Err(Error::Capacity(_))));
    }

    #[test]
    fn x_exponential_is_rx() {
        let theta = 0.8;
        let c = pauli_string_exponential(&[(0, PauliKind::X)], theta).unwrap();
        let mut rx = Circuit::new(1, 1);
        rx.push(Gate::PauliRotation { axis: PauliKind::X, qubit: 0, angle: 2.0 * theta });
        assert!(close(&circuit_to_unitary(&c).unwrap(), &circuit_to_unitary(&rx).unwrap(), 1e-14));
        assert_eq!(c.gate_count(), pauli_exponential_cost(&[(0, PauliKind::X)]));
    }

    #[test]
    fn pauli_exponentials_match_matrix_exponential() {
        let strings: Vec<Vec<(usize, PauliKind)>> = vec![
            vec![(0, PauliKind::Z), (1, PauliKind::Z)],
            vec![(0, PauliKind::X), (2, PauliKind::Y)],
            vec![(1, PauliKind::Y), (0, PauliKind::Z), (2, PauliKind::X)],
        ];
        for s in strings {
            let theta = 0.61;
            let c = pauli_string_exponential(&s, theta).unwrap();
            let p = pauli_matrix(c.qubit_count, &s);
            let want = (p * C64::new(0.0, -theta)).exp();
            assert!(close(&circuit_to_unitary(&c).unwrap(), &want, 1e-12));
            assert_eq!(c.gate_count(), pauli_exponential_cost(&s));
        }
        let zero = pauli_string_exponential(&[(0, PauliKind::Z)], 0.0).unwrap();
        assert!(close(&circuit_to_unitary(&zero).unwrap(), &CMatrix::identity(2, 2), 1e-15));
        assert!(pauli_string_exponential(&[(0, PauliKind::Z), (0, PauliKind::X)], 0.1).is_err());
        assert!(pauli_string_exponential(&[], 0.1).is_err());
    }

    #[test]
    fn exact_evolution_of_single_z() {
        let spec = HamiltonianSpec::<f64>::new(1, 1).unwrap().with_on_site(PauliKind::Z, vec![1.0]).unwrap();
        let u = exact_evolution(&spec, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::new(0.0, 1.0)).norm() < 1e-14);
        let zero = HamiltonianSpec::<f64>::new(3, 1).unwrap();
        assert!(close(&exact_evolution(&zero, 1.0).unwrap(), &CMatrix::identity(8, 8), 1e-14));
    }

    #[test]
    fn exact_evolution_matches_pade() {
        let spec = build_power_law::<f64>(3, 1, 1.0, (PauliKind::Z, PauliKind::Z), SignRule::AllPositive)
            .unwrap()
            .with_on_site(PauliKind::X, vec![0.3, -0.2, 0.5])
            .unwrap();
        let h = hamiltonian_matrix(&spec).unwrap();
        let pade = (h * C64::new(0.0, -0.3)).exp();
        assert!(close(&exact_evolution(&spec, 0.3).unwrap(), &pade, 1e-9));
    }

    #[test]
    fn distances() {
        let u = circuit_to_unitary(&pauli_string_exponential(&[(0, PauliKind::X), (1, PauliKind::Z)], 0.4).unwrap()).unwrap();
        assert!(spectral_distance(&u, &u).unwrap() < 1e-15);
        let phi = 0.7;
        let v = &u * C64::from_polar(1.0, phi);
        let d = spectral_distance(&v, &u).unwrap();
        assert!((d - 2.0 * (phi / 2.0).sin().abs()).abs() < 1e-12);
        assert!(phase_minimized_distance(&v, &u).unwrap() < 1e-6);
        let mut w = CMatrix::identity(4, 4);
        w[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(subspace_distance(&w, &CMatrix::identity(4, 4), 1).unwrap() < 1e-15);
        assert!(spectral_distance(&w, &CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let table = Arc::new(|bits: &[bool]| if bits[0] && bits[1] { 0.3 } else { -0.1 });
        let flip: Arc<BitMapFn> = Arc::new(|i: &[bool], o: &mut [bool]| {
            o[0] = i[0] ^ i[1];
            o[1] = i[1];
        });
        let mut c = Circuit::new(3, 3);
        c.push(Gate::Hadamard(0));
        c.push(Gate::PhaseS { qubit: 1, adjoint: false });
        c.push(Gate::ControlledPhase { ctrl: 0, tgt: 2, angle: 0.4 });
        c.push(Gate::DiagonalPhase(Arc::new(DiagonalPhase::new("t", vec![2, 0], 5, table))));
        c.push(Gate::Permutation(Arc::new(Permutation::involution("x", vec![1, 2], 2, flip))));
        let prep = StatePrep::new("p", vec![0, 1], 4, vec![C64::new(0.5, 0.1), C64::new(-0.2, 0.3), ONE, C64::new(0.0, 0.4)]).unwrap();
        c.push(Gate::StatePrep(Arc::new(prep)));
        c.global_phase = 0.2;
        let mut both = c.clone();
        both.append(&c.inverse());
        let u = circuit_to_unitary(&both).unwrap();
        assert!(close(&u, &CMatrix::identity(8, 8), 1e-12));
        assert!(unitarity_residual(&circuit_to_unitary(&c).unwrap()) < 1e-12);
        assert_eq!(c.gate_count(), 3 + 5 + 2 + 4);
    }

    #[test]
    fn state_prep_maps_zero_to_target() {
        let amps = vec![C64::new(0.0, 0.0), C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO];
        let p = StatePrep::new("p", vec![0, 1], 1, amps.clone()).unwrap();
        let u = p.unitary();
        for (r, a) in amps.iter().enumerate() {
            assert!((u[(r, 0)] - a).norm() < 1e-14);
        }
    }

    #[test]
    fn text_round_trip() {
        let mut c = pauli_string_exponential(&[(0, PauliKind::Y), (2, PauliKind::X)], 0.25).unwrap();
        c.push(Gate::ControlledPhase { ctrl: 0, tgt: 1, angle: -1.5e-3 });
        c.push(Gate::DiagonalPhase(Arc::new(DiagonalPhase::new("d", vec![0, 1], 7, Arc::new(|_: &[bool]| 0.0)))));
        let text = c.to_text();
        let lines = parse_circuit_text(&text).unwrap();
        assert_eq!(lines.len(), c.gates.len());
        assert_eq!(lines.last().unwrap(), &GateLine::Composite { kind: "diagonal_phase".into(), cost: 7, qubits: vec![0, 1] });
        match &lines[lines.len() - 2] {
            GateLine::Primitive { name, angle, .. } => {
                assert_eq!(name, "CPHASE");
                assert_eq!(*angle, Some(-1.5e-3));
            }
            _ => panic!(),
        }
        assert!(parse_circuit_text("FOO 1").is_err());
    }

    #[test]
    fn projector_rank() {
        let p = SubspaceProjector::new(5, 2).unwrap();
        assert_eq!(p.rank(), 10);
        let m = p.matrix();
        assert!(close(&(&m * &m), &m, 0.0));
        let _unused: CoeffMatrix<f64> = CoeffMatrix::zeros_upper(2);
    }
}
