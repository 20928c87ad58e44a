//! Block encodings (LCU and boxed preparation), the qubitization walk operator
//! and the cost model used for block-encoded Trotter stages.
//!
//! Dense layouts put the ancilla index in the high part of the basis index:
//! `|a⟩ ⊗ |s⟩ ↦ a · dim_sys + s`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{spectral_norm, CMatrix, MAX_DENSE_QUBITS};
use crate::decomp::{nested_boxes, BoxGrid, IntervalPair};
use crate::error::{Error, Result};
use crate::hamlib::CoeffMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MAX_DIM: usize = 1 << MAX_DENSE_QUBITS;

/// `B = G1† U G0 = H / λ`.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    pub g0: CMatrix,
    pub g1: CMatrix,
    pub u: CMatrix,
    pub lambda: f64,
    pub hermitian: bool,
}

impl BlockEncoding {
    pub fn system_dim(&self) -> usize {
        self.g0.ncols()
    }

    pub fn encoded(&self) -> CMatrix {
        self.g1.adjoint() * &self.u * &self.g0
    }

    /// Largest of the isometry and unitarity residuals.
    pub fn residual(&self) -> f64 {
        let id = |d: usize| CMatrix::identity(d, d);
        let s = self.system_dim();
        let d = self.u.nrows();
        spectral_norm(&(self.g0.adjoint() * &self.g0 - id(s)))
            .max(spectral_norm(&(self.g1.adjoint() * &self.g1 - id(s))))
            .max(spectral_norm(&(self.u.adjoint() * &self.u - id(d))))
    }
}

fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && spectral_norm(&(m - m.adjoint())) <= tol
}

/// LCU encoding of `H = Σ β_γ U_γ` with `G = Σ √(β_γ/λ) |γ⟩ ⊗ I`, `λ = ‖β‖₁`.
pub fn build_lcu_encoding(terms: &[(f64, CMatrix)]) -> Result<BlockEncoding> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::validation("no terms"));
    };
    let sys = first.nrows();
    if terms.iter().any(|(w, _)| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::domain("weights must be positive and finite"));
    }
    if terms.iter().any(|(_, u)| u.nrows() != sys || u.ncols() != sys) {
        return Err(Error::Dimension("term matrices differ in shape".into()));
    }
    let anc = terms.len().next_power_of_two();
    if anc * sys > MAX_DIM {
        return Err(Error::capacity(format!("combined dimension {} exceeds 2^{MAX_DENSE_QUBITS}", anc * sys)));
    }
    let lambda: f64 = terms.iter().map(|(w, _)| w).sum();
    let mut g = CMatrix::zeros(anc * sys, sys);
    let mut u = CMatrix::identity(anc * sys, anc * sys);
    for (a, (w, ua)) in terms.iter().enumerate() {
        let amp = (w / lambda).sqrt();
        for s in 0..sys {
            g[(a * sys + s, s)] = Complex64::new(amp, 0.0);
        }
        u.view_mut((a * sys, a * sys), (sys, sys)).copy_from(ua);
    }
    let hermitian = terms.iter().all(|(_, ua)| is_hermitian(ua, 1e-10));
    Ok(BlockEncoding { g0: g.clone(), g1: g, u, lambda, hermitian })
}

/// `V = U'·(2Π'Π'† − I)` with the Hermitian `U' = (X⊗I)(|0⟩⟨0|⊗U + |1⟩⟨1|⊗U†)` and `Π' = |+⟩⊗G`.
#[derive(Clone, Debug)]
pub struct WalkOperator {
    pub v: CMatrix,
    /// Isometry `Π'` onto the encoding subspace.
    pub pi: CMatrix,
}

pub fn walk_operator(enc: &BlockEncoding) -> Result<WalkOperator> {
    if !enc.hermitian || !is_hermitian(&enc.encoded(), 1e-10) {
        return Err(Error::validation("walk operator needs a Hermitian encoding"));
    }
    if spectral_norm(&(&enc.g0 - &enc.g1)) > 1e-12 {
        return Err(Error::validation("walk operator needs G0 = G1"));
    }
    let d = enc.u.nrows();
    if 2 * d > MAX_DIM {
        return Err(Error::capacity("walk operator exceeds the dense cap"));
    }
    let s = enc.system_dim();
    let mut up = CMatrix::zeros(2 * d, 2 * d);
    up.view_mut((d, 0), (d, d)).copy_from(&enc.u);
    up.view_mut((0, d), (d, d)).copy_from(&enc.u.adjoint());
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut pi = CMatrix::zeros(2 * d, s);
    pi.view_mut((0, 0), (d, s)).copy_from(&(&enc.g0 * h));
    pi.view_mut((d, 0), (d, s)).copy_from(&(&enc.g0 * h));
    let refl = &pi * pi.adjoint() * Complex64::new(2.0, 0.0) - CMatrix::identity(2 * d, 2 * d);
    Ok(WalkOperator { v: up * refl, pi })
}

impl WalkOperator {
    /// Eigenphases in `(−π, π]` of `V` on `span{Π', VΠ'}`.
    pub fn relevant_phases(&self) -> Vec<f64> {
        let vp = &self.v * &self.pi;
        let s = self.pi.ncols();
        let mut k = CMatrix::zeros(self.v.nrows(), 2 * s);
        k.view_mut((0, 0), (self.v.nrows(), s)).copy_from(&self.pi);
        k.view_mut((0, s), (self.v.nrows(), s)).copy_from(&vp);
        let svd = k.svd(true, false);
        let u = svd.u.expect("left vectors");
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|i| svd.singular_values[*i] > 1e-7).collect();
        let q = CMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
        let small = q.adjoint() * &self.v * &q;
        let t = small.schur().unpack().1;
        (0..t.nrows()).map(|i| normalize_phase(t[(i, i)].arg())).collect()
    }
}

fn normalize_phase(p: f64) -> f64 {
    if p <= -std::f64::consts::PI + 1e-9 {
        std::f64::consts::PI
    } else {
        p
    }
}

/// `±arccos(E)` for each eigenvalue, with a single phase when `|E| = 1`.
pub fn expected_walk_phases(eigenvalues: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for &e in eigenvalues {
        let a = e.clamp(-1.0, 1.0).acos();
        if (1.0 - e.abs()) < 1e-9 {
            out.push(normalize_phase(a));
        } else {
            out.push(a);
            out.push(-a);
        }
    }
    out
}

/// Multiset distance between two phase lists, or `None` when sizes differ.
pub fn phase_multiset_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let sort = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        v
    };
    let (a, b) = (sort(a), sort(b));
    Some(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Smallest even `r ≥ max(2, e·τ + ln(1/ε))`.
pub fn qubitization_step_count(tau: f64, eps: f64) -> Result<u64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("effective time {tau} must be finite and nonnegative")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("epsilon = {eps} must lie in (0, 1)")));
    }
    let x = (std::f64::consts::E * tau + (1.0 / eps).ln()).max(2.0);
    let r = x.ceil() as u64;
    Ok(r + r % 2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreparationConfig {
    /// Inequality-test resolution; `None` is the exact limit.
    pub xi: Option<f64>,
    pub amplification_steps: u32,
}

impl PreparationConfig {
    pub fn exact() -> Self {
        PreparationConfig { xi: None, amplification_steps: 0 }
    }

    pub fn with_resolution(xi: f64) -> Result<Self> {
        if !(xi >= 2.0) || !xi.is_finite() {
            return Err(Error::domain(format!("resolution {xi} must be at least 2")));
        }
        Ok(PreparationConfig { xi: Some(xi), amplification_steps: 0 })
    }
}

/// Post-selected preparation state over the cells of one cross block.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxedPreparation {
    /// `(row site, column site)` of every cell, in state order.
    pub cells: Vec<(usize, usize)>,
    /// Post-selected amplitudes `√|β̃| / √‖β̃‖₁`.
    pub amplitudes: Vec<f64>,
    pub success_probability: f64,
    /// `Σ |β − β̃|`.
    pub encoding_error: f64,
    /// `‖β‖_{1,box} / ‖β‖₁`.
    pub ratio: f64,
    pub degenerate: bool,
    pub grid: BoxGrid,
}

impl BoxedPreparation {
    /// `⌈√ratio⌉` rounds of amplitude amplification.
    pub fn amplification_factor(&self) -> u64 {
        self.ratio.sqrt().ceil().max(1.0) as u64
    }
}

/// Simulates box-index, uniform-cell and inequality-test stages and post-selects.
pub fn build_boxed_preparation(
    matrix: &CoeffMatrix<f64>,
    pair: &IntervalPair,
    config: &PreparationConfig,
) -> Result<BoxedPreparation> {
    if let Some(xi) = config.xi {
        if !(xi >= 2.0) || !xi.is_finite() {
            return Err(Error::domain(format!("resolution {xi} must be at least 2")));
        }
    }
    let h = pair.left.len();
    if pair.right.len() != h || pair.left.hi + 1 != pair.right.lo {
        return Err(Error::validation("boxed preparation needs an adjacent cross block"));
    }
    let grid = if h >= 2 { nested_boxes(h)? } else { BoxGrid::build(h)? };
    let rects: Vec<_> = grid.boxes.iter().map(|b| grid.site_rect(b, pair.left, pair.right)).collect();
    let mut box_max = Vec::with_capacity(rects.len());
    for r in &rects {
        let m = r.rows.sites().flat_map(|u| r.cols.sites().map(move |v| (u, v))).map(|(u, v)| matrix.sym(u, v).abs()).fold(0.0, f64::max);
        box_max.push(m);
    }
    let box_norm: f64 = rects.iter().zip(&box_max).map(|(r, m)| r.area() as f64 * m).sum();
    let mut cells = Vec::new();
    let mut amplitudes = Vec::new();
    let mut encoding_error = 0.0;
    let mut exact_one = 0.0;
    if box_norm == 0.0 {
        return Ok(BoxedPreparation {
            cells,
            amplitudes,
            success_probability: 0.0,
            encoding_error,
            ratio: 1.0,
            degenerate: true,
            grid,
        });
    }
    for (r, &mx) in rects.iter().zip(&box_max) {
        let area = r.area() as f64;
        let box_amp = (area * mx / box_norm).sqrt();
        for u in r.rows.sites() {
            for v in r.cols.sites() {
                let b = matrix.sym(u, v).abs();
                exact_one += b;
                let accept = if mx == 0.0 {
                    0.0
                } else {
                    match config.xi {
                        None => b / mx,
                        Some(xi) => ((xi * b / mx).ceil() / xi).min(1.0),
                    }
                };
                encoding_error += (b - mx * accept).abs();
                cells.push((u, v));
                amplitudes.push(box_amp / area.sqrt() * accept.sqrt());
            }
        }
    }
    let success_probability: f64 = amplitudes.iter().map(|a| a * a).sum();
    let norm = success_probability.sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    Ok(BoxedPreparation {
        cells,
        amplitudes,
        success_probability,
        encoding_error,
        ratio: box_norm / exact_one,
        degenerate: false,
        grid,
    })
}

/// `Σ_idx |idx⟩⟨idx| ⊗ s_idx Z_u Z_v` on `qubits` system qubits; unused indices act as identity.
pub fn build_selection(cells: &[(usize, usize)], signs: &[f64], qubits: usize) -> Result<CMatrix> {
    if signs.len() != cells.len() {
        return Err(Error::validation("one sign per cell"));
    }
    if cells.iter().any(|&(u, v)| u == 0 || v == 0 || u > qubits || v > qubits || u == v) {
        return Err(Error::Index("cell sites must be distinct and in 1..=qubits".into()));
    }
    let sys = 1usize << qubits;
    let anc = cells.len().max(1).next_power_of_two();
    if anc * sys > MAX_DIM {
        return Err(Error::capacity("selection exceeds the dense cap"));
    }
    let mut m = CMatrix::identity(anc * sys, anc * sys);
    for (a, (&(u, v), &s)) in cells.iter().zip(signs).enumerate() {
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        for x in 0..sys {
            let parity = ((x >> (u - 1)) ^ (x >> (v - 1))) & 1;
            let val = if parity == 0 { sign } else { -sign };
            m[(a * sys + x, a * sys + x)] = Complex64::new(val, 0.0);
        }
    }
    Ok(m)
}

/// Encoding of a cross block's ZZ part from a preparation state and its selection.
pub fn boxed_block_encoding(matrix: &CoeffMatrix<f64>, prep: &BoxedPreparation, qubits: usize) -> Result<BlockEncoding> {
    if prep.degenerate {
        return Err(Error::validation("degenerate block has no encoding"));
    }
    let signs: Vec<f64> = prep.cells.iter().map(|&(u, v)| matrix.sym(u, v).signum()).collect();
    let u = build_selection(&prep.cells, &signs, qubits)?;
    let sys = 1usize << qubits;
    let anc = prep.cells.len().next_power_of_two();
    let mut g = CMatrix::zeros(anc * sys, sys);
    for (a, amp) in prep.amplitudes.iter().enumerate() {
        for s in 0..sys {
            g[(a * sys + s, s)] = Complex64::new(*amp, 0.0);
        }
    }
    let lambda: f64 = prep.cells.iter().map(|&(u, v)| matrix.sym(u, v).abs()).sum();
    Ok(BlockEncoding { g0: g.clone(), g1: g, u, lambda, hermitian: true })
}

/// `Σ_{cells} β_uv Z_u Z_v` as a dense matrix.
pub fn zz_block_matrix(matrix: &CoeffMatrix<f64>, cells: &[(usize, usize)], qubits: usize) -> CMatrix {
    let sys = 1usize << qubits;
    DMatrix::from_fn(sys, sys, |r, c| {
        if r != c {
            return ZERO;
        }
        let e: f64 = cells
            .iter()
            .map(|&(u, v)| {
                let parity = ((r >> (u - 1)) ^ (r >> (v - 1))) & 1;
                matrix.sym(u, v) * if parity == 0 { 1.0 } else { -1.0 }
            })
            .sum();
        ONE * e
    })
}

/// `⌈log₂ x⌉`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as u64
    }
}

/// Phase-register width `⌈log₂(n·t/ε)⌉ + 4`.
pub fn phase_register_width(n: usize, t: f64, eps: f64) -> u32 {
    let x = (n as f64 * t / eps).log2().ceil();
    (x.max(0.0) as u32) + 4
}

/// Selection over a block touching `sites` sites: `sites·⌈log₂ sites⌉`.
pub fn selection_cost(sites: usize) -> u64 {
    sites as u64 * ceil_log2(sites).max(1)
}

/// Preparation over `boxes` boxes of a block touching `sites` sites, amplified by `⌈√ratio⌉`.
///
/// Box amplitudes cost one gate per box; box-index and cell-index registers cost
/// `2⌈log₂ sites⌉` each; the coefficient oracle `2w²` and the inequality test `2w`.
pub fn preparation_cost(boxes: usize, sites: usize, w: u32, ratio: f64) -> u64 {
    let amp = ratio.sqrt().ceil().max(1.0) as u64;
    let w = w as u64;
    amp * (boxes as u64 + 4 * ceil_log2(sites).max(1) + 2 * w * w + 2 * w)
}
