//! Divide-and-conquer recurrences and per-step gate-count scaling reports.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::blockenc::{phase_register_width, preparation_cost, qubitization_step_count, selection_cost};
use crate::circuit::{parse_circuit_text, GateLine};
use crate::compilers::{compile_avgcost_step, compile_lowrank_step, compile_sequential_step, CompileConfig, Mode};
use crate::decomp::{bisection_decompose, block_ratio, nested_boxes, BoxGrid, LowRankDecomposition};
use crate::error::{Error, Result};
use crate::hamlib::{build_power_law, HamiltonianSpec, NormKind, PauliKind, SignRule};
use crate::lowrank::rank_profile;

pub type CostFn = dyn Fn(u64) -> f64 + Send + Sync;

/// `cost_rec(n) = m1·cost_rec(⌊n/m⌋) + m2·cost_rec(⌈n/m⌉) + cost(n)`, `cost_rec(n) = c0` for `n < n0`.
#[derive(Clone)]
pub struct Recurrence {
    pub c0: f64,
    pub n0: u64,
    pub m1: u32,
    pub m2: u32,
    pub m: u64,
    pub cost: Arc<CostFn>,
    /// `(α, k)` with `cost(n) = O(n^α log^k n)`.
    pub declared: Option<(f64, u32)>,
}

impl Recurrence {
    pub fn new(c0: f64, n0: u64, m1: u32, m2: u32, m: u64, cost: Arc<CostFn>) -> Result<Self> {
        if !(c0 >= 0.0) || n0 < 2 || m < 2 || m1 + m2 == 0 {
            return Err(Error::domain("need c0 >= 0, n0 >= 2, m >= 2 and m1 + m2 > 0"));
        }
        Ok(Recurrence { c0, n0, m1, m2, m, cost, declared: None })
    }

    pub fn with_declared(mut self, alpha: f64, k: u32) -> Self {
        self.declared = Some((alpha, k));
        self
    }
}

/// Memoized evaluation of the recursion as an equality.
pub fn solve_recurrence_numeric(rec: &Recurrence, n: u64) -> f64 {
    fn go(rec: &Recurrence, n: u64, memo: &mut HashMap<u64, f64>) -> f64 {
        if n < rec.n0 {
            return rec.c0;
        }
        if let Some(v) = memo.get(&n) {
            return *v;
        }
        let lo = n / rec.m;
        let hi = n.div_ceil(rec.m);
        let mut v = (rec.cost)(n);
        if rec.m1 > 0 {
            v += rec.m1 as f64 * go(rec, lo, memo);
        }
        if rec.m2 > 0 {
            v += rec.m2 as f64 * go(rec, hi, memo);
        }
        memo.insert(n, v);
        v
    }
    go(rec, n, &mut HashMap::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecurrenceCase {
    /// `α < log_m(m1+m2)`: `n^{log_m(m1+m2)}`.
    Bottom,
    /// `α = log_m(m1+m2)`: `n^α log^{k+1} n`.
    Boundary,
    /// `α > log_m(m1+m2)`: `n^α log^k n`.
    Top,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticClass {
    pub case: RecurrenceCase,
    pub exponent: f64,
    pub log_power: u32,
}

impl AsymptoticClass {
    pub fn eval(&self, n: f64) -> f64 {
        n.powf(self.exponent) * n.log2().max(1.0).powi(self.log_power as i32)
    }
}

pub fn classify_recurrence(rec: &Recurrence) -> Result<AsymptoticClass> {
    let (alpha, k) = rec.declared.ok_or_else(|| Error::validation("recurrence has no declared cost class"))?;
    let crit = ((rec.m1 + rec.m2) as f64).ln() / (rec.m as f64).ln();
    let class = if (alpha - crit).abs() < 1e-12 {
        AsymptoticClass { case: RecurrenceCase::Boundary, exponent: alpha, log_power: k + 1 }
    } else if alpha > crit {
        AsymptoticClass { case: RecurrenceCase::Top, exponent: alpha, log_power: k }
    } else {
        AsymptoticClass { case: RecurrenceCase::Bottom, exponent: crit, log_power: 0 }
    };
    Ok(class)
}

/// `max/min` of `cost_rec(n)/class(n)` over the sweep.
pub fn class_ratio_spread(rec: &Recurrence, sweep: &[u64]) -> Result<f64> {
    let class = classify_recurrence(rec)?;
    let ratios: Vec<f64> = sweep.iter().map(|&n| solve_recurrence_numeric(rec, n) / class.eval(n as f64)).collect();
    Ok(spread(&ratios))
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// Coupled far/near system of the recursive low-rank method, on dyadic `n`.
pub fn coupled_lowrank_cost(n: u64, cost_far: &dyn Fn(u64) -> f64) -> f64 {
    fn near(n: u64, f: &dyn Fn(u64) -> f64, memo: &mut HashMap<u64, f64>) -> f64 {
        if n < 2 {
            return 1.0;
        }
        if let Some(v) = memo.get(&n) {
            return *v;
        }
        let v = near(n / 2, f, memo) + 3.0 * f(n / 2);
        memo.insert(n, v);
        v
    }
    fn rec(n: u64, f: &dyn Fn(u64) -> f64, memo: &mut HashMap<u64, f64>, nm: &mut HashMap<u64, f64>) -> f64 {
        if n < 2 {
            return 1.0;
        }
        if let Some(v) = memo.get(&n) {
            return *v;
        }
        let v = 2.0 * rec(n / 2, f, memo, nm) + near(n / 2, f, nm) + 3.0 * f(n / 2);
        memo.insert(n, v);
        v
    }
    rec(n, cost_far, &mut HashMap::new(), &mut HashMap::new())
}

/// Weighted least-squares slope of `ln y` on `ln x`, the two largest `x` weighted double.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len();
    let w: Vec<f64> = (0..k).map(|i| if i + 2 >= k { 2.0 } else { 1.0 }).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = ly.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxy: f64 = (0..k).map(|i| w[i] * (lx[i] - mx) * (ly[i] - my)).sum();
    let sxx: f64 = (0..k).map(|i| w[i] * (lx[i] - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMethod {
    Sequential,
    Block,
    Avgcost,
    Lowrank,
}

impl std::str::FromStr for CostMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(CostMethod::Sequential),
            "block" => Ok(CostMethod::Block),
            "avgcost" => Ok(CostMethod::Avgcost),
            "lowrank" => Ok(CostMethod::Lowrank),
            _ => Err(Error::validation(format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for CostMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CostMethod::Sequential => "sequential",
            CostMethod::Block => "block",
            CostMethod::Avgcost => "avgcost",
            CostMethod::Lowrank => "lowrank",
        })
    }
}

/// Exponent of `n` in the published scaling table for `(method, α, d)`.
pub fn predicted_exponent(method: CostMethod, alpha: f64, d: usize) -> Result<f64> {
    let d = d as f64;
    Ok(match method {
        CostMethod::Sequential => {
            if alpha >= d {
                2.0
            } else {
                3.0 - alpha / d
            }
        }
        CostMethod::Block => {
            if alpha >= 2.0 * d {
                1.0
            } else {
                3.0 - alpha / d
            }
        }
        CostMethod::Avgcost => {
            if alpha >= 2.0 * d {
                return Err(Error::domain("average-cost method has no table entry for alpha >= 2d"));
            } else if alpha >= d {
                2.0 - alpha / (2.0 * d)
            } else {
                2.5 - alpha / d
            }
        }
        CostMethod::Lowrank => {
            if alpha >= d {
                1.0
            } else {
                2.0 - alpha / d
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostPoint {
    pub n: usize,
    pub count: u64,
    /// Declared polylogarithmic factor for the method at this `n`.
    pub polylog: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub method: CostMethod,
    pub alpha: f64,
    pub d: usize,
    pub t: f64,
    pub epsilon: f64,
    pub points: Vec<CostPoint>,
    pub fitted_exponent: f64,
    /// Fit of `count / polylog`.
    pub fitted_exponent_reduced: f64,
    pub predicted_exponent: f64,
}

impl CostReport {
    pub const CSV_HEADER: &'static str = "method,alpha,d,n,count,fitted_exponent,predicted_exponent";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6}\n",
                self.method, self.alpha, self.d, p.n, p.count, self.fitted_exponent, self.predicted_exponent
            ));
        }
        out
    }
}

/// Cutoff used by the low-rank count sweep.
pub const LOWRANK_CUTOFF: usize = 4;

/// Balanced subdivision `m ≈ n^{1−α/2}·√t`, a power of two in `[1, n/2]`.
pub fn balanced_m(n: usize, alpha: f64, t: f64) -> usize {
    let target = (n as f64).powf(1.0 - alpha / 2.0) * t.sqrt();
    let m = if target <= 1.0 { 1 } else { 1usize << target.log2().round() as u32 };
    m.clamp(1, (n / 2).max(1))
}

/// Per-step count of the block-encoding method: one qubitized evolution per bisection block.
pub fn block_step_count(spec: &HamiltonianSpec<f64>, t: f64, eps: f64) -> Result<u64> {
    let n = spec.n();
    let decomp = bisection_decompose(n)?;
    let w = phase_register_width(n, t, eps);
    let mut total = 0u64;
    for m in spec.two_local().values() {
        for pair in &decomp.pairs {
            let h = pair.left.len();
            let one = m.norm(&NormKind::Restricted1(&pair.region()))?;
            if one == 0.0 {
                continue;
            }
            let grid = if h >= 2 { nested_boxes(h)? } else { BoxGrid::build(h)? };
            let ratio = block_ratio(m, pair)?;
            let r = qubitization_step_count(one * t, eps / n as f64)?;
            total += r * (selection_cost(2 * h) + preparation_cost(grid.boxes.len(), 2 * h, w, ratio));
        }
    }
    let onsite = spec.on_site().values().flatten().filter(|v| **v != 0.0).count() as u64;
    Ok(total + onsite)
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

/// Gate counts per Trotter step across an `n` sweep, with exponent fits.
pub fn gate_count_report(
    method: CostMethod,
    alpha: f64,
    d: usize,
    t: f64,
    eps: f64,
    sweep: &[usize],
) -> Result<CostReport> {
    if sweep.len() < 4 || sweep.iter().any(|n| !n.is_power_of_two() || *n < 16) {
        return Err(Error::domain("sweep needs at least 4 dyadic sizes, each at least 16"));
    }
    if d != 1 && method != CostMethod::Sequential {
        return Err(Error::domain("recursive methods are implemented for d = 1"));
    }
    let predicted = predicted_exponent(method, alpha, d)?;
    let cfg = CompileConfig::new(t, 1, Mode::CountOnly)?.with_epsilon(eps)?;
    let pair = (PauliKind::Z, PauliKind::Z);
    let mut points = Vec::with_capacity(sweep.len());
    for &n in sweep {
        let spec = build_power_law::<f64>(n, d, alpha, pair, SignRule::AllPositive)?;
        let w = phase_register_width(n, t, eps) as f64;
        let (count, polylog) = match method {
            CostMethod::Sequential => (compile_sequential_step(&spec, &cfg)?.gate_count, 1.0),
            CostMethod::Lowrank => {
                let tol = eps / (n as f64 * t);
                let step = compile_lowrank_step(&spec, tol, LOWRANK_CUTOFF, &cfg)?;
                let decomp: LowRankDecomposition = crate::decomp::lowrank_decompose(n, LOWRANK_CUTOFF)?;
                let rho = rank_profile(&spec, &decomp, tol)?.rho_max as f64;
                let far_layers = log2(n / LOWRANK_CUTOFF) - 1.0;
                (step.gate_count, far_layers * w * rho)
            }
            CostMethod::Block => (block_step_count(&spec, t, eps)?, log2(n).powi(2) * w),
            CostMethod::Avgcost => {
                let m = balanced_m(n, alpha, t);
                (compile_avgcost_step(&spec, m, &cfg)?.gate_count, log2(n) * w)
            }
        };
        points.push(CostPoint { n, count, polylog });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let raw: Vec<f64> = points.iter().map(|p| p.count as f64).collect();
    let reduced: Vec<f64> = points.iter().map(|p| p.count as f64 / p.polylog).collect();
    Ok(CostReport {
        method,
        alpha,
        d,
        t,
        epsilon: eps,
        fitted_exponent: fit_exponent(&xs, &raw),
        fitted_exponent_reduced: fit_exponent(&xs, &reduced),
        predicted_exponent: predicted,
        points,
    })
}

/// Recount of a circuit listing: primitives cost 1, composites their declared cost.
pub fn recount_gates(listing: &str) -> Result<u64> {
    Ok(parse_circuit_text(listing)?
        .iter()
        .map(|l| match l {
            GateLine::Primitive { .. } => 1,
            GateLine::Composite { cost, .. } => *cost,
        })
        .sum())
}
