//! Volume-counting lower bounds on gate counts.
//!
//! All logarithms are natural. Negative bounds are clamped to zero and
//! flagged vacuous. Constants that the asymptotic statements leave free are
//! explicit inputs and are echoed back in [`BoundReport::constants`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

/// Size of the fixed finite universal set used when compiling arbitrary
/// 2-qubit gates (H, S, S†, T, T†, X, CNOT, CZ).
pub const CLIFFORD_T_SIZE: u64 = 8;

/// Largest phase angle used by the commuting-Hamiltonian reduction.
pub const THETA_CAP: f64 = FRAC_PI_2;

/// Which 2-qubit gate set the circuit draws from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateSet {
    Finite(u64),
    /// Arbitrary 2-qubit gates, compiled into Clifford+T with overhead `c·g·ln(g/δ)`.
    Arbitrary { c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub vacuous: bool,
    pub constants: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(raw: f64, valid: bool, constants: BTreeMap<String, f64>) -> Self {
        let vacuous = !valid || !(raw > 0.0);
        BoundReport { bound: if vacuous { 0.0 } else { raw }, vacuous, constants }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Log-volume `2^μ·ln(2θ_max)` of the diagonal unitaries with phases in `[−θ_max, θ_max]`.
pub fn volume_diag(mu: u32, theta_max: f64) -> Result<f64> {
    check_theta(theta_max)?;
    Ok(pow2(mu) * (2.0 * theta_max).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagQuery {
    pub mu: u32,
    pub theta_max: f64,
    pub delta: f64,
    pub b: u64,
    pub gates: GateSet,
}

/// `g ≥ 2^μ·ln(2θ_max / asin(2δ√(1−δ²))) / ln(C(b,2)|K|)`.
pub fn diag_synthesis_lower_bound(q: &DiagQuery) -> Result<BoundReport> {
    check_theta(q.theta_max)?;
    check_accuracy(q.delta)?;
    check_width(q.b, q.mu as u64)?;
    let mut constants = base_constants();
    let raw = match q.gates {
        GateSet::Finite(k) => {
            check_gate_set(k)?;
            constants.insert("gate_set_size".into(), k as f64);
            diag_expression(pow2(q.mu), q.theta_max, q.delta, q.b, k)?
        }
        GateSet::Arbitrary { c } => {
            check_compile_constant(c)?;
            if q.delta >= 0.5 {
                return Err(Error::domain("arbitrary gate sets need delta < 1/2"));
            }
            constants.insert("compile_constant".into(), c);
            constants.insert("gate_set_size".into(), CLIFFORD_T_SIZE as f64);
            let target = diag_expression(pow2(q.mu), q.theta_max, 2.0 * q.delta, q.b, CLIFFORD_T_SIZE)?;
            constants.insert("compiled_gates".into(), target);
            invert_compilation(target, c, q.delta)
        }
    };
    Ok(BoundReport::new(raw, true, constants))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamQuery {
    pub n: u64,
    /// Coefficient magnitude cap `|β_{j,k}| ≤ t`.
    pub t: f64,
    pub epsilon: f64,
    pub b: u64,
    pub gates: GateSet,
    /// Coefficient of the reduction overhead `c_red·n·ln²(n/ε)`.
    pub c_red: f64,
}

/// Commuting ZZ simulation bound through the Hamming-weight-2 reduction:
/// `n²·ln(2θ/asin(2δ'√(1−δ'²)))/ln(C(b,2)|K'|) − c_red·n·ln²(n/ε)` with
/// `δ' = 3ε`, `θ = min(t, θ_cap)` and `|K'| = |K| + |Clifford+T|`.
pub fn commuting_ham_lower_bound(q: &HamQuery) -> Result<BoundReport> {
    if q.n < 2 {
        return Err(Error::domain("need at least two sites"));
    }
    if !(q.epsilon > 0.0 && q.epsilon < 1.0 / 3.0) {
        return Err(Error::domain(format!("epsilon {} outside (0, 1/3)", q.epsilon)));
    }
    if !(q.t > 0.0) || !q.t.is_finite() {
        return Err(Error::domain("t must be positive"));
    }
    check_width(q.b, q.n)?;
    if !(q.c_red >= 0.0) {
        return Err(Error::domain("c_red must be nonnegative"));
    }
    let volume = (q.n as f64).powi(2);
    let theta = q.t.min(THETA_CAP);
    let delta = 3.0 * q.epsilon;
    let mut constants = base_constants();
    constants.insert("theta".into(), theta);
    constants.insert("reduced_accuracy".into(), delta);
    constants.insert("c_red".into(), q.c_red);
    let main = match q.gates {
        GateSet::Finite(k) => {
            check_gate_set(k)?;
            let k_prime = k + CLIFFORD_T_SIZE;
            constants.insert("gate_set_size".into(), k_prime as f64);
            diag_expression(volume, theta, delta, q.b, k_prime)?
        }
        GateSet::Arbitrary { c } => {
            check_compile_constant(c)?;
            constants.insert("compile_constant".into(), c);
            constants.insert("gate_set_size".into(), CLIFFORD_T_SIZE as f64);
            let target = diag_expression(volume, theta, 2.0 * delta, q.b, CLIFFORD_T_SIZE)?;
            invert_compilation(target, c, delta)
        }
    };
    let overhead = q.c_red * q.n as f64 * (q.n as f64 / q.epsilon).ln().powi(2);
    constants.insert("main_term".into(), main);
    constants.insert("overhead".into(), overhead);
    Ok(BoundReport::new(main - overhead, q.t >= q.epsilon, constants))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteQuery {
    pub mu: u32,
    /// Phase bits.
    pub m: u32,
    pub delta: f64,
    pub b: u64,
    pub gates: GateSet,
    /// Leading constant of the counting bound.
    pub c: f64,
}

/// `c·2^μ·ln(1/δ)/ln(b|K|)`, valid for `2^{−m} ≤ δ ≤ 1/2`.
pub fn discrete_diag_lower_bound(q: &DiscreteQuery) -> Result<BoundReport> {
    check_accuracy(q.delta)?;
    check_width(q.b, q.mu as u64)?;
    let mut constants = base_constants();
    constants.insert("c".into(), q.c);
    let raw = discrete_expression(pow2(q.mu), q.delta, q.b, q.gates, q.c, &mut constants)?;
    Ok(BoundReport::new(raw, in_window(q.delta, q.m), constants))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffQuery {
    pub n: u64,
    pub m: u32,
    pub epsilon: f64,
    pub b: u64,
    pub gates: GateSet,
    pub c: f64,
    /// Coefficient of the phase-kickback overhead `c_poly·ln²(1/ε)`.
    pub c_poly: f64,
}

/// `c·n²·ln(1/ε)/ln(b|K|) − c_poly·ln²(1/ε)`, valid for `2^{−m} ≤ ε ≤ 1/2`.
pub fn coeff_oracle_lower_bound(q: &CoeffQuery) -> Result<BoundReport> {
    check_accuracy(q.epsilon)?;
    if q.n < 2 {
        return Err(Error::domain("need at least two indices"));
    }
    let index_bits = 2 * ceil_log2(q.n);
    check_width(q.b, q.m as u64 + index_bits)?;
    let mut constants = base_constants();
    constants.insert("c".into(), q.c);
    constants.insert("c_poly".into(), q.c_poly);
    let main = discrete_expression((q.n as f64).powi(2), q.epsilon, q.b, q.gates, q.c, &mut constants)?;
    let overhead = q.c_poly * (1.0 / q.epsilon).ln().powi(2);
    constants.insert("main_term".into(), main);
    constants.insert("overhead".into(), overhead);
    Ok(BoundReport::new(main - overhead, in_window(q.epsilon, q.m), constants))
}

/// Smallest `g ≥ δ` with `c·g·ln(g/δ) ≥ target`, or zero for a nonpositive target.
pub fn invert_compilation(target: f64, c: f64, delta: f64) -> f64 {
    if !(target > 0.0) {
        return target.min(0.0);
    }
    let f = |g: f64| c * g * (g / delta).ln();
    let mut lo = delta;
    let mut hi = delta.max(1.0) * 2.0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

fn diag_expression(volume: f64, theta: f64, delta: f64, b: u64, k: u64) -> Result<f64> {
    let ball = (2.0 * delta * (1.0 - delta * delta).sqrt()).asin();
    let denom = (pairs(b) * k as f64).ln();
    if !(denom > 0.0) {
        return Err(Error::domain("circuit has a single gate placement"));
    }
    Ok(volume * (2.0 * theta / ball).ln() / denom)
}

fn discrete_expression(
    volume: f64,
    delta: f64,
    b: u64,
    gates: GateSet,
    c: f64,
    constants: &mut BTreeMap<String, f64>,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("leading constant must be positive"));
    }
    let (k, accuracy) = match gates {
        GateSet::Finite(k) => (check_gate_set(k).map(|_| k)?, delta),
        GateSet::Arbitrary { c } => {
            check_compile_constant(c)?;
            constants.insert("compile_constant".into(), c);
            (CLIFFORD_T_SIZE, 2.0 * delta)
        }
    };
    constants.insert("gate_set_size".into(), k as f64);
    let denom = (b as f64 * k as f64).ln();
    if !(denom > 0.0) {
        return Err(Error::domain("circuit has a single gate placement"));
    }
    let value = c * volume * (1.0 / accuracy).ln() / denom;
    Ok(match gates {
        GateSet::Finite(_) => value,
        GateSet::Arbitrary { c: cc } => invert_compilation(value, cc, delta),
    })
}

fn base_constants() -> BTreeMap<String, f64> {
    BTreeMap::from([("log_base".to_string(), std::f64::consts::E)])
}

fn in_window(delta: f64, m: u32) -> bool {
    delta <= 0.5 && delta >= 0.5f64.powi(m as i32)
}

fn pow2(mu: u32) -> f64 {
    2f64.powi(mu as i32)
}

fn pairs(b: u64) -> f64 {
    b as f64 * (b as f64 - 1.0) / 2.0
}

fn ceil_log2(n: u64) -> u64 {
    (64 - (n - 1).leading_zeros()) as u64
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < PI {
        Ok(())
    } else {
        Err(Error::domain(format!("theta_max {theta} outside (0, pi)")))
    }
}

fn check_accuracy(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("accuracy {delta} outside (0, 1)")))
    }
}

fn check_width(b: u64, needed: u64) -> Result<()> {
    if b >= needed && b >= 1 {
        Ok(())
    } else {
        Err(Error::domain(format!("circuit width {b} below required {needed}")))
    }
}

fn check_gate_set(k: u64) -> Result<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(Error::domain("gate set is empty"))
    }
}

fn check_compile_constant(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("compilation constant must be positive"))
    }
}
