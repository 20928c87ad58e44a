//! Real-space electronic structure on a periodic cubic grid.
//!
//! `H = Σ_{j,k} τ_{j,k} A†_j A_k + Σ_{l,m} ν_{l,m} N_l N_m`. The Coulomb matrix
//! `ν` is stored once per unordered pair (`l < m`) and the double sum runs
//! over ordered pairs, so a pair `{l, m}` contributes `2ν_{l,m} N_l N_m`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::CMatrix;
use crate::decomp::cube_decompose;
use crate::error::{Error, Result};
use crate::hamlib::{CoeffMatrix, Lattice, NormKind};
use crate::lowrank::cube_rank_max;
use crate::trotter::{fermionic_error_norms, step_count, FermionicNorms, SimulationRequest};

/// Largest mode count for dense Jordan-Wigner matrices.
pub const MAX_JW_MODES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub charge: f64,
    pub pos: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectronicSystem {
    /// Grid side; zero for systems not built on a grid.
    pub grid: usize,
    pub omega: f64,
    pub eta: usize,
    /// Kinetic coefficients, full square.
    pub tau: CoeffMatrix<f64>,
    /// Coulomb coefficients, one entry per unordered pair.
    pub nu: CoeffMatrix<f64>,
    pub nuclei: Vec<Nucleus>,
    /// On-site external potential from the nuclei.
    pub external: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    grid: usize,
    omega: f64,
    eta: usize,
    #[serde(default)]
    nuclei: Vec<Nucleus>,
}

impl ElectronicSystem {
    /// System from explicit coefficient matrices.
    pub fn from_matrices(tau: CoeffMatrix<f64>, nu: CoeffMatrix<f64>, eta: usize) -> Result<Self> {
        let n = tau.n();
        if nu.n() != n {
            return Err(Error::Dimension("tau and nu differ in size".into()));
        }
        if eta > n {
            return Err(Error::domain(format!("eta = {eta} exceeds n = {n}")));
        }
        for j in 1..=n {
            for k in j + 1..=n {
                if (tau.get(j, k) - tau.get(k, j)).abs() > 1e-12 {
                    return Err(Error::validation("tau is not symmetric"));
                }
            }
        }
        let nu = if nu.layout() == crate::hamlib::Layout::StrictUpper {
            nu
        } else {
            for j in 1..=n {
                if nu.get(j, j) != 0.0 {
                    return Err(Error::validation("nu has a nonzero diagonal"));
                }
                for k in j + 1..=n {
                    if (nu.get(j, k) - nu.get(k, j)).abs() > 1e-12 {
                        return Err(Error::validation("nu is not symmetric"));
                    }
                }
            }
            CoeffMatrix::from_upper_fn(n, |j, k| nu.get(j, k))
        };
        Ok(ElectronicSystem { grid: 0, omega: 1.0, eta, tau, nu, nuclei: Vec::new(), external: None })
    }

    pub fn n(&self) -> usize {
        self.tau.n()
    }

    pub fn with_eta(mut self, eta: usize) -> Result<Self> {
        if eta > self.n() {
            return Err(Error::domain(format!("eta = {eta} exceeds n = {}", self.n())));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Adds nuclei and recomputes the external potential `U_m = Σ_l ζ_l/∥r̃_l − r_m∥`.
    pub fn with_nuclei(mut self, nuclei: Vec<Nucleus>) -> Result<Self> {
        if self.grid == 0 {
            return Err(Error::validation("nuclei need a grid system"));
        }
        let lattice = Lattice::new(self.n(), 3)?;
        let h = self.spacing();
        let mut u = vec![0.0; self.n()];
        for (m, slot) in u.iter_mut().enumerate() {
            let c = lattice.coords(m + 1);
            for nuc in &nuclei {
                let d = (0..3).map(|a| (nuc.pos[a] - h * (c[a] - 1) as f64).powi(2)).sum::<f64>().sqrt();
                if d < 1e-12 {
                    return Err(Error::domain("nucleus sits on a grid point"));
                }
                *slot += nuc.charge / d;
            }
        }
        self.external = if nuclei.is_empty() { None } else { Some(u) };
        self.nuclei = nuclei;
        Ok(self)
    }

    /// Grid spacing `(ω/n)^{1/3}`.
    pub fn spacing(&self) -> f64 {
        (self.omega / self.n() as f64).cbrt()
    }

    /// Kinetic matrix with the external potential folded into its diagonal.
    pub fn one_body(&self) -> CoeffMatrix<f64> {
        match &self.external {
            None => self.tau.clone(),
            Some(u) => CoeffMatrix::from_square_fn(self.n(), |j, k| self.tau.get(j, k) + if j == k { u[j - 1] } else { 0.0 }),
        }
    }

    /// `max_m U_m`, the quantity an external potential adds to the one-body norm.
    pub fn external_norm(&self) -> f64 {
        self.external.as_ref().map_or(0.0, |u| u.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    }

    pub fn norms(&self) -> Result<FermionicNorms> {
        fermionic_error_norms(&self.one_body(), &self.nu, self.eta.max(1))
    }

    pub fn to_json(&self) -> Result<String> {
        if self.grid == 0 {
            return Err(Error::validation("only grid systems serialize"));
        }
        let file = SystemFile { grid: self.grid, omega: self.omega, eta: self.eta, nuclei: self.nuclei.clone() };
        Ok(serde_json::to_string(&file).expect("system serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::validation(e.to_string()))?;
        build_uniform_electron_gas(file.grid, file.omega)?.with_eta(file.eta)?.with_nuclei(file.nuclei)
    }
}

/// Uniform electron gas on a `g³` periodic grid with cell volume `ω`.
///
/// `ν_{l,m} = n^{1/3}/(2ω^{1/3}∥l−m∥)` with `∥·∥` the grid-unit distance, and
/// `τ` the 7-point central-difference form of `−∇²/2`.
pub fn build_uniform_electron_gas(g: usize, omega: f64) -> Result<ElectronicSystem> {
    if g < 2 {
        return Err(Error::domain("grid side must be at least 2"));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("cell volume {omega} must be positive")));
    }
    let n = g * g * g;
    let lattice = Lattice::new(n, 3)?;
    let prefactor = (n as f64).cbrt() / (2.0 * omega.cbrt());
    let nu = CoeffMatrix::from_upper_fn(n, |l, m| prefactor / lattice.distance(l, m));
    let inv_h2 = (n as f64 / omega).powf(2.0 / 3.0);
    let mut tau = CoeffMatrix::zeros_square(n);
    for j in 1..=n {
        let c = lattice.coords(j);
        tau.set(j, j, 3.0 * inv_h2)?;
        for axis in 0..3 {
            for step in [1, g - 1] {
                let mut nc = c.clone();
                nc[axis] = (c[axis] - 1 + step) % g + 1;
                let k = site_of(&nc, g);
                tau.set(j, k, tau.get(j, k) - inv_h2 / 2.0)?;
            }
        }
    }
    Ok(ElectronicSystem { grid: g, omega, eta: n / 2, tau, nu, nuclei: Vec::new(), external: None })
}

fn site_of(coords: &[usize], g: usize) -> usize {
    coords.iter().rev().fold(0, |acc, c| acc * g + (c - 1)) + 1
}

/// Small random instance: nearest-neighbor chain hopping plus random Coulomb-like pairs.
pub fn random_toy_system<R: Rng>(modes: usize, eta: usize, rng: &mut R) -> Result<ElectronicSystem> {
    if modes < 2 {
        return Err(Error::domain("need at least two modes"));
    }
    let mut tau = CoeffMatrix::zeros_square(modes);
    for j in 1..=modes {
        tau.set(j, j, rng.gen_range(-0.5..0.5))?;
        if j < modes {
            let v = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            tau.set(j, j + 1, v)?;
            tau.set(j + 1, j, v)?;
        }
    }
    let nu = CoeffMatrix::from_upper_fn(modes, |l, m| rng.gen_range(0.2..1.0) / (m - l) as f64);
    ElectronicSystem::from_matrices(tau, nu, eta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FermionKind {
    Create,
    Annihilate,
    Number,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FermionOp {
    pub kind: FermionKind,
    /// 1-based mode.
    pub mode: usize,
}

/// Jordan-Wigner matrix of a single fermionic operator; mode `j` is qubit `j−1`.
pub fn fermion_op_matrix(op: FermionOp, modes: usize) -> Result<CMatrix> {
    check_modes(modes)?;
    if op.mode == 0 || op.mode > modes {
        return Err(Error::Index(format!("mode {} outside 1..={modes}", op.mode)));
    }
    let bit = 1usize << (op.mode - 1);
    let dim = 1usize << modes;
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let occupied = x & bit != 0;
        let sign = parity_sign(x, op.mode);
        match op.kind {
            FermionKind::Number if occupied => m[(x, x)] = Complex64::new(1.0, 0.0),
            FermionKind::Annihilate if occupied => m[(x ^ bit, x)] = Complex64::new(sign, 0.0),
            FermionKind::Create if !occupied => m[(x | bit, x)] = Complex64::new(sign, 0.0),
            _ => {}
        }
    }
    Ok(m)
}

/// `(−1)^{occupied modes below mode}`.
fn parity_sign(x: usize, mode: usize) -> f64 {
    if (x & ((1usize << (mode - 1)) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dense Jordan-Wigner form of an electronic Hamiltonian.
#[derive(Clone, Debug)]
pub struct JwInstance {
    pub modes: usize,
    pub kinetic: CMatrix,
    pub coulomb: CMatrix,
    pub number: CMatrix,
}

impl JwInstance {
    pub fn hamiltonian(&self) -> CMatrix {
        &self.kinetic + &self.coulomb
    }

    pub fn stages(&self) -> [CMatrix; 2] {
        [self.kinetic.clone(), self.coulomb.clone()]
    }
}

pub fn jw_matrix(system: &ElectronicSystem) -> Result<JwInstance> {
    let modes = system.n();
    check_modes(modes)?;
    let dim = 1usize << modes;
    let tau = system.one_body();
    let mut kinetic = DMatrix::<f64>::zeros(dim, dim);
    let mut coulomb = DMatrix::<f64>::zeros(dim, dim);
    let mut number = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        number[(x, x)] = x.count_ones() as f64;
        for k in 1..=modes {
            let kb = 1usize << (k - 1);
            if x & kb == 0 {
                continue;
            }
            let y = x ^ kb;
            let s1 = parity_sign(x, k);
            for j in 1..=modes {
                let c = tau.get(j, k);
                if c == 0.0 {
                    continue;
                }
                let jb = 1usize << (j - 1);
                if y & jb != 0 {
                    continue;
                }
                kinetic[(y | jb, x)] += c * s1 * parity_sign(y, j);
            }
        }
        let mut v = 0.0;
        for (l, m, c) in system.nu.entries() {
            if x & (1 << (l - 1)) != 0 && x & (1 << (m - 1)) != 0 {
                v += 2.0 * c;
            }
        }
        coulomb[(x, x)] = v;
    }
    let lift = |m: DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    Ok(JwInstance { modes, kinetic: lift(kinetic), coulomb: lift(coulomb), number: lift(number) })
}

fn check_modes(modes: usize) -> Result<()> {
    if modes > MAX_JW_MODES {
        Err(Error::capacity(format!("{modes} modes exceed the dense limit {MAX_JW_MODES}")))
    } else {
        Ok(())
    }
}

/// Electron-count rule for norm sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaRule {
    HalfFilling,
    Fixed(usize),
}

impl EtaRule {
    pub fn eta(self, n: usize) -> usize {
        match self {
            EtaRule::HalfFilling => (n / 2).max(1),
            EtaRule::Fixed(e) => e.min(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormScalingRow {
    pub grid: usize,
    pub n: usize,
    pub eta: usize,
    pub omega: f64,
    pub nu_restricted: f64,
    /// `|||ν|||_{1,[η]} / (η^{2/3} n^{1/3} / ω^{1/3})`.
    pub nu_ratio: f64,
    pub tau_induced1: f64,
    /// `|||τ|||₁ / (n/ω)^{2/3}`.
    pub tau_ratio: f64,
}

impl NormScalingRow {
    pub const CSV_HEADER: &'static str = "grid,n,eta,omega,nu_restricted,nu_ratio,tau_induced1,tau_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.grid, self.n, self.eta, self.omega, self.nu_restricted, self.nu_ratio, self.tau_induced1, self.tau_ratio
        )
    }
}

/// Norm scalings over a grid sweep; `omega(n)` sets the cell volume.
pub fn norm_scaling_report(grids: &[usize], eta: EtaRule, omega: impl Fn(usize) -> f64) -> Result<Vec<NormScalingRow>> {
    grids
        .iter()
        .map(|&g| {
            let n = g * g * g;
            let w = omega(n);
            let sys = build_uniform_electron_gas(g, w)?;
            let e = eta.eta(n);
            let nu_restricted = sys.nu.norm(&NormKind::Induced1Restricted(e))?;
            let tau_induced1 = sys.tau.norm(&NormKind::Induced1)?;
            let nf = n as f64;
            Ok(NormScalingRow {
                grid: g,
                n,
                eta: e,
                omega: w,
                nu_restricted,
                nu_ratio: nu_restricted / ((e as f64).powf(2.0 / 3.0) * nf.cbrt() / w.cbrt()),
                tau_induced1,
                tau_ratio: tau_induced1 / (nf / w).powf(2.0 / 3.0),
            })
        })
        .collect()
}

/// Trotter steps from `C·(|||τ|||₁+|||ν|||_{1,[η]})^{p−1}|||τ|||₁|||ν|||_{1,[η]}η·t^{p+1}/r^p ≤ ε`.
///
/// With `ν = 0` the splitting is exact and the kinetic norm alone is used as
/// the commutator scale.
pub fn chem_step_count(system: &ElectronicSystem, t: f64, epsilon: f64, p: u32, constant: f64) -> Result<u64> {
    let req = SimulationRequest::new(t, epsilon, p)?;
    if !(constant > 0.0) {
        return Err(Error::domain("bound constant must be positive"));
    }
    let norms = system.norms()?;
    let scale = if norms.nu_restricted == 0.0 {
        norms.tau_induced1.powi(p as i32 + 1)
    } else {
        norms.bound_expression(p, 1.0)
    };
    Ok(step_count(&req, constant * scale))
}

/// Largest far-field rank of the Coulomb matrix under the per-axis cube recursion.
pub fn coulomb_rank_max(system: &ElectronicSystem, leaf_side: usize, tol: f64) -> Result<usize> {
    if system.grid == 0 {
        return Err(Error::validation("rank profile needs a grid system"));
    }
    let decomp = cube_decompose(system.grid, 3, leaf_side)?;
    cube_rank_max(&system.nu, &decomp, tol)
}
