//! Trotter error estimation: nested-commutator sums, step counts, the
//! fermionic induced-1-norm bound and dense product-formula evolutions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{spectral_norm, CMatrix, SubspaceProjector};
use crate::compilers::ProductFormula;
use crate::error::{Error, Result};
use crate::hamlib::{CoeffMatrix, NormKind};

/// Largest dimension accepted by the brute-force commutator sum.
pub const MAX_COMMUTATOR_DIM: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationRequest {
    pub t: f64,
    pub epsilon: f64,
    pub p: u32,
}

impl SimulationRequest {
    pub fn new(t: f64, epsilon: f64, p: u32) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t = {t} must be positive")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        if p == 0 {
            return Err(Error::domain("order must be positive"));
        }
        Ok(SimulationRequest { t, epsilon, p })
    }
}

/// `r = max(1, ⌈(α t^{p+1}/ε)^{1/p}⌉)`.
pub fn step_count(req: &SimulationRequest, alpha_comm: f64) -> u64 {
    let p = req.p as f64;
    let x = (alpha_comm.max(0.0) * req.t.powf(p + 1.0) / req.epsilon).powf(1.0 / p);
    // Guard against x landing a hair above an integer through rounding.
    let r = (x * (1.0 - 4.0 * f64::EPSILON)).ceil();
    (r as u64).max(1)
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Spectral norm of a Hermitian or anti-Hermitian matrix via its eigenvalues.
fn normal_norm(c: &CMatrix) -> f64 {
    if c.iter().all(|x| x.norm() < 1e-300) {
        return 0.0;
    }
    let anti = spectral_frobenius(&(c + c.adjoint())) < 1e-12 * spectral_frobenius(c);
    let h = if anti { c * Complex64::new(0.0, 1.0) } else { c.clone() };
    if spectral_frobenius(&(&h - h.adjoint())) > 1e-9 * spectral_frobenius(&h) {
        return spectral_norm(c);
    }
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn spectral_frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn nested_sum(stages: &[CMatrix], inner: &CMatrix, depth: u32) -> f64 {
    if depth == 0 {
        return normal_norm(inner);
    }
    if spectral_frobenius(inner) < 1e-13 {
        return 0.0;
    }
    stages.iter().map(|h| nested_sum(stages, &commutator(h, inner), depth - 1)).sum()
}

/// `Σ ‖[H_{γ_{p+1}}, ⋯ [H_{γ_2}, H_{γ_1}]]‖` over all `(p+1)`-tuples of stages.
pub fn commutator_norm_sum(stages: &[CMatrix], p: u32) -> Result<f64> {
    if p == 0 || p > 3 {
        return Err(Error::domain(format!("brute-force commutator sums support 1 <= p <= 3, got {p}")));
    }
    let Some(first) = stages.first() else {
        return Ok(0.0);
    };
    let dim = first.nrows();
    if stages.iter().any(|s| s.nrows() != dim || s.ncols() != dim) {
        return Err(Error::Dimension("stages differ in shape".into()));
    }
    if dim > MAX_COMMUTATOR_DIM {
        return Err(Error::capacity(format!("dimension {dim} exceeds {MAX_COMMUTATOR_DIM}")));
    }
    let pairs: Vec<(usize, usize)> = (0..stages.len()).flat_map(|a| (0..stages.len()).map(move |b| (a, b))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(g1, g2)| {
            if g1 == g2 {
                return 0.0;
            }
            nested_sum(stages, &commutator(&stages[g2], &stages[g1]), p - 1)
        })
        .sum())
}

/// Commutator sum with every stage restricted to the Hamming-weight-`η` subspace.
///
/// Valid for number-preserving stages, whose commutators are block diagonal.
pub fn restricted_commutator_norm_sum(stages: &[CMatrix], p: u32, eta: usize) -> Result<f64> {
    let Some(first) = stages.first() else {
        return Ok(0.0);
    };
    let n = first.nrows().trailing_zeros() as usize;
    let proj = SubspaceProjector::new(n, eta)?;
    let restricted: Vec<CMatrix> = stages.iter().map(|s| proj.restrict(s)).collect();
    commutator_norm_sum(&restricted, p)
}

/// Induced norms entering the fermionic Trotter bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermionicNorms {
    pub tau_induced1: f64,
    pub nu_restricted: f64,
    pub eta: usize,
}

impl FermionicNorms {
    /// `(a+b)^{p−1}·a·b·η·t^{p+1}`, up to an unspecified constant.
    pub fn bound_expression(&self, p: u32, t: f64) -> f64 {
        let (a, b) = (self.tau_induced1, self.nu_restricted);
        (a + b).powi(p as i32 - 1) * a * b * self.eta as f64 * t.powi(p as i32 + 1)
    }
}

pub fn fermionic_error_norms(tau: &CoeffMatrix<f64>, nu: &CoeffMatrix<f64>, eta: usize) -> Result<FermionicNorms> {
    if tau.n() != nu.n() {
        return Err(Error::Dimension("tau and nu differ in size".into()));
    }
    if eta == 0 || eta > nu.n() {
        return Err(Error::domain(format!("eta = {eta} outside 1..={}", nu.n())));
    }
    Ok(FermionicNorms {
        tau_induced1: tau.norm(&NormKind::Induced1)?,
        nu_restricted: nu.norm(&NormKind::Induced1Restricted(eta))?,
        eta,
    })
}

/// Stage matrices with cached eigendecompositions for repeated exponentiation.
pub struct StageExponentials {
    eig: Vec<(CMatrix, DVector<f64>)>,
    dim: usize,
}

impl StageExponentials {
    pub fn new(stages: &[CMatrix]) -> Result<Self> {
        let dim = stages.first().map(|s| s.nrows()).unwrap_or(1);
        if stages.iter().any(|s| s.nrows() != dim || s.ncols() != dim) {
            return Err(Error::Dimension("stages differ in shape".into()));
        }
        let eig = stages
            .iter()
            .map(|s| {
                let e = SymmetricEigen::new(s.clone());
                (e.eigenvectors, e.eigenvalues)
            })
            .collect();
        Ok(StageExponentials { eig, dim })
    }

    fn exp(&self, stage: usize, tau: f64) -> CMatrix {
        let (v, l) = &self.eig[stage];
        let d = DMatrix::from_diagonal(&l.map(|x| Complex64::from_polar(1.0, -x * tau)));
        v * d * v.adjoint()
    }

    /// `S_p(t)` as the ordered product of stage exponentials.
    pub fn product_formula(&self, formula: &ProductFormula, t: f64) -> CMatrix {
        let mut u = CMatrix::identity(self.dim, self.dim);
        for (s, f) in formula.schedule(self.eig.len()) {
            u = self.exp(s - 1, f * t) * u;
        }
        u
    }

    /// Exact `e^{−itΣH}`.
    pub fn exact(&self, t: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (v, l) in &self.eig {
            h += v * DMatrix::from_diagonal(&l.map(|x| Complex64::new(x, 0.0))) * v.adjoint();
        }
        crate::circuit::hermitian_exp(&h, t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrotterErrorReport {
    pub method: String,
    pub p: u32,
    pub t: f64,
    pub alpha_comm: f64,
    /// `α_comm · t^{p+1}`, up to a constant.
    pub bound: f64,
    pub empirical: Option<f64>,
    pub r: u64,
}

impl TrotterErrorReport {
    pub const CSV_HEADER: &'static str = "method,p,t,alpha_comm,bound,empirical,r";

    pub fn csv_row(&self) -> String {
        let emp = self.empirical.map(|e| format!("{e:e}")).unwrap_or_default();
        format!("{},{},{:e},{:e},{:e},{},{}", self.method, self.p, self.t, self.alpha_comm, self.bound, emp, self.r)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::pauli_matrix;
    use crate::compilers::make_product_formula;
    use crate::hamlib::PauliKind;

    fn p1(k: PauliKind) -> CMatrix {
        pauli_matrix(1, &[(0, k)])
    }

    #[test]
    fn commutator_examples() {
        let xz = [p1(PauliKind::X), p1(PauliKind::Z)];
        assert!((commutator_norm_sum(&xz, 1).unwrap() - 4.0).abs() < 1e-12);
        let zz = [p1(PauliKind::Z), p1(PauliKind::Z) * Complex64::new(2.0, 0.0)];
        assert_eq!(commutator_norm_sum(&zz, 2).unwrap(), 0.0);
        assert_eq!(commutator_norm_sum(&[p1(PauliKind::X)], 1).unwrap(), 0.0);
        assert!(commutator_norm_sum(&xz, 4).is_err());
        // [X,[X,Z]] = 4Z and [Z,[X,Z]] = 4X (up to sign), each norm 4; doubled by the reversed pair.
        assert!((commutator_norm_sum(&xz, 2).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn step_count_examples() {
        let req = |p| SimulationRequest::new(1.0, 0.1, p).unwrap();
        assert_eq!(step_count(&req(1), 0.0), 1);
        assert_eq!(step_count(&req(1), 4.0), 40);
        assert_eq!(step_count(&req(2), 4.0), 7);
    }

    #[test]
    fn fermionic_norm_examples() {
        let id = CoeffMatrix::from_square_fn(4, |j, k| if j == k { 1.0 } else { 0.0 });
        let row = [0.0, 3.0, 1.0, 0.5];
        let nu = CoeffMatrix::from_square_fn(4, |j, k| {
            if j == 1 {
                row[k - 1]
            } else if k == 1 {
                row[j - 1]
            } else {
                0.0
            }
        });
        let f = fermionic_error_norms(&id, &nu, 2).unwrap();
        assert_eq!(f.tau_induced1, 1.0);
        assert_eq!(f.nu_restricted, 4.0);
        let zero = fermionic_error_norms(&id, &CoeffMatrix::zeros_square(4), 2).unwrap();
        assert_eq!(zero.bound_expression(2, 0.3), 0.0);
        assert!(fermionic_error_norms(&id, &nu, 5).is_err());
    }

    #[test]
    fn strang_error_scales_cubically() {
        let st = StageExponentials::new(&[p1(PauliKind::X), p1(PauliKind::Z)]).unwrap();
        let f = make_product_formula(2).unwrap();
        let ts = [0.05, 0.1, 0.2];
        let errs: Vec<f64> = ts.iter().map(|t| spectral_norm(&(st.product_formula(&f, *t) - st.exact(*t)))).collect();
        assert!((log_log_slope(&ts, &errs) - 3.0).abs() < 0.1);
    }

    #[test]
    fn csv_row_format() {
        let r = TrotterErrorReport { method: "sequential".into(), p: 2, t: 0.1, alpha_comm: 4.0, bound: 0.004, empirical: None, r: 3 };
        assert_eq!(r.csv_row(), "sequential,2,1e-1,4e0,4e-3,,3");
    }
}
