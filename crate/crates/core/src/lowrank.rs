//! Truncated SVD of off-diagonal coefficient blocks and rank profiles.
//!
//! The factorization is a one-sided Jacobi SVD, generic over the scalar type.

use rayon::prelude::*;

use crate::decomp::{CubeDecomposition, IntervalPair, LowRankDecomposition};
use crate::error::{Error, Result};
use crate::hamlib::{CoeffMatrix, HamiltonianSpec, PauliPair};
use crate::scalar::Real;

/// Dense column-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T: Real = f64> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[c * rows + r] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    fn cols_mut2(&mut self, p: usize, q: usize) -> (&mut [T], &mut [T]) {
        debug_assert!(p < q);
        let rows = self.rows;
        let (a, b) = self.data.split_at_mut(q * rows);
        (&mut a[p * rows..(p + 1) * rows], &mut b[..rows])
    }
}

/// Thin SVD factors `block ≈ μ · diag(σ) · νᵀ` truncated at a spectral tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedFactor<T: Real = f64> {
    /// `rows × ρ`, orthonormal columns.
    pub left: DenseMatrix<T>,
    pub singular: Vec<T>,
    /// `cols × ρ`, orthonormal columns.
    pub right: DenseMatrix<T>,
    pub rank: usize,
    pub tol: T,
    /// `σ_{ρ+1}`, or zero when every singular value was kept.
    pub residual: T,
    pub block_ref: Option<IntervalPair>,
}

impl<T: Real> TruncatedFactor<T> {
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.left.rows, self.right.rows, |r, c| {
            (0..self.rank).map(|s| self.left.get(r, s) * self.singular[s] * self.right.get(c, s)).sum()
        })
    }
}

/// Full singular values and vectors, σ non-increasing.
pub struct Svd<T: Real> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
}

/// One-sided Jacobi SVD of an `m × k` matrix.
pub fn jacobi_svd<T: Real>(a: &DenseMatrix<T>) -> Svd<T> {
    if a.rows < a.cols {
        let t = jacobi_svd(&a.transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, k) = (a.rows, a.cols);
    let mut u = a.clone();
    let mut v = DenseMatrix::from_fn(k, k, |r, c| if r == c { T::one() } else { T::zero() });
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (cp, cq) = u.cols_mut2(p, q);
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    alpha += cp[i] * cp[i];
                    beta += cq[i] * cq[i];
                    gamma += cp[i] * cq[i];
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cp[i], cq[i]);
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
                let (vp, vq) = v.cols_mut2(p, q);
                for i in 0..k {
                    let (x, y) = (vp[i], vq[i]);
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, T)> =
        (0..k).map(|c| (c, u.col(c).iter().map(|x| *x * *x).sum::<T>().sqrt())).collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite"));
    let sigma: Vec<T> = order.iter().map(|(_, s)| *s).collect();
    let uu = DenseMatrix::from_fn(m, k, |r, c| {
        let (src, s) = order[c];
        if s > T::zero() {
            u.get(r, src) / s
        } else {
            T::zero()
        }
    });
    let vv = DenseMatrix::from_fn(k, k, |r, c| v.get(r, order[c].0));
    Svd { u: uu, sigma, v: vv }
}

/// Keeps every singular value above `tol`, so that `σ_{ρ+1} ≤ tol`.
pub fn truncated_svd<T: Real>(block: &DenseMatrix<T>, tol: T) -> Result<TruncatedFactor<T>> {
    if !(tol > T::zero()) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if block.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("non-finite block entry"));
    }
    let svd = jacobi_svd(block);
    let rank = svd.sigma.iter().take_while(|s| **s > tol).count();
    let residual = svd.sigma.get(rank).copied().unwrap_or_else(T::zero);
    Ok(TruncatedFactor {
        left: DenseMatrix::from_fn(block.rows, rank, |r, c| svd.u.get(r, c)),
        singular: svd.sigma[..rank].to_vec(),
        right: DenseMatrix::from_fn(block.cols, rank, |r, c| svd.v.get(r, c)),
        rank,
        tol,
        residual,
        block_ref: None,
    })
}

/// Far-field block of a coefficient matrix as a dense matrix.
pub fn far_block<T: Real>(matrix: &CoeffMatrix<T>, pair: &IntervalPair) -> DenseMatrix<T> {
    DenseMatrix::from_rows(&matrix.block(pair.left, pair.right))
}

/// Rank of one far-field block of one Pauli pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RankEntry<T: Real = f64> {
    pub layer: usize,
    pub block: usize,
    pub pair: PauliPair,
    pub side: usize,
    pub rank: usize,
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankProfile<T: Real = f64> {
    pub entries: Vec<RankEntry<T>>,
    /// Largest rank, floored at 1.
    pub rho_max: usize,
    pub tol: T,
}

impl<T: Real> RankProfile<T> {
    /// CSV with header `layer,block,pauli_pair,rank,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,block,pauli_pair,rank,residual\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{}{},{},{:e}\n",
                e.layer,
                e.block,
                e.pair.0,
                e.pair.1,
                e.rank,
                e.residual.as_f64()
            ));
        }
        out
    }
}

/// Truncated factors for every far-field block and Pauli pair.
pub fn far_field_factors<T: Real>(
    spec: &HamiltonianSpec<T>,
    decomp: &LowRankDecomposition,
    tol: T,
) -> Result<Vec<(PauliPair, TruncatedFactor<T>)>> {
    if decomp.n != spec.n() {
        return Err(Error::validation("decomposition and spec disagree on n"));
    }
    let jobs: Vec<(PauliPair, &CoeffMatrix<T>, IntervalPair)> = spec
        .two_local()
        .iter()
        .flat_map(|(p, m)| decomp.far.iter().map(move |b| (*p, m, *b)))
        .collect();
    jobs.into_par_iter()
        .map(|(p, m, b)| {
            let mut f = truncated_svd(&far_block(m, &b), tol)?;
            f.block_ref = Some(b);
            Ok((p, f))
        })
        .collect()
}

pub fn rank_profile<T: Real>(
    spec: &HamiltonianSpec<T>,
    decomp: &LowRankDecomposition,
    tol: T,
) -> Result<RankProfile<T>> {
    let factors = far_field_factors(spec, decomp, tol)?;
    let entries: Vec<RankEntry<T>> = factors
        .into_iter()
        .map(|(pair, f)| {
            let b = f.block_ref.expect("block reference");
            RankEntry { layer: b.layer, block: b.block, pair, side: b.left.len(), rank: f.rank, residual: f.residual }
        })
        .collect();
    let rho_max = entries.iter().map(|e| e.rank).max().unwrap_or(0).max(1);
    Ok(RankProfile { entries, rho_max, tol })
}

/// Largest far-field rank of a square matrix over a cube decomposition, floored at 1.
pub fn cube_rank_max<T: Real>(matrix: &CoeffMatrix<T>, decomp: &CubeDecomposition, tol: T) -> Result<usize> {
    let g = decomp.lattice_side;
    if matrix.n() != g.pow(decomp.d as u32) {
        return Err(Error::validation("matrix size does not match the lattice"));
    }
    let ranks: Result<Vec<usize>> = decomp
        .far
        .par_iter()
        .map(|p| {
            let (ra, rb) = (p.a.sites(g), p.b.sites(g));
            let block = DenseMatrix::from_fn(ra.len(), rb.len(), |r, c| matrix.sym(ra[r], rb[c]));
            Ok(truncated_svd(&block, tol)?.rank)
        })
        .collect();
    Ok(ranks?.into_iter().max().unwrap_or(0).max(1))
}
