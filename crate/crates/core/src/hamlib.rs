//! Coefficient data for 2-local Pauli Hamiltonians on d-dimensional lattices.
//!
//! A Hamiltonian is stored as one coefficient matrix per Pauli pair
//! `(σ, σ')`, an on-site vector per Pauli kind and an identity offset.
//! Site indices are 1-based throughout the public API.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub const ALL: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            PauliKind::I => 'I',
            PauliKind::X => 'X',
            PauliKind::Y => 'Y',
            PauliKind::Z => 'Z',
        }
    }

    /// Dense 2×2 matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliKind::I => [[l, o], [o, l]],
            PauliKind::X => [[o, l], [l, o]],
            PauliKind::Y => [[o, -i], [i, o]],
            PauliKind::Z => [[l, o], [o, -l]],
        }
    }
}

impl fmt::Display for PauliKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol().to_ascii_lowercase())
    }
}

impl std::str::FromStr for PauliKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" => Ok(PauliKind::I),
            "x" => Ok(PauliKind::X),
            "y" => Ok(PauliKind::Y),
            "z" => Ok(PauliKind::Z),
            other => Err(Error::validation(format!("unknown Pauli label {other:?}"))),
        }
    }
}

/// Ordered Pauli pair `(σ, σ')` labelling a 2-local coefficient matrix.
pub type PauliPair = (PauliKind, PauliKind);

/// Closed interval of sites `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo >= 1 && lo <= hi);
        Interval { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn contains(&self, site: usize) -> bool {
        self.lo <= site && site <= self.hi
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Rectangle `rows × cols` of index pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub rows: Interval,
    pub cols: Interval,
}

impl Rect {
    pub fn new(rows: Interval, cols: Interval) -> Self {
        Rect { rows, cols }
    }

    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.rows.contains(u) && self.cols.contains(v)
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.rows.lo <= other.rows.hi
            && other.rows.lo <= self.rows.hi
            && self.cols.lo <= other.cols.hi
            && other.cols.lo <= self.cols.hi
    }
}

/// Set of index pairs given as a union of pairwise disjoint rectangles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexRegion {
    rects: Vec<Rect>,
}

impl IndexRegion {
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        for (a, ra) in rects.iter().enumerate() {
            for rb in &rects[a + 1..] {
                if ra.overlaps(rb) {
                    return Err(Error::validation("index region rectangles overlap"));
                }
            }
        }
        Ok(IndexRegion { rects })
    }

    pub fn single(rect: Rect) -> Self {
        IndexRegion { rects: vec![rect] }
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn cell_count(&self) -> usize {
        self.rects.iter().map(Rect::area).sum()
    }

    fn max_index(&self) -> usize {
        self.rects
            .iter()
            .map(|r| r.rows.hi.max(r.cols.hi))
            .max()
            .unwrap_or(0)
    }
}

/// Storage shape of a coefficient matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Only `j < k` is populated; induced norms use the symmetric completion.
    StrictUpper,
    /// Every entry is stored (kinetic and Coulomb matrices).
    Square,
}

/// Real coefficient matrix on `n` sites, dense row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMatrix<T: Real = f64> {
    n: usize,
    layout: Layout,
    data: Vec<T>,
}

/// Norm selector for [`CoeffMatrix::norm`].
#[derive(Clone, Debug)]
pub enum NormKind<'a> {
    Vec1,
    Max,
    Euclid,
    Induced1,
    Induced1Restricted(usize),
    RestrictedMax(&'a IndexRegion),
    Restricted1(&'a IndexRegion),
    /// Σ over boxes of (cell count) × (max |β| within the box).
    Box1(&'a [IndexRegion]),
}

impl<T: Real> CoeffMatrix<T> {
    pub fn zeros_upper(n: usize) -> Self {
        CoeffMatrix { n, layout: Layout::StrictUpper, data: vec![T::zero(); n * n] }
    }

    pub fn zeros_square(n: usize) -> Self {
        CoeffMatrix { n, layout: Layout::Square, data: vec![T::zero(); n * n] }
    }

    /// Strict upper triangle filled from `f(j, k)` for `j < k`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros_upper(n);
        for j in 1..=n {
            for k in j + 1..=n {
                m.data[(j - 1) * n + (k - 1)] = f(j, k);
            }
        }
        m
    }

    pub fn from_square_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros_square(n);
        for j in 1..=n {
            for k in 1..=n {
                m.data[(j - 1) * n + (k - 1)] = f(j, k);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Stored entry; zero outside the stored pattern.
    pub fn get(&self, j: usize, k: usize) -> T {
        debug_assert!(j >= 1 && k >= 1 && j <= self.n && k <= self.n);
        self.data[(j - 1) * self.n + (k - 1)]
    }

    /// Entry with the symmetric completion `β_{kj} := β_{jk}` for upper layouts.
    pub fn sym(&self, j: usize, k: usize) -> T {
        match self.layout {
            Layout::Square => self.get(j, k),
            Layout::StrictUpper => match j.cmp(&k) {
                std::cmp::Ordering::Less => self.get(j, k),
                std::cmp::Ordering::Greater => self.get(k, j),
                std::cmp::Ordering::Equal => T::zero(),
            },
        }
    }

    pub fn set(&mut self, j: usize, k: usize, value: T) -> Result<()> {
        if j == 0 || k == 0 || j > self.n || k > self.n {
            return Err(Error::Index(format!("({j},{k}) outside 1..={}", self.n)));
        }
        if self.layout == Layout::StrictUpper && j >= k {
            return Err(Error::Index(format!("({j},{k}) not in the strict upper triangle")));
        }
        if !value.is_finite() {
            return Err(Error::validation("non-finite coefficient"));
        }
        self.data[(j - 1) * self.n + (k - 1)] = value;
        Ok(())
    }

    /// Nonzero stored entries in lexicographic order.
    pub fn entries(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for j in 1..=self.n {
            for k in 1..=self.n {
                let v = self.get(j, k);
                if v != T::zero() {
                    out.push((j, k, v));
                }
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != T::zero()).count()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    /// Dense sub-block `rows × cols` read through the symmetric view.
    pub fn block(&self, rows: Interval, cols: Interval) -> Vec<Vec<T>> {
        rows.sites()
            .map(|u| cols.sites().map(|v| self.sym(u, v)).collect())
            .collect()
    }

    fn abs_row(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        (1..=self.n).map(move |k| self.sym(j, k).abs())
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> CoeffMatrix<U> {
        CoeffMatrix { n: self.n, layout: self.layout, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    pub fn cast<U: Real>(&self) -> CoeffMatrix<U> {
        self.map(|v| U::lit(v.as_f64()))
    }

    fn region_values<'a>(&'a self, region: &'a IndexRegion) -> impl Iterator<Item = T> + 'a {
        region.rects().iter().flat_map(move |r| {
            r.rows.sites().flat_map(move |u| r.cols.sites().map(move |v| self.sym(u, v).abs()))
        })
    }

    fn check_region(&self, region: &IndexRegion) -> Result<()> {
        if region.max_index() > self.n {
            return Err(Error::domain("region exceeds the matrix index range"));
        }
        Ok(())
    }

    pub fn norm(&self, kind: &NormKind<'_>) -> Result<T> {
        let fold_max = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, b| a.max(b));
        Ok(match kind {
            NormKind::Vec1 => self.data.iter().map(|v| v.abs()).sum(),
            NormKind::Max => fold_max(&mut self.data.iter().map(|v| v.abs())),
            NormKind::Euclid => self.data.iter().map(|v| *v * *v).sum::<T>().sqrt(),
            NormKind::Induced1 => {
                fold_max(&mut (1..=self.n).map(|j| self.abs_row(j).sum::<T>()))
            }
            NormKind::Induced1Restricted(eta) => {
                if *eta == 0 || *eta > self.n {
                    return Err(Error::domain(format!("eta = {eta} outside 1..={}", self.n)));
                }
                let mut best = T::zero();
                for j in 1..=self.n {
                    let mut row: Vec<T> = self.abs_row(j).collect();
                    row.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                    best = best.max(row.iter().take(*eta).copied().sum());
                }
                best
            }
            NormKind::RestrictedMax(region) => {
                self.check_region(region)?;
                fold_max(&mut self.region_values(region))
            }
            NormKind::Restricted1(region) => {
                self.check_region(region)?;
                self.region_values(region).sum()
            }
            NormKind::Box1(boxes) => {
                let mut total = T::zero();
                for b in boxes.iter() {
                    self.check_region(b)?;
                    let cells = T::from_usize(b.cell_count()).expect("cell count");
                    total += cells * fold_max(&mut self.region_values(b));
                }
                total
            }
        })
    }
}

/// Free-function form of [`CoeffMatrix::norm`].
pub fn norms<T: Real>(matrix: &CoeffMatrix<T>, kind: &NormKind<'_>) -> Result<T> {
    matrix.norm(kind)
}

/// Hypercubic lattice `{1..side}^d`; site `s` (1-based) has coordinates in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub d: usize,
    pub side: usize,
}

impl Lattice {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Dimension(format!("d = {d} outside 1..=3")));
        }
        let side = (n as f64).powf(1.0 / d as f64).round() as usize;
        if side.pow(d as u32) != n {
            return Err(Error::Dimension(format!("n = {n} is not a perfect power {d}")));
        }
        Ok(Lattice { d, side })
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rem = site - 1;
        let mut out = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            out.push(rem % self.side + 1);
            rem /= self.side;
        }
        out
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| {
                let d = *x as f64 - *y as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Sign assignment for generated power-law couplings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignRule {
    AllPositive,
    /// `(−1)^{j+k}`.
    Alternating,
    SeededRandom(u64),
}

/// One Pauli product term with its real coefficient; sites are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm<T: Real = f64> {
    pub ops: Vec<(usize, PauliKind)>,
    pub coeff: T,
}

/// 2-local Hamiltonian `Σ β^{(σσ')}_{jk} σ_j σ'_k + Σ β^{(σ)}_j σ_j + β^{(i)} I`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec<T: Real = f64> {
    n: usize,
    lattice: Lattice,
    alpha: Option<T>,
    two_local: BTreeMap<PauliPair, CoeffMatrix<T>>,
    on_site: BTreeMap<PauliKind, Vec<T>>,
    identity: T,
}

impl<T: Real> HamiltonianSpec<T> {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("n must be positive"));
        }
        Ok(HamiltonianSpec {
            n,
            lattice: Lattice::new(n, d)?,
            alpha: None,
            two_local: BTreeMap::new(),
            on_site: BTreeMap::new(),
            identity: T::zero(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.lattice.d
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn alpha(&self) -> Option<T> {
        self.alpha
    }

    pub fn identity(&self) -> T {
        self.identity
    }

    pub fn two_local(&self) -> &BTreeMap<PauliPair, CoeffMatrix<T>> {
        &self.two_local
    }

    pub fn on_site(&self) -> &BTreeMap<PauliKind, Vec<T>> {
        &self.on_site
    }

    pub fn pair(&self, pair: PauliPair) -> Option<&CoeffMatrix<T>> {
        self.two_local.get(&pair)
    }

    pub fn with_alpha(mut self, alpha: Option<T>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_identity(mut self, value: T) -> Self {
        self.identity = value;
        self
    }

    /// Adds (or replaces) the coefficient matrix for `(σ, σ')`.
    pub fn with_two_local(mut self, pair: PauliPair, matrix: CoeffMatrix<T>) -> Result<Self> {
        if matrix.n() != self.n || matrix.layout() != Layout::StrictUpper {
            return Err(Error::validation("two-local matrix must be strict upper on n sites"));
        }
        if (pair.0 == PauliKind::I || pair.1 == PauliKind::I) && !matrix.is_zero() {
            return Err(Error::validation("identity cannot carry a 2-local coefficient"));
        }
        self.two_local.insert(pair, matrix);
        Ok(self)
    }

    pub fn with_on_site(mut self, sigma: PauliKind, values: Vec<T>) -> Result<Self> {
        if values.len() != self.n || sigma == PauliKind::I {
            return Err(Error::validation("on-site vector must have n entries and a non-identity label"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite on-site coefficient"));
        }
        self.on_site.insert(sigma, values);
        Ok(self)
    }

    /// Nonzero terms ordered by `(σ, σ', j, k)`, then on-site terms by `(σ, j)`.
    pub fn terms(&self) -> Vec<PauliTerm<T>> {
        let mut out = Vec::new();
        for (&(s1, s2), m) in &self.two_local {
            for (j, k, v) in m.entries() {
                out.push(PauliTerm { ops: vec![(j, s1), (k, s2)], coeff: v });
            }
        }
        for (&s, vals) in &self.on_site {
            for (j, v) in vals.iter().enumerate() {
                if *v != T::zero() {
                    out.push(PauliTerm { ops: vec![(j + 1, s)], coeff: *v });
                }
            }
        }
        out
    }

    pub fn term_count(&self) -> usize {
        self.two_local.values().map(CoeffMatrix::nnz).sum::<usize>()
            + self.on_site.values().map(|v| v.iter().filter(|x| **x != T::zero()).count()).sum::<usize>()
    }

    /// True when every 2-local term is `Z⊗Z` and every on-site term is `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.two_local.iter().all(|(p, m)| *p == (PauliKind::Z, PauliKind::Z) || m.is_zero())
            && self.on_site.iter().all(|(s, v)| *s == PauliKind::Z || v.iter().all(|x| *x == T::zero()))
    }

    pub fn cast<U: Real>(&self) -> HamiltonianSpec<U> {
        HamiltonianSpec {
            n: self.n,
            lattice: self.lattice,
            alpha: self.alpha.map(|a| U::lit(a.as_f64())),
            two_local: self.two_local.iter().map(|(p, m)| (*p, m.cast())).collect(),
            on_site: self
                .on_site
                .iter()
                .map(|(s, v)| (*s, v.iter().map(|x| U::lit(x.as_f64())).collect()))
                .collect(),
            identity: U::lit(self.identity.as_f64()),
        }
    }
}

/// Exact power-law spec `|β_{jk}| = 1/dist(j,k)^α` on one Pauli pair.
pub fn build_power_law<T: Real>(
    n: usize,
    d: usize,
    alpha: f64,
    pair: PauliPair,
    sign: SignRule,
) -> Result<HamiltonianSpec<T>> {
    if n < 2 {
        return Err(Error::domain("power-law spec needs n >= 2"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha = {alpha} must be positive")));
    }
    let spec = HamiltonianSpec::<T>::new(n, d)?;
    let lattice = spec.lattice();
    let mut rng = match sign {
        SignRule::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let matrix = CoeffMatrix::from_upper_fn(n, |j, k| {
        let mag = lattice.distance(j, k).powf(-alpha);
        let s = match sign {
            SignRule::AllPositive => 1.0,
            SignRule::Alternating => {
                if (j + k) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            SignRule::SeededRandom(_) => {
                if rng.as_mut().expect("rng").gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        T::lit(s * mag)
    });
    spec.with_alpha(Some(T::lit(alpha))).with_two_local(pair, matrix)
}

/// Signed fixed-point number with `frac_bits` fractional bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    pub negative: bool,
    /// `|value| · 2^frac_bits`.
    pub magnitude: u128,
    pub frac_bits: u32,
}

impl FixedPoint {
    pub fn to_f64(&self) -> f64 {
        let v = self.magnitude as f64 / 2f64.powi(self.frac_bits as i32);
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Rounds `x` to `w` fractional bits, ties to even.
    pub fn round(x: f64, w: u32) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::validation("non-finite coefficient"));
        }
        if w > 96 {
            return Err(Error::domain("fixed-point width above 96 bits"));
        }
        let scaled = x.abs() * 2f64.powi(w as i32);
        if scaled >= 2f64.powi(126) {
            return Err(Error::domain("coefficient too large for the fixed-point range"));
        }
        let floor = scaled.floor();
        let frac = scaled - floor;
        let mut mag = floor as u128;
        if frac > 0.5 || (frac == 0.5 && mag % 2 == 1) {
            mag += 1;
        }
        Ok(FixedPoint { negative: x < 0.0 && mag != 0, magnitude: mag, frac_bits: w })
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.frac_bits;
        let int_part = if w >= 128 { 0 } else { self.magnitude >> w };
        let frac = self.magnitude - (int_part << w);
        if self.negative {
            write!(f, "-")?;
        }
        write!(f, "{int_part:b}")?;
        if w > 0 {
            write!(f, ".{:0width$b}", frac, width = w as usize)?;
        }
        Ok(())
    }
}

/// Coefficient oracle: `β_{jk}` of the given pair rounded to `w` fractional bits.
pub fn coeff_oracle<T: Real>(
    spec: &HamiltonianSpec<T>,
    pair: PauliPair,
    j: usize,
    k: usize,
    w: u32,
) -> Result<FixedPoint> {
    if j >= k || j == 0 || k > spec.n() {
        return Err(Error::Index(format!("need 1 <= j < k <= n, got ({j},{k})")));
    }
    let value = spec.pair(pair).map(|m| m.get(j, k)).unwrap_or_else(T::zero);
    FixedPoint::round(value.as_f64(), w)
}

/// Pauli coefficients `c[σ][σ'] = Tr(M·(σ⊗σ'))/4` of a Hermitian 4×4 matrix.
pub fn pauli_decompose_term(m: &[[Complex64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    for r in 0..4 {
        for c in 0..4 {
            if (m[r][c] - m[c][r].conj()).norm() > 1e-12 {
                return Err(Error::validation("matrix is not Hermitian"));
            }
        }
    }
    let mut out = [[0.0; 4]; 4];
    for a in PauliKind::ALL {
        for b in PauliKind::ALL {
            let p = kron2(a.matrix(), b.matrix());
            let mut tr = Complex64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    tr += m[r][c] * p[c][r];
                }
            }
            out[a.index()][b.index()] = tr.re / 4.0;
        }
    }
    Ok(out)
}

/// Kronecker product of two 2×2 matrices; the first factor is the high bit.
pub fn kron2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 4]; 4] {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = a[r / 2][c / 2] * b[r % 2][c % 2];
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    n: usize,
    d: usize,
    alpha: Option<f64>,
    terms: Vec<TermDocument>,
    #[serde(default)]
    onsite: Vec<OnsiteDocument>,
    #[serde(default)]
    identity: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDocument {
    sigma: PauliKind,
    sigma2: PauliKind,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OnsiteDocument {
    sigma: PauliKind,
    values: Vec<f64>,
}

impl<T: Real> HamiltonianSpec<T> {
    /// JSON document with entries `[j, k, value]` (1-based, `j < k`).
    pub fn to_json(&self) -> String {
        let doc = SpecDocument {
            n: self.n,
            d: self.lattice.d,
            alpha: self.alpha.map(Real::as_f64),
            terms: self
                .two_local
                .iter()
                .map(|(&(s1, s2), m)| TermDocument {
                    sigma: s1,
                    sigma2: s2,
                    entries: m.entries().into_iter().map(|(j, k, v)| (j, k, v.as_f64())).collect(),
                })
                .collect(),
            onsite: self
                .on_site
                .iter()
                .map(|(&s, v)| OnsiteDocument { sigma: s, values: v.iter().map(|x| x.as_f64()).collect() })
                .collect(),
            identity: self.identity.as_f64(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument =
            serde_json::from_str(text).map_err(|e| Error::validation(format!("spec JSON: {e}")))?;
        let mut spec = HamiltonianSpec::<T>::new(doc.n, doc.d)?
            .with_alpha(doc.alpha.map(T::lit))
            .with_identity(T::lit(doc.identity));
        for term in doc.terms {
            let mut m = spec
                .two_local
                .remove(&(term.sigma, term.sigma2))
                .unwrap_or_else(|| CoeffMatrix::zeros_upper(doc.n));
            for (j, k, v) in term.entries {
                m.set(j, k, T::lit(v))?;
            }
            spec = spec.with_two_local((term.sigma, term.sigma2), m)?;
        }
        for site in doc.onsite {
            spec = spec.with_on_site(site.sigma, site.values.into_iter().map(T::lit).collect())?;
        }
        Ok(spec)
    }
}
