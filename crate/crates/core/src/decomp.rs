//! Recursive decompositions of the interaction index set `{(u, v) : u < v}`.
//!
//! Three variants are provided: the bisection used by the block-encoding and
//! average-cost methods, the far/near/within split used by the low-rank
//! method, and its d-dimensional cube analogue. Nested dyadic boxes and
//! uniform subdivisions refine a single cross block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamlib::{CoeffMatrix, HamiltonianSpec, IndexRegion, Interval, NormKind, PauliPair, Rect};
use crate::scalar::Real;

/// Role of a rectangle within a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RectKind {
    Far,
    Near,
    Within,
}

/// Cross block `left × right` at layer `ℓ`, block `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntervalPair {
    pub layer: usize,
    pub block: usize,
    pub left: Interval,
    pub right: Interval,
}

impl IntervalPair {
    pub fn rect(&self) -> Rect {
        Rect::new(self.left, self.right)
    }

    pub fn region(&self) -> IndexRegion {
        IndexRegion::single(self.rect())
    }

    /// Number of sites strictly between the two intervals.
    pub fn gap(&self) -> usize {
        self.right.lo - self.left.hi - 1
    }
}

/// One row of a decomposition listing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleRecord {
    pub layer: usize,
    pub block: usize,
    pub left: [usize; 2],
    pub right: [usize; 2],
    pub kind: RectKind,
}

impl RectangleRecord {
    fn pair(p: &IntervalPair, kind: RectKind) -> Self {
        RectangleRecord {
            layer: p.layer,
            block: p.block,
            left: [p.left.lo, p.left.hi],
            right: [p.right.lo, p.right.hi],
            kind,
        }
    }

    /// Index pairs `(u, v)`, `u < v`, covered by this record.
    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        match self.kind {
            RectKind::Within => {
                for u in self.left[0]..=self.left[1] {
                    for v in u + 1..=self.left[1] {
                        out.push((u, v));
                    }
                }
            }
            _ => {
                for u in self.left[0]..=self.left[1] {
                    for v in self.right[0]..=self.right[1] {
                        out.push((u, v));
                    }
                }
            }
        }
        out
    }
}

fn check_power_of_two(n: usize, min: usize) -> Result<u32> {
    if n < min || !n.is_power_of_two() {
        return Err(Error::domain(format!("n = {n} must be a power of 2 and >= {min}")));
    }
    Ok(n.trailing_zeros())
}

/// Bisection of `[1, n]` down to singletons; `n − 1` cross blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisectionDecomposition {
    pub n: usize,
    pub pairs: Vec<IntervalPair>,
}

pub fn bisection_decompose(n: usize) -> Result<BisectionDecomposition> {
    let depth = check_power_of_two(n, 2)? as usize;
    let mut pairs = Vec::with_capacity(n - 1);
    for layer in 1..=depth {
        let s = n >> layer;
        for block in 0..(1usize << (layer - 1)) {
            let a = 2 * block * s;
            pairs.push(IntervalPair {
                layer,
                block,
                left: Interval::new(a + 1, a + s),
                right: Interval::new(a + s + 1, a + 2 * s),
            });
        }
    }
    Ok(BisectionDecomposition { n, pairs })
}

impl BisectionDecomposition {
    /// Adjacent cross blocks are listed as `near`.
    pub fn listing(&self) -> Vec<RectangleRecord> {
        self.pairs.iter().map(|p| RectangleRecord::pair(p, RectKind::Near)).collect()
    }
}

/// Far-field blocks, adjacent near-field blocks and diagonal leaf intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowRankDecomposition {
    pub n: usize,
    pub cutoff: usize,
    pub far: Vec<IntervalPair>,
    pub near: Vec<IntervalPair>,
    pub within: Vec<Interval>,
}

pub fn lowrank_decompose(n: usize, cutoff: usize) -> Result<LowRankDecomposition> {
    check_power_of_two(n, 4)?;
    if cutoff == 0 || !cutoff.is_power_of_two() || cutoff > n / 4 {
        return Err(Error::domain(format!("cutoff = {cutoff} must be a power of 2 in 1..={}", n / 4)));
    }
    let depth = (n / cutoff).trailing_zeros() as usize;
    let unit = |i: usize, s: usize| Interval::new(1 + i * s, (i + 1) * s);
    let mut far = Vec::new();
    for layer in 2..=depth {
        let s = n >> layer;
        for block in 0..(1usize << (layer - 1)) - 1 {
            for (i, j) in [(2 * block, 2 * block + 2), (2 * block, 2 * block + 3), (2 * block + 1, 2 * block + 3)] {
                far.push(IntervalPair { layer, block, left: unit(i, s), right: unit(j, s) });
            }
        }
    }
    let leaves = n / cutoff;
    let near = (0..leaves - 1)
        .map(|b| IntervalPair { layer: depth, block: b, left: unit(b, cutoff), right: unit(b + 1, cutoff) })
        .collect();
    let within = (0..leaves).map(|b| unit(b, cutoff)).collect();
    Ok(LowRankDecomposition { n, cutoff, far, near, within })
}

impl LowRankDecomposition {
    pub fn listing(&self) -> Vec<RectangleRecord> {
        let depth = (self.n / self.cutoff).trailing_zeros() as usize;
        let mut out: Vec<_> = self.far.iter().map(|p| RectangleRecord::pair(p, RectKind::Far)).collect();
        out.extend(self.near.iter().map(|p| RectangleRecord::pair(p, RectKind::Near)));
        out.extend(self.within.iter().enumerate().map(|(b, iv)| RectangleRecord {
            layer: depth,
            block: b,
            left: [iv.lo, iv.hi],
            right: [iv.lo, iv.hi],
            kind: RectKind::Within,
        }));
        out
    }
}

/// Region of a [`BoxGrid`], in shifted coordinates `(|u|, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxKind {
    Dyadic { mu: u32, nu: u32 },
    BoundaryRow,
    BoundaryCol,
    Corner,
}

/// Rectangle `|u| ∈ [u_lo, u_hi]`, `v ∈ [v_lo, v_hi]` of the shifted cross block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridBox {
    pub kind: BoxKind,
    pub u: (usize, usize),
    pub v: (usize, usize),
}

impl GridBox {
    pub fn cells(&self) -> usize {
        (self.u.1 + 1 - self.u.0) * (self.v.1 + 1 - self.v.0)
    }
}

/// Nested dyadic boxes over a cross block with `half_size` sites per side.
///
/// The left site adjacent to the cut has `|u| = 1` and the leftmost has
/// `|u| = half_size`; on the right `v` runs from 1 to `half_size`. Dyadic
/// boxes cover `|u|, v < half_size`; the outermost row, column and corner
/// are kept as three boundary boxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxGrid {
    pub half_size: usize,
    pub boxes: Vec<GridBox>,
}

impl BoxGrid {
    /// Grid for any power-of-two half size, including the single-cell case.
    pub fn build(half_size: usize) -> Result<Self> {
        let levels = check_power_of_two(half_size, 1)?;
        let h = half_size;
        let mut boxes = Vec::new();
        for mu in 0..levels {
            for nu in 0..levels {
                boxes.push(GridBox {
                    kind: BoxKind::Dyadic { mu, nu },
                    u: (1 << mu, (2 << mu) - 1),
                    v: (1 << nu, (2 << nu) - 1),
                });
            }
        }
        if h > 1 {
            boxes.push(GridBox { kind: BoxKind::BoundaryRow, u: (h, h), v: (1, h - 1) });
            boxes.push(GridBox { kind: BoxKind::BoundaryCol, u: (1, h - 1), v: (h, h) });
        }
        boxes.push(GridBox { kind: BoxKind::Corner, u: (h, h), v: (h, h) });
        Ok(BoxGrid { half_size, boxes })
    }

    pub fn dyadic(&self) -> impl Iterator<Item = &GridBox> {
        self.boxes.iter().filter(|b| matches!(b.kind, BoxKind::Dyadic { .. }))
    }

    /// Site rectangle of a box for the cross block `left × right`.
    pub fn site_rect(&self, b: &GridBox, left: Interval, right: Interval) -> Rect {
        let cut = left.hi + 1;
        Rect::new(
            Interval::new(cut - b.u.1, cut - b.u.0),
            Interval::new(right.lo + b.v.0 - 1, right.lo + b.v.1 - 1),
        )
    }

    pub fn regions(&self, left: Interval, right: Interval) -> Vec<IndexRegion> {
        self.boxes.iter().map(|b| IndexRegion::single(self.site_rect(b, left, right))).collect()
    }
}

/// Dyadic box grid of a cross block with `half_size ≥ 2` sites per side.
pub fn nested_boxes(half_size: usize) -> Result<BoxGrid> {
    check_power_of_two(half_size, 2)?;
    BoxGrid::build(half_size)
}

/// Uniform `m × m` subdivision of a cross block, cut points `l_j = 1 + ⌊(j−1)h/m⌋`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdivision {
    pub m: usize,
    pub half_size: usize,
    pub cuts: Vec<usize>,
}

impl Subdivision {
    pub fn new(half_size: usize, m: usize) -> Result<Self> {
        if m == 0 || m > half_size {
            return Err(Error::domain(format!("m = {m} outside 1..={half_size}")));
        }
        let cuts = (1..=m + 1).map(|j| 1 + (j - 1) * half_size / m).collect();
        Ok(Subdivision { m, half_size, cuts })
    }

    /// Ranges in shifted coordinates along either side.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        self.cuts.windows(2).map(|w| (w[0], w[1] - 1)).collect()
    }

    /// Site rectangles of all `m²` cells for the cross block `left × right`.
    pub fn cell_rects(&self, left: Interval, right: Interval) -> Vec<Rect> {
        let cut = left.hi + 1;
        let seg = self.segments();
        let mut out = Vec::with_capacity(self.m * self.m);
        for &(ul, uh) in &seg {
            for &(vl, vh) in &seg {
                out.push(Rect::new(
                    Interval::new(cut - uh, cut - ul),
                    Interval::new(right.lo + vl - 1, right.lo + vh - 1),
                ));
            }
        }
        out
    }
}

/// Per-block amplification ratios for one Pauli pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionRatio<T: Real = f64> {
    pub pair: PauliPair,
    pub layer: usize,
    pub block: usize,
    /// `‖β‖_{1,box} / ‖β‖₁` over the block.
    pub block_ratio: T,
    /// Largest `|C|·‖β‖_{max,C} / ‖β‖_{1,C}` over the block's cells.
    pub avg_ratio: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplificationReport<T: Real = f64> {
    pub lambda_block: T,
    pub lambda_avg: Option<T>,
    pub table: Vec<RegionRatio<T>>,
}

/// `‖β‖_{1,box}/‖β‖₁` of one cross block; 1 for an all-zero block.
pub fn block_ratio<T: Real>(matrix: &CoeffMatrix<T>, pair: &IntervalPair) -> Result<T> {
    let grid = BoxGrid::build(pair.left.len())?;
    let regions = grid.regions(pair.left, pair.right);
    let one = matrix.norm(&NormKind::Restricted1(&pair.region()))?;
    if one == T::zero() {
        return Ok(T::one());
    }
    Ok(matrix.norm(&NormKind::Box1(&regions))? / one)
}

fn cell_ratio<T: Real>(matrix: &CoeffMatrix<T>, rect: Rect) -> Result<T> {
    let region = IndexRegion::single(rect);
    let one = matrix.norm(&NormKind::Restricted1(&region))?;
    if one == T::zero() {
        return Ok(T::one());
    }
    let area = T::from_usize(rect.area()).expect("area");
    Ok(area * matrix.norm(&NormKind::RestrictedMax(&region))? / one)
}

/// `λ_block` (and `λ_avg` when `m` is given) over all pairs and blocks.
///
/// Blocks with fewer than `m` sites per side use `m = half_size`.
pub fn amplification_ratios<T: Real>(
    spec: &HamiltonianSpec<T>,
    decomp: &BisectionDecomposition,
    m: Option<usize>,
) -> Result<AmplificationReport<T>> {
    if decomp.n != spec.n() {
        return Err(Error::validation("decomposition and spec disagree on n"));
    }
    let mut table = Vec::new();
    let mut lambda_block = T::one();
    let mut lambda_avg = m.map(|_| T::one());
    for (&pp, matrix) in spec.two_local() {
        for pair in &decomp.pairs {
            let br = block_ratio(matrix, pair)?;
            lambda_block = lambda_block.max(br);
            let avg = match m {
                Some(m) => {
                    let h = pair.left.len();
                    let sub = Subdivision::new(h, m.min(h))?;
                    let mut best = T::one();
                    for rect in sub.cell_rects(pair.left, pair.right) {
                        best = best.max(cell_ratio(matrix, rect)?);
                    }
                    Some(best)
                }
                None => None,
            };
            if let (Some(a), Some(l)) = (avg, lambda_avg.as_mut()) {
                *l = l.max(a);
            }
            table.push(RegionRatio { pair: pp, layer: pair.layer, block: pair.block, block_ratio: br, avg_ratio: avg });
        }
    }
    Ok(AmplificationReport { lambda_block, lambda_avg, table })
}

/// Axis-aligned cube of `side^d` lattice sites at a given refinement level.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub level: usize,
    /// Cube index along each axis, 0-based.
    pub index: Vec<usize>,
    pub side: usize,
}

impl Cube {
    /// 1-based site labels in the lattice's row-major order.
    pub fn sites(&self, lattice_side: usize) -> Vec<usize> {
        let d = self.index.len();
        let count = self.side.pow(d as u32);
        let mut out = Vec::with_capacity(count);
        for offset in 0..count {
            let mut rem = offset;
            let mut label = 0;
            let mut stride = 1;
            for axis in 0..d {
                let c = self.index[axis] * self.side + rem % self.side;
                rem /= self.side;
                label += c * stride;
                stride *= lattice_side;
            }
            out.push(label + 1);
        }
        out.sort_unstable();
        out
    }

    fn chebyshev(&self, other: &Cube) -> usize {
        self.index.iter().zip(&other.index).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0)
    }

    fn children(&self) -> Vec<Cube> {
        let d = self.index.len();
        (0..1usize << d)
            .map(|mask| Cube {
                level: self.level + 1,
                index: (0..d).map(|a| 2 * self.index[a] + ((mask >> a) & 1)).collect(),
                side: self.side / 2,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubePair {
    pub level: usize,
    pub a: Cube,
    pub b: Cube,
}

/// d-dimensional far/near/within decomposition of a `g^d` lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeDecomposition {
    pub lattice_side: usize,
    pub d: usize,
    pub leaf_side: usize,
    pub far: Vec<CubePair>,
    pub near: Vec<CubePair>,
    pub within: Vec<Cube>,
}

/// Recursive halving along every axis; children of adjacent (or equal)
/// parents that are not themselves adjacent form the far field.
pub fn cube_decompose(lattice_side: usize, d: usize, leaf_side: usize) -> Result<CubeDecomposition> {
    check_power_of_two(lattice_side, 4)?;
    if !(1..=3).contains(&d) {
        return Err(Error::Dimension(format!("d = {d} outside 1..=3")));
    }
    if leaf_side == 0 || !leaf_side.is_power_of_two() || leaf_side > lattice_side / 4 {
        return Err(Error::domain("leaf side must be a power of 2 and at most lattice side / 4"));
    }
    let root = Cube { level: 0, index: vec![0; d], side: lattice_side };
    let mut level_cubes = vec![root];
    let mut far = Vec::new();
    while level_cubes[0].side > leaf_side {
        let mut next = Vec::new();
        for (i, p) in level_cubes.iter().enumerate() {
            let kids_p = p.children();
            for q in &level_cubes[i..] {
                if p.chebyshev(q) > 1 {
                    continue;
                }
                let same = p == q;
                let kids_q = if same { kids_p.clone() } else { q.children() };
                for (x, a) in kids_p.iter().enumerate() {
                    for (y, b) in kids_q.iter().enumerate() {
                        if (same && y <= x) || a.chebyshev(b) <= 1 {
                            continue;
                        }
                        let (a, b) = if a < b { (a, b) } else { (b, a) };
                        far.push(CubePair { level: a.level, a: a.clone(), b: b.clone() });
                    }
                }
            }
            next.extend(kids_p);
        }
        next.sort();
        level_cubes = next;
    }
    let mut near = Vec::new();
    for (i, a) in level_cubes.iter().enumerate() {
        for b in &level_cubes[i + 1..] {
            if a.chebyshev(b) <= 1 {
                near.push(CubePair { level: a.level, a: a.clone(), b: b.clone() });
            }
        }
    }
    Ok(CubeDecomposition { lattice_side, d, leaf_side, far, near, within: level_cubes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn cover_counts(records: &[RectangleRecord]) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for r in records {
            for p in r.index_pairs() {
                *counts.entry(p).or_insert(0) += 1;
            }
        }
        counts
    }

    fn assert_exact_cover(n: usize, records: &[RectangleRecord]) {
        let counts = cover_counts(records);
        assert_eq!(counts.len(), n * (n - 1) / 2, "n = {n}");
        assert!(counts.iter().all(|((u, v), c)| u < v && *v <= n && *c == 1));
    }

    #[test]
    fn bisection_examples() {
        let d = bisection_decompose(2).unwrap();
        assert_eq!(d.pairs.len(), 1);
        assert_eq!((d.pairs[0].left, d.pairs[0].right), (Interval::new(1, 1), Interval::new(2, 2)));
        let d = bisection_decompose(4).unwrap();
        let got: Vec<_> = d.pairs.iter().map(|p| (p.left.lo, p.left.hi, p.right.lo, p.right.hi)).collect();
        assert_eq!(got, vec![(1, 2, 3, 4), (1, 1, 2, 2), (3, 3, 4, 4)]);
        let d = bisection_decompose(8).unwrap();
        assert_eq!(d.pairs.len(), 7);
        assert!(bisection_decompose(6).is_err());
    }

    #[test]
    fn bisection_covers_exactly() {
        for n in [2, 4, 8, 16, 32, 64] {
            let d = bisection_decompose(n).unwrap();
            assert!(d.pairs.len() <= 2 * n);
            assert_exact_cover(n, &d.listing());
        }
    }

    #[test]
    fn lowrank_example_n8() {
        let d = lowrank_decompose(8, 2).unwrap();
        let far: Vec<_> = d.far.iter().map(|p| (p.left.lo, p.left.hi, p.right.lo, p.right.hi)).collect();
        assert_eq!(far, vec![(1, 2, 5, 6), (1, 2, 7, 8), (3, 4, 7, 8)]);
        let near: Vec<_> = d.near.iter().map(|p| (p.left.lo, p.right.hi)).collect();
        assert_eq!(near, vec![(1, 4), (3, 6), (5, 8)]);
        assert_eq!(d.within.len(), 4);
        assert_exact_cover(8, &d.listing());
    }

    #[test]
    fn lowrank_covers_and_far_field_is_admissible() {
        for n in [4, 8, 16, 32, 64] {
            let mut cutoff = 1;
            while cutoff <= n / 4 {
                let d = lowrank_decompose(n, cutoff).unwrap();
                assert_exact_cover(n, &d.listing());
                assert!(d.far.iter().all(|p| p.gap() >= p.left.len()));
                cutoff *= 2;
            }
        }
        let d = lowrank_decompose(32, 8).unwrap();
        assert_eq!(d.far.len(), 3);
        assert!(d.far.iter().all(|p| p.layer == 2));
        assert!(lowrank_decompose(16, 8).is_err());
        assert!(lowrank_decompose(16, 3).is_err());
    }

    #[test]
    fn box_grid_counts() {
        for (h, dyadic) in [(2, 1), (4, 4), (8, 9), (16, 16)] {
            let g = nested_boxes(h).unwrap();
            assert_eq!(g.dyadic().count(), dyadic);
            for b in g.dyadic() {
                if let BoxKind::Dyadic { mu, nu } = b.kind {
                    assert_eq!(b.cells(), 1 << (mu + nu));
                }
            }
            assert_eq!(g.boxes.iter().map(GridBox::cells).sum::<usize>(), h * h);
        }
        assert!(nested_boxes(1).is_err());
        assert!(nested_boxes(6).is_err());
    }

    #[test]
    fn box_regions_partition_the_cross_block() {
        let left = Interval::new(9, 16);
        let right = Interval::new(17, 24);
        let g = BoxGrid::build(8).unwrap();
        let mut seen = HashMap::new();
        for r in g.regions(left, right) {
            for rect in r.rects() {
                for u in rect.rows.sites() {
                    for v in rect.cols.sites() {
                        *seen.entry((u, v)).or_insert(0) += 1;
                    }
                }
            }
        }
        assert_eq!(seen.len(), 64);
        assert!(seen.iter().all(|((u, v), c)| left.contains(*u) && right.contains(*v) && *c == 1));
    }

    #[test]
    fn subdivision_cells_partition() {
        let sub = Subdivision::new(10, 3).unwrap();
        assert_eq!(sub.cuts, vec![1, 4, 7, 11]);
        let rects = sub.cell_rects(Interval::new(1, 10), Interval::new(11, 20));
        assert_eq!(rects.iter().map(Rect::area).sum::<usize>(), 100);
        assert!(Subdivision::new(4, 5).is_err());
    }

    #[test]
    fn cube_decomposition_covers_pairs() {
        for (g, d, leaf) in [(8, 1, 1), (8, 1, 2), (4, 2, 1), (8, 2, 2), (4, 3, 1)] {
            let dec = cube_decompose(g, d, leaf).unwrap();
            let n = g.pow(d as u32);
            let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
            let mut bump = |x: usize, y: usize| {
                let key = (x.min(y), x.max(y));
                *counts.entry(key).or_insert(0) += 1;
            };
            for p in dec.far.iter().chain(&dec.near) {
                for &x in &p.a.sites(g) {
                    for &y in &p.b.sites(g) {
                        bump(x, y);
                    }
                }
            }
            for c in &dec.within {
                let s = c.sites(g);
                for (i, &x) in s.iter().enumerate() {
                    for &y in &s[i + 1..] {
                        bump(x, y);
                    }
                }
            }
            assert_eq!(counts.len(), n * (n - 1) / 2);
            assert!(counts.values().all(|c| *c == 1));
            assert!(dec.far.iter().all(|p| p.a.chebyshev(&p.b) >= 2));
        }
    }

    #[test]
    fn one_dimensional_cubes_match_interval_far_field() {
        let cubes = cube_decompose(16, 1, 2).unwrap();
        let ivs = lowrank_decompose(16, 2).unwrap();
        let mut a: Vec<_> = cubes
            .far
            .iter()
            .map(|p| {
                let (x, y) = (p.a.sites(16), p.b.sites(16));
                (x[0], *x.last().unwrap(), y[0], *y.last().unwrap())
            })
            .collect();
        let mut b: Vec<_> = ivs.far.iter().map(|p| (p.left.lo, p.left.hi, p.right.lo, p.right.hi)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
