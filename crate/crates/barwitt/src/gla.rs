//! Graded linear algebra over exact rationals: graded spaces with named
//! bases, degree-shifting maps, tensor products with Koszul signs, duals,
//! and cohomology of complexes.

use crate::matrix::{Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlaError {
    #[error("d^2 != 0 in degree {degree}: d(d({witness})) != 0")]
    DSquare { degree: i64, witness: String },
    #[error("block dimension mismatch in degree {0}")]
    BlockMismatch(i64),
}

/// Finite graded vector space with an ordered, named basis per degree.
/// Empty degrees are omitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSpace {
    pub basis: BTreeMap<i64, Vec<String>>,
}

impl GradedSpace {
    pub fn empty() -> Self {
        GradedSpace { basis: BTreeMap::new() }
    }

    pub fn from_dims(dims: &[(i64, usize)], prefix: &str) -> Self {
        let mut basis = BTreeMap::new();
        for &(d, n) in dims {
            if n > 0 {
                basis.insert(d, (0..n).map(|i| format!("{prefix}{d}_{i}")).collect());
            }
        }
        GradedSpace { basis }
    }

    pub fn single(degree: i64, labels: Vec<String>) -> Self {
        let mut basis = BTreeMap::new();
        if !labels.is_empty() {
            basis.insert(degree, labels);
        }
        GradedSpace { basis }
    }

    pub fn dim(&self, degree: i64) -> usize {
        self.basis.get(&degree).map_or(0, |v| v.len())
    }

    pub fn dims(&self) -> BTreeMap<i64, usize> {
        self.basis.iter().map(|(&d, v)| (d, v.len())).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.basis.values().map(|v| v.len()).sum()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.basis.keys().copied().collect()
    }

    pub fn top_degree(&self) -> Option<i64> {
        self.basis.keys().next_back().copied()
    }

    pub fn labels(&self, degree: i64) -> &[String] {
        self.basis.get(&degree).map_or(&[], |v| v.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Shift: degrees move up by `s` (V[-s] convention: shift(1) puts
    /// old degree d into new degree d+1).
    pub fn shifted(&self, s: i64) -> GradedSpace {
        GradedSpace { basis: self.basis.iter().map(|(&d, v)| (d + s, v.clone())).collect() }
    }
}

/// A degree-homogeneous linear map between graded spaces. `blocks[d]` maps
/// degree `d` of the source to degree `d + shift` of the target; missing
/// blocks are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedMap {
    pub source: GradedSpace,
    pub target: GradedSpace,
    pub shift: i64,
    pub blocks: BTreeMap<i64, Mat>,
}

impl GradedMap {
    pub fn zero(source: GradedSpace, target: GradedSpace, shift: i64) -> Self {
        GradedMap { source, target, shift, blocks: BTreeMap::new() }
    }

    pub fn identity(space: &GradedSpace) -> Self {
        let blocks = space
            .basis
            .iter()
            .map(|(&d, v)| (d, Mat::identity(v.len())))
            .collect();
        GradedMap { source: space.clone(), target: space.clone(), shift: 0, blocks }
    }

    pub fn block(&self, degree: i64) -> Mat {
        match self.blocks.get(&degree) {
            Some(m) => m.clone(),
            None => Mat::zero(self.target.dim(degree + self.shift), self.source.dim(degree)),
        }
    }

    pub fn set_block(&mut self, degree: i64, m: Mat) {
        assert_eq!(m.cols, self.source.dim(degree), "block cols mismatch in degree {degree}");
        assert_eq!(
            m.rows,
            self.target.dim(degree + self.shift),
            "block rows mismatch in degree {degree}"
        );
        if !m.is_zero() {
            self.blocks.insert(degree, m);
        } else {
            self.blocks.remove(&degree);
        }
    }

    pub fn check_dims(&self) -> Result<(), GlaError> {
        for (&d, m) in &self.blocks {
            if m.cols != self.source.dim(d) || m.rows != self.target.dim(d + self.shift) {
                return Err(GlaError::BlockMismatch(d));
            }
        }
        Ok(())
    }

    pub fn apply(&self, degree: i64, v: &[Q]) -> Vec<Q> {
        self.block(degree).mul_vec(v)
    }

    /// self after other: (self . other)(x) = self(other(x)).
    pub fn compose(&self, other: &GradedMap) -> GradedMap {
        assert_eq!(other.target, self.source, "compose: space mismatch");
        let shift = self.shift + other.shift;
        let mut out = GradedMap::zero(other.source.clone(), self.target.clone(), shift);
        for &d in other.source.basis.keys() {
            let m = self.block(d + other.shift).mul(&other.block(d));
            out.set_block(d, m);
        }
        out
    }

    pub fn add(&self, other: &GradedMap) -> GradedMap {
        assert_eq!(self.shift, other.shift);
        assert_eq!(self.source, other.source);
        assert_eq!(self.target, other.target);
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), self.shift);
        for &d in self.source.basis.keys() {
            out.set_block(d, self.block(d).add(&other.block(d)));
        }
        out
    }

    pub fn scale(&self, c: &Q) -> GradedMap {
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), self.shift);
        for (&d, m) in &self.blocks {
            out.set_block(d, m.scale(c));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|m| m.is_zero())
    }

    /// Reinterpret as a map with shifted source/target gradings.
    pub fn with_spaces(&self, source: GradedSpace, target: GradedSpace, shift: i64) -> GradedMap {
        let mut out = GradedMap::zero(source, target, shift);
        let offset = 0; // caller re-keys blocks explicitly when regrading
        let _ = offset;
        for (&d, m) in &self.blocks {
            out.set_block(d, m.clone());
        }
        out
    }
}

/// A cochain complex: graded space with a degree +1 differential.
#[derive(Clone, Debug)]
pub struct Complex {
    pub space: GradedSpace,
    pub d: GradedMap,
}

impl Complex {
    pub fn new(space: GradedSpace, d: GradedMap) -> Result<Self, GlaError> {
        assert_eq!(d.shift, 1, "differential must have shift +1");
        d.check_dims()?;
        let c = Complex { space, d };
        c.check_d_square()?;
        Ok(c)
    }

    pub fn check_d_square(&self) -> Result<(), GlaError> {
        for &deg in self.space.basis.keys() {
            let dd = self.d.block(deg + 1).mul(&self.d.block(deg));
            if !dd.is_zero() {
                // find a witness basis vector
                for j in 0..dd.cols {
                    if dd.col(j).iter().any(|x| !x.is_zero()) {
                        return Err(GlaError::DSquare {
                            degree: deg,
                            witness: self.space.labels(deg)[j].clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Cohomology of a complex: dimensions, chosen cocycle representatives, and
/// projection of cocycles onto the cohomology basis.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub space: GradedSpace,
    /// per degree: columns are representative cocycles in ambient coordinates
    pub reps: BTreeMap<i64, Mat>,
    /// per degree: kernel of d (cocycles)
    pub cocycles: BTreeMap<i64, Subspace>,
    /// per degree: image of d (coboundaries)
    pub coboundaries: BTreeMap<i64, Subspace>,
}

impl Cohomology {
    /// Express the class of a cocycle in the chosen cohomology basis.
    /// Returns None if `v` is not a cocycle.
    pub fn class_of(&self, degree: i64, v: &[Q]) -> Option<Vec<Q>> {
        let hdim = self.space.dim(degree);
        if v.iter().all(|x| x.is_zero()) {
            return Some(vec![Q::zero(); hdim]);
        }
        let z = self.cocycles.get(&degree)?;
        if !z.contains(v) {
            return None;
        }
        if hdim == 0 {
            return Some(vec![]);
        }
        // v = B*x + R*y; return y
        let b = &self.coboundaries[&degree];
        let stacked = b.basis.hstack(&self.reps[&degree]);
        let sol = stacked.solve(v)?;
        Some(sol[b.dim()..].to_vec())
    }

    /// Representative cocycle of a class given in the cohomology basis.
    pub fn rep_of(&self, degree: i64, h: &[Q]) -> Vec<Q> {
        match self.reps.get(&degree) {
            Some(r) => r.mul_vec(h),
            None => vec![],
        }
    }
}

/// Compute cohomology with chosen representatives.
pub fn cohomology(c: &Complex) -> Result<Cohomology, GlaError> {
    c.check_d_square()?;
    let mut hspace = BTreeMap::new();
    let mut reps = BTreeMap::new();
    let mut cocycles = BTreeMap::new();
    let mut coboundaries = BTreeMap::new();
    let mut degrees: Vec<i64> = c.space.degrees();
    // also degrees hit only by d images (can't happen: d maps into space degrees)
    degrees.dedup();
    for &deg in &degrees {
        let n = c.space.dim(deg);
        let z = Subspace::span(n, &c.d.block(deg).kernel_basis());
        let prev = c.d.block(deg - 1);
        let b = Subspace::from_cols(&prev);
        let rep_vecs = z.complement_of(&b);
        let hdim = rep_vecs.len();
        debug_assert_eq!(hdim, z.dim() - b.dim());
        if hdim > 0 {
            hspace.insert(deg, (0..hdim).map(|i| format!("h{deg}_{i}")).collect::<Vec<_>>());
        }
        reps.insert(deg, Mat::from_cols(n, &rep_vecs));
        cocycles.insert(deg, z);
        coboundaries.insert(deg, b);
    }
    Ok(Cohomology { space: GradedSpace { basis: hspace }, reps, cocycles, coboundaries })
}

/// Tensor product basis bookkeeping: basis of degree n is all pairs (x, y)
/// with deg x + deg y = n, ordered lexicographically by
/// (deg x, index x, index y).
#[derive(Clone, Debug)]
pub struct TensorSpace {
    pub space: GradedSpace,
    /// per degree: list of (deg_x, idx_x, deg_y, idx_y)
    pub pairs: BTreeMap<i64, Vec<(i64, usize, i64, usize)>>,
    index: BTreeMap<(i64, usize, i64, usize), usize>,
}

impl TensorSpace {
    pub fn pair_index(&self, dx: i64, ix: usize, dy: i64, iy: usize) -> usize {
        self.index[&(dx, ix, dy, iy)]
    }

    pub fn try_pair_index(&self, dx: i64, ix: usize, dy: i64, iy: usize) -> Option<usize> {
        self.index.get(&(dx, ix, dy, iy)).copied()
    }
}

pub fn tensor(a: &GradedSpace, b: &GradedSpace) -> TensorSpace {
    let mut basis: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut pairs: BTreeMap<i64, Vec<(i64, usize, i64, usize)>> = BTreeMap::new();
    let mut index = BTreeMap::new();
    for (&da, la) in &a.basis {
        for (&db, lb) in &b.basis {
            let n = da + db;
            let labels = basis.entry(n).or_default();
            let ps = pairs.entry(n).or_default();
            for (i, xa) in la.iter().enumerate() {
                for (j, xb) in lb.iter().enumerate() {
                    index.insert((da, i, db, j), ps.len());
                    ps.push((da, i, db, j));
                    labels.push(format!("({xa})x({xb})"));
                }
            }
        }
    }
    // The nested loop above goes in lex order of (da, ia, db, ib); re-sort per
    // total degree to the documented (deg x, index x, index y) order.
    let mut sorted_basis = BTreeMap::new();
    let mut sorted_pairs = BTreeMap::new();
    let mut sorted_index = BTreeMap::new();
    for (n, ps) in pairs {
        let mut order: Vec<usize> = (0..ps.len()).collect();
        order.sort_by_key(|&k| {
            let (dx, ix, _dy, iy) = ps[k];
            (dx, ix, iy)
        });
        let labels = &basis[&n];
        let mut new_ps = Vec::new();
        let mut new_labels = Vec::new();
        for &k in &order {
            sorted_index.insert(ps[k], new_ps.len());
            new_ps.push(ps[k]);
            new_labels.push(labels[k].clone());
        }
        sorted_basis.insert(n, new_labels);
        sorted_pairs.insert(n, new_ps);
    }
    TensorSpace {
        space: GradedSpace { basis: sorted_basis },
        pairs: sorted_pairs,
        index: sorted_index,
    }
}

/// (f tensor g)(x tensor y) = (-1)^{|g| |x|} f(x) tensor g(y).
pub fn tensor_map(
    f: &GradedMap,
    g: &GradedMap,
    source: &TensorSpace,
    target: &TensorSpace,
) -> GradedMap {
    let shift = f.shift + g.shift;
    let mut out = GradedMap::zero(source.space.clone(), target.space.clone(), shift);
    for (&n, ps) in &source.pairs {
        let tgt_dim = target.space.dim(n + shift);
        let mut m = Mat::zero(tgt_dim, ps.len());
        for (col, &(dx, ix, dy, iy)) in ps.iter().enumerate() {
            let fx = f.block(dx).col_or_zero(ix);
            let gy = g.block(dy).col_or_zero(iy);
            let sign = if (g.shift * dx) % 2 != 0 { -Q::one() } else { Q::one() };
            for (i2, c1) in fx.iter().enumerate() {
                if c1.is_zero() {
                    continue;
                }
                for (j2, c2) in gy.iter().enumerate() {
                    if c2.is_zero() {
                        continue;
                    }
                    if let Some(row) = target.try_pair_index(dx + f.shift, i2, dy + g.shift, j2) {
                        let v = m[(row, col)].clone() + c1 * c2 * &sign;
                        m[(row, col)] = v;
                    }
                }
            }
        }
        out.set_block(n, m);
    }
    out
}

impl Mat {
    fn col_or_zero(&self, j: usize) -> Vec<Q> {
        if j < self.cols {
            self.col(j)
        } else {
            vec![Q::zero(); self.rows]
        }
    }
}

/// Dual space: same dims per degree, labels starred.
pub fn dual(v: &GradedSpace) -> GradedSpace {
    GradedSpace {
        basis: v
            .basis
            .iter()
            .map(|(&d, ls)| (d, ls.iter().map(|l| format!("{l}*")).collect()))
            .collect(),
    }
}

/// Dual map: degreewise transpose (no extra sign).
pub fn dual_map(f: &GradedMap) -> GradedMap {
    let mut out = GradedMap::zero(dual(&f.target), dual(&f.source), -f.shift);
    for &d in f.source.basis.keys() {
        out.set_block(d + f.shift, f.block(d).transpose());
    }
    out
}
