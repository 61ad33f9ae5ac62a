//! Dense exact matrices over the rationals.
//!
//! Everything downstream (graded maps, cohomology, spectral sequences) reduces
//! to rank / kernel / solve computations here. Rank has a fraction-free Bareiss
//! fast path over the integers; solving and kernels go through rational RREF.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

/// Exact rational scalar. Always kept in lowest terms with positive
/// denominator by `BigRational` itself.
pub type Q = BigRational;

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Dense row-major matrix over `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Q>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(ambient: usize, cols: &[Vec<Q>]) -> Self {
        let mut m = Mat::zero(ambient, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), ambient);
            for i in 0..ambient {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dim mismatch in mul");
        // row-parallel: each output row depends on one row of self
        let rows = crate::par::par_map_idx(self.rows, |i| {
            let mut row = vec![Q::zero(); other.cols];
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        row[j] = &row[j] + &(a * b);
                    }
                }
            }
            row
        });
        let mut out = Mat::zero(self.rows, other.cols);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "dim mismatch in mul_vec");
        let mut out = vec![Q::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = Q::zero();
            for j in 0..self.cols {
                if !v[j].is_zero() && !self[(i, j)].is_zero() {
                    acc += &self[(i, j)] * &v[j];
                }
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Mat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn neg(&self) -> Mat {
        self.scale(&-Q::one())
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zero(self.rows + other.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..self.cols {
                out[(self.rows + i, j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Reduced row echelon form in place; returns pivot column indices.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            // find pivot
            let mut piv = None;
            for r in row..self.rows {
                if !self[(r, col)].is_zero() {
                    piv = Some(r);
                    break;
                }
            }
            let Some(piv) = piv else { continue };
            self.swap_rows(row, piv);
            let inv = self[(row, col)].recip();
            for j in col..self.cols {
                let v = self[(row, j)].clone() * &inv;
                self[(row, j)] = v;
            }
            for r in 0..self.rows {
                if r != row && !self[(r, col)].is_zero() {
                    let factor = self[(r, col)].clone();
                    for j in col..self.cols {
                        let v = self[(r, j)].clone() - &factor * &self[(row, j)];
                        self[(r, j)] = v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rank via fraction-free Bareiss elimination over cleared-denominator
    /// integer entries.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        // clear denominators row by row
        let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut lcm = BigInt::one();
            for j in 0..self.cols {
                let d = self[(i, j)].denom();
                lcm = num::integer::lcm(lcm, d.clone());
            }
            m.push(
                (0..self.cols)
                    .map(|j| {
                        let q = &self[(i, j)];
                        q.numer() * (&lcm / q.denom())
                    })
                    .collect(),
            );
        }
        let mut rank = 0;
        let mut prev = BigInt::one();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let mut piv = None;
            for r in row..self.rows {
                if !m[r][col].is_zero() {
                    piv = Some(r);
                    break;
                }
            }
            let Some(piv) = piv else { continue };
            m.swap(row, piv);
            for r in row + 1..self.rows {
                for c in col + 1..self.cols {
                    let v = (&m[row][col] * &m[r][c] - &m[r][col] * &m[row][c]) / &prev;
                    m[r][c] = v;
                }
                m[r][col] = BigInt::zero();
            }
            prev = m[row][col].clone();
            rank += 1;
            row += 1;
        }
        rank
    }

    /// Basis of the kernel (as columns).
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(r, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Solve `self * x = b`; returns one solution if consistent.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.rows);
        let bcol = Mat::from_cols(self.rows, &[b.to_vec()]);
        let mut aug = self.hstack(&bcol);
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // pivot in the augmented column: inconsistent
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Solve `self * X = B` columnwise; None if any column is inconsistent.
    pub fn solve_mat(&self, b: &Mat) -> Option<Mat> {
        let mut cols = Vec::with_capacity(b.cols);
        for j in 0..b.cols {
            cols.push(self.solve(&b.col(j))?);
        }
        Some(Mat::from_cols(self.cols, &cols))
    }

    /// Inverse of a square matrix, if invertible.
    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let sol = self.solve_mat(&Mat::identity(self.rows))?;
        if self.mul(&sol) == Mat::identity(self.rows) {
            Some(sol)
        } else {
            None
        }
    }

    /// Characteristic polynomial coefficients `c_0 + c_1 x + ... + x^n` via
    /// the Faddeev-LeVerrier recursion.
    pub fn charpoly(&self) -> Vec<Q> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        // p(x) = x^n + c_{n-1} x^{n-1} + ... + c_0
        let mut coeffs = vec![Q::zero(); n + 1];
        coeffs[n] = Q::one();
        let mut m = Mat::identity(n);
        for k in 1..=n {
            m = self.mul(&m);
            let tr: Q = (0..n).map(|i| m[(i, i)].clone()).sum();
            let c = -tr / qi(k as i64);
            coeffs[n - k] = c.clone();
            for i in 0..n {
                let v = m[(i, i)].clone() + &c;
                m[(i, i)] = v;
            }
        }
        coeffs
    }

    /// Columns lo..hi as a new matrix.
    pub fn submatrix_cols(&self, lo: usize, hi: usize) -> Mat {
        let mut m = Mat::zero(self.rows, hi - lo);
        for i in 0..self.rows {
            for j in lo..hi {
                m[(i, j - lo)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// A subspace of Q^ambient, stored as a column-reduced spanning matrix.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub ambient: usize,
    /// columns form a basis (rref of the transpose, re-transposed)
    pub basis: Mat,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Mat::zero(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: Mat::identity(ambient) }
    }

    /// Span of the given column vectors.
    pub fn span(ambient: usize, vectors: &[Vec<Q>]) -> Self {
        let m = Mat::from_cols(ambient, vectors);
        Self::from_cols(&m)
    }

    /// Span of the columns of `m`.
    pub fn from_cols(m: &Mat) -> Self {
        let mut t = m.transpose();
        let pivots = t.rref();
        let vecs: Vec<Vec<Q>> =
            (0..pivots.len()).map(|i| (0..t.cols).map(|j| t[(i, j)].clone()).collect()).collect();
        Subspace { ambient: m.rows, basis: Mat::from_cols(m.rows, &vecs) }
    }

    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.basis.solve(v).is_some()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.basis.cols).all(|j| self.contains(&other.basis.col(j)))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        Subspace::from_cols(&self.basis.hstack(&other.basis))
    }

    /// Intersection via the kernel of [A | -B].
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.ambient);
        }
        let stacked = self.basis.hstack(&other.basis.neg());
        let ker = stacked.kernel_basis();
        let vecs: Vec<Vec<Q>> = ker
            .iter()
            .map(|k| self.basis.mul_vec(&k[..self.basis.cols]))
            .collect();
        Subspace::span(self.ambient, &vecs)
    }

    /// Image of this subspace under the matrix `f` (ambient-to-ambient' map).
    pub fn image_under(&self, f: &Mat) -> Subspace {
        Subspace::from_cols(&f.mul(&self.basis))
    }

    /// Coordinates of `v` in this subspace's basis, if `v` lies in it.
    pub fn coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        self.basis.solve(v)
    }

    /// Projection matrix Q^ambient -> Q^codim with kernel exactly `self`,
    /// together with the complement representatives (a section of the
    /// quotient): proj * reps = identity.
    pub fn quotient_projection(&self) -> (Mat, Vec<Vec<Q>>) {
        let reps = Subspace::full(self.ambient).complement_of(self);
        let stacked = self.basis.hstack(&Mat::from_cols(self.ambient, &reps));
        let inv = stacked.inverse().expect("basis + complement spans");
        // bottom rows of the inverse read off the complement coordinates
        let codim = reps.len();
        let mut proj = Mat::zero(codim, self.ambient);
        for i in 0..codim {
            for j in 0..self.ambient {
                proj[(i, j)] = inv[(self.dim() + i, j)].clone();
            }
        }
        (proj, reps)
    }

    /// Preimage {x : m x in sub} of a subspace under a matrix.
    pub fn preimage_under(m: &Mat, sub: &Subspace) -> Subspace {
        assert_eq!(m.rows, sub.ambient);
        if sub.dim() == sub.ambient {
            return Subspace::full(m.cols);
        }
        if sub.dim() == 0 {
            return Subspace::span(m.cols, &m.kernel_basis());
        }
        let stacked = m.hstack(&sub.basis.neg());
        let ker = stacked.kernel_basis();
        let vecs: Vec<Vec<Q>> = ker.iter().map(|k| k[..m.cols].to_vec()).collect();
        Subspace::span(m.cols, &vecs)
    }

    /// Basis vectors of `self` extending a basis of the subspace `inner`,
    /// i.e. representatives of self/inner.
    pub fn complement_of(&self, inner: &Subspace) -> Vec<Vec<Q>> {
        let mut reps = Vec::new();
        let mut acc = inner.clone();
        for j in 0..self.basis.cols {
            let v = self.basis.col(j);
            if !acc.contains(&v) {
                reps.push(v.clone());
                acc = acc.sum(&Subspace::span(self.ambient, &[v]));
            }
        }
        reps
    }
}
