//! Finite graded-commutative differential graded algebras with augmentations,
//! Frobenius endomorphisms, derivations, theta-extensions and divided-power
//! u-extensions.

use crate::gla::{cohomology, tensor, Cohomology, Complex, GradedMap, GradedSpace};
use crate::matrix::{qi, Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum CdgaError {
    #[error("d^2 != 0, witness basis element '{0}'")]
    DSquare(String),
    #[error("graded commutativity fails at ({0}, {1})")]
    Commutativity(String, String),
    #[error("Leibniz rule fails at ({0}, {1})")]
    Leibniz(String, String),
    #[error("associativity fails at ({0}, {1}, {2})")]
    Associativity(String, String, String),
    #[error("unit axiom fails at '{0}'")]
    Unit(String),
    #[error("degree 0 is empty or has no unit")]
    NoUnit,
    #[error("negative degree {0} not allowed in a CDGA")]
    NegativeDegree(i64),
    #[error("map is not multiplicative at ({0}, {1})")]
    NotMultiplicative(String, String),
    #[error("map does not commute with d, witness '{0}'")]
    NotChainMap(String),
    #[error("map does not preserve the unit")]
    UnitNotPreserved,
    #[error("derivation Leibniz rule fails at ({0}, {1})")]
    DerivationLeibniz(String, String),
    #[error("augmentation is not an algebra map")]
    BadAugmentation,
    #[error("theta must be a closed element of degree 1")]
    BadTheta,
    #[error("projection of the theta-extension is not surjective in degree {0}")]
    ProjNotSurjective(i64),
    #[error("ker(proj) != theta wedge total in degree {0}")]
    KernelMismatch(i64),
    #[error("wedge-by-theta map is not injective in degree {0}")]
    WedgeNotInjective(i64),
    #[error("theta-extension sequence not exact in degree {0}: expected dim {1}, got {2}")]
    NotExact(i64, usize, usize),
    #[error("p*Phi*N != N*Phi, witness '{0}' in degree {1}")]
    FrobeniusMonodromy(String, i64),
    #[error("derivation does not preserve the augmentation ideal")]
    IdealNotPreserved,
    #[error("point data incompatible with the projection")]
    IncompatiblePointData,
    #[error("{0}")]
    Other(String),
}

/// Sparse multiplication table: (deg_a, idx_a, deg_b, idx_b) -> coords of the
/// product in degree a+b. Missing entries are zero.
pub type MultTable = BTreeMap<(i64, usize, i64, usize), Vec<(usize, Q)>>;

#[derive(Clone, Debug)]
pub struct Cdga {
    pub space: GradedSpace,
    pub d: GradedMap,
    /// coordinates of the algebra unit in degree 0
    pub unit: Vec<Q>,
    pub mult: MultTable,
}

impl Cdga {
    pub fn new(space: GradedSpace, d: GradedMap, unit: Vec<Q>, mult: MultTable) -> Self {
        Cdga { space, d, unit, mult }
    }

    /// The ground field Q as a CDGA.
    pub fn ground() -> Self {
        let space = GradedSpace::single(0, vec!["1".into()]);
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let mut mult = MultTable::new();
        mult.insert((0, 0, 0, 0), vec![(0, Q::one())]);
        Cdga { space, d, unit: vec![Q::one()], mult }
    }

    /// Product algebra Q^k in degree 0 (functions on k points).
    pub fn points(k: usize) -> Self {
        let space = GradedSpace::single(0, (0..k).map(|i| format!("pt{i}")).collect());
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let mut mult = MultTable::new();
        for i in 0..k {
            mult.insert((0, i, 0, i), vec![(i, Q::one())]);
        }
        Cdga { space, d, unit: vec![Q::one(); k], mult }
    }

    pub fn zero_algebra() -> Self {
        let space = GradedSpace::empty();
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        Cdga { space, d, unit: vec![], mult: MultTable::new() }
    }

    pub fn mul_basis(&self, da: i64, ia: usize, db: i64, ib: usize) -> Vec<(usize, Q)> {
        self.mult.get(&(da, ia, db, ib)).cloned().unwrap_or_default()
    }

    /// Product of homogeneous elements given by coordinate vectors.
    pub fn mul_elem(&self, da: i64, va: &[Q], db: i64, vb: &[Q]) -> Vec<Q> {
        let out_dim = self.space.dim(da + db);
        let mut out = vec![Q::zero(); out_dim];
        for (ia, ca) in va.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (ib, cb) in vb.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                for (k, c) in self.mul_basis(da, ia, db, ib) {
                    out[k] += ca * cb * c;
                }
            }
        }
        out
    }

    pub fn complex(&self) -> Complex {
        Complex { space: self.space.clone(), d: self.d.clone() }
    }

    pub fn is_connected(&self) -> bool {
        self.space.dim(0) == 1 && self.unit.len() == 1 && !self.unit[0].is_zero()
    }

    pub fn basis_label(&self, deg: i64, idx: usize) -> String {
        self.space.labels(deg).get(idx).cloned().unwrap_or_else(|| format!("?{deg}_{idx}"))
    }

    /// Check every CDGA axiom; returns the first violation with witnesses.
    pub fn validate(&self) -> Result<(), CdgaError> {
        if let Some(&d0) = self.space.basis.keys().next() {
            if d0 < 0 {
                return Err(CdgaError::NegativeDegree(d0));
            }
        }
        if self.space.total_dim() > 0 {
            if self.space.dim(0) == 0 || self.unit.iter().all(|x| x.is_zero()) {
                return Err(CdgaError::NoUnit);
            }
        } else {
            return Ok(()); // the zero algebra is vacuously fine
        }
        // unit
        for &deg in self.space.basis.keys() {
            for i in 0..self.space.dim(deg) {
                let mut e = vec![Q::zero(); self.space.dim(deg)];
                e[i] = Q::one();
                if self.mul_elem(0, &self.unit, deg, &e) != e || self.mul_elem(deg, &e, 0, &self.unit) != e
                {
                    return Err(CdgaError::Unit(self.basis_label(deg, i)));
                }
            }
        }
        // d^2 = 0
        if let Err(crate::gla::GlaError::DSquare { witness, .. }) = self.complex().check_d_square()
        {
            return Err(CdgaError::DSquare(witness));
        }
        // pairwise axioms
        let degs = self.space.degrees();
        for &da in &degs {
            for &db in &degs {
                for ia in 0..self.space.dim(da) {
                    for ib in 0..self.space.dim(db) {
                        let ea = unit_vec(self.space.dim(da), ia);
                        let eb = unit_vec(self.space.dim(db), ib);
                        let ab = self.mul_elem(da, &ea, db, &eb);
                        let ba = self.mul_elem(db, &eb, da, &ea);
                        let sign = if (da * db) % 2 != 0 { -Q::one() } else { Q::one() };
                        let signed_ba: Vec<Q> = ba.iter().map(|x| x * &sign).collect();
                        if ab != signed_ba {
                            return Err(CdgaError::Commutativity(
                                self.basis_label(da, ia),
                                self.basis_label(db, ib),
                            ));
                        }
                        // Leibniz
                        let d_ab = self.d.apply(da + db, &ab);
                        let da_b = self.mul_elem(da + 1, &self.d.apply(da, &ea), db, &eb);
                        let sa = if da % 2 != 0 { -Q::one() } else { Q::one() };
                        let a_db = self.mul_elem(da, &ea, db + 1, &self.d.apply(db, &eb));
                        let rhs: Vec<Q> = da_b
                            .iter()
                            .zip(&a_db)
                            .map(|(x, y)| x + &sa * y)
                            .collect();
                        if d_ab != rhs {
                            return Err(CdgaError::Leibniz(
                                self.basis_label(da, ia),
                                self.basis_label(db, ib),
                            ));
                        }
                    }
                }
            }
        }
        // associativity
        for &da in &degs {
            for &db in &degs {
                for &dc in &degs {
                    for ia in 0..self.space.dim(da) {
                        for ib in 0..self.space.dim(db) {
                            for ic in 0..self.space.dim(dc) {
                                let ea = unit_vec(self.space.dim(da), ia);
                                let eb = unit_vec(self.space.dim(db), ib);
                                let ec = unit_vec(self.space.dim(dc), ic);
                                let ab_c = self.mul_elem(
                                    da + db,
                                    &self.mul_elem(da, &ea, db, &eb),
                                    dc,
                                    &ec,
                                );
                                let a_bc = self.mul_elem(
                                    da,
                                    &ea,
                                    db + dc,
                                    &self.mul_elem(db, &eb, dc, &ec),
                                );
                                if ab_c != a_bc {
                                    return Err(CdgaError::Associativity(
                                        self.basis_label(da, ia),
                                        self.basis_label(db, ib),
                                        self.basis_label(dc, ic),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Cohomology algebra: H(A) with the product induced on chosen
    /// representatives, as a CDGA with zero differential.
    pub fn cohomology_algebra(&self) -> Result<(Cdga, Cohomology), CdgaError> {
        let h = cohomology(&self.complex()).map_err(|e| CdgaError::Other(e.to_string()))?;
        let hspace = h.space.clone();
        let mut mult = MultTable::new();
        for &da in &hspace.degrees() {
            for &db in &hspace.degrees() {
                for ia in 0..hspace.dim(da) {
                    for ib in 0..hspace.dim(db) {
                        let ra = h.rep_of(da, &unit_vec(hspace.dim(da), ia));
                        let rb = h.rep_of(db, &unit_vec(hspace.dim(db), ib));
                        let prod = self.mul_elem(da, &ra, db, &rb);
                        let cls = h
                            .class_of(da + db, &prod)
                            .ok_or_else(|| CdgaError::Other("product of cocycles not a cocycle".into()))?;
                        let entry: Vec<(usize, Q)> = cls
                            .into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .map(|(k, c)| (k, c))
                            .collect();
                        if !entry.is_empty() {
                            mult.insert((da, ia, db, ib), entry);
                        }
                    }
                }
            }
        }
        let unit = h
            .class_of(0, &pad(&self.unit, self.space.dim(0)))
            .ok_or(CdgaError::NoUnit)?;
        let d = GradedMap::zero(hspace.clone(), hspace.clone(), 1);
        Ok((Cdga { space: hspace, d, unit, mult }, h))
    }

    /// Multiplication as a graded map from A tensor A to A.
    pub fn mult_map(&self) -> GradedMap {
        let t = tensor(&self.space, &self.space);
        let mut out = GradedMap::zero(t.space.clone(), self.space.clone(), 0);
        for (&n, pairs) in &t.pairs {
            let mut m = Mat::zero(self.space.dim(n), pairs.len());
            for (col, &(da, ia, db, ib)) in pairs.iter().enumerate() {
                for (k, c) in self.mul_basis(da, ia, db, ib) {
                    m[(k, col)] = c;
                }
            }
            out.set_block(n, m);
        }
        out
    }
}

pub fn unit_vec(dim: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[i] = Q::one();
    v
}

fn pad(v: &[Q], n: usize) -> Vec<Q> {
    let mut out = v.to_vec();
    out.resize(n, Q::zero());
    out
}

/// Tensor product of two CDGAs with the Koszul sign rule.
pub fn cdga_tensor(a: &Cdga, b: &Cdga) -> Cdga {
    let t = tensor(&a.space, &b.space);
    let mut mult = MultTable::new();
    for (&n1, pairs1) in &t.pairs {
        for (&n2, pairs2) in &t.pairs {
            let _ = (n1, n2);
            for (i1, &(da1, ia1, db1, ib1)) in pairs1.iter().enumerate() {
                for (i2, &(da2, ia2, db2, ib2)) in pairs2.iter().enumerate() {
                    // (x1 (x) y1)(x2 (x) y2) = (-1)^{|y1||x2|} x1x2 (x) y1y2
                    let sign = if (db1 * da2) % 2 != 0 { -Q::one() } else { Q::one() };
                    let xa = a.mul_basis(da1, ia1, da2, ia2);
                    let yb = b.mul_basis(db1, ib1, db2, ib2);
                    let mut entry = Vec::new();
                    for (ka, ca) in &xa {
                        for (kb, cb) in &yb {
                            if let Some(row) =
                                t.try_pair_index(da1 + da2, *ka, db1 + db2, *kb)
                            {
                                entry.push((row, ca * cb * &sign));
                            }
                        }
                    }
                    if !entry.is_empty() {
                        mult.insert((n1, i1, n2, i2), entry);
                    }
                }
            }
        }
    }
    // differential d (x) 1 + 1 (x) d with Koszul sign
    let da_map = crate::gla::tensor_map(&a.d, &GradedMap::identity(&b.space), &t, &t);
    let db_map = crate::gla::tensor_map(&GradedMap::identity(&a.space), &b.d, &t, &t);
    let d = da_map.add(&db_map);
    // unit = unit (x) unit
    let mut unit = vec![Q::zero(); t.space.dim(0)];
    for (ia, ca) in a.unit.iter().enumerate() {
        for (ib, cb) in b.unit.iter().enumerate() {
            if let Some(k) = t.try_pair_index(0, ia, 0, ib) {
                unit[k] = ca * cb;
            }
        }
    }
    Cdga { space: t.space, d, unit, mult }
}

/// An augmentation: an algebra map A -> Q killing positive degrees, given by
/// a functional on degree 0.
#[derive(Clone, Debug)]
pub struct Augmentation {
    pub functional: Vec<Q>,
}

impl Augmentation {
    /// The canonical augmentation of a connected CDGA.
    pub fn connected(a: &Cdga) -> Result<Self, CdgaError> {
        if !a.is_connected() {
            return Err(CdgaError::BadAugmentation);
        }
        Ok(Augmentation { functional: vec![a.unit[0].recip()] })
    }

    pub fn validate(&self, a: &Cdga) -> Result<(), CdgaError> {
        if self.functional.len() != a.space.dim(0) {
            return Err(CdgaError::BadAugmentation);
        }
        let ev = |v: &[Q]| -> Q {
            v.iter().zip(&self.functional).map(|(x, f)| x * f).sum()
        };
        if ev(&a.unit) != Q::one() {
            return Err(CdgaError::BadAugmentation);
        }
        let n0 = a.space.dim(0);
        for i in 0..n0 {
            for j in 0..n0 {
                let prod = a.mul_elem(0, &unit_vec(n0, i), 0, &unit_vec(n0, j));
                let lhs = ev(&prod);
                let rhs = &self.functional[i] * &self.functional[j];
                if lhs != rhs {
                    return Err(CdgaError::BadAugmentation);
                }
            }
        }
        Ok(())
    }

    pub fn eval0(&self, v: &[Q]) -> Q {
        v.iter().zip(&self.functional).map(|(x, f)| x * f).sum()
    }

    /// The augmentation ideal, degreewise.
    pub fn ideal(&self, a: &Cdga) -> BTreeMap<i64, Subspace> {
        let mut out = BTreeMap::new();
        for &deg in a.space.basis.keys() {
            let n = a.space.dim(deg);
            if deg == 0 {
                let m = Mat::from_rows(vec![self.functional.clone()]);
                out.insert(0, Subspace::span(n, &m.kernel_basis()));
            } else {
                out.insert(deg, Subspace::full(n));
            }
        }
        out
    }
}

/// A CDGA morphism: degree-0 chain map that is multiplicative and unital.
#[derive(Clone, Debug)]
pub struct CdgaMorphism {
    pub map: GradedMap,
}

impl CdgaMorphism {
    pub fn validate(&self, source: &Cdga, target: &Cdga) -> Result<(), CdgaError> {
        assert_eq!(self.map.shift, 0);
        // chain map
        for &deg in source.space.basis.keys() {
            let lhs = target.d.block(deg).mul(&self.map.block(deg));
            let rhs = self.map.block(deg + 1).mul(&source.d.block(deg));
            if lhs != rhs {
                for j in 0..lhs.cols {
                    if lhs.col(j) != rhs.col(j) {
                        return Err(CdgaError::NotChainMap(source.basis_label(deg, j)));
                    }
                }
            }
        }
        // unit
        let fu = self.map.apply(0, &pad(&source.unit, source.space.dim(0)));
        if fu != pad(&target.unit, target.space.dim(0)) {
            return Err(CdgaError::UnitNotPreserved);
        }
        // multiplicative
        for &da in &source.space.degrees() {
            for &db in &source.space.degrees() {
                for ia in 0..source.space.dim(da) {
                    for ib in 0..source.space.dim(db) {
                        let ea = unit_vec(source.space.dim(da), ia);
                        let eb = unit_vec(source.space.dim(db), ib);
                        let lhs = self.map.apply(da + db, &source.mul_elem(da, &ea, db, &eb));
                        let rhs = target.mul_elem(
                            da,
                            &self.map.apply(da, &ea),
                            db,
                            &self.map.apply(db, &eb),
                        );
                        if lhs != rhs {
                            return Err(CdgaError::NotMultiplicative(
                                source.basis_label(da, ia),
                                source.basis_label(db, ib),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Frobenius data: a multiplicative chain endomorphism Phi together with the
/// prime parameters. Phi plays the role of p^i F in degree i; F itself is
/// recovered by dividing by p^i in reports.
#[derive(Clone, Debug)]
pub struct Frobenius {
    pub phi: GradedMap,
    pub p: u64,
    pub d_exp: u32,
}

impl Frobenius {
    pub fn q(&self) -> u64 {
        self.p.pow(self.d_exp)
    }

    pub fn validate(&self, a: &Cdga) -> Result<(), CdgaError> {
        CdgaMorphism { map: self.phi.clone() }.validate(a, a)
    }
}

/// A degree-0 derivation commuting with d.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub map: GradedMap,
}

impl Derivation {
    pub fn validate(&self, a: &Cdga) -> Result<(), CdgaError> {
        assert_eq!(self.map.shift, 0);
        for &deg in a.space.basis.keys() {
            let lhs = a.d.block(deg).mul(&self.map.block(deg));
            let rhs = self.map.block(deg + 1).mul(&a.d.block(deg));
            if lhs != rhs {
                return Err(CdgaError::NotChainMap(a.basis_label(deg, 0)));
            }
        }
        for &da in &a.space.degrees() {
            for &db in &a.space.degrees() {
                for ia in 0..a.space.dim(da) {
                    for ib in 0..a.space.dim(db) {
                        let ea = unit_vec(a.space.dim(da), ia);
                        let eb = unit_vec(a.space.dim(db), ib);
                        let lhs = self.map.apply(da + db, &a.mul_elem(da, &ea, db, &eb));
                        let na_b = a.mul_elem(da, &self.map.apply(da, &ea), db, &eb);
                        let a_nb = a.mul_elem(da, &ea, db, &self.map.apply(db, &eb));
                        let rhs: Vec<Q> = na_b.iter().zip(&a_nb).map(|(x, y)| x + y).collect();
                        if lhs != rhs {
                            return Err(CdgaError::DerivationLeibniz(
                                a.basis_label(da, ia),
                                a.basis_label(db, ib),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Check p * Phi . N = N . Phi degreewise; witness is the highest-degree
/// basis element where it fails.
pub fn apply_frobenius_axioms(a: &Cdga, f: &Frobenius, n: &Derivation) -> Result<(), CdgaError> {
    let p = qi(f.p as i64);
    let mut witness: Option<(i64, String)> = None;
    for &deg in a.space.basis.keys() {
        let lhs = f.phi.block(deg).mul(&n.map.block(deg)).scale(&p);
        let rhs = n.map.block(deg).mul(&f.phi.block(deg));
        if lhs != rhs {
            for j in 0..lhs.cols {
                if lhs.col(j) != rhs.col(j) {
                    witness = Some((deg, a.basis_label(deg, j)));
                }
            }
        }
    }
    match witness {
        Some((deg, w)) => Err(CdgaError::FrobeniusMonodromy(w, deg)),
        None => Ok(()),
    }
}

/// The abstract exact sequence 0 -> A[-1] -> A~ -> A -> 0 where the first map
/// is right wedge with a closed degree-1 element theta.
#[derive(Clone, Debug)]
pub struct ThetaExtension {
    pub total: Cdga,
    pub base: Cdga,
    /// coordinates of theta in degree 1 of `total`
    pub theta: Vec<Q>,
    /// surjective CDGA map total -> base
    pub proj: GradedMap,
}

impl ThetaExtension {
    pub fn validate(&self) -> Result<(), CdgaError> {
        // theta: closed, degree 1, nonzero
        if self.theta.len() != self.total.space.dim(1) || self.theta.iter().all(|x| x.is_zero()) {
            return Err(CdgaError::BadTheta);
        }
        if self.total.d.apply(1, &self.theta).iter().any(|x| !x.is_zero()) {
            return Err(CdgaError::BadTheta);
        }
        CdgaMorphism { map: self.proj.clone() }.validate(&self.total, &self.base)?;
        // surjectivity + kernel = theta wedge total, degreewise
        let mut degs: Vec<i64> = self.total.space.degrees();
        degs.extend(self.base.space.degrees());
        degs.sort();
        degs.dedup();
        for &deg in &degs {
            let blk = self.proj.block(deg);
            if blk.rank() != self.base.space.dim(deg) {
                return Err(CdgaError::ProjNotSurjective(deg));
            }
            let ker = Subspace::span(self.total.space.dim(deg), &blk.kernel_basis());
            let wedge = self.wedge_image(deg - 1);
            if ker.dim() != wedge.dim() || !ker.contains_subspace(&wedge) {
                return Err(CdgaError::KernelMismatch(deg));
            }
            // injectivity of the induced A^{deg-1} -> total^deg
            if wedge.dim() != self.base.space.dim(deg - 1) {
                return Err(CdgaError::WedgeNotInjective(deg));
            }
            // exactness: dim total^deg = dim base^deg + dim base^{deg-1}
            let expect = self.base.space.dim(deg) + self.base.space.dim(deg - 1);
            if self.total.space.dim(deg) != expect {
                return Err(CdgaError::NotExact(deg, expect, self.total.space.dim(deg)));
            }
        }
        Ok(())
    }

    /// The map x |-> x wedge theta on total, as a matrix per degree.
    pub fn wedge_theta_block(&self, deg: i64) -> Mat {
        let n = self.total.space.dim(deg);
        let m_rows = self.total.space.dim(deg + 1);
        let mut m = Mat::zero(m_rows, n);
        for i in 0..n {
            let prod = self.total.mul_elem(deg, &unit_vec(n, i), 1, &self.theta);
            for (r, c) in prod.iter().enumerate() {
                m[(r, i)] = c.clone();
            }
        }
        m
    }

    /// Image of A^deg under (lift then wedge theta) inside total^{deg+1}.
    fn wedge_image(&self, deg: i64) -> Subspace {
        let n = self.base.space.dim(deg);
        if n == 0 {
            return Subspace::zero(self.total.space.dim(deg + 1));
        }
        let mut vecs = Vec::new();
        for i in 0..n {
            let lift = self
                .proj
                .block(deg)
                .solve(&unit_vec(n, i))
                .expect("proj surjective");
            let w = self.total.mul_elem(deg, &lift, 1, &self.theta);
            vecs.push(w);
        }
        Subspace::span(self.total.space.dim(deg + 1), &vecs)
    }

    /// The wedge map A^{deg} -> total^{deg+1} (lift then wedge theta) as a
    /// matrix; well defined because theta wedge ker(proj) = 0.
    pub fn wedge_map(&self, deg: i64) -> Mat {
        let n = self.base.space.dim(deg);
        let rows = self.total.space.dim(deg + 1);
        let mut m = Mat::zero(rows, n);
        for i in 0..n {
            if let Some(lift) = self.proj.block(deg).solve(&unit_vec(n, i)) {
                let w = self.total.mul_elem(deg, &lift, 1, &self.theta);
                for (r, c) in w.iter().enumerate() {
                    m[(r, i)] = c.clone();
                }
            }
        }
        m
    }

    /// Split extension A (x) Lambda(theta) for any base A.
    pub fn trivial(base: &Cdga) -> Self {
        let lt = crate::free::lambda_theta();
        let total = cdga_tensor(base, &lt.0);
        // theta = unit (x) theta in degree 1
        let t = tensor(&base.space, &lt.0.space);
        let mut theta = vec![Q::zero(); total.space.dim(1)];
        for (ia, ca) in base.unit.iter().enumerate() {
            if let Some(k) = t.try_pair_index(0, ia, 1, 0) {
                theta[k] = ca.clone();
            }
        }
        // proj: kill the theta factor
        let mut proj = GradedMap::zero(total.space.clone(), base.space.clone(), 0);
        for (&n, pairs) in &t.pairs {
            let mut m = Mat::zero(base.space.dim(n), pairs.len());
            for (col, &(da, ia, db, _ib)) in pairs.iter().enumerate() {
                if db == 0 && da == n {
                    m[(ia, col)] = Q::one();
                }
            }
            proj.set_block(n, m);
        }
        ThetaExtension { total, base: base.clone(), theta, proj }
    }
}

/// Divided-power Hirsch extension A~[u] truncated at u^[depth].
#[derive(Clone, Debug)]
pub struct UExtension {
    pub algebra: Cdga,
    pub depth: usize,
    /// the u-shift derivation N: x u^[i] -> x u^[i-1]
    pub monodromy: Derivation,
    /// restriction r: A~[u] -> A (kills u^[i], i >= 1, then projects)
    pub restriction: GradedMap,
    pub frobenius: Option<Frobenius>,
    /// H^j of A~[u] maps isomorphically to H^j(A) for j <= safe_range
    pub safe_range: i64,
}

/// Build the truncated divided-power extension with its monodromy derivation,
/// restriction map, and (when Phi(theta) = p theta) the extended Frobenius.
pub fn u_extension(
    ext: &ThetaExtension,
    depth: usize,
    frob: Option<&Frobenius>,
) -> Result<UExtension, CdgaError> {
    assert!(depth >= 1);
    ext.validate()?;
    let total = &ext.total;
    // basis of degree deg: for i in 0..=depth, the basis of total^deg
    let mut basis = BTreeMap::new();
    for (&deg, labels) in &total.space.basis {
        let mut ls = Vec::new();
        for i in 0..=depth {
            for l in labels {
                ls.push(if i == 0 { l.clone() } else { format!("({l})u[{i}]") });
            }
        }
        basis.insert(deg, ls);
    }
    let space = GradedSpace { basis };
    let dim_at = |deg: i64| total.space.dim(deg);
    let idx = |deg: i64, i: usize, j: usize| i * dim_at(deg) + j;

    // differential: d(x u^[i]) = dx u^[i] + (-1)^{|x|} x theta u^[i-1]
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for &deg in total.space.basis.keys() {
        let nd = dim_at(deg);
        let rows = space.dim(deg + 1);
        let mut m = Mat::zero(rows, nd * (depth + 1));
        let dblock = total.d.block(deg);
        let wedge = ext.wedge_theta_block(deg);
        let sign = if deg % 2 != 0 { -Q::one() } else { Q::one() };
        for i in 0..=depth {
            for j in 0..nd {
                let col = idx(deg, i, j);
                for r in 0..dblock.rows {
                    if !dblock[(r, j)].is_zero() {
                        let v = m[(idx(deg + 1, i, r), col)].clone() + &dblock[(r, j)];
                        m[(idx(deg + 1, i, r), col)] = v;
                    }
                }
                if i >= 1 {
                    for r in 0..wedge.rows {
                        if !wedge[(r, j)].is_zero() {
                            let v = m[(idx(deg + 1, i - 1, r), col)].clone()
                                + &sign * &wedge[(r, j)];
                            m[(idx(deg + 1, i - 1, r), col)] = v;
                        }
                    }
                }
            }
        }
        d.set_block(deg, m);
    }

    // product: (x u^[i])(y u^[j]) = C(i+j, i) xy u^[i+j], truncated
    let mut mult = MultTable::new();
    for &da in &total.space.degrees() {
        for &db in &total.space.degrees() {
            for ia in 0..dim_at(da) {
                for ib in 0..dim_at(db) {
                    let prod = total.mul_basis(da, ia, db, ib);
                    if prod.is_empty() {
                        continue;
                    }
                    for i in 0..=depth {
                        for j in 0..=depth - i {
                            let coef = binomial(i + j, i);
                            let entry: Vec<(usize, Q)> = prod
                                .iter()
                                .map(|(k, c)| (idx(da + db, i + j, *k), c * &coef))
                                .collect();
                            mult.insert(
                                (da, idx(da, i, ia), db, idx(db, j, ib)),
                                entry,
                            );
                        }
                    }
                }
            }
        }
    }

    let mut unit = vec![Q::zero(); space.dim(0)];
    for (j, c) in total.unit.iter().enumerate() {
        unit[idx(0, 0, j)] = c.clone();
    }
    let algebra = Cdga { space: space.clone(), d, unit, mult };

    // monodromy N: x u^[i] -> x u^[i-1]
    let mut nmap = GradedMap::zero(space.clone(), space.clone(), 0);
    for &deg in total.space.basis.keys() {
        let nd = dim_at(deg);
        let mut m = Mat::zero(nd * (depth + 1), nd * (depth + 1));
        for i in 1..=depth {
            for j in 0..nd {
                m[(idx(deg, i - 1, j), idx(deg, i, j))] = Q::one();
            }
        }
        nmap.set_block(deg, m);
    }
    let monodromy = Derivation { map: nmap };

    // restriction r: u^[0] part through proj, u^[i>=1] killed
    let mut r = GradedMap::zero(space.clone(), ext.base.space.clone(), 0);
    for &deg in total.space.basis.keys() {
        let nd = dim_at(deg);
        let pb = ext.proj.block(deg);
        let mut m = Mat::zero(ext.base.space.dim(deg), nd * (depth + 1));
        for j in 0..nd {
            for row in 0..m.rows {
                m[(row, idx(deg, 0, j))] = pb[(row, j)].clone();
            }
        }
        r.set_block(deg, m);
    }

    // Frobenius: phi(x u^[i]) = p^i phi(x) u^[i], requires phi(theta) = p theta
    let frobenius = match frob {
        None => None,
        Some(f) => {
            let pt = f.phi.apply(1, &ext.theta);
            let expect: Vec<Q> = ext.theta.iter().map(|x| x * qi(f.p as i64)).collect();
            if pt != expect {
                return Err(CdgaError::Other(
                    "Frobenius does not satisfy phi(theta) = p*theta".into(),
                ));
            }
            let mut phi = GradedMap::zero(space.clone(), space.clone(), 0);
            for &deg in total.space.basis.keys() {
                let nd = dim_at(deg);
                let base_blk = f.phi.block(deg);
                let mut m = Mat::zero(space.dim(deg + 0), nd * (depth + 1));
                for i in 0..=depth {
                    let pi = qi((f.p as i64).pow(i as u32));
                    for j in 0..nd {
                        for r2 in 0..base_blk.rows {
                            if !base_blk[(r2, j)].is_zero() {
                                m[(idx(deg, i, r2), idx(deg, i, j))] =
                                    &base_blk[(r2, j)] * &pi;
                            }
                        }
                    }
                }
                phi.set_block(deg, m);
            }
            Some(Frobenius { phi, p: f.p, d_exp: f.d_exp })
        }
    };

    let top = total.space.top_degree().unwrap_or(0);
    let safe_range = depth as i64 - top;
    Ok(UExtension { algebra, depth, monodromy, restriction: r, frobenius, safe_range })
}

fn binomial(n: usize, k: usize) -> Q {
    let mut num = Q::one();
    for i in 0..k {
        num = num * qi((n - i) as i64) / qi((i + 1) as i64);
    }
    num
}

/// Report on the induced exact sequence of augmentation-type ideals
/// 0 -> I[-1] -> I~ -> I -> 0.
#[derive(Clone, Debug)]
pub struct IdealSequence {
    /// degreewise subspaces of the total algebra
    pub tilde_ideal: BTreeMap<i64, Subspace>,
    /// degreewise subspaces of the base
    pub base_ideal: BTreeMap<i64, Subspace>,
    pub exact_dims: Vec<(i64, usize, usize, usize)>, // (deg, dim I~, dim I, dim I[-1])
}

/// Build the ideal sequence from lifted point data: a degree-0 evaluation on
/// the total algebra lifting the augmentation, and a degree-1 functional
/// reading off the theta-coefficient at the point.
pub fn augmented_theta(
    ext: &ThetaExtension,
    aug: &Augmentation,
    eval0: &[Q],
    theta_coeff: &[Q],
) -> Result<IdealSequence, CdgaError> {
    ext.validate()?;
    aug.validate(&ext.base)?;
    let total = &ext.total;
    if eval0.len() != total.space.dim(0) || theta_coeff.len() != total.space.dim(1) {
        return Err(CdgaError::IncompatiblePointData);
    }
    // compatibility: aug(proj(x)) = eval0(x) on degree 0
    for j in 0..total.space.dim(0) {
        let px = ext.proj.apply(0, &unit_vec(total.space.dim(0), j));
        let lhs = aug.eval0(&px);
        let rhs = eval0[j].clone();
        if lhs != rhs {
            return Err(CdgaError::IncompatiblePointData);
        }
    }
    // theta_coeff(theta) must be 1
    let tc: Q = theta_coeff.iter().zip(&ext.theta).map(|(f, t)| f * t).sum();
    if tc != Q::one() {
        return Err(CdgaError::IncompatiblePointData);
    }
    let base_ideal = aug.ideal(&ext.base);
    let mut tilde_ideal = BTreeMap::new();
    for &deg in total.space.basis.keys() {
        let n = total.space.dim(deg);
        let sub = if deg == 0 {
            Subspace::span(n, &Mat::from_rows(vec![eval0.to_vec()]).kernel_basis())
        } else if deg == 1 {
            Subspace::span(n, &Mat::from_rows(vec![theta_coeff.to_vec()]).kernel_basis())
        } else {
            Subspace::full(n)
        };
        tilde_ideal.insert(deg, sub);
    }
    // exactness degreewise: dim I~^n = dim I^n + dim I^{n-1}, with the wedge
    // image of I^{n-1} inside I~^n and proj(I~^n) = I^n
    let mut exact_dims = Vec::new();
    for (&deg, sub) in &tilde_ideal {
        let di = base_ideal.get(&deg).map_or(0, |s| s.dim());
        let dprev = base_ideal.get(&(deg - 1)).map_or(0, |s| s.dim());
        if sub.dim() != di + dprev {
            return Err(CdgaError::NotExact(deg, di + dprev, sub.dim()));
        }
        // wedge image of I^{deg-1} lands in I~^deg
        if let Some(prev) = base_ideal.get(&(deg - 1)) {
            let wedged = prev.image_under(&ext.wedge_map(deg - 1));
            if !sub.contains_subspace(&wedged) {
                return Err(CdgaError::NotExact(deg, di + dprev, sub.dim()));
            }
        }
        // proj(I~) = I
        if let Some(bi) = base_ideal.get(&deg) {
            let projected = sub.image_under(&ext.proj.block(deg));
            if projected.dim() != bi.dim() || !bi.contains_subspace(&projected) {
                return Err(CdgaError::NotExact(deg, di + dprev, sub.dim()));
            }
        }
        exact_dims.push((deg, sub.dim(), di, dprev));
    }
    Ok(IdealSequence { tilde_ideal, base_ideal, exact_dims })
}
