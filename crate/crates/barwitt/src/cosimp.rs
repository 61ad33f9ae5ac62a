//! Cosimplicial CDGAs, polynomial differential forms on algebraic simplices,
//! the ordinary total complex s with the Alexander-Whitney product, the
//! Thom-Whitney end s_TW computed against a weight-truncated form model, the
//! integration comparison map I, and nerve assembly from component diagrams.

use crate::cdga::{unit_vec, Cdga, CdgaMorphism, MultTable};
use crate::filt::Filtration;
use crate::gla::{
    cohomology, tensor, tensor_map, Cohomology, Complex, GradedMap, GradedSpace, TensorSpace,
};
use crate::matrix::{qi, Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum CosimpError {
    #[error("product of weights {0} + {1} exceeds the truncation budget {2}")]
    Overflow(i64, i64, i64),
    #[error("cosimplicial identity fails: {0}")]
    Identity(String),
    #[error("structure map is not a CDGA morphism: {0}")]
    NotMorphism(String),
    #[error("restriction diagram does not commute on subset {0:?} adding {1} and {2}")]
    NonCommutingSquare(Vec<usize>, usize, usize),
    #[error("empty component diagram")]
    EmptyDiagram,
    #[error("missing restriction map {0:?} -> {1:?}")]
    MissingRestriction(Vec<usize>, Vec<usize>),
    #[error("integration is not a chain map at total degree {0}")]
    IntegrationNotChain(i64),
    #[error("{0}")]
    Other(String),
}

// ---------------------------------------------------------------------------
// Polynomial forms on the algebraic n-simplex, truncated by weight
// ---------------------------------------------------------------------------

/// Monomial exponents over the free coordinates t_1..t_n (t_0 eliminated via
/// the relation sum t_i = 1).
type Exps = Vec<u32>;
/// Strictly increasing list of wedge factors dt_i, i in 1..=n.
type Mask = Vec<usize>;
/// A polynomial in the free coordinates.
type Poly = BTreeMap<Exps, Q>;

/// Forms on Delta_n with weight = polynomial degree + form degree <= dmax.
#[derive(Clone, Debug)]
pub struct SimplexForms {
    pub n: usize,
    pub dmax: i64,
    pub space: GradedSpace,
    basis: BTreeMap<i64, Vec<(Exps, Mask)>>,
    index: BTreeMap<i64, BTreeMap<(Exps, Mask), usize>>,
}

fn exps_degree(e: &Exps) -> i64 {
    e.iter().map(|&x| x as i64).sum()
}

fn basis_label(e: &Exps, m: &Mask) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (i, &a) in e.iter().enumerate() {
        if a == 1 {
            parts.push(format!("t{}", i + 1));
        } else if a > 1 {
            parts.push(format!("t{}^{}", i + 1, a));
        }
    }
    for &i in m {
        parts.push(format!("dt{i}"));
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// All monomial-times-wedge basis forms on Delta_n up to the weight budget.
pub fn simplex_forms(n: usize, dmax: i64) -> SimplexForms {
    assert!(dmax >= 1);
    let mut basis: BTreeMap<i64, Vec<(Exps, Mask)>> = BTreeMap::new();
    // enumerate masks
    let mut masks: Vec<Mask> = vec![vec![]];
    for i in 1..=n {
        let mut next = masks.clone();
        for m in &masks {
            let mut mm = m.clone();
            mm.push(i);
            next.push(mm);
        }
        masks = next;
    }
    for m in &masks {
        m.windows(2).for_each(|w| assert!(w[0] < w[1]));
    }
    // enumerate exponent vectors of degree <= dmax - |mask|
    fn gen_exps(n: usize, max: i64, cur: &mut Exps, out: &mut Vec<Exps>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let used = exps_degree(cur);
        for e in 0..=(max - used).max(0) as u32 {
            cur.push(e);
            gen_exps(n, max, cur, out);
            cur.pop();
        }
    }
    for m in &masks {
        let k = m.len() as i64;
        if k > dmax {
            continue;
        }
        let mut exps = Vec::new();
        gen_exps(n, dmax - k, &mut Exps::new(), &mut exps);
        for e in exps {
            basis.entry(k).or_default().push((e, m.clone()));
        }
    }
    for v in basis.values_mut() {
        v.sort();
    }
    let index: BTreeMap<i64, BTreeMap<(Exps, Mask), usize>> = basis
        .iter()
        .map(|(&k, v)| (k, v.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect()))
        .collect();
    let space = GradedSpace {
        basis: basis
            .iter()
            .map(|(&k, v)| (k, v.iter().map(|(e, m)| basis_label(e, m)).collect()))
            .collect(),
    };
    SimplexForms { n, dmax, space, basis, index }
}

impl SimplexForms {
    pub fn dim(&self, k: i64) -> usize {
        self.basis.get(&k).map_or(0, |v| v.len())
    }

    fn weight_of(&self, k: i64, i: usize) -> i64 {
        let (e, _) = &self.basis[&k][i];
        exps_degree(e) + k
    }

    /// Largest weight among basis forms carrying a nonzero coefficient.
    pub fn max_weight(&self, k: i64, v: &[Q]) -> i64 {
        let mut w = 0;
        for (i, c) in v.iter().enumerate() {
            if !c.is_zero() {
                w = w.max(self.weight_of(k, i));
            }
        }
        w
    }

    /// The exterior differential as a graded map (weight-preserving).
    pub fn d_map(&self) -> GradedMap {
        let mut d = GradedMap::zero(self.space.clone(), self.space.clone(), 1);
        for (&k, forms) in &self.basis {
            let rows = self.dim(k + 1);
            let mut m = Mat::zero(rows, forms.len());
            for (col, (e, mask)) in forms.iter().enumerate() {
                for j in 1..=self.n {
                    let a = e[j - 1];
                    if a == 0 || mask.contains(&j) {
                        continue;
                    }
                    let mut ee = e.clone();
                    ee[j - 1] -= 1;
                    // dt_j wedge dt_mask: move dt_j into sorted position
                    let below = mask.iter().filter(|&&s| s < j).count();
                    let sign = if below % 2 != 0 { -Q::one() } else { Q::one() };
                    let mut mm = mask.clone();
                    mm.push(j);
                    mm.sort();
                    if let Some(&row) = self.index[&(k + 1)].get(&(ee, mm)) {
                        m[(row, col)] = &m[(row, col)] + qi(a as i64) * sign;
                    }
                }
            }
            d.set_block(k, m);
        }
        d
    }

    /// Product of two basis forms; error if the weight budget is exceeded.
    pub fn mul_basis(&self, k1: i64, i1: usize, k2: i64, i2: usize) -> Result<Vec<(usize, Q)>, CosimpError> {
        let (e1, m1) = &self.basis[&k1][i1];
        let (e2, m2) = &self.basis[&k2][i2];
        if m1.iter().any(|x| m2.contains(x)) {
            return Ok(vec![]);
        }
        let w = self.weight_of(k1, i1) + self.weight_of(k2, i2);
        if w > self.dmax {
            return Err(CosimpError::Overflow(
                self.weight_of(k1, i1),
                self.weight_of(k2, i2),
                self.dmax,
            ));
        }
        // sign of sorting the concatenation m1 ++ m2
        let mut swaps = 0usize;
        for &a in m1 {
            for &b in m2 {
                if b < a {
                    swaps += 1;
                }
            }
        }
        let sign = if swaps % 2 != 0 { -Q::one() } else { Q::one() };
        let ee: Exps = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
        let mut mm: Mask = m1.iter().chain(m2.iter()).copied().collect();
        mm.sort();
        let idx = self.index[&(k1 + k2)][&(ee, mm)];
        Ok(vec![(idx, sign)])
    }

    /// Product of coordinate vectors.
    pub fn mul(&self, k1: i64, v1: &[Q], k2: i64, v2: &[Q]) -> Result<Vec<Q>, CosimpError> {
        let mut out = vec![Q::zero(); self.dim(k1 + k2)];
        for (i1, c1) in v1.iter().enumerate() {
            if c1.is_zero() {
                continue;
            }
            for (i2, c2) in v2.iter().enumerate() {
                if c2.is_zero() {
                    continue;
                }
                for (k, s) in self.mul_basis(k1, i1, k2, i2)? {
                    out[k] = &out[k] + c1 * c2 * s;
                }
            }
        }
        Ok(out)
    }

    /// Coordinates of the constant function 1 in degree 0.
    pub fn one(&self) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim(0)];
        let idx = self.index[&0][&(vec![0u32; self.n], vec![])];
        v[idx] = Q::one();
        v
    }
}

/// A substitution t_j -> affine polynomial, specifying a pullback map between
/// simplex form algebras. `images[j-1]` is the image of the free coordinate
/// t_j: a polynomial plus the coefficients of its differential over the
/// target's dt_1..dt_m.
struct Subst {
    images: Vec<(Poly, Vec<Q>)>,
}

fn poly_const(tgt_n: usize, c: Q) -> Poly {
    let mut p = Poly::new();
    if !c.is_zero() {
        p.insert(vec![0u32; tgt_n], c);
    }
    p
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Exps = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let v = out.entry(e).or_insert_with(Q::zero);
            *v += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

impl Subst {
    /// Apply to a basis form of `src`, producing coordinates in `tgt`.
    fn apply(&self, src: &SimplexForms, tgt: &SimplexForms, k: i64, i: usize) -> Vec<Q> {
        let (e, mask) = &src.basis[&k][i];
        // polynomial part
        let mut poly = poly_const(tgt.n, Q::one());
        for (j, &a) in e.iter().enumerate() {
            for _ in 0..a {
                poly = poly_mul(&poly, &self.images[j].0);
            }
        }
        // wedge part: product over j in mask of sum_k c_{jk} du_k
        let mut terms: Vec<(Mask, Q)> = vec![(vec![], Q::one())];
        for &j in mask {
            let coeffs = &self.images[j - 1].1;
            let mut next: Vec<(Mask, Q)> = Vec::new();
            for (m, c) in &terms {
                for (kk, ck) in coeffs.iter().enumerate() {
                    if ck.is_zero() {
                        continue;
                    }
                    let var = kk + 1;
                    if m.contains(&var) {
                        continue;
                    }
                    // append du_var on the right and sort: sign from elements > var
                    let above = m.iter().filter(|&&s| s > var).count();
                    let sign = if above % 2 != 0 { -Q::one() } else { Q::one() };
                    let mut mm = m.clone();
                    mm.push(var);
                    mm.sort();
                    next.push((mm, c * ck * sign));
                }
            }
            // merge duplicates
            let mut merged: BTreeMap<Mask, Q> = BTreeMap::new();
            for (m, c) in next {
                let v = merged.entry(m).or_insert_with(Q::zero);
                *v += c;
            }
            terms = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        }
        let mut out = vec![Q::zero(); tgt.dim(k)];
        for (m, cm) in &terms {
            for (ee, ce) in &poly {
                let key = (ee.clone(), m.clone());
                let idx = *tgt.index[&k]
                    .get(&key)
                    .unwrap_or_else(|| panic!("substitution left the weight budget"));
                out[idx] = &out[idx] + cm * ce;
            }
        }
        out
    }

    fn matrix(&self, src: &SimplexForms, tgt: &SimplexForms) -> GradedMap {
        let mut f = GradedMap::zero(src.space.clone(), tgt.space.clone(), 0);
        for &k in src.basis.keys() {
            let mut m = Mat::zero(tgt.dim(k), src.dim(k));
            for i in 0..src.dim(k) {
                for (r, c) in self.apply(src, tgt, k, i).into_iter().enumerate() {
                    m[(r, i)] = c;
                }
            }
            f.set_block(k, m);
        }
        f
    }
}

/// The i-th free coordinate (as a polynomial) and its differential, where
/// index 0 means the eliminated t_0 = 1 - sum t_j.
fn coord_poly(n: usize, i: usize) -> (Poly, Vec<Q>) {
    if i == 0 {
        let mut p = poly_const(n, Q::one());
        let mut dcoef = vec![Q::zero(); n];
        for j in 1..=n {
            let mut e = vec![0u32; n];
            e[j - 1] = 1;
            p.insert(e, -Q::one());
            dcoef[j - 1] = -Q::one();
        }
        (p, dcoef)
    } else {
        let mut e = vec![0u32; n];
        e[i - 1] = 1;
        let mut p = Poly::new();
        p.insert(e, Q::one());
        let mut dcoef = vec![Q::zero(); n];
        dcoef[i - 1] = Q::one();
        (p, dcoef)
    }
}

/// Face map (restriction) d_i: E_n -> E_{n-1}, the pullback of the i-th
/// coface Delta_{n-1} -> Delta_n, i in 0..=n.
pub fn face_map(src: &SimplexForms, tgt: &SimplexForms, i: usize) -> GradedMap {
    assert_eq!(tgt.n + 1, src.n);
    assert!(i <= src.n);
    let m = tgt.n;
    // pullback of source coordinate t_j (free, j = 1..n)
    let images: Vec<(Poly, Vec<Q>)> = (1..=src.n)
        .map(|j| {
            if j == i {
                (Poly::new(), vec![Q::zero(); m])
            } else if j < i {
                coord_poly(m, j)
            } else {
                // j > i: t_j -> u_{j-1}; when i = 0 this hits the eliminated u_0
                coord_poly(m, j - 1)
            }
        })
        .collect();
    Subst { images }.matrix(src, tgt)
}

/// Degeneracy map s_i: E_n -> E_{n+1}, the pullback of the i-th codegeneracy
/// Delta_{n+1} -> Delta_n, i in 0..=n.
pub fn degeneracy_map(src: &SimplexForms, tgt: &SimplexForms, i: usize) -> GradedMap {
    assert_eq!(tgt.n, src.n + 1);
    assert!(i <= src.n);
    let m = tgt.n;
    let images: Vec<(Poly, Vec<Q>)> = (1..=src.n)
        .map(|j| {
            if j < i {
                coord_poly(m, j)
            } else if j == i {
                // t_i -> u_i + u_{i+1}
                let (p1, d1) = coord_poly(m, i);
                let (p2, d2) = coord_poly(m, i + 1);
                let mut p = p1;
                for (e, c) in p2 {
                    let v = p.entry(e).or_insert_with(Q::zero);
                    *v += c;
                }
                let d: Vec<Q> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
                (p, d)
            } else {
                coord_poly(m, j + 1)
            }
        })
        .collect();
    Subst { images }.matrix(src, tgt)
}

/// Dirichlet integral of a top-degree form over Delta_n with the standard
/// orientation dt_1 ^ ... ^ dt_n.
pub fn integrate_top(forms: &SimplexForms, v: &[Q]) -> Q {
    let n = forms.n;
    let k = n as i64;
    let mut out = Q::zero();
    if forms.dim(k) == 0 {
        return out;
    }
    for (i, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let (e, mask) = &forms.basis[&k][i];
        debug_assert_eq!(mask.len(), n);
        // integral of t^e dt_1..dt_n = prod e_i! / (sum e_i + n)!
        let mut num = Q::one();
        for &a in e {
            for f in 1..=a as i64 {
                num = num * qi(f);
            }
        }
        let total = exps_degree(e) + n as i64;
        let mut den = Q::one();
        for f in 1..=total {
            den = den * qi(f);
        }
        out += c * num / den;
    }
    out
}

/// Iterated face restriction onto the face spanned by the vertex tuple
/// `tau` (strictly increasing, subset of 0..=n), then integration.
fn integrate_over_face(forms: &SimplexForms, k: i64, v: &[Q], tau: &[usize]) -> Q {
    let kk = tau.len() - 1;
    if k != kk as i64 {
        return Q::zero();
    }
    let tgt = simplex_forms(kk, forms.dmax);
    // substitution: t_{tau_j} -> u_j (j >= 1), t_{tau_0} -> u_0, others -> 0
    let images: Vec<(Poly, Vec<Q>)> = (1..=forms.n)
        .map(|t| {
            if let Some(j) = tau.iter().position(|&x| x == t) {
                coord_poly(kk, j)
            } else {
                (Poly::new(), vec![Q::zero(); kk])
            }
        })
        .collect();
    let sub = Subst { images };
    let mut restricted = vec![Q::zero(); tgt.dim(k)];
    for (i, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (r, x) in sub.apply(forms, &tgt, k, i).into_iter().enumerate() {
            restricted[r] = &restricted[r] + c * x;
        }
    }
    integrate_top(&tgt, &restricted)
}

// ---------------------------------------------------------------------------
// Whitney elementary forms
// ---------------------------------------------------------------------------

/// The Whitney elementary-forms subcomplex W_n of E_n with the integration
/// projection R (R . inclusion = id; both chain maps).
#[derive(Clone, Debug)]
pub struct WhitneyModel {
    pub forms: SimplexForms,
    /// per form degree k: columns = elementary forms omega_tau in E-coords
    pub inclusion: BTreeMap<i64, Mat>,
    /// per form degree k: R matrix E^k -> W^k coordinates
    pub projection: BTreeMap<i64, Mat>,
    /// vertex tuples indexing the elementary forms, per degree
    pub tuples: BTreeMap<i64, Vec<Vec<usize>>>,
}

fn increasing_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, len, cur, out);
            cur.pop();
        }
    }
    rec(0, n, len, &mut Vec::new(), &mut out);
    out
}

/// Elementary form omega_tau = k! sum_j (-1)^j t_{tau_j} dt_{tau_0} ^ ..j.. ^ dt_{tau_k}
/// expressed in E_n coordinates (t_0 and dt_0 expanded).
fn elementary_form(forms: &SimplexForms, tau: &[usize]) -> Vec<Q> {
    let n = forms.n;
    let k = tau.len() - 1;
    let mut out = vec![Q::zero(); forms.dim(k as i64)];
    let mut factorial = Q::one();
    for f in 1..=k as i64 {
        factorial = factorial * qi(f);
    }
    for j in 0..=k {
        let sign = if j % 2 != 0 { -Q::one() } else { Q::one() };
        let (tpoly, _) = coord_poly(n, tau[j]);
        // wedge of dt_{tau_l}, l != j, in order
        let mut terms: Vec<(Mask, Q)> = vec![(vec![], Q::one())];
        for (l, &vtx) in tau.iter().enumerate() {
            if l == j {
                continue;
            }
            let (_, dcoef) = coord_poly(n, vtx);
            let mut next: Vec<(Mask, Q)> = Vec::new();
            for (m, c) in &terms {
                for (kk, ck) in dcoef.iter().enumerate() {
                    if ck.is_zero() {
                        continue;
                    }
                    let var = kk + 1;
                    if m.contains(&var) {
                        continue;
                    }
                    let above = m.iter().filter(|&&s| s > var).count();
                    let s = if above % 2 != 0 { -Q::one() } else { Q::one() };
                    let mut mm = m.clone();
                    mm.push(var);
                    mm.sort();
                    next.push((mm, c * ck * s));
                }
            }
            let mut merged: BTreeMap<Mask, Q> = BTreeMap::new();
            for (m, c) in next {
                let v = merged.entry(m).or_insert_with(Q::zero);
                *v += c;
            }
            terms = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        }
        for (m, cm) in &terms {
            for (e, ce) in &tpoly {
                if let Some(&idx) = forms.index[&(k as i64)].get(&(e.clone(), m.clone())) {
                    out[idx] = &out[idx] + &factorial * &sign * cm * ce;
                }
            }
        }
    }
    out
}

/// Build the Whitney model inside E_n (requires dmax >= n + 1 so every
/// elementary form fits the budget).
pub fn whitney_model(n: usize, dmax: i64) -> WhitneyModel {
    assert!(dmax >= n as i64 + 1 || n == 0);
    let forms = simplex_forms(n, dmax.max(1));
    let mut inclusion = BTreeMap::new();
    let mut projection = BTreeMap::new();
    let mut tuples = BTreeMap::new();
    for k in 0..=n {
        let taus = increasing_tuples(n, k + 1);
        let cols: Vec<Vec<Q>> = taus.iter().map(|t| elementary_form(&forms, t)).collect();
        let inc = Mat::from_cols(forms.dim(k as i64), &cols);
        // R(eta) = sum_tau (int_tau eta) omega_tau
        let mut proj = Mat::zero(taus.len(), forms.dim(k as i64));
        for i in 0..forms.dim(k as i64) {
            let mut v = vec![Q::zero(); forms.dim(k as i64)];
            v[i] = Q::one();
            for (r, tau) in taus.iter().enumerate() {
                proj[(r, i)] = integrate_over_face(&forms, k as i64, &v, tau);
            }
        }
        inclusion.insert(k as i64, inc);
        projection.insert(k as i64, proj);
        tuples.insert(k as i64, taus);
    }
    WhitneyModel { forms, inclusion, projection, tuples }
}

// ---------------------------------------------------------------------------
// Cosimplicial CDGAs
// ---------------------------------------------------------------------------

/// A cosimplicial CDGA truncated at level m = levels.len() - 1.
#[derive(Clone, Debug)]
pub struct CosimplicialCdga {
    pub levels: Vec<Cdga>,
    /// cofaces[n][i]: levels[n] -> levels[n+1], i in 0..=n+1
    pub cofaces: Vec<Vec<GradedMap>>,
    /// codegens[n][i]: levels[n+1] -> levels[n], i in 0..=n
    pub codegens: Vec<Vec<GradedMap>>,
}

impl CosimplicialCdga {
    pub fn m(&self) -> usize {
        self.levels.len() - 1
    }

    /// Check that every structure map is a CDGA morphism and that all
    /// cosimplicial identities hold within the truncation range.
    pub fn validate(&self) -> Result<(), CosimpError> {
        let m = self.m();
        assert_eq!(self.cofaces.len(), m);
        assert_eq!(self.codegens.len(), m);
        for a in &self.levels {
            a.validate().map_err(|e| CosimpError::NotMorphism(format!("level algebra: {e}")))?;
        }
        for (n, fs) in self.cofaces.iter().enumerate() {
            assert_eq!(fs.len(), n + 2);
            for (i, f) in fs.iter().enumerate() {
                CdgaMorphism { map: f.clone() }
                    .validate(&self.levels[n], &self.levels[n + 1])
                    .map_err(|e| CosimpError::NotMorphism(format!("coface {i} at level {n}: {e}")))?;
            }
        }
        for (n, ss) in self.codegens.iter().enumerate() {
            assert_eq!(ss.len(), n + 1);
            for (i, s) in ss.iter().enumerate() {
                CdgaMorphism { map: s.clone() }
                    .validate(&self.levels[n + 1], &self.levels[n])
                    .map_err(|e| {
                        CosimpError::NotMorphism(format!("codegeneracy {i} at level {n}: {e}"))
                    })?;
            }
        }
        let eq = |a: &GradedMap, b: &GradedMap, what: String| -> Result<(), CosimpError> {
            for &deg in a.source.basis.keys() {
                if a.block(deg) != b.block(deg) {
                    return Err(CosimpError::Identity(what));
                }
            }
            Ok(())
        };
        // cofaces: delta^j delta^i = delta^i delta^{j-1} for i < j
        for n in 0..m.saturating_sub(1) {
            for j in 0..=n + 2 {
                for i in 0..j {
                    let lhs = self.cofaces[n + 1][j].compose(&self.cofaces[n][i]);
                    let rhs = self.cofaces[n + 1][i].compose(&self.cofaces[n][j - 1]);
                    eq(&lhs, &rhs, format!("delta^{j} delta^{i} at level {n}"))?;
                }
            }
        }
        // codegeneracies: sigma^j sigma^i = sigma^i sigma^{j+1} for i <= j
        for n in 0..m.saturating_sub(1) {
            for j in 0..=n {
                for i in 0..=j {
                    let lhs = self.codegens[n][j].compose(&self.codegens[n + 1][i]);
                    let rhs = self.codegens[n][i].compose(&self.codegens[n + 1][j + 1]);
                    eq(&lhs, &rhs, format!("sigma^{j} sigma^{i} at level {n}"))?;
                }
            }
        }
        // mixed: sigma^j delta^i
        for n in 0..m {
            for j in 0..=n {
                for i in 0..=n + 1 {
                    let lhs = self.codegens[n][j].compose(&self.cofaces[n][i]);
                    if i == j || i == j + 1 {
                        eq(&lhs, &GradedMap::identity(&self.levels[n].space),
                            format!("sigma^{j} delta^{i} != id at level {n}"))?;
                    } else if i < j {
                        if n >= 1 {
                            let rhs = self.cofaces[n - 1][i].compose(&self.codegens[n - 1][j - 1]);
                            eq(&lhs, &rhs, format!("sigma^{j} delta^{i} at level {n}"))?;
                        }
                    } else if n >= 1 {
                        let rhs = self.cofaces[n - 1][i - 1].compose(&self.codegens[n - 1][j]);
                        eq(&lhs, &rhs, format!("sigma^{j} delta^{i} at level {n}"))?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// The constant cosimplicial CDGA at `a`, truncated at level m.
pub fn constant_cosimplicial(a: &Cdga, m: usize) -> CosimplicialCdga {
    let id = GradedMap::identity(&a.space);
    CosimplicialCdga {
        levels: vec![a.clone(); m + 1],
        cofaces: (0..m).map(|n| vec![id.clone(); n + 2]).collect(),
        codegens: (0..m).map(|n| vec![id.clone(); n + 1]).collect(),
    }
}

// ---------------------------------------------------------------------------
// Products of CDGAs and the nerve of a component diagram
// ---------------------------------------------------------------------------

/// Direct product of CDGAs: direct sum of spaces with componentwise product.
/// Returns the product and, per degree, the starting offset of each factor.
pub fn cdga_product(parts: &[Cdga], prefixes: &[String]) -> (Cdga, Vec<BTreeMap<i64, usize>>) {
    assert_eq!(parts.len(), prefixes.len());
    let mut basis: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut degrees: Vec<i64> = parts
        .iter()
        .flat_map(|p| p.space.degrees())
        .collect();
    degrees.sort();
    degrees.dedup();
    let mut offsets: Vec<BTreeMap<i64, usize>> = vec![BTreeMap::new(); parts.len()];
    for &deg in &degrees {
        let labels = basis.entry(deg).or_default();
        for (pi, p) in parts.iter().enumerate() {
            offsets[pi].insert(deg, labels.len());
            for l in p.space.labels(deg) {
                labels.push(format!("{}{}", prefixes[pi], l));
            }
        }
    }
    let space = GradedSpace { basis };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for &deg in &degrees {
        let mut blk = Mat::zero(space.dim(deg + 1), space.dim(deg));
        for (pi, p) in parts.iter().enumerate() {
            let pb = p.d.block(deg);
            let ro = offsets[pi].get(&(deg + 1)).copied().unwrap_or(0);
            let co = offsets[pi][&deg];
            for r in 0..pb.rows {
                for c in 0..pb.cols {
                    blk[(ro + r, co + c)] = pb[(r, c)].clone();
                }
            }
        }
        d.set_block(deg, blk);
    }
    let mut unit = vec![Q::zero(); space.dim(0)];
    for (pi, p) in parts.iter().enumerate() {
        if p.space.dim(0) == 0 {
            continue;
        }
        let off = offsets[pi][&0];
        for (i, c) in p.unit.iter().enumerate() {
            unit[off + i] = c.clone();
        }
    }
    let mut mult = MultTable::new();
    for (pi, p) in parts.iter().enumerate() {
        for (&(da, ia, db, ib), terms) in &p.mult {
            let oa = offsets[pi][&da];
            let ob = offsets[pi][&db];
            let oc = offsets[pi][&(da + db)];
            let mapped: Vec<(usize, Q)> =
                terms.iter().map(|(k, c)| (oc + k, c.clone())).collect();
            if !mapped.is_empty() {
                mult.insert((da, oa + ia, db, ob + ib), mapped);
            }
        }
    }
    (Cdga { space, d, unit, mult }, offsets)
}

/// Input data for the nerve: CDGAs attached to nonempty subsets of the
/// component set {0..c-1} together with one-step restriction maps. Missing
/// subsets are treated as the zero algebra.
#[derive(Clone, Debug)]
pub struct NerveInput {
    pub c: usize,
    pub algebras: BTreeMap<Vec<usize>, Cdga>,
    /// (S, T) with S a subset of T and |T| = |S| + 1
    pub restrictions: BTreeMap<(Vec<usize>, Vec<usize>), GradedMap>,
}

impl NerveInput {
    fn algebra(&self, s: &[usize]) -> Cdga {
        self.algebras.get(s).cloned().unwrap_or_else(Cdga::zero_algebra)
    }

    fn one_step(&self, s: &[usize], t: &[usize]) -> Result<GradedMap, CosimpError> {
        if let Some(f) = self.restrictions.get(&(s.to_vec(), t.to_vec())) {
            return Ok(f.clone());
        }
        // restrictions into or out of a missing (zero) algebra are zero
        let a = self.algebra(s);
        let b = self.algebra(t);
        if a.space.is_empty() || b.space.is_empty() {
            return Ok(GradedMap::zero(a.space, b.space, 0));
        }
        Err(CosimpError::MissingRestriction(s.to_vec(), t.to_vec()))
    }

    /// Restriction for an arbitrary inclusion S in T, composing one-step maps
    /// in increasing order of the added elements; checks that the order does
    /// not matter and reports a witness square if it does.
    pub fn restriction(&self, s: &[usize], t: &[usize]) -> Result<GradedMap, CosimpError> {
        assert!(s.iter().all(|x| t.contains(x)));
        let added: Vec<usize> = t.iter().filter(|x| !s.contains(x)).copied().collect();
        let mut f = GradedMap::identity(&self.algebra(s).space);
        let mut cur = s.to_vec();
        for &j in &added {
            let mut next = cur.clone();
            next.push(j);
            next.sort();
            f = self.one_step(&cur, &next)?.compose(&f);
            cur = next;
        }
        Ok(f)
    }

    /// Check commutativity of all one-step squares; returns the first
    /// non-commuting square as an error.
    pub fn check_squares(&self) -> Result<(), CosimpError> {
        let subsets = all_subsets(self.c);
        for s in &subsets {
            for &j in (0..self.c).collect::<Vec<_>>().iter() {
                for &k in (j + 1..self.c).collect::<Vec<_>>().iter() {
                    if s.contains(&j) || s.contains(&k) {
                        continue;
                    }
                    let mut sj = s.clone();
                    sj.push(j);
                    sj.sort();
                    let mut sk = s.clone();
                    sk.push(k);
                    sk.sort();
                    let mut sjk = sj.clone();
                    sjk.push(k);
                    sjk.sort();
                    let via_j = self.one_step(&sj, &sjk)?.compose(&self.one_step(s, &sj)?);
                    let via_k = self.one_step(&sk, &sjk)?.compose(&self.one_step(s, &sk)?);
                    for &deg in self.algebra(s).space.basis.keys() {
                        if via_j.block(deg) != via_k.block(deg) {
                            return Err(CosimpError::NonCommutingSquare(s.clone(), j, k));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn all_subsets(c: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << c) {
        let s: Vec<usize> = (0..c).filter(|i| mask & (1 << i) != 0).collect();
        out.push(s);
    }
    out
}

fn nondecreasing_tuples(c: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, c: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..c {
            cur.push(i);
            rec(i, c, len, cur, out);
            cur.pop();
        }
    }
    rec(0, c, len, &mut Vec::new(), &mut out);
    out
}

fn tuple_set(t: &[usize]) -> Vec<usize> {
    let mut s = t.to_vec();
    s.sort();
    s.dedup();
    s
}

/// The (truncated) nerve cosimplicial CDGA of a component diagram: level n is
/// the product over nondecreasing (n+1)-tuples of components of the algebra
/// attached to the tuple's underlying set.
pub fn nerve_cdga(input: &NerveInput, m: usize) -> Result<CosimplicialCdga, CosimpError> {
    if input.c == 0 {
        return Err(CosimpError::EmptyDiagram);
    }
    input.check_squares()?;
    let mut level_tuples: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut levels: Vec<Cdga> = Vec::new();
    let mut level_offsets: Vec<Vec<BTreeMap<i64, usize>>> = Vec::new();
    for n in 0..=m {
        let tuples = nondecreasing_tuples(input.c, n + 1);
        let parts: Vec<Cdga> = tuples.iter().map(|t| input.algebra(&tuple_set(t))).collect();
        let prefixes: Vec<String> = tuples
            .iter()
            .map(|t| {
                let s: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                format!("({})", s.join(","))
            })
            .collect();
        let (prod, offsets) = cdga_product(&parts, &prefixes);
        level_tuples.push(tuples);
        levels.push(prod);
        level_offsets.push(offsets);
    }
    // structure map between product levels: for each target tuple, the source
    // tuple it pulls from and the derived restriction between their sets
    let build = |src_level: usize,
                     tgt_level: usize,
                     pick: &dyn Fn(&[usize]) -> Vec<usize>|
     -> Result<GradedMap, CosimpError> {
        let src = &levels[src_level];
        let tgt = &levels[tgt_level];
        let mut f = GradedMap::zero(src.space.clone(), tgt.space.clone(), 0);
        for &deg in src.space.basis.keys() {
            let mut blk = Mat::zero(tgt.space.dim(deg), src.space.dim(deg));
            for (ti, tt) in level_tuples[tgt_level].iter().enumerate() {
                let st = pick(tt);
                let si = level_tuples[src_level].iter().position(|x| *x == st).unwrap();
                let rho = input.restriction(&tuple_set(&st), &tuple_set(tt))?;
                let rb = rho.block(deg);
                let ro = level_offsets[tgt_level][ti].get(&deg).copied().unwrap_or(0);
                let co = level_offsets[src_level][si].get(&deg).copied().unwrap_or(0);
                for r in 0..rb.rows {
                    for c in 0..rb.cols {
                        blk[(ro + r, co + c)] = rb[(r, c)].clone();
                    }
                }
            }
            f.set_block(deg, blk);
        }
        Ok(f)
    };
    let mut cofaces = Vec::new();
    let mut codegens = Vec::new();
    for n in 0..m {
        let mut fs = Vec::new();
        for i in 0..=n + 1 {
            // coface delta^i deletes index i of the target tuple
            let pick = move |t: &[usize]| -> Vec<usize> {
                let mut s = t.to_vec();
                s.remove(i);
                s
            };
            fs.push(build(n, n + 1, &pick)?);
        }
        cofaces.push(fs);
        let mut ss = Vec::new();
        for i in 0..=n {
            // codegeneracy sigma^i duplicates index i of the source tuple;
            // viewed from the target (level n) tuple it inserts a repeat at i
            let pick = move |t: &[usize]| -> Vec<usize> {
                let mut s = t.to_vec();
                s.insert(i, t[i]);
                s
            };
            ss.push(build(n + 1, n, &pick)?);
        }
        codegens.push(ss);
    }
    Ok(CosimplicialCdga { levels, cofaces, codegens })
}

// ---------------------------------------------------------------------------
// The ordinary total complex s(G) (conormalized cochain direction)
// ---------------------------------------------------------------------------

/// Conormalized total complex of a cosimplicial cochain complex: in each
/// level n take N^n = intersection of the kernels of all codegeneracies, with
/// total differential delta + (-1)^n d.
#[derive(Clone, Debug)]
pub struct TotalS {
    pub complex: Complex,
    /// per total degree k: list of (level n, conormalized subspace of the
    /// degree-(k-n) part of level n), in the order their bases appear in the
    /// abstract basis of `complex`
    pub pieces: BTreeMap<i64, Vec<(usize, Subspace)>>,
}

impl TotalS {
    /// Coordinates (in level-n ambient coordinates) of the level-n component
    /// of an abstract total-complex vector of degree k.
    pub fn component(&self, k: i64, n: usize, v: &[Q]) -> Vec<Q> {
        let mut off = 0usize;
        for (lev, sub) in self.pieces.get(&k).map(|p| p.as_slice()).unwrap_or(&[]) {
            if *lev == n {
                let mut out = vec![Q::zero(); sub.ambient];
                for j in 0..sub.dim() {
                    for (r, c) in sub.basis.col(j).iter().enumerate() {
                        out[r] = &out[r] + c * &v[off + j];
                    }
                }
                return out;
            }
            off += sub.dim();
        }
        vec![]
    }

    /// Abstract total-complex vector of degree k with the given level-n
    /// ambient component (must lie in the conormalized subspace) and zeros
    /// elsewhere.
    pub fn inject(&self, k: i64, n: usize, comp: &[Q]) -> Vec<Q> {
        let pieces = &self.pieces[&k];
        let total: usize = pieces.iter().map(|(_, s)| s.dim()).sum();
        let mut v = vec![Q::zero(); total];
        let mut off = 0usize;
        for (lev, sub) in pieces {
            if *lev == n {
                let coords = sub.coords(comp).expect("component not conormalized");
                for (j, c) in coords.into_iter().enumerate() {
                    v[off + j] = c;
                }
                return v;
            }
            off += sub.dim();
        }
        panic!("no level-{n} piece in total degree {k}");
    }
}

/// Conormalized subspaces N^{n,q} for every level and degree.
fn conormalized_pieces(g: &CosimplicialCdga) -> Vec<BTreeMap<i64, Subspace>> {
    let mut out = Vec::new();
    for (n, a) in g.levels.iter().enumerate() {
        let mut per_deg = BTreeMap::new();
        for &q in a.space.basis.keys() {
            let dim = a.space.dim(q);
            let mut sub = Subspace::full(dim);
            if n >= 1 {
                for s in &g.codegens[n - 1] {
                    let ker = Subspace::span(dim, &s.block(q).kernel_basis());
                    sub = sub.intersect(&ker);
                }
            }
            per_deg.insert(q, sub);
        }
        out.push(per_deg);
    }
    out
}

/// Build the conormalized total complex s(G).
pub fn total_s(g: &CosimplicialCdga) -> TotalS {
    let m = g.m();
    let norm = conormalized_pieces(g);
    let mut pieces: BTreeMap<i64, Vec<(usize, Subspace)>> = BTreeMap::new();
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for n in 0..=m {
        for (&q, sub) in &norm[n] {
            if sub.dim() == 0 {
                continue;
            }
            let k = q + n as i64;
            pieces.entry(k).or_default().push((n, sub.clone()));
            for j in 0..sub.dim() {
                labels.entry(k).or_default().push(format!("s{n}q{q}#{j}"));
            }
        }
    }
    let space = GradedSpace { basis: labels };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for (&k, ps) in &pieces {
        let rows = space.dim(k + 1);
        let cols = space.dim(k);
        let mut blk = Mat::zero(rows, cols);
        let target_pieces = pieces.get(&(k + 1)).map(|p| p.as_slice()).unwrap_or(&[]);
        let target_offset = |lev: usize| -> Option<(usize, &Subspace)> {
            let mut off = 0usize;
            for (l, s) in target_pieces {
                if *l == lev {
                    return Some((off, s));
                }
                off += s.dim();
            }
            None
        };
        let mut col_off = 0usize;
        for (n, sub) in ps {
            let n = *n;
            let q = k - n as i64;
            for j in 0..sub.dim() {
                let basis_vec = &sub.basis.col(j);
                let col = col_off + j;
                // cosimplicial part: sum_i (-1)^i delta^i, lands in level n+1
                if n < m {
                    let mut img = vec![Q::zero(); g.levels[n + 1].space.dim(q)];
                    for (i, f) in g.cofaces[n].iter().enumerate() {
                        let part = f.apply(q, basis_vec);
                        let sgn = if i % 2 != 0 { -Q::one() } else { Q::one() };
                        for (r, c) in part.into_iter().enumerate() {
                            img[r] = &img[r] + c * &sgn;
                        }
                    }
                    if img.iter().any(|x| !x.is_zero()) {
                        let (off, tsub) = target_offset(n + 1)
                            .expect("conormalization not preserved by delta");
                        let coords = tsub
                            .coords(&img)
                            .expect("delta image not conormalized");
                        for (r, c) in coords.into_iter().enumerate() {
                            blk[(off + r, col)] = c;
                        }
                    }
                }
                // internal part: (-1)^n d, stays in level n
                let dimg = g.levels[n].d.apply(q, basis_vec);
                if dimg.iter().any(|x| !x.is_zero()) {
                    let (off, tsub) =
                        target_offset(n).expect("conormalization not preserved by d");
                    let coords = tsub.coords(&dimg).expect("d image not conormalized");
                    let sgn = if n % 2 != 0 { -Q::one() } else { Q::one() };
                    for (r, c) in coords.into_iter().enumerate() {
                        blk[(off + r, col)] = &blk[(off + r, col)] + c * &sgn;
                    }
                }
            }
            col_off += sub.dim();
        }
        d.set_block(k, blk);
    }
    TotalS { complex: Complex { space, d }, pieces }
}

/// Projection of a level-n element onto the conormalized subspace along the
/// span of the coface images (the degenerate part).
fn normalize_component(g: &CosimplicialCdga, norm: &[BTreeMap<i64, Subspace>], n: usize, q: i64, v: &[Q]) -> Vec<Q> {
    let dim = g.levels[n].space.dim(q);
    if n == 0 {
        return v.to_vec();
    }
    let sub = &norm[n][&q];
    // degenerate part: sum of images of the cofaces from level n-1
    let mut degen_cols: Vec<Vec<Q>> = Vec::new();
    for f in &g.cofaces[n - 1] {
        let b = f.block(q);
        for j in 0..b.cols {
            degen_cols.push(b.col(j));
        }
    }
    let degen = Subspace::span(dim, &degen_cols);
    // solve v = n_part + d_part over the concatenated basis
    let mat = sub.basis.hstack(&degen.basis);
    let sol = mat.solve(v).expect("level does not split as N + degenerate");
    let mut out = vec![Q::zero(); dim];
    for (j, c) in sol.iter().take(sub.dim()).enumerate() {
        for (r, b) in sub.basis.col(j).iter().enumerate() {
            out[r] = &out[r] + b * c;
        }
    }
    out
}

/// Alexander-Whitney cup product on the conormalized total complex: for
/// components x at (p, q1) and y at (r, q2),
/// x . y = (-1)^{q1 r} (back-face embedding of x) * (front-face embedding of y)
/// at level p + r, followed by the normalization projection.
pub fn aw_cup(g: &CosimplicialCdga, s: &TotalS, k1: i64, v1: &[Q], k2: i64, v2: &[Q]) -> Vec<Q> {
    let m = g.m();
    let norm = conormalized_pieces(g);
    let k = k1 + k2;
    let out_pieces = s.pieces.get(&k).map(|p| p.as_slice()).unwrap_or(&[]);
    let total: usize = out_pieces.iter().map(|(_, sb)| sb.dim()).sum();
    let mut out = vec![Q::zero(); total];
    for (p, _) in s.pieces.get(&k1).map(|x| x.as_slice()).unwrap_or(&[]) {
        let p = *p;
        let x = s.component(k1, p, v1);
        if x.iter().all(|c| c.is_zero()) {
            continue;
        }
        for (r, _) in s.pieces.get(&k2).map(|x| x.as_slice()).unwrap_or(&[]) {
            let r = *r;
            if p + r > m {
                continue;
            }
            let y = s.component(k2, r, v2);
            if y.iter().all(|c| c.is_zero()) {
                continue;
            }
            let q1 = k1 - p as i64;
            let q2 = k2 - r as i64;
            // back-face embedding of x: apply the last coface r times
            let mut xb = x.clone();
            for lev in p..p + r {
                xb = g.cofaces[lev][lev + 1].apply(q1, &xb);
            }
            // front-face embedding of y: apply delta^0 p times
            let mut yf = y.clone();
            for lev in r..r + p {
                yf = g.cofaces[lev][0].apply(q2, &yf);
            }
            let prod = g.levels[p + r].mul_elem(q1, &xb, q2, &yf);
            if prod.iter().all(|c| c.is_zero()) {
                continue;
            }
            let sgn = if (q1 * r as i64) % 2 != 0 { -Q::one() } else { Q::one() };
            let normed = normalize_component(g, &norm, p + r, q1 + q2, &prod);
            if normed.iter().all(|c| c.is_zero()) {
                continue;
            }
            let inj = s.inject(k, p + r, &normed);
            for (i, c) in inj.into_iter().enumerate() {
                out[i] = &out[i] + c * &sgn;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Acyclicity model: s of the simplicial forms E
// ---------------------------------------------------------------------------

/// Normalized total complex of the simplicial CDGA n -> E_n^{<=D}, truncated
/// at simplicial level n_max: bidegree (n, q) contributes in total degree
/// q - n; the normalization quotients by the degenerate part (sum of the
/// images of the degeneracy maps); the differential is the alternating face
/// sum plus (-1)^n d. Expected cohomology: Q in degree 0.
pub fn s_of_e(n_max: usize, dmax: i64) -> Complex {
    let levels: Vec<SimplexForms> = (0..=n_max).map(|n| simplex_forms(n, dmax)).collect();
    // faces[n][i]: E_n -> E_{n-1}; degens[n][i]: E_n -> E_{n+1}
    let mut faces: Vec<Vec<GradedMap>> = vec![vec![]];
    for n in 1..=n_max {
        faces.push((0..=n).map(|i| face_map(&levels[n], &levels[n - 1], i)).collect());
    }
    let mut degens: Vec<Vec<GradedMap>> = Vec::new();
    for n in 0..n_max {
        degens.push((0..=n).map(|i| degeneracy_map(&levels[n], &levels[n + 1], i)).collect());
    }
    // quotient by degenerate part; per (n, q) keep the projection and a lift
    struct NQ {
        proj: Mat,
        reps: Vec<Vec<Q>>,
    }
    let mut pieces: BTreeMap<(usize, i64), NQ> = BTreeMap::new();
    for (n, e) in levels.iter().enumerate() {
        for &q in e.space.basis.keys() {
            let dim = e.dim(q);
            let mut degen_cols: Vec<Vec<Q>> = Vec::new();
            if n >= 1 {
                for sdeg in &degens[n - 1] {
                    let b = sdeg.block(q);
                    for j in 0..b.cols {
                        degen_cols.push(b.col(j));
                    }
                }
            }
            let dsub = Subspace::span(dim, &degen_cols);
            let (proj, reps) = dsub.quotient_projection();
            if !reps.is_empty() {
                pieces.insert((n, q), NQ { proj, reps });
            }
        }
    }
    // assemble by total degree
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut order: BTreeMap<i64, Vec<(usize, i64)>> = BTreeMap::new();
    for (&(n, q), nq) in &pieces {
        let k = q - n as i64;
        for j in 0..nq.reps.len() {
            labels.entry(k).or_default().push(format!("E{n}q{q}#{j}"));
        }
        order.entry(k).or_default().push((n, q));
    }
    let space = GradedSpace { basis: labels };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    let offset_of = |order_k: &[(usize, i64)], pieces: &BTreeMap<(usize, i64), NQ>, n: usize, q: i64| -> Option<usize> {
        let mut off = 0usize;
        for &(nn, qq) in order_k {
            if nn == n && qq == q {
                return Some(off);
            }
            off += pieces[&(nn, qq)].reps.len();
        }
        None
    };
    for (&k, order_k) in &order {
        let rows = space.dim(k + 1);
        let cols = space.dim(k);
        let mut blk = Mat::zero(rows, cols);
        let empty = Vec::new();
        let order_next = order.get(&(k + 1)).unwrap_or(&empty);
        let mut col_off = 0usize;
        for &(n, q) in order_k {
            let nq = &pieces[&(n, q)];
            for (j, rep) in nq.reps.iter().enumerate() {
                let col = col_off + j;
                // face part: sum (-1)^i face_i, lands at (n-1, q), total k+1? no:
                // (n-1, q) has total degree q - n + 1 = k + 1. Correct target.
                if n >= 1 {
                    let mut img = vec![Q::zero(); levels[n - 1].dim(q)];
                    for (i, f) in faces[n].iter().enumerate() {
                        let part = f.apply(q, rep);
                        let sgn = if i % 2 != 0 { -Q::one() } else { Q::one() };
                        for (r, c) in part.into_iter().enumerate() {
                            img[r] = &img[r] + c * &sgn;
                        }
                    }
                    if let Some(tnq) = pieces.get(&(n - 1, q)) {
                        let proj = tnq.proj.mul_vec(&img);
                        if let Some(off) = offset_of(order_next, &pieces, n - 1, q) {
                            for (r, c) in proj.into_iter().enumerate() {
                                blk[(off + r, col)] = &blk[(off + r, col)] + c;
                            }
                        }
                    }
                }
                // internal part: (-1)^n d at (n, q+1), total degree k+1
                let dimg = levels[n].d_map().apply(q, rep);
                if let Some(tnq) = pieces.get(&(n, q + 1)) {
                    let proj = tnq.proj.mul_vec(&dimg);
                    let sgn = if n % 2 != 0 { -Q::one() } else { Q::one() };
                    if let Some(off) = offset_of(order_next, &pieces, n, q + 1) {
                        for (r, c) in proj.into_iter().enumerate() {
                            blk[(off + r, col)] = &blk[(off + r, col)] + c * &sgn;
                        }
                    }
                }
            }
            col_off += nq.reps.len();
        }
        d.set_block(k, blk);
    }
    Complex { space, d }
}

// ---------------------------------------------------------------------------
// The Thom-Whitney end s_TW
// ---------------------------------------------------------------------------

/// The Thom-Whitney algebra of a (truncated) cosimplicial CDGA, computed as
/// the end of E^{<=D} (x) G over the full truncated simplex category: tuples
/// (x_n in E_n (x) G^n) with (face_i (x) 1) x_{n+1} = (1 (x) delta^i) x_n and
/// (degen_i (x) 1) x_n = (1 (x) sigma^i) x_{n+1}.
#[derive(Clone, Debug)]
pub struct TwResult {
    pub dmax: i64,
    /// the end with its abstract basis
    pub complex: Complex,
    /// per level: E_n (x) G^n
    pub tensors: Vec<TensorSpace>,
    pub forms: Vec<SimplexForms>,
    /// per total degree: the end as a subspace of the direct sum of the
    /// tensor levels (levels concatenated in order)
    pub kernels: BTreeMap<i64, Subspace>,
    /// per total degree: offset of each level's tensor block in the ambient
    pub offsets: BTreeMap<i64, Vec<usize>>,
    /// full CDGA structure on the end; None when some basis product
    /// overflows the form-degree budget
    pub algebra: Option<Cdga>,
    /// CDGA structure on H(end), computed on representatives
    pub h_algebra: Cdga,
    pub h: Cohomology,
}

impl TwResult {
    /// Ambient (direct-sum-of-tensor-levels) coordinates of an abstract end
    /// basis vector of the given total degree.
    pub fn ambient(&self, k: i64, v: &[Q]) -> Vec<Q> {
        let sub = &self.kernels[&k];
        let mut out = vec![Q::zero(); sub.ambient];
        for j in 0..sub.dim() {
            if v[j].is_zero() {
                continue;
            }
            for (r, c) in sub.basis.col(j).iter().enumerate() {
                out[r] = &out[r] + c * &v[j];
            }
        }
        out
    }

    /// Level-n tensor component of an abstract end vector.
    pub fn component(&self, k: i64, n: usize, v: &[Q]) -> Vec<Q> {
        let amb = self.ambient(k, v);
        let off = self.offsets[&k][n];
        let dim = self.tensors[n].space.dim(k);
        amb[off..off + dim].to_vec()
    }
}

/// Coordinates in the tensor space of a pure tensor ve (x) va.
fn tensor_pure(t: &TensorSpace, de: i64, ve: &[Q], da: i64, va: &[Q]) -> Vec<Q> {
    let k = de + da;
    let mut out = vec![Q::zero(); t.space.dim(k)];
    for (ie, ce) in ve.iter().enumerate() {
        if ce.is_zero() {
            continue;
        }
        for (ia, ca) in va.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            if let Some(idx) = t.try_pair_index(de, ie, da, ia) {
                out[idx] = &out[idx] + ce * ca;
            }
        }
    }
    out
}

/// Product in E_n (x) G^n with the Koszul sign (-1)^{|a| |e'|}; errors on
/// form-weight overflow.
fn tensor_mul(
    forms: &SimplexForms,
    alg: &Cdga,
    t: &TensorSpace,
    k1: i64,
    v1: &[Q],
    k2: i64,
    v2: &[Q],
) -> Result<Vec<Q>, CosimpError> {
    let mut out = vec![Q::zero(); t.space.dim(k1 + k2)];
    let pairs1 = t.pairs.get(&k1).cloned().unwrap_or_default();
    let pairs2 = t.pairs.get(&k2).cloned().unwrap_or_default();
    for (i1, &(de1, ie1, da1, ia1)) in pairs1.iter().enumerate() {
        if v1[i1].is_zero() {
            continue;
        }
        for (i2, &(de2, ie2, da2, ia2)) in pairs2.iter().enumerate() {
            if v2[i2].is_zero() {
                continue;
            }
            let eprod = forms.mul_basis(de1, ie1, de2, ie2)?;
            if eprod.is_empty() {
                continue;
            }
            let aprod = alg.mul_basis(da1, ia1, da2, ia2);
            if aprod.is_empty() {
                continue;
            }
            let koszul = if (da1 * de2) % 2 != 0 { -Q::one() } else { Q::one() };
            let c = &v1[i1] * &v2[i2] * koszul;
            for &(je, ref se) in &eprod {
                for &(ja, ref sa) in &aprod {
                    if let Some(idx) = t.try_pair_index(de1 + de2, je, da1 + da2, ja) {
                        out[idx] = &out[idx] + &c * se * sa;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Compute the Thom-Whitney end of `g` against forms truncated at weight
/// `dmax`.
pub fn thom_whitney(g: &CosimplicialCdga, dmax: i64) -> Result<TwResult, CosimpError> {
    let m = g.m();
    let forms: Vec<SimplexForms> = (0..=m).map(|n| simplex_forms(n, dmax)).collect();
    let tensors: Vec<TensorSpace> =
        (0..=m).map(|n| tensor(&forms[n].space, &g.levels[n].space)).collect();
    // ambient degrees
    let mut degrees: Vec<i64> = tensors
        .iter()
        .flat_map(|t| t.space.degrees())
        .collect();
    degrees.sort();
    degrees.dedup();
    let mut offsets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &k in &degrees {
        let mut offs = Vec::new();
        let mut off = 0usize;
        for t in &tensors {
            offs.push(off);
            off += t.space.dim(k);
        }
        offsets.insert(k, offs);
    }
    let ambient_dim =
        |k: i64| -> usize { tensors.iter().map(|t| t.space.dim(k)).sum() };
    // structure maps on forms
    let faces_e: Vec<Vec<GradedMap>> = (0..m)
        .map(|n| (0..=n + 1).map(|i| face_map(&forms[n + 1], &forms[n], i)).collect())
        .collect();
    let degens_e: Vec<Vec<GradedMap>> = (0..m)
        .map(|n| (0..=n).map(|i| degeneracy_map(&forms[n], &forms[n + 1], i)).collect())
        .collect();
    // per-level tensor differentials
    let tensor_d: Vec<GradedMap> = (0..=m)
        .map(|n| {
            let ide = GradedMap::identity(&forms[n].space);
            let ida = GradedMap::identity(&g.levels[n].space);
            let de = forms[n].d_map();
            tensor_map(&de, &ida, &tensors[n], &tensors[n])
                .add(&tensor_map(&ide, &g.levels[n].d, &tensors[n], &tensors[n]))
        })
        .collect();
    // end = kernel of the stacked compatibility constraints, per degree
    let mut kernels: BTreeMap<i64, Subspace> = BTreeMap::new();
    for &k in &degrees {
        let cols = ambient_dim(k);
        let mut rows: Vec<Mat> = Vec::new();
        for n in 0..m {
            let offs = &offsets[&k];
            // faces: (face_i (x) 1) x_{n+1} = (1 (x) delta^i) x_n
            for i in 0..=n + 1 {
                let ida = GradedMap::identity(&g.levels[n + 1].space);
                let mixed = tensor(&forms[n].space, &g.levels[n + 1].space);
                let lhs = tensor_map(&faces_e[n][i], &ida, &tensors[n + 1], &mixed);
                let ide = GradedMap::identity(&forms[n].space);
                let rhs = tensor_map(&ide, &g.cofaces[n][i], &tensors[n], &mixed);
                let lb = lhs.block(k);
                let rb = rhs.block(k);
                if lb.rows == 0 {
                    continue;
                }
                let mut row = Mat::zero(lb.rows, cols);
                for r in 0..lb.rows {
                    for c in 0..lb.cols {
                        row[(r, offs[n + 1] + c)] = lb[(r, c)].clone();
                    }
                    for c in 0..rb.cols {
                        row[(r, offs[n] + c)] = &row[(r, offs[n] + c)] - &rb[(r, c)];
                    }
                }
                rows.push(row);
            }
            // degeneracies: (degen_i (x) 1) x_n = (1 (x) sigma^i) x_{n+1}
            for i in 0..=n {
                let ida = GradedMap::identity(&g.levels[n].space);
                let mixed = tensor(&forms[n + 1].space, &g.levels[n].space);
                let lhs = tensor_map(&degens_e[n][i], &ida, &tensors[n], &mixed);
                let ide = GradedMap::identity(&forms[n + 1].space);
                let rhs = tensor_map(&ide, &g.codegens[n][i], &tensors[n + 1], &mixed);
                let lb = lhs.block(k);
                let rb = rhs.block(k);
                if lb.rows == 0 {
                    continue;
                }
                let mut row = Mat::zero(lb.rows, cols);
                for r in 0..lb.rows {
                    for c in 0..lb.cols {
                        row[(r, offs[n] + c)] = lb[(r, c)].clone();
                    }
                    for c in 0..rb.cols {
                        row[(r, offs[n + 1] + c)] = &row[(r, offs[n + 1] + c)] - &rb[(r, c)];
                    }
                }
                rows.push(row);
            }
        }
        let constraint = rows
            .into_iter()
            .fold(Mat::zero(0, cols), |acc, r| if acc.rows == 0 { r } else { acc.vstack(&r) });
        let kernel = if constraint.rows == 0 {
            Subspace::full(cols)
        } else {
            Subspace::span(cols, &constraint.kernel_basis())
        };
        if kernel.dim() > 0 {
            kernels.insert(k, kernel);
        }
    }
    // abstract end space and differential
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for (&k, sub) in &kernels {
        labels.insert(k, (0..sub.dim()).map(|j| format!("tw{k}#{j}")).collect());
    }
    let space = GradedSpace { basis: labels };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    let apply_ambient_d = |k: i64, amb: &[Q]| -> Vec<Q> {
        let mut out = vec![Q::zero(); ambient_dim(k + 1)];
        for n in 0..=m {
            let off = offsets[&k][n];
            let dim = tensors[n].space.dim(k);
            let part = tensor_d[n].apply(k, &amb[off..off + dim]);
            let toff = offsets[&(k + 1)][n];
            for (r, c) in part.into_iter().enumerate() {
                out[toff + r] = &out[toff + r] + c;
            }
        }
        out
    };
    for (&k, sub) in &kernels {
        let rows = space.dim(k + 1);
        let mut blk = Mat::zero(rows, sub.dim());
        for j in 0..sub.dim() {
            let img = apply_ambient_d(k, &sub.basis.col(j));
            if img.iter().all(|x| x.is_zero()) {
                continue;
            }
            let tsub = kernels.get(&(k + 1)).expect("d leaves the end");
            let coords = tsub.coords(&img).expect("d image not in the end");
            for (r, c) in coords.into_iter().enumerate() {
                blk[(r, j)] = c;
            }
        }
        d.set_block(k, blk);
    }
    let complex = Complex { space: space.clone(), d };
    // unit: (1_E (x) 1_A)_n
    let unit_ambient: Vec<Q> = {
        let mut out = vec![Q::zero(); ambient_dim(0)];
        for n in 0..=m {
            let comp = tensor_pure(&tensors[n], 0, &forms[n].one(), 0, &g.levels[n].unit);
            let off = offsets[&0][n];
            for (r, c) in comp.into_iter().enumerate() {
                out[off + r] = c;
            }
        }
        out
    };
    let unit = kernels
        .get(&0)
        .and_then(|sub| sub.coords(&unit_ambient))
        .ok_or_else(|| CosimpError::Other("unit is not an end element".into()))?;
    // componentwise product of two ambient vectors
    let ambient_mul = |k1: i64, a1: &[Q], k2: i64, a2: &[Q]| -> Result<Vec<Q>, CosimpError> {
        let mut out = vec![Q::zero(); ambient_dim(k1 + k2)];
        for n in 0..=m {
            let o1 = offsets[&k1][n];
            let d1 = tensors[n].space.dim(k1);
            let o2 = offsets[&k2][n];
            let d2 = tensors[n].space.dim(k2);
            let prod = tensor_mul(
                &forms[n],
                &g.levels[n],
                &tensors[n],
                k1,
                &a1[o1..o1 + d1],
                k2,
                &a2[o2..o2 + d2],
            )?;
            let to = offsets[&(k1 + k2)][n];
            for (r, c) in prod.into_iter().enumerate() {
                out[to + r] = &out[to + r] + c;
            }
        }
        Ok(out)
    };
    // full algebra on the end (None on overflow)
    let algebra: Option<Cdga> = (|| -> Result<Cdga, CosimpError> {
        let mut mult = MultTable::new();
        for &k1 in space.basis.keys() {
            for &k2 in space.basis.keys() {
                for j1 in 0..space.dim(k1) {
                    for j2 in 0..space.dim(k2) {
                        let a1 = kernels[&k1].basis.col(j1);
                        let a2 = kernels[&k2].basis.col(j2);
                        let prod = ambient_mul(k1, &a1, k2, &a2)?;
                        if prod.iter().all(|x| x.is_zero()) {
                            continue;
                        }
                        let sub = kernels
                            .get(&(k1 + k2))
                            .ok_or_else(|| CosimpError::Other("product leaves the end".into()))?;
                        let coords = sub
                            .coords(&prod)
                            .ok_or_else(|| CosimpError::Other("product not in the end".into()))?;
                        let terms: Vec<(usize, Q)> = coords
                            .into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .collect();
                        if !terms.is_empty() {
                            mult.insert((k1, j1, k2, j2), terms);
                        }
                    }
                }
            }
        }
        Ok(Cdga {
            space: space.clone(),
            d: complex.d.clone(),
            unit: unit.clone(),
            mult,
        })
    })()
    .ok();
    // cohomology and the algebra structure on it
    let h = cohomology(&complex).map_err(|e| CosimpError::Other(e.to_string()))?;
    let mut hmult = MultTable::new();
    for &k1 in h.space.basis.keys() {
        for &k2 in h.space.basis.keys() {
            for j1 in 0..h.space.dim(k1) {
                for j2 in 0..h.space.dim(k2) {
                    let r1 = h.rep_of(k1, &unit_vec(h.space.dim(k1), j1));
                    let r2 = h.rep_of(k2, &unit_vec(h.space.dim(k2), j2));
                    let a1 = TwAmb { kernels: &kernels }.lift(k1, &r1);
                    let a2 = TwAmb { kernels: &kernels }.lift(k2, &r2);
                    let prod = ambient_mul(k1, &a1, k2, &a2)?;
                    if prod.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    let sub = match kernels.get(&(k1 + k2)) {
                        Some(s) => s,
                        None => continue,
                    };
                    let coords = sub
                        .coords(&prod)
                        .ok_or_else(|| CosimpError::Other("H product not in the end".into()))?;
                    if let Some(cls) = h.class_of(k1 + k2, &coords) {
                        let terms: Vec<(usize, Q)> = cls
                            .into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .collect();
                        if !terms.is_empty() {
                            hmult.insert((k1, j1, k2, j2), terms);
                        }
                    }
                }
            }
        }
    }
    let hunit = h
        .class_of(0, &unit)
        .ok_or_else(|| CosimpError::Other("unit class missing".into()))?;
    let h_algebra = Cdga {
        space: h.space.clone(),
        d: GradedMap::zero(h.space.clone(), h.space.clone(), 1),
        unit: hunit,
        mult: hmult,
    };
    Ok(TwResult {
        dmax,
        complex,
        tensors,
        forms,
        kernels,
        offsets,
        algebra,
        h_algebra,
        h,
    })
}

struct TwAmb<'a> {
    kernels: &'a BTreeMap<i64, Subspace>,
}

impl TwAmb<'_> {
    fn lift(&self, k: i64, v: &[Q]) -> Vec<Q> {
        let sub = &self.kernels[&k];
        let mut out = vec![Q::zero(); sub.ambient];
        for j in 0..sub.dim() {
            if v[j].is_zero() {
                continue;
            }
            for (r, c) in sub.basis.col(j).iter().enumerate() {
                out[r] = &out[r] + c * &v[j];
            }
        }
        out
    }
}

/// The integration map I: s_TW -> s(G), fiberwise integration of the
/// top-form part of each level over the standard simplex, followed by the
/// conormalization projection. Standard simplex orientation; reversing it
/// flips the level-n component by (-1)^n. Verifies d . I = I . d.
pub fn integration(g: &CosimplicialCdga, tw: &TwResult, s: &TotalS) -> Result<GradedMap, CosimpError> {
    let m = g.m();
    let norm = conormalized_pieces(g);
    let mut imap = GradedMap::zero(tw.complex.space.clone(), s.complex.space.clone(), 0);
    for &k in tw.complex.space.basis.keys() {
        let rows = s.complex.space.dim(k);
        let cols = tw.complex.space.dim(k);
        let mut blk = Mat::zero(rows, cols);
        for j in 0..cols {
            let v = unit_vec(cols, j);
            for n in 0..=m {
                let comp = tw.component(k, n, &v);
                if comp.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let q = k - n as i64;
                let adim = g.levels[n].space.dim(q);
                if adim == 0 {
                    continue;
                }
                // extract the form-degree-n part and integrate
                let mut alg = vec![Q::zero(); adim];
                let pairs = tw.tensors[n].pairs.get(&k).cloned().unwrap_or_default();
                for (idx, &(de, ie, da, ia)) in pairs.iter().enumerate() {
                    if comp[idx].is_zero() || de != n as i64 || da != q {
                        continue;
                    }
                    let mut fv = vec![Q::zero(); tw.forms[n].dim(n as i64)];
                    fv[ie] = Q::one();
                    let val = integrate_top(&tw.forms[n], &fv);
                    if !val.is_zero() {
                        alg[ia] = &alg[ia] + &comp[idx] * val;
                    }
                }
                if alg.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let normed = normalize_component(g, &norm, n, q, &alg);
                if normed.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let inj = s.inject(k, n, &normed);
                for (r, c) in inj.into_iter().enumerate() {
                    blk[(r, j)] = &blk[(r, j)] + c;
                }
            }
        }
        blk_set(&mut imap, k, blk);
    }
    // chain map check
    for &k in tw.complex.space.basis.keys() {
        let lhs = s.complex.d.block(k).mul(&imap.block(k));
        let rhs = imap.block(k + 1).mul(&tw.complex.d.block(k));
        if lhs != rhs {
            return Err(CosimpError::IntegrationNotChain(k));
        }
    }
    Ok(imap)
}

fn blk_set(f: &mut GradedMap, k: i64, m: Mat) {
    f.set_block(k, m);
}

/// End element of a constant-style section: level-n component
/// 1_{E_n} (x) (delta^0-composite image of v). Errors when the tuple fails
/// the end constraints (non-augmented input).
pub fn constant_section(g: &CosimplicialCdga, tw: &TwResult, q: i64, v: &[Q]) -> Result<Vec<Q>, CosimpError> {
    let m = g.m();
    let mut amb = vec![Q::zero(); tw.kernels.get(&q).map(|s| s.ambient).unwrap_or(0)];
    if amb.is_empty() {
        return Err(CosimpError::Other("no end in this degree".into()));
    }
    let mut img = v.to_vec();
    for n in 0..=m {
        let comp = tensor_pure(&tw.tensors[n], 0, &tw.forms[n].one(), q, &img);
        let off = tw.offsets[&q][n];
        for (r, c) in comp.into_iter().enumerate() {
            amb[off + r] = c;
        }
        if n < m {
            img = g.cofaces[n][0].apply(q, &img);
        }
    }
    tw.kernels[&q]
        .coords(&amb)
        .ok_or_else(|| CosimpError::Other("section is not an end element".into()))
}

// ---------------------------------------------------------------------------
// Filtered Thom-Whitney
// ---------------------------------------------------------------------------

/// Transport a levelwise multiplicative filtration through the end: step w
/// of the end is the end intersected with E (x) F_w G^n in every level.
/// Requires every coface and codegeneracy to preserve the filtration.
pub fn thom_whitney_filtered(
    g: &CosimplicialCdga,
    filts: &[Filtration],
    dmax: i64,
) -> Result<(TwResult, Filtration), CosimpError> {
    let m = g.m();
    assert_eq!(filts.len(), m + 1);
    for (n, f) in filts.iter().enumerate() {
        f.validate().map_err(|e| CosimpError::Other(format!("level {n} filtration: {e}")))?;
    }
    let wmin = filts.iter().map(|f| f.wmin).min().unwrap();
    let wmax = filts.iter().map(|f| f.wmax).max().unwrap();
    // compatibility: structure maps preserve each step
    for n in 0..m {
        for w in wmin..=wmax {
            for &q in g.levels[n].space.basis.keys() {
                for (i, f) in g.cofaces[n].iter().enumerate() {
                    let img = filts[n].at(q, w).image_under(&f.block(q));
                    if !filts[n + 1].at(q, w).contains_subspace(&img) {
                        return Err(CosimpError::Other(format!(
                            "coface {i} at level {n} does not preserve filtration step {w}"
                        )));
                    }
                }
            }
            for &q in g.levels[n + 1].space.basis.keys() {
                for (i, s) in g.codegens[n].iter().enumerate() {
                    let img = filts[n + 1].at(q, w).image_under(&s.block(q));
                    if !filts[n].at(q, w).contains_subspace(&img) {
                        return Err(CosimpError::Other(format!(
                            "codegeneracy {i} at level {n} does not preserve filtration step {w}"
                        )));
                    }
                }
            }
        }
    }
    let tw = thom_whitney(g, dmax)?;
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    for (&k, sub) in &tw.kernels {
        let mut per_w = BTreeMap::new();
        for w in wmin..=wmax {
            // ambient subspace: per level, E (x) F_w
            let mut cols: Vec<Vec<Q>> = Vec::new();
            let amb_dim = sub.ambient;
            for n in 0..=m {
                let t = &tw.tensors[n];
                let off = tw.offsets[&k][n];
                // basis of E (x) F_w inside T_n^k: each E-basis vector
                // against each F_w basis vector
                for &q in g.levels[n].space.basis.keys() {
                    let de = k - q;
                    let edim = tw.forms[n].dim(de);
                    if edim == 0 {
                        continue;
                    }
                    let fw = filts[n].at(q, w);
                    for jf in 0..fw.dim() {
                        let va = fw.basis.col(jf);
                        for ie in 0..edim {
                            let mut ve = vec![Q::zero(); edim];
                            ve[ie] = Q::one();
                            let tv = tensor_pure(t, de, &ve, q, &va);
                            let mut col = vec![Q::zero(); amb_dim];
                            for (r, c) in tv.into_iter().enumerate() {
                                col[off + r] = c;
                            }
                            cols.push(col);
                        }
                    }
                }
            }
            let big = Subspace::span(sub.ambient, &cols);
            // intersect with the end and express in end coordinates
            let inter = sub_intersect_coords(sub, &big);
            per_w.insert(w, inter);
        }
        spans.insert(k, per_w);
    }
    let filtration = Filtration::from_spans(&tw.complex.space, wmin, wmax, spans);
    filtration
        .validate()
        .map_err(|e| CosimpError::Other(format!("end filtration: {e}")))?;
    Ok((tw, filtration))
}

/// Basis (in `sub` coordinates) of the intersection of `sub` with `other`.
fn sub_intersect_coords(sub: &Subspace, other: &Subspace) -> Vec<Vec<Q>> {
    let inter = sub.intersect(other);
    let mut out = Vec::new();
    for j in 0..inter.dim() {
        let v = inter.basis.col(j);
        out.push(sub.coords(&v).expect("intersection lies in sub"));
    }
    out
}

/// Filtration on the conormalized total complex s(G) induced the same way
/// (trivial filtration on the simplicial direction).
pub fn total_s_filtered(
    _g: &CosimplicialCdga,
    filts: &[Filtration],
    s: &TotalS,
) -> Filtration {
    let wmin = filts.iter().map(|f| f.wmin).min().unwrap();
    let wmax = filts.iter().map(|f| f.wmax).max().unwrap();
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    for (&k, pieces) in &s.pieces {
        let mut per_w = BTreeMap::new();
        for w in wmin..=wmax {
            let mut cols: Vec<Vec<Q>> = Vec::new();
            let total: usize = pieces.iter().map(|(_, sb)| sb.dim()).sum();
            let mut off = 0usize;
            for (n, sub) in pieces {
                let q = k - *n as i64;
                let fw = filts[*n].at(q, w);
                // conormalized vectors lying in F_w
                let inter = sub.intersect(&fw);
                for j in 0..inter.dim() {
                    let v = inter.basis.col(j);
                    let coords = sub.coords(&v).expect("in sub");
                    let mut col = vec![Q::zero(); total];
                    for (r, c) in coords.into_iter().enumerate() {
                        col[off + r] = c;
                    }
                    cols.push(col);
                }
                off += sub.dim();
            }
            per_w.insert(w, cols);
        }
        spans.insert(k, per_w);
    }
    Filtration::from_spans(&s.complex.space, wmin, wmax, spans)
}

// ---------------------------------------------------------------------------
// Double (iterated) Thom-Whitney
// ---------------------------------------------------------------------------

/// A cosimplicial object of cosimplicial CDGAs: outer level r carries the
/// inner cosimplicial CDGA rows[r]; the outer structure maps are given
/// levelwise on the inner levels.
#[derive(Clone, Debug)]
pub struct DoubleCosimplicial {
    pub rows: Vec<CosimplicialCdga>,
    /// outer_cofaces[r][i][inner_n]: rows[r].levels[inner_n] -> rows[r+1].levels[inner_n]
    pub outer_cofaces: Vec<Vec<Vec<GradedMap>>>,
    pub outer_codegens: Vec<Vec<Vec<GradedMap>>>,
}

/// Constant-in-the-outer-direction double object.
pub fn constant_double(inner: &CosimplicialCdga, outer_m: usize) -> DoubleCosimplicial {
    let ids: Vec<GradedMap> =
        inner.levels.iter().map(|a| GradedMap::identity(&a.space)).collect();
    DoubleCosimplicial {
        rows: vec![inner.clone(); outer_m + 1],
        outer_cofaces: (0..outer_m).map(|r| vec![ids.clone(); r + 2]).collect(),
        outer_codegens: (0..outer_m).map(|r| vec![ids.clone(); r + 1]).collect(),
    }
}

/// Apply thom_whitney in the inner direction, assemble the outer
/// cosimplicial CDGA of end algebras, and apply thom_whitney again.
/// Requires the inner ends to carry their full algebra structure.
pub fn double_tw(gg: &DoubleCosimplicial, dmax: i64) -> Result<TwResult, CosimpError> {
    let outer_m = gg.rows.len() - 1;
    let tws: Vec<TwResult> = gg
        .rows
        .iter()
        .map(|row| thom_whitney(row, dmax))
        .collect::<Result<Vec<_>, _>>()?;
    let mut levels = Vec::new();
    for (r, tw) in tws.iter().enumerate() {
        levels.push(tw.algebra.clone().ok_or_else(|| {
            CosimpError::Other(format!(
                "inner end at outer level {r} has no algebra within the budget"
            ))
        })?);
    }
    // induced maps on ends: componentwise 1_E (x) f_n
    let induce = |src_r: usize, tgt_r: usize, maps: &[GradedMap]| -> GradedMap {
        let src = &tws[src_r];
        let tgt = &tws[tgt_r];
        let inner_m = gg.rows[src_r].m();
        let mut f = GradedMap::zero(
            src.complex.space.clone(),
            tgt.complex.space.clone(),
            0,
        );
        for &k in src.complex.space.basis.keys() {
            let cols = src.complex.space.dim(k);
            let rows_ = tgt.complex.space.dim(k);
            let mut blk = Mat::zero(rows_, cols);
            for j in 0..cols {
                let v = unit_vec(cols, j);
                let mut amb = vec![Q::zero(); tgt.kernels.get(&k).map(|s| s.ambient).unwrap_or(0)];
                if amb.is_empty() {
                    continue;
                }
                for n in 0..=inner_m {
                    let comp = src.component(k, n, &v);
                    if comp.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    let ide = GradedMap::identity(&src.forms[n].space);
                    let tm = tensor_map(&ide, &maps[n], &src.tensors[n], &tgt.tensors[n]);
                    let img = tm.block(k).mul_vec(&comp);
                    let off = tgt.offsets[&k][n];
                    for (r, c) in img.into_iter().enumerate() {
                        amb[off + r] = &amb[off + r] + c;
                    }
                }
                let coords = tgt.kernels[&k]
                    .coords(&amb)
                    .expect("induced map leaves the end");
                for (r, c) in coords.into_iter().enumerate() {
                    blk[(r, j)] = c;
                }
            }
            f.set_block(k, blk);
        }
        f
    };
    let mut cofaces = Vec::new();
    let mut codegens = Vec::new();
    for r in 0..outer_m {
        cofaces.push(
            (0..=r + 1)
                .map(|i| induce(r, r + 1, &gg.outer_cofaces[r][i]))
                .collect::<Vec<_>>(),
        );
        codegens.push(
            (0..=r)
                .map(|i| induce(r + 1, r, &gg.outer_codegens[r][i]))
                .collect::<Vec<_>>(),
        );
    }
    let outer = CosimplicialCdga { levels, cofaces, codegens };
    thom_whitney(&outer, dmax)
}

/// Conormalized total complex of the double object: conormalize in both
/// cosimplicial directions; total degree r + n + q with differential
/// delta_outer + (-1)^r delta_inner + (-1)^{r+n} d.
pub fn total_s_double(gg: &DoubleCosimplicial) -> Complex {
    let outer_m = gg.rows.len() - 1;
    let inner_m = gg.rows[0].m();
    // per (r, n, q): conormalized subspace in both directions
    let mut pieces: BTreeMap<(usize, usize, i64), Subspace> = BTreeMap::new();
    for r in 0..=outer_m {
        let inner_norm = conormalized_pieces(&gg.rows[r]);
        for n in 0..=inner_m {
            for (&q, sub_in) in &inner_norm[n] {
                let dim = gg.rows[r].levels[n].space.dim(q);
                let mut sub = sub_in.clone();
                if r >= 1 {
                    for s in &gg.outer_codegens[r - 1] {
                        let ker = Subspace::span(dim, &s[n].block(q).kernel_basis());
                        sub = sub.intersect(&ker);
                    }
                }
                if sub.dim() > 0 {
                    pieces.insert((r, n, q), sub);
                }
            }
        }
    }
    let mut order: BTreeMap<i64, Vec<(usize, usize, i64)>> = BTreeMap::new();
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for (&(r, n, q), sub) in &pieces {
        let k = r as i64 + n as i64 + q;
        order.entry(k).or_default().push((r, n, q));
        for j in 0..sub.dim() {
            labels.entry(k).or_default().push(format!("r{r}n{n}q{q}#{j}"));
        }
    }
    let space = GradedSpace { basis: labels };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    let offset_of = |order_k: &[(usize, usize, i64)], key: (usize, usize, i64)| -> Option<usize> {
        let mut off = 0usize;
        for &kk in order_k {
            if kk == key {
                return Some(off);
            }
            off += pieces[&kk].dim();
        }
        None
    };
    let empty: Vec<(usize, usize, i64)> = Vec::new();
    for (&k, order_k) in &order {
        let rows_ = space.dim(k + 1);
        let cols = space.dim(k);
        let mut blk = Mat::zero(rows_, cols);
        let order_next = order.get(&(k + 1)).unwrap_or(&empty);
        let mut col_off = 0usize;
        for &(r, n, q) in order_k {
            let sub = &pieces[&(r, n, q)];
            for j in 0..sub.dim() {
                let v = sub.basis.col(j);
                let col = col_off + j;
                let mut add = |key: (usize, usize, i64), img: Vec<Q>, sgn: Q| {
                    if img.iter().all(|x| x.is_zero()) {
                        return;
                    }
                    let tsub = &pieces[&key];
                    let coords = tsub.coords(&img).expect("normalization preserved");
                    if let Some(off) = offset_of(order_next, key) {
                        for (rr, c) in coords.into_iter().enumerate() {
                            blk[(off + rr, col)] = &blk[(off + rr, col)] + c * &sgn;
                        }
                    }
                };
                // outer cosimplicial part
                if r < outer_m {
                    let mut img =
                        vec![Q::zero(); gg.rows[r + 1].levels[n].space.dim(q)];
                    for (i, f) in gg.outer_cofaces[r].iter().enumerate() {
                        let part = f[n].apply(q, &v);
                        let sgn = if i % 2 != 0 { -Q::one() } else { Q::one() };
                        for (rr, c) in part.into_iter().enumerate() {
                            img[rr] = &img[rr] + c * &sgn;
                        }
                    }
                    add((r + 1, n, q), img, Q::one());
                }
                // inner cosimplicial part, sign (-1)^r
                if n < inner_m {
                    let mut img =
                        vec![Q::zero(); gg.rows[r].levels[n + 1].space.dim(q)];
                    for (i, f) in gg.rows[r].cofaces[n].iter().enumerate() {
                        let part = f.apply(q, &v);
                        let sgn = if i % 2 != 0 { -Q::one() } else { Q::one() };
                        for (rr, c) in part.into_iter().enumerate() {
                            img[rr] = &img[rr] + c * &sgn;
                        }
                    }
                    let sgn = if r % 2 != 0 { -Q::one() } else { Q::one() };
                    add((r, n + 1, q), img, sgn);
                }
                // internal part, sign (-1)^{r+n}
                let dimg = gg.rows[r].levels[n].d.apply(q, &v);
                let sgn = if (r + n) % 2 != 0 { -Q::one() } else { Q::one() };
                add((r, n, q + 1), dimg, sgn);
            }
            col_off += sub.dim();
        }
        d.set_block(k, blk);
    }
    Complex { space, d }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_forms() {
        let e0 = simplex_forms(0, 3);
        assert_eq!(e0.dim(0), 1);
        assert_eq!(e0.space.degrees(), vec![0]);
    }

    #[test]
    fn interval_dims_match_spec() {
        // n = 1, D = 3: degree 0 dims 4 (1, t, t^2, t^3), degree 1 dims 3
        let e1 = simplex_forms(1, 3);
        assert_eq!(e1.dim(0), 4);
        assert_eq!(e1.dim(1), 3);
        let d = e1.d_map();
        // d(t) = dt
        let t_idx = e1.index[&0][&(vec![1], vec![])];
        let dt_idx = e1.index[&1][&(vec![0], vec![1])];
        let mut v = vec![Q::zero(); 4];
        v[t_idx] = Q::one();
        let dv = d.apply(0, &v);
        assert_eq!(dv[dt_idx], Q::one());
        // d^2 = 0
        Complex { space: e1.space.clone(), d }.check_d_square().unwrap();
    }

    #[test]
    fn triangle_d_square_and_products() {
        let e2 = simplex_forms(2, 4);
        let d = e2.d_map();
        Complex { space: e2.space.clone(), d }.check_d_square().unwrap();
        // dt1 * dt2 = -(dt2 * dt1)
        let i1 = e2.index[&1][&(vec![0, 0], vec![1])];
        let i2 = e2.index[&1][&(vec![0, 0], vec![2])];
        let mut v1 = vec![Q::zero(); e2.dim(1)];
        v1[i1] = Q::one();
        let mut v2 = vec![Q::zero(); e2.dim(1)];
        v2[i2] = Q::one();
        let p12 = e2.mul(1, &v1, 1, &v2).unwrap();
        let p21 = e2.mul(1, &v2, 1, &v1).unwrap();
        let neg: Vec<Q> = p21.iter().map(|x| -x.clone()).collect();
        assert_eq!(p12, neg);
        assert!(p12.iter().any(|x| !x.is_zero()));
        // overflow is an error: t^3 (weight 3) * t^2 (weight 2) at D = 4
        let t3 = e2.index[&0][&(vec![3, 0], vec![])];
        let t2 = e2.index[&0][&(vec![2, 0], vec![])];
        let mut a = vec![Q::zero(); e2.dim(0)];
        a[t3] = Q::one();
        let mut b = vec![Q::zero(); e2.dim(0)];
        b[t2] = Q::one();
        assert!(matches!(e2.mul(0, &a, 0, &b), Err(CosimpError::Overflow(3, 2, 4))));
    }

    #[test]
    fn simplicial_identities_on_forms() {
        // d_i d_j = d_{j} d_{i+1}-type identities checked as matrices for E_2 -> E_0:
        // classical: d_i . d_j = d_{j-1} . d_i for i < j (restriction composition)
        let e2 = simplex_forms(2, 3);
        let e1 = simplex_forms(1, 3);
        let e0 = simplex_forms(0, 3);
        for i in 0..=1usize {
            for j in (i + 1)..=2usize {
                let a = face_map(&e1, &e0, i).compose(&face_map(&e2, &e1, j));
                let b = face_map(&e1, &e0, j - 1).compose(&face_map(&e2, &e1, i));
                for &k in e2.basis.keys() {
                    assert_eq!(a.block(k).mul(&Mat::identity(e2.dim(k))), b.block(k).mul(&Mat::identity(e2.dim(k))), "face identity fails at i={i}, j={j}");
                }
            }
        }
        // degeneracy-face: d_i . s_i = id on E_1
        for i in 0..=1usize {
            let si = degeneracy_map(&e1, &e2, i);
            let di = face_map(&e2, &e1, i);
            let comp = di.compose(&si);
            for &k in e1.basis.keys() {
                assert_eq!(comp.block(k), Mat::identity(e1.dim(k)), "d_{i} s_{i} != id at degree {k}");
            }
        }
        // faces and degeneracies are chain maps
        let d2 = e2.d_map();
        let d1 = e1.d_map();
        for i in 0..=2usize {
            let f = face_map(&e2, &e1, i);
            for &k in e2.basis.keys() {
                let lhs = d1.block(k).mul(&f.block(k));
                let rhs = f.block(k + 1).mul(&d2.block(k));
                assert_eq!(lhs, rhs, "face {i} not a chain map at degree {k}");
            }
        }
        for i in 0..=1usize {
            let s = degeneracy_map(&e1, &e2, i);
            for &k in e1.basis.keys() {
                let lhs = d2.block(k).mul(&s.block(k));
                let rhs = s.block(k + 1).mul(&d1.block(k));
                assert_eq!(lhs, rhs, "degeneracy {i} not a chain map at degree {k}");
            }
        }
    }

    #[test]
    fn dirichlet_integrals() {
        let e1 = simplex_forms(1, 3);
        // int_0^1 t^2 dt = 1/3
        let idx = e1.index[&1][&(vec![2], vec![1])];
        let mut v = vec![Q::zero(); e1.dim(1)];
        v[idx] = Q::one();
        assert_eq!(integrate_top(&e1, &v), qi(1) / qi(3));
        // int over Delta_2 of dt1 dt2 = 1/2
        let e2 = simplex_forms(2, 3);
        let idx2 = e2.index[&2][&(vec![0, 0], vec![1, 2])];
        let mut w = vec![Q::zero(); e2.dim(2)];
        w[idx2] = Q::one();
        assert_eq!(integrate_top(&e2, &w), qi(1) / qi(2));
    }

    #[test]
    fn whitney_projection_identity() {
        for n in 1..=2usize {
            let wm = whitney_model(n, n as i64 + 2);
            for k in 0..=n {
                let k = k as i64;
                let pi = wm.projection[&k].mul(&wm.inclusion[&k]);
                assert_eq!(pi, Mat::identity(wm.tuples[&k].len()), "R . incl != id at n={n}, k={k}");
            }
            // R is a chain map
            let d = wm.forms.d_map();
            for k in 0..n as i64 {
                // W differential in W coordinates: R d incl
                let dw = wm.projection[&(k + 1)].mul(&d.block(k)).mul(&wm.inclusion[&k]);
                let lhs = wm.projection[&(k + 1)].mul(&d.block(k));
                let rhs = dw.mul(&wm.projection[&k]);
                assert_eq!(lhs, rhs, "R not a chain map at n={n}, k={k}");
            }
        }
    }
}
