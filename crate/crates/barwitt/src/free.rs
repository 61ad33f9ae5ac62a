//! Free graded-commutative algebras on generators of positive degree, modulo
//! a homogeneous ideal, truncated above a top degree, with a differential
//! specified on generators and extended by the Leibniz rule.

use crate::cdga::{Cdga, CdgaError, MultTable};
use crate::gla::{GradedMap, GradedSpace};
use crate::matrix::{qi, Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;

/// Monomial in the generators: sorted list of (generator index, exponent),
/// exponents >= 1. The empty monomial is 1.
pub type Monomial = Vec<(usize, u32)>;

/// Linear combination of monomials.
pub type Element = BTreeMap<Monomial, Q>;

#[derive(Clone, Debug)]
pub struct FreeModel {
    pub gens: Vec<(String, i64)>,
    /// differential of each generator
    pub d_gens: Vec<Element>,
    pub relations: Vec<Element>,
    pub top: i64,
}

impl FreeModel {
    pub fn new(gens: Vec<(String, i64)>, top: i64) -> Self {
        let n = gens.len();
        FreeModel { gens, d_gens: vec![Element::new(); n], relations: Vec::new(), top }
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|(g, _)| g == name)
    }

    fn mono_degree(&self, m: &Monomial) -> i64 {
        m.iter().map(|&(g, e)| self.gens[g].1 * e as i64).sum()
    }

    fn is_odd(&self, g: usize) -> bool {
        self.gens[g].1 % 2 != 0
    }

    /// Product of two monomials with the Koszul sign; None if it vanishes
    /// (repeated odd generator).
    fn mono_mul(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, Q)> {
        // sign: count odd-odd pairs (x in a, y in b) with idx(y) < idx(x)
        let mut swaps = 0i64;
        for &(ga, _) in a {
            if !self.is_odd(ga) {
                continue;
            }
            for &(gb, _) in b {
                if self.is_odd(gb) && gb < ga {
                    swaps += 1;
                }
            }
        }
        let mut out: BTreeMap<usize, u32> = BTreeMap::new();
        for &(g, e) in a.iter().chain(b.iter()) {
            *out.entry(g).or_insert(0) += e;
        }
        for (&g, &e) in &out {
            if self.is_odd(g) && e > 1 {
                return None;
            }
        }
        let m: Monomial = out.into_iter().collect();
        let sign = if swaps % 2 != 0 { -Q::one() } else { Q::one() };
        Some((m, sign))
    }

    pub fn elem_mul(&self, a: &Element, b: &Element) -> Element {
        let mut out = Element::new();
        for (ma, ca) in a {
            for (mb, cb) in b {
                if let Some((m, s)) = self.mono_mul(ma, mb) {
                    if self.mono_degree(&m) > self.top {
                        continue;
                    }
                    let v = out.entry(m).or_insert_with(Q::zero);
                    *v += ca * cb * s;
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Leibniz differential of a monomial.
    fn mono_d(&self, m: &Monomial) -> Element {
        let mut out = Element::new();
        // write m = g_{i1}^{e1} ... in canonical order; differentiate each factor
        for (pos, &(g, e)) in m.iter().enumerate() {
            let dg = &self.d_gens[g];
            if dg.is_empty() {
                continue;
            }
            // prefix: generators before position pos, plus g^{e-1}
            let prefix_deg: i64 = m[..pos]
                .iter()
                .map(|&(h, f)| self.gens[h].1 * f as i64)
                .sum();
            // moving d past the prefix and past g^{j} for j occurrences before
            // the differentiated one. For even g all occurrences give the same
            // term with sign (-1)^{prefix}; coefficient e. For odd g, e = 1.
            let mut coeff = qi(e as i64);
            if prefix_deg % 2 != 0 {
                coeff = -coeff;
            }
            // even-g internal factors are even so no extra sign from g^{j}
            let mut prefix: Monomial = m[..pos].to_vec();
            if e > 1 {
                prefix.push((g, e - 1));
            }
            let suffix: Monomial = m[pos + 1..].to_vec();
            // term = coeff * prefix * dg * suffix
            let mut t = Element::new();
            t.insert(prefix, coeff);
            let t = self.elem_mul(&t, dg);
            let mut sfx = Element::new();
            sfx.insert(suffix, Q::one());
            let t = self.elem_mul(&t, &sfx);
            for (mm, cc) in t {
                let v = out.entry(mm).or_insert_with(Q::zero);
                *v += cc;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    pub fn elem_d(&self, a: &Element) -> Element {
        let mut out = Element::new();
        for (m, c) in a {
            for (mm, cc) in self.mono_d(m) {
                let v = out.entry(mm).or_insert_with(Q::zero);
                *v += c * cc;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    pub fn mono_label(&self, m: &Monomial) -> String {
        if m.is_empty() {
            return "1".into();
        }
        m.iter()
            .map(|&(g, e)| {
                if e == 1 {
                    self.gens[g].0.clone()
                } else {
                    format!("{}^{}", self.gens[g].0, e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// All monomials of each degree 0..=top.
    fn monomials(&self) -> BTreeMap<i64, Vec<Monomial>> {
        let mut by_deg: BTreeMap<i64, Vec<Monomial>> = BTreeMap::new();
        let mut acc: Vec<Monomial> = vec![vec![]];
        for (g, &(_, deg)) in self.gens.iter().enumerate() {
            assert!(deg >= 1, "free model generators must have positive degree");
            let mut next = Vec::new();
            for m in &acc {
                let base: i64 = self.mono_degree(m);
                let max_e = if self.is_odd(g) {
                    1
                } else {
                    ((self.top - base) / deg).max(0) as u32
                };
                for e in 0..=max_e {
                    if base + deg * e as i64 > self.top {
                        break;
                    }
                    let mut mm = m.clone();
                    if e > 0 {
                        mm.push((g, e));
                    }
                    next.push(mm);
                }
            }
            acc = next;
        }
        for m in acc {
            let d = self.mono_degree(&m);
            if d <= self.top {
                by_deg.entry(d).or_default().push(m);
            }
        }
        for v in by_deg.values_mut() {
            v.sort();
        }
        by_deg
    }

    /// Build the quotient CDGA (free algebra modulo relations, truncated).
    pub fn build(&self) -> Result<Cdga, CdgaError> {
        let monos = self.monomials();
        let index: BTreeMap<i64, BTreeMap<Monomial, usize>> = monos
            .iter()
            .map(|(&d, ms)| {
                (d, ms.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect())
            })
            .collect();
        let free_dim = |d: i64| monos.get(&d).map_or(0, |v| v.len());
        let to_vec = |e: &Element, d: i64| -> Vec<Q> {
            let mut v = vec![Q::zero(); free_dim(d)];
            for (m, c) in e {
                if self.mono_degree(m) == d {
                    if let Some(&i) = index.get(&d).and_then(|ix| ix.get(m)) {
                        v[i] = c.clone();
                    }
                }
            }
            v
        };

        // relations must be homogeneous
        for r in &self.relations {
            let degs: Vec<i64> = r.keys().map(|m| self.mono_degree(m)).collect();
            if degs.windows(2).any(|w| w[0] != w[1]) {
                return Err(CdgaError::Other("relation is not homogeneous".into()));
            }
        }

        // ideal spanned by m * r over all monomials m and relations r
        let mut ideal: BTreeMap<i64, Vec<Vec<Q>>> = BTreeMap::new();
        for r in &self.relations {
            let rdeg = match r.keys().next() {
                Some(m) => self.mono_degree(m),
                None => continue,
            };
            for (&mdeg, ms) in &monos {
                let tdeg = mdeg + rdeg;
                if tdeg > self.top {
                    continue;
                }
                for m in ms {
                    let mut e = Element::new();
                    e.insert(m.clone(), Q::one());
                    let prod = self.elem_mul(&e, r);
                    ideal.entry(tdeg).or_default().push(to_vec(&prod, tdeg));
                }
            }
        }
        let ideal_sub: BTreeMap<i64, Subspace> = monos
            .keys()
            .map(|&d| {
                let vecs = ideal.get(&d).cloned().unwrap_or_default();
                (d, Subspace::span(free_dim(d), &vecs))
            })
            .collect();

        // d must preserve the ideal
        for (&d, sub) in &ideal_sub {
            for j in 0..sub.dim() {
                let col = sub.basis.col(j);
                let mut e = Element::new();
                for (m, c) in monos[&d].iter().zip(&col) {
                    if !c.is_zero() {
                        e.insert(m.clone(), c.clone());
                    }
                }
                let de = self.elem_d(&e);
                let dv = to_vec(&de, d + 1);
                if let Some(isub) = ideal_sub.get(&(d + 1)) {
                    if !isub.contains(&dv) {
                        return Err(CdgaError::IdealNotPreserved);
                    }
                } else if dv.iter().any(|x| !x.is_zero()) {
                    return Err(CdgaError::IdealNotPreserved);
                }
            }
        }

        // quotient basis: complement of the ideal; representatives are
        // preferred to be unit monomial vectors
        let mut q_reps: BTreeMap<i64, Vec<Vec<Q>>> = BTreeMap::new();
        let mut basis: BTreeMap<i64, Vec<String>> = BTreeMap::new();
        for (&d, ms) in &monos {
            let reps = Subspace::full(free_dim(d)).complement_of(&ideal_sub[&d]);
            if reps.is_empty() {
                continue;
            }
            let labels: Vec<String> = reps
                .iter()
                .map(|v| {
                    let nz: Vec<usize> = v
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(i, _)| i)
                        .collect();
                    if nz.len() == 1 && v[nz[0]] == Q::one() {
                        self.mono_label(&ms[nz[0]])
                    } else {
                        nz.iter()
                            .map(|&i| self.mono_label(&ms[i]))
                            .collect::<Vec<_>>()
                            .join("+")
                    }
                })
                .collect();
            q_reps.insert(d, reps);
            basis.insert(d, labels);
        }
        let space = GradedSpace { basis };

        // projection free^d -> quotient^d in the chosen basis
        let project = |d: i64, v: &[Q]| -> Vec<Q> {
            let qdim = space.dim(d);
            if qdim == 0 {
                return vec![];
            }
            let isub = &ideal_sub[&d];
            let reps = Mat::from_cols(free_dim(d), &q_reps[&d]);
            let stacked = isub.basis.hstack(&reps);
            let sol = stacked.solve(v).expect("ideal + reps span the free algebra");
            sol[isub.dim()..].to_vec()
        };

        // differential on the quotient
        let mut dmap = GradedMap::zero(space.clone(), space.clone(), 1);
        for &d in space.basis.keys() {
            let mut m = Mat::zero(space.dim(d + 1), space.dim(d));
            for (j, rep) in q_reps[&d].iter().enumerate() {
                let mut e = Element::new();
                for (mm, c) in monos[&d].iter().zip(rep) {
                    if !c.is_zero() {
                        e.insert(mm.clone(), c.clone());
                    }
                }
                let de = self.elem_d(&e);
                let dv = to_vec(&de, d + 1);
                if free_dim(d + 1) > 0 && space.dim(d + 1) > 0 {
                    for (i, c) in project(d + 1, &dv).into_iter().enumerate() {
                        m[(i, j)] = c;
                    }
                } else if dv.iter().any(|x| !x.is_zero()) && space.dim(d + 1) == 0 {
                    // differential lands entirely in the ideal: fine
                }
            }
            dmap.set_block(d, m);
        }

        // multiplication table
        let mut mult = MultTable::new();
        for &da in &space.degrees() {
            for &db in &space.degrees() {
                if da + db > self.top {
                    continue;
                }
                for (ia, ra) in q_reps[&da].iter().enumerate() {
                    for (ib, rb) in q_reps[&db].iter().enumerate() {
                        let mut ea = Element::new();
                        for (mm, c) in monos[&da].iter().zip(ra) {
                            if !c.is_zero() {
                                ea.insert(mm.clone(), c.clone());
                            }
                        }
                        let mut eb = Element::new();
                        for (mm, c) in monos[&db].iter().zip(rb) {
                            if !c.is_zero() {
                                eb.insert(mm.clone(), c.clone());
                            }
                        }
                        let prod = self.elem_mul(&ea, &eb);
                        let pv = to_vec(&prod, da + db);
                        if space.dim(da + db) == 0 {
                            continue;
                        }
                        let entry: Vec<(usize, Q)> = project(da + db, &pv)
                            .into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .collect();
                        if !entry.is_empty() {
                            mult.insert((da, ia, db, ib), entry);
                        }
                    }
                }
            }
        }

        // unit: class of the empty monomial
        let unit = if space.dim(0) > 0 {
            project(0, &to_vec(&Element::from([(vec![], Q::one())]), 0))
        } else {
            vec![]
        };
        let cdga = Cdga::new(space, dmap, unit, mult);
        cdga.validate()?;
        Ok(cdga)
    }
}

/// The exterior algebra Lambda(theta), |theta| = 1; returns the algebra and
/// the coordinates of theta in degree 1.
pub fn lambda_theta() -> (Cdga, Vec<Q>) {
    let model = FreeModel::new(vec![("theta".into(), 1)], 1);
    let a = model.build().expect("Lambda(theta) builds");
    let theta = vec![Q::one()];
    (a, theta)
}

/// Parse a polynomial in the generators, e.g. "3/2*x1*x2 - y^2 + theta*z".
/// Grammar: sum of terms; term = [coefficient *] factor (* factor)*;
/// factor = name [^ exponent]; coefficient = integer or integer/integer.
pub fn parse_poly(s: &str, model: &FreeModel) -> Result<Element, String> {
    let mut out = Element::new();
    let s = s.trim();
    if s.is_empty() || s == "0" {
        return Ok(out);
    }
    // split into signed terms at top level
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut first = true;
    for ch in s.chars() {
        match ch {
            '+' | '-' if !cur.trim().is_empty() || !first => {
                if !cur.trim().is_empty() {
                    terms.push((neg, cur.trim().to_string()));
                }
                cur = String::new();
                neg = ch == '-';
                first = false;
            }
            '-' => {
                neg = true;
                first = false;
            }
            _ => {
                cur.push(ch);
                first = false;
            }
        }
    }
    if !cur.trim().is_empty() {
        terms.push((neg, cur.trim().to_string()));
    }
    for (is_neg, term) in terms {
        let mut coeff = Q::one();
        let mut mono_elem = Element::from([(Monomial::new(), Q::one())]);
        for factor in term.split('*') {
            let f = factor.trim();
            if f.is_empty() {
                return Err(format!("empty factor in term '{term}'"));
            }
            if f.chars().next().unwrap().is_ascii_digit() {
                // numeric coefficient, possibly a fraction
                if let Some((n, d)) = f.split_once('/') {
                    let n: i64 = n.trim().parse().map_err(|_| format!("bad number '{f}'"))?;
                    let d: i64 = d.trim().parse().map_err(|_| format!("bad number '{f}'"))?;
                    coeff = coeff * qi(n) / qi(d);
                } else {
                    let n: i64 = f.parse().map_err(|_| format!("bad number '{f}'"))?;
                    coeff = coeff * qi(n);
                }
                continue;
            }
            let (name, exp) = match f.split_once('^') {
                Some((n, e)) => {
                    let e: u32 = e.trim().parse().map_err(|_| format!("bad exponent '{f}'"))?;
                    (n.trim(), e)
                }
                None => (f, 1),
            };
            let g = model
                .gen_index(name)
                .ok_or_else(|| format!("unknown generator '{name}'"))?;
            let mut pow = Element::from([(Monomial::new(), Q::one())]);
            let gelem = Element::from([(vec![(g, 1)], Q::one())]);
            for _ in 0..exp {
                pow = model.elem_mul(&pow, &gelem);
            }
            mono_elem = model.elem_mul(&mono_elem, &pow);
        }
        if is_neg {
            coeff = -coeff;
        }
        for (m, c) in mono_elem {
            let v = out.entry(m).or_insert_with(Q::zero);
            *v += &coeff * c;
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exterior_one_generator() {
        let a = FreeModel::new(vec![("e".into(), 1)], 3).build().unwrap();
        assert_eq!(a.space.dims(), [(0i64, 1usize), (1, 1)].into_iter().collect());
        a.validate().unwrap();
    }

    #[test]
    fn exterior_two_generators() {
        // Lambda(e1, e2): dims 1, 2, 1
        let a = FreeModel::new(vec![("e1".into(), 1), ("e2".into(), 1)], 4)
            .build()
            .unwrap();
        assert_eq!(
            a.space.dims(),
            [(0i64, 1usize), (1, 2), (2, 1)].into_iter().collect()
        );
        a.validate().unwrap();
        // e1 e2 = -e2 e1
        let p12 = a.mul_basis(1, 0, 1, 1);
        let p21 = a.mul_basis(1, 1, 1, 0);
        assert_eq!(p12.len(), 1);
        assert_eq!(p21.len(), 1);
        assert_eq!(p12[0].1, -p21[0].1.clone());
    }

    #[test]
    fn polynomial_truncated() {
        // Q[x], |x| = 2, truncated at degree 6: dims 1 in 0, 2, 4, 6
        let a = FreeModel::new(vec![("x".into(), 2)], 6).build().unwrap();
        assert_eq!(
            a.space.dims(),
            [(0i64, 1usize), (2, 1), (4, 1), (6, 1)].into_iter().collect()
        );
        a.validate().unwrap();
    }

    #[test]
    fn relations_quotient() {
        // Lambda(e1, e2) / (e1 e2): dims 1, 2
        let mut model = FreeModel::new(vec![("e1".into(), 1), ("e2".into(), 1)], 4);
        let rel = parse_poly("e1*e2", &model).unwrap();
        model.relations.push(rel);
        let a = model.build().unwrap();
        assert_eq!(a.space.dims(), [(0i64, 1usize), (1, 2)].into_iter().collect());
        a.validate().unwrap();
    }

    #[test]
    fn differential_leibniz_sign() {
        // d e = x (|e| = 1, |x| = 2), then d(e x) = x^2, d(x) = 0
        let mut model = FreeModel::new(vec![("e".into(), 1), ("x".into(), 2)], 5);
        model.d_gens[0] = parse_poly("x", &model).unwrap();
        let a = model.build().unwrap();
        a.validate().unwrap();
        // H should be Q in degree 0 only (contractible in range)
        let (h, _) = a.cohomology_algebra().unwrap();
        assert_eq!(h.space.dim(0), 1);
        assert_eq!(h.space.dim(1), 0);
        assert_eq!(h.space.dim(2), 0);
    }

    #[test]
    fn kummer_style_differential() {
        // gens theta, z odd deg 1? No: theta deg 1, y deg 1, z deg 1? Use
        // d y = z * theta with all of degree 1.
        let mut model =
            FreeModel::new(vec![("theta".into(), 1), ("y".into(), 1), ("z".into(), 1)], 3);
        model.d_gens[1] = parse_poly("z*theta", &model).unwrap();
        let a = model.build().unwrap();
        a.validate().unwrap();
        // d(y) = z*theta = -theta*z in the canonical order
        let dy = a.d.apply(1, &crate::cdga::unit_vec(3, model.gen_index("y").unwrap()));
        assert!(dy.iter().any(|c| !c.is_zero()));
    }

    #[test]
    fn parse_fractions_and_powers() {
        let model = FreeModel::new(vec![("x".into(), 2), ("y".into(), 2)], 8);
        let e = parse_poly("3/2*x^2 - y*x + 1/3*y^2", &model).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[&vec![(0usize, 2u32)]], qi(3) / qi(2));
        assert_eq!(e[&vec![(0, 1), (1, 1)]], qi(-1));
    }

    #[test]
    fn trivial_theta_extension_validates() {
        let base = FreeModel::new(vec![("e".into(), 1)], 2).build().unwrap();
        let ext = crate::cdga::ThetaExtension::trivial(&base);
        ext.validate().unwrap();
    }
}
