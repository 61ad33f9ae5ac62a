//! Filtered complexes and their spectral sequences, Weil-number purity
//! certification, convolution of filtrations, and mixed Frobenius
//! complexes/algebras.

use crate::cdga::{Augmentation, Cdga, Frobenius};
use crate::gla::{cohomology, tensor, tensor_map, Complex, GradedMap, GradedSpace, TensorSpace};
use crate::matrix::{Mat, Q, Subspace};
use num::complex::Complex64;
use num::{BigInt, One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum FiltError {
    #[error("filtration step {1} in degree {0} is not contained in step {2}")]
    NotNested(i64, i64, i64),
    #[error("filtration not exhaustive in degree {0}")]
    NotExhaustive(i64),
    #[error("d does not preserve filtration step {1} in degree {0}")]
    NotDStable(i64, i64),
    #[error("characteristic polynomial is not integral")]
    NonIntegralCharpoly,
    #[error("Frobenius is not bijective")]
    FrobeniusNotBijective,
    #[error("mismatched Frobenius parameters (p, d_exp)")]
    MismatchedParameters,
    #[error("{0}")]
    Other(String),
}

/// An increasing filtration on a graded space: per degree, subspaces
/// F_w for w in [wmin, wmax], with F_{wmin-1} = 0 and F_{wmax} = full.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub space: GradedSpace,
    pub wmin: i64,
    pub wmax: i64,
    /// steps[deg][w] for every nonempty degree and every w in [wmin, wmax]
    pub steps: BTreeMap<i64, BTreeMap<i64, Subspace>>,
}

impl Filtration {
    /// Everything sits in a single step at weight w0.
    pub fn trivial(space: &GradedSpace, w0: i64) -> Self {
        let mut steps = BTreeMap::new();
        for &deg in space.basis.keys() {
            let mut m = BTreeMap::new();
            m.insert(w0, Subspace::full(space.dim(deg)));
            steps.insert(deg, m);
        }
        Filtration { space: space.clone(), wmin: w0, wmax: w0, steps }
    }

    /// Build from (possibly sparse) spanning data; normalizes so every w in
    /// [wmin, wmax] is present and cumulative.
    pub fn from_spans(
        space: &GradedSpace,
        wmin: i64,
        wmax: i64,
        spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>>,
    ) -> Self {
        let mut steps = BTreeMap::new();
        for &deg in space.basis.keys() {
            let n = space.dim(deg);
            let mut acc = Subspace::zero(n);
            let mut m = BTreeMap::new();
            for w in wmin..=wmax {
                if let Some(vecs) = spans.get(&deg).and_then(|ws| ws.get(&w)) {
                    acc = acc.sum(&Subspace::span(n, vecs));
                }
                m.insert(w, acc.clone());
            }
            steps.insert(deg, m);
        }
        Filtration { space: space.clone(), wmin, wmax, steps }
    }

    pub fn at(&self, deg: i64, w: i64) -> Subspace {
        let n = self.space.dim(deg);
        if w < self.wmin {
            return Subspace::zero(n);
        }
        let w = w.min(self.wmax);
        self.steps
            .get(&deg)
            .and_then(|m| m.get(&w))
            .cloned()
            .unwrap_or_else(|| Subspace::zero(n))
    }

    pub fn validate(&self) -> Result<(), FiltError> {
        for &deg in self.space.basis.keys() {
            for w in self.wmin..self.wmax {
                if !self.at(deg, w + 1).contains_subspace(&self.at(deg, w)) {
                    return Err(FiltError::NotNested(deg, w, w + 1));
                }
            }
            if self.at(deg, self.wmax).dim() != self.space.dim(deg) {
                return Err(FiltError::NotExhaustive(deg));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> i64 {
        self.wmax - self.wmin
    }

    /// Graded piece dimensions per (degree, weight).
    pub fn gr_dims(&self) -> BTreeMap<(i64, i64), usize> {
        let mut out = BTreeMap::new();
        for &deg in self.space.basis.keys() {
            for w in self.wmin..=self.wmax {
                let d = self.at(deg, w).dim() - self.at(deg, w - 1).dim();
                if d > 0 {
                    out.insert((deg, w), d);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FilteredComplex {
    pub complex: Complex,
    pub filt: Filtration,
}

impl FilteredComplex {
    pub fn validate(&self) -> Result<(), FiltError> {
        self.filt.validate()?;
        self.complex
            .check_d_square()
            .map_err(|e| FiltError::Other(e.to_string()))?;
        for &deg in self.complex.space.basis.keys() {
            for w in self.filt.wmin..=self.filt.wmax {
                let img = self.filt.at(deg, w).image_under(&self.complex.d.block(deg));
                if !self.filt.at(deg + 1, w).contains_subspace(&img) {
                    return Err(FiltError::NotDStable(deg, w));
                }
            }
        }
        Ok(())
    }

    /// Z_r^{w,n} = { x in F_w C^n : dx in F_{w-r} C^{n+1} }; r < 0 gives F_w.
    fn z(&self, r: i64, w: i64, n: i64) -> Subspace {
        let fw = self.filt.at(n, w);
        if r < 0 {
            return fw;
        }
        if fw.dim() == 0 {
            return fw;
        }
        let d = self.complex.d.block(n);
        let dfw = d.mul(&fw.basis);
        let target = self.filt.at(n + 1, w - r);
        let pre = Subspace::preimage_under(&dfw, &target);
        // pre lives in coordinates of fw's basis; map back to ambient
        Subspace::from_cols(&fw.basis.mul(&pre.basis))
    }

    fn denominator(&self, r: i64, w: i64, n: i64) -> Subspace {
        // Z_{r-1}^{w-1,n} + d Z_{r-1}^{w+r-1,n-1}
        let a = self.z(r - 1, w - 1, n);
        let zb = self.z(r - 1, w + r - 1, n - 1);
        let db = zb.image_under(&self.complex.d.block(n - 1));
        a.sum(&db)
    }
}

/// One subquotient E_r^{w,n}: numerator z, denominator den (a subspace of z),
/// chosen representatives spanning a complement of den in z.
#[derive(Clone, Debug)]
pub struct Piece {
    pub z: Subspace,
    pub den: Subspace,
    pub reps: Vec<Vec<Q>>,
}

impl Piece {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Coordinates of the class of `v` (must lie in z) in the rep basis.
    pub fn class_of(&self, v: &[Q]) -> Option<Vec<Q>> {
        if self.reps.is_empty() {
            return if self.z.contains(v) { Some(vec![]) } else { None };
        }
        let reps = Mat::from_cols(self.z.ambient, &self.reps);
        let stacked = self.den.basis.hstack(&reps);
        let sol = stacked.solve(v)?;
        Some(sol[self.den.dim()..].to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct Page {
    pub r: i64,
    /// keyed by (w, n): filtration weight and total (cohomological) degree
    pub pieces: BTreeMap<(i64, i64), Piece>,
    /// d_r from (w, n) to (w - r, n + 1), in rep coordinates
    pub d: BTreeMap<(i64, i64), Mat>,
}

impl Page {
    pub fn dims(&self) -> BTreeMap<(i64, i64), usize> {
        self.pieces
            .iter()
            .filter(|(_, p)| p.dim() > 0)
            .map(|(&k, p)| (k, p.dim()))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralSequence {
    pub pages: Vec<Page>,
    /// stable page (r beyond filtration length + 2)
    pub e_inf: Page,
    /// graded dims of the filtration induced on cohomology, keyed by (w, n)
    pub gr_h: BTreeMap<(i64, i64), usize>,
}

/// The page at which every finite-length filtration provably stabilizes.
pub fn stable_page(f: &FilteredComplex) -> i64 {
    f.filt.length() + 2
}

fn build_page(f: &FilteredComplex, r: i64) -> Page {
    let mut pieces = BTreeMap::new();
    for &n in f.complex.space.basis.keys() {
        for w in f.filt.wmin..=f.filt.wmax {
            let z = f.z(r, w, n);
            let den_raw = f.denominator(r, w, n);
            // the denominator is contained in z for r >= 0; intersect to be
            // safe against degenerate edge indices
            let den = den_raw.intersect(&z);
            let reps = z.complement_of(&den);
            if !reps.is_empty() || z.dim() > 0 {
                pieces.insert((w, n), Piece { z, den, reps });
            }
        }
    }
    // induced differentials
    let mut d = BTreeMap::new();
    let keys: Vec<(i64, i64)> = pieces.keys().copied().collect();
    for &(w, n) in &keys {
        let src = &pieces[&(w, n)];
        if src.dim() == 0 {
            continue;
        }
        let tgt_dim = pieces.get(&(w - r, n + 1)).map_or(0, |p| p.dim());
        let mut m = Mat::zero(tgt_dim, src.dim());
        for (j, v) in src.reps.iter().enumerate() {
            let dv = f.complex.d.apply(n, v);
            if dv.iter().all(|x| x.is_zero()) {
                continue;
            }
            let tgt = pieces
                .get(&(w - r, n + 1))
                .expect("d_r image must land in a computed piece");
            let cls = tgt.class_of(&dv).expect("d_r(Z_r) lies in Z_r");
            for (i, c) in cls.into_iter().enumerate() {
                m[(i, j)] = c;
            }
        }
        d.insert((w, n), m);
    }
    Page { r, pieces, d }
}

/// Spectral sequence of an increasing filtration; d_r has bidegree
/// (w, n) -> (w - r, n + 1).
pub fn spectral_sequence(f: &FilteredComplex, r_max: i64) -> Result<SpectralSequence, FiltError> {
    f.validate()?;
    let pages: Vec<Page> = (0..=r_max).map(|r| build_page(f, r)).collect();
    let e_inf = build_page(f, stable_page(f).max(r_max + 1));
    // graded pieces of the induced filtration on H
    let mut gr_h = BTreeMap::new();
    for &n in f.complex.space.basis.keys() {
        let dmat = f.complex.d.block(n);
        let ker = Subspace::span(f.complex.space.dim(n), &dmat.kernel_basis());
        let img = Subspace::from_cols(&f.complex.d.block(n - 1));
        let mut prev = img.dim();
        for w in f.filt.wmin..=f.filt.wmax {
            let fw = f.filt.at(n, w);
            let cur = ker.intersect(&fw).sum(&img).dim();
            if cur > prev {
                gr_h.insert((w, n), cur - prev);
            }
            prev = cur;
        }
    }
    Ok(SpectralSequence { pages, e_inf, gr_h })
}

/// A finite-dimensional space with an invertible endomorphism F and Weil
/// parameters.
#[derive(Clone, Debug)]
pub struct FrobeniusModule {
    pub mat: Mat,
    pub p: u64,
    pub d_exp: u32,
}

impl FrobeniusModule {
    pub fn q(&self) -> u64 {
        self.p.pow(self.d_exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurityVerdict {
    Pure,
    Impure,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct PurityCertificate {
    pub verdict: PurityVerdict,
    pub weight: i64,
    /// integral characteristic polynomial of F^{d_exp}, low degree first
    pub charpoly: Vec<BigInt>,
    pub root_moduli: Vec<f64>,
    pub target_modulus: f64,
}

const PURITY_TOL: f64 = 1e-9;
const PURITY_REJECT: f64 = 1e-6;

/// Certify that all eigenvalues of F^{d_exp} are Weil numbers of weight i:
/// integral characteristic polynomial whose roots all have absolute value
/// q^{i/2}, checked numerically to 1e-9.
pub fn certify_purity(m: &FrobeniusModule, weight: i64) -> Result<PurityCertificate, FiltError> {
    let n = m.mat.rows;
    let target = (m.q() as f64).powf(weight as f64 / 2.0);
    if n == 0 {
        return Ok(PurityCertificate {
            verdict: PurityVerdict::Pure,
            weight,
            charpoly: vec![],
            root_moduli: vec![],
            target_modulus: target,
        });
    }
    let mut power = Mat::identity(n);
    for _ in 0..m.d_exp {
        power = power.mul(&m.mat);
    }
    let cp = power.charpoly();
    let mut icp = Vec::with_capacity(cp.len());
    for c in &cp {
        if !c.denom().is_one() && *c.denom() != -BigInt::one() {
            return Err(FiltError::NonIntegralCharpoly);
        }
        icp.push(c.to_integer());
    }
    if icp[0].is_zero() {
        return Err(FiltError::FrobeniusNotBijective);
    }
    // deflate to the squarefree part: Durand-Kerner loses accuracy at
    // multiple roots (error ~ eps^{1/multiplicity}), while the root set and
    // hence the purity verdict are unchanged
    let sf = squarefree_part(&icp);
    let roots = durand_kerner(&sf);
    let moduli: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
    let scale = target.max(1.0);
    let mut verdict = PurityVerdict::Pure;
    for &md in &moduli {
        let err = (md - target).abs();
        if err > PURITY_REJECT * scale {
            verdict = PurityVerdict::Impure;
            break;
        }
        if err > PURITY_TOL * scale {
            verdict = PurityVerdict::Inconclusive;
        }
    }
    Ok(PurityCertificate { verdict, weight, charpoly: icp, root_moduli: moduli, target_modulus: target })
}

/// The squarefree part f / gcd(f, f') of an integer polynomial (ascending
/// coefficients), returned with cleared denominators.
fn squarefree_part(f: &[BigInt]) -> Vec<BigInt> {
    let fr: Vec<Q> = f.iter().map(|c| Q::from_integer(c.clone())).collect();
    let df: Vec<Q> = fr
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * Q::from_integer(BigInt::from(k)))
        .collect();
    let g = poly_gcd(&fr, &df);
    let q = poly_div_exact(&fr, &g);
    // clear denominators
    let mut denom = BigInt::one();
    for c in &q {
        denom = num::integer::lcm(denom, c.denom().clone());
    }
    q.iter().map(|c| (c * Q::from_integer(denom.clone())).to_integer()).collect()
}

fn poly_trim(mut f: Vec<Q>) -> Vec<Q> {
    while f.len() > 1 && f.last().map_or(false, |c| c.is_zero()) {
        f.pop();
    }
    f
}

/// Remainder of polynomial division (ascending coefficients).
fn poly_rem(a: &[Q], b: &[Q]) -> Vec<Q> {
    let b = poly_trim(b.to_vec());
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        if r[dr].is_zero() {
            r.pop();
            continue;
        }
        let c = &r[dr] / &lead;
        for k in 0..=db {
            let idx = dr - db + k;
            r[idx] = &r[idx] - &(&c * &b[k]);
        }
        r.pop();
    }
    if r.is_empty() {
        return vec![Q::zero()];
    }
    poly_trim(r)
}

fn poly_gcd(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut x = poly_trim(a.to_vec());
    let mut y = poly_trim(b.to_vec());
    while !(y.len() == 1 && y[0].is_zero()) {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    // monic normalization
    let lead = x.last().unwrap().clone();
    if !lead.is_zero() {
        for c in &mut x {
            *c = &*c / &lead;
        }
    }
    x
}

/// Exact quotient a / b (ascending coefficients), assuming b divides a.
fn poly_div_exact(a: &[Q], b: &[Q]) -> Vec<Q> {
    let a = poly_trim(a.to_vec());
    let b = poly_trim(b.to_vec());
    let db = b.len() - 1;
    let mut r = a.clone();
    let mut q = vec![Q::zero(); a.len() - db];
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        if r[dr].is_zero() {
            r.pop();
            continue;
        }
        let c = &r[dr] / &lead;
        q[dr - db] = c.clone();
        for k in 0..=db {
            let idx = dr - db + k;
            r[idx] = &r[idx] - &(&c * &b[k]);
        }
        r.pop();
    }
    q
}

/// All complex roots of a monic-up-to-leading-coefficient integer polynomial
/// (low degree first) by Durand-Kerner iteration.
fn durand_kerner(coeffs: &[BigInt]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = big_to_f64(&coeffs[deg]);
    let c: Vec<f64> = coeffs.iter().map(|b| big_to_f64(b) / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..=deg).rev() {
            acc = acc * z + Complex64::new(c[k], 0.0);
        }
        acc
    };
    // initial guesses on a circle of radius based on the Cauchy bound
    let bound = 1.0 + c[..deg].iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) / seed.norm().powi(k as i32) * bound * 0.7)
        .collect();
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

fn big_to_f64(b: &BigInt) -> f64 {
    // num's conversion saturates rather than erroring; sizes here are tiny
    use num::ToPrimitive;
    b.to_f64().unwrap_or(if b.is_negative() { f64::MIN } else { f64::MAX })
}

/// A §6 triple: complex M, filtered complex N, quasi-isomorphism between
/// them, Frobenius structures on both.
#[derive(Clone, Debug)]
pub struct MixedFrobeniusComplex {
    pub m: Complex,
    pub m_frob: GradedMap,
    pub n: FilteredComplex,
    pub n_frob: GradedMap,
    /// quasi-isomorphism M -> N commuting with Frobenius
    pub qis: GradedMap,
    pub p: u64,
    pub d_exp: u32,
}

#[derive(Clone, Debug)]
pub struct MfcReport {
    pub qis_ok: bool,
    /// per (p, q) = (weight index, p + total degree): dim and purity verdict
    pub e1: BTreeMap<(i64, i64), (usize, PurityVerdict)>,
    pub degeneration_ok: bool,
    pub failures: Vec<String>,
}

impl MfcReport {
    pub fn passed(&self) -> bool {
        self.qis_ok
            && self.degeneration_ok
            && self.failures.is_empty()
            && self.e1.values().all(|(_, v)| *v == PurityVerdict::Pure)
    }
}

fn chain_map_ok(d_src: &GradedMap, d_tgt: &GradedMap, f: &GradedMap) -> bool {
    d_src
        .source
        .basis
        .keys()
        .all(|&deg| d_tgt.block(deg).mul(&f.block(deg)) == f.block(deg + 1).mul(&d_src.block(deg)))
}

/// Verify the mixed-Frobenius axioms: qis legs, E1 purity at weight q, and
/// degeneration (d_r = 0 for r >= 2).
pub fn check_mfc(mfc: &MixedFrobeniusComplex) -> Result<MfcReport, FiltError> {
    mfc.n.validate()?;
    mfc.m
        .check_d_square()
        .map_err(|e| FiltError::Other(e.to_string()))?;
    let mut failures = Vec::new();

    // structural legs
    if !chain_map_ok(&mfc.m.d, &mfc.m.d, &mfc.m_frob) {
        failures.push("Frobenius on M is not a chain map".into());
    }
    if !chain_map_ok(&mfc.n.complex.d, &mfc.n.complex.d, &mfc.n_frob) {
        failures.push("Frobenius on N is not a chain map".into());
    }
    if !chain_map_ok(&mfc.m.d, &mfc.n.complex.d, &mfc.qis) {
        failures.push("comparison map is not a chain map".into());
    }
    for &deg in mfc.m.space.basis.keys() {
        if mfc.qis.block(deg).mul(&mfc.m_frob.block(deg))
            != mfc.n_frob.block(deg).mul(&mfc.qis.block(deg))
        {
            failures.push(format!("comparison map does not commute with Frobenius in degree {deg}"));
        }
    }
    // Frobenius preserves the filtration
    for &deg in mfc.n.complex.space.basis.keys() {
        for w in mfc.n.filt.wmin..=mfc.n.filt.wmax {
            let img = mfc.n.filt.at(deg, w).image_under(&mfc.n_frob.block(deg));
            if !mfc.n.filt.at(deg, w).contains_subspace(&img) {
                failures.push(format!("Frobenius does not preserve filtration step {w} in degree {deg}"));
            }
        }
    }

    // qis: induced iso on cohomology
    let hm = cohomology(&mfc.m).map_err(|e| FiltError::Other(e.to_string()))?;
    let hn = cohomology(&mfc.n.complex).map_err(|e| FiltError::Other(e.to_string()))?;
    let mut qis_ok = hm.space.dims() == hn.space.dims();
    if qis_ok {
        for &deg in hm.space.basis.keys() {
            let hd = hm.space.dim(deg);
            let mut induced = Mat::zero(hn.space.dim(deg), hd);
            for j in 0..hd {
                let rep = hm.rep_of(deg, &crate::cdga::unit_vec(hd, j));
                let img = mfc.qis.apply(deg, &rep);
                match hn.class_of(deg, &img) {
                    Some(cls) => {
                        for (i, c) in cls.into_iter().enumerate() {
                            induced[(i, j)] = c;
                        }
                    }
                    None => {
                        qis_ok = false;
                    }
                }
            }
            if induced.rank() != hd {
                qis_ok = false;
            }
        }
    }
    if !qis_ok {
        failures.push("comparison map is not a quasi-isomorphism".into());
    }

    // spectral sequence: E1 purity and degeneration
    let r_stab = stable_page(&mfc.n);
    let ss = spectral_sequence(&mfc.n, r_stab)?;
    let mut e1 = BTreeMap::new();
    let page1 = &ss.pages[1];
    for (&(w, n), piece) in &page1.pieces {
        if piece.dim() == 0 {
            continue;
        }
        // induced Frobenius on the subquotient
        let mut fmat = Mat::zero(piece.dim(), piece.dim());
        let mut ok = true;
        for (j, v) in piece.reps.iter().enumerate() {
            let fv = mfc.n_frob.apply(n, v);
            match piece.class_of(&fv) {
                Some(cls) => {
                    for (i, c) in cls.into_iter().enumerate() {
                        fmat[(i, j)] = c;
                    }
                }
                None => {
                    ok = false;
                }
            }
        }
        let q = w + n; // E1^{w, n_total} is pure of weight w + n_total
        if !ok {
            failures.push(format!("Frobenius does not descend to E1 at ({w}, {})", q));
            continue;
        }
        let cert = certify_purity(&FrobeniusModule { mat: fmat, p: mfc.p, d_exp: mfc.d_exp }, q)?;
        e1.insert((w, q), (piece.dim(), cert.verdict));
        if cert.verdict != PurityVerdict::Pure {
            failures.push(format!("E1 piece at ({w}, {q}) not certified pure"));
        }
    }
    let mut degeneration_ok = true;
    for page in ss.pages.iter().filter(|p| p.r >= 2) {
        for ((w, n), m) in &page.d {
            if !m.is_zero() {
                degeneration_ok = false;
                failures.push(format!("d_{} nonzero at ({w}, {})", page.r, w + n));
            }
        }
    }
    Ok(MfcReport { qis_ok, e1, degeneration_ok, failures })
}

/// Convolution of filtrations through a tensor decomposition:
/// (P * Q)_n = sum_{i+j=n} P_i tensor Q_j.
pub fn convolve_filtrations(pa: &Filtration, qb: &Filtration, t: &TensorSpace) -> Filtration {
    let wmin = pa.wmin + qb.wmin;
    let wmax = pa.wmax + qb.wmax;
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    for (&deg, pairs) in &t.pairs {
        let _ = pairs;
        for w in wmin..=wmax {
            let mut vecs = Vec::new();
            for i in pa.wmin..=pa.wmax {
                let j = w - i;
                if j < qb.wmin {
                    continue;
                }
                for (&da, _) in &pa.space.basis {
                    let db = deg - da;
                    if qb.space.dim(db) == 0 {
                        continue;
                    }
                    let sa = pa.at(da, i);
                    let sb = qb.at(db, j);
                    for ca in 0..sa.dim() {
                        let u = sa.basis.col(ca);
                        for cb in 0..sb.dim() {
                            let v = sb.basis.col(cb);
                            let mut vec = vec![Q::zero(); t.space.dim(deg)];
                            for (iu, cu) in u.iter().enumerate() {
                                if cu.is_zero() {
                                    continue;
                                }
                                for (iv, cv) in v.iter().enumerate() {
                                    if cv.is_zero() {
                                        continue;
                                    }
                                    if let Some(k) = t.try_pair_index(da, iu, db, iv) {
                                        vec[k] = &vec[k] + cu * cv;
                                    }
                                }
                            }
                            vecs.push(vec);
                        }
                    }
                }
            }
            spans.entry(deg).or_default().entry(w).or_default().extend(vecs);
        }
    }
    Filtration::from_spans(&t.space, wmin, wmax, spans)
}

/// Tensor product of mixed Frobenius complexes with convolution filtration.
pub fn tensor_mfc(
    a: &MixedFrobeniusComplex,
    b: &MixedFrobeniusComplex,
) -> Result<MixedFrobeniusComplex, FiltError> {
    if a.p != b.p || a.d_exp != b.d_exp {
        return Err(FiltError::MismatchedParameters);
    }
    let tm = tensor(&a.m.space, &b.m.space);
    let tn = tensor(&a.n.complex.space, &b.n.complex.space);
    let dm = tensor_map(&a.m.d, &GradedMap::identity(&b.m.space), &tm, &tm)
        .add(&tensor_map(&GradedMap::identity(&a.m.space), &b.m.d, &tm, &tm));
    let dn = tensor_map(&a.n.complex.d, &GradedMap::identity(&b.n.complex.space), &tn, &tn).add(
        &tensor_map(&GradedMap::identity(&a.n.complex.space), &b.n.complex.d, &tn, &tn),
    );
    let m = Complex { space: tm.space.clone(), d: dm };
    let n_complex = Complex { space: tn.space.clone(), d: dn };
    let filt = convolve_filtrations(&a.n.filt, &b.n.filt, &tn);
    let m_frob = tensor_map(&a.m_frob, &b.m_frob, &tm, &tm);
    let n_frob = tensor_map(&a.n_frob, &b.n_frob, &tn, &tn);
    let qis = tensor_map(&a.qis, &b.qis, &tm, &tn);
    Ok(MixedFrobeniusComplex {
        m,
        m_frob,
        n: FilteredComplex { complex: n_complex, filt },
        n_frob,
        qis,
        p: a.p,
        d_exp: a.d_exp,
    })
}

/// Restrict a complex (and maps) to degreewise subspaces closed under d.
/// Returns the restricted complex in subspace coordinates plus the inclusion.
pub fn sub_complex(
    c: &Complex,
    subs: &BTreeMap<i64, Subspace>,
    label: &str,
) -> Result<(Complex, GradedMap), FiltError> {
    let mut basis = BTreeMap::new();
    for (&deg, s) in subs {
        if s.dim() > 0 {
            basis.insert(deg, (0..s.dim()).map(|i| format!("{label}{deg}_{i}")).collect());
        }
    }
    let space = GradedSpace { basis };
    let mut incl = GradedMap::zero(space.clone(), c.space.clone(), 0);
    for (&deg, s) in subs {
        if s.dim() > 0 {
            incl.set_block(deg, s.basis.clone());
        }
    }
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for (&deg, s) in subs {
        if s.dim() == 0 {
            continue;
        }
        let img = c.d.block(deg).mul(&s.basis);
        let tgt = subs
            .get(&(deg + 1))
            .cloned()
            .unwrap_or_else(|| Subspace::zero(c.space.dim(deg + 1)));
        let coords = tgt
            .basis
            .solve_mat(&img)
            .ok_or_else(|| FiltError::Other(format!("subspace not d-stable in degree {deg}")))?;
        d.set_block(deg, coords);
    }
    Ok((Complex { space, d }, incl))
}

/// Restrict a degree-0 map to compatible degreewise subspaces of source and
/// target complexes (in their subspace coordinates).
pub fn restrict_map(
    f: &GradedMap,
    src_subs: &BTreeMap<i64, Subspace>,
    src_space: &GradedSpace,
    tgt_subs: &BTreeMap<i64, Subspace>,
    tgt_space: &GradedSpace,
) -> Result<GradedMap, FiltError> {
    assert_eq!(f.shift, 0);
    let mut out = GradedMap::zero(src_space.clone(), tgt_space.clone(), 0);
    for (&deg, s) in src_subs {
        if s.dim() == 0 {
            continue;
        }
        let img = f.block(deg).mul(&s.basis);
        let tgt = tgt_subs
            .get(&deg)
            .cloned()
            .unwrap_or_else(|| Subspace::zero(f.target.dim(deg)));
        let coords = tgt
            .basis
            .solve_mat(&img)
            .ok_or_else(|| FiltError::Other(format!("map does not preserve subspace in degree {deg}")))?;
        out.set_block(deg, coords);
    }
    Ok(out)
}

/// A mixed Frobenius algebra: CDGAs M, N with Frobenii, a multiplicative
/// quasi-isomorphism, and a multiplicative filtration on N.
#[derive(Clone, Debug)]
pub struct MixedFrobeniusAlgebra {
    pub m: Cdga,
    pub m_frob: Frobenius,
    pub n: Cdga,
    pub n_filt: Filtration,
    pub n_frob: Frobenius,
    pub qis: GradedMap,
}

impl MixedFrobeniusAlgebra {
    pub fn to_mfc(&self) -> MixedFrobeniusComplex {
        MixedFrobeniusComplex {
            m: self.m.complex(),
            m_frob: self.m_frob.phi.clone(),
            n: FilteredComplex { complex: self.n.complex(), filt: self.n_filt.clone() },
            n_frob: self.n_frob.phi.clone(),
            qis: self.qis.clone(),
            p: self.n_frob.p,
            d_exp: self.n_frob.d_exp,
        }
    }
}

/// The augmentation-ideal mixed Frobenius complex (I, J, P|_J) of an
/// augmented mixed Frobenius algebra.
pub fn augmented_mfa_ideal(
    mfa: &MixedFrobeniusAlgebra,
    aug_m: &Augmentation,
    aug_n: &Augmentation,
) -> Result<MixedFrobeniusComplex, FiltError> {
    aug_m
        .validate(&mfa.m)
        .and(aug_n.validate(&mfa.n))
        .map_err(|e| FiltError::Other(format!("bad augmentation: {e}")))?;
    let i_subs = aug_m.ideal(&mfa.m);
    let j_subs = aug_n.ideal(&mfa.n);
    let (ic, _incl_i) = sub_complex(&mfa.m.complex(), &i_subs, "I")?;
    let (jc, _incl_j) = sub_complex(&mfa.n.complex(), &j_subs, "J")?;
    let m_frob = restrict_map(&mfa.m_frob.phi, &i_subs, &ic.space, &i_subs, &ic.space)?;
    let n_frob = restrict_map(&mfa.n_frob.phi, &j_subs, &jc.space, &j_subs, &jc.space)?;
    let qis = restrict_map(&mfa.qis, &i_subs, &ic.space, &j_subs, &jc.space)?;
    // filtration induced on J: intersect, then rewrite in J coordinates
    let mut steps = BTreeMap::new();
    for (&deg, j) in &j_subs {
        if j.dim() == 0 {
            continue;
        }
        let mut m = BTreeMap::new();
        for w in mfa.n_filt.wmin..=mfa.n_filt.wmax {
            let inter = mfa.n_filt.at(deg, w).intersect(j);
            let coords = j
                .basis
                .solve_mat(&inter.basis)
                .ok_or_else(|| FiltError::Other("filtration/ideal incompatibility".into()))?;
            m.insert(w, Subspace::from_cols(&coords));
        }
        steps.insert(deg, m);
    }
    let filt =
        Filtration { space: jc.space.clone(), wmin: mfa.n_filt.wmin, wmax: mfa.n_filt.wmax, steps };
    Ok(MixedFrobeniusComplex {
        m: ic,
        m_frob,
        n: FilteredComplex { complex: jc, filt },
        n_frob,
        qis,
        p: mfa.n_frob.p,
        d_exp: mfa.n_frob.d_exp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::qi;

    fn two_term_complex() -> Complex {
        // 0 -> Q -> Q -> 0 in degrees 0, 1 with d = id
        let space = GradedSpace::from_dims(&[(0, 1), (1, 1)], "x");
        let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
        d.set_block(0, Mat::identity(1));
        Complex { space, d }
    }

    #[test]
    fn trivial_filtration_e1_is_h() {
        let space = GradedSpace::from_dims(&[(0, 1), (1, 2)], "x");
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let c = Complex { space: space.clone(), d };
        let f = FilteredComplex { complex: c, filt: Filtration::trivial(&space, 0) };
        let ss = spectral_sequence(&f, 3).unwrap();
        assert_eq!(ss.pages[1].dims(), [((0i64, 0i64), 1usize), ((0, 1), 2)].into_iter().collect());
        // all later pages equal
        assert_eq!(ss.pages[2].dims(), ss.pages[1].dims());
        assert_eq!(ss.e_inf.dims(), ss.pages[1].dims());
    }

    #[test]
    fn split_two_step_filtration_nonzero_d1() {
        // 0 -> Q -> Q -> 0 with source in step 1, target in step 0:
        // d maps F_1 into F_0 (ok), E_1 has a nonzero d_1, E_2 = 0.
        let c = two_term_complex();
        let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
        spans.entry(0).or_default().insert(1, vec![vec![qi(1)]]);
        spans.entry(1).or_default().insert(0, vec![vec![qi(1)]]);
        let filt = Filtration::from_spans(&c.space, 0, 1, spans);
        let f = FilteredComplex { complex: c, filt };
        f.validate().unwrap();
        let ss = spectral_sequence(&f, 3).unwrap();
        let d1 = &ss.pages[1].d[&(1, 0)];
        assert!(!d1.is_zero());
        assert!(ss.pages[2].dims().is_empty());
        assert!(ss.e_inf.dims().is_empty());
    }

    #[test]
    fn einf_matches_gr_h() {
        // zero differential, two-step filtration on a 2-dim degree-1 space
        let space = GradedSpace::from_dims(&[(1, 2)], "x");
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
        spans.entry(1).or_default().insert(0, vec![vec![qi(1), qi(0)]]);
        spans.entry(1).or_default().insert(1, vec![vec![qi(0), qi(1)]]);
        let filt = Filtration::from_spans(&space, 0, 1, spans);
        let f = FilteredComplex { complex: Complex { space, d }, filt };
        let ss = spectral_sequence(&f, 2).unwrap();
        assert_eq!(ss.e_inf.dims(), ss.gr_h);
        assert_eq!(ss.gr_h.len(), 2);
    }

    #[test]
    fn purity_trivial_and_weil() {
        // dim 1, F = (q), weight 2 -> pure
        let m = FrobeniusModule { mat: Mat::from_rows(vec![vec![qi(5)]]), p: 5, d_exp: 1 };
        let c = certify_purity(&m, 2).unwrap();
        assert_eq!(c.verdict, PurityVerdict::Pure);
        // char poly x^2 - 2x + 5, roots 1 +/- 2i, |.| = sqrt(5), weight 1
        let m2 = FrobeniusModule {
            mat: Mat::from_rows(vec![vec![qi(0), qi(-5)], vec![qi(1), qi(2)]]),
            p: 5,
            d_exp: 1,
        };
        let c2 = certify_purity(&m2, 1).unwrap();
        assert_eq!(c2.verdict, PurityVerdict::Pure);
        // F = diag(1, q), weight 1 -> impure
        let m3 = FrobeniusModule {
            mat: Mat::from_rows(vec![vec![qi(1), qi(0)], vec![qi(0), qi(5)]]),
            p: 5,
            d_exp: 1,
        };
        let c3 = certify_purity(&m3, 1).unwrap();
        assert_eq!(c3.verdict, PurityVerdict::Impure);
    }

    #[test]
    fn purity_rejects_nonintegral_and_singular() {
        let m = FrobeniusModule {
            mat: Mat::from_rows(vec![vec![crate::matrix::qr(1, 2)]]),
            p: 5,
            d_exp: 1,
        };
        assert!(matches!(certify_purity(&m, 0), Err(FiltError::NonIntegralCharpoly)));
        let m2 = FrobeniusModule { mat: Mat::from_rows(vec![vec![qi(0)]]), p: 5, d_exp: 1 };
        assert!(matches!(certify_purity(&m2, 0), Err(FiltError::FrobeniusNotBijective)));
    }

    #[test]
    fn pure_module_mfc_passes() {
        // N = 1-dim module in degree 1, weight step 0, Frobenius = sqrt-q
        // style: weight of E1 piece = 0 + 1 = 1, F with |root| = sqrt(5):
        // use charpoly x^2 - 2x + 5 on a 2-dim degree-1 space.
        let space = GradedSpace::from_dims(&[(1, 2)], "x");
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let c = Complex { space: space.clone(), d };
        let mut frob = GradedMap::zero(space.clone(), space.clone(), 0);
        frob.set_block(1, Mat::from_rows(vec![vec![qi(0), qi(-5)], vec![qi(1), qi(2)]]));
        let mfc = MixedFrobeniusComplex {
            m: c.clone(),
            m_frob: frob.clone(),
            n: FilteredComplex { complex: c, filt: Filtration::trivial(&space, 0) },
            n_frob: frob,
            qis: GradedMap::identity(&space),
            p: 5,
            d_exp: 1,
        };
        let report = check_mfc(&mfc).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        assert_eq!(report.e1[&(0, 1)].0, 2);
    }

    #[test]
    fn convolution_single_jumps() {
        // two rank-1 one-jump filtrations at weights a=1, b=2 -> jump at 3
        let sa = GradedSpace::from_dims(&[(0, 1)], "a");
        let sb = GradedSpace::from_dims(&[(0, 1)], "b");
        let pa = Filtration::trivial(&sa, 1);
        let pb = Filtration::trivial(&sb, 2);
        let t = tensor(&sa, &sb);
        let conv = convolve_filtrations(&pa, &pb, &t);
        assert_eq!(conv.at(0, 2).dim(), 0);
        assert_eq!(conv.at(0, 3).dim(), 1);
    }

    #[test]
    fn convolution_gr_dims_add() {
        // split 2-dim filtrations: Gr counts convolve
        let sa = GradedSpace::from_dims(&[(0, 2)], "a");
        let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
        spans.entry(0).or_default().insert(0, vec![vec![qi(1), qi(0)]]);
        spans.entry(0).or_default().insert(1, vec![vec![qi(0), qi(1)]]);
        let pa = Filtration::from_spans(&sa, 0, 1, spans.clone());
        let pb = Filtration::from_spans(&sa, 0, 1, spans);
        let t = tensor(&sa, &sa);
        let conv = convolve_filtrations(&pa, &pb, &t);
        // Gr dims: w=0: 1, w=1: 2, w=2: 1
        let gr = conv.gr_dims();
        assert_eq!(gr[&(0, 0)], 1);
        assert_eq!(gr[&(0, 1)], 2);
        assert_eq!(gr[&(0, 2)], 1);
    }

    #[test]
    fn tensor_mfc_weights_add() {
        let space = GradedSpace::from_dims(&[(0, 1)], "x");
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        let c = Complex { space: space.clone(), d };
        let mut frob = GradedMap::zero(space.clone(), space.clone(), 0);
        frob.set_block(0, Mat::from_rows(vec![vec![qi(5)]]));
        let unit_mfc = |w: i64| MixedFrobeniusComplex {
            m: c.clone(),
            m_frob: frob.clone(),
            n: FilteredComplex { complex: c.clone(), filt: Filtration::trivial(&space, w) },
            n_frob: frob.clone(),
            qis: GradedMap::identity(&space),
            p: 5,
            d_exp: 1,
        };
        // rank-1 weight: F = q = 5 in degree 0 at step 2: piece weight 2 -> pure
        let a = unit_mfc(2);
        let b = unit_mfc(2);
        let t = tensor_mfc(&a, &b).unwrap();
        // the E1 piece sits at (w, q) = (4, 4) but F tensor F = 25 = q^2:
        // pure of weight 4
        let report = check_mfc(&t).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        assert_eq!(report.e1[&(4, 4)].0, 1);
    }
}
