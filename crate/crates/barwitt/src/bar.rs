//! The bar complex B(A, a) of an augmented connected CDGA: bigraded pieces
//! B^{-s,t} = (tensor^s I)^t with the combinatorial and internal
//! differentials, shuffle product, deconcatenation coproduct, bar filtration,
//! the Hopf algebra H^0(B), Eilenberg-Moore spectral sequence, phi-hat,
//! cocommutative part, Lie dimensions, and transfer of derivations and
//! Frobenius endomorphisms.

use crate::cdga::{unit_vec, Augmentation, Cdga, Derivation, Frobenius};
use crate::filt::{spectral_sequence, FiltError, Filtration, FilteredComplex, SpectralSequence};
use crate::gla::{cohomology, Complex, GradedMap, GradedSpace};
use crate::matrix::{Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum BarError {
    #[error("base algebra is not connected (A^0 must be spanned by the unit); reduce the model first")]
    NotConnected,
    #[error("base algebra has negative degrees")]
    NegativeDegrees,
    #[error("H^0(A) must be Q")]
    H0NotQ,
    #[error("derivation does not preserve the augmentation ideal")]
    DerivationIdeal,
    #[error("derivation does not descend to H^0: {0}")]
    DoesNotDescend(String),
    #[error("filtration is not multiplicative: P_{0} * P_{1} exceeds P_{2}")]
    NotMultiplicative(i64, i64, i64),
    #[error("{0}")]
    Filt(#[from] FiltError),
    #[error("{0}")]
    Other(String),
}

/// A bar word: sequence of augmentation-ideal basis letters, each written as
/// (degree in A, index in that degree). Letters have degree >= 1.
pub type Word = Vec<(i64, usize)>;

/// Linear combination of words of a fixed length s (any t).
pub type WordElem = BTreeMap<Word, Q>;

#[derive(Clone, Debug)]
pub struct BarComplex {
    pub base: Cdga,
    pub aug: Augmentation,
    pub r_max: usize,
    pub t_max: i64,
    /// words per (s, t), ordered
    pub words: BTreeMap<(usize, i64), Vec<Word>>,
    pub index: BTreeMap<(usize, i64), BTreeMap<Word, usize>>,
    /// flattened basis of the total-degree-0 part: all (s, s)-words, s
    /// ascending; `deg0_offsets[s]` is where level s starts
    pub deg0: Vec<(usize, Word)>,
    pub deg0_offsets: Vec<usize>,
}

fn word_degree(w: &Word) -> i64 {
    w.iter().map(|&(d, _)| d).sum()
}

/// Build the truncated bar complex: words of length s <= r_max and internal
/// degree t <= t_max = r_max + 2.
pub fn build_bar(a: &Cdga, aug: &Augmentation, r_max: usize) -> Result<BarComplex, BarError> {
    if a.space.degrees().iter().any(|&d| d < 0) {
        return Err(BarError::NegativeDegrees);
    }
    if !a.is_connected() {
        return Err(BarError::NotConnected);
    }
    if !a.d.block(0).is_zero() {
        // with A^0 = Q 1 and d(1) = 0 this cannot happen, but keep the guard
        return Err(BarError::H0NotQ);
    }
    let t_max = r_max as i64 + 2;
    // letters: basis elements of A in degrees >= 1
    let letters: Vec<(i64, usize)> = a
        .space
        .degrees()
        .into_iter()
        .filter(|&d| d >= 1)
        .flat_map(|d| (0..a.space.dim(d)).map(move |i| (d, i)))
        .collect();
    let mut words: BTreeMap<(usize, i64), Vec<Word>> = BTreeMap::new();
    words.insert((0, 0), vec![vec![]]);
    let mut frontier: Vec<Word> = vec![vec![]];
    for s in 1..=r_max {
        let mut next = Vec::new();
        for w in &frontier {
            let base = word_degree(w);
            for &(d, i) in &letters {
                if base + d <= t_max {
                    let mut ww = w.clone();
                    ww.push((d, i));
                    next.push(ww);
                }
            }
        }
        next.sort();
        for w in &next {
            words.entry((s, word_degree(w))).or_default().push(w.clone());
        }
        frontier = next;
    }
    let index: BTreeMap<(usize, i64), BTreeMap<Word, usize>> = words
        .iter()
        .map(|(&k, ws)| (k, ws.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect()))
        .collect();
    let mut deg0 = Vec::new();
    let mut deg0_offsets = Vec::new();
    for s in 0..=r_max {
        deg0_offsets.push(deg0.len());
        if let Some(ws) = words.get(&(s, s as i64)) {
            for w in ws {
                deg0.push((s, w.clone()));
            }
        }
    }
    deg0_offsets.push(deg0.len());
    Ok(BarComplex { base: a.clone(), aug: aug.clone(), r_max, t_max, words, index, deg0, deg0_offsets })
}

impl BarComplex {
    pub fn dim(&self, s: usize, t: i64) -> usize {
        self.words.get(&(s, t)).map_or(0, |w| w.len())
    }

    fn j_sign(&self, w: &Word, upto: usize) -> Q {
        // product of (-1)^{deg a_j} for j < upto (0-based slots)
        let par: i64 = w[..upto].iter().map(|&(d, _)| d).sum();
        if par % 2 != 0 {
            -Q::one()
        } else {
            Q::one()
        }
    }

    /// Internal differential of a single word:
    /// d_I[a_1|...|a_s] = sum_i (-1)^i [Ja_1|...|Ja_{i-1}|d a_i|...|a_s].
    pub fn d_i_word(&self, w: &Word) -> WordElem {
        let mut out = WordElem::new();
        for i in 0..w.len() {
            let (d, idx) = w[i];
            let dv = self.base.d.apply(d, &unit_vec(self.base.space.dim(d), idx));
            if dv.iter().all(|x| x.is_zero()) {
                continue;
            }
            let mut sign = if (i + 1) % 2 != 0 { -Q::one() } else { Q::one() };
            sign = sign * self.j_sign(w, i);
            for (k, c) in dv.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut ww = w.clone();
                ww[i] = (d + 1, k);
                let v = out.entry(ww).or_insert_with(Q::zero);
                *v += &sign * c;
            }
        }
        out
    }

    /// Combinatorial differential:
    /// d_C[a_1|...|a_s] = sum_{i=1}^{s-1} (-1)^{i+1}
    ///   [Ja_1|...|Ja_{i-1}| Ja_i ^ a_{i+1} |...|a_s].
    pub fn d_c_word(&self, w: &Word) -> WordElem {
        let mut out = WordElem::new();
        for i in 0..w.len().saturating_sub(1) {
            let (da, ia) = w[i];
            let (db, ib) = w[i + 1];
            let prod = self.base.mul_basis(da, ia, db, ib);
            if prod.is_empty() {
                continue;
            }
            // (-1)^{i+1} in 1-based indexing = (-1)^{i} in 0-based ... slot
            // i (0-based) is the 1-based i+1, so the sign is (-1)^{(i+1)+1}
            let mut sign = if i % 2 != 0 { -Q::one() } else { Q::one() };
            sign = sign * self.j_sign(w, i + 1); // J on slots 1..=i (0-based 0..i), incl. slot i
            for (k, c) in &prod {
                let mut ww: Word = w[..i].to_vec();
                ww.push((da + db, *k));
                ww.extend_from_slice(&w[i + 2..]);
                let v = out.entry(ww).or_insert_with(Q::zero);
                *v += &sign * c;
            }
        }
        out
    }

    fn elem_to_vec(&self, s: usize, t: i64, e: &WordElem) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim(s, t)];
        if let Some(ix) = self.index.get(&(s, t)) {
            for (w, c) in e {
                if let Some(&i) = ix.get(w) {
                    v[i] = c.clone();
                }
            }
        }
        v
    }

    /// Matrix of d_C: (s, t) -> (s-1, t).
    pub fn d_c_block(&self, s: usize, t: i64) -> Mat {
        let rows = if s >= 1 { self.dim(s - 1, t) } else { 0 };
        let mut m = Mat::zero(rows, self.dim(s, t));
        if s == 0 {
            return m;
        }
        if let Some(ws) = self.words.get(&(s, t)) {
            for (j, w) in ws.iter().enumerate() {
                let e = self.d_c_word(w);
                for (i, c) in self.elem_to_vec(s - 1, t, &e).into_iter().enumerate() {
                    m[(i, j)] = c;
                }
            }
        }
        m
    }

    /// Matrix of d_I: (s, t) -> (s, t+1); zero block past the truncation.
    pub fn d_i_block(&self, s: usize, t: i64) -> Mat {
        let rows = if t + 1 <= self.t_max { self.dim(s, t + 1) } else { 0 };
        let mut m = Mat::zero(rows, self.dim(s, t));
        if rows == 0 {
            return m;
        }
        if let Some(ws) = self.words.get(&(s, t)) {
            for (j, w) in ws.iter().enumerate() {
                let e = self.d_i_word(w);
                for (i, c) in self.elem_to_vec(s, t + 1, &e).into_iter().enumerate() {
                    m[(i, j)] = c;
                }
            }
        }
        m
    }

    /// The total complex: degree n = t - s, differential d_C + d_I (d_I
    /// dropped at the t-truncation boundary, which keeps d^2 = 0).
    pub fn total_complex(&self) -> TotalBar {
        let mut keys: BTreeMap<i64, Vec<(usize, i64, usize)>> = BTreeMap::new();
        for (&(s, t), ws) in &self.words {
            let n = t - s as i64;
            let e = keys.entry(n).or_default();
            for i in 0..ws.len() {
                e.push((s, t, i));
            }
        }
        let mut basis = BTreeMap::new();
        let mut pos = BTreeMap::new();
        for (&n, ks) in &keys {
            let mut labels = Vec::new();
            for (off, &(s, t, i)) in ks.iter().enumerate() {
                pos.insert((s, t, i), (n, off));
                let w = &self.words[&(s, t)][i];
                labels.push(format!(
                    "[{}]",
                    w.iter()
                        .map(|&(d, k)| self.base.basis_label(d, k))
                        .collect::<Vec<_>>()
                        .join("|")
                ));
            }
            basis.insert(n, labels);
        }
        let space = GradedSpace { basis };
        let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
        for (&n, ks) in &keys {
            let tgt_dim = space.dim(n + 1);
            let mut m = Mat::zero(tgt_dim, ks.len());
            for (col, &(s, t, i)) in ks.iter().enumerate() {
                let w = &self.words[&(s, t)][i];
                if s >= 1 {
                    let e = self.d_c_word(w);
                    for (ww, c) in &e {
                        if let Some(&ix) = self.index.get(&(s - 1, t)).and_then(|m2| m2.get(ww)) {
                            let (_, row) = pos[&(s - 1, t, ix)];
                            m[(row, col)] = &m[(row, col)] + c;
                        }
                    }
                }
                if t + 1 <= self.t_max {
                    let e = self.d_i_word(w);
                    for (ww, c) in &e {
                        if let Some(&ix) = self.index.get(&(s, t + 1)).and_then(|m2| m2.get(ww)) {
                            let (_, row) = pos[&(s, t + 1, ix)];
                            m[(row, col)] = &m[(row, col)] + c;
                        }
                    }
                }
            }
            d.set_block(n, m);
        }
        TotalBar { complex: Complex { space, d }, keys, pos }
    }

    /// Dimension of the flattened degree-0 part.
    pub fn deg0_dim(&self) -> usize {
        self.deg0.len()
    }

    /// Matrix of the total differential restricted to total degree 0, in the
    /// flattened coordinates (rows: all (s, t)-pieces with t - s = 1).
    pub fn deg0_differential(&self) -> (Mat, Vec<(usize, i64, usize)>) {
        let mut rows_idx = Vec::new();
        let mut row_pos: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        for (&(s, t), ws) in &self.words {
            if t - (s as i64) == 1 {
                row_pos.insert((s, t), rows_idx.len());
                for i in 0..ws.len() {
                    rows_idx.push((s, t, i));
                }
            }
        }
        let mut m = Mat::zero(rows_idx.len(), self.deg0.len());
        for (col, (s, w)) in self.deg0.iter().enumerate() {
            let s = *s;
            let t = s as i64;
            if s >= 1 {
                for (ww, c) in self.d_c_word(w) {
                    if let Some(&ix) = self.index.get(&(s - 1, t)).and_then(|m2| m2.get(&ww)) {
                        let row = row_pos[&(s - 1, t)] + ix;
                        m[(row, col)] = &m[(row, col)] + &c;
                    }
                }
            }
            if t + 1 <= self.t_max {
                for (ww, c) in self.d_i_word(w) {
                    if let Some(&ix) = self.index.get(&(s, t + 1)).and_then(|m2| m2.get(&ww)) {
                        let row = row_pos[&(s, t + 1)] + ix;
                        m[(row, col)] = &m[(row, col)] + &c;
                    }
                }
            }
        }
        (m, rows_idx)
    }

    /// Shuffle product of two words with Koszul signs for shuffle weight
    /// deg(a) - 1 per letter.
    pub fn shuffle_words(&self, x: &Word, y: &Word) -> WordElem {
        let mut out = WordElem::new();
        let p = x.len();
        let q = y.len();
        // enumerate shuffles as bitmasks choosing positions of x-letters
        let total = p + q;
        let mut stack: Vec<(Vec<bool>, usize, usize)> = vec![(Vec::new(), 0, 0)];
        while let Some((choice, i, j)) = stack.pop() {
            if choice.len() == total {
                // build word and sign
                let mut w = Word::with_capacity(total);
                let (mut ii, mut jj) = (0usize, 0usize);
                let mut sign_par = 0i64;
                // inversions: for each y-letter placed before a later x-letter
                for &from_x in &choice {
                    if from_x {
                        w.push(x[ii]);
                        ii += 1;
                    } else {
                        // this y-letter jumps over all remaining x-letters
                        // that come after it in the shuffle; count odd-weight
                        // interactions with the x-letters not yet placed
                        let wy = (y[jj].0 - 1) % 2;
                        if wy != 0 {
                            let odd_remaining: i64 =
                                x[ii..].iter().map(|&(d, _)| (d - 1) % 2).sum();
                            sign_par += odd_remaining;
                        }
                        w.push(y[jj]);
                        jj += 1;
                    }
                }
                let sign = if sign_par % 2 != 0 { -Q::one() } else { Q::one() };
                let v = out.entry(w).or_insert_with(Q::zero);
                *v += sign;
                continue;
            }
            if i < p {
                let mut c = choice.clone();
                c.push(true);
                stack.push((c, i + 1, j));
            }
            if j < q {
                let mut c = choice.clone();
                c.push(false);
                stack.push((c, i, j + 1));
            }
        }
        out
    }

    /// Shuffle product on flattened degree-0 vectors; words longer than
    /// r_max must not occur (caller restricts levels).
    pub fn shuffle_deg0(&self, a: &[Q], b: &[Q]) -> Option<Vec<Q>> {
        let mut out = vec![Q::zero(); self.deg0.len()];
        let pos: BTreeMap<&Word, usize> =
            self.deg0.iter().enumerate().map(|(i, (_, w))| (w, i)).collect();
        for (ia, ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (ib, cb) in b.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let wx = &self.deg0[ia].1;
                let wy = &self.deg0[ib].1;
                if wx.len() + wy.len() > self.r_max {
                    return None; // truncated out of range
                }
                for (w, c) in self.shuffle_words(wx, wy) {
                    let k = pos[&w];
                    out[k] = &out[k] + ca * cb * c;
                }
            }
        }
        Some(out)
    }

    /// Deconcatenation coproduct on a flattened degree-0 vector, returned as
    /// an L x L coefficient matrix M with Delta(v) = sum M[i][j] w_i (x) w_j.
    pub fn coproduct_deg0(&self, v: &[Q]) -> Mat {
        let l = self.deg0.len();
        let pos: BTreeMap<&Word, usize> =
            self.deg0.iter().enumerate().map(|(i, (_, w))| (w, i)).collect();
        let mut m = Mat::zero(l, l);
        for (iv, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let w = &self.deg0[iv].1;
            for cut in 0..=w.len() {
                let w1: Word = w[..cut].to_vec();
                let w2: Word = w[cut..].to_vec();
                let (i, j) = (pos[&w1], pos[&w2]);
                m[(i, j)] = &m[(i, j)] + c;
            }
        }
        m
    }
}

/// The assembled total complex of a bar complex, with bookkeeping to locate
/// (s, t, word index) positions inside each total degree.
#[derive(Clone, Debug)]
pub struct TotalBar {
    pub complex: Complex,
    pub keys: BTreeMap<i64, Vec<(usize, i64, usize)>>,
    pub pos: BTreeMap<(usize, i64, usize), (i64, usize)>,
}

impl TotalBar {
    /// The bar filtration: F_w = span of pieces with s <= w.
    pub fn bar_filtration(&self) -> Filtration {
        let space = &self.complex.space;
        let wmax = self.keys.values().flat_map(|v| v.iter().map(|&(s, _, _)| s as i64)).max().unwrap_or(0);
        let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
        for (&n, ks) in &self.keys {
            for (off, &(s, _, _)) in ks.iter().enumerate() {
                let mut v = vec![Q::zero(); space.dim(n)];
                v[off] = Q::one();
                spans.entry(n).or_default().entry(s as i64).or_default().push(v);
            }
        }
        Filtration::from_spans(space, 0, wmax, spans)
    }
}

/// The Hopf algebra H^0(B) with a level-adapted echelon basis and all
/// structure constants.
#[derive(Clone, Debug)]
pub struct HopfReport {
    /// dims of B_s H^0 for s = 0..=r_max
    pub b_dims: Vec<usize>,
    /// columns: chosen cocycle basis in flattened degree-0 coordinates,
    /// adapted to the level filtration
    pub basis: Mat,
    /// bar-filtration level of each basis vector
    pub levels: Vec<usize>,
    /// class projection: pi * basis = identity, pi kills a chosen complement
    pub pi: Mat,
    /// shuffle structure constants for pairs with level sum <= r_max
    pub product: BTreeMap<(usize, usize), Vec<(usize, Q)>>,
    /// coproduct structure constants: i -> sum_j,k c [j (x) k]
    pub coproduct: BTreeMap<usize, Vec<(usize, usize, Q)>>,
    pub counit: Vec<Q>,
    pub antipode: Mat,
    /// dims per level of the subalgebra generated by B_r H^0, for r = 0..=r_max
    pub generated_dims: Vec<Vec<usize>>,
    /// dims of the primitive subspace per level
    pub primitive_dims: Vec<usize>,
    /// graded dims of the fundamental Lie algebra, levels 1..=r_max
    pub lie_dims: Vec<usize>,
}

impl HopfReport {
    pub fn h0_dim(&self) -> usize {
        self.levels.len()
    }

    /// Class coordinates of a flattened cocycle vector.
    pub fn class_of(&self, v: &[Q]) -> Vec<Q> {
        self.pi.mul_vec(v)
    }

    pub fn rep_of(&self, h: &[Q]) -> Vec<Q> {
        self.basis.mul_vec(h)
    }

    /// Product in basis coordinates; None if the level budget is exceeded.
    pub fn mul(&self, a: &[Q], b: &[Q], r_max: usize) -> Option<Vec<Q>> {
        let n = self.h0_dim();
        let mut out = vec![Q::zero(); n];
        for (i, ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                if self.levels[i] + self.levels[j] > r_max {
                    return None;
                }
                for (k, c) in self.product.get(&(i, j))? {
                    out[*k] = &out[*k] + ca * cb * c;
                }
            }
        }
        Some(out)
    }
}

/// Compute H^0(B) = ker(total d) in degree 0 with its Hopf structure.
pub fn h0_hopf(b: &BarComplex) -> Result<HopfReport, BarError> {
    let l = b.deg0_dim();
    let (d0, _) = b.deg0_differential();

    // level-adapted kernel basis: Z cap B_s for each s
    let mut basis_cols: Vec<Vec<Q>> = Vec::new();
    let mut levels: Vec<usize> = Vec::new();
    let mut b_dims = Vec::new();
    let mut acc = Subspace::zero(l);
    for s in 0..=b.r_max {
        let k = b.deg0_offsets[s + 1];
        // kernel of d0 restricted to the first k coordinates
        let sub = d0.submatrix_cols(0, k);
        let ker = sub.kernel_basis();
        let padded: Vec<Vec<Q>> = ker
            .into_iter()
            .map(|mut v| {
                v.resize(l, Q::zero());
                v
            })
            .collect();
        let zs = Subspace::span(l, &padded);
        b_dims.push(zs.dim());
        for v in zs.complement_of(&acc) {
            basis_cols.push(v.clone());
            levels.push(s);
            acc = acc.sum(&Subspace::span(l, &[v]));
        }
    }
    let n = basis_cols.len();
    let basis = Mat::from_cols(l, &basis_cols);
    // class projection pi with pi * basis = id
    let z = Subspace { ambient: l, basis: basis.clone() };
    let comp = Subspace::full(l).complement_of(&z);
    let stacked = basis.hstack(&Mat::from_cols(l, &comp));
    let inv = stacked.inverse().expect("basis + complement invertible");
    let mut pi = Mat::zero(n, l);
    for i in 0..n {
        for j in 0..l {
            pi[(i, j)] = inv[(i, j)].clone();
        }
    }

    // products
    let mut product = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if levels[i] + levels[j] > b.r_max {
                continue;
            }
            let p = b
                .shuffle_deg0(&basis.col(i), &basis.col(j))
                .expect("level budget respected");
            let cls = pi.mul_vec(&p);
            // confirm the product is a cocycle (sanity: shuffle of cocycles)
            debug_assert!(d0.mul_vec(&p).iter().all(|x| x.is_zero()));
            let entry: Vec<(usize, Q)> = cls
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .collect();
            product.insert((i, j), entry);
        }
    }

    // coproducts
    let mut coproduct = BTreeMap::new();
    for i in 0..n {
        let m = b.coproduct_deg0(&basis.col(i));
        let coords = pi.mul(&m).mul(&pi.transpose());
        let mut entry = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if !coords[(r, c)].is_zero() {
                    entry.push((r, c, coords[(r, c)].clone()));
                }
            }
        }
        coproduct.insert(i, entry);
    }

    // counit: coefficient of the empty word (flattened coordinate 0)
    let counit: Vec<Q> = (0..n).map(|i| basis[(0, i)].clone()).collect();

    // antipode by level recursion: S(1) = 1; S(x) = -x - sum S(x') x''
    // over the reduced coproduct
    let mut antipode = Mat::zero(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| levels[i]);
    for &i in &order {
        if levels[i] == 0 {
            antipode[(i, i)] = Q::one();
            continue;
        }
        let mut s_i = vec![Q::zero(); n];
        for k in 0..n {
            s_i[k] = -if k == i { Q::one() } else { Q::zero() };
        }
        for &(j, k, ref c) in &coproduct[&i] {
            if levels[j] == 0 || levels[k] == 0 {
                continue; // skip x (x) 1 and 1 (x) x
            }
            // j has lower level than i: S(j) already computed
            let s_j = antipode.col(j);
            let mut ek = vec![Q::zero(); n];
            ek[k] = Q::one();
            // S(x') * x''
            let mut prod = vec![Q::zero(); n];
            for (jj, cj) in s_j.iter().enumerate() {
                if cj.is_zero() {
                    continue;
                }
                for (kk, ck) in product.get(&(jj, k)).into_iter().flatten() {
                    prod[*kk] = &prod[*kk] + cj * ck;
                }
            }
            let _ = ek;
            for t in 0..n {
                s_i[t] = &s_i[t] - c * &prod[t];
            }
        }
        for t in 0..n {
            antipode[(t, i)] = s_i[t].clone();
        }
    }

    // subalgebras generated by each level
    let mut generated_dims = Vec::new();
    for r in 0..=b.r_max {
        let gen_cols: Vec<Vec<Q>> = (0..n)
            .filter(|&i| levels[i] <= r)
            .map(|i| basis.col(i))
            .collect();
        let mut span = Subspace::span(l, &gen_cols);
        loop {
            let mut grew = false;
            let cur: Vec<Vec<Q>> = (0..span.dim()).map(|j| span.basis.col(j)).collect();
            let mut new_vecs = Vec::new();
            for x in &cur {
                for y in &cur {
                    if let Some(p) = b.shuffle_deg0(x, y) {
                        if !span.contains(&p) {
                            new_vecs.push(p);
                        }
                    }
                }
            }
            if !new_vecs.is_empty() {
                span = span.sum(&Subspace::span(l, &new_vecs));
                grew = true;
            }
            if !grew {
                break;
            }
        }
        // dims per level s: intersection with the coordinate prefix
        let mut per_level = Vec::new();
        for s in 0..=b.r_max {
            let k = b.deg0_offsets[s + 1];
            per_level.push(span.intersect(&coord_prefix(l, k)).dim());
        }
        generated_dims.push(per_level);
    }

    // primitives per level: ker of reduced coproduct
    let mut primitive_dims = Vec::new();
    {
        // matrix of reduced Delta in basis coords: n^2 x n
        let mut red = Mat::zero(n * n, n);
        for i in 0..n {
            for &(j, k, ref c) in &coproduct[&i] {
                red[(j * n + k, i)] = c.clone();
            }
            // subtract x (x) 1 + 1 (x) x; the unit is basis vector 0
            red[(i * n, i)] = &red[(i * n, i)] - &Q::one();
            red[(i, i)] = &red[(i, i)] - &Q::one();
        }
        let prim = Subspace::span(n, &red.kernel_basis());
        for s in 0..=b.r_max {
            // basis vectors of level <= s span a coordinate prefix in basis
            // coords only if ordered; levels are nondecreasing by construction
            let k = levels.iter().filter(|&&lv| lv <= s).count();
            primitive_dims.push(prim.intersect(&coord_prefix(n, k)).dim());
        }
    }

    // Lie dims: indecomposables per level
    let mut lie_dims = Vec::new();
    {
        for s in 1..=b.r_max {
            let mut dec_vecs: Vec<Vec<Q>> = Vec::new();
            // B_{s-1} H^0
            for i in 0..n {
                if levels[i] < s {
                    dec_vecs.push(basis.col(i));
                }
            }
            // products of positive levels summing to <= s
            for i in 0..n {
                for j in 0..n {
                    if levels[i] >= 1 && levels[j] >= 1 && levels[i] + levels[j] <= s {
                        if let Some(p) = b.shuffle_deg0(&basis.col(i), &basis.col(j)) {
                            dec_vecs.push(p);
                        }
                    }
                }
            }
            let dec = Subspace::span(l, &dec_vecs);
            lie_dims.push(b_dims[s] - dec.dim());
        }
    }

    Ok(HopfReport {
        b_dims,
        basis,
        levels,
        pi,
        product,
        coproduct,
        counit,
        antipode,
        generated_dims,
        primitive_dims,
        lie_dims,
    })
}

fn coord_prefix(ambient: usize, k: usize) -> Subspace {
    let vecs: Vec<Vec<Q>> = (0..k)
        .map(|i| {
            let mut v = vec![Q::zero(); ambient];
            v[i] = Q::one();
            v
        })
        .collect();
    Subspace::span(ambient, &vecs)
}

/// Eilenberg-Moore spectral sequence of the bar filtration on the total
/// complex.
pub fn eilenberg_moore(b: &BarComplex, page_max: i64) -> Result<SpectralSequence, BarError> {
    let total = b.total_complex();
    let filt = total.bar_filtration();
    let fc = FilteredComplex { complex: total.complex, filt };
    Ok(spectral_sequence(&fc, page_max)?)
}

/// Dims of B^{-s,t} built on the cohomology algebra — the E_1 identity
/// comparison object.
pub fn bar_dims_of_cohomology(a: &Cdga, r_max: usize) -> Result<BTreeMap<(usize, i64), usize>, BarError> {
    let (h, _) = a
        .cohomology_algebra()
        .map_err(|e| BarError::Other(e.to_string()))?;
    let haug = Augmentation::connected(&h).map_err(|_| BarError::NotConnected)?;
    let hb = build_bar(&h, &haug, r_max)?;
    Ok(hb.words.iter().map(|(&k, ws)| (k, ws.len())).collect())
}

/// phi-hat: symmetric words in H^1(A) -> H^0(B) by iterated shuffle of
/// length-1 words. Returns per level: the matrix in H^0 basis coordinates
/// (columns = multisets of H^1 basis classes) and the flattened image span.
pub struct PhiHat {
    /// per level k = 0..=r_max: matrix with columns indexed by multisets
    pub matrices: Vec<Mat>,
    /// flattened-coordinate span of the total image through each level
    pub image: Vec<Subspace>,
    pub injective: bool,
}

pub fn phi_hat(b: &BarComplex, report: &HopfReport) -> Result<PhiHat, BarError> {
    let h = cohomology(&b.base.complex()).map_err(|e| BarError::Other(e.to_string()))?;
    let m = h.space.dim(1);
    let l = b.deg0_dim();
    // flattened vectors of the length-1 words [f_i]
    let singletons: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            let rep = h.rep_of(1, &unit_vec(m, i));
            let mut v = vec![Q::zero(); l];
            for (k, c) in rep.iter().enumerate() {
                if !c.is_zero() {
                    // word [(1, k)] sits at level 1
                    let idx = b.deg0.iter().position(|(s, w)| *s == 1 && w[0] == (1, k)).unwrap();
                    v[idx] = c.clone();
                }
            }
            v
        })
        .collect();

    let mut matrices = Vec::new();
    let mut image = Vec::new();
    let mut img_acc: Vec<Vec<Q>> = Vec::new();
    let mut injective = true;
    // multisets of size k over 0..m
    for k in 0..=b.r_max {
        let multisets = gen_multisets(m, k);
        let mut cols = Vec::new();
        for ms in &multisets {
            let mut v = vec![Q::zero(); l];
            v[0] = Q::one(); // empty word = unit
            for &i in ms {
                v = b
                    .shuffle_deg0(&v, &singletons[i])
                    .ok_or_else(|| BarError::Other("phi-hat exceeded r_max".into()))?;
            }
            cols.push(v);
        }
        let mut mk = Mat::zero(report.h0_dim(), cols.len());
        for (j, v) in cols.iter().enumerate() {
            for (i, c) in report.class_of(v).into_iter().enumerate() {
                mk[(i, j)] = c;
            }
        }
        if mk.rank() != cols.len() {
            injective = false;
        }
        img_acc.extend(cols);
        matrices.push(mk);
        image.push(Subspace::span(l, &img_acc));
    }
    Ok(PhiHat { matrices, image, injective })
}

fn gen_multisets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if m == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i, m, k - 1, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Largest subspace S of B_level H^0 with symmetric coproduct and
/// Delta(S) inside S (x) S, by iterated intersection. Returned in the
/// flattened degree-0 coordinates of the full bar complex.
///
/// Works inside the coordinate prefix of words of length <= level: Delta of
/// such a vector only involves prefixes/suffixes of length <= level. The
/// condition Delta(x) in S (x) S is ker(Q (x) id) cap ker(id (x) Q) where Q
/// is the quotient projection by S, which avoids any pair-space reduction.
pub fn cocommutative_part(b: &BarComplex, report: &HopfReport, level: usize) -> Subspace {
    let l = b.deg0_dim();
    let k = b.deg0_offsets[level + 1];
    let cols: Vec<Vec<Q>> = (0..report.h0_dim())
        .filter(|&i| report.levels[i] <= level)
        .map(|i| report.basis.col(i)[..k].to_vec())
        .collect();
    let mut s = Subspace::span(k, &cols);
    loop {
        let cdim = s.dim();
        if cdim == 0 {
            break;
        }
        let (q, _) = s.quotient_projection();
        let mut constraint_rows: Vec<Vec<Q>> = Vec::new();
        // per basis vector j of s: coproduct matrix in the k-prefix
        let mut coprods: Vec<Mat> = Vec::new();
        for j in 0..cdim {
            let mut v = s.basis.col(j);
            v.resize(l, Q::zero());
            let m_full = b.coproduct_deg0(&v);
            let mut m = Mat::zero(k, k);
            for r in 0..k {
                for c in 0..k {
                    m[(r, c)] = m_full[(r, c)].clone();
                }
            }
            coprods.push(m);
        }
        // (i) symmetry: M - M^T = 0; (ii) Q M = 0; (iii) M Q^T = 0
        let row_count_sym = k * k;
        let qrows = q.rows;
        for r in 0..row_count_sym {
            let (a, bb) = (r / k, r % k);
            if a >= bb {
                continue; // skew symmetry needs upper triangle only
            }
            let row: Vec<Q> = coprods
                .iter()
                .map(|m| m[(a, bb)].clone() - m[(bb, a)].clone())
                .collect();
            if row.iter().any(|x| !x.is_zero()) {
                constraint_rows.push(row);
            }
        }
        for r in 0..qrows {
            for c in 0..k {
                let row: Vec<Q> = coprods
                    .iter()
                    .map(|m| (0..k).map(|t| &q[(r, t)] * &m[(t, c)]).sum::<Q>())
                    .collect();
                if row.iter().any(|x| !x.is_zero()) {
                    constraint_rows.push(row);
                }
                let row2: Vec<Q> = coprods
                    .iter()
                    .map(|m| (0..k).map(|t| &m[(c, t)] * &q[(r, t)]).sum::<Q>())
                    .collect();
                if row2.iter().any(|x| !x.is_zero()) {
                    constraint_rows.push(row2);
                }
            }
        }
        if constraint_rows.is_empty() {
            break;
        }
        let coef_kernel = Mat::from_rows(constraint_rows).kernel_basis();
        if coef_kernel.len() == cdim {
            break;
        }
        let keep: Vec<Vec<Q>> = coef_kernel.iter().map(|c| s.basis.mul_vec(c)).collect();
        s = Subspace::span(k, &keep);
    }
    // lift back to the full flattened coordinates
    let vecs: Vec<Vec<Q>> = (0..s.dim())
        .map(|j| {
            let mut v = s.basis.col(j);
            v.resize(l, Q::zero());
            v
        })
        .collect();
    Subspace::span(l, &vecs)
}

/// Check B_1 H^0 = Q + H^1(A) and primitivity of level-1 classes.
pub struct AbelianizationReport {
    pub b1_dim: usize,
    pub h1_dim: usize,
    pub level1_primitive: bool,
}

pub fn abelianization_check(b: &BarComplex, report: &HopfReport) -> Result<AbelianizationReport, BarError> {
    let h = cohomology(&b.base.complex()).map_err(|e| BarError::Other(e.to_string()))?;
    let h1 = h.space.dim(1);
    let b1 = report.b_dims.get(1).copied().unwrap_or(0);
    // level-1 classes primitive: reduced coproduct vanishes
    let n = report.h0_dim();
    let mut ok = true;
    for i in 0..n {
        if report.levels[i] != 1 {
            continue;
        }
        for &(j, k, ref c) in &report.coproduct[&i] {
            let expected = (j == i && report.levels[k] == 0) || (k == i && report.levels[j] == 0);
            if !expected && !c.is_zero() {
                ok = false;
            }
        }
    }
    Ok(AbelianizationReport { b1_dim: b1, h1_dim: h1, level1_primitive: ok })
}

/// Transfer a degree-0 derivation of A to H^0(B) by the slotwise sum rule.
pub struct TransferredDerivation {
    /// matrix on the flattened degree-0 word space
    pub on_words: Mat,
    /// matrix in H^0 basis coordinates
    pub on_h0: Mat,
    pub leibniz_ok: bool,
    pub co_leibniz_ok: bool,
}

fn slotwise_matrix(b: &BarComplex, f: &GradedMap) -> Mat {
    let l = b.deg0_dim();
    let pos: BTreeMap<&Word, usize> = b.deg0.iter().enumerate().map(|(i, (_, w))| (w, i)).collect();
    let mut m = Mat::zero(l, l);
    for (col, (_, w)) in b.deg0.iter().enumerate() {
        for slot in 0..w.len() {
            let (d, idx) = w[slot];
            let img = f.apply(d, &unit_vec(b.base.space.dim(d), idx));
            for (k, c) in img.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut ww = w.clone();
                ww[slot] = (d, k);
                if let Some(&row) = pos.get(&ww) {
                    m[(row, col)] = &m[(row, col)] + c;
                }
            }
        }
    }
    m
}

fn multiplicative_matrix(b: &BarComplex, f: &GradedMap) -> Mat {
    // [a1|...|as] -> [f a1|...|f as]
    let l = b.deg0_dim();
    let pos: BTreeMap<&Word, usize> = b.deg0.iter().enumerate().map(|(i, (_, w))| (w, i)).collect();
    let mut m = Mat::zero(l, l);
    for (col, (_, w)) in b.deg0.iter().enumerate() {
        // expand slotwise images multiplicatively
        let mut terms: Vec<(Word, Q)> = vec![(Word::new(), Q::one())];
        for &(d, idx) in w.iter() {
            let img = f.apply(d, &unit_vec(b.base.space.dim(d), idx));
            let mut next = Vec::new();
            for (prefix, c) in &terms {
                for (k, ck) in img.iter().enumerate() {
                    if ck.is_zero() {
                        continue;
                    }
                    let mut ww = prefix.clone();
                    ww.push((d, k));
                    next.push((ww, c * ck));
                }
            }
            terms = next;
        }
        for (ww, c) in terms {
            if let Some(&row) = pos.get(&ww) {
                m[(row, col)] = &m[(row, col)] + &c;
            }
        }
    }
    m
}

pub fn transfer_derivation(
    b: &BarComplex,
    report: &HopfReport,
    n: &Derivation,
) -> Result<TransferredDerivation, BarError> {
    n.validate(&b.base).map_err(|e| BarError::Other(e.to_string()))?;
    // N preserves the augmentation ideal: degree 0 must map to 0 under aug
    let n0 = n.map.block(0);
    let a0 = b.base.space.dim(0);
    for j in 0..a0 {
        let img = n0.col(j);
        if !b.aug.eval0(&img).is_zero() && b.aug.eval0(&unit_vec(a0, j)).is_zero() {
            return Err(BarError::DerivationIdeal);
        }
    }
    // unit must map to zero for the slotwise rule to define a Hopf derivation
    let img_unit = n.map.apply(0, &b.base.unit);
    if img_unit.iter().any(|x| !x.is_zero()) {
        return Err(BarError::DerivationIdeal);
    }
    let on_words = slotwise_matrix(b, &n.map);
    // descend to H^0: N of each basis cocycle must be a cocycle
    let (d0, _) = b.deg0_differential();
    let nb = on_words.mul(&report.basis);
    if !d0.mul(&nb).is_zero() {
        return Err(BarError::DoesNotDescend("N of a cocycle is not a cocycle".into()));
    }
    let on_h0 = report.pi.mul(&nb);
    // Leibniz on H^0
    let nh = report.h0_dim();
    let mut leibniz_ok = true;
    for i in 0..nh {
        for j in 0..nh {
            if report.levels[i] + report.levels[j] > b.r_max {
                continue;
            }
            let ei = unit_vec(nh, i);
            let ej = unit_vec(nh, j);
            let xy = report.mul(&ei, &ej, b.r_max).unwrap();
            let lhs = on_h0.mul_vec(&xy);
            let nx = on_h0.col(i);
            let ny = on_h0.col(j);
            let t1 = report.mul(&nx, &ej, b.r_max).unwrap();
            let t2 = report.mul(&ei, &ny, b.r_max).unwrap();
            let rhs: Vec<Q> = t1.iter().zip(&t2).map(|(x, y)| x + y).collect();
            if lhs != rhs {
                leibniz_ok = false;
            }
        }
    }
    // co-Leibniz: Delta N = (N (x) 1 + 1 (x) N) Delta, on flattened words
    let l = b.deg0_dim();
    let mut co_leibniz_ok = true;
    for i in 0..nh {
        let v = report.basis.col(i);
        let lhs = b.coproduct_deg0(&on_words.mul_vec(&v));
        let dm = b.coproduct_deg0(&v);
        let rhs = on_words.mul(&dm).add(&dm.mul(&on_words.transpose()));
        let _ = l;
        if lhs != rhs {
            co_leibniz_ok = false;
        }
    }
    Ok(TransferredDerivation { on_words, on_h0, leibniz_ok, co_leibniz_ok })
}

/// Transfer a Frobenius endomorphism multiplicatively to H^0(B).
pub fn transfer_frobenius(
    b: &BarComplex,
    report: &HopfReport,
    f: &Frobenius,
) -> Result<Mat, BarError> {
    f.validate(&b.base).map_err(|e| BarError::Other(e.to_string()))?;
    let on_words = multiplicative_matrix(b, &f.phi);
    let (d0, _) = b.deg0_differential();
    let fb = on_words.mul(&report.basis);
    if !d0.mul(&fb).is_zero() {
        return Err(BarError::DoesNotDescend("Phi of a cocycle is not a cocycle".into()));
    }
    Ok(report.pi.mul(&fb))
}

/// The convolution filtration B(P) on the flattened degree-0 word space:
/// a word of length s with letters in P-steps t_1..t_s sits in step
/// s + t_1 + ... + t_s. Requires P multiplicative and d-compatible.
pub struct BarWeights {
    /// filtration on the flattened degree-0 coordinates
    pub filt_deg0: Filtration,
    /// induced filtration dims on H^0: per weight w, dim W_w(H^0)
    pub h0_weight_dims: BTreeMap<i64, usize>,
    /// graded dims of H^0 per (level s, weight w)
    pub h0_gr_dims: BTreeMap<(usize, i64), usize>,
}

/// Validate that P is multiplicative on A: P_i A^da * P_j A^db lands in
/// P_{i+j} A^{da+db}.
pub fn check_multiplicative(a: &Cdga, p: &Filtration) -> Result<(), BarError> {
    for &da in &a.space.degrees() {
        for &db in &a.space.degrees() {
            for i in p.wmin..=p.wmax {
                for j in p.wmin..=p.wmax {
                    let sa = p.at(da, i);
                    let sb = p.at(db, j);
                    if sa.dim() == 0 || sb.dim() == 0 {
                        continue;
                    }
                    let tgt = p.at(da + db, i + j);
                    for ca in 0..sa.dim() {
                        for cb in 0..sb.dim() {
                            let prod =
                                a.mul_elem(da, &sa.basis.col(ca), db, &sb.basis.col(cb));
                            if prod.iter().all(|x| x.is_zero()) {
                                continue;
                            }
                            if !tgt.contains(&prod) {
                                return Err(BarError::NotMultiplicative(i, j, i + j));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Convolution filtration of P over the slots of each word, shifted by the
/// bar level, restricted to the degree-0 part.
pub fn bar_of_filtered(b: &BarComplex, p: &Filtration) -> Result<BarWeights, BarError> {
    check_multiplicative(&b.base, p)?;
    // d-compatibility on A
    for &deg in &b.base.space.degrees() {
        for w in p.wmin..=p.wmax {
            let img = p.at(deg, w).image_under(&b.base.d.block(deg));
            if !p.at(deg + 1, w).contains_subspace(&img) {
                return Err(BarError::Other(format!(
                    "filtration not d-compatible at degree {deg}, step {w}"
                )));
            }
        }
    }
    let l = b.deg0_dim();
    let wmin = 0i64; // the level-0 unit sits at weight 0
    let wmax = b.r_max as i64 * (1 + p.wmax.max(0));
    let space = GradedSpace::single(0, (0..l).map(|i| format!("w{i}")).collect());
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    // unit word at weight 0
    {
        let mut v = vec![Q::zero(); l];
        v[0] = Q::one();
        spans.entry(0).or_default().entry(0).or_default().push(v);
    }
    // pure-slot tensors of P-step basis vectors; degree-0 words of length s
    // have all letters in A^1
    fn build_combos(
        p: &Filtration,
        asg: &[i64],
        slot: usize,
        cur: Vec<(Word, Q)>,
        out: &mut Vec<Vec<(Word, Q)>>,
    ) {
        if slot == asg.len() {
            out.push(cur);
            return;
        }
        let step = p.at(1, asg[slot]);
        for cb in 0..step.dim() {
            let col = step.basis.col(cb);
            let mut next = Vec::new();
            for (w, c) in &cur {
                for (letter, cl) in col.iter().enumerate() {
                    if cl.is_zero() {
                        continue;
                    }
                    let mut ww = w.clone();
                    ww.push((1, letter));
                    next.push((ww, c * cl));
                }
            }
            build_combos(p, asg, slot + 1, next, out);
        }
    }
    for s in 1..=b.r_max {
        let lo = b.deg0_offsets[s];
        let hi = b.deg0_offsets[s + 1];
        if lo == hi {
            continue;
        }
        let pos: BTreeMap<&Word, usize> =
            b.deg0[lo..hi].iter().enumerate().map(|(i, (_, w))| (w, lo + i)).collect();
        let mut assignments: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..s {
            let mut next = Vec::new();
            for a in &assignments {
                for t in p.wmin..=p.wmax {
                    let mut aa = a.clone();
                    aa.push(t);
                    next.push(aa);
                }
            }
            assignments = next;
        }
        for asg in &assignments {
            let w_total = s as i64 + asg.iter().sum::<i64>();
            let mut combos: Vec<Vec<(Word, Q)>> = Vec::new();
            build_combos(p, asg, 0, vec![(Word::new(), Q::one())], &mut combos);
            let mut flat: Vec<Vec<Q>> = Vec::new();
            for combo in combos {
                let mut v = vec![Q::zero(); l];
                let mut nonzero = false;
                for (w, c) in combo {
                    if let Some(&ix) = pos.get(&w) {
                        v[ix] = &v[ix] + &c;
                        nonzero = true;
                    }
                }
                if nonzero {
                    flat.push(v);
                }
            }
            spans.entry(0).or_default().entry(w_total).or_default().extend(flat);
        }
    }
    let filt_deg0 = Filtration::from_spans(&space, wmin, wmax, spans);
    Ok(BarWeights { filt_deg0, h0_weight_dims: BTreeMap::new(), h0_gr_dims: BTreeMap::new() })
}

/// Induced weight filtration on H^0 from a convolution filtration, with
/// graded dims per (level, weight).
pub fn weight_on_h0(b: &BarComplex, report: &HopfReport, weights: &mut BarWeights) {
    let l = b.deg0_dim();
    let z = Subspace { ambient: l, basis: report.basis.clone() };
    let mut prev = 0usize;
    for w in weights.filt_deg0.wmin..=weights.filt_deg0.wmax {
        let cur = z.intersect(&weights.filt_deg0.at(0, w));
        weights.h0_weight_dims.insert(w, cur.dim());
        let _ = prev;
        prev = cur.dim();
    }
    // graded per (level, weight)
    for s in 0..=b.r_max {
        let k = b.deg0_offsets[s + 1];
        let k_lo = b.deg0_offsets[s];
        let _ = k_lo;
        let zs = {
            let cols: Vec<Vec<Q>> = (0..report.h0_dim())
                .filter(|&i| report.levels[i] <= s)
                .map(|i| report.basis.col(i))
                .collect();
            Subspace::span(l, &cols)
        };
        let _ = k;
        let mut below = 0usize;
        for w in weights.filt_deg0.wmin..=weights.filt_deg0.wmax {
            let cur = zs.intersect(&weights.filt_deg0.at(0, w)).dim();
            if cur > below {
                weights.h0_gr_dims.insert((s, w), cur - below);
            }
            below = cur;
        }
    }
}

// ---------------------------------------------------------------------------
// Mixed Frobenius structure on the bar complex
// ---------------------------------------------------------------------------

use crate::filt::{check_mfc, MfcReport, MixedFrobeniusAlgebra, MixedFrobeniusComplex};

/// Bar complexes of a mixed Frobenius algebra: B(M), B(N) with the
/// convolution weight filtration and the slot-multiplicative Frobenii and
/// comparison map, checked as a mixed Frobenius complex.
#[derive(Clone, Debug)]
pub struct MixedBar {
    pub bm: BarComplex,
    pub bn: BarComplex,
    pub mfc: MixedFrobeniusComplex,
    pub report: MfcReport,
}

/// The map B(f) on total bar complexes induced slotwise by a degree-0
/// algebra map f: letters map independently, [a1|...|as] -> [fa1|...|fas].
fn total_multiplicative_map(
    src: &BarComplex,
    tsrc: &TotalBar,
    tgt: &BarComplex,
    ttgt: &TotalBar,
    f: &GradedMap,
) -> GradedMap {
    let mut out = GradedMap::zero(
        tsrc.complex.space.clone(),
        ttgt.complex.space.clone(),
        0,
    );
    for (&n, ks) in &tsrc.keys {
        let mut m = Mat::zero(ttgt.complex.space.dim(n), ks.len());
        for (col, &(s, t, i)) in ks.iter().enumerate() {
            let w = &src.words[&(s, t)][i];
            let mut terms: Vec<(Word, Q)> = vec![(Word::new(), Q::one())];
            for &(d, idx) in w {
                let img = f.apply(d, &unit_vec(src.base.space.dim(d), idx));
                let mut next = Vec::new();
                for (ww, c) in &terms {
                    for (k, cl) in img.iter().enumerate() {
                        if cl.is_zero() {
                            continue;
                        }
                        let mut w2 = ww.clone();
                        w2.push((d, k));
                        next.push((w2, c * cl));
                    }
                }
                terms = next;
            }
            for (w2, c) in terms {
                if let Some(&idx2) = tgt.index.get(&(s, t)).and_then(|m| m.get(&w2)) {
                    let (_, row) = ttgt.pos[&(s, t, idx2)];
                    m[(row, col)] = &m[(row, col)] + &c;
                }
            }
        }
        out.set_block(n, m);
    }
    out
}

/// Convolution filtration on the total bar complex: a pure tensor of
/// letters v_j in P_{w_j}(A^{d_j}) sits at step s + sum w_j (each bar slot
/// contributes its weight step plus one).
fn bar_convolution_filtration(b: &BarComplex, tb: &TotalBar, p: &Filtration) -> Filtration {
    #[allow(clippy::too_many_arguments)]
    fn combos(
        p: &Filtration,
        degrees: &[i64],
        s: usize,
        t: i64,
        slot: usize,
        deg_so_far: i64,
        step_so_far: i64,
        cur: Vec<(Word, Q)>,
        out: &mut Vec<(i64, Vec<(Word, Q)>)>,
    ) {
        if slot == s {
            if deg_so_far == t {
                out.push((s as i64 + step_so_far, cur));
            }
            return;
        }
        for &d in degrees {
            if deg_so_far + d > t {
                continue;
            }
            for wj in p.wmin..=p.wmax {
                let step = p.at(d, wj);
                for cb in 0..step.dim() {
                    let col = step.basis.col(cb);
                    let mut next = Vec::new();
                    for (w, c) in &cur {
                        for (k, cl) in col.iter().enumerate() {
                            if cl.is_zero() {
                                continue;
                            }
                            let mut ww = w.clone();
                            ww.push((d, k));
                            next.push((ww, c * cl));
                        }
                    }
                    if next.is_empty() {
                        continue;
                    }
                    combos(p, degrees, s, t, slot + 1, deg_so_far + d, step_so_far + wj, next, out);
                }
            }
        }
    }
    let degrees: Vec<i64> = b.base.space.degrees().into_iter().filter(|&d| d >= 1).collect();
    let smax = b.r_max as i64;
    let wmin = (0..=smax).map(|s| s * (1 + p.wmin)).min().unwrap_or(0).min(0);
    let wmax = (0..=smax).map(|s| s * (1 + p.wmax)).max().unwrap_or(0).max(0);
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    for (&(s, t), ws) in &b.words {
        let n = t - s as i64;
        let dim_n = tb.complex.space.dim(n);
        let mut out = Vec::new();
        combos(p, &degrees, s, t, 0, 0, 0, vec![(Word::new(), Q::one())], &mut out);
        let idx = &b.index[&(s, t)];
        let _ = ws;
        for (w_total, expansion) in out {
            let mut v = vec![Q::zero(); dim_n];
            let mut nonzero = false;
            for (w2, c) in expansion {
                if let Some(&i) = idx.get(&w2) {
                    let (_, row) = tb.pos[&(s, t, i)];
                    v[row] = &v[row] + &c;
                    nonzero = true;
                }
            }
            if nonzero {
                spans.entry(n).or_default().entry(w_total).or_default().push(v);
            }
        }
    }
    Filtration::from_spans(&tb.complex.space, wmin, wmax, spans)
}

/// Build the mixed Frobenius complex (B(M), B(N), B(P)) of an augmented
/// mixed Frobenius algebra and run the full check.
pub fn mixed_bar(mfa: &MixedFrobeniusAlgebra, r_max: usize) -> Result<MixedBar, BarError> {
    let aug_m = Augmentation::connected(&mfa.m).map_err(|_| BarError::NotConnected)?;
    let aug_n = Augmentation::connected(&mfa.n).map_err(|_| BarError::NotConnected)?;
    let bm = build_bar(&mfa.m, &aug_m, r_max)?;
    let bn = build_bar(&mfa.n, &aug_n, r_max)?;
    let tm = bm.total_complex();
    let tn = bn.total_complex();
    let m_frob = total_multiplicative_map(&bm, &tm, &bm, &tm, &mfa.m_frob.phi);
    let n_frob = total_multiplicative_map(&bn, &tn, &bn, &tn, &mfa.n_frob.phi);
    let qis = total_multiplicative_map(&bm, &tm, &bn, &tn, &mfa.qis);
    let filt = bar_convolution_filtration(&bn, &tn, &mfa.n_filt);
    let mfc = MixedFrobeniusComplex {
        m: tm.complex,
        m_frob,
        n: crate::filt::FilteredComplex { complex: tn.complex, filt },
        n_frob,
        qis,
        p: mfa.n_frob.p,
        d_exp: mfa.n_frob.d_exp,
    };
    let report = check_mfc(&mfc).map_err(|e| BarError::Other(e.to_string()))?;
    Ok(MixedBar { bm, bn, mfc, report })
}
