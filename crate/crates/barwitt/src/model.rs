//! TOML model files: a declarative description of a CDGA (free graded-
//! commutative on generators modulo relations, or an explicit basis with
//! structure constants), optionally decorated with a theta-extension,
//! Frobenius data, weight assignments, and a nerve diagram.
//!
//! Parsing produces a [`ModelFile`]; [`ModelFile::build`] normalizes either
//! declaration style to structure constants and assembles the decorated
//! objects. Validation is deliberately left to the consumers (`check` runs
//! every module validator), so defective models parse and build but fail
//! their specific axiom with a located witness.

use crate::cdga::{Cdga, Frobenius, MultTable, ThetaExtension};
use crate::cosimp::NerveInput;
use crate::filt::Filtration;
use crate::fixtures::{diagonal_from_labels, label_projection, points};
use crate::free::{parse_poly, Element, FreeModel};
use crate::gla::{GradedMap, GradedSpace};
use crate::matrix::{Mat, Q};
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty model: no generators, basis, or nerve declared")]
    EmptyModel,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("bad rational literal '{0}'")]
    BadRational(String),
    #[error("unknown generator '{0}' in {1}")]
    UnknownGenerator(String, String),
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("matrix for {0} has wrong shape: expected {1}x{2}, got {3}x{4}")]
    BadShape(String, usize, usize, usize, usize),
    #[error("{0}")]
    Build(String),
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// "free" (default): free graded-commutative on `generators` modulo
    /// `relations`, truncated at `top_degree`. "table": explicit `space`,
    /// `unit`, `d`, `product` blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_degree: Option<i64>,
    /// unit coordinates in degree 0 (table mode); rationals as "num/den"
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<String>,
    /// generator label -> differential polynomial (free mode)
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub differential: BTreeMap<String, String>,
    /// generator label -> integer weight; extended additively to monomials
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub space: Vec<SpaceBlock>,
    #[serde(default, rename = "d", skip_serializing_if = "Vec::is_empty")]
    pub d_blocks: Vec<MatrixBlock>,
    #[serde(default, rename = "product", skip_serializing_if = "Vec::is_empty")]
    pub products: Vec<ProductEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<FrobeniusBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nerve: Option<NerveBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub label: String,
    pub degree: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceBlock {
    pub degree: i64,
    pub labels: Vec<String>,
}

/// A matrix attached to a degree: for `d` blocks, the map from degree
/// `degree` to `degree + 1` (rows indexed by the target basis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub degree: i64,
    pub matrix: Vec<Vec<String>>,
}

/// Structure constant: e_{idx_a} (deg_a) * e_{idx_b} (deg_b) = the vector
/// `value` in degree deg_a + deg_b. Unlisted pairs are zero, except pairs
/// with a degree-0 factor, which default to unit scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub deg_a: i64,
    pub idx_a: usize,
    pub deg_b: i64,
    pub idx_b: usize,
    pub value: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaBlock {
    /// degree-1 generator spanning the kernel of the projection to the base
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrobeniusBlock {
    pub p: u64,
    pub d_exp: u32,
    /// diagonal action: generator label -> integer scale, extended
    /// multiplicatively to monomials (free mode)
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scales: BTreeMap<String, i64>,
    /// explicit matrix blocks per degree; unspecified degrees act as the
    /// identity
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocks: Vec<MatrixBlock>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerveBlock {
    /// number of covering components; subsets are increasing index lists
    pub cover_size: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<NervePatch>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub restrictions: Vec<NerveRestriction>,
}

/// A patch (or overlap): the algebra of functions on `points` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NervePatch {
    pub subset: Vec<usize>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerveRestriction {
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub matrix: Vec<Vec<String>>,
}

// ---------------------------------------------------------------------------
// Parse / emit
// ---------------------------------------------------------------------------

pub fn parse_str(s: &str) -> Result<ModelFile, ModelError> {
    toml::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))
}

pub fn parse(path: &Path) -> Result<ModelFile, ModelError> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
    parse_str(&s)
}

/// Serialize back to TOML; `parse_str(&emit(m)) == *m` for any parsed model.
pub fn emit(m: &ModelFile) -> String {
    toml::to_string_pretty(m).expect("model serializes")
}

fn rational(s: &str) -> Result<Q, ModelError> {
    Q::from_str(s.trim()).map_err(|_| ModelError::BadRational(s.to_string()))
}

fn matrix(rows: &[Vec<String>], what: &str, nrows: usize, ncols: usize) -> Result<Mat, ModelError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        let got_r = rows.len();
        let got_c = rows.first().map_or(0, |r| r.len());
        return Err(ModelError::BadShape(what.into(), nrows, ncols, got_r, got_c));
    }
    let mut parsed = Vec::with_capacity(nrows);
    for r in rows {
        let mut row = Vec::with_capacity(ncols);
        for c in r {
            row.push(rational(c)?);
        }
        parsed.push(row);
    }
    Ok(Mat::from_rows(parsed))
}

// ---------------------------------------------------------------------------
// Build
// ---------------------------------------------------------------------------

/// Everything a model file describes, normalized to the module types.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub name: String,
    /// the full algebra (the total algebra when a theta block is present)
    pub algebra: Option<Cdga>,
    pub theta: Option<ThetaExtension>,
    /// Frobenius on `algebra`
    pub frobenius: Option<Frobenius>,
    /// weight filtration on the base (theta models) or on `algebra`
    pub weights: Option<Filtration>,
    pub nerve: Option<NerveInput>,
}

impl ModelFile {
    pub fn build(&self) -> Result<BuiltModel, ModelError> {
        let mode = self.mode.as_deref().unwrap_or("free");
        let has_algebra = match mode {
            "free" => !self.generators.is_empty(),
            "table" => !self.space.is_empty(),
            other => return Err(ModelError::Parse(format!("unknown mode '{other}'"))),
        };
        if !has_algebra && self.nerve.is_none() {
            return Err(ModelError::EmptyModel);
        }
        let (algebra, free_model) = if has_algebra {
            match mode {
                "free" => {
                    let (a, fm) = self.build_free()?;
                    (Some(a), Some(fm))
                }
                _ => (Some(self.build_table()?), None),
            }
        } else {
            (None, None)
        };
        let theta = match (&self.theta, &algebra, &free_model) {
            (Some(t), Some(a), Some(fm)) => Some(self.build_theta(t, a, fm)?),
            (Some(_), _, None) => {
                return Err(ModelError::Parse(
                    "theta blocks require a free-mode model".into(),
                ))
            }
            _ => None,
        };
        let frobenius = match (&self.frobenius, &algebra) {
            (Some(f), Some(a)) => Some(self.build_frobenius(f, a)?),
            (Some(_), None) => return Err(ModelError::MissingField("generators (frobenius)")),
            _ => None,
        };
        let weights = if self.weights.is_empty() {
            None
        } else {
            let carrier = theta
                .as_ref()
                .map(|t| &t.base)
                .or(algebra.as_ref())
                .ok_or(ModelError::MissingField("generators (weights)"))?;
            Some(self.build_weights(carrier)?)
        };
        let nerve = match &self.nerve {
            Some(n) => Some(self.build_nerve(n)?),
            None => None,
        };
        Ok(BuiltModel {
            name: self.name.clone().unwrap_or_else(|| "model".into()),
            algebra,
            theta,
            frobenius,
            weights,
            nerve,
        })
    }

    fn build_free(&self) -> Result<(Cdga, FreeModel), ModelError> {
        let top = self.top_degree.ok_or(ModelError::MissingField("top_degree"))?;
        let gens: Vec<(String, i64)> =
            self.generators.iter().map(|g| (g.label.clone(), g.degree)).collect();
        let mut fm = FreeModel::new(gens, top);
        for (label, expr) in &self.differential {
            let i = fm.gen_index(label).ok_or_else(|| {
                ModelError::UnknownGenerator(label.clone(), "differential".into())
            })?;
            fm.d_gens[i] = parse_poly(expr, &fm).map_err(ModelError::Parse)?;
        }
        for r in &self.relations {
            fm.relations.push(parse_poly(r, &fm).map_err(ModelError::Parse)?);
        }
        let a = fm.build().map_err(|e| ModelError::Build(e.to_string()))?;
        Ok((a, fm))
    }

    fn build_table(&self) -> Result<Cdga, ModelError> {
        let mut basis = BTreeMap::new();
        for b in &self.space {
            basis.insert(b.degree, b.labels.clone());
        }
        let space = GradedSpace { basis };
        let dim0 = space.dim(0);
        let unit_strs = self.unit.as_ref().ok_or(ModelError::MissingField("unit"))?;
        if unit_strs.len() != dim0 {
            return Err(ModelError::BadShape("unit".into(), 1, dim0, 1, unit_strs.len()));
        }
        let unit: Vec<Q> = unit_strs
            .iter()
            .map(|s| rational(s))
            .collect::<Result<_, _>>()?;
        let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
        for blk in &self.d_blocks {
            let m = matrix(
                &blk.matrix,
                &format!("d at degree {}", blk.degree),
                space.dim(blk.degree + 1),
                space.dim(blk.degree),
            )?;
            d.set_block(blk.degree, m);
        }
        let mut mult = MultTable::new();
        for p in &self.products {
            let out = space.dim(p.deg_a + p.deg_b);
            if p.value.len() != out {
                return Err(ModelError::BadShape(
                    format!("product ({},{})*({},{})", p.deg_a, p.idx_a, p.deg_b, p.idx_b),
                    1,
                    out,
                    1,
                    p.value.len(),
                ));
            }
            let mut entry = Vec::new();
            for (k, s) in p.value.iter().enumerate() {
                let c = rational(s)?;
                if !c.is_zero() {
                    entry.push((k, c));
                }
            }
            mult.insert((p.deg_a, p.idx_a, p.deg_b, p.idx_b), entry);
        }
        // default: pairs with a degree-0 factor scale by the unit coefficient
        if dim0 == 1 && !unit[0].is_zero() {
            let inv = unit[0].recip();
            for &deg in space.basis.keys() {
                for i in 0..space.dim(deg) {
                    for key in [(0i64, 0usize, deg, i), (deg, i, 0, 0)] {
                        mult.entry(key).or_insert_with(|| vec![(i, inv.clone())]);
                    }
                }
            }
        }
        Ok(Cdga { space, d, unit, mult })
    }

    fn build_theta(
        &self,
        t: &ThetaBlock,
        total: &Cdga,
        fm: &FreeModel,
    ) -> Result<ThetaExtension, ModelError> {
        let gi = fm
            .gen_index(&t.label)
            .ok_or_else(|| ModelError::UnknownGenerator(t.label.clone(), "theta".into()))?;
        let theta_deg = fm.gens[gi].1;
        // the base: generators minus theta, differentials/relations with
        // theta-monomials dropped, truncated one theta-degree lower
        let base_gens: Vec<(String, i64)> = fm
            .gens
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != gi)
            .map(|(_, g)| g.clone())
            .collect();
        let remap = |e: &Element| -> Element {
            let mut out = Element::new();
            for (m, c) in e {
                if m.iter().any(|&(g, _)| g == gi) {
                    continue;
                }
                let mm: Vec<(usize, u32)> = m
                    .iter()
                    .map(|&(g, e)| (if g > gi { g - 1 } else { g }, e))
                    .collect();
                out.insert(mm, c.clone());
            }
            out
        };
        let mut bm = FreeModel::new(base_gens, fm.top - theta_deg);
        for (i, dg) in fm.d_gens.iter().enumerate() {
            if i == gi {
                continue;
            }
            let j = if i > gi { i - 1 } else { i };
            bm.d_gens[j] = remap(dg);
        }
        for r in &fm.relations {
            let rr = remap(r);
            if !rr.is_empty() {
                bm.relations.push(rr);
            }
        }
        let base = bm.build().map_err(|e| ModelError::Build(e.to_string()))?;
        let proj = label_projection(total, &base, &t.label);
        let idx = total
            .space
            .labels(1)
            .iter()
            .position(|l| l == &t.label)
            .ok_or_else(|| ModelError::UnknownGenerator(t.label.clone(), "degree 1".into()))?;
        let mut theta = vec![Q::zero(); total.space.dim(1)];
        theta[idx] = Q::one();
        Ok(ThetaExtension { total: total.clone(), base, theta, proj })
    }

    fn build_frobenius(&self, f: &FrobeniusBlock, a: &Cdga) -> Result<Frobenius, ModelError> {
        let phi = if !f.scales.is_empty() {
            // every generator must have a scale; check before the fixture
            // helper (which panics)
            for g in &self.generators {
                if !f.scales.contains_key(&g.label) {
                    return Err(ModelError::UnknownGenerator(
                        g.label.clone(),
                        "frobenius.scales".into(),
                    ));
                }
            }
            let scales: BTreeMap<&str, i64> =
                f.scales.iter().map(|(k, &v)| (k.as_str(), v)).collect();
            diagonal_from_labels(a, &scales)
        } else {
            let mut phi = GradedMap::zero(a.space.clone(), a.space.clone(), 0);
            let mut given: BTreeMap<i64, Mat> = BTreeMap::new();
            for blk in &f.blocks {
                let n = a.space.dim(blk.degree);
                given.insert(
                    blk.degree,
                    matrix(&blk.matrix, &format!("frobenius at degree {}", blk.degree), n, n)?,
                );
            }
            for &deg in a.space.basis.keys() {
                let m = given
                    .remove(&deg)
                    .unwrap_or_else(|| Mat::identity(a.space.dim(deg)));
                phi.set_block(deg, m);
            }
            phi
        };
        Ok(Frobenius { phi, p: f.p, d_exp: f.d_exp })
    }

    fn build_weights(&self, a: &Cdga) -> Result<Filtration, ModelError> {
        let weight_of = |label: &str| -> Result<i64, ModelError> {
            if label == "1" {
                return Ok(0);
            }
            let mut w = 0i64;
            for factor in label.split('*') {
                let (name, exp) = match factor.split_once('^') {
                    Some((n, e)) => (
                        n,
                        e.parse::<i64>()
                            .map_err(|_| ModelError::Parse(format!("bad label '{label}'")))?,
                    ),
                    None => (factor, 1),
                };
                let gw = self.weights.get(name).ok_or_else(|| {
                    ModelError::UnknownGenerator(name.to_string(), "weights".into())
                })?;
                w += gw * exp;
            }
            Ok(w)
        };
        let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
        let mut wmin = i64::MAX;
        let mut wmax = i64::MIN;
        for &deg in a.space.basis.keys() {
            let labels = a.space.labels(deg);
            for (i, label) in labels.iter().enumerate() {
                let step = weight_of(label)? - deg;
                wmin = wmin.min(step);
                wmax = wmax.max(step);
                let mut v = vec![Q::zero(); labels.len()];
                v[i] = Q::one();
                spans.entry(deg).or_default().entry(step).or_default().push(v);
            }
        }
        if wmin > wmax {
            wmin = 0;
            wmax = 0;
        }
        Ok(Filtration::from_spans(&a.space, wmin, wmax, spans))
    }

    fn build_nerve(&self, n: &NerveBlock) -> Result<NerveInput, ModelError> {
        if n.patches.is_empty() {
            return Err(ModelError::MissingField("nerve.patches"));
        }
        let mut algebras = BTreeMap::new();
        for (k, p) in n.patches.iter().enumerate() {
            let prefix = format!("p{k}_");
            algebras.insert(p.subset.clone(), points(p.points, &prefix));
        }
        let mut restrictions = BTreeMap::new();
        for r in &n.restrictions {
            let src = algebras
                .get(&r.from)
                .ok_or_else(|| ModelError::Parse(format!("unknown patch {:?}", r.from)))?;
            let tgt = algebras
                .get(&r.to)
                .ok_or_else(|| ModelError::Parse(format!("unknown patch {:?}", r.to)))?;
            let m = matrix(
                &r.matrix,
                &format!("restriction {:?} -> {:?}", r.from, r.to),
                tgt.space.dim(0),
                src.space.dim(0),
            )?;
            let mut f = GradedMap::zero(src.space.clone(), tgt.space.clone(), 0);
            f.set_block(0, m);
            restrictions.insert((r.from.clone(), r.to.clone()), f);
        }
        Ok(NerveInput { c: n.cover_size, algebras, restrictions })
    }
}
