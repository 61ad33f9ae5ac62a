//! Shared example models: one-generator exterior algebra, the free
//! 2-generator model, torus, genus-2 surface, and the Kummer-type
//! theta-extension, with their Frobenius and weight data.

use crate::cdga::{Cdga, Frobenius, ThetaExtension};
use crate::cosimp::NerveInput;
use crate::filt::Filtration;
use crate::free::{parse_poly, FreeModel};
use crate::gla::GradedMap;
use crate::matrix::{qi, Mat, Q, Subspace};
use num::{One, Zero};
use std::collections::BTreeMap;

/// Lambda(e), |e| = 1, d = 0.
pub fn lambda_e() -> Cdga {
    FreeModel::new(vec![("e".into(), 1)], 1).build().expect("lambda_e builds")
}

/// Free 2-generator model: V = Q^2 in degree 1, all products of positive
/// elements zero (realized as Lambda(e1, e2)/(e1 e2)).
pub fn free2() -> Cdga {
    let mut m = FreeModel::new(vec![("x1".into(), 1), ("x2".into(), 1)], 2);
    let rel = parse_poly("x1*x2", &m).expect("relation parses");
    m.relations.push(rel);
    m.build().expect("free2 builds")
}

/// Torus model Lambda(e1, e2).
pub fn torus() -> Cdga {
    FreeModel::new(vec![("e1".into(), 1), ("e2".into(), 1)], 2).build().expect("torus builds")
}

/// Frobenius on the torus with characteristic polynomial x^2 - 2x + 5 on
/// H^1 (q = 5, weight 1) and multiplicative extension (determinant 5 on H^2).
pub fn torus_frobenius(a: &Cdga) -> Frobenius {
    let mut phi = GradedMap::zero(a.space.clone(), a.space.clone(), 0);
    phi.set_block(0, Mat::identity(1));
    phi.set_block(1, Mat::from_rows(vec![vec![qi(0), qi(-5)], vec![qi(1), qi(2)]]));
    phi.set_block(2, Mat::from_rows(vec![vec![qi(5)]]));
    Frobenius { phi, p: 5, d_exp: 1 }
}

/// Genus-2 surface model: Lambda(a1, b1, a2, b2) modulo the relations
/// a1a2, a1b2, a2b1, b1b2, a1b1 - a2b2; dims {0:1, 1:4, 2:1}, d = 0.
pub fn genus2() -> Cdga {
    let mut m = FreeModel::new(
        vec![("a1".into(), 1), ("b1".into(), 1), ("a2".into(), 1), ("b2".into(), 1)],
        2,
    );
    for r in ["a1*a2", "a1*b2", "a2*b1", "b1*b2", "a1*b1 - a2*b2"] {
        m.relations.push(parse_poly(r, &m).expect("relation parses"));
    }
    m.build().expect("genus2 builds")
}

/// The weight filtration with every class of weight equal to its degree
/// (smooth proper situation): a single step at index 0.
pub fn pure_weight_filtration(a: &Cdga) -> Filtration {
    Filtration::trivial(&a.space, 0)
}

/// Kummer-type model: A~ = Lambda(theta, y, z) with dy = theta z, the base
/// A = Lambda(y, z), and the projection killing theta.
pub fn kummer() -> ThetaExtension {
    let mut tm = FreeModel::new(
        vec![("theta".into(), 1), ("y".into(), 1), ("z".into(), 1)],
        3,
    );
    tm.d_gens[1] = parse_poly("theta*z", &tm).expect("dy parses");
    let total = tm.build().expect("kummer total builds");
    let base = FreeModel::new(vec![("y".into(), 1), ("z".into(), 1)], 2)
        .build()
        .expect("kummer base builds");
    let proj = label_projection(&total, &base, "theta");
    let theta_idx = total
        .space
        .labels(1)
        .iter()
        .position(|l| l == "theta")
        .expect("theta present");
    let mut theta = vec![Q::zero(); total.space.dim(1)];
    theta[theta_idx] = Q::one();
    ThetaExtension { total, base, theta, proj }
}

/// Frobenius on the Kummer total algebra: Phi(theta) = 2 theta,
/// Phi(y) = 2y, Phi(z) = z, extended multiplicatively (p = 2).
pub fn kummer_frobenius(total: &Cdga) -> Frobenius {
    let scales: BTreeMap<&str, i64> = [("theta", 2), ("y", 2), ("z", 1)].into_iter().collect();
    let phi = diagonal_from_labels(total, &scales);
    Frobenius { phi, p: 2, d_exp: 1 }
}

/// Weight filtration on the Kummer base A = Lambda(y, z): weights
/// y = 2, z = 0, yz = 2; filtration step = weight - degree.
pub fn kummer_weights(base: &Cdga) -> Filtration {
    let mut spans: BTreeMap<i64, BTreeMap<i64, Vec<Vec<Q>>>> = BTreeMap::new();
    let y = label_vec(base, 1, "y");
    let z = label_vec(base, 1, "z");
    spans.entry(0).or_default().insert(0, vec![vec![Q::one()]]);
    spans.entry(1).or_default().insert(-1, vec![z]);
    spans.entry(1).or_default().insert(1, vec![y]);
    spans.entry(2).or_default().insert(0, vec![vec![Q::one()]]);
    Filtration::from_spans(&base.space, -1, 1, spans)
}

fn label_vec(a: &Cdga, deg: i64, label: &str) -> Vec<Q> {
    let idx = a
        .space
        .labels(deg)
        .iter()
        .position(|l| l == label)
        .unwrap_or_else(|| panic!("label {label} in degree {deg}"));
    let mut v = vec![Q::zero(); a.space.dim(deg)];
    v[idx] = Q::one();
    v
}

/// Projection killing every monomial label containing `kill` and matching
/// the remaining labels by name.
pub fn label_projection(total: &Cdga, base: &Cdga, kill: &str) -> GradedMap {
    let mut proj = GradedMap::zero(total.space.clone(), base.space.clone(), 0);
    for &deg in total.space.basis.keys() {
        let mut m = Mat::zero(base.space.dim(deg), total.space.dim(deg));
        for (j, label) in total.space.labels(deg).iter().enumerate() {
            if label.split('*').any(|f| f == kill) {
                continue;
            }
            if let Some(i) = base.space.labels(deg).iter().position(|l| l == label) {
                m[(i, j)] = Q::one();
            }
        }
        proj.set_block(deg, m);
    }
    proj
}

/// Diagonal endomorphism scaling each monomial basis label by the product of
/// per-generator integer scales.
pub fn diagonal_from_labels(a: &Cdga, scales: &BTreeMap<&str, i64>) -> GradedMap {
    let mut phi = GradedMap::zero(a.space.clone(), a.space.clone(), 0);
    for &deg in a.space.basis.keys() {
        let n = a.space.dim(deg);
        let mut m = Mat::zero(n, n);
        for (j, label) in a.space.labels(deg).iter().enumerate() {
            let mut c = Q::one();
            if label != "1" {
                for factor in label.split('*') {
                    let name = factor.split('^').next().unwrap();
                    let s = scales
                        .get(name)
                        .unwrap_or_else(|| panic!("no scale for generator {name}"));
                    c = c * qi(*s);
                }
            }
            m[(j, j)] = c;
        }
        phi.set_block(deg, m);
    }
    phi
}

/// Subspace helper: the span of one labeled basis vector.
pub fn label_span(a: &Cdga, deg: i64, labels: &[&str]) -> Subspace {
    let vecs: Vec<Vec<Q>> = labels.iter().map(|l| label_vec(a, deg, l)).collect();
    Subspace::span(a.space.dim(deg), &vecs)
}

/// The algebra of Q-valued functions on n points (degree 0, pointwise
/// product, unit = all ones).
pub fn points(n: usize, prefix: &str) -> Cdga {
    let labels: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let space = crate::gla::GradedSpace::single(0, labels);
    let d = GradedMap::zero(space.clone(), space.clone(), 1);
    let mut mult = crate::cdga::MultTable::new();
    for i in 0..n {
        mult.insert((0, i, 0, i), vec![(i, Q::one())]);
    }
    Cdga { space, d, unit: vec![Q::one(); n], mult }
}

/// Two contractible components glued along two intersection points: the nerve
/// computes circle cohomology (H^0 = H^1 = Q).
pub fn circle_nerve() -> NerveInput {
    let a0 = points(1, "a");
    let a1 = points(1, "b");
    let a01 = points(2, "p");
    // both restrictions are diagonal: a component's value at both points
    let diag = |src: &Cdga, tgt: &Cdga| -> GradedMap {
        let mut f = GradedMap::zero(src.space.clone(), tgt.space.clone(), 0);
        f.set_block(0, Mat::from_rows(vec![vec![Q::one()], vec![Q::one()]]));
        f
    };
    let mut algebras = BTreeMap::new();
    algebras.insert(vec![0], a0.clone());
    algebras.insert(vec![1], a1.clone());
    algebras.insert(vec![0, 1], a01.clone());
    let mut restrictions = BTreeMap::new();
    restrictions.insert((vec![0], vec![0, 1]), diag(&a0, &a01));
    restrictions.insert((vec![1], vec![0, 1]), diag(&a1, &a01));
    NerveInput { c: 2, algebras, restrictions }
}

/// A three-component diagram whose one-step restriction square out of {0}
/// does not commute: going via {0,1} is the identity while going via {0,2}
/// swaps the two points of the triple overlap.
pub fn bad_nerve() -> NerveInput {
    let two = points(2, "q");
    let id_map = |a: &Cdga| GradedMap::identity(&a.space);
    let swap = {
        let mut f = GradedMap::zero(two.space.clone(), two.space.clone(), 0);
        f.set_block(0, Mat::from_rows(vec![vec![Q::zero(), Q::one()], vec![Q::one(), Q::zero()]]));
        f
    };
    let mut algebras = BTreeMap::new();
    for s in [vec![0], vec![0, 1], vec![0, 2], vec![0, 1, 2]] {
        algebras.insert(s, two.clone());
    }
    let mut restrictions = BTreeMap::new();
    restrictions.insert((vec![0], vec![0, 1]), id_map(&two));
    restrictions.insert((vec![0], vec![0, 2]), id_map(&two));
    restrictions.insert((vec![0, 1], vec![0, 1, 2]), id_map(&two));
    restrictions.insert((vec![0, 2], vec![0, 1, 2]), swap);
    NerveInput { c: 3, algebras, restrictions }
}
