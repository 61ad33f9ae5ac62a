//! Oracle tests for the CDGA layer: fixture models, theta-extensions,
//! divided-power u-extensions, Frobenius and monodromy axioms.

use barwitt::cdga::{
    apply_frobenius_axioms, augmented_theta, u_extension, unit_vec, Augmentation, Cdga,
    CdgaError, ThetaExtension,
};
use barwitt::fixtures;
use barwitt::gla::cohomology;
use barwitt::matrix::{qi, Q};
use num::{One, Zero};

#[test]
fn torus_validates_and_cohomology_dims() {
    let a = fixtures::torus();
    a.validate().unwrap();
    let (h, _) = a.cohomology_algebra().unwrap();
    h.validate().unwrap();
    assert_eq!(h.space.dim(0), 1);
    assert_eq!(h.space.dim(1), 2);
    assert_eq!(h.space.dim(2), 1);
}

#[test]
fn genus2_dims() {
    let a = fixtures::genus2();
    a.validate().unwrap();
    assert_eq!(a.space.dim(0), 1);
    assert_eq!(a.space.dim(1), 4);
    assert_eq!(a.space.dim(2), 1);
    // a1 b1 = a2 b2 is the fundamental class
    let p11 = a.mul_basis(1, 0, 1, 1); // a1 * b1
    let p22 = a.mul_basis(1, 2, 1, 3); // a2 * b2
    assert_eq!(p11, p22);
    assert!(!p11.is_empty());
    // killed products
    assert!(a.mul_basis(1, 0, 1, 2).is_empty()); // a1 * a2
}

#[test]
fn torus_frobenius_is_a_cdga_endomorphism() {
    let a = fixtures::torus();
    let f = fixtures::torus_frobenius(&a);
    f.validate(&a).unwrap();
    assert_eq!(f.q(), 5);
    // charpoly of the degree-1 block is x^2 - 2x + 5 (ascending coefficients)
    let cp = f.phi.block(1).charpoly();
    assert_eq!(cp, vec![qi(5), qi(-2), qi(1)]);
}

#[test]
fn kummer_extension_validates() {
    let ext = fixtures::kummer();
    ext.validate().unwrap();
    assert_eq!(ext.total.space.dim(1), 3);
    assert_eq!(ext.base.space.dim(1), 2);
}

#[test]
fn kummer_frobenius_is_a_chain_endomorphism() {
    let ext = fixtures::kummer();
    let f = fixtures::kummer_frobenius(&ext.total);
    // chain map + multiplicative: Phi(dy) = Phi(theta z) = 2 theta z = d(2y)
    f.validate(&ext.total).unwrap();
}

#[test]
fn bad_theta_rejected() {
    let ext = fixtures::kummer();
    // theta = y is not closed
    let y_idx = ext
        .total
        .space
        .labels(1)
        .iter()
        .position(|l| l == "y")
        .unwrap();
    let mut bad = ext.clone();
    bad.theta = unit_vec(bad.total.space.dim(1), y_idx);
    assert!(matches!(bad.validate(), Err(CdgaError::BadTheta)));
    let mut zero = ext;
    zero.theta = vec![Q::zero(); zero.total.space.dim(1)];
    assert!(matches!(zero.validate(), Err(CdgaError::BadTheta)));
}

#[test]
fn u_extension_of_lambda_theta() {
    let ext = ThetaExtension::trivial(&Cdga::ground());
    let ue = u_extension(&ext, 3, None).unwrap();
    // 8-dimensional complex: {1, u[1..3]} in degree 0, {theta u[0..3]} in degree 1
    assert_eq!(ue.algebra.space.dim(0), 4);
    assert_eq!(ue.algebra.space.dim(1), 4);
    ue.algebra.complex().check_d_square().unwrap();
    // H^0 = Q; H^1 is the truncation artifact [theta u^[3]] only
    let h = cohomology(&ue.algebra.complex()).unwrap();
    assert_eq!(h.space.dim(0), 1);
    assert_eq!(h.space.dim(1), 1);
    // N^2(u^[2]) = u^[0] = 1: degree-0 indices are the u-exponents
    let n0 = ue.monodromy.map.block(0);
    let twice = n0.mul(&n0);
    let img = twice.mul_vec(&unit_vec(4, 2));
    assert_eq!(img, unit_vec(4, 0));
    // divided powers: u^[1] * u^[1] = 2 u^[2]
    let prod = ue.algebra.mul_basis(0, 1, 0, 1);
    assert_eq!(prod, vec![(2usize, qi(2))]);
}

#[test]
fn kummer_u_extension_frobenius_monodromy_relation() {
    let ext = fixtures::kummer();
    let f = fixtures::kummer_frobenius(&ext.total);
    let ue = u_extension(&ext, 4, Some(&f)).unwrap();
    ue.algebra.complex().check_d_square().unwrap();
    // d commutes with N everywhere (including the truncation boundary)
    for &deg in ue.algebra.space.basis.keys() {
        let dn = ue.algebra.d.block(deg).mul(&ue.monodromy.map.block(deg));
        let nd = ue.monodromy.map.block(deg + 1).mul(&ue.algebra.d.block(deg));
        assert_eq!(dn, nd, "d N = N d fails in degree {deg}");
    }
    // p Phi N = N Phi on the whole truncated algebra
    let uf = ue.frobenius.as_ref().unwrap();
    apply_frobenius_axioms(&ue.algebra, uf, &ue.monodromy).unwrap();
    assert_eq!(ue.safe_range, 1); // depth 4 - top degree 3
}

#[test]
fn planted_frobenius_violation_detected() {
    let ext = fixtures::kummer();
    let f = fixtures::kummer_frobenius(&ext.total);
    let ue = u_extension(&ext, 3, Some(&f)).unwrap();
    let mut bad = ue.frobenius.clone().unwrap();
    // break the u-scaling: Phi(u^[1]) = u^[1] instead of p u^[1]
    let mut blk = bad.phi.block(0);
    let u1 = ue.algebra.space.dim(0) / (ue.depth + 1); // stride of one u-level
    blk[(u1, u1)] = Q::one();
    bad.phi.set_block(0, blk);
    assert!(apply_frobenius_axioms(&ue.algebra, &bad, &ue.monodromy).is_err());
}

#[test]
fn frobenius_without_theta_scaling_rejected() {
    let ext = fixtures::kummer();
    // Phi(theta) = theta violates phi(theta) = p theta
    let scales = [("theta", 1i64), ("y", 2), ("z", 1)].into_iter().collect();
    let phi = fixtures::diagonal_from_labels(&ext.total, &scales);
    let f = barwitt::cdga::Frobenius { phi, p: 2, d_exp: 1 };
    assert!(u_extension(&ext, 3, Some(&f)).is_err());
}

#[test]
fn augmented_theta_kummer_ideal_sequence() {
    let ext = fixtures::kummer();
    let aug = Augmentation::connected(&ext.base).unwrap();
    // point data: evaluation 1 -> 1 on degree 0, theta-coefficient functional
    let eval0 = vec![Q::one()];
    let t_idx = ext
        .total
        .space
        .labels(1)
        .iter()
        .position(|l| l == "theta")
        .unwrap();
    let theta_coeff = unit_vec(ext.total.space.dim(1), t_idx);
    let seq = augmented_theta(&ext, &aug, &eval0, &theta_coeff).unwrap();
    // I~^1 = span(y, z): dim 2 = dim I^1 + dim I^0; I~^2 = all of A~^2
    let by_deg: std::collections::BTreeMap<i64, (usize, usize, usize)> = seq
        .exact_dims
        .iter()
        .map(|&(d, a, b, c)| (d, (a, b, c)))
        .collect();
    assert_eq!(by_deg[&0], (0, 0, 0));
    assert_eq!(by_deg[&1], (2, 2, 0));
    assert_eq!(by_deg[&2], (3, 1, 2));
    assert_eq!(by_deg[&3], (1, 0, 1));
}

#[test]
fn augmented_theta_rejects_incompatible_point() {
    let ext = fixtures::kummer();
    let aug = Augmentation::connected(&ext.base).unwrap();
    let eval0 = vec![Q::one()];
    // functional vanishing on theta is incompatible
    let z_idx = ext
        .total
        .space
        .labels(1)
        .iter()
        .position(|l| l == "z")
        .unwrap();
    let bad_coeff = unit_vec(ext.total.space.dim(1), z_idx);
    assert!(matches!(
        augmented_theta(&ext, &aug, &eval0, &bad_coeff),
        Err(CdgaError::IncompatiblePointData)
    ));
}

#[test]
fn trivial_u_extension_restriction_hits_h0() {
    // restriction r: A~[u] -> A is the identity on the u^[0] part
    let ext = fixtures::kummer();
    let ue = u_extension(&ext, 2, None).unwrap();
    let r0 = ue.restriction.block(0);
    assert_eq!(r0.rows, 1);
    assert!(!r0.is_zero());
    // r is an algebra map on spot checks: r(y u^[0]) = y
    let y_tot = ext
        .total
        .space
        .labels(1)
        .iter()
        .position(|l| l == "y")
        .unwrap();
    let img = ue
        .restriction
        .block(1)
        .mul_vec(&unit_vec(ue.algebra.space.dim(1), y_tot));
    let y_base = ext
        .base
        .space
        .labels(1)
        .iter()
        .position(|l| l == "y")
        .unwrap();
    assert_eq!(img, unit_vec(ext.base.space.dim(1), y_base));
}
