//! Oracle tests for the bar complex and the Hopf algebra H^0(B): dimension
//! tables, shuffle/deconcatenation structure, Lie dims, phi-hat, the
//! Eilenberg-Moore spectral sequence, and transfer of N and Phi.

use barwitt::bar::{
    abelianization_check, bar_dims_of_cohomology, bar_of_filtered, build_bar,
    cocommutative_part, eilenberg_moore, h0_hopf, phi_hat, transfer_derivation,
    transfer_frobenius, weight_on_h0, BarComplex,
};
use barwitt::cdga::{unit_vec, Augmentation, Cdga, Derivation, Frobenius};
use barwitt::fixtures;
use barwitt::gla::GradedMap;
use barwitt::matrix::{qi, Mat, Q};
use num::{One, Zero};

fn bar_of(a: &Cdga, r_max: usize) -> BarComplex {
    let aug = Augmentation::connected(a).unwrap();
    build_bar(a, &aug, r_max).unwrap()
}

/// Flattened degree-0 vector of a single word.
fn word_vec(b: &BarComplex, w: &[(i64, usize)]) -> Vec<Q> {
    let l = b.deg0_dim();
    let idx = b
        .deg0
        .iter()
        .position(|(_, ww)| ww.as_slice() == w)
        .expect("word present");
    let mut v = vec![Q::zero(); l];
    v[idx] = Q::one();
    v
}

#[test]
fn lambda_e_filtration_dims() {
    let a = fixtures::lambda_e();
    let b = bar_of(&a, 3);
    let report = h0_hopf(&b).unwrap();
    assert_eq!(report.b_dims, vec![1, 2, 3, 4]);
    // shuffle [e][e] = 2 [e|e]: letters of weight 0 carry no sign
    let x = vec![(1i64, 0usize)];
    let sh = b.shuffle_words(&x, &x);
    assert_eq!(sh.len(), 1);
    assert_eq!(sh[&vec![(1, 0), (1, 0)]], qi(2));
}

#[test]
fn torus_d_c_sign() {
    let a = fixtures::torus();
    let b = bar_of(&a, 2);
    // d_C [e1|e2] = -[e1 e2]
    let dc = b.d_c_word(&vec![(1, 0), (1, 1)]);
    assert_eq!(dc.len(), 1);
    assert_eq!(dc[&vec![(2, 0)]], qi(-1));
    // and the square is zero on the total complex
    b.total_complex().complex.check_d_square().unwrap();
}

#[test]
fn torus_h0_dims_and_lie() {
    let a = fixtures::torus();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    assert_eq!(report.b_dims, vec![1, 3, 6]);
    assert_eq!(report.lie_dims, vec![2, 0]);
    // fully generated in level 1: abelian free rank-2 case
    assert_eq!(report.generated_dims[1], vec![1, 3, 6]);
}

#[test]
fn free2_h0_dims_and_witt_lie_dims() {
    let a = fixtures::free2();
    let b = bar_of(&a, 3);
    let report = h0_hopf(&b).unwrap();
    assert_eq!(report.b_dims, vec![1, 3, 7, 15]);
    // free Lie algebra on 2 generators: Witt dims 2, 1, 2
    assert_eq!(report.lie_dims, vec![2, 1, 2]);
    // the full basis generates everything
    assert_eq!(report.generated_dims[3], report.b_dims);
}

#[test]
fn genus2_h0_dims_and_lie() {
    let a = fixtures::genus2();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    assert_eq!(report.b_dims, vec![1, 5, 20]);
    assert_eq!(report.lie_dims, vec![4, 5]);
}

#[test]
fn genus2_cocommutative_equals_phi_hat_image() {
    let a = fixtures::genus2();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let cc = cocommutative_part(&b, &report, 2);
    // symmetric algebra on H^1: 1 + 4 + C(5,2) = 15 through level 2
    assert_eq!(cc.dim(), 15);
    let ph = phi_hat(&b, &report).unwrap();
    assert!(ph.injective);
    assert_eq!(ph.image[2].dim(), 15);
    assert!(cc.contains_subspace(&ph.image[2]));
    assert!(ph.image[2].contains_subspace(&cc));
}

#[test]
fn torus_cocommutative_is_everything() {
    // the torus Hopf algebra is commutative and cocommutative
    let a = fixtures::torus();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let cc = cocommutative_part(&b, &report, 2);
    assert_eq!(cc.dim(), 6);
    let ph = phi_hat(&b, &report).unwrap();
    assert!(ph.injective);
    assert_eq!(ph.image[2].dim(), 6);
}

#[test]
fn eilenberg_moore_corner_and_e1_identity() {
    let a = fixtures::genus2();
    let b = bar_of(&a, 2);
    let ss = eilenberg_moore(&b, 2).unwrap();
    // E_1 at filtration weight s = 2, total degree 0: (dim H^1)^2 = 16
    let e1 = ss.pages[1].dims();
    assert_eq!(e1.get(&(2, 0)).copied().unwrap_or(0), 16);
    // E_1 equals the bar complex of H(A) = A (d = 0): piece (s, n) has the
    // dims of words of length s and internal degree n + s
    let hdims = bar_dims_of_cohomology(&a, 2).unwrap();
    for (&(w, n), &dim) in &e1 {
        if w == 0 && n == 0 {
            continue; // unit word
        }
        let expect = hdims.get(&(w as usize, n + w)).copied().unwrap_or(0);
        assert_eq!(dim, expect, "E1 mismatch at ({w}, {n})");
    }
}

#[test]
fn eilenberg_moore_with_differential() {
    // Kummer total algebra Lambda(theta, y, z), dy = theta z: H has dims
    // 1, 2, 2, 1, and E_1 of the bar filtration is the bar complex of H
    let ext = fixtures::kummer();
    let a = ext.total;
    let b = bar_of(&a, 2);
    b.total_complex().complex.check_d_square().unwrap();
    let ss = eilenberg_moore(&b, 2).unwrap();
    let e1 = ss.pages[1].dims();
    let hdims = bar_dims_of_cohomology(&a, 2).unwrap();
    for (&(w, n), &dim) in &e1 {
        if w == 0 && n == 0 {
            continue;
        }
        if n + w >= b.t_max {
            continue; // at t = t_max the truncation drops d_I: boundary artifact
        }
        let expect = hdims.get(&(w as usize, n + w)).copied().unwrap_or(0);
        assert_eq!(dim, expect, "E1 mismatch at ({w}, {n})");
    }
    // spot value: (1, 0) = dim H^1 = 2; (2, 0) = (dim H^1)^2 = 4
    assert_eq!(e1.get(&(1, 0)).copied().unwrap_or(0), 2);
    assert_eq!(e1.get(&(2, 0)).copied().unwrap_or(0), 4);
}

#[test]
fn abelianization_on_all_fixtures() {
    for (a, h1) in [
        (fixtures::lambda_e(), 1usize),
        (fixtures::free2(), 2),
        (fixtures::torus(), 2),
        (fixtures::genus2(), 4),
    ] {
        let b = bar_of(&a, 2);
        let report = h0_hopf(&b).unwrap();
        let ab = abelianization_check(&b, &report).unwrap();
        assert_eq!(ab.h1_dim, h1);
        assert_eq!(ab.b1_dim, 1 + h1);
        assert!(ab.level1_primitive);
    }
}

#[test]
fn hopf_antipode_axiom() {
    // m (S (x) id) Delta = unit . counit, checked on every basis class
    for a in [fixtures::torus(), fixtures::free2(), fixtures::genus2()] {
        let b = bar_of(&a, 2);
        let report = h0_hopf(&b).unwrap();
        let n = report.h0_dim();
        for i in 0..n {
            let mut acc = vec![Q::zero(); n];
            for &(j, k, ref c) in &report.coproduct[&i] {
                let sj = report.antipode.col(j);
                let ek = unit_vec(n, k);
                if let Some(p) = report.mul(&sj, &ek, b.r_max) {
                    for t in 0..n {
                        acc[t] = &acc[t] + c * &p[t];
                    }
                } else {
                    panic!("level budget exceeded in antipode check");
                }
            }
            // unit of H^0 is the class of the empty word = basis vector 0
            let mut expect = vec![Q::zero(); n];
            expect[0] = report.counit[i].clone();
            assert_eq!(acc, expect, "antipode axiom fails on basis class {i}");
        }
    }
}

#[test]
fn coproduct_counit_axiom() {
    // (counit (x) id) Delta = id
    let a = fixtures::genus2();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let n = report.h0_dim();
    for i in 0..n {
        let mut acc = vec![Q::zero(); n];
        for &(j, k, ref c) in &report.coproduct[&i] {
            acc[k] = &acc[k] + c * &report.counit[j];
        }
        assert_eq!(acc, unit_vec(n, i), "counit axiom fails on class {i}");
    }
}

#[test]
fn transfer_monodromy_on_kummer_base() {
    // N(y) = z, N(z) = 0 on A = Lambda(y, z); on H^0(B): N[y] = [z]
    let a = fixtures::kummer().base;
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let mut nmap = GradedMap::zero(a.space.clone(), a.space.clone(), 0);
    nmap.set_block(1, Mat::from_rows(vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)]]));
    let n = Derivation { map: nmap };
    let td = transfer_derivation(&b, &report, &n).unwrap();
    assert!(td.leibniz_ok);
    assert!(td.co_leibniz_ok);
    // N[y] = [z] in class coordinates
    let vy = word_vec(&b, &[(1, 0)]);
    let vz = word_vec(&b, &[(1, 1)]);
    let cy = report.class_of(&vy);
    let lhs = td.on_h0.mul_vec(&cy);
    assert_eq!(lhs, report.class_of(&vz));
    // N^2 = 0 on the level-1 (abelianized) classes; on level 2 it is not
    // zero (N^2 [y|y] = 2 [z|z])
    let n2 = td.on_h0.mul(&td.on_h0);
    assert!(n2.mul_vec(&cy).iter().all(|x| x.is_zero()));
    assert!(!n2.is_zero());
}

#[test]
fn transfer_frobenius_and_monodromy_relation() {
    // A = Lambda(y, z), Phi = diag(2, 1) on degree 1, N(y) = z: the
    // transferred matrices satisfy p Phi N = N Phi with p = 2
    let a = fixtures::kummer().base;
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let scales = [("y", 2i64), ("z", 1)].into_iter().collect();
    let f = Frobenius { phi: fixtures::diagonal_from_labels(&a, &scales), p: 2, d_exp: 1 };
    f.validate(&a).unwrap();
    let fm = transfer_frobenius(&b, &report, &f).unwrap();
    let mut nmap = GradedMap::zero(a.space.clone(), a.space.clone(), 0);
    nmap.set_block(1, Mat::from_rows(vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)]]));
    let n = Derivation { map: nmap };
    let td = transfer_derivation(&b, &report, &n).unwrap();
    let lhs = fm.mul(&td.on_h0).scale(&qi(2));
    let rhs = td.on_h0.mul(&fm);
    assert_eq!(lhs, rhs);
}

#[test]
fn torus_frobenius_transfer_matches_h1_action() {
    let a = fixtures::torus();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let f = fixtures::torus_frobenius(&a);
    let fm = transfer_frobenius(&b, &report, &f).unwrap();
    // on level-1 classes: Phi[e1] = [e2], Phi[e2] = -5[e1] + 2[e2]
    let v1 = word_vec(&b, &[(1, 0)]);
    let v2 = word_vec(&b, &[(1, 1)]);
    let c1 = report.class_of(&v1);
    let c2 = report.class_of(&v2);
    assert_eq!(fm.mul_vec(&c1), c2);
    let expect: Vec<Q> = c1
        .iter()
        .zip(&c2)
        .map(|(x, y)| x * qi(-5) + y * qi(2))
        .collect();
    assert_eq!(fm.mul_vec(&c2), expect);
}

#[test]
fn torus_bar_weights_trivial_filtration() {
    // pure weight: every level-s class sits in weight exactly s
    let a = fixtures::torus();
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let p = fixtures::pure_weight_filtration(&a);
    let mut w = bar_of_filtered(&b, &p).unwrap();
    weight_on_h0(&b, &report, &mut w);
    assert_eq!(w.h0_weight_dims[&0], 1);
    assert_eq!(w.h0_weight_dims[&1], 3);
    assert_eq!(w.h0_weight_dims[&2], 6);
    assert_eq!(w.h0_gr_dims.get(&(0, 0)).copied().unwrap_or(0), 1);
    assert_eq!(w.h0_gr_dims.get(&(1, 1)).copied().unwrap_or(0), 2);
    assert_eq!(w.h0_gr_dims.get(&(2, 2)).copied().unwrap_or(0), 3);
}

#[test]
fn kummer_base_bar_weights() {
    // weights y = 2, z = 0: [y] has weight 2, [z] weight 0, [y|y] weight 4
    let a = fixtures::kummer().base;
    let b = bar_of(&a, 2);
    let report = h0_hopf(&b).unwrap();
    let p = fixtures::kummer_weights(&a);
    p.validate().unwrap();
    let mut w = bar_of_filtered(&b, &p).unwrap();
    weight_on_h0(&b, &report, &mut w);
    // graded dims of B_2 H^0 per weight: w0 {1, [z], [z|z]}, w2 {[y],
    // [y|z]+[z|y]}, w4 {[y|y]}
    assert_eq!(w.h0_gr_dims.get(&(2, 0)).copied().unwrap_or(0), 3);
    assert_eq!(w.h0_gr_dims.get(&(2, 2)).copied().unwrap_or(0), 2);
    assert_eq!(w.h0_gr_dims.get(&(2, 4)).copied().unwrap_or(0), 1);
    // level 1: unit + [z] at weight 0, [y] at weight 2
    assert_eq!(w.h0_gr_dims.get(&(1, 0)).copied().unwrap_or(0), 2);
    assert_eq!(w.h0_gr_dims.get(&(1, 2)).copied().unwrap_or(0), 1);
}

#[test]
fn anticommutation_of_differentials() {
    // d_C d_I + d_I d_C = 0, separately from D^2 = 0, on a base with d != 0
    let a = fixtures::kummer().total;
    let b = bar_of(&a, 3);
    for (&(s, t), ws) in &b.words {
        if s < 1 || s > b.r_max - 1 {
            continue;
        }
        if t + 1 > b.t_max {
            continue; // d_I truncated at the top internal degree
        }
        let dc_di = b.d_c_block(s, t + 1).mul(&b.d_i_block(s, t));
        let di_dc = b.d_i_block(s - 1, t).mul(&b.d_c_block(s, t));
        let sum = dc_di.add(&di_dc);
        assert!(sum.is_zero(), "anticommutation fails at s={s}, t={t} ({} words)", ws.len());
    }
}
