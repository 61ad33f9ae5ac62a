//! Oracle tests for the cosimplicial layer: validation, the nerve of a
//! component diagram, the conormalized total complex s, the Alexander-Whitney
//! product, and acyclicity of the simplicial forms total complex.

use barwitt::cosimp::{
    aw_cup, constant_cosimplicial, nerve_cdga, s_of_e, total_s, CosimpError,
};
use barwitt::fixtures;
use barwitt::gla::cohomology;
use barwitt::matrix::Q;
use num::{One, Zero};

#[test]
fn constant_cosimplicial_validates_and_s_recovers_the_algebra() {
    let a = fixtures::lambda_e();
    let g = constant_cosimplicial(&a, 2);
    g.validate().unwrap();
    // conormalization kills every positive level of a constant diagram
    let s = total_s(&g);
    s.complex.check_d_square().unwrap();
    assert_eq!(s.complex.space.dim(0), 1);
    assert_eq!(s.complex.space.dim(1), 1);
    let h = cohomology(&s.complex).unwrap();
    assert_eq!(h.space.dim(0), 1);
    assert_eq!(h.space.dim(1), 1);
}

#[test]
fn circle_nerve_builds_and_has_circle_cohomology() {
    let input = fixtures::circle_nerve();
    let g = nerve_cdga(&input, 2).unwrap();
    g.validate().unwrap();
    assert_eq!(g.levels[0].space.dim(0), 2);
    assert_eq!(g.levels[1].space.dim(0), 4);
    assert_eq!(g.levels[2].space.dim(0), 6);
    let s = total_s(&g);
    s.complex.check_d_square().unwrap();
    let h = cohomology(&s.complex).unwrap();
    assert_eq!(h.space.dim(0), 1, "H^0 of the circle");
    assert_eq!(h.space.dim(1), 1, "H^1 of the circle");
    assert_eq!(h.space.dim(2), 0);
}

#[test]
fn bad_nerve_rejected_with_witness() {
    let input = fixtures::bad_nerve();
    match nerve_cdga(&input, 2) {
        Err(CosimpError::NonCommutingSquare(s, j, k)) => {
            assert_eq!(s, vec![0]);
            assert_eq!((j, k), (1, 2));
        }
        other => panic!("expected a non-commuting square, got {other:?}"),
    }
}

#[test]
fn aw_cup_is_not_commutative_on_the_nerve() {
    let input = fixtures::circle_nerve();
    let g = nerve_cdga(&input, 2).unwrap();
    let s = total_s(&g);
    // x: the indicator of component 0, at level 0
    let mut x0 = vec![Q::zero(); 2];
    x0[0] = Q::one();
    let x = s.inject(0, 0, &x0);
    // y: a conormalized level-1 cochain supported on the (0,1) overlap
    // (total degree 1 = level 1 + algebra degree 0)
    let mut y1 = vec![Q::zero(); 4];
    y1[1] = Q::one();
    let y = s.inject(1, 1, &y1);
    let xy = aw_cup(&g, &s, 0, &x, 1, &y);
    let yx = aw_cup(&g, &s, 1, &y, 0, &x);
    assert!(xy.iter().any(|c| !c.is_zero()));
    assert_ne!(xy, yx, "AW product must see the non-commutativity");
    let neg_yx: Vec<Q> = yx.iter().map(|c| -c.clone()).collect();
    assert_ne!(xy, neg_yx);
}

#[test]
fn aw_cup_unit_acts_as_identity() {
    let input = fixtures::circle_nerve();
    let g = nerve_cdga(&input, 2).unwrap();
    let s = total_s(&g);
    let one = s.inject(0, 0, &g.levels[0].unit);
    let mut y1 = vec![Q::zero(); 4];
    y1[1] = Q::one();
    let y = s.inject(1, 1, &y1);
    assert_eq!(aw_cup(&g, &s, 0, &one, 1, &y), y);
    assert_eq!(aw_cup(&g, &s, 1, &y, 0, &one), y);
}

#[test]
fn s_of_simplicial_forms_is_acyclic() {
    for (n_max, dmax) in [(2usize, 3i64), (3, 4)] {
        let c = s_of_e(n_max, dmax);
        c.check_d_square().unwrap();
        let h = cohomology(&c).unwrap();
        for &deg in c.space.basis.keys() {
            let expected = if deg == 0 { 1 } else { 0 };
            assert_eq!(
                h.space.dim(deg),
                expected,
                "H^{deg} of s(E) at n_max={n_max}, D={dmax}"
            );
        }
    }
}

use barwitt::cdga::{unit_vec, Cdga};
use barwitt::cosimp::{
    constant_double, constant_section, double_tw, integration, thom_whitney,
    thom_whitney_filtered, total_s_double, total_s_filtered, CosimplicialCdga,
    DoubleCosimplicial, NerveInput,
};
use barwitt::filt::Filtration;
use barwitt::gla::GradedMap;
use std::collections::BTreeMap;

/// Induced map on cohomology of a chain map, per degree: h-basis -> h-coords.
fn induced_h(
    f: &GradedMap,
    src: &barwitt::gla::Cohomology,
    tgt: &barwitt::gla::Cohomology,
    deg: i64,
) -> Vec<Vec<barwitt::matrix::Q>> {
    (0..src.space.dim(deg))
        .map(|j| {
            let rep = src.rep_of(deg, &unit_vec(src.space.dim(deg), j));
            let img = f.block(deg).mul_vec(&rep);
            tgt.class_of(deg, &img).expect("image of a cocycle is a cocycle")
        })
        .collect()
}

#[test]
fn tw_constant_diagram_is_the_algebra_itself() {
    let a = fixtures::lambda_e();
    let g = constant_cosimplicial(&a, 2);
    let tw = thom_whitney(&g, 3).unwrap();
    // the end of a constant diagram collapses to the algebra on the nose
    assert_eq!(tw.complex.space.dims(), a.space.dims());
    let alg = tw.algebra.as_ref().expect("constant end stays within budget");
    alg.validate().unwrap();
    assert_eq!(tw.h.space.dim(0), 1);
    assert_eq!(tw.h.space.dim(1), 1);
    tw.h_algebra.validate().unwrap();
    // integration is a chain map (checked inside) and an H-iso
    let s = total_s(&g);
    let i = integration(&g, &tw, &s).unwrap();
    let sh = cohomology(&s.complex).unwrap();
    for deg in [0i64, 1] {
        let cols = induced_h(&i, &tw.h, &sh, deg);
        let m = barwitt::matrix::Mat::from_cols(sh.space.dim(deg), &cols);
        assert_eq!(m.rank(), tw.h.space.dim(deg), "H(I) bijective in degree {deg}");
    }
}

#[test]
fn tw_augmentation_triangle_commutes() {
    let a = fixtures::lambda_e();
    let g = constant_cosimplicial(&a, 2);
    let tw = thom_whitney(&g, 3).unwrap();
    let s = total_s(&g);
    let i = integration(&g, &tw, &s).unwrap();
    for &q in a.space.basis.keys() {
        for j in 0..a.space.dim(q) {
            let v = unit_vec(a.space.dim(q), j);
            let sec = constant_section(&g, &tw, q, &v).unwrap();
            let through_tw = i.block(q).mul_vec(&sec);
            let direct = s.inject(q, 0, &v);
            assert_eq!(through_tw, direct, "triangle fails at degree {q}, index {j}");
        }
    }
}

#[test]
fn tw_circle_nerve_h_and_integration() {
    let input = fixtures::circle_nerve();
    let g = nerve_cdga(&input, 2).unwrap();
    let tw = thom_whitney(&g, 4).unwrap();
    assert_eq!(tw.h.space.dim(0), 1, "H^0 of s_TW");
    assert_eq!(tw.h.space.dim(1), 1, "H^1 of s_TW");
    assert_eq!(tw.h.space.dim(2), 0);
    // the cohomology algebra is a genuine CDGA regardless of the budget
    tw.h_algebra.validate().unwrap();
    let s = total_s(&g);
    let i = integration(&g, &tw, &s).unwrap();
    let sh = cohomology(&s.complex).unwrap();
    for deg in [0i64, 1] {
        let cols = induced_h(&i, &tw.h, &sh, deg);
        let m = barwitt::matrix::Mat::from_cols(sh.space.dim(deg), &cols);
        assert_eq!(m.rank(), tw.h.space.dim(deg), "H(I) bijective in degree {deg}");
    }
    // multiplicativity of H(I): compare h_algebra products with AW products
    // of the images (trivial here: the only nonzero products involve the
    // unit, which H(I) preserves)
    let one_tw = tw.h_algebra.unit.clone();
    assert!(!one_tw.iter().all(|c| c.is_zero()));
    let h1 = tw.h_algebra.mul_elem(0, &one_tw, 1, &unit_vec(1, 0));
    assert_eq!(h1, unit_vec(1, 0), "unit acts as identity on H^1(s_TW)");
}

#[test]
fn tw_filtered_trivial_recovers_and_two_step_grades() {
    let a = fixtures::lambda_e();
    let g = constant_cosimplicial(&a, 2);
    // trivial filtration: one jump at 0
    let triv: Vec<Filtration> = g.levels.iter().map(|l| Filtration::trivial(&l.space, 0)).collect();
    let (tw, f) = thom_whitney_filtered(&g, &triv, 3).unwrap();
    assert_eq!(f.length(), 0);
    assert_eq!(tw.complex.space.dims(), a.space.dims());
    // two-step filtration: step 0 = degree-0 part, step 1 = everything
    let two_step: Vec<Filtration> = g
        .levels
        .iter()
        .map(|l| {
            // spans keyed by degree, then by weight step
            let mut sp: BTreeMap<i64, BTreeMap<i64, Vec<Vec<barwitt::matrix::Q>>>> =
                BTreeMap::new();
            let mut deg0 = BTreeMap::new();
            deg0.insert(0i64, vec![vec![num::One::one()]]);
            sp.insert(0, deg0);
            let mut deg1 = BTreeMap::new();
            deg1.insert(1i64, vec![unit_vec(1, 0)]);
            sp.insert(1, deg1);
            Filtration::from_spans(&l.space, 0, 1, sp)
        })
        .collect();
    let (tw2, f2) = thom_whitney_filtered(&g, &two_step, 3).unwrap();
    let gr = f2.gr_dims();
    assert_eq!(gr.get(&(0, 0)).copied().unwrap_or(0), 1, "Gr^0 in degree 0");
    assert_eq!(gr.get(&(1, 1)).copied().unwrap_or(0), 1, "Gr^1 in degree 1");
    // filtered I: I(F_w) inside s(F_w)
    let s = total_s(&g);
    let i = integration(&g, &tw2, &s).unwrap();
    let sf = total_s_filtered(&g, &two_step, &s);
    for &k in tw2.complex.space.basis.keys() {
        for w in 0..=1i64 {
            let img = f2.at(k, w).image_under(&i.block(k));
            assert!(
                sf.at(k, w).contains_subspace(&img),
                "I does not respect filtration step {w} in degree {k}"
            );
        }
    }
}

#[test]
fn double_tw_constant_both_directions() {
    let a = fixtures::lambda_e();
    let inner = constant_cosimplicial(&a, 1);
    let gg = constant_double(&inner, 1);
    let tw = double_tw(&gg, 3).unwrap();
    assert_eq!(tw.h.space.dim(0), 1);
    assert_eq!(tw.h.space.dim(1), 1);
    let total = total_s_double(&gg);
    total.check_d_square().unwrap();
    let h = cohomology(&total).unwrap();
    assert_eq!(h.space.dim(0), 1);
    assert_eq!(h.space.dim(1), 1);
}

#[test]
fn double_tw_circle_nerve_outer_constant_inner() {
    let input = fixtures::circle_nerve();
    let g = nerve_cdga(&input, 2).unwrap();
    // outer direction: the nerve; inner direction: constant at each level
    let inner_m = 1usize;
    let rows: Vec<CosimplicialCdga> =
        g.levels.iter().map(|a| constant_cosimplicial(a, inner_m)).collect();
    let lift = |maps: &Vec<GradedMap>| -> Vec<Vec<GradedMap>> {
        maps.iter().map(|f| vec![f.clone(); inner_m + 1]).collect()
    };
    let gg = DoubleCosimplicial {
        rows,
        outer_cofaces: g.cofaces.iter().map(lift).collect(),
        outer_codegens: g.codegens.iter().map(lift).collect(),
    };
    let tw = double_tw(&gg, 4).unwrap();
    assert_eq!(tw.h.space.dim(0), 1, "H^0 of the doubled nerve");
    assert_eq!(tw.h.space.dim(1), 1, "H^1 of the doubled nerve");
    let total = total_s_double(&gg);
    total.check_d_square().unwrap();
    let h = cohomology(&total).unwrap();
    assert_eq!(h.space.dim(0), 1);
    assert_eq!(h.space.dim(1), 1);
    assert_eq!(h.space.dim(2), 0);
}

#[test]
fn nerve_small_cases() {
    // one component: constant cosimplicial object
    let q = Cdga::ground();
    let mut algebras = BTreeMap::new();
    algebras.insert(vec![0usize], q.clone());
    let one = NerveInput { c: 1, algebras, restrictions: BTreeMap::new() };
    let g1 = nerve_cdga(&one, 2).unwrap();
    g1.validate().unwrap();
    let h1 = cohomology(&total_s(&g1).complex).unwrap();
    assert_eq!(h1.space.dim(0), 1);
    assert_eq!(h1.space.dim(1), 0);
    // two components, one intersection, all Q: connected nerve
    let mut algebras = BTreeMap::new();
    algebras.insert(vec![0usize], q.clone());
    algebras.insert(vec![1usize], q.clone());
    algebras.insert(vec![0usize, 1], q.clone());
    let mut restrictions = BTreeMap::new();
    restrictions.insert((vec![0usize], vec![0usize, 1]), GradedMap::identity(&q.space));
    restrictions.insert((vec![1usize], vec![0usize, 1]), GradedMap::identity(&q.space));
    let two = NerveInput { c: 2, algebras, restrictions };
    let g2 = nerve_cdga(&two, 2).unwrap();
    g2.validate().unwrap();
    let h2 = cohomology(&total_s(&g2).complex).unwrap();
    assert_eq!(h2.space.dim(0), 1, "connected nerve");
    assert_eq!(h2.space.dim(1), 0);
    // two components, empty intersection: disconnected nerve
    let mut algebras = BTreeMap::new();
    algebras.insert(vec![0usize], q.clone());
    algebras.insert(vec![1usize], q.clone());
    let disc = NerveInput { c: 2, algebras, restrictions: BTreeMap::new() };
    let g3 = nerve_cdga(&disc, 2).unwrap();
    g3.validate().unwrap();
    let h3 = cohomology(&total_s(&g3).complex).unwrap();
    assert_eq!(h3.space.dim(0), 2, "disconnected nerve has H^0 = Q^2");
    assert_eq!(h3.space.dim(1), 0);
    // the end of the disconnected nerve is locally constant: H^0 dim 2 too
    let tw3 = thom_whitney(&g3, 3).unwrap();
    assert_eq!(tw3.h.space.dim(0), 2);
    tw3.algebra.as_ref().expect("locally constant end within budget").validate().unwrap();
}
