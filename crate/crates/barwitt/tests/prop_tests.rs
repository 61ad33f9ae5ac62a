//! Property-based invariants: exact linear algebra laws on random rational
//! matrices, and Hopf-algebra laws on random elements of H^0(B).

use barwitt::bar::{build_bar, h0_hopf};
use barwitt::cdga::Augmentation;
use barwitt::fixtures;
use barwitt::matrix::{Mat, Q};
use num::{BigRational, Zero};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Q> {
    (-20i64..=20, 1i64..=6).prop_map(|(n, d)| BigRational::new(n.into(), d.into()))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    proptest::collection::vec(rational(), rows * cols).prop_map(move |entries| {
        let mut m = Mat::zero(rows, cols);
        for (k, q) in entries.into_iter().enumerate() {
            m[(k / cols, k % cols)] = q;
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrix_multiplication_is_associative(
        a in matrix(3, 4),
        b in matrix(4, 2),
        c in matrix(2, 3),
    ) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn rank_nullity_holds(a in matrix(3, 5)) {
        let ker = a.kernel_basis();
        prop_assert_eq!(a.rank() + ker.len(), 5);
        for v in &ker {
            prop_assert!(a.mul_vec(v).iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn solve_recovers_a_preimage(a in matrix(4, 3), x in proptest::collection::vec(rational(), 3)) {
        let b = a.mul_vec(&x);
        let y = a.solve(&b).expect("b lies in the image by construction");
        prop_assert_eq!(a.mul_vec(&y), b);
    }

    #[test]
    fn inverse_inverts_when_it_exists(a in matrix(3, 3)) {
        if let Some(inv) = a.inverse() {
            prop_assert_eq!(a.mul(&inv), Mat::identity(3));
            prop_assert_eq!(inv.mul(&a), Mat::identity(3));
        } else {
            prop_assert!(a.rank() < 3);
        }
    }
}

fn h0_element(dim: usize) -> impl Strategy<Value = Vec<Q>> {
    proptest::collection::vec(rational(), dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shuffle_product_on_h0_is_commutative_and_unital(
        a in h0_element(6),
        b in h0_element(6),
    ) {
        // torus through level 2: H^0(B) has dim 6; products whose level
        // budget overflows return None and are skipped
        let alg = fixtures::torus();
        let aug = Augmentation::connected(&alg).unwrap();
        let bar = build_bar(&alg, &aug, 2).unwrap();
        let report = h0_hopf(&bar).unwrap();
        if let (Some(ab), Some(ba)) = (report.mul(&a, &b, 2), report.mul(&b, &a, 2)) {
            prop_assert_eq!(ab, ba);
        }
        // the empty word is the unit
        let mut one = vec![Q::zero(); 6];
        let unit_idx = report.levels.iter().position(|&l| l == 0).unwrap();
        one[unit_idx] = Q::from(BigRational::from_integer(1.into()));
        if let Some(a1) = report.mul(&a, &one, 2) {
            prop_assert_eq!(a1, a.clone());
        }
    }
}
