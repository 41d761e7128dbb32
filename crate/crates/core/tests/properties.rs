use approx::assert_relative_eq;
use proptest::prelude::*;

use jumpform::forms::inner_product;
use jumpform::operators::apply_triplet;
use jumpform::{split, stable_like_kernel, weight_w, AlphaFunction, AnnulusScheme, GridFunction};

fn tanh_kernel(base: f64, amp: f64) -> jumpform::JumpKernel {
    stable_like_kernel(&AlphaFunction::tanh(base, amp, 1.0).unwrap(), 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_is_positive_and_finite(alpha in 0.01f64..1.99, dim in 1usize..=2) {
        let w = weight_w(alpha, dim).unwrap();
        prop_assert!(w > 0.0 && w.is_finite());
    }

    #[test]
    fn split_parts_have_their_symmetry(x in -3.0f64..3.0, y in -3.0f64..3.0, base in 0.3f64..1.6, amp in 0.0f64..0.3) {
        prop_assume!((x - y).abs() > 1e-3);
        let k = tanh_kernel(base, amp);
        let sk = split(&k).unwrap();
        let (p, q) = ([x, 0.0], [y, 0.0]);
        assert_relative_eq!(sk.ks(&p, &q).unwrap(), sk.ks(&q, &p).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(sk.ka(&p, &q).unwrap(), -sk.ka(&q, &p).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(sk.ks(&p, &q).unwrap() + sk.ka(&p, &q).unwrap(), k.eval(&p, &q), max_relative = 1e-12);
    }

    #[test]
    fn inner_product_is_symmetric_on_a_shared_lattice(
        c in -1.0f64..1.0,
        r in 0.3f64..1.5,
        p1 in 2u32..6,
        p2 in 2u32..6,
        a in 0.1f64..3.0,
    ) {
        // same support, so both orders use the same outer rule
        let u = GridFunction::bump(1, [c, 0.0], r, 1.0, p1, 16).unwrap();
        let v = GridFunction::bump(1, [c, 0.0], r, a, p2, 16).unwrap();
        let x = inner_product(&u, &v, 6).unwrap();
        let y = inner_product(&v, &u, 6).unwrap();
        prop_assert!((x - y).abs() <= 1e-13 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generator_algebra_holds(c in -1.0f64..1.0, r in 0.4f64..1.5, x in -2.0f64..2.0, base in 0.4f64..1.5) {
        let k = tanh_kernel(base, 0.2);
        let u = GridFunction::bump(1, [c, 0.0], r, 1.0, 4, 16).unwrap();
        let t = apply_triplet(&k, &u, &[[x, 0.0]], &AnnulusScheme::default()).unwrap();
        prop_assert!(t.algebra_residual().unwrap() <= 1e-10);
    }
}
