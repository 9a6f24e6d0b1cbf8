//! Property tests across modules, each against an independent oracle.

use levelcheck::divisor::{d_c, distribution_check, n_m, norm, pullback, pushforward, valuation, Divisor, TorsionGroup};
use levelcheck::groups::{similitude_multiplier, split_iso, split_iso_inv};
use levelcheck::unitary::{complete_row, is_admissible, OfModule, Vector};
use levelcheck::{Elem, Mat, Ring, RingSpec};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rings() -> Vec<Ring> {
    [RingSpec::rational(3, 3), RingSpec::split(5, 2), RingSpec::inert(3, 2, 0, -1), RingSpec::inert(2, 3, 1, -1)]
        .into_iter()
        .map(|s| Ring::new(s).unwrap())
        .collect()
}

fn elem(ring: &Ring, a: i64, b: i64) -> Elem {
    ring.from_coords(a, b)
}

/// Multiplicative order of `m` modulo the prime `p`.
fn order_mod(m: u64, p: u64) -> u64 {
    let mut x = m % p;
    let mut k = 1;
    while x != 1 {
        x = x * m % p;
        k += 1;
    }
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(which in 0usize..4, a in 0i64..1000, b in 0i64..1000, c in 0i64..1000, d in 0i64..1000, e in 0i64..1000, f in 0i64..1000) {
        let r = &rings()[which];
        let (x, y, z) = (elem(r, a, b), elem(r, c, d), elem(r, e, f));
        prop_assert_eq!(r.mul(x, y), r.mul(y, x));
        prop_assert_eq!(r.mul(r.mul(x, y), z), r.mul(x, r.mul(y, z)));
        prop_assert_eq!(r.mul(x, r.add(y, z)), r.add(r.mul(x, y), r.mul(x, z)));
        prop_assert_eq!(r.conj(r.conj(x)), x);
        prop_assert_eq!(r.conj(r.mul(x, y)), r.mul(r.conj(x), r.conj(y)));
        if r.is_unit(x) {
            prop_assert_eq!(r.mul(x, r.invert(x).unwrap()), r.one());
        }
    }

    #[test]
    fn matrix_inverse_round_trip(which in 0usize..4, seed in any::<u64>()) {
        use rand::Rng;
        let r = &rings()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = r.modulus() as i64;
        let a = Mat::from_fn(4, |_, _| r.from_coords(rng.gen_range(0..m), rng.gen_range(0..m)));
        match r.mat_inverse(&a) {
            Ok(inv) => prop_assert_eq!(r.mat_mul(&a, &inv), Mat::identity(r, 4)),
            Err(_) => prop_assert!(!r.is_unit(r.det(&a))),
        }
    }

    #[test]
    fn split_coordinates_round_trip(seed in any::<u64>()) {
        use rand::Rng;
        let ring = Ring::new(RingSpec::split(5, 2)).unwrap();
        let base = Ring::new(RingSpec::rational(5, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mm = Mat::from_fn(4, |_, _| base.from_int(rng.gen_range(0..25)));
        prop_assume!(base.is_unit(base.det(&mm)));
        let g = split_iso_inv(&ring, &mm, base.from_int(3)).unwrap();
        prop_assert_eq!(similitude_multiplier(&ring, &g.mat).unwrap(), Elem(3, 3));
        prop_assert_eq!(split_iso(&ring, &g).unwrap(), (mm, base.from_int(3)));
    }

    #[test]
    fn pullback_scales_degree(c in 1u64..5, a in 1u64..4, seed in any::<u64>()) {
        use rand::Rng;
        let base = TorsionGroup::new(1, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Divisor::zero(base);
        for _ in 0..3 {
            let x = base.point(rng.gen_range(0..base.cardinality()));
            d = d.add(&Divisor::delta(base, &x).scale(&BigInt::from(rng.gen_range(-4i64..5)))).unwrap();
        }
        let up = pullback(&d, a).unwrap();
        prop_assert_eq!(up.degree(), d.degree() * BigInt::from(a * a));
        prop_assert_eq!(norm(&up, a).unwrap(), d.scale(&BigInt::from(a * a)));
    }

    #[test]
    fn distribution_relation(c1 in 1u64..7, c2 in 1u64..7) {
        prop_assert!(distribution_check(c1, c2, 1).pass);
    }

    #[test]
    fn units_fix_d_c(c in 2u64..12, r in 1u64..50) {
        let gcd = (1..=c).rev().find(|k| c % k == 0 && r % k == 0).unwrap();
        let d = d_c(c, 1).unwrap();
        match pushforward(&d, r) {
            Ok(moved) => { prop_assert_eq!(gcd, 1); prop_assert_eq!(moved, d); }
            Err(_) => prop_assert!(gcd > 1),
        }
    }

    #[test]
    fn n_m_unit_iff_order_exceeds_2g(pi in 0usize..8, g in 1usize..4, m in 1u64..40) {
        let p = [2u64, 3, 5, 7, 11, 13, 17, 19][pi];
        let unit = valuation(&n_m(g, m), p) == Some(0);
        let oracle = m % p == 0 || order_mod(m, p) > 2 * g as u64;
        prop_assert_eq!(unit, oracle);
    }

    #[test]
    fn completion_of_random_admissible_rows(which in 0usize..3, seed in any::<u64>()) {
        use rand::Rng;
        let spec = [RingSpec::for_field(2, 1, -3), RingSpec::for_field(3, 2, -1), RingSpec::for_field(5, 1, -1)]
            .into_iter()
            .nth(which)
            .unwrap()
            .unwrap();
        let ring = Ring::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ring.modulus() as i64;
        let v: Vector = loop {
            let v: Vector = (0..4).map(|_| ring.from_coords(rng.gen_range(0..m), rng.gen_range(0..m))).collect();
            if is_admissible(&ring, &v) {
                break v;
            }
        };
        let g = complete_row(&ring, &v, &mut rng).unwrap();
        prop_assert_eq!(g.row(3), v.as_slice());
        prop_assert_eq!(similitude_multiplier(&ring, &g).unwrap(), ring.one());
    }

    #[test]
    fn gaussian_decomposition_reconstructs_h(seed in any::<u64>()) {
        let module = OfModule::for_field(3, 2, -1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x1, x2) = (module.random_vector(&mut rng), module.random_vector(&mut rng));
        let (a, b) = module.skew_decompose(&x1, &x2).unwrap();
        prop_assert_eq!(module.hermitian_form(&x1, &x2), Elem(a, b));
        let back = module.skew_pairing(&x2, &x1);
        prop_assert_eq!((b as u64 + back as u64) % module.ring.modulus(), 0);
    }
}
