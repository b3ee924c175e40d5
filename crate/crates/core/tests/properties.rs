use ldtensor::bound::{v_recurrence, VTable};
use ldtensor::combinat::{enumerate_patterns, xor_columns, MultiIndex, Subset};
use ldtensor::estimator::threshold_recover;
use ldtensor::model::{sample_instance, tensor_entry, Instance, ModelParams};
use ldtensor::scalar::{format_fraction, parse_fraction};
use ldtensor::Rational;
use num_traits::Zero;
use proptest::prelude::*;

fn subset(max_n: usize, max_k: usize) -> impl Strategy<Value = Subset> {
    proptest::collection::btree_set(0..max_n, 1..=max_k).prop_map(Subset::from_elements)
}

fn multi(max_n: usize, max_k: usize, max_len: usize) -> impl Strategy<Value = MultiIndex> {
    proptest::collection::vec(subset(max_n, max_k), 1..=max_len).prop_map(MultiIndex::new)
}

fn harmonic(r: usize) -> Vec<Rational> {
    (1..=r as i64).map(|j| Rational::new(1.into(), j.into())).collect()
}

proptest! {
    #[test]
    fn fraction_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let x = Rational::new(p.into(), q.into());
        prop_assert_eq!(parse_fraction(&format_fraction(&x)), Some(x));
    }

    #[test]
    fn xor_preserves_total_parity(s in multi(6, 3, 5), seed in 0u64..1000) {
        let ell: Vec<usize> = (0..s.degree()).map(|d| ((seed >> d) % 3) as usize).collect();
        let u = xor_columns(&s, &ell);
        let total = u.columns().fold(Subset::EMPTY, |acc, (_, c)| acc.xor(c));
        prop_assert_eq!(total, s.parity());
    }

    #[test]
    fn patterns_shrink_and_preserve_parity(s in multi(4, 3, 4), r in 1usize..4) {
        for pi in enumerate_patterns(&s, r, 3, &harmonic(r)).unwrap() {
            prop_assert!(pi.target().degree() < s.degree());
            prop_assert_eq!(pi.target().parity(), s.parity());
        }
    }

    #[test]
    fn v_vanishes_without_even_cover(s in multi(4, 3, 3), r in 1usize..4) {
        let params = ModelParams::new(4, r, 3, harmonic(r), 0).unwrap();
        let v: Rational = v_recurrence(&params, &s, &mut VTable::new()).unwrap();
        if !s.even_cover() {
            prop_assert!(v.is_zero());
        }
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), n in 1usize..8, r in 1usize..4) {
        let inst = sample_instance(&ModelParams::new(n, r, 3, harmonic(r), seed).unwrap()).unwrap();
        prop_assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn odd_entries_flip_under_negation(seed in any::<u64>(), s in subset(5, 3)) {
        let inst = sample_instance(&ModelParams::new(5, 2, 3, harmonic(2), seed).unwrap()).unwrap();
        let a: Rational = tensor_entry(&inst, s).unwrap();
        let b: Rational = tensor_entry(&inst.negated(), s).unwrap();
        if s.len() % 2 == 1 { prop_assert_eq!(a, -b); } else { prop_assert_eq!(a, b); }
    }

    #[test]
    fn thresholding_is_a_sign(xs in proptest::collection::vec(-5.0f64..5.0, 0..20)) {
        let signs = threshold_recover(&xs);
        for (x, s) in xs.iter().zip(&signs) {
            prop_assert_eq!(*s, if *x < 0.0 { -1 } else { 1 });
        }
    }
}
