//! Property-based tests for the word/point layer and the metric axioms.

use proptest::prelude::*;

use shadowlab::metrics::{prefix_ultrametric_distance, RateSequence};
use shadowlab::words::{
    first_diff_index, format_point, parse_point, prefix_check, FiniteWord, Point,
};

fn letters() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=6, 0..6)
}

fn period_letters() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=6, 1..5)
}

fn points() -> impl Strategy<Value = Point> {
    (letters(), period_letters()).prop_map(|(pre, per)| {
        Point::eventually_periodic(
            FiniteWord::from_ids(&pre).unwrap(),
            FiniteWord::from_ids(&per).unwrap(),
        )
        .unwrap()
    })
}

/// The raw (non-canonical) sequence a preamble/period pair describes.
fn naive_letter(pre: &[u32], per: &[u32], i: usize) -> u32 {
    if i < pre.len() {
        pre[i]
    } else {
        per[(i - pre.len()) % per.len()]
    }
}

proptest! {
    #[test]
    fn canonicalization_preserves_the_sequence(pre in letters(), per in period_letters()) {
        let p = Point::eventually_periodic(
            FiniteWord::from_ids(&pre).unwrap(),
            FiniteWord::from_ids(&per).unwrap(),
        ).unwrap();
        for i in 0..(pre.len() + 3 * per.len() + 4) {
            prop_assert_eq!(p.letter_at(i).unwrap().id(), naive_letter(&pre, &per, i));
        }
        // Idempotence: re-canonicalizing the canonical parts is the identity.
        let (cpre, cper) = p.as_eventually_periodic().unwrap();
        let again = Point::eventually_periodic(cpre.clone(), cper.clone()).unwrap();
        prop_assert_eq!(again, p);
    }

    #[test]
    fn iterate_shift_is_a_semigroup_action(x in points(), m in 0usize..12, n in 0usize..12) {
        prop_assert_eq!(x.iterate_shift(m).iterate_shift(n), x.iterate_shift(m + n));
        prop_assert_eq!(x.iterate_shift(1), x.shift());
    }

    #[test]
    fn parse_format_round_trip(x in points()) {
        prop_assert_eq!(parse_point(&format_point(&x)).unwrap(), x);
    }

    #[test]
    fn first_diff_is_symmetric_and_detects_equality(x in points(), y in points()) {
        let xy = first_diff_index(&x, &y).unwrap();
        prop_assert_eq!(xy, first_diff_index(&y, &x).unwrap());
        prop_assert_eq!(xy.is_none(), x == y);
        if let Some(i) = xy {
            let i = i as usize;
            prop_assert_ne!(x.letter_at(i), y.letter_at(i));
            for j in 0..i {
                prop_assert_eq!(x.letter_at(j), y.letter_at(j));
            }
        }
    }

    #[test]
    fn prefix_ultrametric_inequality(x in points(), y in points(), z in points()) {
        let r = RateSequence::dyadic();
        let dxy = prefix_ultrametric_distance(&r, &x, &y).unwrap().rank;
        let dxz = prefix_ultrametric_distance(&r, &x, &z).unwrap().rank;
        let dzy = prefix_ultrametric_distance(&r, &z, &y).unwrap().rank;
        prop_assert!(dxy >= dxz.min(dzy));
    }

    #[test]
    fn prefixes_of_a_point_pass_prefix_check(x in points(), k in 0usize..10) {
        let u = FiniteWord::new(x.first_letters(k));
        prop_assert!(prefix_check(&u, &x));
        // Extending past a mismatch fails.
        let mut extended = u.letters().to_vec();
        let wrong = x.letter_at(k).unwrap().id() % 6 + 1;
        if wrong != x.letter_at(k).unwrap().id() {
            extended.push(shadowlab::words::Letter::new(wrong).unwrap());
            prop_assert!(!prefix_check(&FiniteWord::new(extended), &x));
        }
    }
}
