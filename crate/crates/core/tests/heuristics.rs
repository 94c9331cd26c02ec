use pbhybrid_core::heuristics::{absolute, additive, default_hybrid, minimal_watch_count, Rational};
use pbhybrid_core::model::Term;
use pbhybrid_core::{Literal, PBConstraint};
use proptest::prelude::*;

fn arb_constraint() -> impl Strategy<Value = PBConstraint> {
    proptest::collection::vec(1i64..2000, 1..30)
        .prop_flat_map(|mut coeffs| {
            coeffs.sort_unstable_by(|a, b| b.cmp(a));
            let max = coeffs[0];
            (Just(coeffs), 1..=max)
        })
        .prop_map(|(coeffs, degree)| {
            let terms = coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| Term::new(a, Literal::positive(i as u32 + 1)))
                .collect();
            PBConstraint::new(terms, degree).unwrap()
        })
}

/// Smallest k with a_2 + ... + a_k >= b, else n.
fn brute_m(c: &PBConstraint) -> usize {
    let a: Vec<i64> = c.terms().iter().map(|t| t.coeff).collect();
    (1..=a.len())
        .find(|&k| a[1..k].iter().sum::<i64>() >= c.degree())
        .unwrap_or(a.len())
}

proptest! {
    #[test]
    fn m_is_minimal_prefix(c in arb_constraint()) {
        prop_assert_eq!(minimal_watch_count(&c), brute_m(&c));
    }

    #[test]
    fn default_p_counts_iff_m_over_n_exceeds_three_tenths(c in arb_constraint()) {
        let d = default_hybrid(&c, Rational::new(7, 10));
        let (m, n) = (d.m.unwrap() as u64, c.len() as u64);
        prop_assert_eq!(d.use_counting, Rational::new(m, n) > Rational::new(3, 10));
        prop_assert!(default_hybrid(&c, Rational::from_integer(1)).use_counting);
    }

    #[test]
    fn absolute_is_monotone_in_cutoff(c in arb_constraint(), lo in 0u64..3000, step in 0u64..3000) {
        let small = absolute(&c, Rational::from_integer(lo)).use_counting;
        let large = absolute(&c, Rational::from_integer(lo + step)).use_counting;
        prop_assert!(small || !large);
    }

    #[test]
    fn additive_implies_absolute(c in arb_constraint(), cut in 0u64..3000) {
        let cut = Rational::from_integer(cut);
        if additive(&c, cut).use_counting {
            prop_assert!(absolute(&c, cut).use_counting);
        }
    }
}
