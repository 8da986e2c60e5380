//! Randomized invariants of the counting pipeline: the arrangement count
//! of a matching is a function of its crossing pattern alone, so it must
//! survive relabeling, reflection, and any change of insertion order or
//! worker count.

use proptest::prelude::*;
use pseudochords::counter::{count_arrangements, CountOptions};
use pseudochords::independence::{count_with_independence, IndependenceOptions};
use pseudochords::matching::Matching;

/// Uniformly shuffled perfect matching with 1 ≤ k ≤ `max_k` chords.
fn random_matching(max_k: usize) -> impl Strategy<Value = Matching> {
    (1..=max_k).prop_flat_map(|k| {
        Just((0..2 * k).collect::<Vec<usize>>()).prop_shuffle().prop_map(|labels| {
            let pairs: Vec<(usize, usize)> = labels
                .chunks(2)
                .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
                .collect();
            Matching::from_pairs(&pairs).expect("shuffled labels form a matching")
        })
    })
}

/// A matching together with a shuffled insertion order of its chords.
fn matching_with_order(max_k: usize) -> impl Strategy<Value = (Matching, Vec<usize>)> {
    random_matching(max_k).prop_flat_map(|m| {
        let ids: Vec<usize> = (0..m.k()).collect();
        (Just(m), Just(ids).prop_shuffle())
    })
}

fn single_thread() -> CountOptions {
    CountOptions { threads: 1, ..CountOptions::default() }
}

fn sorted_pairs(m: &Matching) -> Vec<(usize, usize)> {
    let mut pairs = m.pairs().to_vec();
    pairs.sort_unstable();
    pairs
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        .. ProptestConfig::default()
    })]

    #[test]
    fn count_survives_cyclic_relabeling(m in random_matching(5), t in 0usize..64) {
        let opts = single_thread();
        let shifted = m.cyclic_shift(t % m.points());
        prop_assert_eq!(
            count_arrangements(&m, &opts).unwrap(),
            count_arrangements(&shifted, &opts).unwrap()
        );
    }

    #[test]
    fn count_survives_reflection(m in random_matching(5)) {
        let opts = single_thread();
        prop_assert_eq!(
            count_arrangements(&m, &opts).unwrap(),
            count_arrangements(&m.reflect(), &opts).unwrap()
        );
    }

    #[test]
    fn count_ignores_insertion_order((m, order) in matching_with_order(5)) {
        let default = count_arrangements(&m, &single_thread()).unwrap();
        let opts = CountOptions { order: Some(order), ..single_thread() };
        prop_assert_eq!(default, count_arrangements(&m, &opts).unwrap());
    }

    #[test]
    fn independence_split_matches_plain_count(m in random_matching(5)) {
        let plain = count_arrangements(&m, &single_thread()).unwrap();
        let opts = IndependenceOptions {
            trials: 24,
            depth_limit: 3,
            threads: 1,
            ..IndependenceOptions::default()
        };
        prop_assert_eq!(plain, count_with_independence(&m, &opts).unwrap());
    }

    #[test]
    fn worker_count_never_changes_the_count(m in random_matching(4)) {
        let one = count_arrangements(&m, &single_thread()).unwrap();
        for threads in [2, 8] {
            let opts = CountOptions { threads, ..CountOptions::default() };
            prop_assert_eq!(&one, &count_arrangements(&m, &opts).unwrap());
        }
    }

    #[test]
    fn serialization_round_trips(m in random_matching(10)) {
        let back = Matching::parse(&m.serialize()).unwrap();
        prop_assert_eq!(m.pairs(), back.pairs());
    }

    #[test]
    fn crossing_relation_is_symmetric_and_tallied(m in random_matching(10)) {
        let k = m.k();
        let mut incidences = 0;
        for c1 in 0..k {
            prop_assert!(!m.crosses(c1, c1));
            for c2 in 0..k {
                prop_assert_eq!(m.crosses(c1, c2), m.crosses(c2, c1));
            }
            incidences += m.crossing_set(c1).len();
        }
        prop_assert_eq!(incidences, 2 * m.crossing_pairs());
    }

    #[test]
    fn full_turn_and_double_reflection_are_identities(m in random_matching(10)) {
        prop_assert_eq!(sorted_pairs(&m.cyclic_shift(m.points())), sorted_pairs(&m));
        prop_assert_eq!(sorted_pairs(&m.reflect().reflect()), sorted_pairs(&m));
    }

    #[test]
    fn shift_canonical_key_is_shift_invariant(m in random_matching(8), t in 0usize..64) {
        let shifted = m.cyclic_shift(t % m.points());
        prop_assert_eq!(m.shift_canonical_key(), shifted.shift_canonical_key());
    }
}
