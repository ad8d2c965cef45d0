use cms_core::infinity::loop_composition_count;
use cms_core::{
    enumerate_words, f_property_count, is_admissible, periodic_points, shortest_connector, LoopCounts, StateFilter,
    StateId, TransitionSystem,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn mat_pow(a: &[Vec<u8>], n: usize) -> Vec<Vec<u128>> {
    let k = a.len();
    let mut r: Vec<Vec<u128>> = (0..k).map(|i| (0..k).map(|j| (i == j) as u128).collect()).collect();
    for _ in 0..n {
        r = (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|m| r[i][m] * a[m][j] as u128).sum()).collect())
            .collect();
    }
    r
}

fn transitive_matrix(max_k: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1..=max_k)
        .prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0u8..=1, k), k))
        .prop_filter("strongly connected", |m| TransitionSystem::finite(m.clone()).is_ok())
}

#[test]
fn periodic_points_match_matrix_powers() {
    let golden_mean = vec![vec![1, 1], vec![1, 0]];
    let cycle = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]];
    for m in [golden_mean, cycle, vec![vec![1; 3]; 3]] {
        let t = TransitionSystem::finite(m.clone()).unwrap();
        for n in 1..=12 {
            let p = mat_pow(&m, n);
            for (a, row) in p.iter().enumerate() {
                let count = periodic_points(&t, n, StateId::Plain(a as u32 + 1)).unwrap().count() as u128;
                assert_eq!(count, row[a], "n={n} a={a}");
            }
        }
    }
}

#[test]
fn bouquet_f_property_counts_are_loop_compositions() {
    let families = [
        LoopCounts::ones(),
        LoopCounts::geometric(2).with_first(1),
        LoopCounts::list(vec![1, 0, 3, 2]),
    ];
    for loops in families {
        let t = TransitionSystem::bouquet(loops.clone()).unwrap();
        let bound = BigUint::from(u128::MAX);
        for n in 1..=30 {
            // A walk of n steps from the root back to it is a word of n + 1 symbols.
            let got = f_property_count(&t, 1, n + 1, &bound);
            assert_eq!(got.exact(), Some(&loop_composition_count(&loops, n, n)), "n={n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_words_are_admissible(m in transitive_matrix(4), len in 1usize..7) {
        let t = TransitionSystem::finite(m.clone()).unwrap();
        let list = enumerate_words(&t, len, StateFilter::Any, StateFilter::Any, 100_000).unwrap();
        prop_assert!(list.exhaustive);
        for w in &list.words {
            prop_assert!(is_admissible(&t, w).unwrap());
        }
        let p = mat_pow(&m, len - 1);
        let total: u128 = p.iter().flatten().sum();
        prop_assert_eq!(list.words.len() as u128, total);
    }

    #[test]
    fn periodic_points_are_admissible_loops(m in transitive_matrix(3), n in 1usize..9) {
        let t = TransitionSystem::finite(m.clone()).unwrap();
        let p = mat_pow(&m, n);
        for (a, row) in p.iter().enumerate() {
            let s = StateId::Plain(a as u32 + 1);
            let words: Vec<_> = periodic_points(&t, n, s).unwrap().collect();
            prop_assert_eq!(words.len() as u128, row[a]);
            for w in &words {
                prop_assert_eq!(w.first(), Some(s));
                prop_assert!(is_admissible(&t, w).unwrap());
                prop_assert!(t.has_edge(&w.last().unwrap(), &s));
            }
        }
    }

    #[test]
    fn connectors_are_shortest(m in transitive_matrix(4)) {
        let t = TransitionSystem::finite(m.clone()).unwrap();
        let k = m.len();
        for a in 1..=k as u32 {
            for b in 1..=k as u32 {
                let (a, b) = (StateId::Plain(a), StateId::Plain(b));
                let w = shortest_connector(&t, a, b).unwrap();
                prop_assert_eq!(w.first(), Some(a));
                prop_assert!(is_admissible(&t, &w.concat(&cms_core::Word(vec![b]))).unwrap());
                for len in 1..w.len() {
                    let shorter = enumerate_words(&t, len, StateFilter::Is(a), StateFilter::Any, 100_000).unwrap();
                    prop_assert!(shorter.words.iter().all(|u| !t.has_edge(&u.last().unwrap(), &b)));
                }
            }
        }
    }

    #[test]
    fn list_bouquet_f_property(values in prop::collection::vec(0u64..4, 1..6), n in 1usize..15) {
        let mut values = values;
        values[0] = values[0].min(1);
        prop_assume!(values.iter().any(|&a| a > 0));
        let loops = LoopCounts::list(values);
        let t = TransitionSystem::bouquet(loops.clone()).unwrap();
        let got = f_property_count(&t, 1, n + 1, &BigUint::from(u128::MAX));
        prop_assert_eq!(got.exact(), Some(&loop_composition_count(&loops, n, n)));
    }
}
