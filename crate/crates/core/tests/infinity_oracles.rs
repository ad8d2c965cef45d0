use cms_core::infinity::{bouquet_hinf_oracle, count_b, hinf_profile, loop_composition_count, CountMethod};
use cms_core::thermo::TOL_FIT;
use cms_core::{LoopCounts, TransitionSystem};
use proptest::prelude::*;

fn loop_values() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..4, 2..7).prop_map(|mut v| {
        v[0] = v[0].min(1);
        v
    })
    .prop_filter("at least one loop", |v| v.iter().any(|&a| a > 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counts_shrink_as_m_grows(values in loop_values(), n in 1usize..40, m in 1u64..6, extra in 1u64..6) {
        let t = TransitionSystem::truncated_bouquet(LoopCounts::list(values.clone()), values.len()).unwrap();
        let loose = count_b(&t, None, n, m, 1, CountMethod::Dp).unwrap();
        let tight = count_b(&t, None, n, m + extra, 1, CountMethod::Dp).unwrap();
        prop_assert!(tight.count <= loose.count);
    }

    #[test]
    fn counts_obey_the_loop_decomposition_bound(values in loop_values(), n in 1usize..40, m in 1u64..6) {
        let loops = LoopCounts::list(values.clone());
        let t = TransitionSystem::truncated_bouquet(loops.clone(), values.len()).unwrap();
        let z = count_b(&t, None, n, m, 1, CountMethod::Dp).unwrap();
        // With q = 1 the compact part is the root alone, so there is one prefix and one suffix.
        let bound = loop_composition_count(&loops, n, n / m as usize);
        prop_assert!(z.count <= bound, "z={} bound={}", z.count, bound);
    }

    #[test]
    fn dp_counts_match_enumeration(values in loop_values(), n in 1usize..11, m in 1u64..4) {
        let t = TransitionSystem::truncated_bouquet(LoopCounts::list(values.clone()), values.len()).unwrap();
        let dp = count_b(&t, None, n, m, 1, CountMethod::Dp).unwrap();
        let brute = count_b(&t, None, n, m, 1, CountMethod::BruteForce).unwrap();
        prop_assert_eq!(dp.count, brute.count);
    }
}

#[test]
fn profile_slope_tracks_the_loop_growth_rate() {
    for r in [2u64, 3] {
        let loops = LoopCounts::geometric(r).with_first(1);
        let t = TransitionSystem::truncated_bouquet(loops.clone(), 25).unwrap();
        let prof = hinf_profile(&t, &[1], &[2, 4, 8], 30).unwrap();
        let oracle = bouquet_hinf_oracle(&loops);
        let band = TOL_FIT + 2.0 * prof.stderr;
        assert!(
            (prof.estimate - oracle).abs() <= band,
            "r={r}: estimate {} oracle {oracle} band {band}",
            prof.estimate
        );
        assert!(prof.monotone_in_m && prof.slopes_monotone_in_m);
    }
}
