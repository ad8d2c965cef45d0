use cms_core::{Potential, SumMode, TransitionSystem, Word, StateId};
use proptest::prelude::*;

const K: u32 = 3;

/// A memory-`m` potential on the full 3-shift with random table values.
fn table_potential(m: usize, values: &[f64]) -> Potential {
    let mut entries = Vec::new();
    let total = (K as usize).pow(m as u32);
    for (code, v) in values.iter().enumerate().take(total) {
        let mut c = code;
        let mut key = Vec::with_capacity(m);
        for _ in 0..m {
            key.push(StateId::Plain((c % K as usize) as u32 + 1));
            c /= K as usize;
        }
        entries.push((key, *v));
    }
    Potential::from_table(m, 0.0, entries).unwrap()
}

fn word(symbols: &[u32]) -> Word {
    Word(symbols.iter().map(|&s| StateId::Plain(s)).collect())
}

proptest! {
    #[test]
    fn periodic_sums_are_rotation_invariant(
        m in 1usize..4,
        values in prop::collection::vec(-5.0f64..5.0, 27),
        symbols in prop::collection::vec(1u32..=K, 1..10),
        shift in 0usize..10,
    ) {
        let t = TransitionSystem::full_shift(K as usize);
        let phi = table_potential(m, &values);
        let w = word(&symbols);
        let mut rotated = symbols.clone();
        rotated.rotate_left(shift % symbols.len());
        let a = phi.birkhoff_sum(&t, &w, SumMode::PeriodicWrap).unwrap();
        let b = phi.birkhoff_sum(&t, &word(&rotated), SumMode::PeriodicWrap).unwrap();
        prop_assert!(a.exact && b.exact);
        prop_assert!((a.value() - b.value()).abs() <= 1e-12 * (1.0 + a.value().abs()));
    }

    #[test]
    fn open_sums_add_over_splits(
        m in 1usize..4,
        values in prop::collection::vec(-5.0f64..5.0, 27),
        symbols in prop::collection::vec(1u32..=K, 8..16),
        cut in 3usize..6,
    ) {
        let t = TransitionSystem::full_shift(K as usize);
        let phi = table_potential(m, &values);
        let (u, v) = symbols.split_at(cut);
        prop_assume!(u.len() >= m && v.len() >= m);
        let whole = phi.birkhoff_sum(&t, &word(&symbols), SumMode::OpenCylinder).unwrap().value();
        let left = phi.birkhoff_sum(&t, &word(u), SumMode::OpenCylinder).unwrap().value();
        let right = phi.birkhoff_sum(&t, &word(v), SumMode::OpenCylinder).unwrap().value();
        // Windows straddling the junction.
        let states: Vec<StateId> = word(&symbols).0;
        let boundary: f64 = (cut + 1 - m..cut).filter(|&i| i + m > cut).map(|i| phi.value(&states[i..i + m])).sum();
        prop_assert!((whole - (left + right + boundary)).abs() <= 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn memory_one_potentials_have_no_distortion(values in prop::collection::vec(-5.0f64..5.0, 3)) {
        let phi = table_potential(1, &values);
        prop_assert_eq!(phi.distortion_constant(), 0.0);
    }
}
