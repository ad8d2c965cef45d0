use std::f64::consts::LN_2;

use cms_core::families::{htop_solve, normalizing_c, preset, Preset};
use cms_core::thermo::{chi_per, induced_pressure, partition_sums_bruteforce, root_return_weights, ReturnData};
use cms_core::{LoopCounts, Potential, StateId, TransitionSystem};

fn graph(name: &str, truncate: Option<usize>) -> (TransitionSystem, Potential, cms_core::ReturnLaw) {
    match preset(name, truncate).unwrap() {
        Preset::Graph(b) => (b.system, b.potential, b.law),
        Preset::Abstract { .. } => panic!("{name} has no graph"),
    }
}

#[test]
fn closed_form_returns_match_enumeration() {
    for (name, l) in [
        ("sec52-entry", 12),
        ("sec52-exit", 12),
        ("sec52-mid", 12),
        ("sec52-spread", 12),
        ("sec53(3,auto)", 8),
        ("sec53(1.5,0.4)", 8),
    ] {
        let (t, phi, law) = graph(name, Some(l));
        let brute = partition_sums_bruteforce(&t, &phi, StateId::Root, l.min(12)).unwrap();
        for n in 1..=l.min(12) {
            let err = (brute.log_zstar[n - 1] - law.log_weight(n)).exp_m1().abs();
            assert!(err <= 1e-12, "{name} n={n}: {err}");
        }
    }
}

#[test]
fn placements_share_partition_sums_and_chi_per() {
    let (t, entry, _) = graph("sec52-entry", Some(10));
    let reference = partition_sums_bruteforce(&t, &entry, StateId::Root, 10).unwrap();
    let chi = chi_per(&t, &entry, 10).unwrap();
    for name in ["sec52-exit", "sec52-mid", "sec52-spread"] {
        let (t2, phi, _) = graph(name, Some(10));
        let sums = partition_sums_bruteforce(&t2, &phi, StateId::Root, 10).unwrap();
        for n in 0..10 {
            assert!((sums.log_z[n] - reference.log_z[n]).abs() <= 1e-12, "{name} Z_{}", n + 1);
            assert!((sums.log_zstar[n] - reference.log_zstar[n]).abs() <= 1e-12, "{name} Z*_{}", n + 1);
        }
        assert!((chi_per(&t2, &phi, 10).unwrap() - chi).abs() <= 1e-12, "{name}");
        let (u, phi_u, _) = graph(name, None);
        let a = root_return_weights(&u, &phi_u, 40).unwrap();
        let (v, phi_v, _) = graph("sec52-entry", None);
        let b = root_return_weights(&v, &phi_v, 40).unwrap();
        for n in 0..40 {
            assert!((a[n] - b[n]).abs() <= 1e-12, "{name} untruncated Z*_{}", n + 1);
        }
    }
}

#[test]
fn htop_solves_the_loop_series() {
    for loops in [
        LoopCounts::geometric(3),
        LoopCounts::geometric(2).with_first(1),
        LoopCounts::ones(),
        LoopCounts::list(vec![1, 2, 0, 5]),
    ] {
        let tol = 1e-12;
        let h = htop_solve(&loops, tol).unwrap();
        let l = 200;
        let partial: f64 = (1..=l).map(|n| loops.count_u64(n).unwrap_or(0) as f64 * (-(n as f64) * h).exp()).sum();
        // The remaining terms are bounded by a geometric tail of ratio r e^{-h}.
        let ratio = match loops.form() {
            cms_core::LoopForm::Geometric { r } => *r as f64 * (-h).exp(),
            cms_core::LoopForm::Ones => (-h).exp(),
            _ => 0.0,
        };
        let tail = ratio.powi(l as i32 + 1) / (1.0 - ratio);
        assert!((partial - 1.0).abs() <= tol + tail + 1e-12, "{loops:?}: h={h} partial={partial}");
    }
    assert!((htop_solve(&LoopCounts::ones(), 1e-12).unwrap() - LN_2).abs() < 1e-9);
}

#[test]
fn normalized_power_family_has_zero_induced_pressure() {
    for beta in [1.5, 2.0, 3.0, 6.0] {
        let c = normalizing_c(beta).unwrap();
        let (_, _, law) = graph(&format!("sec53({beta},auto)"), None);
        match induced_pressure(&ReturnData::Law(law), 0.0).unwrap() {
            cms_core::thermo::SeriesValue::Finite { value, error } => {
                // The normalizing constant's error enters relatively.
                let propagated = error + c.error / c.value;
                assert!(value.abs() <= propagated.max(1e-12) + 1e-12, "beta={beta}: {value} vs {propagated}");
                assert!(propagated <= 1e-8);
            }
            v => panic!("beta={beta}: {v:?}"),
        }
    }
}
