use closed_entanglement::bounds::{
    closed_system_bound, flattened_bound, flattening_threshold, general_bound,
    max_ent_number_distribution, mean_subsystem_particles, sector_table, Statistics, SystemSpec,
};
use closed_entanglement::oracle::brute_force_bound_count;
use num_bigint::BigUint;
use proptest::prelude::*;

fn fermionic() -> impl Strategy<Value = SystemSpec> {
    (1usize..=14)
        .prop_flat_map(|l| (Just(l), 1..=l, 0..=l))
        .prop_map(|(l, m, n)| SystemSpec::fermionic(l, m, n).unwrap())
}

fn bosonic() -> impl Strategy<Value = SystemSpec> {
    (1usize..=10)
        .prop_flat_map(|l| (Just(l), 1..=l, 0usize..=10))
        .prop_map(|(l, m, n)| SystemSpec::bosonic(l, m, n).unwrap())
}

fn any_spec() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![fermionic(), bosonic()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn swapping_subsystems_keeps_the_fermionic_bound(spec in fermionic()) {
        prop_assume!(spec.m() < spec.l());
        let swapped = spec.with_m(spec.l() - spec.m()).unwrap();
        prop_assert!((closed_system_bound(&spec) - closed_system_bound(&swapped)).abs() < 1e-12);
    }

    #[test]
    fn particle_hole_symmetry(spec in fermionic()) {
        let holes = SystemSpec::fermionic(spec.l(), spec.m(), spec.l() - spec.n()).unwrap();
        prop_assert!((closed_system_bound(&spec) - closed_system_bound(&holes)).abs() < 1e-12);
    }

    #[test]
    fn closed_bound_never_exceeds_general(spec in any_spec()) {
        let closed = closed_system_bound(&spec);
        let general = general_bound(&spec);
        prop_assert!(closed >= 0.0);
        prop_assert!(closed <= general + 1e-12, "{spec}: {closed} > {general}");
        if spec.statistics() == Statistics::Fermionic {
            prop_assert!(closed <= spec.m() as f64 * std::f64::consts::LN_2 + 1e-12);
        }
    }

    #[test]
    fn distribution_is_normalized(spec in any_spec()) {
        let p = max_ent_number_distribution(&spec);
        let total: f64 = p.iter().map(|(_, q)| q).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|(_, q)| *q > 0.0));
        let mean: f64 = p.iter().map(|(k, q)| *k as f64 * q).sum();
        prop_assert!((mean - mean_subsystem_particles(&spec)).abs() < 1e-12);
    }

    #[test]
    fn fermionic_flattening(m in 1usize..=7, n in 0usize..=9, extra in 0usize..20) {
        let threshold = flattening_threshold(m, n, Statistics::Fermionic).unwrap();
        let l = threshold + extra;
        let spec = SystemSpec::fermionic(l, m, n).unwrap();
        let flat = flattened_bound(m, n, Statistics::Fermionic).unwrap();
        prop_assert!((closed_system_bound(&spec) - flat).abs() < 1e-12);
    }
}

#[test]
fn enumeration_matches_for_every_small_system() {
    for l in 1..=12 {
        for m in 1..=l {
            for n in 0..=l {
                let spec = SystemSpec::fermionic(l, m, n).unwrap();
                assert_eq!(
                    sector_table(&spec).total_d(),
                    BigUint::from(brute_force_bound_count(&spec)),
                    "{spec}"
                );
            }
        }
    }
    for l in 1..=7 {
        for m in 1..=l {
            for n in 0..=7 {
                let spec = SystemSpec::bosonic(l, m, n).unwrap();
                assert_eq!(
                    sector_table(&spec).total_d(),
                    BigUint::from(brute_force_bound_count(&spec)),
                    "{spec}"
                );
            }
        }
    }
}

#[test]
fn bosonic_bound_strictly_dominates_dimension_bound() {
    for l in 10..=40 {
        for m in [2, 3] {
            for n in [2, 3] {
                let spec = SystemSpec::bosonic(l, m, n).unwrap();
                assert!(
                    closed_system_bound(&spec) < general_bound(&spec) - 1e-9,
                    "{spec}"
                );
            }
        }
    }
}
