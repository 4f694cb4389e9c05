//! Property tests over randomly generated markets.

mod common;

use proptest::prelude::*;
use qsm_core::{
    apply_mechanism, certify, doctor_proposing_da, enumerate_stable, hospital_proposing_da,
    is_manipulation, is_obvious_manipulation, option_set, parse_market, quantile_allocation,
    Allocation, ContractId, Market, Mechanism, Outcome, Property, Quantile, DEFAULT_BUDGET,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Filter the full power set directly; the library's enumeration uses a
/// pruned search, so this is an independent route to the same set.
fn powerset_allocations(m: &Market) -> Vec<Allocation> {
    let n = m.contract_count();
    let mut out = Vec::new();
    'mask: for mask in 0usize..(1 << n) {
        let chosen: Vec<ContractId> =
            (0..n).filter(|i| mask & (1 << i) != 0).map(ContractId).collect();
        for (i, &a) in chosen.iter().enumerate() {
            for &b in &chosen[i + 1..] {
                if m.contract(a).doctor() == m.contract(b).doctor()
                    || m.contract(a).hospital() == m.contract(b).hospital()
                {
                    continue 'mask;
                }
            }
        }
        out.push(Allocation::new(m, chosen).unwrap());
    }
    out
}

fn sample_mechanism(seed: u64) -> Mechanism {
    let q = |s: &str| -> Quantile { s.parse().unwrap() };
    let mechs = [
        Mechanism::DoctorDa,
        Mechanism::HospitalDa,
        Mechanism::InteriorStable,
        Mechanism::Quantile(Quantile::zero()),
        Mechanism::Quantile(q("1/3")),
        Mechanism::Quantile(q("1/2")),
        Mechanism::Quantile(q("2/3")),
        Mechanism::Quantile(Quantile::one()),
    ];
    mechs[(seed % mechs.len() as u64) as usize]
}

proptest! {
    #[test]
    fn allocation_enumeration_matches_powerset_filter(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, _) = common::random_market_with(&mut rng, 3, 3, 10);
        prop_assert_eq!(m.enumerate_allocations(), powerset_allocations(&m));
    }

    #[test]
    fn preference_is_a_strict_total_order(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market(&mut rng);
        for d in m.doctor_ids() {
            let pref = p.pref(d);
            let mut outcomes: Vec<Outcome> =
                m.contracts_of_doctor(d).iter().map(|&c| Some(c)).collect();
            outcomes.push(None);
            for &a in &outcomes {
                prop_assert!(!pref.prefers(a, a));
                for &b in &outcomes {
                    if a != b {
                        prop_assert!(pref.prefers(a, b) ^ pref.prefers(b, a));
                    }
                    for &c in &outcomes {
                        if pref.prefers(a, b) && pref.prefers(b, c) {
                            prop_assert!(pref.prefers(a, c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market(&mut rng);
        let (m2, p2) = parse_market(&m.to_text(Some(&p))).unwrap();
        prop_assert_eq!(&m, &m2);
        prop_assert_eq!(Some(p), p2);
        let (m3, p3) = parse_market(&m.to_text(None)).unwrap();
        // Without doctor lines there is no profile (unless the roster is empty).
        prop_assert!(p3.is_none() || m3.doctor_count() == 0);
        prop_assert_eq!(m, m3);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn da_outputs_are_the_stable_extremes(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market(&mut rng);
        let stable = enumerate_stable(&p, &m);
        prop_assert!(stable.k() >= 1);

        let doc = doctor_proposing_da(&p, &m);
        let hos = hospital_proposing_da(&p, &m);
        prop_assert!(stable.contains(&doc));
        prop_assert!(stable.contains(&hos));
        for y in stable.allocations() {
            for d in m.doctor_ids() {
                prop_assert!(p.pref(d).weakly_prefers(
                    doc.doctor_assignment(&m, d),
                    y.doctor_assignment(&m, d)
                ));
            }
            for h in m.hospital_ids() {
                prop_assert!(m.hospital_pref(h).weakly_prefers(
                    hos.hospital_assignment(&m, h),
                    y.hospital_assignment(&m, h)
                ));
            }
        }
    }

    #[test]
    fn quantile_allocations_are_stable_and_monotone(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market(&mut rng);
        let stable = enumerate_stable(&p, &m);
        let k = stable.k();
        let ladder: Vec<Allocation> =
            (1..=k).map(|j| quantile_allocation(&stable, &p, &m, j)).collect();
        for y in &ladder {
            prop_assert!(y.is_valid(&m));
            prop_assert!(stable.contains(y));
        }
        for pair in ladder.windows(2) {
            for d in m.doctor_ids() {
                prop_assert!(p.pref(d).weakly_prefers(
                    pair[0].doctor_assignment(&m, d),
                    pair[1].doctor_assignment(&m, d)
                ));
            }
        }
        prop_assert_eq!(&ladder[0], &doctor_proposing_da(&p, &m));
        prop_assert_eq!(&ladder[k - 1], &hospital_proposing_da(&p, &m));
    }

    #[test]
    fn extreme_quantiles_agree_with_the_proposal_algorithms(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market(&mut rng);
        prop_assert_eq!(
            apply_mechanism(Mechanism::Quantile(Quantile::zero()), &p, &m),
            doctor_proposing_da(&p, &m)
        );
        prop_assert_eq!(
            apply_mechanism(Mechanism::Quantile(Quantile::one()), &p, &m),
            hospital_proposing_da(&p, &m)
        );
    }

    #[test]
    fn option_set_witnesses_replay_exactly(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, p) = common::random_market_with(&mut rng, 2, 2, 4);
        let mech = sample_mechanism(seed);
        for d in m.doctor_ids() {
            let reported = p.pref(d);
            let options = option_set(mech, &m, d, reported, DEFAULT_BUDGET).unwrap();
            prop_assert!(!options.is_empty());
            for (outcome, witness) in options.entries() {
                let profile = witness.complete(reported, &m);
                let replayed = apply_mechanism(mech, &profile, &m).doctor_assignment(&m, d);
                prop_assert_eq!(replayed, *outcome);
            }
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certification_counterexamples_reverify(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, _) = common::random_market_with(&mut rng, 2, 2, 3);
        let mech = sample_mechanism(seed);

        let nom = certify(mech, &m, Property::NotObviouslyManipulable, DEFAULT_BUDGET).unwrap();
        if let Some(cx) = &nom.counterexample {
            let v = is_obvious_manipulation(mech, &m, cx.doctor, &cx.truth, &cx.report, DEFAULT_BUDGET)
                .unwrap();
            prop_assert!(v.is_obvious);
            // The verdict's implication: obvious entails a manipulation witness.
            prop_assert!(v.is_manipulation());
            // The stored witness replays to a strict improvement.
            let honest = apply_mechanism(mech, &cx.witness.complete(&cx.truth, &m), &m)
                .doctor_assignment(&m, cx.doctor);
            let gamed = apply_mechanism(mech, &cx.witness.complete(&cx.report, &m), &m)
                .doctor_assignment(&m, cx.doctor);
            prop_assert!(cx.truth.prefers(gamed, honest));
        }

        let sp = certify(mech, &m, Property::StrategyProofness, DEFAULT_BUDGET).unwrap();
        if let Some(cx) = &sp.counterexample {
            let w = is_manipulation(mech, &m, cx.doctor, &cx.truth, &cx.report, DEFAULT_BUDGET)
                .unwrap();
            prop_assert!(w.is_some());
        }
        // Strategy-proofness is the stronger property.
        if sp.passed {
            prop_assert!(nom.passed);
        }
    }
}
