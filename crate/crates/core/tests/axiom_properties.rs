#[cfg(feature = "exact")]
use csf_lab::Backend;
use csf_lab::{check_axiom, falsify, AxiomId, CustomImpact, ImpactSpec, SamplingPlan, Status};
use proptest::prelude::*;

fn plan(seed: u64) -> SamplingPlan {
    SamplingPlan::with_seed(seed).profiles(150)
}

fn weights(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((lo..hi).prop_map(|v| (v * 100.0).round() / 100.0), n)
}

fn luck_spec() -> impl Strategy<Value = ImpactSpec> {
    (2usize..=5).prop_flat_map(|n| {
        (weights(n, 0.1, 5.0), weights(n, 0.01, 3.0), 0.2f64..3.0)
            .prop_map(|(a, b, r)| ImpactSpec::power_plus_constant(a, b, r).unwrap())
    })
}

/// At least three contestants, so DC and CRI apply.
fn tullock_spec() -> impl Strategy<Value = ImpactSpec> {
    (3usize..=5).prop_flat_map(|n| {
        (weights(n, 0.1, 5.0), 0.2f64..3.0).prop_map(|(a, r)| ImpactSpec::tullock(a, r).unwrap())
    })
}

fn assert_holds(spec: &ImpactSpec, axioms: &[AxiomId], plan: &SamplingPlan) -> Result<(), TestCaseError> {
    for &axiom in axioms {
        let v = check_axiom(spec, axiom, plan).unwrap();
        prop_assert_eq!(
            v.status,
            Status::HoldsOnSamples,
            "{} on {}: {:?}",
            axiom,
            v.spec,
            v.witness
        );
        prop_assert!(v.stats.predicates > 0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn luck_family_satisfies_its_axioms(spec in luck_spec(), seed in any::<u64>()) {
        assert_holds(&spec, &[AxiomId::Sm, AxiomId::Lca, AxiomId::Hre, AxiomId::Pa, AxiomId::Di], &plan(seed))?;
    }

    #[test]
    fn tullock_satisfies_scale_and_consistency_axioms(spec in tullock_spec(), seed in any::<u64>()) {
        assert_holds(
            &spec,
            &[AxiomId::Hom, AxiomId::Rh, AxiomId::Dc, AxiomId::Cri, AxiomId::Hre],
            &plan(seed),
        )?;
    }

    #[test]
    fn symmetric_luck_is_anonymous(b in 0.0f64..3.0, r in 0.2f64..3.0, seed in any::<u64>()) {
        assert_holds(&ImpactSpec::symmetric_luck(b, r).unwrap(), &[AxiomId::Any], &plan(seed))?;
    }

    #[test]
    fn head_starts_ignore_reallocation(b in weights(3, 0.0, 3.0), seed in any::<u64>()) {
        assert_holds(&ImpactSpec::linear(b).unwrap(), &[AxiomId::Nar], &plan(seed))?;
    }

    /// Integer-r luck specs hold with zero gap in exact arithmetic.
    #[cfg(feature = "exact")]
    #[test]
    fn exact_runs_have_no_gap(
        a in prop::collection::vec(1u32..40, 3),
        b in prop::collection::vec(1u32..30, 3),
        r in 1u32..=2,
        seed in any::<u64>(),
    ) {
        let tenth = |v: &Vec<u32>| v.iter().map(|&k| k as f64 / 10.0).collect::<Vec<_>>();
        let spec = ImpactSpec::power_plus_constant(tenth(&a), tenth(&b), r as f64).unwrap();
        let plan = SamplingPlan::with_seed(seed).profiles(40).backend(Backend::ExactRational);
        for axiom in [AxiomId::Sm, AxiomId::Lca, AxiomId::Hre, AxiomId::Di] {
            let v = check_axiom(&spec, axiom, &plan).unwrap();
            prop_assert!(v.holds(), "{}", axiom);
            prop_assert_eq!(v.stats.max_gap, 0.0);
        }
    }

    /// Every violation replays on its own and beats the tolerance.
    #[test]
    fn witnesses_replay(spec in luck_spec(), seed in any::<u64>()) {
        let plan = plan(seed);
        for axiom in [AxiomId::Hom, AxiomId::Rh, AxiomId::Dc, AxiomId::Cri, AxiomId::Nar] {
            let v = check_axiom(&spec, axiom, &plan).unwrap();
            if let Some(w) = &v.witness {
                let again = w.replay(&spec, axiom, &plan).unwrap();
                prop_assert!(again.is_some(), "{} witness did not replay", axiom);
                prop_assert!(w.gap > plan.tolerance);
                prop_assert_eq!(again.unwrap().gap, w.gap);
            }
        }
    }

    #[test]
    fn verdicts_are_deterministic(spec in luck_spec(), seed in any::<u64>()) {
        let plan = plan(seed);
        for axiom in [AxiomId::Hom, AxiomId::Hre, AxiomId::Cp] {
            prop_assert_eq!(check_axiom(&spec, axiom, &plan).unwrap(), check_axiom(&spec, axiom, &plan).unwrap());
        }
    }
}

#[test]
fn out_of_family_targets_are_falsified() {
    let plan = SamplingPlan::default();
    let luck = ImpactSpec::power_plus_constant(vec![1.0; 3], vec![1.0; 3], 1.0).unwrap();
    let cases = [
        (luck.clone(), AxiomId::Hom),
        (luck.clone(), AxiomId::Rh),
        (luck.clone(), AxiomId::Dc),
        (luck, AxiomId::Cri),
        (ImpactSpec::tullock(vec![1.0; 3], 2.0).unwrap(), AxiomId::Nar),
        (ImpactSpec::custom(CustomImpact::exp()), AxiomId::Hre),
    ];
    for (spec, axiom) in cases {
        let ce = falsify(&spec, axiom, &plan).unwrap().expect("counterexample");
        assert!(ce.replay(&spec, &plan).unwrap().is_some(), "{axiom}");
        let again = falsify(&spec, axiom, &plan).unwrap().unwrap();
        assert_eq!(again, ce, "{axiom}");
    }
}

#[test]
fn in_family_targets_have_no_counterexample() {
    let plan = SamplingPlan::default().profiles(2000);
    let tullock = ImpactSpec::tullock(vec![1.0, 2.0, 0.5], 0.7).unwrap();
    for axiom in [AxiomId::Hom, AxiomId::Rh, AxiomId::Dc, AxiomId::Cri] {
        assert_eq!(falsify(&tullock, axiom, &plan).unwrap(), None, "{axiom}");
    }
    let linear = ImpactSpec::linear(vec![1.0, 0.0, 2.0]).unwrap();
    assert_eq!(falsify(&linear, AxiomId::Nar, &plan).unwrap(), None);
    let sym = ImpactSpec::symmetric_luck(1.0, 0.5).unwrap();
    assert_eq!(falsify(&sym, AxiomId::Any, &plan).unwrap(), None);
}
