use std::sync::Arc;

use csf_lab::csf::closed_form_deviation;
use csf_lab::impact::ImpactFn;
use csf_lab::{
    deviation, evaluate, evaluate_full, restrict, CsfError, CustomImpact, ImpactSpec, Rational, Scalar,
    Subset,
};
use proptest::prelude::*;

fn q(x: f64) -> Rational {
    Rational::from_f64(x)
}

fn lift(x: &[f64]) -> Vec<Rational> {
    x.iter().map(|&v| q(v)).collect()
}

/// Tenths in `[lo, hi]`, exact in the rational backend.
fn tenths(lo: u32, hi: u32) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(|k| k as f64 / 10.0)
}

/// Luck-Tullock spec with integer `r` plus a profile, all on decimal grids.
fn exact_case() -> impl Strategy<Value = (ImpactSpec, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(tenths(1, 40), n),
            prop::collection::vec(tenths(0, 30), n),
            1u32..=3,
            prop::collection::vec(prop_oneof![Just(0.0), tenths(1, 80)], n),
        )
            .prop_map(|(a, b, r, x)| (ImpactSpec::power_plus_constant(a, b, r as f64).unwrap(), x))
    })
}

/// Same with real `r` and log-spread efforts, for the float backend.
fn float_case() -> impl Strategy<Value = (ImpactSpec, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..20.0, n),
            prop::collection::vec(0.0f64..5.0, n),
            0.1f64..4.0,
            prop::collection::vec(
                prop_oneof![Just(0.0), (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))],
                n,
            ),
        )
            .prop_map(|(a, b, r, x)| (ImpactSpec::power_plus_constant(a, b, r).unwrap(), x))
    })
}

fn subset_of(n: usize) -> impl Strategy<Value = Subset> {
    (0u64..(1 << n))
        .prop_filter("at least two members", |m| m.count_ones() >= 2)
        .prop_map(Subset::from_mask)
}

fn with_subset<S: Strategy<Value = (ImpactSpec, Vec<f64>)>>(
    s: S,
) -> impl Strategy<Value = (ImpactSpec, Vec<f64>, Subset)> {
    s.prop_flat_map(|(spec, x)| {
        let n = x.len();
        (Just(spec), Just(x), subset_of(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probabilities_sum_to_one_exactly((spec, x, m) in with_subset(exact_case())) {
        if let Ok(p) = evaluate(&spec, m, &lift(&x)) {
            let total = p.iter().fold(Rational::zero(), |acc, v| acc + v);
            prop_assert_eq!(total, Rational::one());
            prop_assert!(p.iter().all(|v| *v >= Rational::zero() && *v <= Rational::one()));
        }
    }

    #[test]
    fn probabilities_sum_to_one_in_floats((spec, x, m) in with_subset(float_case())) {
        if let Ok(p) = evaluate(&spec, m, &x) {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    /// `p_i^N = p_i^M · Σ_{j∈M} p_j^N`.
    #[test]
    fn sub_contest_identity((spec, x, m) in with_subset(exact_case())) {
        let x = lift(&x);
        let (Ok(full), Ok(sub)) = (evaluate_full(&spec, &x), evaluate(&spec, m, &x)) else {
            return Ok(());
        };
        let mass = m.members().fold(Rational::zero(), |acc, j| acc + &full[j]);
        for (k, i) in m.members().enumerate() {
            prop_assert_eq!(&full[i], &(sub[k].clone() * &mass));
        }
    }

    /// Parameters are built from integer tenths so that scaling by `c` stays
    /// exact after lifting.
    #[test]
    fn joint_scaling_changes_nothing(
        ab in prop::collection::vec((1u32..40, 0u32..30), 2..=5),
        x in prop::collection::vec(prop_oneof![Just(0.0), tenths(1, 80)], 5),
        r in 1u32..=3,
        c in 1u32..=50,
    ) {
        let n = ab.len();
        let spec_at = |k: u32| {
            let a = ab.iter().map(|&(a, _)| (a * k) as f64 / 10.0).collect();
            let b = ab.iter().map(|&(_, b)| (b * k) as f64 / 10.0).collect();
            ImpactSpec::power_plus_constant(a, b, r as f64).unwrap()
        };
        let x = lift(&x[..n]);
        prop_assert_eq!(evaluate_full(&spec_at(1), &x).ok(), evaluate_full(&spec_at(c), &x).ok());
    }

    #[test]
    fn joint_scaling_in_floats((spec, x) in float_case(), c in 0.01f64..100.0) {
        let scaled = spec.scaled(x.len(), c).unwrap();
        if let (Ok(p), Ok(q)) = (evaluate_full(&spec, &x), evaluate_full(&scaled, &x)) {
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    /// With luck, `d_ij` does not depend on `j` and matches its closed form.
    /// It is undefined only when `j` has no impact at all.
    #[test]
    fn deviation_ignores_the_observer((spec, x) in exact_case()) {
        let n = x.len();
        let x = lift(&x);
        if spec.luck_total(n).unwrap() == 0.0 {
            return Ok(());
        }
        for i in 0..n {
            let closed = closed_form_deviation(&spec, i, &x).unwrap();
            for j in (0..n).filter(|&j| j != i) {
                match deviation(&spec, i, j, &x) {
                    Ok(d) => prop_assert_eq!(&d, &closed),
                    Err(CsfError::UndefinedDeviation { .. }) => {
                        let (a, b) = spec.params(j).unwrap();
                        prop_assert!(b == 0.0 && (a == 0.0 || x[j].is_zero()));
                    }
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }

    /// Restricting to `M` and evaluating equals evaluating `p^M` directly,
    /// and restricting twice is the same as restricting once.
    #[test]
    fn restriction_is_consistent((spec, x, m) in with_subset(exact_case())) {
        let sub = restrict(&spec, m).unwrap();
        let k = m.len();
        prop_assert_eq!(sub.arity(), Some(k));
        let twice = restrict(&sub, Subset::full(k)).unwrap();
        prop_assert_eq!(twice.summary(), sub.summary());
        let xm: Vec<f64> = m.members().map(|j| x[j]).collect();
        prop_assert_eq!(
            evaluate_full(&sub, &lift(&xm)).ok(),
            evaluate(&spec, m, &lift(&x)).ok()
        );
    }
}

#[derive(Debug)]
struct Dips;

impl ImpactFn for Dips {
    fn eval(&self, x: f64) -> f64 {
        1.0 + (x - 1.0).powi(2)
    }
}

#[test]
fn non_monotone_custom_impact_is_a_configuration_error() {
    let err = CustomImpact::shared("dips", Arc::new(Dips)).unwrap_err();
    assert!(matches!(err, CsfError::NonMonotoneImpact { .. }), "{err}");
}

#[test]
fn float_and_exact_agree() {
    let spec = ImpactSpec::power_plus_constant(vec![1.5, 0.5, 2.0], vec![0.3, 1.0, 0.0], 2.0).unwrap();
    let x = [0.7, 2.5, 0.0];
    let f = evaluate_full(&spec, &x).unwrap();
    let e = evaluate_full(&spec, &lift(&x)).unwrap();
    for (a, b) in f.iter().zip(&e) {
        assert!((a - b.to_f64()).abs() < 1e-15);
    }
}
