//! Counterexample search and witness shrinking.
//!
//! The search is [`check_axiom`] itself: the first violating sample in
//! canonical order. Shrinking then pulls the witness back onto the small
//! integer grid `{0, 1, 2, 4}` and the scale factors `{2, 1/2}`, one
//! candidate at a time, keeping a candidate only if it still violates.

use serde::Serialize;

use crate::axioms::{check_axiom, evaluate_sample, AxiomId, Probe, SamplingPlan, Witness, GRID_LEVELS};
use crate::error::Result;
use crate::impact::ImpactSpec;
use crate::scalar::{Backend, Number};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub axiom: AxiomId,
    pub family: &'static str,
    pub spec: String,
    pub backend: Backend,
    pub witness: Witness,
    pub shrunk: bool,
    /// Threshold the gap was judged against.
    pub tolerance: f64,
    pub seed: u64,
}

impl Counterexample {
    pub fn gap(&self) -> f64 {
        self.witness.gap
    }

    /// Re-evaluate the witness in isolation.
    pub fn replay(&self, spec: &ImpactSpec, plan: &SamplingPlan) -> Result<Option<Witness>> {
        self.witness.replay(spec, self.axiom, plan)
    }
}

/// First violation of `axiom` in the plan's canonical order, shrunk.
/// `None` when every sample passes or the axiom does not apply.
pub fn falsify(spec: &ImpactSpec, axiom: AxiomId, plan: &SamplingPlan) -> Result<Option<Counterexample>> {
    let verdict = check_axiom(spec, axiom, plan)?;
    let Some(witness) = verdict.witness else {
        return Ok(None);
    };
    let found = Counterexample {
        axiom,
        family: spec.name(),
        spec: spec.summary(),
        backend: plan.backend,
        witness,
        shrunk: false,
        tolerance: plan.threshold(),
        seed: plan.seed,
    };
    Ok(Some(shrink(spec, &found, plan)))
}

fn on_grid(v: f64) -> bool {
    GRID_LEVELS.contains(&v)
}

fn off_grid(x: &[f64]) -> usize {
    x.iter().filter(|v| !on_grid(**v)).count()
}

/// Replace positive entries by `1, 2, 4, 8, ..` in order of size.
fn rank_snap(x: &[f64]) -> Vec<f64> {
    let mut levels: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    x.iter()
        .map(|v| match levels.iter().position(|l| l == v) {
            Some(rank) => 2f64.powi(rank as i32),
            None => 0.0,
        })
        .collect()
}

/// Grid levels nearest to `v` first, ties toward the smaller level.
fn nearest_levels(v: f64) -> Vec<f64> {
    let mut levels = GRID_LEVELS.to_vec();
    levels.sort_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()).then(a.total_cmp(b)));
    levels
}

struct Shrinker<'a> {
    spec: &'a ImpactSpec,
    axiom: AxiomId,
    plan: &'a SamplingPlan,
}

impl Shrinker<'_> {
    fn violates(&self, profile: &[f64], probe: &Probe) -> Option<Witness> {
        evaluate_sample(self.spec, self.axiom, self.plan, profile, probe)
            .ok()
            .flatten()
    }

    /// Move off-grid coordinates of `x` onto the grid while `still` holds.
    fn snap_vector(&self, x: &mut Vec<f64>, still: impl Fn(&[f64]) -> bool) {
        if off_grid(x) > 0 {
            let snapped = rank_snap(x);
            if snapped != *x && off_grid(&snapped) <= off_grid(x) && still(&snapped) {
                *x = snapped;
            }
        }
        for k in 0..x.len() {
            if on_grid(x[k]) {
                continue;
            }
            for level in nearest_levels(x[k]) {
                let mut candidate = x.clone();
                candidate[k] = level;
                if still(&candidate) {
                    *x = candidate;
                    break;
                }
            }
        }
    }

    fn run(&self, witness: &Witness) -> Witness {
        let mut profile = witness.profile.clone();
        let mut probe = witness.probe.clone();

        self.snap_vector(&mut profile, |x| self.violates(x, &probe).is_some());

        let alternatives: Vec<Probe> = match &probe {
            Probe::Scale { lambda } if *lambda != 2.0 && *lambda != 0.5 => {
                vec![Probe::Scale { lambda: 2.0 }, Probe::Scale { lambda: 0.5 }]
            }
            Probe::Reallocate { share } if ![0.0, 0.5, 1.0].contains(share) => {
                [1.0, 0.0, 0.5].map(|share| Probe::Reallocate { share }).to_vec()
            }
            _ => Vec::new(),
        };
        if let Some(p) = alternatives
            .into_iter()
            .find(|p| self.violates(&profile, p).is_some())
        {
            probe = p;
        }
        if let Probe::Perturb { others } = &probe {
            let mut others = others.clone();
            self.snap_vector(&mut others, |o| {
                self.violates(&profile, &Probe::Perturb { others: o.to_vec() })
                    .is_some()
            });
            probe = Probe::Perturb { others };
        }

        self.violates(&profile, &probe).unwrap_or_else(|| witness.clone())
    }
}

/// Pull a counterexample toward the integer grid while it keeps violating.
///
/// Deterministic, and never raises the number of off-grid coordinates. A
/// witness already on the grid with `λ ∈ {2, 1/2}` comes back unchanged
/// apart from the `shrunk` flag.
pub fn shrink(spec: &ImpactSpec, ce: &Counterexample, plan: &SamplingPlan) -> Counterexample {
    let shrinker = Shrinker {
        spec,
        axiom: ce.axiom,
        plan,
    };
    Counterexample {
        witness: shrinker.run(&ce.witness),
        shrunk: true,
        ..ce.clone()
    }
}

/// One reproduced quantity with its expected exact value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleRow {
    pub name: &'static str,
    pub lhs: Number,
    pub rhs: Number,
    pub expected_lhs: &'static str,
    pub expected_rhs: &'static str,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleReport {
    pub spec: String,
    pub profile: Vec<f64>,
    pub lambda: f64,
    pub rows: Vec<ExampleRow>,
    pub pass: bool,
}

/// The three-contestant luck example `a = b = 1`, `r = 1`, `x = (2, 1, 0)`,
/// `λ = 2`, in exact arithmetic: HOM and RH fail, HRE survives.
#[cfg(feature = "exact")]
pub fn reproduce_paper_examples() -> Result<ExampleReport> {
    use crate::csf::Kernel;
    use crate::scalar::{Rational, Scalar};

    let spec = ImpactSpec::power_plus_constant(vec![1.0; 3], vec![1.0; 3], 1.0)?;
    let kernel = Kernel::<Rational>::new(&spec, 3)?;
    let profile = vec![2.0, 1.0, 0.0];
    let lambda = 2.0;
    let x: Vec<Rational> = profile.iter().map(|&v| Rational::from_f64(v)).collect();
    let scaled: Vec<Rational> = x.iter().map(|v| v * Rational::from_f64(lambda)).collect();
    let p = kernel.full(&x)?;
    let q = kernel.full(&scaled)?;
    let ratio =
        |y: &[Rational]| -> Result<Rational> { Ok(kernel.deviation(0, 1, y)? / kernel.deviation(1, 0, y)?) };
    let row = |name, lhs: Rational, rhs: Rational, expected_lhs, expected_rhs| {
        let (lhs, rhs) = (Number::of(&lhs), Number::of(&rhs));
        let pass = lhs.exact.as_deref() == Some(expected_lhs) && rhs.exact.as_deref() == Some(expected_rhs);
        ExampleRow {
            name,
            lhs,
            rhs,
            expected_lhs,
            expected_rhs,
            pass,
        }
    };
    let rows = vec![
        row("HOM p_1(x) vs p_1(2x)", p[0].clone(), q[0].clone(), "1/2", "5/9"),
        row(
            "RH p_1/p_2 at x vs 2x",
            &p[0] / &p[1],
            &q[0] / &q[1],
            "3/2",
            "5/3",
        ),
        row("HRE d_12/d_21 at x vs 2x", ratio(&x)?, ratio(&scaled)?, "2", "2"),
    ];
    let pass = rows.iter().all(|r| r.pass);
    Ok(ExampleReport {
        spec: spec.summary(),
        profile,
        lambda,
        rows,
        pass,
    })
}

#[cfg(not(feature = "exact"))]
pub fn reproduce_paper_examples() -> Result<ExampleReport> {
    Err(crate::error::CsfError::BackendUnavailable(
        "exact reproduction needs the `exact` feature".into(),
    ))
}
