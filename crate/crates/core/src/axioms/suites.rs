//! Cross-family harnesses: the split/collusion boundary and the implication
//! catalogue.

use serde::Serialize;

use super::{
    check_axiom, judge_for, lift, merge_sides, min_n, with_backend, AxiomId, AxiomVerdict, Bump, CaseStream,
    Kernels, Probe, SamplingPlan, Witness,
};
use crate::error::Result;
use crate::impact::{CustomImpact, ImpactSpec};
use crate::scalar::{relative_gap, Backend, Number, Scalar};

/// The plan's backend when the spec supports it, floats otherwise.
pub fn backend_for(spec: &ImpactSpec, plan: &SamplingPlan) -> SamplingPlan {
    let mut plan = plan.clone();
    if plan.backend == Backend::ExactRational && !spec.supports_exact() {
        plan.backend = Backend::Float64;
    }
    plan
}

/// Sign agreement between the CSF-level merge comparison and the
/// impact-level additivity comparison `f(x_i + x_j)` vs `f(x_i) + f(x_j)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AdditivityAgreement {
    /// `(sample, i, j)` instances compared, all with other contestants' impact positive.
    pub compared: usize,
    pub agreements: usize,
    pub disagreements: usize,
    /// One side resolved to equality within tolerance, the other did not.
    pub ambiguous: usize,
    /// Instances where the impact is strictly subadditive beyond tolerance.
    pub subadditive: usize,
    /// Instances where the impact is strictly superadditive beyond tolerance.
    pub superadditive: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpCpBoundary {
    pub r: f64,
    pub b: f64,
    pub sp: AxiomVerdict,
    pub cp: AxiomVerdict,
    pub additivity: AdditivityAgreement,
    /// SP is violated exactly when some sample is subadditive, CP exactly
    /// when some sample is superadditive, and no signs disagree.
    pub consistent: bool,
}

fn sign_within(gap: f64, diff_positive: bool, diff_zero: bool, threshold: f64) -> i8 {
    if diff_zero || gap <= threshold {
        0
    } else if diff_positive {
        1
    } else {
        -1
    }
}

/// SP and CP for the symmetric family `f(x) = b + x^r`, plus the
/// impact-level cross-check on the same samples.
pub fn check_sp_cp_boundary(r: f64, b: f64, plan: &SamplingPlan) -> Result<SpCpBoundary> {
    let spec = ImpactSpec::symmetric_luck(b, r)?;
    let plan = backend_for(&spec, plan);
    let sp = check_axiom(&spec, AxiomId::Sp, &plan)?;
    let cp = check_axiom(&spec, AxiomId::Cp, &plan)?;
    let additivity = with_backend!(plan.backend, T => additivity::<T>(&spec, &plan))?;
    let consistent = additivity.disagreements == 0
        && sp.violated() == (additivity.subadditive > 0)
        && cp.violated() == (additivity.superadditive > 0);
    Ok(SpCpBoundary {
        r,
        b,
        sp,
        cp,
        additivity,
        consistent,
    })
}

fn additivity<T: Scalar>(spec: &ImpactSpec, plan: &SamplingPlan) -> Result<AdditivityAgreement> {
    let threshold = plan.threshold();
    let mut kernels = Kernels::<T>::new(spec);
    let mut stream = CaseStream::new(spec, AxiomId::Sp, plan);
    let mut out = AdditivityAgreement::default();
    while let Some(case) = stream.next_case() {
        let n = case.profile.len();
        if n < min_n(AxiomId::Sp) {
            continue;
        }
        let kernel = kernels.get(n)?;
        let x: Vec<T> = lift(&case.profile);
        let Ok(f) = (0..n)
            .map(|k| kernel.impact(k, &x[k]))
            .collect::<Result<Vec<T>>>()
        else {
            continue;
        };
        let Ok(p) = kernel.full(&x) else { continue };
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let rest = (0..n)
                    .filter(|&k| k != i && k != j)
                    .fold(T::zero(), |acc, k| acc + &f[k]);
                if !rest.is_positive() {
                    continue;
                }
                let Ok((split, merged)) = merge_sides(kernel, &x, &p, i, j) else {
                    continue;
                };
                let Ok(joint) = kernel.impact(i, &(x[i].clone() + &x[j])) else {
                    continue;
                };
                let parts = f[i].clone() + &f[j];
                let csf = sign_within(
                    relative_gap(&merged, &split),
                    merged > split,
                    merged == split,
                    threshold,
                );
                let imp = sign_within(
                    relative_gap(&joint, &parts),
                    joint > parts,
                    joint == parts,
                    threshold,
                );
                out.compared += 1;
                match imp {
                    1 => out.superadditive += 1,
                    -1 => out.subadditive += 1,
                    _ => {}
                }
                if csf == imp {
                    out.agreements += 1;
                } else if csf == 0 || imp == 0 {
                    out.ambiguous += 1;
                } else {
                    out.disagreements += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Opponents' winning probabilities under a rise in one effort.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub family: &'static str,
    pub spec: String,
    /// `(sample, i, j)` instances checked for a weak decrease of `p_j`.
    pub checked: usize,
    /// Of those, instances with `p_j > 0` also checked for a strict decrease.
    pub strict_checked: usize,
    /// Strict decreases lost in float rounding.
    pub unresolved: usize,
    /// First instance where `p_j` failed to decrease; focus is `[i, j]`.
    pub witness: Option<Witness>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Check that `p_j` falls when any opponent `i` raises effort, strictly when
/// `p_j > 0`, on the SM sample stream.
pub fn opponent_monotonicity(spec: &ImpactSpec, plan: &SamplingPlan) -> Result<MonotonicityReport> {
    plan.validate()?;
    let plan = backend_for(spec, plan);
    with_backend!(plan.backend, T => monotonicity::<T>(spec, &plan))
}

fn monotonicity<T: Scalar>(spec: &ImpactSpec, plan: &SamplingPlan) -> Result<MonotonicityReport> {
    let judge = judge_for(plan);
    let mut kernels = Kernels::<T>::new(spec);
    let mut stream = CaseStream::new(spec, AxiomId::Sm, plan);
    let mut report = MonotonicityReport {
        family: spec.name(),
        spec: spec.summary(),
        checked: 0,
        strict_checked: 0,
        unresolved: 0,
        witness: None,
    };
    'cases: while let Some(case) = stream.next_case() {
        let Probe::Bump { bump, delta } = case.probe else {
            unreachable!("SM stream")
        };
        let n = case.profile.len();
        let kernel = kernels.get(n)?;
        let x: Vec<T> = lift(&case.profile);
        let Ok(p) = kernel.full(&x) else { continue };
        let delta_t = T::from_f64(delta);
        for i in 0..n {
            let raised = match bump {
                Bump::Additive => x[i].clone() + &delta_t,
                Bump::Multiplicative => x[i].clone() * &(T::one() + &delta_t),
            };
            if raised <= x[i] {
                continue;
            }
            let mut y = x.clone();
            y[i] = raised;
            let Ok(q) = kernel.full(&y) else { continue };
            for j in (0..n).filter(|&j| j != i) {
                report.checked += 1;
                let gap = relative_gap(&q[j], &p[j]);
                let failed = if q[j] > p[j] {
                    judge.exact || gap > judge.threshold
                } else if p[j].is_positive() {
                    report.strict_checked += 1;
                    if q[j] < p[j] {
                        false
                    } else if judge.exact {
                        true
                    } else {
                        report.unresolved += 1;
                        false
                    }
                } else {
                    false
                };
                if failed {
                    report.witness = Some(Witness {
                        profile: case.profile.clone(),
                        probe: case.probe.clone(),
                        focus: vec![i, j],
                        lhs: Number::of(&p[j]),
                        rhs: Number::of(&q[j]),
                        gap,
                    });
                    break 'cases;
                }
            }
        }
    }
    Ok(report)
}

/// The families the implication harness runs on.
pub fn implication_catalogue() -> Vec<ImpactSpec> {
    vec![
        ImpactSpec::tullock(vec![1.0, 2.0, 0.5], 0.8).expect("valid"),
        ImpactSpec::power_plus_constant(vec![1.0; 3], vec![1.0; 3], 1.0).expect("valid"),
        ImpactSpec::linear(vec![1.0, 0.0, 2.0]).expect("valid"),
        ImpactSpec::symmetric_luck(0.5, 2.0).expect("valid"),
        ImpactSpec::ratio(),
        ImpactSpec::custom(CustomImpact::exp()),
        ImpactSpec::custom(CustomImpact::log1p()),
    ]
}

const IMPLICATION_AXIOMS: [AxiomId; 7] = [
    AxiomId::Sm,
    AxiomId::Lca,
    AxiomId::Hom,
    AxiomId::Rh,
    AxiomId::Hre,
    AxiomId::Dc,
    AxiomId::Cri,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyImplications {
    pub family: &'static str,
    pub spec: String,
    pub verdicts: Vec<AxiomVerdict>,
    pub monotonicity: MonotonicityReport,
    /// DC and CRI agree; `None` when LCA failed and the claim does not apply.
    pub dc_matches_cri: Option<bool>,
    /// HRE and RH agree; `None` unless CRI held.
    pub hre_matches_rh: Option<bool>,
    /// DC holds; `None` unless SM, LCA and HOM held.
    pub dc_follows: Option<bool>,
}

impl FamilyImplications {
    pub fn verdict(&self, axiom: AxiomId) -> Option<&AxiomVerdict> {
        self.verdicts.iter().find(|v| v.axiom == axiom)
    }

    pub fn passes(&self) -> bool {
        self.dc_matches_cri != Some(false)
            && self.hre_matches_rh != Some(false)
            && self.dc_follows != Some(false)
            && self.monotonicity.holds()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImplicationReport {
    pub families: Vec<FamilyImplications>,
}

impl ImplicationReport {
    pub fn passes(&self) -> bool {
        self.families.iter().all(FamilyImplications::passes)
    }
}

/// Run the implication claims over the catalogue: DC agrees with CRI when
/// LCA holds, HRE agrees with RH when CRI holds, SM + LCA + HOM give DC, and
/// opponents' probabilities fall in each effort.
pub fn implication_suite(plan: &SamplingPlan) -> Result<ImplicationReport> {
    plan.validate()?;
    let families = implication_catalogue()
        .iter()
        .map(|spec| implications_for(spec, plan))
        .collect::<Result<_>>()?;
    Ok(ImplicationReport { families })
}

pub fn implications_for(spec: &ImpactSpec, plan: &SamplingPlan) -> Result<FamilyImplications> {
    let plan = backend_for(spec, plan);
    let verdicts = IMPLICATION_AXIOMS
        .iter()
        .map(|&a| check_axiom(spec, a, &plan))
        .collect::<Result<Vec<_>>>()?;
    let holds = |a: AxiomId| verdicts.iter().any(|v| v.axiom == a && v.holds());
    let status = |a: AxiomId| verdicts.iter().find(|v| v.axiom == a).map(|v| v.status);
    let dc_matches_cri = holds(AxiomId::Lca).then(|| status(AxiomId::Dc) == status(AxiomId::Cri));
    let hre_matches_rh = holds(AxiomId::Cri).then(|| status(AxiomId::Hre) == status(AxiomId::Rh));
    let dc_follows =
        (holds(AxiomId::Sm) && holds(AxiomId::Lca) && holds(AxiomId::Hom)).then(|| holds(AxiomId::Dc));
    Ok(FamilyImplications {
        family: spec.name(),
        spec: spec.summary(),
        monotonicity: opponent_monotonicity(spec, &plan)?,
        verdicts,
        dc_matches_cri,
        hre_matches_rh,
        dc_follows,
    })
}
