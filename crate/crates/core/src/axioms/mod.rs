//! Allocation axioms as sampled predicates.
//!
//! [`check_axiom`] walks a deterministic stream of samples (an anchor
//! profile, a small integer grid, then seeded random draws) and stops at the
//! first violation. Every verdict reports how many predicate instances were
//! judged and how many samples were skipped, so "holds on samples" is always
//! accompanied by its evidence.

mod plan;
mod predicate;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contest::Subset;
use crate::csf::Kernel;
use crate::error::{CsfError, Result};
use crate::impact::ImpactSpec;
use crate::scalar::{Backend, Number, Scalar};

pub use plan::SamplingPlan;
pub(crate) use plan::{min_n, CaseStream, GRID_LEVELS};
pub(crate) use predicate::{judge_case, lift, merge_sides, Judge};
pub use suites::{
    backend_for, check_sp_cp_boundary, implication_catalogue, implication_suite, implications_for,
    opponent_monotonicity, AdditivityAgreement, FamilyImplications, ImplicationReport, MonotonicityReport,
    SpCpBoundary,
};

/// Instantiate a generic call for the plan's backend.
macro_rules! with_backend {
    ($backend:expr, $t:ident => $call:expr) => {
        match $backend {
            $crate::scalar::Backend::Float64 => {
                type $t = f64;
                $call
            }
            #[cfg(feature = "exact")]
            $crate::scalar::Backend::ExactRational => {
                type $t = $crate::scalar::Rational;
                $call
            }
            #[cfg(not(feature = "exact"))]
            $crate::scalar::Backend::ExactRational => Err($crate::error::CsfError::BackendUnavailable(
                "crate built without the `exact` feature".into(),
            )),
        }
    };
}
pub(crate) use with_backend;

/// The axioms that can be checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxiomId {
    /// Strict monotonicity in own effort.
    #[serde(rename = "SM")]
    Sm,
    /// Luce choice axiom: allocate to a sub-group first.
    #[serde(rename = "LCA")]
    Lca,
    /// Homogeneity of degree zero.
    #[serde(rename = "HOM")]
    Hom,
    /// Relative homogeneity of winning-probability ratios.
    #[serde(rename = "RH")]
    Rh,
    /// Homogeneous relative externality.
    #[serde(rename = "HRE")]
    Hre,
    /// Anonymity.
    #[serde(rename = "ANY")]
    Any,
    /// No advantageous reallocation.
    #[serde(rename = "NAR")]
    Nar,
    /// Dummy consistency.
    #[serde(rename = "DC")]
    Dc,
    /// Clark-Riis independence.
    #[serde(rename = "CRI")]
    Cri,
    /// Split-proofness.
    #[serde(rename = "SP")]
    Sp,
    /// Collusion-proofness.
    #[serde(rename = "CP")]
    Cp,
    /// Partial allocation, on the two-level decomposition.
    #[serde(rename = "PA")]
    Pa,
    /// Draw independence, on the two-level decomposition.
    #[serde(rename = "DI")]
    Di,
}

impl AxiomId {
    pub const ALL: [AxiomId; 13] = [
        AxiomId::Sm,
        AxiomId::Lca,
        AxiomId::Hom,
        AxiomId::Rh,
        AxiomId::Hre,
        AxiomId::Any,
        AxiomId::Nar,
        AxiomId::Dc,
        AxiomId::Cri,
        AxiomId::Sp,
        AxiomId::Cp,
        AxiomId::Pa,
        AxiomId::Di,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AxiomId::Sm => "SM",
            AxiomId::Lca => "LCA",
            AxiomId::Hom => "HOM",
            AxiomId::Rh => "RH",
            AxiomId::Hre => "HRE",
            AxiomId::Any => "ANY",
            AxiomId::Nar => "NAR",
            AxiomId::Dc => "DC",
            AxiomId::Cri => "CRI",
            AxiomId::Sp => "SP",
            AxiomId::Cp => "CP",
            AxiomId::Pa => "PA",
            AxiomId::Di => "DI",
        }
    }

    /// The predicate, in one line.
    pub fn statement(self) -> &'static str {
        match self {
            AxiomId::Sm => "x_i < x_i' and p_i(x) < 1 imply p_i(x) < p_i(x_i', x_-i)",
            AxiomId::Lca => "p_i^N(x) = p_i^M(x^M) * sum_{j in M} p_j^N(x)",
            AxiomId::Hom => "p_i(lambda x) = p_i(x)",
            AxiomId::Rh => "p_i(x)/p_j(x) = p_i(lambda x)/p_j(lambda x) for x_i, x_j > 0",
            AxiomId::Hre => "d_ij(x)/d_ji(x) = d_ij(lambda x)/d_ji(lambda x) for x_i, x_j > 0",
            AxiomId::Any => "swapping x_i and x_j swaps p_i and p_j",
            AxiomId::Nar => "p_k is unchanged when x_i + x_j is redistributed, k not in {i, j}",
            AxiomId::Dc => "x_i = 0 implies p_j^N(x) = p_j^{N-i}(x^{N-i})",
            AxiomId::Cri => "p_i(0, x_-j) = p_i(x) / (1 - p_j(x))",
            AxiomId::Sp => "p_i + p_j <= p_i^{N-j}(x_i + x_j, ..)",
            AxiomId::Cp => "p_i + p_j >= p_i^{N-j}(x_i + x_j, ..)",
            AxiomId::Pa => "sum mu_i + mu_null = 1 and mu_null > 0",
            AxiomId::Di => "mu_i / (1 - sum_{j != i} mu_j) does not depend on x_-i",
        }
    }

    /// PA and DI read the two-level decomposition.
    pub fn needs_decomposition(self) -> bool {
        matches!(self, AxiomId::Pa | AxiomId::Di)
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxiomId {
    type Err = CsfError;

    fn from_str(s: &str) -> Result<Self> {
        AxiomId::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CsfError::InvalidParameter(format!("unknown axiom {s:?}")))
    }
}

/// Additive or multiplicative increase of one effort.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bump {
    Additive,
    Multiplicative,
}

/// The extra input an axiom needs besides the profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    /// Compare `x` with `λx`.
    Scale { lambda: f64 },
    /// Raise one effort to `x_i + δ` or `x_i (1 + δ)`.
    Bump { bump: Bump, delta: f64 },
    /// Sub-contest `M`.
    Subset { subset: Subset },
    /// Pairwise swaps.
    Swap,
    /// Give contestant `i` the fraction `share` of `x_i + x_j`.
    Reallocate { share: f64 },
    /// Drop each inactive contestant.
    Dummy,
    /// Silence each contestant in turn.
    Silence,
    /// Merge `j` into `i`.
    Merge,
    /// Read the decomposition itself.
    Decompose,
    /// Replace `x_-i` by `others`.
    Perturb { others: Vec<f64> },
}

/// A sample on which a predicate fails.
///
/// `focus` names the contestants of the failing instance (0-based): `[i]`
/// for HOM, SM, LCA and DI, `[i, j]` for RH, HRE, ANY, SP and CP, `[i, j, k]`
/// for NAR (`k` the bystander), `[dummy, j]` for DC and `[silenced, i]` for
/// CRI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub profile: Vec<f64>,
    pub probe: Probe,
    pub focus: Vec<usize>,
    pub lhs: Number,
    pub rhs: Number,
    /// `|lhs - rhs| / max(1, |lhs|, |rhs|)`.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    HoldsOnSamples,
    Violated,
    Inapplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::HoldsOnSamples => "HoldsOnSamples",
            Status::Violated => "Violated",
            Status::Inapplicable => "Inapplicable",
        })
    }
}

/// Bookkeeping for a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Samples examined, grid included.
    pub samples: usize,
    pub grid_samples: usize,
    /// Predicate instances judged.
    pub predicates: usize,
    /// Samples that could not be evaluated or were too small for the axiom.
    pub skipped: usize,
    /// Instances left undecided: undefined quantities, or float differences
    /// below resolution.
    pub unresolved: usize,
    /// Random profiles redrawn to meet the axiom's precondition.
    pub resampled: usize,
    /// Largest gap among passing instances.
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomVerdict {
    pub axiom: AxiomId,
    pub family: &'static str,
    pub spec: String,
    pub backend: Backend,
    pub status: Status,
    pub witness: Option<Witness>,
    pub samples_run: usize,
    pub stats: SampleStats,
    /// Why the axiom was not checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub seed: u64,
    pub lambda_set: Vec<f64>,
    pub zero_probability: f64,
}

impl AxiomVerdict {
    pub fn holds(&self) -> bool {
        self.status == Status::HoldsOnSamples
    }

    pub fn violated(&self) -> bool {
        self.status == Status::Violated
    }

    fn new(spec: &ImpactSpec, axiom: AxiomId, plan: &SamplingPlan) -> Self {
        AxiomVerdict {
            axiom,
            family: spec.name(),
            spec: spec.summary(),
            backend: plan.backend,
            status: Status::HoldsOnSamples,
            witness: None,
            samples_run: 0,
            stats: SampleStats::default(),
            note: None,
            seed: plan.seed,
            lambda_set: plan.lambda_set(),
            zero_probability: plan.zero_probability,
        }
    }
}

/// Why `axiom` cannot be checked on `spec`, if it cannot.
pub fn inapplicability(spec: &ImpactSpec, axiom: AxiomId) -> Option<&'static str> {
    if !axiom.needs_decomposition() {
        return None;
    }
    if !spec.is_parametric() {
        return Some("the decomposition needs a power-plus-constant impact");
    }
    let n = spec.arity().unwrap_or(2);
    if spec.luck_total(n).unwrap_or(0.0) <= 0.0 {
        return Some("the family has no luck, so the tie probability is identically zero");
    }
    None
}

/// Same as [`inapplicability`], as an error.
pub fn require_applicable(spec: &ImpactSpec, axiom: AxiomId) -> Result<()> {
    match inapplicability(spec, axiom) {
        Some(why) => Err(CsfError::InapplicableAxiom {
            axiom: axiom.as_str(),
            why,
        }),
        None => Ok(()),
    }
}

/// Check one axiom against one CSF on the plan's samples.
///
/// Stops at the first violating sample in canonical order. PA and DI on a
/// family without luck (or with a custom impact) come back `Inapplicable`
/// rather than as an error; evaluation failures on individual samples are
/// counted in [`SampleStats::skipped`].
pub fn check_axiom(spec: &ImpactSpec, axiom: AxiomId, plan: &SamplingPlan) -> Result<AxiomVerdict> {
    plan.validate()?;
    let mut verdict = AxiomVerdict::new(spec, axiom, plan);
    if let Some(why) = inapplicability(spec, axiom) {
        verdict.status = Status::Inapplicable;
        verdict.note = Some(why.to_string());
        return Ok(verdict);
    }
    with_backend!(plan.backend, T => run::<T>(spec, axiom, plan, verdict))
}

/// Lazily built kernels, one per contest size.
pub(crate) struct Kernels<'a, T> {
    spec: &'a ImpactSpec,
    cache: Vec<Option<Kernel<T>>>,
}

impl<'a, T: Scalar> Kernels<'a, T> {
    pub fn new(spec: &'a ImpactSpec) -> Self {
        Kernels {
            spec,
            cache: Vec::new(),
        }
    }

    pub fn get(&mut self, n: usize) -> Result<&Kernel<T>> {
        if self.cache.len() <= n {
            self.cache.resize_with(n + 1, || None);
        }
        if self.cache[n].is_none() {
            self.cache[n] = Some(Kernel::new(self.spec, n)?);
        }
        Ok(self.cache[n].as_ref().expect("just built"))
    }
}

pub(crate) fn judge_for(plan: &SamplingPlan) -> Judge {
    Judge {
        threshold: plan.threshold(),
        exact: plan.backend == Backend::ExactRational,
    }
}

fn run<T: Scalar>(
    spec: &ImpactSpec,
    axiom: AxiomId,
    plan: &SamplingPlan,
    mut verdict: AxiomVerdict,
) -> Result<AxiomVerdict> {
    let judge = judge_for(plan);
    let mut kernels = Kernels::<T>::new(spec);
    let mut stream = CaseStream::new(spec, axiom, plan);
    let stats = &mut verdict.stats;
    stats.grid_samples = stream.grid_cases;
    while let Some(case) = stream.next_case() {
        stats.samples += 1;
        let n = case.profile.len();
        if n < min_n(axiom) {
            stats.skipped += 1;
            continue;
        }
        let kernel = kernels.get(n)?;
        match judge_case(kernel, &judge, axiom, &case.profile, &case.probe) {
            Ok(tally) => {
                stats.predicates += tally.predicates;
                stats.unresolved += tally.unresolved;
                stats.max_gap = stats.max_gap.max(tally.max_gap);
                if let Some(f) = tally.failure {
                    verdict.status = Status::Violated;
                    verdict.witness = Some(Witness {
                        profile: case.profile,
                        probe: case.probe,
                        focus: f.focus,
                        lhs: f.lhs,
                        rhs: f.rhs,
                        gap: f.gap,
                    });
                    break;
                }
            }
            Err(_) => stats.skipped += 1,
        }
    }
    stats.resampled = stream.resampled;
    verdict.samples_run = stats.samples;
    if verdict.status == Status::HoldsOnSamples && stats.predicates == 0 {
        verdict.status = Status::Inapplicable;
        verdict.note = Some("no sample admitted a predicate instance".into());
    }
    Ok(verdict)
}

/// Judge a single sample and return its first failing instance, if any.
///
/// Used to replay witnesses and by the shrinker. Errors if the sample
/// cannot be evaluated.
pub fn evaluate_sample(
    spec: &ImpactSpec,
    axiom: AxiomId,
    plan: &SamplingPlan,
    profile: &[f64],
    probe: &Probe,
) -> Result<Option<Witness>> {
    require_applicable(spec, axiom)?;
    if profile.len() < min_n(axiom) {
        return Err(CsfError::InvalidProfile(format!(
            "{axiom} needs at least {} contestants",
            min_n(axiom)
        )));
    }
    crate::contest::EffortProfile::from_f64(profile)?;
    let judge = judge_for(plan);
    with_backend!(plan.backend, T => {
        let kernel = Kernel::<T>::new(spec, profile.len())?;
        let tally = judge_case(&kernel, &judge, axiom, profile, probe)?;
        Ok(tally.failure.map(|f| Witness {
            profile: profile.to_vec(),
            probe: probe.clone(),
            focus: f.focus,
            lhs: f.lhs,
            rhs: f.rhs,
            gap: f.gap,
        }))
    })
}

impl Witness {
    /// Re-evaluate this witness in isolation.
    pub fn replay(&self, spec: &ImpactSpec, axiom: AxiomId, plan: &SamplingPlan) -> Result<Option<Witness>> {
        evaluate_sample(spec, axiom, plan, &self.profile, &self.probe)
    }
}
