//! Sampling plans and the canonical case stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AxiomId, Bump, Probe};
use crate::contest::{Subset, MAX_CONTESTANTS};
use crate::error::{CsfError, Result};
use crate::impact::ImpactSpec;
use crate::scalar::Backend;

/// How an axiom is sampled.
///
/// The stream for one `(spec, axiom, plan)` is fully determined by these
/// fields: an anchor profile, then the integer grid, then `profiles` random
/// draws from a ChaCha8 generator seeded with `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub seed: u64,
    /// Number of random profiles drawn after the grid.
    pub profiles: usize,
    /// Contestant counts used when the family does not fix `n`.
    pub n_min: usize,
    pub n_max: usize,
    /// Log-uniform effort range for non-zero coordinates.
    pub effort_min: f64,
    pub effort_max: f64,
    /// Per-coordinate probability of drawing exactly zero.
    pub zero_probability: f64,
    pub fixed_lambdas: Vec<f64>,
    /// Extra log-uniform scale factors drawn once per plan.
    pub random_lambdas: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Relative tolerance for float comparisons.
    pub tolerance: f64,
    /// Relative tolerance for comparisons in the rational backend.
    pub exact_tolerance: f64,
    pub backend: Backend,
    /// Cap on the number of integer-grid profiles.
    pub grid_limit: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            seed: 0,
            profiles: 10_000,
            n_min: 2,
            n_max: 6,
            effort_min: 1e-3,
            effort_max: 1e3,
            zero_probability: 0.2,
            fixed_lambdas: vec![0.5, 2.0, 10.0],
            random_lambdas: 3,
            lambda_min: 1e-2,
            lambda_max: 1e2,
            tolerance: 1e-6,
            exact_tolerance: 1e-9,
            backend: Backend::Float64,
            grid_limit: 4096,
        }
    }
}

impl SamplingPlan {
    pub fn with_seed(seed: u64) -> Self {
        SamplingPlan {
            seed,
            ..Self::default()
        }
    }

    pub fn profiles(mut self, profiles: usize) -> Self {
        self.profiles = profiles;
        self
    }

    pub fn backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CsfError::InvalidParameter(msg));
        if !(2 <= self.n_min && self.n_min <= self.n_max && self.n_max <= MAX_CONTESTANTS) {
            return bad(format!("n range {}..={} is invalid", self.n_min, self.n_max));
        }
        if !(self.effort_min > 0.0 && self.effort_min < self.effort_max && self.effort_max.is_finite()) {
            return bad("effort range must satisfy 0 < min < max".into());
        }
        if !(0.0..=0.9).contains(&self.zero_probability) {
            return bad("zero probability must lie in [0, 0.9]".into());
        }
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max && self.lambda_max.is_finite()) {
            return bad("lambda range must satisfy 0 < min <= max".into());
        }
        if self.fixed_lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("scale factors must be positive".into());
        }
        if self.fixed_lambdas.is_empty() && self.random_lambdas == 0 {
            return bad("the plan needs at least one scale factor".into());
        }
        if !(self.tolerance >= 0.0 && self.exact_tolerance >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        self.backend.available()
    }

    /// Comparison threshold for the plan's backend.
    pub fn threshold(&self) -> f64 {
        match self.backend {
            Backend::Float64 => self.tolerance,
            Backend::ExactRational => self.exact_tolerance,
        }
    }

    /// The fixed scale factors followed by the seeded random ones.
    pub fn lambda_set(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        let mut set = self.fixed_lambdas.clone();
        for _ in 0..self.random_lambdas {
            set.push(log_uniform(&mut rng, self.lambda_min, self.lambda_max));
        }
        set
    }
}

/// Round to six significant digits so every sample is a short decimal; this
/// keeps rational lifts small and makes reports readable.
pub(crate) fn snap(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        format!("{v:.5e}").parse().expect("formatted float parses")
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let t: f64 = rng.random();
    snap((lo.ln() + t * (hi.ln() - lo.ln())).exp())
}

pub(crate) const BUMPS: [(Bump, f64); 6] = [
    (Bump::Multiplicative, 1e-3),
    (Bump::Multiplicative, 1.0),
    (Bump::Multiplicative, 10.0),
    (Bump::Additive, 1e-3),
    (Bump::Additive, 1.0),
    (Bump::Additive, 10.0),
];

pub(crate) const GRID_LEVELS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

/// One sample: a profile plus the axiom-specific extra input.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Case {
    pub profile: Vec<f64>,
    pub probe: Probe,
    pub random: bool,
}

/// Axiom-specific precondition on the profile itself.
fn admissible(axiom: AxiomId, x: &[f64]) -> bool {
    let positive = x.iter().filter(|v| **v > 0.0).count();
    match axiom {
        AxiomId::Rh | AxiomId::Hre => positive >= 2,
        AxiomId::Dc => positive >= 1 && x.contains(&0.0),
        _ => positive >= 1,
    }
}

/// Samples whose contest is too small for the axiom are skipped.
pub(crate) fn min_n(axiom: AxiomId) -> usize {
    match axiom {
        AxiomId::Nar | AxiomId::Dc | AxiomId::Cri | AxiomId::Sp | AxiomId::Cp => 3,
        _ => 2,
    }
}

fn stream_id(axiom: AxiomId) -> u64 {
    // Axioms read on the same probe share a stream.
    match axiom {
        AxiomId::Hom => 1,
        AxiomId::Rh | AxiomId::Hre => 2,
        AxiomId::Sm => 3,
        AxiomId::Lca => 4,
        AxiomId::Any => 5,
        AxiomId::Nar => 6,
        AxiomId::Dc => 7,
        AxiomId::Cri => 8,
        AxiomId::Sp | AxiomId::Cp => 9,
        AxiomId::Pa | AxiomId::Di => 10,
    }
}

/// `(n-1, .., 1, 0)` followed by `{0,1,2,4}^n` in lexicographic order.
pub(crate) fn grid_profiles(n: usize, limit: usize) -> Vec<Vec<f64>> {
    let staircase: Vec<f64> = (0..n).map(|k| (n - 1 - k) as f64).collect();
    let mut out = vec![staircase.clone()];
    let total = 4usize.checked_pow(n as u32).unwrap_or(usize::MAX);
    for code in 1..total {
        if out.len() >= limit {
            break;
        }
        let mut rest = code;
        let mut x = vec![0.0; n];
        for slot in x.iter_mut().rev() {
            *slot = GRID_LEVELS[rest % 4];
            rest /= 4;
        }
        if x != staircase {
            out.push(x);
        }
    }
    out.truncate(limit.max(1));
    out
}

fn subsets_of(n: usize) -> impl Iterator<Item = Subset> {
    (0..(1u64 << n)).map(Subset::from_mask).filter(|m| m.len() >= 2)
}

fn next_level(v: f64) -> f64 {
    match v {
        0.0 => 1.0,
        1.0 => 2.0,
        2.0 => 4.0,
        _ => 0.0,
    }
}

fn grid_probes(axiom: AxiomId, x: &[f64], index: usize) -> Vec<Probe> {
    let n = x.len();
    match axiom {
        AxiomId::Hom | AxiomId::Rh | AxiomId::Hre => {
            vec![Probe::Scale { lambda: 2.0 }, Probe::Scale { lambda: 0.5 }]
        }
        AxiomId::Sm => vec![
            Probe::Bump {
                bump: Bump::Additive,
                delta: 1.0,
            },
            Probe::Bump {
                bump: Bump::Multiplicative,
                delta: 1.0,
            },
        ],
        AxiomId::Lca => {
            let count = (1usize << n) - n - 1;
            let subset = subsets_of(n).nth(index % count).expect("subset index in range");
            vec![Probe::Subset { subset }]
        }
        AxiomId::Nar => [1.0, 0.0, 0.5].map(|share| Probe::Reallocate { share }).to_vec(),
        AxiomId::Di => vec![Probe::Perturb {
            others: x.iter().map(|&v| next_level(v)).collect(),
        }],
        _ => vec![random_free_probe(axiom)],
    }
}

fn random_free_probe(axiom: AxiomId) -> Probe {
    match axiom {
        AxiomId::Any => Probe::Swap,
        AxiomId::Dc => Probe::Dummy,
        AxiomId::Cri => Probe::Silence,
        AxiomId::Sp | AxiomId::Cp => Probe::Merge,
        AxiomId::Pa => Probe::Decompose,
        _ => unreachable!("{axiom} needs a drawn probe"),
    }
}

/// Produces the canonical sample sequence for one axiom.
pub(crate) struct CaseStream<'a> {
    plan: &'a SamplingPlan,
    axiom: AxiomId,
    arity: Option<usize>,
    grid: std::vec::IntoIter<Case>,
    drawn: usize,
    lambdas: Vec<f64>,
    rng: ChaCha8Rng,
    pub grid_cases: usize,
    pub resampled: usize,
}

impl<'a> CaseStream<'a> {
    pub fn new(spec: &ImpactSpec, axiom: AxiomId, plan: &'a SamplingPlan) -> Self {
        let arity = spec.arity();
        let n = arity.unwrap_or(3);
        let grid: Vec<Case> = grid_profiles(n, plan.grid_limit)
            .into_iter()
            .filter(|x| admissible(axiom, x))
            .enumerate()
            .flat_map(|(k, x)| {
                grid_probes(axiom, &x, k).into_iter().map(move |probe| Case {
                    profile: x.clone(),
                    probe,
                    random: false,
                })
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(stream_id(axiom));
        CaseStream {
            plan,
            axiom,
            arity,
            grid_cases: grid.len(),
            grid: grid.into_iter(),
            drawn: 0,
            lambdas: plan.lambda_set(),
            rng,
            resampled: 0,
        }
    }

    fn draw_raw(&mut self, n: usize) -> Vec<f64> {
        let plan = self.plan;
        (0..n)
            .map(|_| {
                if self.rng.random::<f64>() < plan.zero_probability {
                    0.0
                } else {
                    log_uniform(&mut self.rng, plan.effort_min, plan.effort_max)
                }
            })
            .collect()
    }

    fn draw_profile(&mut self, n: usize) -> Vec<f64> {
        for _ in 0..1000 {
            let x = self.draw_raw(n);
            if admissible(self.axiom, &x) {
                return x;
            }
            self.resampled += 1;
        }
        // Only reachable for DC with a tiny zero probability: plant the zero.
        let mut x = self.draw_raw(n);
        while !x.iter().any(|v| *v > 0.0) {
            x = self.draw_raw(n);
        }
        let last = x.iter().rposition(|v| *v > 0.0).expect("positive entry");
        let slot = if last == 0 { n - 1 } else { 0 };
        x[slot] = 0.0;
        x
    }

    fn draw_probe(&mut self, n: usize, k: usize) -> Probe {
        match self.axiom {
            AxiomId::Hom | AxiomId::Rh | AxiomId::Hre => Probe::Scale {
                lambda: self.lambdas[k % self.lambdas.len()],
            },
            AxiomId::Sm => {
                let (bump, delta) = BUMPS[k % BUMPS.len()];
                Probe::Bump { bump, delta }
            }
            AxiomId::Lca => loop {
                let mask = self.rng.random_range(0..(1u64 << n));
                let subset = Subset::from_mask(mask);
                if subset.len() >= 2 {
                    break Probe::Subset { subset };
                }
            },
            AxiomId::Nar => Probe::Reallocate {
                share: snap(self.rng.random::<f64>()),
            },
            AxiomId::Di => Probe::Perturb {
                others: self.draw_raw(n),
            },
            other => random_free_probe(other),
        }
    }

    pub fn next_case(&mut self) -> Option<Case> {
        if let Some(case) = self.grid.next() {
            return Some(case);
        }
        if self.drawn >= self.plan.profiles {
            return None;
        }
        let k = self.drawn;
        self.drawn += 1;
        let n = match self.arity {
            Some(n) => n,
            None => self.rng.random_range(self.plan.n_min..=self.plan.n_max),
        };
        let profile = self.draw_profile(n);
        let probe = self.draw_probe(n, k);
        Some(Case {
            profile,
            probe,
            random: true,
        })
    }
}
