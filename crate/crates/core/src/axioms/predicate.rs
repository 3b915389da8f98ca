//! The axioms as predicates over one sample.

use super::{AxiomId, Bump, Probe};
use crate::contest::Subset;
use crate::csf::{deviation_from, Kernel};
use crate::decompose::{decompose_with, Decomposition};
use crate::error::Result;
use crate::scalar::{relative_gap, Number, Scalar};

/// Below this size a float difference of probabilities is mostly rounding
/// noise, so quantities divided by it are not judged.
pub(crate) const RESOLUTION: f64 = 1.4901161193847656e-8;

pub(crate) enum Check {
    Pass(f64),
    Fail(f64),
    Unresolved,
}

/// Comparison rules for one backend.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Judge {
    pub threshold: f64,
    pub exact: bool,
}

impl Judge {
    fn equal<T: Scalar>(&self, lhs: &T, rhs: &T) -> Check {
        let gap = relative_gap(lhs, rhs);
        if gap > self.threshold {
            Check::Fail(gap)
        } else {
            Check::Pass(gap)
        }
    }

    fn at_most<T: Scalar>(&self, lhs: &T, rhs: &T) -> Check {
        if lhs <= rhs {
            return Check::Pass(0.0);
        }
        self.equal(lhs, rhs)
    }

    /// `lhs < rhs`. Floats only fail on a decrease beyond the threshold; a
    /// change lost in rounding is unresolved.
    fn strictly_below<T: Scalar>(&self, lhs: &T, rhs: &T) -> Check {
        if lhs < rhs {
            return Check::Pass(0.0);
        }
        let gap = relative_gap(lhs, rhs);
        if self.exact || gap > self.threshold {
            Check::Fail(gap)
        } else {
            Check::Unresolved
        }
    }

    /// In floats, `v` is too small to divide by.
    fn unresolvable<T: Scalar>(&self, v: &T) -> bool {
        if self.exact {
            v.is_zero()
        } else {
            v.to_f64().abs() < RESOLUTION
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Failure {
    pub focus: Vec<usize>,
    pub lhs: Number,
    pub rhs: Number,
    pub gap: f64,
}

/// Predicate counts for one sample, and its first failure.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    pub predicates: usize,
    pub unresolved: usize,
    pub max_gap: f64,
    pub failure: Option<Failure>,
}

impl Tally {
    /// Returns `true` once a failure has been recorded.
    fn record<T: Scalar>(&mut self, focus: &[usize], lhs: &T, rhs: &T, check: Check) -> bool {
        match check {
            Check::Unresolved => self.unresolved += 1,
            Check::Pass(gap) => {
                self.predicates += 1;
                self.max_gap = self.max_gap.max(gap);
            }
            Check::Fail(gap) => {
                self.predicates += 1;
                self.failure = Some(Failure {
                    focus: focus.to_vec(),
                    lhs: Number::of(lhs),
                    rhs: Number::of(rhs),
                    gap,
                });
                return true;
            }
        }
        false
    }
}

macro_rules! record {
    ($tally:ident, $focus:expr, $lhs:expr, $rhs:expr, $check:expr) => {{
        let (l, r) = (&$lhs, &$rhs);
        if $tally.record(&$focus, l, r, $check) {
            return Ok($tally);
        }
    }};
}

pub(crate) fn lift<T: Scalar>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&v| T::from_f64(v)).collect()
}

fn replaced<T: Clone>(x: &[T], i: usize, v: T) -> Vec<T> {
    let mut y = x.to_vec();
    y[i] = v;
    y
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Evaluate one sample against one axiom. Errors mean the sample could not
/// be evaluated at all and are counted as skips by the caller.
pub(crate) fn judge_case<T: Scalar>(
    kernel: &Kernel<T>,
    judge: &Judge,
    axiom: AxiomId,
    profile: &[f64],
    probe: &Probe,
) -> Result<Tally> {
    let x: Vec<T> = lift(profile);
    let n = x.len();
    let mut t = Tally::default();
    match (axiom, probe) {
        (AxiomId::Hom | AxiomId::Rh | AxiomId::Hre, Probe::Scale { lambda }) => {
            let lambda = T::from_f64(*lambda);
            let scaled: Vec<T> = x.iter().map(|v| v.clone() * &lambda).collect();
            let p = kernel.full(&x)?;
            let q = kernel.full(&scaled)?;
            match axiom {
                AxiomId::Hom => {
                    for i in 0..n {
                        record!(t, [i], p[i], q[i], judge.equal(&p[i], &q[i]));
                    }
                }
                AxiomId::Rh => {
                    for (i, j) in pairs(n).filter(|&(i, j)| x[i].is_positive() && x[j].is_positive()) {
                        if judge.unresolvable(&p[j]) || judge.unresolvable(&q[j]) {
                            t.unresolved += 1;
                            continue;
                        }
                        let lhs = p[i].clone() / &p[j];
                        let rhs = q[i].clone() / &q[j];
                        record!(t, [i, j], lhs, rhs, judge.equal(&lhs, &rhs));
                    }
                }
                _ => {
                    let d = deviations(kernel, &x, &p);
                    let ds = deviations(kernel, &scaled, &q);
                    for (i, j) in pairs(n).filter(|&(i, j)| x[i].is_positive() && x[j].is_positive()) {
                        let four = [&d[i][j], &d[j][i], &ds[i][j], &ds[j][i]];
                        let Some(four) = four.iter().map(|v| v.as_ref()).collect::<Option<Vec<&T>>>() else {
                            t.unresolved += 1;
                            continue;
                        };
                        if four.iter().any(|v| judge.unresolvable(*v)) {
                            t.unresolved += 1;
                            continue;
                        }
                        let lhs = four[0].clone() / four[1];
                        let rhs = four[2].clone() / four[3];
                        record!(t, [i, j], lhs, rhs, judge.equal(&lhs, &rhs));
                    }
                }
            }
        }
        (AxiomId::Sm, Probe::Bump { bump, delta }) => {
            let p = kernel.full(&x)?;
            let delta = T::from_f64(*delta);
            for i in 0..n {
                let bumped = match bump {
                    Bump::Additive => x[i].clone() + &delta,
                    Bump::Multiplicative => x[i].clone() * &(T::one() + &delta),
                };
                // Vacuous unless the effort really rises and p_i < 1.
                if bumped <= x[i] || p[i] >= T::one() {
                    continue;
                }
                let q = kernel.full(&replaced(&x, i, bumped))?;
                record!(t, [i], p[i], q[i], judge.strictly_below(&p[i], &q[i]));
            }
        }
        (AxiomId::Lca, Probe::Subset { subset }) => {
            let p = kernel.full(&x)?;
            let pm = kernel.probabilities(*subset, &x)?;
            let mass = subset.members().fold(T::zero(), |acc, j| acc + &p[j]);
            for (rank, i) in subset.members().enumerate() {
                let rhs = pm[rank].clone() * &mass;
                record!(t, [i], p[i], rhs, judge.equal(&p[i], &rhs));
            }
        }
        (AxiomId::Any, Probe::Swap) => {
            let p = kernel.full(&x)?;
            for (i, j) in pairs(n) {
                let mut y = x.clone();
                y.swap(i, j);
                let q = kernel.full(&y)?;
                record!(t, [i, j], p[i], q[j], judge.equal(&p[i], &q[j]));
                record!(t, [j, i], p[j], q[i], judge.equal(&p[j], &q[i]));
            }
        }
        (AxiomId::Nar, Probe::Reallocate { share }) => {
            let p = kernel.full(&x)?;
            let share = T::from_f64(*share);
            for (i, j) in pairs(n) {
                let total = x[i].clone() + &x[j];
                let xi = share.clone() * &total;
                let xj = total - &xi;
                let mut y = x.clone();
                y[i] = xi;
                y[j] = xj;
                let q = kernel.full(&y)?;
                for k in (0..n).filter(|&k| k != i && k != j) {
                    record!(t, [i, j, k], p[k], q[k], judge.equal(&p[k], &q[k]));
                }
            }
        }
        (AxiomId::Dc, Probe::Dummy) => {
            let p = kernel.full(&x)?;
            for i in (0..n).filter(|&i| x[i].is_zero()) {
                let rest = Subset::full(n).without(i);
                let Ok(pm) = kernel.probabilities(rest, &x) else {
                    t.unresolved += 1;
                    continue;
                };
                for (rank, j) in rest.members().enumerate() {
                    record!(t, [i, j], p[j], pm[rank], judge.equal(&p[j], &pm[rank]));
                }
            }
        }
        (AxiomId::Cri, Probe::Silence) => {
            let p = kernel.full(&x)?;
            for j in 0..n {
                let denom = T::one() - &p[j];
                let silent = kernel.full(&replaced(&x, j, T::zero()));
                let (Ok(p0), false) = (silent, judge.unresolvable(&denom)) else {
                    t.unresolved += 1;
                    continue;
                };
                for i in (0..n).filter(|&i| i != j) {
                    let rhs = p[i].clone() / &denom;
                    record!(t, [j, i], p0[i], rhs, judge.equal(&p0[i], &rhs));
                }
            }
        }
        (AxiomId::Sp | AxiomId::Cp, Probe::Merge) => {
            let p = kernel.full(&x)?;
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let (lhs, rhs) = merge_sides(kernel, &x, &p, i, j)?;
                    let check = if axiom == AxiomId::Sp {
                        judge.at_most(&lhs, &rhs)
                    } else {
                        judge.at_most(&rhs, &lhs)
                    };
                    record!(t, [i, j], lhs, rhs, check);
                }
            }
        }
        (AxiomId::Pa, Probe::Decompose) => {
            let d = decompose_with(kernel, &x)?;
            record!(t, [], d.total(), T::one(), judge.equal(&d.total(), &T::one()));
            let positive = if d.mu_null.is_positive() {
                Check::Pass(0.0)
            } else {
                Check::Fail(relative_gap(&d.mu_null, &T::zero()))
            };
            record!(t, [], d.mu_null, T::zero(), positive);
        }
        (AxiomId::Di, Probe::Perturb { others }) => {
            let d = decompose_with(kernel, &x)?;
            let others: Vec<T> = lift(others);
            for (i, xi) in x.iter().enumerate() {
                let y = replaced(&others, i, xi.clone());
                if !y.iter().any(Scalar::is_positive) {
                    t.unresolved += 1;
                    continue;
                }
                let e = decompose_with(kernel, &y)?;
                match (draw_ratio(judge, &d, i), draw_ratio(judge, &e, i)) {
                    (Some(lhs), Some(rhs)) => record!(t, [i], lhs, rhs, judge.equal(&lhs, &rhs)),
                    _ => t.unresolved += 1,
                }
            }
        }
        (axiom, probe) => unreachable!("probe {probe:?} does not belong to {axiom}"),
    }
    Ok(t)
}

fn draw_ratio<T: Scalar>(judge: &Judge, d: &Decomposition<T>, i: usize) -> Option<T> {
    let denom = d.draw_denominator(i);
    (!judge.unresolvable(&denom) && denom.is_positive()).then(|| d.mu[i].clone() / &denom)
}

/// `d[i][j]` for every active `i`; `None` where undefined.
fn deviations<T: Scalar>(kernel: &Kernel<T>, x: &[T], p: &[T]) -> Vec<Vec<Option<T>>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if !x[i].is_positive() {
                return vec![None; n];
            }
            match kernel.full(&replaced(x, i, T::zero())) {
                Ok(p0) => (0..n)
                    .map(|j| {
                        if j == i {
                            None
                        } else {
                            deviation_from(&p0[j], &p[j])
                        }
                    })
                    .collect(),
                Err(_) => vec![None; n],
            }
        })
        .collect()
}

/// `(p_i + p_j, p_i^{N∖{j}}(x_i + x_j, ..))`.
pub(crate) fn merge_sides<T: Scalar>(
    kernel: &Kernel<T>,
    x: &[T],
    p: &[T],
    i: usize,
    j: usize,
) -> Result<(T, T)> {
    let merged = replaced(x, i, x[i].clone() + &x[j]);
    let rest = Subset::full(x.len()).without(j);
    let pm = kernel.probabilities(rest, &merged)?;
    let rank = rest.rank_of(i).expect("i stays in the merged contest");
    Ok((p[i].clone() + &p[j], pm[rank].clone()))
}
