//! Evaluating a CSF: probabilities on sub-contests and deviations.

use crate::contest::Subset;
use crate::error::{CsfError, Result};
use crate::impact::{Family, ImpactSpec};
use crate::scalar::Scalar;

/// A spec prepared for repeated evaluation over `n` contestants in backend `T`.
///
/// Parameters are lifted into `T` once, so sampling loops over the exact
/// backend do not re-parse them on every call.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    spec: ImpactSpec,
    n: usize,
    params: Vec<(T, T)>,
    r: f64,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(spec: &ImpactSpec, n: usize) -> Result<Self> {
        spec.check_arity(n)?;
        if T::EXACT && !spec.supports_exact() {
            return Err(CsfError::BackendUnavailable(format!(
                "exact arithmetic needs a parametric family with integer r ({})",
                spec.summary()
            )));
        }
        let params = if spec.is_parametric() {
            (0..n)
                .map(|j| {
                    let (a, b) = spec.params(j).expect("parametric");
                    (T::from_f64(a), T::from_f64(b))
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Kernel {
            spec: spec.clone(),
            n,
            params,
            r: spec.r().unwrap_or(1.0),
        })
    }

    pub fn spec(&self) -> &ImpactSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `f_j(x)`.
    pub fn impact(&self, j: usize, x: &T) -> Result<T> {
        match self.spec.family() {
            Family::Custom(c) => Ok(T::from_f64(c.eval(j, x.to_f64())?)),
            _ => {
                let (a, b) = &self.params[j];
                if x.is_zero() {
                    return Ok(b.clone());
                }
                let v = b.clone() + &(a.clone() * &x.pow_r(self.r));
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CsfError::NonFiniteImpact {
                        contestant: j,
                        at: x.to_f64(),
                    })
                }
            }
        }
    }

    /// Luck term `f_j(0)`.
    pub fn luck(&self, j: usize) -> Result<T> {
        self.impact(j, &T::zero())
    }

    fn check_profile(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(CsfError::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if x.iter().any(|v| *v < T::zero()) {
            return Err(CsfError::InvalidProfile("efforts must be non-negative".into()));
        }
        Ok(())
    }

    /// Impacts of the members of `m`, in member order.
    pub fn impacts(&self, m: Subset, x: &[T]) -> Result<Vec<T>> {
        self.check_profile(x)?;
        m.validate(self.n)?;
        m.members().map(|j| self.impact(j, &x[j])).collect()
    }

    /// `p^M(x^M)`, indexed by member order. `x` is the full profile; only the
    /// coordinates in `m` are read.
    pub fn probabilities(&self, m: Subset, x: &[T]) -> Result<Vec<T>> {
        let f = self.impacts(m, x)?;
        normalise(f)
    }

    /// `p^N(x)`.
    pub fn full(&self, x: &[T]) -> Result<Vec<T>> {
        self.probabilities(Subset::full(self.n), x)
    }

    /// `p_i^M(x^M)`.
    pub fn probability(&self, m: Subset, x: &[T], i: usize) -> Result<T> {
        let rank = m
            .rank_of(i)
            .ok_or(CsfError::IndexOutOfRange { index: i, n: self.n })?;
        Ok(self.probabilities(m, x)?.swap_remove(rank))
    }

    /// `d_ij(x) = [p_j(0, x_-i) - p_j(x)] / p_j(0, x_-i)`.
    pub fn deviation(&self, i: usize, j: usize, x: &[T]) -> Result<T> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(CsfError::SameContestant(i));
        }
        let with_i = self.full(x)?;
        let mut silent = x.to_vec();
        silent[i] = T::zero();
        let without_i = self.full(&silent)?;
        deviation_from(&without_i[j], &with_i[j]).ok_or(CsfError::UndefinedDeviation { i, j })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(CsfError::IndexOutOfRange { index: i, n: self.n })
        }
    }
}

/// `[before - after] / before`, or `None` when `before` is zero.
pub(crate) fn deviation_from<T: Scalar>(before: &T, after: &T) -> Option<T> {
    if before.is_zero() {
        None
    } else {
        Some((before.clone() - after) / before)
    }
}

pub(crate) fn normalise<T: Scalar>(f: Vec<T>) -> Result<Vec<T>> {
    let total = f.iter().fold(T::zero(), |acc, v| acc + v);
    if !total.is_positive() {
        return Err(CsfError::DegenerateDenominator);
    }
    Ok(f.into_iter().map(|v| v / &total).collect())
}

/// Probabilities of the sub-contest `m` at profile `x` (full length `n`).
pub fn evaluate<T: Scalar>(spec: &ImpactSpec, m: Subset, x: &[T]) -> Result<Vec<T>> {
    Kernel::<T>::new(spec, x.len())?.probabilities(m, x)
}

/// Probabilities of the full contest.
pub fn evaluate_full<T: Scalar>(spec: &ImpactSpec, x: &[T]) -> Result<Vec<T>> {
    evaluate(spec, Subset::full(x.len()), x)
}

/// Sub-contest CSF over `m`; see [`ImpactSpec::restrict`].
pub fn restrict(spec: &ImpactSpec, m: Subset) -> Result<ImpactSpec> {
    spec.restrict(m)
}

/// Externality `d_ij(x)` of contestant `i` becoming active on contestant `j`.
pub fn deviation<T: Scalar>(spec: &ImpactSpec, i: usize, j: usize, x: &[T]) -> Result<T> {
    Kernel::<T>::new(spec, x.len())?.deviation(i, j, x)
}

/// Closed-form deviation for the power-plus-constant families,
/// `a_i x_i^r / Σ_k (b_k + a_k x_k^r)`.
pub fn closed_form_deviation<T: Scalar>(spec: &ImpactSpec, i: usize, x: &[T]) -> Result<T> {
    let kernel = Kernel::<T>::new(spec, x.len())?;
    if !spec.is_parametric() {
        return Err(CsfError::UnsupportedFamily {
            family: spec.name(),
            why: "closed-form deviation needs a power-plus-constant impact",
        });
    }
    let f = kernel.impacts(Subset::full(x.len()), x)?;
    let total = f.iter().fold(T::zero(), |acc, v| acc + v);
    if !total.is_positive() {
        return Err(CsfError::DegenerateDenominator);
    }
    let increment = f[i].clone() - &kernel.luck(i)?;
    Ok(increment / &total)
}
