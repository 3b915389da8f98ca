//! Two-level reading of a CSF with luck.
//!
//! At the first level contestant `i` secures the prize with probability
//! `μ_i = [f_i(x_i) - f_i(0)] / Σ_k f_k(x_k)`. With the remaining probability
//! `μ_null = Σ_k f_k(0) / Σ_k f_k(x_k)` nobody secures it and the prize is
//! handed out by luck alone. When `Σ b > 0` the individual part is a
//! tie-allowing CSF `α_i x_i^r / (1 + Σ α_k x_k^r)` with `α_i = a_i / Σ b`.

use serde::Serialize;

use crate::contest::Subset;
use crate::csf::Kernel;
use crate::error::{CsfError, Result};
use crate::impact::ImpactSpec;
use crate::scalar::{Number, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<T = f64> {
    /// Secured-win probabilities `μ_i`.
    pub mu: Vec<T>,
    /// Tie probability `μ_null`.
    pub mu_null: T,
    /// `α_i`, present only when the family has luck.
    pub alpha: Option<Vec<T>>,
}

impl<T: Scalar> Decomposition<T> {
    /// `Σ μ_i + μ_null`.
    pub fn total(&self) -> T {
        self.mu.iter().fold(self.mu_null.clone(), |acc, m| acc + m)
    }

    /// `1 - Σ_{j≠i} μ_j`, computed literally.
    pub fn draw_denominator(&self, i: usize) -> T {
        let others = self
            .mu
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(T::zero(), |acc, (_, m)| acc + m);
        T::one() - &others
    }

    /// `μ_i / (1 - Σ_{j≠i} μ_j)`; `None` when the denominator vanishes.
    pub fn draw_ratio(&self, i: usize) -> Option<T> {
        let denom = self.draw_denominator(i);
        denom.is_positive().then(|| self.mu[i].clone() / &denom)
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            mu: self.mu.iter().map(Number::of).collect(),
            mu_null: Number::of(&self.mu_null),
            alpha: self.alpha.as_ref().map(|a| a.iter().map(Number::of).collect()),
        }
    }
}

/// Serializable view of a [`Decomposition`].
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub mu: Vec<Number>,
    pub mu_null: Number,
    pub alpha: Option<Vec<Number>>,
}

fn require_parametric(spec: &ImpactSpec) -> Result<()> {
    if spec.is_parametric() {
        Ok(())
    } else {
        Err(CsfError::UnsupportedFamily {
            family: spec.name(),
            why: "the two-level decomposition is defined for power-plus-constant impacts",
        })
    }
}

/// Split `p^N(x)` into individual wins and an all-contestant tie.
pub fn decompose_two_level<T: Scalar>(spec: &ImpactSpec, x: &[T]) -> Result<Decomposition<T>> {
    require_parametric(spec)?;
    let kernel = Kernel::<T>::new(spec, x.len())?;
    decompose_with(&kernel, x)
}

pub(crate) fn decompose_with<T: Scalar>(kernel: &Kernel<T>, x: &[T]) -> Result<Decomposition<T>> {
    let n = kernel.n();
    let f = kernel.impacts(Subset::full(n), x)?;
    let total = f.iter().fold(T::zero(), |acc, v| acc + v);
    if !total.is_positive() {
        return Err(CsfError::DegenerateDenominator);
    }
    let luck: Vec<T> = (0..n).map(|j| kernel.luck(j)).collect::<Result<_>>()?;
    let luck_total = luck.iter().fold(T::zero(), |acc, v| acc + v);
    let mu = f
        .iter()
        .zip(&luck)
        .map(|(fj, bj)| (fj.clone() - bj) / &total)
        .collect();
    let alpha = if luck_total.is_positive() && kernel.spec().is_parametric() {
        Some(alpha_from(kernel.spec(), n, &luck_total))
    } else {
        None
    };
    Ok(Decomposition {
        mu,
        mu_null: luck_total / &total,
        alpha,
    })
}

fn alpha_from<T: Scalar>(spec: &ImpactSpec, n: usize, luck_total: &T) -> Vec<T> {
    (0..n)
        .map(|j| T::from_f64(spec.params(j).expect("parametric").0) / luck_total)
        .collect()
}

/// `α_i = a_i / Σ_k b_k` over `n` contestants.
pub fn blavatskyy_params<T: Scalar>(spec: &ImpactSpec, n: usize) -> Result<Vec<T>> {
    require_parametric(spec)?;
    spec.check_arity(n)?;
    let luck_total = (0..n).fold(T::zero(), |acc, j| {
        acc + &T::from_f64(spec.params(j).expect("parametric").1)
    });
    if !luck_total.is_positive() {
        return Err(CsfError::LucklessFamily);
    }
    Ok(alpha_from(spec, n, &luck_total))
}

/// Tie-allowing CSF: `(α_i x_i^r / D, 1 / D)` with `D = 1 + Σ α_k x_k^r`.
pub fn blavatskyy_form<T: Scalar>(alpha: &[T], r: f64, x: &[T]) -> Result<(Vec<T>, T)> {
    if alpha.len() != x.len() {
        return Err(CsfError::LengthMismatch {
            expected: alpha.len(),
            got: x.len(),
        });
    }
    let terms: Vec<T> = alpha
        .iter()
        .zip(x)
        .map(|(a, xi)| {
            if xi.is_zero() {
                T::zero()
            } else {
                a.clone() * &xi.pow_r(r)
            }
        })
        .collect();
    let denom = terms.iter().fold(T::one(), |acc, t| acc + t);
    let null = T::one() / &denom;
    Ok((terms.into_iter().map(|t| t / &denom).collect(), null))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csf::{deviation, evaluate_full};
    use approx::assert_relative_eq;

    #[test]
    fn luckless_decomposition_is_the_csf() {
        let spec = ImpactSpec::tullock(vec![1.0, 2.0, 0.5], 1.5).unwrap();
        let x = [1.0, 2.0, 0.0];
        let d = decompose_two_level(&spec, &x).unwrap();
        assert_eq!(d.mu_null, 0.0);
        assert!(d.alpha.is_none());
        let p = evaluate_full(&spec, &x).unwrap();
        for (m, pi) in d.mu.iter().zip(&p) {
            assert_relative_eq!(*m, *pi, epsilon = 1e-15);
        }
    }

    #[test]
    fn custom_is_unsupported() {
        let spec = ImpactSpec::custom(crate::impact::CustomImpact::log1p());
        assert!(matches!(
            decompose_two_level(&spec, &[1.0, 2.0]),
            Err(CsfError::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn alpha_examples() {
        let spec = ImpactSpec::power_plus_constant(vec![2.0, 4.0], vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(blavatskyy_params::<f64>(&spec, 2).unwrap(), vec![1.0, 2.0]);
        let tullock = ImpactSpec::tullock(vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(
            blavatskyy_params::<f64>(&tullock, 2),
            Err(CsfError::LucklessFamily)
        );
        let scaled = spec.scaled(2, 10.0).unwrap();
        assert_eq!(blavatskyy_params::<f64>(&scaled, 2).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn mu_matches_deviation_for_every_opponent() {
        let spec =
            ImpactSpec::power_plus_constant(vec![0.7, 1.3, 2.0, 0.4], vec![0.2, 0.0, 1.1, 0.5], 0.6).unwrap();
        let x = [0.9, 3.0, 0.0, 12.0];
        let d = decompose_two_level(&spec, &x).unwrap();
        for i in 0..4 {
            for j in (0..4).filter(|&j| j != i) {
                let dij = deviation(&spec, i, j, &x).unwrap();
                assert_relative_eq!(d.mu[i], dij, epsilon = 1e-12);
            }
        }
    }

    #[cfg(feature = "exact")]
    #[test]
    fn worked_decomposition_exact() {
        use crate::scalar::Rational;
        let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
        let spec = ImpactSpec::power_plus_constant(vec![1.0; 3], vec![0.5, 0.3, 0.2], 1.0).unwrap();
        let x = [q(2, 1), q(1, 1), q(0, 1)];
        let d = decompose_two_level(&spec, &x).unwrap();
        assert_eq!(d.mu, vec![q(1, 2), q(1, 4), q(0, 1)]);
        assert_eq!(d.mu_null, q(1, 4));
        assert_eq!(d.alpha.clone().unwrap(), vec![q(1, 1); 3]);
        assert_eq!(d.total(), q(1, 1));
        let (ind, null) = blavatskyy_form(d.alpha.as_ref().unwrap(), 1.0, &x).unwrap();
        assert_eq!(ind, d.mu);
        assert_eq!(null, d.mu_null);
    }
}
