//! Numeric backends.
//!
//! Every CSF computation is written once, generically over [`Scalar`], and
//! instantiated either with `f64` or (feature `exact`) with an
//! arbitrary-precision rational. Inputs enter the rational backend through
//! their shortest round-trip decimal form, so `0.3` becomes exactly `3/10`.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::CsfError;

/// Arbitrary-precision rational used by the exact backend.
#[cfg(feature = "exact")]
pub type Rational = num_rational::BigRational;

/// Arithmetic required by the CSF kernels.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// `true` when arithmetic is exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// Lift a finite float. The rational backend reads the shortest decimal
    /// that round-trips to `x`.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// `self^r` for `self >= 0`. The rational backend requires integer `r`.
    fn pow_r(&self, r: f64) -> Self;
    fn is_finite(&self) -> bool;
    fn render(&self) -> String;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self
        } else {
            self.clone()
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pow_r(&self, r: f64) -> Self {
        if r == 1.0 {
            *self
        } else {
            self.powf(r)
        }
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

#[cfg(feature = "exact")]
impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_f64(x: f64) -> Self {
        decimal_to_rational(x)
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn pow_r(&self, r: f64) -> Self {
        debug_assert!(is_positive_integer(r), "exact power needs integer r, got {r}");
        num_traits::pow::pow(self.clone(), r as usize)
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn render(&self) -> String {
        if self.denom() == &num_bigint::BigInt::from(1) {
            format!("{}", self.numer())
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

/// Exact value of the shortest decimal spelling of `x`.
#[cfg(feature = "exact")]
fn decimal_to_rational(x: f64) -> Rational {
    use num_bigint::BigInt;
    assert!(
        x.is_finite(),
        "cannot lift non-finite {x} into the rational backend"
    );
    // `Display` for f64 is the shortest round-trip form and never uses an exponent.
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mut numer: BigInt = format!("{whole}{frac}").parse().expect("decimal digits");
    if negative {
        numer = -numer;
    }
    let denom = num_traits::pow::pow(BigInt::from(10), frac.len());
    Rational::new(numer, denom)
}

pub(crate) fn is_positive_integer(r: f64) -> bool {
    r > 0.0 && r.fract() == 0.0 && r <= u32::MAX as f64
}

/// Relative gap `|l - r| / max(1, |l|, |r|)`, computed in the backend and
/// reported as a float.
pub fn relative_gap<T: Scalar>(lhs: &T, rhs: &T) -> f64 {
    let diff = (lhs.clone() - rhs).abs();
    let scale = T::one().max_of(lhs.abs()).max_of(rhs.abs());
    (diff / &scale).to_f64()
}

/// Which arithmetic to run a computation in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Float64,
    ExactRational,
}

impl Backend {
    pub fn available(self) -> Result<(), CsfError> {
        match self {
            Backend::Float64 => Ok(()),
            Backend::ExactRational if cfg!(feature = "exact") => Ok(()),
            Backend::ExactRational => Err(CsfError::BackendUnavailable(
                "crate built without the `exact` feature".into(),
            )),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Float64 => "float64",
            Backend::ExactRational => "rational",
        })
    }
}

/// A value reported from either backend: always a float, plus the exact
/// `p/q` spelling when it came from the rational backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Number {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
}

impl Number {
    pub fn of<T: Scalar>(x: &T) -> Self {
        Number {
            value: x.to_f64(),
            exact: T::EXACT.then(|| x.render()),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(s) => f.write_str(s),
            None => write!(f, "{}", self.value),
        }
    }
}

#[cfg(all(test, feature = "exact"))]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_lift_uses_shortest_spelling() {
        assert_eq!(Rational::from_f64(0.3), q(3, 10));
        assert_eq!(Rational::from_f64(-2.5), q(-5, 2));
        assert_eq!(Rational::from_f64(1e-7), q(1, 10_000_000));
        assert_eq!(Rational::from_f64(123.457), q(123_457, 1000));
        assert_eq!(Rational::from_f64(4.0), q(4, 1));
    }

    #[test]
    fn render_is_reduced_fraction() {
        assert_eq!(q(10, 20).render(), "1/2");
        assert_eq!(q(6, 3).render(), "2");
        assert_eq!(q(-5, 9).render(), "-5/9");
    }

    #[test]
    fn integer_power() {
        assert_eq!(q(2, 3).pow_r(3.0), q(8, 27));
    }

    #[test]
    fn gap_is_clamped_relative() {
        assert_eq!(relative_gap(&q(1, 2), &q(5, 9)), 1.0 / 18.0);
        assert_eq!(relative_gap(&q(10, 1), &q(12, 1)), 2.0 / 12.0);
        assert_eq!(relative_gap(&0.25f64, &0.25f64), 0.0);
    }
}
