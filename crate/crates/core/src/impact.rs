//! Impact functions `f_j` and the CSF families built from them.
//!
//! Every family here is a logit CSF `p_i = f_i(x_i) / Σ_j f_j(x_j)`. The
//! parametric families all share the power-plus-constant impact
//! `f_j(x) = b_j + a_j x^r`; they differ only in which parameters are pinned.

use std::fmt;
use std::sync::Arc;

use crate::contest::{Subset, MAX_CONTESTANTS};
use crate::error::{CsfError, Result};
use crate::scalar::is_positive_integer;

/// A user-supplied impact function, evaluated in `f64` only.
pub trait ImpactFn: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> f64;

    /// Breakpoints, when the function is a tabulated interpolant.
    fn table(&self) -> Option<&[(f64, f64)]> {
        None
    }
}

/// `f(x) = e^x`. Finite only up to `x ≈ 709`.
#[derive(Debug, Clone, Copy)]
pub struct ExpImpact;

impl ImpactFn for ExpImpact {
    fn eval(&self, x: f64) -> f64 {
        x.exp()
    }
}

/// `f(x) = ln(1 + x)`, a luckless concave impact.
#[derive(Debug, Clone, Copy)]
pub struct Log1pImpact;

impl ImpactFn for Log1pImpact {
    fn eval(&self, x: f64) -> f64 {
        x.ln_1p()
    }
}

/// Piecewise-linear interpolation through `(x, f)` breakpoints starting at
/// `x = 0`, extended past the last breakpoint with the final slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(CsfError::InvalidParameter(
                "impact table needs at least two breakpoints".into(),
            ));
        }
        if points[0].0 != 0.0 {
            return Err(CsfError::InvalidParameter(
                "impact table must start at x = 0".into(),
            ));
        }
        for w in points.windows(2) {
            let ((x0, f0), (x1, f1)) = (w[0], w[1]);
            if !(x1 > x0 && f1 > f0) {
                return Err(CsfError::InvalidParameter(format!(
                    "impact table must be strictly increasing in x and f, broken at x = {x1}"
                )));
            }
        }
        if points
            .iter()
            .any(|&(x, f)| !x.is_finite() || !f.is_finite() || f < 0.0)
        {
            return Err(CsfError::InvalidParameter(
                "impact table values must be finite and non-negative".into(),
            ));
        }
        Ok(PiecewiseLinear { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

impl ImpactFn for PiecewiseLinear {
    fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let seg = match pts.iter().position(|&(px, _)| px > x) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => pts.len() - 2,
        };
        let ((x0, f0), (x1, f1)) = (pts[seg], pts[seg + 1]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    fn table(&self) -> Option<&[(f64, f64)]> {
        Some(&self.points)
    }
}

/// Custom impacts: either one function shared by every contestant or one per
/// contestant.
#[derive(Clone)]
pub struct CustomImpact {
    label: String,
    fns: Vec<Arc<dyn ImpactFn>>,
    domain_max: f64,
}

impl fmt::Debug for CustomImpact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomImpact")
            .field("label", &self.label)
            .field("contestants", &self.fns.len())
            .field("domain_max", &self.domain_max)
            .finish()
    }
}

/// Upper end of the validation grid.
pub const VALIDATION_MAX: f64 = 1e6;
const VALIDATION_MIN: f64 = 1e-6;
const VALIDATION_POINTS: usize = 64;

impl CustomImpact {
    /// One function for every contestant.
    pub fn shared(label: impl Into<String>, f: Arc<dyn ImpactFn>) -> Result<Self> {
        Self::build(label.into(), vec![f], VALIDATION_MAX)
    }

    pub fn per_contestant(label: impl Into<String>, fns: Vec<Arc<dyn ImpactFn>>) -> Result<Self> {
        if fns.len() < 2 || fns.len() > MAX_CONTESTANTS {
            return Err(CsfError::InvalidParameter(format!(
                "per-contestant impacts need 2..={MAX_CONTESTANTS} functions, got {}",
                fns.len()
            )));
        }
        Self::build(label.into(), fns, VALIDATION_MAX)
    }

    /// Restrict the effort domain; efforts above `max` are rejected at
    /// evaluation time and the validation grid stops at `max`.
    pub fn with_domain_max(self, max: f64) -> Result<Self> {
        Self::build(self.label, self.fns, max)
    }

    /// `f(x) = e^x`, domain capped at 700 to stay finite.
    pub fn exp() -> Self {
        Self::build("exp".into(), vec![Arc::new(ExpImpact)], 700.0).expect("exp is valid")
    }

    /// `f(x) = ln(1 + x)`.
    pub fn log1p() -> Self {
        Self::shared("log1p", Arc::new(Log1pImpact)).expect("log1p is valid")
    }

    fn build(label: String, fns: Vec<Arc<dyn ImpactFn>>, domain_max: f64) -> Result<Self> {
        if domain_max.is_nan() || domain_max <= 0.0 {
            return Err(CsfError::InvalidParameter("domain_max must be positive".into()));
        }
        let custom = CustomImpact {
            label,
            fns,
            domain_max,
        };
        custom.validate()?;
        Ok(custom)
    }

    /// Spot-check every function on `{0}` plus a log-spaced grid.
    fn validate(&self) -> Result<()> {
        let top = self.domain_max.min(VALIDATION_MAX);
        let grid = validation_grid(top);
        for (j, f) in self.fns.iter().enumerate() {
            let mut prev: Option<f64> = None;
            for &x in &grid {
                let v = f.eval(x);
                if !v.is_finite() {
                    return Err(CsfError::NonFiniteImpact { contestant: j, at: x });
                }
                if v < 0.0 || prev.is_some_and(|p| v <= p) {
                    return Err(CsfError::NonMonotoneImpact { contestant: j, at: x });
                }
                prev = Some(v);
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn is_shared(&self) -> bool {
        self.fns.len() == 1
    }

    pub fn functions(&self) -> &[Arc<dyn ImpactFn>] {
        &self.fns
    }

    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if x > self.domain_max {
            return Err(CsfError::EffortOutOfDomain {
                effort: x,
                max: self.domain_max,
            });
        }
        let f = if self.is_shared() {
            &self.fns[0]
        } else {
            &self.fns[j]
        };
        let v = f.eval(x);
        if !v.is_finite() || v < 0.0 {
            return Err(CsfError::NonFiniteImpact { contestant: j, at: x });
        }
        Ok(v)
    }
}

/// `0` followed by `VALIDATION_POINTS` log-spaced points in `[1e-6, top]`.
pub fn validation_grid(top: f64) -> Vec<f64> {
    let top = top.max(VALIDATION_MIN * 10.0);
    let (lo, hi) = (VALIDATION_MIN.ln(), top.ln());
    std::iter::once(0.0)
        .chain((0..VALIDATION_POINTS).map(|k| {
            let t = k as f64 / (VALIDATION_POINTS - 1) as f64;
            (lo + t * (hi - lo)).exp()
        }))
        .collect()
}

/// Family of a CSF and its parameters.
#[derive(Clone, Debug)]
pub enum Family {
    /// `f_j = b_j + a_j x^r`
    PowerPlusConstant {
        a: Vec<f64>,
        b: Vec<f64>,
        r: f64,
    },
    /// Head start: `f_j = b_j + x`
    Linear {
        b: Vec<f64>,
    },
    /// `f = b + x^r` for everyone
    SymmetricLuck {
        b: f64,
        r: f64,
    },
    /// `f_j = a_j x^r`
    Tullock {
        a: Vec<f64>,
        r: f64,
    },
    /// `f = x`
    Ratio,
    Custom(CustomImpact),
}

/// A validated CSF family. Construct through the named constructors.
#[derive(Clone, Debug)]
pub struct ImpactSpec {
    family: Family,
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(CsfError::InvalidParameter(format!(
            "r must be positive and finite, got {r}"
        )))
    }
}

fn check_vec(name: &str, v: &[f64], positive: bool) -> Result<()> {
    if v.len() < 2 || v.len() > MAX_CONTESTANTS {
        return Err(CsfError::InvalidParameter(format!(
            "{name} must have 2..={MAX_CONTESTANTS} entries, got {}",
            v.len()
        )));
    }
    for (j, &x) in v.iter().enumerate() {
        let ok = x.is_finite() && if positive { x > 0.0 } else { x >= 0.0 };
        if !ok {
            let req = if positive { "> 0" } else { ">= 0" };
            return Err(CsfError::InvalidParameter(format!(
                "{name}[{j}] = {x} must be {req}"
            )));
        }
    }
    Ok(())
}

impl ImpactSpec {
    pub fn power_plus_constant(a: Vec<f64>, b: Vec<f64>, r: f64) -> Result<Self> {
        check_vec("a", &a, true)?;
        check_vec("b", &b, false)?;
        check_r(r)?;
        if a.len() != b.len() {
            return Err(CsfError::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(ImpactSpec {
            family: Family::PowerPlusConstant { a, b, r },
        })
    }

    pub fn linear(b: Vec<f64>) -> Result<Self> {
        check_vec("b", &b, false)?;
        Ok(ImpactSpec {
            family: Family::Linear { b },
        })
    }

    pub fn symmetric_luck(b: f64, r: f64) -> Result<Self> {
        if !(b.is_finite() && b >= 0.0) {
            return Err(CsfError::InvalidParameter(format!("b must be >= 0, got {b}")));
        }
        check_r(r)?;
        Ok(ImpactSpec {
            family: Family::SymmetricLuck { b, r },
        })
    }

    pub fn tullock(a: Vec<f64>, r: f64) -> Result<Self> {
        check_vec("a", &a, true)?;
        check_r(r)?;
        Ok(ImpactSpec {
            family: Family::Tullock { a, r },
        })
    }

    pub fn ratio() -> Self {
        ImpactSpec {
            family: Family::Ratio,
        }
    }

    pub fn custom(custom: CustomImpact) -> Self {
        ImpactSpec {
            family: Family::Custom(custom),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Stable family name, as used in spec files and reports.
    pub fn name(&self) -> &'static str {
        match self.family {
            Family::PowerPlusConstant { .. } => "luck_tullock",
            Family::Linear { .. } => "linear_headstart",
            Family::SymmetricLuck { .. } => "symmetric_luck",
            Family::Tullock { .. } => "tullock",
            Family::Ratio => "ratio",
            Family::Custom(_) => "custom_table",
        }
    }

    /// Human-readable one-liner with parameters.
    pub fn summary(&self) -> String {
        match &self.family {
            Family::PowerPlusConstant { a, b, r } => format!("luck_tullock a={a:?} b={b:?} r={r}"),
            Family::Linear { b } => format!("linear_headstart b={b:?}"),
            Family::SymmetricLuck { b, r } => format!("symmetric_luck b={b} r={r}"),
            Family::Tullock { a, r } => format!("tullock a={a:?} r={r}"),
            Family::Ratio => "ratio".to_string(),
            Family::Custom(c) => format!("custom {}", c.label()),
        }
    }

    /// Fixed contestant count, or `None` when the family is defined for any `n`.
    pub fn arity(&self) -> Option<usize> {
        match &self.family {
            Family::PowerPlusConstant { a, .. } | Family::Tullock { a, .. } => Some(a.len()),
            Family::Linear { b } => Some(b.len()),
            Family::SymmetricLuck { .. } | Family::Ratio => None,
            Family::Custom(c) => (!c.is_shared()).then_some(c.fns.len()),
        }
    }

    /// Verifies the family can be used with `n` contestants.
    pub fn check_arity(&self, n: usize) -> Result<()> {
        match self.arity() {
            Some(k) if k != n => Err(CsfError::LengthMismatch { expected: k, got: n }),
            _ if !(2..=MAX_CONTESTANTS).contains(&n) => Err(CsfError::InvalidParameter(format!(
                "contestant count must lie in 2..={MAX_CONTESTANTS}, got {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// `(a_j, b_j)` for the parametric families.
    pub fn params(&self, j: usize) -> Option<(f64, f64)> {
        match &self.family {
            Family::PowerPlusConstant { a, b, .. } => Some((a[j], b[j])),
            Family::Linear { b } => Some((1.0, b[j])),
            Family::SymmetricLuck { b, .. } => Some((1.0, *b)),
            Family::Tullock { a, .. } => Some((a[j], 0.0)),
            Family::Ratio => Some((1.0, 0.0)),
            Family::Custom(_) => None,
        }
    }

    /// Discriminating exponent for the parametric families.
    pub fn r(&self) -> Option<f64> {
        match &self.family {
            Family::PowerPlusConstant { r, .. }
            | Family::SymmetricLuck { r, .. }
            | Family::Tullock { r, .. } => Some(*r),
            Family::Linear { .. } | Family::Ratio => Some(1.0),
            Family::Custom(_) => None,
        }
    }

    pub fn is_parametric(&self) -> bool {
        !matches!(self.family, Family::Custom(_))
    }

    /// `Σ_j b_j` over `n` contestants.
    pub fn luck_total(&self, n: usize) -> Option<f64> {
        self.is_parametric()
            .then(|| (0..n).map(|j| self.params(j).map_or(0.0, |p| p.1)).sum())
    }

    /// The exact backend needs a parametric family with integer `r`.
    pub fn supports_exact(&self) -> bool {
        self.r().is_some_and(is_positive_integer)
    }

    /// Impact `f_j(x)` in `f64`.
    pub fn impact_f64(&self, j: usize, x: f64) -> Result<f64> {
        match &self.family {
            Family::Custom(c) => c.eval(j, x),
            _ => {
                let (a, b) = self.params(j).expect("parametric");
                let r = self.r().expect("parametric");
                Ok(b + a * if r == 1.0 { x } else { x.powf(r) })
            }
        }
    }

    /// Sub-contest representation over `M`: parameters projected onto `M`
    /// (re-indexed in member order), same `r`.
    pub fn restrict(&self, m: Subset) -> Result<ImpactSpec> {
        let n = self.arity().unwrap_or(MAX_CONTESTANTS);
        m.validate(n)?;
        let family = match &self.family {
            Family::PowerPlusConstant { a, b, r } => Family::PowerPlusConstant {
                a: m.project(a),
                b: m.project(b),
                r: *r,
            },
            Family::Linear { b } => Family::Linear { b: m.project(b) },
            Family::Tullock { a, r } => Family::Tullock {
                a: m.project(a),
                r: *r,
            },
            Family::Custom(c) if !c.is_shared() => Family::Custom(CustomImpact {
                label: c.label.clone(),
                fns: m.project(&c.fns),
                domain_max: c.domain_max,
            }),
            other => other.clone(),
        };
        Ok(ImpactSpec { family })
    }

    /// The same CSF written as an explicit power-plus-constant spec over `n`
    /// contestants.
    pub fn to_power_form(&self, n: usize) -> Result<ImpactSpec> {
        self.check_arity(n)?;
        let r = self.r().ok_or(CsfError::UnsupportedFamily {
            family: "custom_table",
            why: "custom impacts have no power form",
        })?;
        let (a, b): (Vec<f64>, Vec<f64>) = (0..n).map(|j| self.params(j).unwrap()).unzip();
        ImpactSpec::power_plus_constant(a, b, r)
    }

    /// Multiply every `a_j` and `b_j` by `c > 0`.
    pub fn scaled(&self, n: usize, c: f64) -> Result<ImpactSpec> {
        if !(c.is_finite() && c > 0.0) {
            return Err(CsfError::InvalidParameter(format!(
                "scale must be positive, got {c}"
            )));
        }
        match self.to_power_form(n)?.family {
            Family::PowerPlusConstant { a, b, r } => ImpactSpec::power_plus_constant(
                a.iter().map(|v| v * c).collect(),
                b.iter().map(|v| v * c).collect(),
                r,
            ),
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(ImpactSpec::power_plus_constant(vec![1.0, 0.0], vec![0.0, 0.0], 1.0).is_err());
        assert!(ImpactSpec::power_plus_constant(vec![1.0, 1.0], vec![-1.0, 0.0], 1.0).is_err());
        assert!(ImpactSpec::power_plus_constant(vec![1.0, 1.0], vec![0.0], 1.0).is_err());
        assert!(ImpactSpec::tullock(vec![1.0, 1.0], 0.0).is_err());
        assert!(ImpactSpec::tullock(vec![1.0], 1.0).is_err());
        assert!(ImpactSpec::symmetric_luck(-0.1, 1.0).is_err());
        assert!(ImpactSpec::linear(vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn restriction_projects_parameters() {
        let spec = ImpactSpec::power_plus_constant(vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3], 2.0).unwrap();
        let sub = spec.restrict(Subset::from_indices([0, 2])).unwrap();
        assert_eq!(sub.params(0), Some((1.0, 0.1)));
        assert_eq!(sub.params(1), Some((3.0, 0.3)));
        assert_eq!(sub.r(), Some(2.0));
        assert_eq!(sub.arity(), Some(2));
        assert!(matches!(
            spec.restrict(Subset::from_indices([1])),
            Err(CsfError::InvalidSubset { size: 1 })
        ));
    }

    #[test]
    fn custom_validation_rejects_flat_and_negative() {
        #[derive(Debug)]
        struct Flat;
        impl ImpactFn for Flat {
            fn eval(&self, x: f64) -> f64 {
                x.min(5.0)
            }
        }
        #[derive(Debug)]
        struct Negative;
        impl ImpactFn for Negative {
            fn eval(&self, x: f64) -> f64 {
                x - 1.0
            }
        }
        assert!(matches!(
            CustomImpact::shared("flat", Arc::new(Flat)),
            Err(CsfError::NonMonotoneImpact { .. })
        ));
        assert!(matches!(
            CustomImpact::shared("neg", Arc::new(Negative)),
            Err(CsfError::NonMonotoneImpact { .. })
        ));
        // e^x overflows long before 1e6, hence the capped domain.
        assert!(matches!(
            CustomImpact::shared("raw-exp", Arc::new(ExpImpact)),
            Err(CsfError::NonFiniteImpact { .. })
        ));
        assert_eq!(CustomImpact::exp().domain_max(), 700.0);
    }

    #[test]
    fn validation_grid_shape() {
        let g = validation_grid(VALIDATION_MAX);
        assert_eq!(g.len(), 65);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-6).abs() < 1e-18);
        assert!((g[64] / 1e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_interpolates_and_extends() {
        let t = PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 2.0), (3.0, 6.0)]).unwrap();
        assert_eq!(t.eval(0.5), 1.5);
        assert_eq!(t.eval(2.0), 4.0);
        assert_eq!(t.eval(4.0), 8.0);
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.5, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn exact_support() {
        assert!(ImpactSpec::tullock(vec![1.0, 1.0], 2.0).unwrap().supports_exact());
        assert!(!ImpactSpec::tullock(vec![1.0, 1.0], 0.5).unwrap().supports_exact());
        assert!(ImpactSpec::linear(vec![1.0, 0.0]).unwrap().supports_exact());
        assert!(!ImpactSpec::custom(CustomImpact::log1p()).supports_exact());
    }
}
