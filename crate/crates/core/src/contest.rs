//! Contestants, sub-contests and effort profiles.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CsfError, Result};
use crate::scalar::Scalar;

/// Largest contest representable by a [`Subset`] bitmask.
pub const MAX_CONTESTANTS: usize = 64;

/// The contestant set `N`, optionally labelled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContestantSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl ContestantSet {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_CONTESTANTS).contains(&n) {
            return Err(CsfError::InvalidParameter(format!(
                "contestant count must lie in 2..={MAX_CONTESTANTS}, got {n}"
            )));
        }
        Ok(ContestantSet { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut set = Self::new(labels.len())?;
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(CsfError::InvalidParameter(
                "contestant labels must be unique".into(),
            ));
        }
        set.labels = Some(labels);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("{}", i + 1),
        }
    }

    pub fn all(&self) -> Subset {
        Subset::full(self.n)
    }
}

/// A set of contestant indices `M ⊆ {0, .., n-1}`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_mask(mask: u64) -> Self {
        Subset(mask)
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_CONTESTANTS);
        if n == MAX_CONTESTANTS {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Subset(indices.into_iter().fold(0, |m, i| m | (1u64 << i)))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_CONTESTANTS && self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> Self {
        Subset(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        Subset(self.0 & !(1 << i))
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    /// Position of member `i` within the subset's index order.
    pub fn rank_of(self, i: usize) -> Option<usize> {
        self.contains(i)
            .then(|| (self.0 & ((1u64 << i) - 1)).count_ones() as usize)
    }

    /// Checks `|M| >= 2` and `M ⊆ {0..n}`.
    pub fn validate(self, n: usize) -> Result<()> {
        if !self.is_subset_of(Subset::full(n.min(MAX_CONTESTANTS))) {
            return Err(CsfError::SubsetOutOfRange { mask: self.0, n });
        }
        if self.len() < 2 {
            return Err(CsfError::InvalidSubset { size: self.len() });
        }
        Ok(())
    }

    /// Projection `x^M`.
    pub fn project<T: Clone>(self, x: &[T]) -> Vec<T> {
        self.members().map(|i| x[i].clone()).collect()
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

/// Non-negative effort vector with at least one active contestant.
#[derive(Clone, Debug, PartialEq)]
pub struct EffortProfile<T = f64>(Vec<T>);

impl<T: Scalar> EffortProfile<T> {
    pub fn new(x: Vec<T>) -> Result<Self> {
        if x.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(CsfError::InvalidProfile(
                "efforts must be finite and non-negative".into(),
            ));
        }
        if !x.iter().any(Scalar::is_positive) {
            return Err(CsfError::InvalidProfile(
                "at least one contestant must exert positive effort".into(),
            ));
        }
        Ok(EffortProfile(x))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl EffortProfile<f64> {
    pub fn from_f64(x: &[f64]) -> Result<Self> {
        Self::new(x.to_vec())
    }

    /// Lift into another backend.
    pub fn lift<T: Scalar>(&self) -> EffortProfile<T> {
        EffortProfile(self.0.iter().map(|&v| T::from_f64(v)).collect())
    }
}

impl<T> std::ops::Deref for EffortProfile<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_and_rank() {
        let m = Subset::from_indices([0, 2, 5]);
        assert_eq!(m.members().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert_eq!(m.rank_of(5), Some(2));
        assert_eq!(m.rank_of(1), None);
        assert_eq!(m.without(2).len(), 2);
        assert_eq!(m.project(&[10, 11, 12, 13, 14, 15]), vec![10, 12, 15]);
    }

    #[test]
    fn subset_validation() {
        assert!(Subset::full(3).validate(3).is_ok());
        assert_eq!(
            Subset::from_indices([1]).validate(3),
            Err(CsfError::InvalidSubset { size: 1 })
        );
        assert!(matches!(
            Subset::from_indices([0, 3]).validate(3),
            Err(CsfError::SubsetOutOfRange { .. })
        ));
        assert_eq!(Subset::full(64).len(), 64);
    }

    #[test]
    fn profile_rejects_zero_and_negative() {
        assert!(EffortProfile::from_f64(&[0.0, 0.0]).is_err());
        assert!(EffortProfile::from_f64(&[1.0, -0.5]).is_err());
        assert!(EffortProfile::from_f64(&[f64::NAN, 1.0]).is_err());
        assert!(EffortProfile::from_f64(&[0.0, 2.0]).is_ok());
    }

    #[test]
    fn contestant_set_bounds() {
        assert!(ContestantSet::new(1).is_err());
        assert!(ContestantSet::new(65).is_err());
        assert!(ContestantSet::with_labels(vec!["a".into(), "a".into()]).is_err());
        let set = ContestantSet::with_labels(vec!["ann".into(), "bo".into()]).unwrap();
        assert_eq!(set.label(1), "bo");
        assert_eq!(set.all(), Subset::full(2));
    }
}
