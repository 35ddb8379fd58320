//! Labelled tensor-product system layouts.
//!
//! A [`SystemLayout`] is an ordered list of named factors with dimensions.
//! It fixes the row-major index convention for every operator in the
//! crate: the first factor varies slowest. Cross-module operator equality
//! is always up to an explicit [`crate::operator::Operator::permute_systems`].

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Short name of a tensor factor, e.g. `"A"`, `"E1"`, `"R0"`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemLabel(String);

impl SystemLabel {
    /// Panics on an empty name; labels are static program data.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "system label must be nonempty");
        SystemLabel(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Derived label for Choi input duplicates (`"R"` → `"R*"`).
    pub fn dup(&self) -> Self {
        SystemLabel(format!("{}*", self.0))
    }
}

impl fmt::Debug for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SystemLabel {
    fn from(s: &str) -> Self {
        SystemLabel::new(s)
    }
}

/// Ordered sequence of labelled factors with dimensions.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, usize)>", into = "Vec<(String, usize)>")]
pub struct SystemLayout {
    factors: Vec<(SystemLabel, usize)>,
}

impl SystemLayout {
    pub fn new(factors: Vec<(SystemLabel, usize)>) -> Result<Self> {
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::OutOfRange(format!("factor {label} has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelCollision(label.as_str().to_string()));
            }
        }
        Ok(SystemLayout { factors })
    }

    /// Convenience constructor from `[("A", 2), ("B", 3)]`-style data.
    pub fn of(factors: &[(&str, usize)]) -> Self {
        SystemLayout::new(
            factors
                .iter()
                .map(|&(l, d)| (SystemLabel::new(l), d))
                .collect(),
        )
        .expect("invalid layout literal")
    }

    /// Single-factor layout.
    pub fn single(label: impl Into<SystemLabel>, dim: usize) -> Self {
        SystemLayout::new(vec![(label.into(), dim)]).expect("invalid factor")
    }

    /// Total dimension (product of factor dimensions).
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn factors(&self) -> &[(SystemLabel, usize)] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &SystemLabel> {
        self.factors.iter().map(|(l, _)| l)
    }

    pub fn contains(&self, label: &SystemLabel) -> bool {
        self.factors.iter().any(|(l, _)| l == label)
    }

    pub fn position(&self, label: &SystemLabel) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.as_str().to_string()))
    }

    pub fn dim_of(&self, label: &SystemLabel) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// Concatenation; fails on a label collision, naming the label.
    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut factors = self.factors.clone();
        for (l, d) in &other.factors {
            if self.contains(l) {
                return Err(Error::LabelCollision(l.as_str().to_string()));
            }
            factors.push((l.clone(), *d));
        }
        SystemLayout::new(factors)
    }

    /// Sub-layout of the factors in `keep`, original order preserved.
    pub fn restricted_to(&self, keep: &[SystemLabel]) -> Result<SystemLayout> {
        for l in keep {
            self.position(l)?;
        }
        SystemLayout::new(
            self.factors
                .iter()
                .filter(|(l, _)| keep.contains(l))
                .cloned()
                .collect(),
        )
    }

    /// Complementary sub-layout, original order preserved.
    pub fn without(&self, drop: &[SystemLabel]) -> Result<SystemLayout> {
        for l in drop {
            self.position(l)?;
        }
        SystemLayout::new(
            self.factors
                .iter()
                .filter(|(l, _)| !drop.contains(l))
                .cloned()
                .collect(),
        )
    }

    /// Row-major strides: index = Σ strides[k] · multi[k].
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].1;
        }
        strides
    }

    /// Decomposes a linear index into per-factor indices.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut multi = Vec::with_capacity(self.factors.len());
        for s in strides {
            multi.push(index / s);
            index %= s;
        }
        multi
    }

    /// Recomposes a linear index from per-factor indices.
    pub fn linear_index(&self, multi: &[usize]) -> usize {
        self.strides()
            .iter()
            .zip(multi)
            .map(|(s, m)| s * m)
            .sum()
    }
}

impl fmt::Debug for SystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (l, d)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}:{d}")?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<(String, usize)>> for SystemLayout {
    type Error = Error;
    fn try_from(v: Vec<(String, usize)>) -> Result<Self> {
        SystemLayout::new(v.into_iter().map(|(l, d)| (SystemLabel::new(l), d)).collect())
    }
}

impl From<SystemLayout> for Vec<(String, usize)> {
    fn from(layout: SystemLayout) -> Self {
        layout
            .factors
            .into_iter()
            .map(|(l, d)| (l.0, d))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_and_indices() {
        let l = SystemLayout::of(&[("A", 2), ("B", 3), ("C", 2)]);
        assert_eq!(l.dim(), 12);
        assert_eq!(l.strides(), vec![6, 2, 1]);
        assert_eq!(l.multi_index(7), vec![1, 0, 1]);
        assert_eq!(l.linear_index(&[1, 0, 1]), 7);
    }

    #[test]
    fn rejects_duplicate_labels() {
        let err = SystemLayout::new(vec![
            (SystemLabel::new("A"), 2),
            (SystemLabel::new("A"), 3),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::LabelCollision(l) if l == "A"));
    }

    #[test]
    fn json_shape() {
        let l = SystemLayout::of(&[("A", 2), ("B", 2)]);
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"[["A",2],["B",2]]"#);
        let back: SystemLayout = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
