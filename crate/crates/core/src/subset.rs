//! Subsets of particles, labelled 1..=N.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A non-empty set of particle labels in `1..=N`, stored sorted ascending.
///
/// Ordering is by cardinality first and lexicographic second, so a full
/// enumeration reads `(1), (2), (3), (1,2), (1,3), (2,3), (1,2,3)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn new(labels: impl IntoIterator<Item = usize>, n_particles: usize) -> Result<Self> {
        let mut labels: Vec<usize> = labels.into_iter().collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        if labels[0] == 0 || *labels.last().unwrap() > n_particles {
            return Err(Error::InvalidSubset(format!(
                "labels {labels:?} outside 1..={n_particles}"
            )));
        }
        Ok(Subset(labels))
    }

    /// The full set `{1, ..., n}`.
    pub fn full(n_particles: usize) -> Result<Self> {
        Self::new(1..=n_particles, n_particles)
    }

    /// Every non-empty subset of `{1, ..., n}` in canonical order.
    pub fn all_nonempty(n_particles: usize) -> Vec<Subset> {
        let mut out: Vec<Subset> = (1u64..(1u64 << n_particles))
            .map(|mask| {
                Subset(
                    (0..n_particles)
                        .filter(|b| mask & (1 << b) != 0)
                        .map(|b| b + 1)
                        .collect(),
                )
            })
            .collect();
        out.sort();
        out
    }

    /// Every non-empty subset of `self`, including `self`, in canonical order.
    pub fn subsets(&self) -> Vec<Subset> {
        let k = self.0.len();
        let mut out: Vec<Subset> = (1u64..(1u64 << k))
            .map(|mask| {
                Subset(
                    (0..k)
                        .filter(|b| mask & (1 << b) != 0)
                        .map(|b| self.0[b])
                        .collect(),
                )
            })
            .collect();
        out.sort();
        out
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    /// Zero-based particle positions.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|l| l - 1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.0.iter().all(|l| other.contains(*l))
    }

    pub fn max_label(&self) -> usize {
        *self.0.last().unwrap()
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Parses `1,2`, `(1,2)` or `{1,2}`. The particle count is not known here, so
/// only label 0 is rejected; range checks against N happen at use sites.
impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .trim_start_matches(['(', '{', '['])
            .trim_end_matches([')', '}', ']']);
        let labels = inner
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidSubset(format!("bad label {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Subset::new(labels, usize::MAX)
    }
}
