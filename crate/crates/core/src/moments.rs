//! Exact marginal second-order moments.
//!
//! The moment of a subset `M` is the squared norm of its marginal Bloch
//! vector, `R[ρ^(M)] = ‖r^(M)‖²`. Marginal purities follow from moments as
//! `tr(ρ^(M))² = (1 + Σ_{M' ⊆ M} R[ρ^(M')]) / d^(M)`, and the relation can be
//! inverted subset by subset in order of increasing size.

use std::collections::BTreeMap;

use crate::bloch::{marginal_vector, BlochTensor};
use crate::error::{Error, Result};
use crate::states::{partial_trace, purity, DensityMatrix};
use crate::subset::Subset;

/// All `2^N - 1` marginal moments of a state, keyed by subset.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet {
    dims: Vec<usize>,
    entries: BTreeMap<Subset, f64>,
}

impl MomentSet {
    pub fn new(dims: Vec<usize>, entries: BTreeMap<Subset, f64>) -> Self {
        MomentSet { dims, entries }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn get(&self, subset: &Subset) -> Option<f64> {
        self.entries.get(subset).copied()
    }

    pub fn entries(&self) -> &BTreeMap<Subset, f64> {
        &self.entries
    }

    /// Values in canonical subset order.
    pub fn values(&self) -> Vec<f64> {
        self.entries.values().copied().collect()
    }

    fn subset_dim(&self, subset: &Subset) -> usize {
        subset.positions().map(|p| self.dims[p]).product()
    }
}

pub fn moment(bt: &BlochTensor, subset: &Subset) -> Result<f64> {
    Ok(marginal_vector(bt, subset)?.norm_sq())
}

pub fn moment_set(bt: &BlochTensor) -> MomentSet {
    let entries = Subset::all_nonempty(bt.n_particles())
        .into_iter()
        .map(|s| {
            let r = moment(bt, &s).expect("subset drawn from the tensor's particles");
            (s, r)
        })
        .collect();
    MomentSet::new(bt.dims().to_vec(), entries)
}

/// Marginal purity of `subset` computed from moments alone.
pub fn purity_from_moments(ms: &MomentSet, subset: &Subset) -> Result<f64> {
    if subset.max_label() > ms.dims.len() {
        return Err(Error::InvalidSubset(format!(
            "{subset} on {} particles",
            ms.dims.len()
        )));
    }
    let total = subset
        .subsets()
        .iter()
        .map(|s| ms.get(s).ok_or_else(|| Error::MissingSubset(s.to_string())))
        .sum::<Result<f64>>()?;
    Ok((1.0 + total) / ms.subset_dim(subset) as f64)
}

/// Marginal purities `tr(ρ^(M))²` for every non-empty subset, from reduced states.
pub fn marginal_purities(rho: &DensityMatrix) -> Result<BTreeMap<Subset, f64>> {
    Subset::all_nonempty(rho.n_particles())
        .into_iter()
        .map(|s| Ok((s.clone(), purity(&partial_trace(rho, &s)?))))
        .collect()
}

/// Inverts the purity relation one cardinality level at a time.
pub fn moments_from_purities(dims: &[usize], purities: &BTreeMap<Subset, f64>) -> Result<MomentSet> {
    let mut entries: BTreeMap<Subset, f64> = BTreeMap::new();
    // Canonical order is by cardinality, so every proper subset is filled first.
    for s in Subset::all_nonempty(dims.len()) {
        let p = *purities
            .get(&s)
            .ok_or_else(|| Error::MissingSubset(s.to_string()))?;
        let d: usize = s.positions().map(|q| dims[q]).product();
        let lower: f64 = s
            .subsets()
            .iter()
            .filter(|t| **t != s)
            .map(|t| entries[t])
            .sum();
        entries.insert(s, d as f64 * p - 1.0 - lower);
    }
    Ok(MomentSet::new(dims.to_vec(), entries))
}

/// Entry-wise comparison of two moment sets of states on the same dims.
pub fn moment_sets_equal(a: &MomentSet, b: &MomentSet, tol: f64) -> Result<bool> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch(format!(
            "moment sets over {:?} and {:?}",
            a.dims, b.dims
        )));
    }
    Ok(a.entries.len() == b.entries.len()
        && a.entries.iter().all(|(s, x)| match b.get(s) {
            Some(y) => (x - y).abs() <= tol,
            None => false,
        }))
}
