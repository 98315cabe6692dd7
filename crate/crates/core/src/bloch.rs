//! Generalized Bloch tensor of a density matrix.
//!
//! A state on dims `(d_1, ..., d_N)` is written as
//! `ρ = (1/d) Σ r_{i_1...i_N} λ_{i_1} ⊗ ... ⊗ λ_{i_N}` over the Gell-Mann bases
//! of [`crate::operators`], so `r_{i} = tr(ρ λ_{i})` and `r_{0...0} = 1`.
//! Coefficients are stored row-major over the multi-index, particle 1 first.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{gellmann_basis, kron_all, OperatorBasis};
use crate::states::{spectrum_of, DensityMatrix};
use crate::subset::Subset;
use crate::{CMatrix, STATE_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct BlochTensor {
    dims: Vec<usize>,
    coeffs: Vec<f64>,
}

/// Coefficients whose indices are non-zero exactly on `subset`, flattened
/// row-major over the subset's ascending particle order.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalVector {
    pub subset: Subset,
    pub values: Vec<f64>,
}

impl MarginalVector {
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Two-qubit correlation matrix `T_ij = r_ij`, `i, j ∈ {x, y, z}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationMatrix(pub Matrix3<f64>);

impl CorrelationMatrix {
    pub fn from_row_slice(values: &[f64]) -> Self {
        CorrelationMatrix(Matrix3::from_row_slice(values))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> [f64; 3] {
        let mut s: Vec<f64> = self.0.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        [s[0], s[1], s[2]]
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.norm_squared()
    }
}

fn local_sizes(dims: &[usize]) -> Vec<usize> {
    dims.iter().map(|d| d * d).collect()
}

fn flat_index(sizes: &[usize], indices: &[usize]) -> usize {
    indices.iter().zip(sizes).fold(0, |acc, (&i, &s)| acc * s + i)
}

/// All multi-indices over `ranges`, row-major, first slot most significant.
fn multi_indices(ranges: &[std::ops::Range<usize>]) -> Vec<Vec<usize>> {
    ranges.iter().fold(vec![Vec::new()], |acc, r| {
        acc.into_iter()
            .flat_map(|prefix| {
                r.clone().map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect()
    })
}

fn bases_for(dims: &[usize]) -> Result<Vec<OperatorBasis>> {
    dims.iter().map(|&d| gellmann_basis(d)).collect()
}

impl BlochTensor {
    /// Wraps raw coefficients; the all-zero coefficient must be exactly 1.
    pub fn from_coeffs(dims: Vec<usize>, coeffs: Vec<f64>) -> Result<Self> {
        let expected: usize = local_sizes(&dims).iter().product();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs[0] != 1.0 {
            return Err(Error::InvalidTrace(coeffs[0]));
        }
        Ok(BlochTensor { dims, coeffs })
    }

    /// Tensor of the maximally mixed state: 1 at the origin, 0 elsewhere.
    pub fn identity(dims: Vec<usize>) -> Self {
        let n: usize = local_sizes(&dims).iter().product();
        let mut coeffs = vec![0.0; n];
        coeffs[0] = 1.0;
        BlochTensor { dims, coeffs }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_particles(&self) -> usize {
        self.dims.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, indices: &[usize]) -> Result<f64> {
        let sizes = local_sizes(&self.dims);
        if indices.len() != sizes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices for {} particles",
                indices.len(),
                sizes.len()
            )));
        }
        if let Some((&i, &s)) = indices.iter().zip(&sizes).find(|(&i, &s)| i >= s) {
            return Err(Error::IndexOutOfRange { index: i, size: s });
        }
        Ok(self.coeffs[flat_index(&sizes, indices)])
    }

    /// Sum of squares of every coefficient except the all-zero one.
    pub fn nontrivial_norm_sq(&self) -> f64 {
        self.coeffs[1..].iter().map(|x| x * x).sum()
    }

    /// Multi-indices (over all particles) belonging to `subset`'s marginal block.
    fn block_indices(&self, subset: &Subset) -> Result<Vec<Vec<usize>>> {
        if subset.max_label() > self.n_particles() {
            return Err(Error::InvalidSubset(format!(
                "{subset} on a {}-particle tensor",
                self.n_particles()
            )));
        }
        let ranges: Vec<_> = self
            .dims
            .iter()
            .enumerate()
            .map(|(p, &d)| if subset.contains(p + 1) { 1..d * d } else { 0..1 })
            .collect();
        Ok(multi_indices(&ranges))
    }

    /// Replaces the block of `mv.subset` with `mv.values`.
    pub fn with_marginal(&self, mv: &MarginalVector) -> Result<Self> {
        let idx = self.block_indices(&mv.subset)?;
        if idx.len() != mv.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "marginal {} needs {} values, got {}",
                mv.subset,
                idx.len(),
                mv.values.len()
            )));
        }
        let sizes = local_sizes(&self.dims);
        let mut out = self.clone();
        for (ix, &v) in idx.iter().zip(&mv.values) {
            out.coeffs[flat_index(&sizes, ix)] = v;
        }
        Ok(out)
    }
}

/// `r_i = tr(ρ λ_i)` for every multi-index.
pub fn bloch_from_state(rho: &DensityMatrix) -> BlochTensor {
    let dims = rho.dims().to_vec();
    let bases = bases_for(&dims).expect("state dims are validated");
    let ranges: Vec<_> = local_sizes(&dims).into_iter().map(|s| 0..s).collect();
    let m = rho.matrix();
    let coeffs = multi_indices(&ranges)
        .iter()
        .map(|ix| {
            let op = kron_all(bases.iter().zip(ix).map(|(b, &i)| &b.elements()[i]));
            // tr(ρ A) = Σ_jk ρ_jk A_kj
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m.nrows() {
                for k in 0..m.ncols() {
                    acc += m[(j, k)] * op[(k, j)];
                }
            }
            acc.re
        })
        .collect::<Vec<_>>();
    let mut bt = BlochTensor { dims, coeffs };
    bt.coeffs[0] = 1.0;
    bt
}

/// `ρ = (1/d) Σ r_i λ_i`. Trace and Hermiticity hold by construction;
/// positivity does not, so the result is unchecked.
pub fn state_from_bloch(bt: &BlochTensor) -> Result<DensityMatrix> {
    let bases = bases_for(&bt.dims)?;
    let d: usize = bt.dims.iter().product();
    let ranges: Vec<_> = local_sizes(&bt.dims).into_iter().map(|s| 0..s).collect();
    let mut m = CMatrix::zeros(d, d);
    for (ix, &r) in multi_indices(&ranges).iter().zip(&bt.coeffs) {
        if r != 0.0 {
            let op = kron_all(bases.iter().zip(ix).map(|(b, &i)| &b.elements()[i]));
            m += op * Complex64::new(r, 0.0);
        }
    }
    m /= Complex64::new(d as f64, 0.0);
    DensityMatrix::new_unchecked(bt.dims.clone(), m)
}

/// As [`state_from_bloch`] but rejects reconstructions with an eigenvalue
/// below `-STATE_TOL`.
pub fn state_from_bloch_checked(bt: &BlochTensor) -> Result<DensityMatrix> {
    let rho = state_from_bloch(bt)?;
    let min = spectrum_of(rho.matrix())?.min();
    if min < -STATE_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(rho)
}

pub fn marginal_vector(bt: &BlochTensor, subset: &Subset) -> Result<MarginalVector> {
    let sizes = local_sizes(&bt.dims);
    let values = bt
        .block_indices(subset)?
        .iter()
        .map(|ix| bt.coeffs[flat_index(&sizes, ix)])
        .collect();
    Ok(MarginalVector {
        subset: subset.clone(),
        values,
    })
}

/// Correlation matrix between qubits `p` and `q` (labels, `p < q`).
pub fn pair_correlation(bt: &BlochTensor, p: usize, q: usize) -> Result<CorrelationMatrix> {
    let n = bt.n_particles();
    if p >= q || q > n || p == 0 {
        return Err(Error::InvalidSubset(format!("pair ({p},{q}) on {n} particles")));
    }
    if bt.dims[p - 1] != 2 || bt.dims[q - 1] != 2 {
        return Err(Error::NotQubits(bt.dims.clone()));
    }
    let mv = marginal_vector(bt, &Subset::new([p, q], n)?)?;
    Ok(CorrelationMatrix::from_row_slice(&mv.values))
}

pub fn correlation_matrix(bt: &BlochTensor) -> Result<CorrelationMatrix> {
    if bt.dims != [2, 2] {
        return Err(Error::NotQubits(bt.dims.clone()));
    }
    pair_correlation(bt, 1, 2)
}
