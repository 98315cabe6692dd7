//! Orthogonal Hermitian operator bases.
//!
//! Elements are normalized so that `tr(λ_i λ_j) = d δ_ij`, which puts the
//! identity on the same footing as the traceless generators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Largest local dimension the crate builds bases for.
pub const MAX_LOCAL_DIM: usize = 16;

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `d²` elements, identity first.
    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Result<&CMatrix> {
        self.elements.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            size: self.elements.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Generalized Gell-Mann basis of dimension `d`.
///
/// Order: identity, then the symmetric generators `|j><k| + |k><j|`, the
/// antisymmetric generators `-i|j><k| + i|k><j|` (both for `j < k` in
/// lexicographic order), then the diagonal generators. For `d = 2` this is
/// exactly `(I, σx, σy, σz)`.
pub fn gellmann_basis(d: usize) -> Result<OperatorBasis> {
    if !(2..=MAX_LOCAL_DIM).contains(&d) {
        return Err(Error::InvalidLocalDim(d));
    }
    let zero = Complex64::new(0.0, 0.0);
    let scale = (d as f64 / 2.0).sqrt();
    let mut elements = Vec::with_capacity(d * d);
    elements.push(CMatrix::identity(d, d));

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut m = CMatrix::from_element(d, d, zero);
        m[(j, k)] = Complex64::new(scale, 0.0);
        m[(k, j)] = Complex64::new(scale, 0.0);
        elements.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::from_element(d, d, zero);
        m[(j, k)] = Complex64::new(0.0, -scale);
        m[(k, j)] = Complex64::new(0.0, scale);
        elements.push(m);
    }
    for l in 1..d {
        let norm = scale * (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::from_element(d, d, zero);
        for j in 0..l {
            m[(j, j)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        elements.push(m);
    }
    Ok(OperatorBasis { dim: d, elements })
}

/// Pauli matrices `(σx, σy, σz)`.
pub fn pauli() -> [CMatrix; 3] {
    let b = gellmann_basis(2).expect("d = 2 is valid");
    [b.elements[1].clone(), b.elements[2].clone(), b.elements[3].clone()]
}

/// Kronecker product of a sequence of matrices, first factor most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// `⊗_n λ_{i_n}` for one index per basis.
pub fn tensor_basis_element(bases: &[OperatorBasis], indices: &[usize]) -> Result<CMatrix> {
    if bases.len() != indices.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bases but {} indices",
            bases.len(),
            indices.len()
        )));
    }
    let factors = bases
        .iter()
        .zip(indices)
        .map(|(b, &i)| b.element(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(kron_all(factors))
}
