//! Two-qubit entanglement measures.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::pauli;
use crate::states::{partial_transpose, spectrum_of, DensityMatrix};
use crate::subset::Subset;
use crate::CMatrix;

const PPT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementReport {
    pub concurrence: f64,
    /// Entanglement of formation in ebits (log base 2).
    pub eof: f64,
    pub negativity: f64,
    pub ppt: bool,
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "two-qubit measure on dims {:?}",
            rho.dims()
        )));
    }
    Ok(())
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let roots = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
    v * CMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Wootters concurrence `max(0, √μ1 − √μ2 − √μ3 − √μ4)`.
///
/// The `μ` are the eigenvalues of `ρ ρ̃` with `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`; they
/// are taken from the Hermitian matrix `√ρ ρ̃ √ρ`, which has the same spectrum.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho)?;
    let sy = &pauli()[1];
    let yy = sy.kronecker(sy);
    let flipped = &yy * rho.matrix().conjugate() * &yy;
    let root = psd_sqrt(rho.matrix());
    let m = &root * flipped * &root;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut lambdas: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `h((1 + √(1 − C²)) / 2)` for concurrence `C`.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0)
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

fn check_cut(rho: &DensityMatrix, cut: &Subset) -> Result<()> {
    if cut.max_label() > rho.n_particles() || cut.len() >= rho.n_particles() {
        return Err(Error::InvalidSubset(format!(
            "{cut} is not a bipartite cut of {} particles",
            rho.n_particles()
        )));
    }
    Ok(())
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose
/// on `cut`.
pub fn negativity(rho: &DensityMatrix, cut: &Subset) -> Result<f64> {
    check_cut(rho, cut)?;
    let pt = partial_transpose(rho, cut)?;
    Ok(spectrum_of(&pt)?
        .eigenvalues()
        .iter()
        .filter(|&&x| x < 0.0)
        .map(|x| -x)
        .sum())
}

pub fn is_ppt(rho: &DensityMatrix, cut: &Subset) -> Result<bool> {
    Ok(negativity(rho, cut)? <= PPT_TOL)
}

pub fn entanglement_report(rho: &DensityMatrix) -> Result<EntanglementReport> {
    require_two_qubits(rho)?;
    let concurrence = concurrence(rho)?;
    let negativity = negativity(rho, &Subset::new([2], 2)?)?;
    Ok(EntanglementReport {
        concurrence,
        eof: eof_from_concurrence(concurrence),
        negativity,
        ppt: negativity <= PPT_TOL,
    })
}
