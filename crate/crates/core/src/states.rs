//! Density matrices on tensor-product Hilbert spaces.
//!
//! Basis ordering is row-major over particles: particle 1 is the most
//! significant digit of a matrix index, matching the Kronecker product order.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operators::{kron_all, MAX_LOCAL_DIM};
use crate::subset::Subset;
use crate::{CMatrix, STATE_TOL};

/// Largest total Hilbert-space dimension accepted.
pub const MAX_TOTAL_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

/// Eigenvalues sorted descending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        *self.0.last().unwrap_or(&0.0)
    }

    /// Sup-norm distance to another spectrum of the same length.
    pub fn distance(&self, other: &Spectrum) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("no subsystems".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| !(2..=MAX_LOCAL_DIM).contains(&d)) {
        return Err(Error::InvalidLocalDim(d));
    }
    let total: usize = dims.iter().product();
    if total > MAX_TOTAL_DIM {
        return Err(Error::InvalidDims(format!(
            "total dimension {total} exceeds {MAX_TOTAL_DIM}"
        )));
    }
    Ok(total)
}

impl DensityMatrix {
    /// Builds a state and checks trace, Hermiticity and positivity at [`STATE_TOL`].
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(dims, matrix)?;
        rho.validate(STATE_TOL)?;
        Ok(rho)
    }

    /// Only the shape is checked; the matrix may fail to be a state.
    pub fn new_unchecked(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let total = check_dims(&dims)?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need a {total}x{total} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    pub fn from_pure(dims: Vec<usize>, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(dims, &psi * psi.adjoint())
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d = check_dims(&dims)?;
        Self::new(
            dims,
            CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        )
    }

    /// Real diagonal state in the computational basis.
    pub fn diagonal(dims: Vec<usize>, probs: &[f64]) -> Result<Self> {
        let d = check_dims(&dims)?;
        if probs.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for dimension {d}",
                probs.len()
            )));
        }
        let diag = DVector::from_iterator(d, probs.iter().map(|&p| Complex64::new(p, 0.0)));
        Self::new(dims, CMatrix::from_diagonal(&diag))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = spectrum_of(&self.matrix)?.min();
        if min < -tol {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_particles(&self) -> usize {
        self.dims.len()
    }

    pub fn is_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    /// `U ρ U†` for a full-space unitary `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, state is {}x{}",
                u.nrows(),
                u.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        let m = u * &self.matrix * u.adjoint();
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            matrix: hermitize(&m),
        })
    }

    /// `(⊗_n U_n) ρ (⊗_n U_n)†` with one local unitary per particle.
    pub fn conjugate_local(&self, locals: &[CMatrix]) -> Result<Self> {
        if locals.len() != self.n_particles() {
            return Err(Error::DimensionMismatch(format!(
                "{} local unitaries for {} particles",
                locals.len(),
                self.n_particles()
            )));
        }
        for (u, &d) in locals.iter().zip(&self.dims) {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "local unitary {}x{} on a d={d} particle",
                    u.nrows(),
                    u.ncols()
                )));
            }
        }
        self.conjugate_by(&kron_all(locals))
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Kronecker product of states; dims are concatenated.
pub fn tensor_states(parts: &[DensityMatrix]) -> Result<DensityMatrix> {
    if parts.is_empty() {
        return Err(Error::InvalidDims("no parts".into()));
    }
    let dims: Vec<usize> = parts.iter().flat_map(|p| p.dims.iter().copied()).collect();
    let matrix = kron_all(parts.iter().map(|p| &p.matrix));
    DensityMatrix::new_unchecked(dims, matrix)
}

/// Digits of a flat index, particle 1 most significant.
fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn check_subset(rho: &DensityMatrix, subset: &Subset) -> Result<()> {
    if subset.max_label() > rho.n_particles() {
        return Err(Error::InvalidSubset(format!(
            "{subset} on a {}-particle state",
            rho.n_particles()
        )));
    }
    Ok(())
}

/// Reduced state on the particles in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &Subset) -> Result<DensityMatrix> {
    check_subset(rho, keep)?;
    let dims = &rho.dims;
    let kept: Vec<usize> = keep.positions().collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !kept.contains(p)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&p| dims[p]).collect();
    let d_keep: usize = kept_dims.iter().product();

    // (kept flat index, traced flat index) for every full index.
    let split: Vec<(usize, usize)> = (0..rho.dim())
        .map(|i| {
            let dg = digits(i, dims);
            let k = kept.iter().fold(0, |acc, &p| acc * dims[p] + dg[p]);
            let t = traced.iter().fold(0, |acc, &p| acc * dims[p] + dg[p]);
            (k, t)
        })
        .collect();

    let mut out = CMatrix::zeros(d_keep, d_keep);
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += rho.matrix[(i, j)];
            }
        }
    }
    DensityMatrix::new_unchecked(kept_dims, out)
}

/// Partial transpose on the particles in `subset`. The result is Hermitian
/// with unit trace but need not be positive.
pub fn partial_transpose(rho: &DensityMatrix, subset: &Subset) -> Result<CMatrix> {
    check_subset(rho, subset)?;
    let dims = &rho.dims;
    let flip: Vec<usize> = subset.positions().collect();
    let all_digits: Vec<Vec<usize>> = (0..rho.dim()).map(|i| digits(i, dims)).collect();
    let flat = |dg: &[usize]| dg.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x);

    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    for (i, di) in all_digits.iter().enumerate() {
        for (j, dj) in all_digits.iter().enumerate() {
            let mut ri = di.clone();
            let mut rj = dj.clone();
            for &p in &flip {
                std::mem::swap(&mut ri[p], &mut rj[p]);
            }
            out[(flat(&ri), flat(&rj))] = rho.matrix[(i, j)];
        }
    }
    Ok(out)
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
    rho.matrix.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn spectrum_of(m: &CMatrix) -> Result<Spectrum> {
    let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > STATE_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum(ev))
}

pub fn spectrum(rho: &DensityMatrix) -> Result<Spectrum> {
    spectrum_of(&rho.matrix)
}

pub fn is_positive(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    Ok(spectrum(rho)?.min() >= -tol)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Hilbert-Schmidt random mixed state `G G† / tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<DensityMatrix> {
    let d = check_dims(dims)?;
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new_unchecked(dims.to_vec(), hermitize(&(m / Complex64::new(tr, 0.0))))
}

/// Pure state from a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<DensityMatrix> {
    let d = check_dims(dims)?;
    let psi = DVector::from_fn(d, |_, _| complex_gaussian(rng));
    DensityMatrix::from_pure(dims.to_vec(), &psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        let psi = DVector::from_vec(vec![
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
        ]);
        DensityMatrix::from_pure(vec![2, 2], &psi).unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn tensor_of_simple_states() {
        let mixed = DensityMatrix::maximally_mixed(vec![2]).unwrap();
        let t = tensor_states(&[mixed.clone(), mixed]).unwrap();
        assert!(close(t.matrix(), DensityMatrix::maximally_mixed(vec![2, 2]).unwrap().matrix(), 0.0));

        let zero = DensityMatrix::diagonal(vec![2], &[1.0, 0.0]).unwrap();
        let one = DensityMatrix::diagonal(vec![2], &[0.0, 1.0]).unwrap();
        let t = tensor_states(&[zero, one]).unwrap();
        assert!(close(t.matrix(), DensityMatrix::diagonal(vec![2, 2], &[0.0, 1.0, 0.0, 0.0]).unwrap().matrix(), 0.0));

        let bb = tensor_states(&[bell(), bell()]).unwrap();
        assert_eq!(bb.dims(), &[2, 2, 2, 2]);
        assert!((purity(&bb) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let half = DensityMatrix::maximally_mixed(vec![2]).unwrap();
        let r = partial_trace(&bell(), &Subset::new([1], 2).unwrap()).unwrap();
        assert!(close(r.matrix(), half.matrix(), 1e-15));

        let ce = DensityMatrix::diagonal(vec![2, 2], &[0.75, 0.0, 0.0, 0.25]).unwrap();
        let r = partial_trace(&ce, &Subset::new([1], 2).unwrap()).unwrap();
        assert!(close(r.matrix(), DensityMatrix::diagonal(vec![2], &[0.75, 0.25]).unwrap().matrix(), 1e-15));

        assert!(partial_trace(&ce, &Subset::new([1, 2, 3], 3).unwrap()).is_err());
    }

    #[test]
    fn partial_trace_of_product_and_nesting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_density(&[2], &mut rng).unwrap();
            let b = random_density(&[3], &mut rng).unwrap();
            let ab = tensor_states(&[a.clone(), b.clone()]).unwrap();
            let ra = partial_trace(&ab, &Subset::new([1], 2).unwrap()).unwrap();
            assert!(close(ra.matrix(), a.matrix(), 1e-12));
            let rb = partial_trace(&ab, &Subset::new([2], 2).unwrap()).unwrap();
            assert!(close(rb.matrix(), b.matrix(), 1e-12));

            let rho = random_density(&[2, 2, 2], &mut rng).unwrap();
            let r12 = partial_trace(&rho, &Subset::new([1, 2], 3).unwrap()).unwrap();
            let r1_nested = partial_trace(&r12, &Subset::new([1], 2).unwrap()).unwrap();
            let r1 = partial_trace(&rho, &Subset::new([1], 3).unwrap()).unwrap();
            assert!(close(r1.matrix(), r1_nested.matrix(), 1e-12));
            let p = purity(&r12);
            assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&p));
        }
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::maximally_mixed(vec![2, 2]).unwrap()) - 0.25).abs() < 1e-15);
        assert!((purity(&bell()) - 1.0).abs() < 1e-15);
        let ce = DensityMatrix::diagonal(vec![2, 2], &[0.75, 0.0, 0.0, 0.25]).unwrap();
        assert!((purity(&ce) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn spectra() {
        let s = spectrum(&DensityMatrix::diagonal(vec![2, 2], &[0.5, 0.5, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s.eigenvalues().len(), 4);
        for (x, e) in s.eigenvalues().iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((x - e).abs() < 1e-14);
        }
        let s = spectrum(&DensityMatrix::diagonal(vec![2, 2], &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 0.0]).unwrap()).unwrap();
        for (x, e) in s.eigenvalues().iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 0.0]) {
            assert!((x - e).abs() < 1e-14);
        }
        let s = spectrum(&bell()).unwrap();
        for (x, e) in s.eigenvalues().iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(spectrum_of(&m), Err(Error::NotHermitian(_))));
        assert!(DensityMatrix::new(vec![2], m).is_err());
    }

    #[test]
    fn validation_errors() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(vec![2], bad_trace), Err(Error::InvalidTrace(_))));
        let negative = DensityMatrix::diagonal(vec![2], &[1.5, -0.5]);
        assert!(matches!(negative, Err(Error::NotPositive(_))));
        assert!(DensityMatrix::new_unchecked(vec![2, 2], CMatrix::identity(2, 2)).is_err());
        assert!(DensityMatrix::maximally_mixed(vec![1]).is_err());
        assert!(DensityMatrix::maximally_mixed(vec![2; 5]).is_err());
    }

    #[test]
    fn random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = random_pure(&[2, 2], &mut rng).unwrap();
            assert!((purity(&p) - 1.0).abs() < 1e-12);
            let m = random_density(&[2, 3], &mut rng).unwrap();
            assert!((m.matrix().trace().re - 1.0).abs() < 1e-12);
            m.validate(STATE_TOL).unwrap();
        }
        let a = random_density(&[2, 2], &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_density(&[2, 2], &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partial_transpose_of_bell() {
        let pt = partial_transpose(&bell(), &Subset::new([2], 2).unwrap()).unwrap();
        let s = spectrum_of(&pt).unwrap();
        for (x, e) in s.eigenvalues().iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((x - e).abs() < 1e-14);
        }
        // Transposing both parties is the full transpose.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&[2, 3], &mut rng).unwrap();
        let full = partial_transpose(&rho, &Subset::new([1, 2], 2).unwrap()).unwrap();
        assert!(close(&full, &rho.matrix().transpose(), 0.0));
    }
}
