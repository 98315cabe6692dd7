//! Local-unitary equivalence through Bloch rotations.
//!
//! A local unitary `⊗_n U_n` acts on every marginal Bloch vector as the
//! tensor product of the adjoint rotations `Q_n`. Equal moment sets only
//! guarantee *some* rotation per marginal block; this module separates the
//! two by checking blockwise product rotations and by bounding how far two
//! two-qubit correlation matrices are from any product rotation.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bloch::{bloch_from_state, marginal_vector, pair_correlation, BlochTensor, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::moments::{moment_set, moment_sets_equal};
use crate::operators::pauli;
use crate::sampling::haar_su2;
use crate::states::{spectrum, DensityMatrix};
use crate::subset::Subset;
use crate::CMatrix;

/// Residual above which two correlation matrices are declared not related by
/// any product rotation.
pub const RESIDUAL_THRESHOLD: f64 = 1e-6;

/// Default number of random restarts for the product-rotation search.
pub const DEFAULT_RESTARTS: usize = 32;

const ROTATION_TOL: f64 = 1e-10;

/// Element of SO(k).
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation(DMatrix<f64>);

impl Rotation {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("{}x{} rotation", m.nrows(), m.ncols())));
        }
        let k = m.nrows();
        let dev = (m.transpose() * &m - DMatrix::identity(k, k)).amax();
        let det = m.determinant();
        if dev > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidConfig(format!(
                "not a rotation: orthogonality deviation {dev:e}, det {det}"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn identity(k: usize) -> Self {
        Rotation(DMatrix::identity(k, k))
    }

    pub fn from_matrix3(m: &Matrix3<f64>) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(3, 3, m.as_slice()))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn to_matrix3(&self) -> Option<Matrix3<f64>> {
        (self.dim() == 3).then(|| Matrix3::from_column_slice(self.0.as_slice()))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.0 * DVector::from_column_slice(v)).as_slice().to_vec()
    }
}

/// Element of SU(d).
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary(CMatrix);

impl Unitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotUnitary(f64::INFINITY));
        }
        let d = m.nrows();
        let dev = (m.adjoint() * &m - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > ROTATION_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let det_dev = (m.determinant() - Complex64::new(1.0, 0.0)).norm();
        if det_dev > 1e-8 {
            return Err(Error::NotUnitary(det_dev));
        }
        Ok(Unitary(m))
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Unitary(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn compose(&self, other: &Unitary) -> Unitary {
        Unitary(&self.0 * &other.0)
    }

    pub fn neg(&self) -> Unitary {
        Unitary(-&self.0)
    }
}

/// Adjoint action of SU(2) on the Pauli vector: `Q_ij = tr(σ_i U σ_j U†) / 2`.
pub fn su2_to_so3(u: &Unitary) -> Result<Rotation> {
    if u.0.nrows() != 2 {
        return Err(Error::DimensionMismatch(format!("{}x{} is not SU(2)", u.0.nrows(), u.0.ncols())));
    }
    let u = Unitary::new(u.0.clone())?;
    let p = pauli();
    let mut q = Matrix3::zeros();
    for j in 0..3 {
        let conj = &u.0 * &p[j] * u.0.adjoint();
        for i in 0..3 {
            q[(i, j)] = 0.5 * (&p[i] * &conj).trace().re;
        }
    }
    Ok(Rotation(DMatrix::from_column_slice(3, 3, q.as_slice())))
}

/// A rotation taking `v` to `w`, built from two Householder reflections.
pub fn rotation_between(v: &[f64], w: &[f64]) -> Result<Rotation> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} components", v.len(), w.len())));
    }
    let k = v.len();
    let v = DVector::from_column_slice(v);
    let w = DVector::from_column_slice(w);
    let (nv, nw) = (v.norm(), w.norm());
    if nv == 0.0 || nw == 0.0 {
        return Err(Error::ZeroVector);
    }
    if (nv - nw).abs() > ROTATION_TOL * nv.max(1.0) {
        return Err(Error::NormMismatch(nv, nw));
    }
    let diff = &v - &w;
    if diff.norm() <= 1e-15 * nv {
        return Ok(Rotation::identity(k));
    }
    if k == 1 {
        return Err(Error::DimensionMismatch("SO(1) cannot reverse a vector".into()));
    }
    let reflect = |n: &DVector<f64>| DMatrix::identity(k, k) - 2.0 * n * n.transpose();
    let h1 = reflect(&(diff.clone() / diff.norm()));

    // Second reflection through a hyperplane containing w restores det = +1.
    let wu = &w / nw;
    let j = (0..k)
        .min_by(|&a, &b| wu[a].abs().total_cmp(&wu[b].abs()))
        .expect("k >= 2");
    let mut m = DVector::zeros(k);
    m[j] = 1.0;
    m -= &wu * wu[j];
    let m = m.normalize();
    Ok(Rotation(reflect(&m) * h1))
}

fn kron_rotations(rotations: &[&Rotation]) -> DMatrix<f64> {
    rotations
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, r| acc.kronecker(&r.0))
}

/// True iff every marginal vector of `b` equals the product of the per-particle
/// rotations applied to the matching marginal vector of `a`, within 1e-9.
pub fn check_blockwise_rotation(a: &BlochTensor, b: &BlochTensor, rotations: &[Rotation]) -> Result<bool> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    if rotations.len() != a.n_particles() {
        return Err(Error::DimensionMismatch(format!(
            "{} rotations for {} particles",
            rotations.len(),
            a.n_particles()
        )));
    }
    for (r, &d) in rotations.iter().zip(a.dims()) {
        if r.dim() != d * d - 1 {
            return Err(Error::DimensionMismatch(format!(
                "rotation of size {} for a d={d} particle",
                r.dim()
            )));
        }
    }
    for subset in Subset::all_nonempty(a.n_particles()) {
        let q = kron_rotations(&subset.positions().map(|p| &rotations[p]).collect::<Vec<_>>());
        let va = DVector::from_vec(marginal_vector(a, &subset)?.values);
        let vb = DVector::from_vec(marginal_vector(b, &subset)?.values);
        if (q * va - vb).amax() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Singular-value lower bound on `min ‖T_b − Q1 T_a Q2ᵀ‖_F` over rotations.
pub fn mirsky_lower_bound(ta: &CorrelationMatrix, tb: &CorrelationMatrix) -> f64 {
    let sa = ta.singular_values();
    let sb = tb.singular_values();
    sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug)]
pub struct ProductAlignment {
    pub residual: f64,
    pub q1: Rotation,
    pub q2: Rotation,
}

/// `R ∈ SO(3)` minimizing `‖b − R a‖_F`.
fn best_left_rotation(b: &Matrix3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
    let k = a * b.transpose();
    let svd = k.svd(true, true);
    let u = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").transpose();
    let mut d = Matrix3::identity();
    d[(2, 2)] = (v * u.transpose()).determinant().signum();
    v * d * u.transpose()
}

/// SVD with both factors in SO(3); the last singular value carries the sign
/// of the determinant.
fn signed_svd(t: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let svd = t.svd(true, true);
    let mut u = svd.u.expect("requested");
    let mut v = svd.v_t.expect("requested").transpose();
    // nalgebra sorts singular values descending; fix orientation on the smallest.
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
    }
    (u, v)
}

fn residual(ta: &Matrix3<f64>, tb: &Matrix3<f64>, q1: &Matrix3<f64>, q2: &Matrix3<f64>) -> f64 {
    (tb - q1 * ta * q2.transpose()).norm()
}

/// Alternating minimization over `(Q1, Q2)` from a starting point.
fn refine(ta: &Matrix3<f64>, tb: &Matrix3<f64>, mut q1: Matrix3<f64>, mut q2: Matrix3<f64>) -> (f64, Matrix3<f64>, Matrix3<f64>) {
    let mut best = residual(ta, tb, &q1, &q2);
    for _ in 0..200 {
        q1 = best_left_rotation(tb, &(ta * q2.transpose()));
        q2 = best_left_rotation(&tb.transpose(), &(ta.transpose() * q1.transpose()));
        let r = residual(ta, tb, &q1, &q2);
        if best - r <= 1e-15 {
            best = best.min(r);
            break;
        }
        best = r;
    }
    (best, q1, q2)
}

fn random_so3<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    su2_to_so3(&haar_su2(rng))
        .and_then(|r| r.to_matrix3().ok_or(Error::ZeroVector))
        .expect("Haar SU(2) elements are valid")
}

/// Searches for product rotations aligning `ta` with `tb`.
///
/// Starts from the signed-SVD alignment, then refines `restarts` random
/// starting points by alternating Procrustes steps. Restart `i` draws from
/// stream `i` of a ChaCha generator seeded from `rng`, and ties resolve to
/// the lowest index, so the result is independent of scheduling.
pub fn product_rotation_residual<R: Rng + ?Sized>(
    ta: &CorrelationMatrix,
    tb: &CorrelationMatrix,
    restarts: usize,
    rng: &mut R,
) -> ProductAlignment {
    let (a, b) = (ta.0, tb.0);
    let (ua, va) = signed_svd(&a);
    let (ub, vb) = signed_svd(&b);
    let start = refine(&a, &b, ub * ua.transpose(), vb * va.transpose());

    let base_seed: u64 = rng.random();
    let candidates: Vec<(f64, Matrix3<f64>, Matrix3<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut sub = ChaCha8Rng::seed_from_u64(base_seed);
            sub.set_stream(i as u64);
            let q1 = random_so3(&mut sub);
            let q2 = random_so3(&mut sub);
            refine(&a, &b, q1, q2)
        })
        .collect();
    let (res, q1, q2) = std::iter::once(start)
        .chain(candidates)
        .reduce(|best, c| if c.0 < best.0 { c } else { best })
        .expect("at least the SVD start");
    ProductAlignment {
        residual: res,
        q1: Rotation(DMatrix::from_column_slice(3, 3, q1.as_slice())),
        q2: Rotation(DMatrix::from_column_slice(3, 3, q2.as_slice())),
    }
}

/// Two single-qubit states are unitarily equivalent iff their spectra match.
pub fn single_qubit_lu_equivalent(a: &DensityMatrix, b: &DensityMatrix, tol: f64) -> Result<bool> {
    if a.dims() != [2] || b.dims() != [2] {
        return Err(Error::DimensionMismatch(format!(
            "single-qubit test on dims {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(spectrum(a)?.distance(&spectrum(b)?) <= tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    EquivalentSingleQubit,
    NotEquivalent,
    ConsistentButUnproven,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EquivalentSingleQubit => "equivalent-single-qubit",
            Verdict::NotEquivalent => "not-equivalent",
            Verdict::ConsistentButUnproven => "consistent-but-unproven",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LuVerdict {
    pub moments_equal: bool,
    pub invariants_equal: bool,
    /// Product-rotation residual (max over qubit pairs); for one qubit, the
    /// difference of Bloch-vector lengths.
    pub product_residual: f64,
    /// Singular-value lower bound matching `product_residual`.
    pub lower_bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug)]
pub struct LuOptions {
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for LuOptions {
    fn default() -> Self {
        LuOptions {
            tol: 1e-10,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

pub fn lu_verdict(a: &DensityMatrix, b: &DensityMatrix) -> Result<LuVerdict> {
    lu_verdict_with(a, b, &LuOptions::default())
}

/// Compares two qubit states through the chain: equal moment sets, equal
/// rotation invariants, and small product-rotation residuals are each
/// necessary for LU equivalence. Only single qubits are decided positively.
pub fn lu_verdict_with(a: &DensityMatrix, b: &DensityMatrix, opts: &LuOptions) -> Result<LuVerdict> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    if !a.is_qubits() {
        return Err(Error::NotQubits(a.dims().to_vec()));
    }
    let (ba, bb) = (bloch_from_state(a), bloch_from_state(b));
    let moments_equal = moment_sets_equal(&moment_set(&ba), &moment_set(&bb), opts.tol)?;
    let n = a.n_particles();

    if n == 1 {
        let invariants_equal = single_qubit_lu_equivalent(a, b, opts.tol)?;
        let full = Subset::full(1)?;
        let gap = (marginal_vector(&ba, &full)?.norm() - marginal_vector(&bb, &full)?.norm()).abs();
        let verdict = if moments_equal && invariants_equal {
            Verdict::EquivalentSingleQubit
        } else {
            Verdict::NotEquivalent
        };
        return Ok(LuVerdict {
            moments_equal,
            invariants_equal,
            product_residual: gap,
            lower_bound: gap,
            verdict,
        });
    }

    let mut invariants_equal = true;
    for p in 1..=n {
        let s = Subset::new([p], n)?;
        let gap = marginal_vector(&ba, &s)?.norm() - marginal_vector(&bb, &s)?.norm();
        invariants_equal &= gap.abs() <= opts.tol;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut product_residual: f64 = 0.0;
    let mut lower_bound: f64 = 0.0;
    for p in 1..=n {
        for q in (p + 1)..=n {
            let ta = pair_correlation(&ba, p, q)?;
            let tb = pair_correlation(&bb, p, q)?;
            let (sa, sb) = (ta.singular_values(), tb.singular_values());
            invariants_equal &= sa.iter().zip(&sb).all(|(x, y)| (x - y).abs() <= opts.tol);
            let (da, db) = (ta.determinant(), tb.determinant());
            if da.abs() > opts.tol && db.abs() > opts.tol {
                invariants_equal &= da.signum() == db.signum();
            }
            lower_bound = lower_bound.max(mirsky_lower_bound(&ta, &tb));
            let fit = product_rotation_residual(&ta, &tb, opts.restarts, &mut rng);
            product_residual = product_residual.max(fit.residual);
        }
    }

    let verdict = if !moments_equal || !invariants_equal || product_residual > RESIDUAL_THRESHOLD {
        Verdict::NotEquivalent
    } else {
        Verdict::ConsistentButUnproven
    };
    Ok(LuVerdict {
        moments_equal,
        invariants_equal,
        product_residual,
        lower_bound,
        verdict,
    })
}
