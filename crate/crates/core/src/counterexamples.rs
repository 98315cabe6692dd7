//! States with identical marginal second-order moments that are not LU equivalent.
//!
//! The base state `ρ = 3/4 |00><00| + 1/4 |11><11|` has local Bloch vectors
//! `ẑ/2` and correlation vector `ẑ⊗ẑ`. Replacing the correlation vector by
//! `(0, a, 0, b, 0, 0, 0, 0, c)` with `a² + b² + c² = 1` keeps every moment
//! but, for `a, b ≠ 0`, cannot be reached by a product rotation and yields an
//! entangled state.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{bloch_from_state, state_from_bloch, MarginalVector};
use crate::entanglement::entanglement_report;
use crate::error::{Error, Result};
use crate::moments::moment;
use crate::states::{spectrum, DensityMatrix};
use crate::subset::Subset;
use crate::STATE_TOL;

const REGION_SLACK: f64 = 1e-12;

/// Coefficients of the rotated correlation vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CeParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = a * a + b * b + c * c;
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized(n));
        }
        Ok(CeParams { a, b, c })
    }

    /// Rescales onto the unit sphere.
    pub fn normalized(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = (a * a + b * b + c * c).sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(CeParams { a: a / n, b: b / n, c: c / n })
    }

    /// Point on the sphere at polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        CeParams {
            a: theta.sin() * phi.cos(),
            b: theta.sin() * phi.sin(),
            c: theta.cos(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c
    }

    /// The correlation vector, row-major over (x, y, z) ⊗ (x, y, z).
    pub fn correlation_vector(&self) -> [f64; 9] {
        [0.0, self.a, 0.0, self.b, 0.0, 0.0, 0.0, 0.0, self.c]
    }
}

/// `3/4 |00><00| + 1/4 |11><11|`.
pub fn base_state() -> DensityMatrix {
    DensityMatrix::diagonal(vec![2, 2], &[0.75, 0.0, 0.0, 0.25]).expect("valid diagonal state")
}

/// Closed-form positivity region of the rotated state (boundary included).
pub fn ce_positive(p: &CeParams) -> Result<bool> {
    if (p.norm_sq() - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(p.norm_sq()));
    }
    let CeParams { a, b, c } = *p;
    Ok(a - b - c >= -1.0 - REGION_SLACK
        && b - a - c >= -1.0 - REGION_SLACK
        && 2.0 * c * (c + 1.0) >= 2.0 * a * b + 1.0 - REGION_SLACK)
}

/// The rotated state without any positivity check.
pub fn build_ce_unchecked(p: &CeParams) -> DensityMatrix {
    let subset = Subset::new([1, 2], 2).expect("two particles");
    let bt = bloch_from_state(&base_state())
        .with_marginal(&MarginalVector {
            subset,
            values: p.correlation_vector().to_vec(),
        })
        .expect("nine two-qubit correlation entries");
    state_from_bloch(&bt).expect("two-qubit dims")
}

/// The rotated state; fails outside the positivity region.
pub fn build_ce(p: &CeParams) -> Result<DensityMatrix> {
    if !ce_positive(p)? {
        return Err(Error::OutsidePositivityRegion { a: p.a, b: p.b, c: p.c });
    }
    Ok(build_ce_unchecked(p))
}

fn pure_from_amplitudes(dims: Vec<usize>, amps: &[(usize, f64)]) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let mut psi = DVector::from_element(d, Complex64::new(0.0, 0.0));
    for &(i, x) in amps {
        psi[i] = Complex64::new(x, 0.0);
    }
    DensityMatrix::from_pure(dims, &psi).expect("non-zero amplitudes")
}

/// Two four-qubit pure states with full-body moment 9: Bell pairs on (1,2)
/// and (3,4), and `(1/2) Σ_ab |ab>|ab>`, i.e. Bell pairs on (1,3) and (2,4).
pub fn em1_states() -> (DensityMatrix, DensityMatrix) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for x in 0..2usize {
        for y in 0..2usize {
            // bit order: qubit 1 most significant
            first.push(((x << 3) | (x << 2) | (y << 1) | y, 0.5));
            second.push(((x << 3) | (y << 2) | (x << 1) | y, 0.5));
        }
    }
    (
        pure_from_amplitudes(vec![2; 4], &first),
        pure_from_amplitudes(vec![2; 4], &second),
    )
}

/// Two-qubit diagonal states with purity 1/2 and different moment sets.
pub fn em5_states() -> (DensityMatrix, DensityMatrix) {
    (
        DensityMatrix::diagonal(vec![2, 2], &[0.5, 0.5, 0.0, 0.0]).expect("valid"),
        DensityMatrix::diagonal(vec![2, 2], &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 0.0]).expect("valid"),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRecord {
    pub params: CeParams,
    /// Closed-form positivity verdict.
    pub positive: bool,
    /// Minimum eigenvalue of the unchecked construction is at least `-1e-10`.
    pub spectral_positive: bool,
    /// Entanglement measures; NaN outside the positivity region.
    pub concurrence: f64,
    pub eof: f64,
    pub negativity: f64,
    /// Moment of the (1,2) block.
    pub r12: f64,
}

/// Grid angles: polar angles include both poles, azimuths cover `[0, 2π)`,
/// each pole is visited once.
fn grid(step: f64) -> Vec<(f64, f64)> {
    let n_theta = (PI / step).round().max(1.0) as usize;
    let n_phi = (2.0 * PI / step).round().max(1.0) as usize;
    let mut out = Vec::new();
    for i in 0..=n_theta {
        let theta = i as f64 * PI / n_theta as f64;
        let phis = if i == 0 || i == n_theta { 1 } else { n_phi };
        for j in 0..phis {
            out.push((theta, j as f64 * 2.0 * PI / n_phi as f64));
        }
    }
    out
}

pub fn scan_point(p: CeParams) -> ScanRecord {
    let rho = build_ce_unchecked(&p);
    let positive = ce_positive(&p).expect("grid points are normalized");
    let spectral_positive = spectrum(&rho).map(|s| s.min() >= -STATE_TOL).unwrap_or(false);
    let r12 = moment(&bloch_from_state(&rho), &Subset::new([1, 2], 2).expect("two particles"))
        .expect("two particles");
    let (concurrence, eof, negativity) = if positive {
        let r = entanglement_report(&rho).expect("two-qubit state");
        (r.concurrence, r.eof, r.negativity)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    ScanRecord {
        params: p,
        positive,
        spectral_positive,
        concurrence,
        eof,
        negativity,
        r12,
    }
}

/// Sweeps the unit sphere on a `(θ, φ)` grid with spacing close to `grid_step`.
pub fn scan_ce(grid_step: f64) -> Result<Vec<ScanRecord>> {
    if !(grid_step > 0.0 && grid_step <= 0.2) {
        return Err(Error::InvalidGridStep(grid_step));
    }
    Ok(grid(grid_step)
        .into_par_iter()
        .map(|(theta, phi)| scan_point(CeParams::from_angles(theta, phi)))
        .collect())
}

/// First record (in grid order) whose entanglement of formation is within
/// 1e-12 of the scan maximum.
pub fn scan_maximum(records: &[ScanRecord]) -> Option<&ScanRecord> {
    let max = records
        .iter()
        .filter(|r| r.positive)
        .map(|r| r.eof)
        .fold(f64::NEG_INFINITY, f64::max);
    records.iter().find(|r| r.positive && r.eof >= max - 1e-12)
}

pub const CSV_HEADER: &str = "a,b,c,positive,concurrence,eof,negativity,R12";

/// Writes the scan as CSV. Floats use Rust's shortest round-trip formatting.
pub fn write_scan_csv<W: Write>(records: &[ScanRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.params.a, r.params.b, r.params.c, r.positive, r.concurrence, r.eof, r.negativity, r.r12
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{correlation_matrix, marginal_vector};
    use crate::entanglement::entanglement_of_formation;
    use crate::moments::{moment_set, moment_sets_equal};
    use crate::states::purity;

    fn s3() -> f64 {
        1.0 / 3f64.sqrt()
    }

    #[test]
    fn base_state_vectors() {
        let bt = bloch_from_state(&base_state());
        let r1 = marginal_vector(&bt, &Subset::new([1], 2).unwrap()).unwrap();
        assert_eq!(r1.values, vec![0.0, 0.0, 0.5]);
        let t = correlation_matrix(&bt).unwrap();
        assert_eq!(t.singular_values(), [1.0, 0.0, 0.0]);
        assert!((purity(&base_state()) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn positivity_region_examples() {
        assert!(ce_positive(&CeParams::new(0.0, 0.0, 1.0).unwrap()).unwrap());
        assert!(ce_positive(&CeParams::new(s3(), s3(), s3()).unwrap()).unwrap());
        assert!(!ce_positive(&CeParams::new(1.0, 0.0, 0.0).unwrap()).unwrap());
        assert!(ce_positive(&CeParams { a: 1.0, b: 1.0, c: 0.0 }).is_err());

        assert!(spectrum(&build_ce_unchecked(&CeParams::new(1.0, 0.0, 0.0).unwrap())).unwrap().min() < -0.1);
        assert!(spectrum(&build_ce(&CeParams::new(s3(), s3(), s3()).unwrap()).unwrap()).unwrap().min() > 0.0);
        assert!(matches!(
            build_ce(&CeParams::new(1.0, 0.0, 0.0).unwrap()),
            Err(Error::OutsidePositivityRegion { .. })
        ));
    }

    #[test]
    fn identity_parameters_reproduce_base() {
        let rho = build_ce(&CeParams::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((rho.matrix() - base_state().matrix()).norm() < 1e-15);
    }

    #[test]
    fn rotated_state_keeps_moments() {
        let p = CeParams::new(s3(), s3(), s3()).unwrap();
        let rho = build_ce(&p).unwrap();
        let base = moment_set(&bloch_from_state(&base_state()));
        let built = moment_set(&bloch_from_state(&rho));
        assert!(moment_sets_equal(&base, &built, 1e-12).unwrap());
        let eof = entanglement_of_formation(&rho).unwrap();
        assert!((eof - 0.22).abs() <= 0.005, "{eof}");
        assert_eq!(entanglement_of_formation(&base_state()).unwrap(), 0.0);
    }

    #[test]
    fn em1_pair() {
        let (a, b) = em1_states();
        let full = Subset::full(4).unwrap();
        let pair = Subset::new([1, 2], 4).unwrap();
        let (ba, bb) = (bloch_from_state(&a), bloch_from_state(&b));
        assert!((moment(&ba, &full).unwrap() - 9.0).abs() < 1e-10);
        assert!((moment(&bb, &full).unwrap() - 9.0).abs() < 1e-10);
        assert!((moment(&ba, &pair).unwrap() - 3.0).abs() < 1e-10);
        assert!(moment(&bb, &pair).unwrap().abs() < 1e-10);
    }

    #[test]
    fn em5_pair() {
        let (a, b) = em5_states();
        assert!((purity(&a) - 0.5).abs() < 1e-15);
        assert!((purity(&b) - 0.5).abs() < 1e-15);
        let one = Subset::new([1], 2).unwrap();
        let ra = spectrum(&crate::states::partial_trace(&a, &one).unwrap()).unwrap();
        let rb = spectrum(&crate::states::partial_trace(&b, &one).unwrap()).unwrap();
        assert!(ra.distance(&rb) > 0.1);
    }

    #[test]
    fn scan_grid_and_errors() {
        assert!(scan_ce(0.0).is_err());
        assert!(scan_ce(0.25).is_err());
        assert!(scan_ce(f64::NAN).is_err());
        let recs = scan_ce(0.2).unwrap();
        assert!(recs.iter().all(|r| (r.params.norm_sq() - 1.0).abs() < 1e-12));
        assert!(recs.iter().all(|r| (r.r12 - 1.0).abs() < 1e-12));
        let north = &recs[0];
        assert_eq!(north.params.c, 1.0);
        assert!(north.eof.abs() < 1e-12);
        assert!(recs.iter().filter(|r| !r.positive).all(|r| r.eof.is_nan()));
    }

    #[test]
    fn csv_layout() {
        let recs = vec![scan_point(CeParams::new(0.0, 0.0, 1.0).unwrap()), scan_point(CeParams::new(1.0, 0.0, 0.0).unwrap())];
        let mut buf = Vec::new();
        write_scan_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("0,0,1,true,"));
        assert!(lines[2].starts_with("1,0,0,false,NaN,NaN,NaN,"));
        let back: f64 = lines[1].split(',').nth(7).unwrap().parse().unwrap();
        assert_eq!(back, recs[0].r12);
    }
}
