//! Simulated randomized measurements on qubits.
//!
//! Each setting draws one measurement axis `u_n` per qubit in the target
//! subset, uniformly on the sphere, and measures `⊗_n (u_n · σ)`. For the
//! second moment `E_u[(u·r)²] = ‖r‖²/3` per qubit, so averaging the squared
//! correlation and multiplying by `3^|M|` recovers `‖r^(M)‖²`.
//!
//! Work is split into fixed batches of [`BATCH_SIZE`] settings. Batch `b`
//! draws from a ChaCha stream seeded with `seed` on stream `b`, and batch
//! statistics are merged in batch order, so results do not depend on how
//! rayon schedules the batches.

use nalgebra::{Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::luequiv::Unitary;
use crate::operators::{kron_all, pauli};
use crate::states::{partial_trace, DensityMatrix};
use crate::subset::Subset;
use crate::CMatrix;

pub const BATCH_SIZE: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub subset: Subset,
    /// Number of random settings, at least 1.
    pub settings: usize,
    /// Shots per setting; 0 uses exact expectation values.
    pub shots: usize,
    /// Moment order, even and positive.
    pub order: u32,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(subset: Subset, settings: usize) -> Self {
        EstimatorConfig {
            subset,
            settings,
            shots: 0,
            order: 2,
            seed: 0,
        }
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings == 0 {
            return Err(Error::InvalidConfig("settings must be at least 1".into()));
        }
        if self.order == 0 || self.order % 2 == 1 {
            return Err(Error::InvalidConfig(format!(
                "order {} must be even and positive",
                self.order
            )));
        }
        if self.order == 2 && self.shots == 1 {
            return Err(Error::InvalidConfig(
                "one shot per setting admits no unbiased second-moment estimate".into(),
            ));
        }
        if self.order > 2 && self.shots > 0 {
            return Err(Error::InvalidConfig(
                "orders above 2 are only supported with exact expectations (shots = 0)".into(),
            ));
        }
        Ok(())
    }
}

/// One measurement axis per qubit of the target subset.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    axes: Vec<Vector3<f64>>,
}

impl MeasurementSetting {
    pub fn new(axes: Vec<Vector3<f64>>) -> Result<Self> {
        if let Some(a) = axes.iter().find(|a| (a.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "axis {:?} is not a unit vector",
                a.as_slice()
            )));
        }
        Ok(MeasurementSetting { axes })
    }

    pub fn axes(&self) -> &[Vector3<f64>] {
        &self.axes
    }

    /// `⊗_n (u_n · σ)`.
    pub fn observable(&self) -> CMatrix {
        let p = pauli();
        let locals: Vec<CMatrix> = self.axes.iter().map(|u| axis_observable(u, &p)).collect();
        kron_all(&locals)
    }
}

fn axis_observable(u: &Vector3<f64>, p: &[CMatrix; 3]) -> CMatrix {
    &p[0] * Complex64::new(u.x, 0.0) + &p[1] * Complex64::new(u.y, 0.0) + &p[2] * Complex64::new(u.z, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub settings_used: usize,
    pub shots_used: usize,
}

/// Uniform direction on the unit sphere.
pub fn haar_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-300 {
            return v / n;
        }
    }
}

/// Haar-random SU(2) element from a uniform unit quaternion.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Unitary {
    let q = loop {
        let v = Vector4::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-300 {
            break v / n;
        }
    };
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(q[0], q[1]),
            Complex64::new(q[2], q[3]),
            Complex64::new(-q[2], q[3]),
            Complex64::new(q[0], -q[1]),
        ],
    );
    Unitary::new_unchecked(m)
}

fn check_qubit_dims(dims: &[usize], subset: &Subset) -> Result<()> {
    if dims.iter().any(|&d| d != 2) {
        return Err(Error::NotQubits(dims.to_vec()));
    }
    if subset.max_label() > dims.len() {
        return Err(Error::InvalidSubset(format!(
            "{subset} on a {}-particle state",
            dims.len()
        )));
    }
    Ok(())
}

/// `tr(ρ_M ⊗_n (u_n · σ))` for a reduced state on the setting's qubits.
pub fn correlation(reduced: &DensityMatrix, setting: &MeasurementSetting) -> f64 {
    trace_product(reduced.matrix(), &setting.observable())
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(j, k)] * b[(k, j)]).re;
        }
    }
    acc
}

/// Simulates `shots` joint measurements and returns the product of the
/// per-qubit ±1 outcomes for each shot.
pub fn sample_outcome_products<R: Rng + ?Sized>(
    reduced: &DensityMatrix,
    setting: &MeasurementSetting,
    shots: usize,
    rng: &mut R,
) -> Vec<i8> {
    let p = pauli();
    let id = CMatrix::identity(2, 2);
    let half = Complex64::new(0.5, 0.0);
    // projectors[n][0] for outcome +1, [1] for -1
    let projectors: Vec<[CMatrix; 2]> = setting
        .axes
        .iter()
        .map(|u| {
            let o = axis_observable(u, &p);
            [(&id + &o) * half, (&id - &o) * half]
        })
        .collect();
    let k = projectors.len();
    let mut probs: Vec<f64> = (0..1usize << k)
        .map(|pattern| {
            let factors = (0..k).map(|n| &projectors[n][(pattern >> (k - 1 - n)) & 1]);
            trace_product(reduced.matrix(), &kron_all(factors)).max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    let parity: Vec<i8> = (0..1usize << k)
        .map(|pattern| if pattern.count_ones() % 2 == 0 { 1 } else { -1 })
        .collect();

    (0..shots)
        .map(|_| {
            let x: f64 = rng.random();
            let mut acc = 0.0;
            for (pattern, &pr) in probs.iter().enumerate() {
                acc += pr;
                if x < acc {
                    return parity[pattern];
                }
            }
            parity[probs.len() - 1]
        })
        .collect()
}

/// Unbiased estimate of `E²` from ±1 samples with mean `E`:
/// `(2 / (K(K-1))) Σ_{i<j} x_i x_j`.
pub fn pair_estimator(products: &[i8]) -> f64 {
    let k = products.len() as f64;
    let sum: f64 = products.iter().map(|&x| x as f64).sum();
    (sum * sum - k) / (k * (k - 1.0))
}

/// Running count, mean and centred sum of squares.
#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Stats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Stats) -> Stats {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Stats {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}

fn normalization(order: u32, k: usize) -> f64 {
    if order == 2 {
        3f64.powi(k as i32)
    } else {
        1.0
    }
}

/// Monte Carlo estimate of the order-`t` moment over Haar-random settings.
///
/// For `t = 2` the estimate is normalized by `3^|M|` so its expectation is
/// the exact marginal moment; higher even orders are reported raw.
pub fn estimate_moment(rho: &DensityMatrix, cfg: &EstimatorConfig) -> Result<MomentEstimate> {
    cfg.validate()?;
    check_qubit_dims(rho.dims(), &cfg.subset)?;
    let reduced = partial_trace(rho, &cfg.subset)?;
    let k = cfg.subset.len();
    let scale = normalization(cfg.order, k);
    let n_batches = cfg.settings.div_ceil(BATCH_SIZE);

    let batches: Vec<Stats> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let count = BATCH_SIZE.min(cfg.settings - b * BATCH_SIZE);
            let mut stats = Stats::default();
            for _ in 0..count {
                let axes = (0..k).map(|_| haar_direction(&mut rng)).collect();
                let setting = MeasurementSetting { axes };
                let est = if cfg.shots == 0 {
                    correlation(&reduced, &setting).powi(cfg.order as i32)
                } else {
                    pair_estimator(&sample_outcome_products(&reduced, &setting, cfg.shots, &mut rng))
                };
                stats.push(scale * est);
            }
            stats
        })
        .collect();
    let total = batches.into_iter().fold(Stats::default(), Stats::merge);

    Ok(MomentEstimate {
        value: total.mean,
        stderr: total.stderr(),
        settings_used: cfg.settings,
        shots_used: cfg.shots,
    })
}

/// The `3^|M|` products of coordinate axes, row-major over the subset with
/// axis order x, y, z.
pub fn design_settings(dims: &[usize], subset: &Subset) -> Result<Vec<MeasurementSetting>> {
    check_qubit_dims(dims, subset)?;
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let k = subset.len();
    Ok((0..3usize.pow(k as u32))
        .map(|mut code| {
            let mut picked = vec![Vector3::zeros(); k];
            for slot in picked.iter_mut().rev() {
                *slot = axes[code % 3];
                code /= 3;
            }
            MeasurementSetting { axes: picked }
        })
        .collect())
}

/// Second moment from the axis design. With `shots = 0` the result is exact;
/// otherwise each setting uses the pair estimator and `stderr` is the
/// plug-in standard error of that estimator.
pub fn moment_from_design<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    subset: &Subset,
    shots: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if shots == 1 {
        return Err(Error::InvalidConfig(
            "one shot per setting admits no unbiased second-moment estimate".into(),
        ));
    }
    let settings = design_settings(rho.dims(), subset)?;
    let reduced = partial_trace(rho, subset)?;
    let n = settings.len() as f64;
    let scale = normalization(2, subset.len());

    let mut sum = 0.0;
    let mut var_sum = 0.0;
    for s in &settings {
        if shots == 0 {
            sum += correlation(&reduced, s).powi(2);
        } else {
            let products = sample_outcome_products(&reduced, s, shots, rng);
            sum += pair_estimator(&products);
            let mean = (products.iter().map(|&x| x as f64).sum::<f64>() / shots as f64).clamp(-1.0, 1.0);
            var_sum += pair_estimator_variance(mean, shots);
        }
    }
    Ok(MomentEstimate {
        value: scale * sum / n,
        stderr: scale * var_sum.sqrt() / n,
        settings_used: settings.len(),
        shots_used: shots,
    })
}

/// Variance of the pair U-statistic over `k` ±1 samples with mean `e`.
fn pair_estimator_variance(e: f64, k: usize) -> f64 {
    let k = k as f64;
    let e2 = e * e;
    let zeta1 = e2 * (1.0 - e2);
    let zeta2 = 1.0 - e2 * e2;
    (4.0 * (k - 2.0) * zeta1 + 2.0 * zeta2) / (k * (k - 1.0))
}
