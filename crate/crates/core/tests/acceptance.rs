//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bloch_moments::bloch::{bloch_from_state, correlation_matrix};
use bloch_moments::counterexamples::{
    base_state, build_ce, build_ce_unchecked, ce_positive, em1_states, em5_states, scan_ce, scan_maximum, CeParams,
};
use bloch_moments::entanglement::entanglement_of_formation;
use bloch_moments::luequiv::{
    check_blockwise_rotation, lu_verdict, mirsky_lower_bound, product_rotation_residual, su2_to_so3, Verdict,
    DEFAULT_RESTARTS,
};
use bloch_moments::moments::{marginal_purities, moment, moment_set, moment_sets_equal, purity_from_moments};
use bloch_moments::operators::pauli;
use bloch_moments::sampling::{estimate_moment, haar_su2, moment_from_design, EstimatorConfig};
use bloch_moments::states::{purity, random_density, spectrum, DensityMatrix};
use bloch_moments::{CMatrix, Subset};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_params(rng: &mut ChaCha8Rng) -> CeParams {
    loop {
        let p = CeParams::normalized(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            .expect("non-zero draw");
        if ce_positive(&p).unwrap() {
            return p;
        }
    }
}

fn bell() -> DensityMatrix {
    let h = Complex64::new(0.5f64.sqrt(), 0.0);
    let z = Complex64::new(0.0, 0.0);
    DensityMatrix::from_pure(vec![2, 2], &DVector::from_vec(vec![h, z, z, h])).unwrap()
}

fn moment_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let expected = moment_set(&bloch_from_state(&base_state()));
    let reference = [0.25, 0.25, 1.0];
    let base_ok = expected.values().iter().zip(reference).all(|(x, y)| (x - y).abs() < 1e-12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rho = build_ce(&random_params(&mut rng)).unwrap();
        let got = moment_set(&bloch_from_state(&rho));
        for (x, y) in got.values().iter().zip(reference) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(base_ok && worst < 1e-12, format!("max deviation {worst:.1e} over 100 draws"))
}

fn eof_reproduction() -> Outcome {
    let s = 1.0 / 3f64.sqrt();
    let eof = entanglement_of_formation(&build_ce(&CeParams::new(s, s, s).unwrap()).unwrap()).unwrap();
    let records = scan_ce(0.02).unwrap();
    let max = scan_maximum(&records).unwrap();
    let pass = (eof - 0.22).abs() <= 0.005 && max.eof <= eof + 1e-6;
    outcome(
        pass,
        format!("E_F = {eof:.6}, scan max {:.6} over {} points", max.eof, records.len()),
    )
}

fn non_equivalence_certificate() -> Outcome {
    let s = 1.0 / 3f64.sqrt();
    let tilde = build_ce(&CeParams::new(s, s, s).unwrap()).unwrap();
    let base = base_state();
    let tt = correlation_matrix(&bloch_from_state(&tilde)).unwrap();
    let tb = correlation_matrix(&bloch_from_state(&base)).unwrap();
    let sv_t = tt.singular_values();
    let sv_b = tb.singular_values();
    let sv_ok = sv_t.iter().all(|x| (x - s).abs() < 1e-10)
        && sv_b.iter().zip([1.0, 0.0, 0.0]).all(|(x, y)| (x - y).abs() < 1e-10);
    let bound = mirsky_lower_bound(&tb, &tt);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let residual = product_rotation_residual(&tb, &tt, DEFAULT_RESTARTS, &mut rng).residual;
    let verdict = lu_verdict(&base, &tilde).unwrap().verdict;
    outcome(
        sv_ok && bound >= 0.9 && residual >= 0.9 && verdict == Verdict::NotEquivalent,
        format!("sv {sv_t:.6?} vs {sv_b:.3?}, bound {bound:.4}, residual {residual:.4}, verdict {verdict}"),
    )
}

fn em1_collision() -> Outcome {
    let (a, b) = em1_states();
    let full = Subset::full(4).unwrap();
    let pair = Subset::new([1, 2], 4).unwrap();
    let (ba, bb) = (bloch_from_state(&a), bloch_from_state(&b));
    let (ga, gb) = (moment(&ba, &full).unwrap(), moment(&bb, &full).unwrap());
    let (ma, mb) = (moment(&ba, &pair).unwrap(), moment(&bb, &pair).unwrap());
    let pass = (ga - 9.0).abs() < 1e-10 && (gb - 9.0).abs() < 1e-10 && (ma - 3.0).abs() < 1e-10 && mb.abs() < 1e-10;
    outcome(pass, format!("global {ga:.12} / {gb:.12}, (1,2) marginal {ma:.12} / {mb:.12}"))
}

fn purity_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 3;
        let rho = random_density(&vec![2; n], &mut rng).unwrap();
        let ms = moment_set(&bloch_from_state(&rho));
        for (s, p) in marginal_purities(&rho).unwrap() {
            worst = worst.max((purity_from_moments(&ms, &s).unwrap() - p).abs());
        }
    }
    outcome(worst < 1e-10, format!("max deviation {worst:.1e} over 100 states"))
}

fn monte_carlo_convergence() -> Outcome {
    let rho = bell();
    let pair = Subset::full(2).unwrap();
    let mut within = 0;
    let mut max_stderr = 0.0f64;
    for seed in 0..100u64 {
        let cfg = EstimatorConfig::new(pair.clone(), 100_000).with_seed(seed);
        let e = estimate_moment(&rho, &cfg).unwrap();
        max_stderr = max_stderr.max(e.stderr);
        if (e.value - 3.0).abs() <= 3.0 * e.stderr {
            within += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let design = moment_from_design(&rho, &pair, 0, &mut rng).unwrap().value;
    let pass = within >= 99 && max_stderr < 0.05 && (design - 3.0).abs() < 1e-12;
    outcome(
        pass,
        format!("{within}/100 within 3 stderr, max stderr {max_stderr:.4}, design {design:.15}"),
    )
}

fn positivity_region() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut skipped, mut disagreements) = (0, 0, 0);
    for _ in 0..10_000 {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let p = CeParams::from_angles(z.acos(), phi);
        let min_eig = spectrum(&build_ce_unchecked(&p)).unwrap().min();
        if min_eig.abs() < 1e-9 {
            skipped += 1;
            continue;
        }
        checked += 1;
        if ce_positive(&p).unwrap() != (min_eig >= 0.0) {
            disagreements += 1;
        }
    }
    outcome(
        disagreements == 0,
        format!("{disagreements} disagreements on {checked} points ({skipped} in boundary band)"),
    )
}

fn homomorphism_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = pauli();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u = haar_su2(&mut rng);
        let v = haar_su2(&mut rng);
        let qu = su2_to_so3(&u).unwrap().to_matrix3().unwrap();
        let qv = su2_to_so3(&v).unwrap().to_matrix3().unwrap();
        let quv = su2_to_so3(&u.compose(&v)).unwrap().to_matrix3().unwrap();
        worst = worst.max((quv - qu * qv).amax());
        let qneg = su2_to_so3(&u.neg()).unwrap().to_matrix3().unwrap();
        worst = worst.max((qneg - qu).amax());
        for j in 0..3 {
            let direct = u.matrix() * &p[j] * u.matrix().adjoint();
            let rebuilt: CMatrix = (0..3)
                .map(|i| &p[i] * Complex64::new(qu[(i, j)], 0.0))
                .fold(CMatrix::zeros(2, 2), |acc, m| acc + m);
            worst = worst.max((direct - rebuilt).map(|z| z.norm()).max());
        }
    }
    outcome(worst < 1e-12, format!("max deviation {worst:.1e} over 100 pairs"))
}

fn lu_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut blockwise_failures = 0;
    let mut unequal_sets = 0;
    for i in 0..50 {
        let n = 2 + i % 2;
        let rho = random_density(&vec![2; n], &mut rng).unwrap();
        let locals: Vec<_> = (0..n).map(|_| haar_su2(&mut rng)).collect();
        let mats: Vec<CMatrix> = locals.iter().map(|u| u.matrix().clone()).collect();
        let turned = rho.conjugate_local(&mats).unwrap();
        let (ba, bb) = (bloch_from_state(&rho), bloch_from_state(&turned));
        let (ma, mb) = (moment_set(&ba), moment_set(&bb));
        if !moment_sets_equal(&ma, &mb, 1e-10).unwrap() {
            unequal_sets += 1;
        }
        for (x, y) in ma.values().iter().zip(mb.values()) {
            worst = worst.max((x - y).abs());
        }
        let rotations: Vec<_> = locals.iter().map(|u| su2_to_so3(u).unwrap()).collect();
        if !check_blockwise_rotation(&ba, &bb, &rotations).unwrap() {
            blockwise_failures += 1;
        }
    }
    outcome(
        worst < 1e-10 && unequal_sets == 0 && blockwise_failures == 0,
        format!("max moment deviation {worst:.1e}, {blockwise_failures} blockwise failures over 50 states"),
    )
}

fn em5_pair() -> Outcome {
    let (a, b) = em5_states();
    let (pa, pb) = (purity(&a), purity(&b));
    let ma = moment_set(&bloch_from_state(&a)).values();
    let mb = moment_set(&bloch_from_state(&b)).values();
    let close = |xs: &[f64], ys: &[f64]| xs.iter().zip(ys).all(|(x, y)| (x - y).abs() < 1e-12);
    let verdict = lu_verdict(&a, &b).unwrap().verdict;
    let pass = (pa - 0.5).abs() < 1e-15
        && (pb - 0.5).abs() < 1e-15
        && close(&ma, &[1.0, 0.0, 0.0])
        && close(&mb, &[1.0 / 9.0, 4.0 / 9.0, 4.0 / 9.0])
        && verdict == Verdict::NotEquivalent;
    outcome(pass, format!("purities {pa} / {pb}, moments {ma:.6?} vs {mb:.6?}, verdict {verdict}"))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("counterexample moment identity", moment_identity, Some(Duration::from_secs(1))),
        ("entanglement of formation", eof_reproduction, Some(Duration::from_secs(30))),
        ("non-equivalence certificate", non_equivalence_certificate, Some(Duration::from_secs(5))),
        ("four-qubit moment collision", em1_collision, None),
        ("purity from moments", purity_identity, None),
        ("Monte Carlo convergence", monte_carlo_convergence, Some(Duration::from_secs(60))),
        ("positivity region", positivity_region, None),
        ("SU(2) to SO(3) homomorphism", homomorphism_suite, None),
        ("local-unitary invariance", lu_invariance, None),
        ("equal-purity pair", em5_pair, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = match budget {
            Some(b) => format!("{:.2}s of {}s", elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        println!(
            "criterion {:>2} {}: {} ({}; {timing})",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
