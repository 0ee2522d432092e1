//! Acceptance gate: nine end-to-end checks covering the closed forms, the
//! generator, the phase-transition predictions, convergence rates, the
//! estimator comparison, detection, shrinkage optimality, and determinism.
//! Each check prints exactly one verdict line (visible under
//! `--nocapture`) and then asserts. Statistical tolerances are pinned from
//! pilot runs at the same seeds; every run of this suite is deterministic.

use std::sync::LazyLock;
use std::time::Instant;

use mpdn::denoise::{rie_from_svd, tsvd_apply, SigmaMode, StepwiseOptions, TsvdMode};
use mpdn::experiment::metrics::{frobenius_loss, rial};
use mpdn::experiment::report::PhaseReport;
use mpdn::experiment::stats::median;
use mpdn::experiment::{
    run_estimator_comparison, run_phase_transition, run_rate_experiment, ComparisonCase,
    ComparisonConfig, EstimatorSpec, FamilyChoice, Jobs, PhaseConfig, RateConfig,
};
use mpdn::linalg::{full_svd, two_means_1d};
use mpdn::spectral::{
    a1, a2, edges, m1c, m2c, mp_density_1, p_inverse, p_of_d, t_real, AspectRatio, HalfPlanePoint,
};
use mpdn::synth::{
    assemble, stream_rng, stream_seed, EntryLaw, NoiseSpec, SignalSpec, VectorFamily,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn verdict(index: u32, name: &str, pass: bool, details: &str) {
    let flag = if pass { "PASS" } else { "FAIL" };
    println!("[acceptance {index:02}] {name}: {flag} ({details})");
    assert!(pass, "[acceptance {index:02}] {name}: FAIL ({details})");
}

/// Shared 50-trial sweep at 400 x 800 with one supercritical and one
/// subcritical point; checks 03 and 04 read different columns of it.
static PHASE_400: LazyLock<PhaseReport> = LazyLock::new(|| {
    let config = PhaseConfig {
        m: 400,
        n: 800,
        points: vec![vec![3.0], vec![0.5]],
        family: FamilyChoice::Dense,
        entry_law: EntryLaw::Gaussian,
        noise: NoiseSpec::default(),
        trials: 50,
        seed: 4242,
        record_eta: false,
    };
    run_phase_transition(&config, Jobs::Parallel).expect("phase sweep runs")
});

#[test]
fn acceptance_01_spectral_closed_forms() {
    let started = Instant::now();
    let mut max_residual = 0.0f64;
    let mut max_root_err = 0.0f64;

    for &c_val in &[0.5, 1.0, 2.0, 4.0] {
        let c = AspectRatio::new(c_val).unwrap();
        let ci = c.inv();
        let e = edges(c);

        // Both transforms satisfy their self-consistent equations and the
        // exact linear relation tying them together, across the upper half
        // plane including points over the bulk.
        for &re in &[-2.0, 0.3, 1.0, 0.5 * e.upper, e.upper, e.upper + 2.0] {
            for &im in &[1e-3, 0.1, 1.0] {
                let z = HalfPlanePoint::new(re, im).unwrap();
                let zc = z.value();
                let m1 = m1c(z, c);
                let m2 = m2c(z, c);
                let r1 = (m1 + 1.0 / (zc - (1.0 - ci) + zc * ci * m1)).norm();
                let r2 = (m2 + 1.0 / (zc + (1.0 - ci) + zc * m2)).norm();
                let rel = (m1 - (c_val - 1.0) / zc - c_val * m2).norm();
                max_residual = max_residual.max(r1).max(r2).max(rel);
            }
        }

        // The spike location map is the inverse of the real statistic:
        // bisection on the statistic recovers the closed-form location.
        for &mult in &[1.05, 1.5, 3.0] {
            let d = mult * c.critical_d();
            let p = p_of_d(d, c).unwrap();
            let target = 1.0 / (d * d);
            let mut lo = e.upper * (1.0 + 1e-12);
            let mut hi = e.upper + 1.0;
            while t_real(hi, c).unwrap() > target {
                hi = e.upper + 2.0 * (hi - e.upper);
            }
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if t_real(mid, c).unwrap() > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            max_root_err = max_root_err.max((root - p).abs() / p.max(1.0));
            // The map round-trips through its inverse and sends the
            // critical strength to the bulk edge.
            assert!((p_inverse(p, c).unwrap() - d).abs() < 1e-9 * d);
        }
        let p_crit = p_of_d(c.critical_d(), c).unwrap();
        assert!((p_crit - e.upper).abs() < 1e-12 * e.upper);

        // The real statistic starts at sqrt(c) at the edge; the overlap
        // limits vanish at the transition and saturate at one.
        assert!((t_real(e.upper * (1.0 + 1e-9), c).unwrap() - c_val.sqrt()).abs() < 1e-3);
        assert!(a1(c.critical_d(), c).unwrap().abs() < 1e-10);
        assert!(a2(c.critical_d(), c).unwrap().abs() < 1e-10);
        assert!((a1(1e3, c).unwrap() - 1.0).abs() < 1e-5);
        assert!((a2(1e3, c).unwrap() - 1.0).abs() < 1e-5);
    }

    let elapsed = started.elapsed().as_secs_f64();
    let pass = max_residual < 1e-12 && max_root_err < 1e-8 && elapsed < 5.0;
    verdict(
        1,
        "spectral closed forms",
        pass,
        &format!(
            "max equation residual {max_residual:.2e}, max bisection gap {max_root_err:.2e}, \
             {elapsed:.2}s"
        ),
    );
}

#[test]
fn acceptance_02_pure_noise_spectrum() {
    let started = Instant::now();
    let (m, n) = (500usize, 1000usize);
    let c = AspectRatio::from_dims(m, n).unwrap();
    let e = edges(c);
    let spec = SignalSpec {
        m,
        n,
        d_values: vec![1e-12],
        vector_family: VectorFamily::DenseOrthonormal,
        entry_law: EntryLaw::Gaussian,
        seed: stream_seed(888, 0),
    };
    let inst = assemble(&spec, &NoiseSpec::default()).unwrap();
    let svd = full_svd(&inst.observation).unwrap();
    let mus: Vec<f64> = svd.singular_values.iter().map(|&s| s * s).collect();
    let edge_gap = mus[0] - e.upper;

    let bins = 20usize;
    let width = (e.upper - e.lower) / bins as f64;
    let mut emp = vec![0.0f64; bins];
    for &mu in &mus {
        let idx = (((mu - e.lower) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        emp[idx] += 1.0 / mus.len() as f64;
    }
    let quad = |a: f64, b: f64| -> f64 {
        let span = e.upper - e.lower;
        let phi = |x: f64| ((x - e.lower) / span).sqrt().asin();
        let (pa, pb) = (phi(a), phi(b));
        let steps = 2000usize;
        let h = (pb - pa) / steps as f64;
        let g = |p: f64| {
            let (sin, cos) = p.sin_cos();
            mp_density_1(e.lower + span * sin * sin, c) * span * 2.0 * sin * cos
        };
        let mut acc = g(pa) + g(pb);
        for i in 1..steps {
            acc += g(pa + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let mut tv = 0.0;
    for (b, &mass) in emp.iter().enumerate() {
        let lo = e.lower + b as f64 * width;
        tv += 0.5 * (mass - quad(lo, lo + width)).abs();
    }

    let elapsed = started.elapsed().as_secs_f64();
    let pass = edge_gap.abs() < 0.1 && tv < 0.1 && elapsed < 30.0;
    verdict(
        2,
        "pure-noise spectrum",
        pass,
        &format!("top value sits {edge_gap:+.4} from the edge, histogram distance {tv:.4}, {elapsed:.1}s"),
    );
}

#[test]
fn acceptance_03_outlier_location() {
    let report = &*PHASE_400;
    let above = &report.points[0];
    let below = &report.points[1];
    let err_above = (above.summary.median_mu1 - above.theory.mu[0]).abs();
    let err_below = (below.summary.median_mu1 - below.theory.mu[0]).abs();
    let pass = err_above <= 0.2 && err_below <= 0.15;
    verdict(
        3,
        "top eigenvalue location",
        pass,
        &format!(
            "supercritical gap {err_above:.4} (tol 0.2), subcritical gap {err_below:.4} (tol 0.15)"
        ),
    );
}

#[test]
fn acceptance_04_overlap_convergence_and_delocalization() {
    let report = &*PHASE_400;
    let above = &report.points[0];
    let below = &report.points[1];
    let u_err = (above.summary.median_u_overlap1 - above.theory.u_overlap[0]).abs();
    let v_err = (above.summary.median_v_overlap1 - above.theory.v_overlap[0]).abs();
    let n = report.config.n as f64;
    let deloc = below
        .trials
        .iter()
        .filter(|t| t.v_after * n <= 50.0)
        .count() as f64
        / below.trials.len() as f64;
    let pass = u_err <= 0.05 && v_err <= 0.05 && deloc >= 0.9;
    verdict(
        4,
        "overlap limits",
        pass,
        &format!(
            "left gap {u_err:.4}, right gap {v_err:.4} (tol 0.05), \
             delocalized fraction {deloc:.2} (min 0.9)"
        ),
    );
}

#[test]
fn acceptance_05_convergence_rates() {
    let started = Instant::now();
    let config = RateConfig {
        c: 2.0,
        ns: vec![200, 400, 800, 1600],
        d_points: vec![3.0, 0.5],
        family: FamilyChoice::Dense,
        entry_law: EntryLaw::Gaussian,
        noise: NoiseSpec::default(),
        trials: 30,
        seed: 31415,
    };
    let report = run_rate_experiment(&config, Jobs::Parallel).unwrap();
    let super_slope = report.ladders[0].fit.slope;
    let sub_slope = report.ladders[1].fit.slope;
    assert!(report.ladders[0].supercritical);
    assert!(!report.ladders[1].supercritical);
    let elapsed = started.elapsed().as_secs_f64();
    // An outlier fluctuates on the n^(-1/2) scale; the bulk edge is faster
    // in theory but, measured against the n-dependent finite limit, the
    // observed band is wide.
    let pass = (-0.65..=-0.35).contains(&super_slope)
        && (-0.85..=-0.28).contains(&sub_slope)
        && elapsed < 600.0;
    verdict(
        5,
        "convergence rates",
        pass,
        &format!(
            "supercritical slope {super_slope:.3} (band [-0.65, -0.35]), \
             subcritical slope {sub_slope:.3} (band [-0.85, -0.28]), {elapsed:.0}s"
        ),
    );
}

#[test]
fn acceptance_06_estimator_comparison() {
    let config = ComparisonConfig {
        cases: vec![ComparisonCase {
            label: "two spikes, 5% sparse".to_string(),
            m: 300,
            n: 600,
            d_values: vec![7.0, 4.0],
            family: FamilyChoice::SparseRatio { ratio: 0.05 },
            entry_law: EntryLaw::Gaussian,
        }],
        estimators: vec![
            EstimatorSpec::Stepwise(StepwiseOptions {
                sigma: SigmaMode::Fixed(1.0),
                delta1: 0.01,
                tau_sep: 1e6,
                ..StepwiseOptions::default()
            }),
            EstimatorSpec::TsvdFull,
            EstimatorSpec::TsvdRank { rank: 2 },
        ],
        baseline_index: 1,
        noise: NoiseSpec::default(),
        trials: 20,
        seed: 2024,
    };
    let report = run_estimator_comparison(&config, Jobs::Parallel).unwrap();
    let case = &report.cases[0];
    let stepwise = &case.estimators[0];
    let full = &case.estimators[1];
    let rank2 = &case.estimators[2];

    let ratio = stepwise.median_loss / full.median_loss;
    let ratio_ok = ratio <= 0.2;
    let rank_ok = stepwise.median_loss <= rank2.median_loss;
    let recovery = stepwise.recovery.as_ref().unwrap().median;
    let recovery_ok = recovery >= 0.9;
    let pass = ratio_ok && rank_ok && recovery_ok;
    verdict(
        6,
        "estimator comparison",
        pass,
        &format!(
            "loss ratio vs full spectrum {ratio:.4} <= 0.2: {ratio_ok}; \
             stepwise {:.4} <= rank-2 {:.4}: {rank_ok}; \
             support recovery {recovery:.4} >= 0.9: {recovery_ok}",
            stepwise.median_loss, rank2.median_loss
        ),
    );
}

#[test]
fn acceptance_07_outlier_counting() {
    let config = PhaseConfig {
        m: 100,
        n: 200,
        points: vec![vec![4.0, 3.0, 2.5, 1.5, 0.1]],
        family: FamilyChoice::Dense,
        entry_law: EntryLaw::Gaussian,
        noise: NoiseSpec::default(),
        trials: 50,
        seed: 11,
        record_eta: false,
    };
    let report = run_phase_transition(&config, Jobs::Parallel).unwrap();
    let point = &report.points[0];
    assert_eq!(point.theory.k_plus, 4, "four of the five values are supercritical");
    let fraction = point.summary.q_expected_fraction;
    let pass = fraction >= 0.9;
    verdict(
        7,
        "outlier counting",
        pass,
        &format!("expected count hit in {fraction:.3} of trials (min 0.9)"),
    );
}

#[test]
fn acceptance_08_shrinkage_against_oracle() {
    // Exact limit of the oracle shrinkage target for strength 4 at this
    // aspect ratio: d * a1(d) * a2(d) = 4 * (255.5/264) * (255.5/272).
    let eta_limit = 261121.0 / 71808.0;
    let mut gaps = Vec::new();
    let mut rie_losses = Vec::new();
    let mut tsvd_losses = Vec::new();
    for t in 0..100u64 {
        let spec = SignalSpec {
            m: 300,
            n: 600,
            d_values: vec![4.0],
            vector_family: VectorFamily::DenseOrthonormal,
            entry_law: EntryLaw::Gaussian,
            seed: stream_seed(909, t),
        };
        let inst = assemble(&spec, &NoiseSpec::default()).unwrap();
        let svd = full_svd(&inst.observation).unwrap();
        let rie = rie_from_svd(&svd, 1.0).unwrap();
        gaps.push((rie.eta_hat[0] - eta_limit).abs());
        rie_losses.push(frobenius_loss(&inst.signal, &rie.s_hat).unwrap());
        let truncated = tsvd_apply(&svd, TsvdMode::Rank(1)).unwrap();
        tsvd_losses.push(frobenius_loss(&inst.signal, &truncated).unwrap());
    }
    let gap_median = median(&gaps).unwrap();
    let improvement = rial(&rie_losses, &tsvd_losses).unwrap();
    let pass = gap_median <= 0.15 && improvement > 0.0;
    verdict(
        8,
        "shrinkage limit and improvement",
        pass,
        &format!(
            "median gap to the exact limit {gap_median:.4} (tol 0.15), \
             relative improvement over rank-1 truncation {improvement:.4} (> 0)"
        ),
    );
}

#[test]
fn acceptance_09_determinism_and_kernel_oracles() {
    // Execution strategy must not affect a single bit of the report.
    let config = PhaseConfig {
        m: 40,
        n: 80,
        points: vec![vec![2.5]],
        family: FamilyChoice::Dense,
        entry_law: EntryLaw::Gaussian,
        noise: NoiseSpec::default(),
        trials: 6,
        seed: 5,
        record_eta: true,
    };
    let serial = run_phase_transition(&config, Jobs::Serial).unwrap();
    let parallel = run_phase_transition(&config, Jobs::Parallel).unwrap();
    let deterministic = serial.to_json().unwrap() == parallel.to_json().unwrap();

    // The clustering step attains the exact two-cluster optimum.
    let mut rng = stream_rng(424242, 0);
    let mut cluster_gap = 0.0f64;
    for case in 0..20 {
        let n = 2 + case % 9;
        let values: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let split = two_means_1d(&values).unwrap();
        let mut best = f64::INFINITY;
        for mask in 1..((1u32 << n) - 1) {
            let mut acc = [(0.0f64, 0.0f64, 0.0f64); 2];
            for (i, &v) in values.iter().enumerate() {
                let side = (mask >> i & 1) as usize;
                acc[side].0 += v;
                acc[side].1 += v * v;
                acc[side].2 += 1.0;
            }
            let sse: f64 = acc.iter().map(|&(s, q, k)| (q - s * s / k).max(0.0)).sum();
            best = best.min(sse);
        }
        cluster_gap = cluster_gap.max((split.sse - best).abs());
    }

    // Factorizations reconstruct their input with orthonormal factors.
    let mut svd_err = 0.0f64;
    for case in 0..12 {
        let m = 3 + (case * 7) % 18;
        let n = 2 + (case * 5) % 13;
        let a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let f = full_svd(&a).unwrap();
        let recon = (f.reconstruct() - &a).norm() / (1.0 + a.norm());
        let eye = DMatrix::<f64>::identity(f.k(), f.k());
        let ortho_u = (f.left.transpose() * &f.left - &eye).norm();
        let ortho_v = (f.right.transpose() * &f.right - &eye).norm();
        svd_err = svd_err.max(recon).max(ortho_u).max(ortho_v);
    }

    let pass = deterministic && cluster_gap <= 1e-9 && svd_err <= 1e-10;
    verdict(
        9,
        "determinism and kernel oracles",
        pass,
        &format!(
            "serial and threaded reports identical: {deterministic}; \
             clustering gap to brute force {cluster_gap:.2e}; \
             worst factorization error {svd_err:.2e}"
        ),
    );
}
