//! Monte Carlo experiment runners: eigenvalue/eigenvector phase
//! transition sweeps, convergence-rate ladders, and estimator comparisons.
//!
//! Every runner derives one RNG stream per (point, trial) pair from the
//! config seed, so trial results are independent of execution order and a
//! report is fully regenerable from its config.

pub mod metrics;
pub mod report;
pub mod stats;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::denoise::{
    detect_q, resolve_sigma_mode, rie_from_svd, stepwise_svd, tsvd_apply, SigmaMode,
    StepwiseOptions, TsvdMode,
};
use crate::error::{Error, Result};
use crate::linalg::{full_svd, SvdFactorization};
use crate::spectral::{a1, a2, edges, p_of_d, AspectRatio};
use crate::synth::{assemble, stream_seed, EntryLaw, NoiseSpec, SignalSpec, VectorFamily};
use report::{ComparisonReport, PhaseReport, RateReport};
use stats::{fit_rate, mean_std, median, RateFit};

/// Trial execution strategy. `Parallel` runs trials on the rayon pool and
/// degrades to serial execution when the `parallel` feature is disabled;
/// per-trial seeding makes both produce identical records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Jobs {
    Serial,
    #[default]
    Parallel,
}

/// Runs `trials` independent work items, preserving index order in the
/// output.
pub fn run_trials<T, F>(trials: usize, jobs: Jobs, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match jobs {
        Jobs::Serial => (0..trials).map(run).collect(),
        Jobs::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..trials).into_par_iter().map(run).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..trials).map(run).collect()
            }
        }
    }
}

/// Singular-vector family for experiment configs; sparse counts may be
/// given directly or as a ratio of nonzero entries per vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyChoice {
    #[default]
    Dense,
    SparseRatio {
        ratio: f64,
    },
    SparseCounts {
        k_left: usize,
        k_right: usize,
    },
}

impl FamilyChoice {
    pub fn resolve(&self, m: usize, n: usize) -> Result<VectorFamily> {
        match *self {
            FamilyChoice::Dense => Ok(VectorFamily::DenseOrthonormal),
            FamilyChoice::SparseRatio { ratio } => VectorFamily::sparse_from_ratio(ratio, m, n),
            FamilyChoice::SparseCounts { k_left, k_right } => {
                Ok(VectorFamily::Sparse { k_left, k_right })
            }
        }
    }

    /// Nonzero-entry ratio on the left side; 1 for dense vectors.
    pub fn sparsity(&self, m: usize, n: usize) -> Result<f64> {
        match self.resolve(m, n)? {
            VectorFamily::DenseOrthonormal => Ok(1.0),
            VectorFamily::Sparse { k_left, .. } => Ok(k_left as f64 / m as f64),
        }
    }
}

/// Config for a sweep over signal strengths at fixed dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub m: usize,
    pub n: usize,
    /// One sweep point per entry; each point is a full strictly descending
    /// signal-value vector, so multi-spike spectra are single points.
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub family: FamilyChoice,
    #[serde(default)]
    pub entry_law: EntryLaw,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
    /// Also record the rotation invariant estimate of the leading signal
    /// value on every trial.
    #[serde(default)]
    pub record_eta: bool,
}

/// Deterministic limits a phase point is compared against, in observation
/// units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTheory {
    /// Number of supercritical signal values.
    pub k_plus: usize,
    /// Limiting eigenvalue per signal value: the outlier location above
    /// the transition, the bulk edge below it.
    pub mu: Vec<f64>,
    /// Limiting squared overlaps per side; zero below the transition.
    pub u_overlap: Vec<f64>,
    pub v_overlap: Vec<f64>,
    /// Limiting shrinkage target for the leading component.
    pub eta1: f64,
}

/// Per-trial record of a phase point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrial {
    pub trial: usize,
    /// Leading squared singular values of the observation.
    pub mu_head: Vec<f64>,
    /// First non-outlier index reported by the detection gate.
    pub q: usize,
    /// `<u_i, u~_i>^2` per component.
    pub u_overlap: Vec<f64>,
    pub v_overlap: Vec<f64>,
    /// `<v_1, v~_{k_plus + 1}>^2`: alignment of the leading true right
    /// vector with the first predicted non-outlier direction.
    pub v_after: f64,
    pub eta1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub median_mu1: f64,
    pub median_u_overlap1: f64,
    pub median_v_overlap1: f64,
    /// Median of `N * v_after`; bounded for delocalized directions.
    pub median_v_after_scaled: f64,
    /// Fraction of trials whose detected `q` equals `k_plus + 1`.
    pub q_expected_fraction: f64,
    pub median_eta1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub d_values: Vec<f64>,
    pub theory: PhaseTheory,
    pub trials: Vec<PhaseTrial>,
    pub summary: PhaseSummary,
}

fn phase_theory(d_values: &[f64], c: AspectRatio, sigma: f64) -> Result<PhaseTheory> {
    let edge = edges(c).upper;
    let mut mu = Vec::with_capacity(d_values.len());
    let mut u_overlap = Vec::with_capacity(d_values.len());
    let mut v_overlap = Vec::with_capacity(d_values.len());
    let mut k_plus = 0;
    for &d in d_values {
        let d_norm = d / sigma;
        if d_norm > c.critical_d() {
            k_plus += 1;
            mu.push(sigma * sigma * p_of_d(d_norm, c)?);
            u_overlap.push(a1(d_norm, c)?);
            v_overlap.push(a2(d_norm, c)?);
        } else {
            mu.push(sigma * sigma * edge);
            u_overlap.push(0.0);
            v_overlap.push(0.0);
        }
    }
    let eta1 = sigma * (d_values[0] / sigma) * u_overlap[0] * v_overlap[0];
    Ok(PhaseTheory {
        k_plus,
        mu,
        u_overlap,
        v_overlap,
        eta1,
    })
}

/// Sweeps signal strengths and records observed eigenvalue locations and
/// singular-vector overlaps against their deterministic limits.
pub fn run_phase_transition(config: &PhaseConfig, jobs: Jobs) -> Result<PhaseReport> {
    if config.points.is_empty() {
        return Err(Error::domain("phase sweep needs at least one point".to_string()));
    }
    if config.trials == 0 {
        return Err(Error::domain("trial count must be positive".to_string()));
    }
    let c = AspectRatio::from_dims(config.m, config.n)?;
    let sigma = config.noise.sigma;
    let family = config.family.resolve(config.m, config.n)?;
    let mut points = Vec::with_capacity(config.points.len());
    for (pi, d_values) in config.points.iter().enumerate() {
        let theory = phase_theory(d_values, c, sigma)?;
        let point_seed = stream_seed(config.seed, pi as u64);
        let r = d_values.len();
        let outcomes = run_trials(config.trials, jobs, |t| -> Result<PhaseTrial> {
            let spec = SignalSpec {
                m: config.m,
                n: config.n,
                d_values: d_values.clone(),
                vector_family: family,
                entry_law: config.entry_law,
                seed: stream_seed(point_seed, t as u64),
            };
            let inst = assemble(&spec, &config.noise)?;
            let svd = full_svd(&inst.observation)?;
            let diag = detect_q(&svd, sigma)?;
            let k = svd.k();
            let mu_head: Vec<f64> = diag.mu.iter().take((r + 3).min(k)).copied().collect();
            let mut u_overlap = Vec::with_capacity(r);
            let mut v_overlap = Vec::with_capacity(r);
            for i in 0..r.min(k) {
                let du = svd.left.column(i).dot(&inst.u.column(i));
                let dv = svd.right.column(i).dot(&inst.v.column(i));
                u_overlap.push(du * du);
                v_overlap.push(dv * dv);
            }
            let v_after = if theory.k_plus < k {
                let dv = svd.right.column(theory.k_plus).dot(&inst.v.column(0));
                dv * dv
            } else {
                0.0
            };
            let eta1 = if config.record_eta {
                Some(rie_from_svd(&svd, sigma)?.eta_hat[0])
            } else {
                None
            };
            Ok(PhaseTrial {
                trial: t,
                mu_head,
                q: diag.q,
                u_overlap,
                v_overlap,
                v_after,
                eta1,
            })
        });
        let trials = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let mu1: Vec<f64> = trials.iter().map(|t| t.mu_head[0]).collect();
        let u1: Vec<f64> = trials.iter().map(|t| t.u_overlap[0]).collect();
        let v1: Vec<f64> = trials.iter().map(|t| t.v_overlap[0]).collect();
        let v_after: Vec<f64> = trials
            .iter()
            .map(|t| t.v_after * config.n as f64)
            .collect();
        let q_hits = trials.iter().filter(|t| t.q == theory.k_plus + 1).count();
        let eta1: Vec<f64> = trials.iter().filter_map(|t| t.eta1).collect();
        let summary = PhaseSummary {
            median_mu1: median(&mu1)?,
            median_u_overlap1: median(&u1)?,
            median_v_overlap1: median(&v1)?,
            median_v_after_scaled: median(&v_after)?,
            q_expected_fraction: q_hits as f64 / trials.len() as f64,
            median_eta1: if eta1.is_empty() { None } else { Some(median(&eta1)?) },
        };
        points.push(PhasePoint {
            d_values: d_values.clone(),
            theory,
            trials,
            summary,
        });
    }
    Ok(PhaseReport::new(config.clone(), points))
}

/// Config for a convergence-rate ladder at fixed aspect ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Target aspect ratio `N/M`; each ladder size `n` uses
    /// `m = round(n / c)` and the exact realized ratio in comparisons.
    pub c: f64,
    pub ns: Vec<usize>,
    /// Each signal strength gets its own ladder and fit.
    pub d_points: Vec<f64>,
    #[serde(default)]
    pub family: FamilyChoice,
    #[serde(default)]
    pub entry_law: EntryLaw,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub m: usize,
    /// Per-trial `|mu_1 - limit|` with the limit taken at the realized
    /// aspect ratio.
    pub errors: Vec<f64>,
    pub median_abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateLadder {
    pub d: f64,
    /// Whether the ladder tracks an outlier location (above the
    /// transition) or the bulk edge.
    pub supercritical: bool,
    pub points: Vec<RatePoint>,
    pub fit: RateFit,
}

/// Measures how fast the leading eigenvalue approaches its limit as the
/// dimensions grow, and fits the rate.
pub fn run_rate_experiment(config: &RateConfig, jobs: Jobs) -> Result<RateReport> {
    if config.trials < 30 {
        return Err(Error::domain(format!(
            "rate ladders need at least 30 trials per point, got {}",
            config.trials
        )));
    }
    if config.d_points.is_empty() {
        return Err(Error::domain("rate config needs at least one signal value".to_string()));
    }
    if !config.c.is_finite() || config.c <= 0.0 {
        return Err(Error::domain(format!(
            "aspect ratio target must be positive and finite, got {}",
            config.c
        )));
    }
    let sigma = config.noise.sigma;
    let mut ladders = Vec::with_capacity(config.d_points.len());
    for (di, &d) in config.d_points.iter().enumerate() {
        let d_seed = stream_seed(config.seed, di as u64);
        let mut points = Vec::with_capacity(config.ns.len());
        let mut supercritical = false;
        for (ni, &n) in config.ns.iter().enumerate() {
            let m = ((n as f64) / config.c).round() as usize;
            let c = AspectRatio::from_dims(m, n)?;
            let d_norm = d / sigma;
            supercritical = d_norm > c.critical_d();
            let limit = if supercritical {
                sigma * sigma * p_of_d(d_norm, c)?
            } else {
                sigma * sigma * edges(c).upper
            };
            let family = config.family.resolve(m, n)?;
            let point_seed = stream_seed(d_seed, ni as u64);
            let outcomes = run_trials(config.trials, jobs, |t| -> Result<f64> {
                let spec = SignalSpec {
                    m,
                    n,
                    d_values: vec![d],
                    vector_family: family,
                    entry_law: config.entry_law,
                    seed: stream_seed(point_seed, t as u64),
                };
                let inst = assemble(&spec, &config.noise)?;
                let svd = full_svd(&inst.observation)?;
                let s1 = svd.singular_values[0];
                Ok((s1 * s1 - limit).abs())
            });
            let errors = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
            let median_abs_err = median(&errors)?;
            points.push(RatePoint {
                n,
                m,
                errors,
                median_abs_err,
            });
        }
        let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
        let errs: Vec<f64> = points.iter().map(|p| p.median_abs_err).collect();
        let fit = fit_rate(&ns, &errs)?;
        ladders.push(RateLadder {
            d,
            supercritical,
            points,
            fit,
        });
    }
    Ok(RateReport::new(config.clone(), ladders))
}

/// A denoising estimator under comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSpec {
    Stepwise(StepwiseOptions),
    Rie {
        #[serde(default)]
        sigma: SigmaMode,
    },
    TsvdRank {
        rank: usize,
    },
    /// Keeps the whole observed spectrum; the do-nothing baseline.
    TsvdFull,
    TsvdHard {
        threshold: f64,
    },
    TsvdSoft {
        threshold: f64,
    },
}

impl EstimatorSpec {
    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::Stepwise(_) => "stepwise".to_string(),
            EstimatorSpec::Rie { .. } => "rie".to_string(),
            EstimatorSpec::TsvdRank { rank } => format!("tsvd_rank_{rank}"),
            EstimatorSpec::TsvdFull => "tsvd_full".to_string(),
            EstimatorSpec::TsvdHard { .. } => "tsvd_hard".to_string(),
            EstimatorSpec::TsvdSoft { .. } => "tsvd_soft".to_string(),
        }
    }
}

/// One geometry/family setting inside a comparison sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCase {
    pub label: String,
    pub m: usize,
    pub n: usize,
    pub d_values: Vec<f64>,
    #[serde(default)]
    pub family: FamilyChoice,
    #[serde(default)]
    pub entry_law: EntryLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub cases: Vec<ComparisonCase>,
    pub estimators: Vec<EstimatorSpec>,
    /// Index into `estimators` used as the improvement baseline.
    pub baseline_index: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    /// Per-trial fraction of true support indices recovered, averaged
    /// over the two sides.
    pub per_trial: Vec<f64>,
    pub median: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCaseResult {
    pub name: String,
    pub losses: Vec<f64>,
    pub mean_loss: f64,
    pub std_loss: f64,
    pub median_loss: f64,
    /// Relative improvement in average loss against the baseline
    /// estimator; zero for the baseline itself, absent when the baseline
    /// mean loss is zero.
    pub rial: Option<f64>,
    pub recovery: Option<RecoverySummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub label: String,
    pub m: usize,
    pub n: usize,
    pub d_values: Vec<f64>,
    pub family: VectorFamily,
    pub estimators: Vec<EstimatorCaseResult>,
}

struct TrialOutcome {
    losses: Vec<f64>,
    recoveries: Vec<Option<f64>>,
}

fn apply_estimator(
    spec: &EstimatorSpec,
    observation: &DMatrix<f64>,
    svd: &SvdFactorization,
    truth: Option<(&[Vec<usize>], &[Vec<usize>])>,
) -> Result<(DMatrix<f64>, Option<f64>)> {
    match spec {
        EstimatorSpec::Stepwise(options) => {
            let res = stepwise_svd(observation, options)?;
            let recovery = truth.map(|(u_true, v_true)| {
                let rows: Vec<Vec<usize>> =
                    res.components.iter().map(|c| c.row_support.clone()).collect();
                let cols: Vec<Vec<usize>> =
                    res.components.iter().map(|c| c.col_support.clone()).collect();
                0.5 * (metrics::support_recovery_fraction(u_true, &rows)
                    + metrics::support_recovery_fraction(v_true, &cols))
            });
            Ok((res.s_hat, recovery))
        }
        EstimatorSpec::Rie { sigma } => {
            let resolved = resolve_sigma_mode(*sigma, svd)?;
            Ok((rie_from_svd(svd, resolved)?.s_hat, None))
        }
        EstimatorSpec::TsvdRank { rank } => Ok((tsvd_apply(svd, TsvdMode::Rank(*rank))?, None)),
        EstimatorSpec::TsvdFull => Ok((tsvd_apply(svd, TsvdMode::Rank(svd.k()))?, None)),
        EstimatorSpec::TsvdHard { threshold } => {
            Ok((tsvd_apply(svd, TsvdMode::Hard(*threshold))?, None))
        }
        EstimatorSpec::TsvdSoft { threshold } => {
            Ok((tsvd_apply(svd, TsvdMode::Soft(*threshold))?, None))
        }
    }
}

/// Runs every configured estimator on every case and summarizes loss
/// distributions, relative improvements, and support recovery.
pub fn run_estimator_comparison(config: &ComparisonConfig, jobs: Jobs) -> Result<ComparisonReport> {
    if config.cases.is_empty() || config.estimators.is_empty() {
        return Err(Error::domain(
            "comparison needs at least one case and one estimator".to_string(),
        ));
    }
    if config.baseline_index >= config.estimators.len() {
        return Err(Error::domain(format!(
            "baseline index {} out of range for {} estimators",
            config.baseline_index,
            config.estimators.len()
        )));
    }
    if config.trials == 0 {
        return Err(Error::domain("trial count must be positive".to_string()));
    }
    let mut cases = Vec::with_capacity(config.cases.len());
    for (ci, case) in config.cases.iter().enumerate() {
        let family = case.family.resolve(case.m, case.n)?;
        let case_seed = stream_seed(config.seed, ci as u64);
        let outcomes = run_trials(config.trials, jobs, |t| -> Result<TrialOutcome> {
            let spec = SignalSpec {
                m: case.m,
                n: case.n,
                d_values: case.d_values.clone(),
                vector_family: family,
                entry_law: case.entry_law,
                seed: stream_seed(case_seed, t as u64),
            };
            let inst = assemble(&spec, &config.noise)?;
            let svd = full_svd(&inst.observation)?;
            let truth = inst
                .u_supports
                .as_ref()
                .zip(inst.v_supports.as_ref())
                .map(|(u, v)| (u.as_slice(), v.as_slice()));
            let mut losses = Vec::with_capacity(config.estimators.len());
            let mut recoveries = Vec::with_capacity(config.estimators.len());
            for est in &config.estimators {
                let (s_hat, recovery) = apply_estimator(est, &inst.observation, &svd, truth)?;
                losses.push(metrics::frobenius_loss(&inst.signal, &s_hat)?);
                recoveries.push(recovery);
            }
            Ok(TrialOutcome { losses, recoveries })
        });
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let baseline_losses: Vec<f64> = outcomes
            .iter()
            .map(|o| o.losses[config.baseline_index])
            .collect();
        let mut estimators = Vec::with_capacity(config.estimators.len());
        for (ei, est) in config.estimators.iter().enumerate() {
            let losses: Vec<f64> = outcomes.iter().map(|o| o.losses[ei]).collect();
            let (mean_loss, std_loss) = mean_std(&losses)?;
            let median_loss = median(&losses)?;
            let rial = metrics::rial(&losses, &baseline_losses).ok();
            let per_trial: Vec<f64> = outcomes.iter().filter_map(|o| o.recoveries[ei]).collect();
            let recovery = if per_trial.is_empty() {
                None
            } else {
                let (mean, _) = mean_std(&per_trial)?;
                Some(RecoverySummary {
                    median: median(&per_trial)?,
                    mean,
                    per_trial,
                })
            };
            estimators.push(EstimatorCaseResult {
                name: est.name(),
                losses,
                mean_loss,
                std_loss,
                median_loss,
                rial,
                recovery,
            });
        }
        cases.push(CaseResult {
            label: case.label.clone(),
            m: case.m,
            n: case.n,
            d_values: case.d_values.clone(),
            family,
            estimators,
        });
    }
    Ok(ComparisonReport::new(config.clone(), cases))
}
