//! Estimators for the low-rank signal: outlier counting, noise estimation,
//! singular-value shrinkage, the stepwise sparse SVD, the rotation
//! invariant estimator, and truncated-SVD baselines.
//!
//! All gates compare squared singular values `mu_i = sigma_i(S~)^2` against
//! the single threshold expression [`edge_threshold`]; estimators derive
//! the aspect ratio from the concrete matrix shape.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{embed_by_support, full_svd, two_means_1d, SvdFactorization};
use crate::spectral::{a1, a2, edges, p_inverse, AspectRatio};

/// Default separation guard for the two-means support split.
pub const DEFAULT_TAU_SEP: f64 = 3.0;
/// Default fallback threshold exponent: `alpha = n^(-1/2 + delta1)`.
pub const DEFAULT_DELTA1: f64 = 0.25;

/// Detection gate `sigma^2 (lambda_+ + n^{-2/3})`: eigenvalues above it are
/// treated as signal outliers, everything at or below as bulk. Every
/// estimator in this module uses this expression, which keeps detection and
/// shrinkage consistent.
pub fn edge_threshold(c: AspectRatio, n: usize, sigma: f64) -> f64 {
    sigma * sigma * (edges(c).upper + (n as f64).powf(-2.0 / 3.0))
}

/// Outcome of counting eigenvalues above the detection gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierDiagnostics {
    /// 1-based index of the first non-outlier eigenvalue; `K + 1` when the
    /// whole spectrum sits above the gate.
    pub q: usize,
    /// `q - 1`, the estimated number of supercritical signal values.
    pub k_plus_hat: usize,
    /// Squared singular values, descending.
    pub mu: Vec<f64>,
    /// `sqrt(mu_q / lambda_+)`, available when `q <= K`.
    pub sigma_hat: Option<f64>,
    /// The gate the spectrum was compared against.
    pub threshold: f64,
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::domain(format!(
            "noise level must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

fn detect_from_mu(mu: Vec<f64>, c: AspectRatio, n: usize, sigma: f64) -> Result<OutlierDiagnostics> {
    if mu.is_empty() {
        return Err(Error::domain("empty spectrum".to_string()));
    }
    validate_sigma(sigma)?;
    let threshold = edge_threshold(c, n, sigma);
    let q = mu
        .iter()
        .position(|&m| m <= threshold)
        .map(|i| i + 1)
        .unwrap_or(mu.len() + 1);
    let sigma_hat = if q <= mu.len() {
        Some((mu[q - 1] / edges(c).upper).sqrt())
    } else {
        None
    };
    Ok(OutlierDiagnostics {
        q,
        k_plus_hat: q - 1,
        mu,
        sigma_hat,
        threshold,
    })
}

/// Counts outlier eigenvalues of an observation with noise level `sigma`
/// (pass 1 for pre-normalized data). Aspect ratio and `N` come from the
/// factorization's shape.
pub fn detect_q(svd: &SvdFactorization, sigma: f64) -> Result<OutlierDiagnostics> {
    let c = AspectRatio::from_dims(svd.left.nrows(), svd.right.nrows())?;
    detect_from_mu(svd.eigenvalues(), c, svd.right.nrows(), sigma)
}

/// Noise level implied by the first non-outlier eigenvalue, which converges
/// to `sigma^2 lambda_+`. Fails when no non-outlier was observed.
pub fn estimate_noise(diag: &OutlierDiagnostics, c: AspectRatio) -> Result<f64> {
    if diag.q > diag.mu.len() {
        return Err(Error::unavailable(
            "every eigenvalue sits above the gate; no bulk edge was observed".to_string(),
        ));
    }
    Ok((diag.mu[diag.q - 1] / edges(c).upper).sqrt())
}

/// Shrinks one eigenvalue to a signal-value estimate:
/// `1(mu > gate) * sigma * p_inverse(mu / sigma^2)`, zero at or below the
/// gate (non-finite input counts as below).
pub fn shrink_singular_value(mu: f64, c: AspectRatio, n: usize, sigma: f64) -> f64 {
    if mu > edge_threshold(c, n, sigma) {
        sigma
            * p_inverse(mu / (sigma * sigma), c)
                .expect("gate keeps the normalized eigenvalue above the bulk edge")
    } else {
        0.0
    }
}

/// How the noise level is supplied to an estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Fixed(f64),
    /// Estimate via [`estimate_noise`] at level 1, then rerun once with the
    /// estimate. Fails when the spectrum has no observable bulk edge.
    Auto,
}

impl Default for SigmaMode {
    fn default() -> Self {
        SigmaMode::Fixed(1.0)
    }
}

/// Whether the stepwise loop re-checks the outlier gate on each residual
/// or trusts the count detected on the initial observation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    #[default]
    Redetect,
    FixedQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepwiseOptions {
    #[serde(default)]
    pub sigma: SigmaMode,
    /// Fallback threshold exponent; the fixed threshold is
    /// `n^(-1/2 + delta1)` on each side.
    #[serde(default = "default_delta1")]
    pub delta1: f64,
    /// Separation guard: the two-means split is trusted only when its
    /// smallest upper magnitude is at least `tau_sep / sqrt(n)`.
    #[serde(default = "default_tau_sep")]
    pub tau_sep: f64,
    #[serde(default)]
    pub gate: GateMode,
}

fn default_delta1() -> f64 {
    DEFAULT_DELTA1
}

fn default_tau_sep() -> f64 {
    DEFAULT_TAU_SEP
}

impl Default for StepwiseOptions {
    fn default() -> Self {
        StepwiseOptions {
            sigma: SigmaMode::default(),
            delta1: DEFAULT_DELTA1,
            tau_sep: DEFAULT_TAU_SEP,
            gate: GateMode::default(),
        }
    }
}

impl StepwiseOptions {
    fn validate(&self) -> Result<()> {
        if !self.delta1.is_finite() || self.delta1 <= 0.0 || self.delta1 > 0.5 {
            return Err(Error::domain(format!(
                "fallback exponent must lie in (0, 0.5], got {}",
                self.delta1
            )));
        }
        if !self.tau_sep.is_finite() || self.tau_sep < 0.0 {
            return Err(Error::domain(format!(
                "separation guard must be nonnegative, got {}",
                self.tau_sep
            )));
        }
        Ok(())
    }
}

/// One extracted component of the stepwise estimator.
#[derive(Clone, Debug)]
pub struct ComponentEstimate {
    pub d_hat: f64,
    /// Unit vector supported on `row_support`.
    pub u_hat: DVector<f64>,
    /// Unit vector supported on `col_support`.
    pub v_hat: DVector<f64>,
    pub row_support: Vec<usize>,
    pub col_support: Vec<usize>,
    /// Separation scores of the two-means splits (zero when the split was
    /// degenerate).
    pub u_separation: f64,
    pub v_separation: f64,
    /// True when the side fell back to the fixed threshold.
    pub u_fallback: bool,
    pub v_fallback: bool,
}

/// Result of the stepwise sparse SVD.
#[derive(Clone, Debug)]
pub struct SparseDenoiseResult {
    pub components: Vec<ComponentEstimate>,
    /// `sum_j d_hat_j u_hat_j v_hat_j^T`, accumulated in extraction order.
    pub s_hat: DMatrix<f64>,
    /// Final residual, i.e. the observation minus every deflated component.
    pub residual: DMatrix<f64>,
    /// Outlier count detected on the initial observation.
    pub initial_q: usize,
    pub sigma_used: f64,
    /// Set when a step produced an empty support on some side. The
    /// component is skipped and the loop exits: without a deflation the
    /// residual is unchanged, so every remaining step would repeat the
    /// identical skip. 1-based step index.
    pub empty_support_stop: Option<usize>,
    /// Set when the fixed-count gate asked for more steps than the
    /// residual spectrum supports (top eigenvalue below the bulk edge,
    /// where the shrinker is undefined).
    pub below_edge_stop: Option<usize>,
}

struct SupportChoice {
    indices: Vec<usize>,
    separation: f64,
    fallback: bool,
}

fn choose_support(magnitudes: &[f64], tau_sep: f64, delta1: f64) -> SupportChoice {
    let n = magnitudes.len();
    let alpha = (n as f64).powf(-0.5 + delta1);
    let by_threshold = || -> Vec<usize> {
        (0..n).filter(|&i| magnitudes[i] >= alpha).collect()
    };
    match two_means_1d(magnitudes) {
        Ok(split) if split.separation_score >= tau_sep => SupportChoice {
            indices: split.upper_indices,
            separation: split.separation_score,
            fallback: false,
        },
        Ok(split) => SupportChoice {
            indices: by_threshold(),
            separation: split.separation_score,
            fallback: true,
        },
        Err(_) => SupportChoice {
            indices: by_threshold(),
            separation: 0.0,
            fallback: true,
        },
    }
}

fn sign_normalize_pair(u: &mut DVector<f64>, v: &mut DVector<f64>) {
    let mut arg = 0;
    let mut best = -1.0;
    for i in 0..u.len() {
        if u[i].abs() > best {
            best = u[i].abs();
            arg = i;
        }
    }
    if u[arg] < 0.0 {
        u.neg_mut();
        v.neg_mut();
    }
}

/// Resolves a noise-level mode against a factorization of the raw
/// observation: fixed levels are validated, `Auto` estimates the level
/// from the first non-outlier eigenvalue.
pub fn resolve_sigma_mode(mode: SigmaMode, svd: &SvdFactorization) -> Result<f64> {
    match mode {
        SigmaMode::Fixed(sigma) => {
            validate_sigma(sigma)?;
            Ok(sigma)
        }
        SigmaMode::Auto => {
            let diag = detect_q(svd, 1.0)?;
            let c = AspectRatio::from_dims(svd.left.nrows(), svd.right.nrows())?;
            estimate_noise(&diag, c)
        }
    }
}

/// Stepwise sparse SVD.
///
/// The outlier count `q` is detected once on the observation and the loop
/// runs at most `q - 1` steps. Each step takes the full SVD of the current
/// residual, shrinks its top eigenvalue to `d_hat`, picks row and column
/// supports from the magnitudes of the top singular vector pair (two-means
/// split, guarded; fixed threshold as fallback), factors the supported
/// block of the residual, embeds the block's top pair, and deflates
/// `d_hat u_hat v_hat^T`. Under [`GateMode::Redetect`] a step whose
/// residual top eigenvalue fails the detection gate ends the loop early;
/// [`GateMode::FixedQ`] runs all `q - 1` steps as long as the shrinker
/// stays defined.
pub fn stepwise_svd(s_tilde: &DMatrix<f64>, options: &StepwiseOptions) -> Result<SparseDenoiseResult> {
    options.validate()?;
    let m = s_tilde.nrows();
    let n = s_tilde.ncols();
    let c = AspectRatio::from_dims(m, n)?;
    let initial_svd = full_svd(s_tilde)?;
    let sigma = resolve_sigma_mode(options.sigma, &initial_svd)?;
    let initial_q = detect_q(&initial_svd, sigma)?.q;
    let gate = edge_threshold(c, n, sigma);
    let edge = sigma * sigma * edges(c).upper;

    let mut residual = s_tilde.clone();
    let mut components: Vec<ComponentEstimate> = Vec::new();
    let mut empty_support_stop = None;
    let mut below_edge_stop = None;
    let mut step_svd = Some(initial_svd);

    for step in 1..initial_q {
        let svd = match step_svd.take() {
            Some(first) => first,
            None => full_svd(&residual)?,
        };
        let mu_top = svd.singular_values[0] * svd.singular_values[0];
        match options.gate {
            GateMode::Redetect => {
                if mu_top <= gate {
                    break;
                }
            }
            GateMode::FixedQ => {
                // p_inverse needs the normalized eigenvalue at or above the
                // bulk edge even when the fixed count asks for more steps.
                if mu_top < edge {
                    below_edge_stop = Some(step);
                    break;
                }
            }
        }
        let d_hat = sigma * p_inverse(mu_top / (sigma * sigma), c)?;

        let u_mags: Vec<f64> = svd.left.column(0).iter().map(|x| x.abs()).collect();
        let v_mags: Vec<f64> = svd.right.column(0).iter().map(|x| x.abs()).collect();
        let row_choice = choose_support(&u_mags, options.tau_sep, options.delta1);
        let col_choice = choose_support(&v_mags, options.tau_sep, options.delta1);
        if row_choice.indices.is_empty() || col_choice.indices.is_empty() {
            empty_support_stop = Some(step);
            break;
        }

        let block = residual.select_rows(row_choice.indices.iter()).select_columns(col_choice.indices.iter());
        let block_svd = full_svd(&block)?;
        let mut u_hat = embed_by_support(
            &DVector::from(block_svd.left.column(0).clone_owned()),
            &row_choice.indices,
            m,
        )?;
        let mut v_hat = embed_by_support(
            &DVector::from(block_svd.right.column(0).clone_owned()),
            &col_choice.indices,
            n,
        )?;
        sign_normalize_pair(&mut u_hat, &mut v_hat);

        residual.ger(-d_hat, &u_hat, &v_hat, 1.0);
        components.push(ComponentEstimate {
            d_hat,
            u_hat,
            v_hat,
            row_support: row_choice.indices,
            col_support: col_choice.indices,
            u_separation: row_choice.separation,
            v_separation: col_choice.separation,
            u_fallback: row_choice.fallback,
            v_fallback: col_choice.fallback,
        });
    }

    let mut s_hat = DMatrix::zeros(m, n);
    for comp in &components {
        s_hat.ger(comp.d_hat, &comp.u_hat, &comp.v_hat, 1.0);
    }
    Ok(SparseDenoiseResult {
        components,
        s_hat,
        residual,
        initial_q,
        sigma_used: sigma,
        empty_support_stop,
        below_edge_stop,
    })
}

/// Result of the rotation invariant estimator.
#[derive(Clone, Debug)]
pub struct RieResult {
    /// Length-`K` shrunk values; zero from index `q - 1` on.
    pub eta_hat: Vec<f64>,
    /// Signal-value estimates for the kept components.
    pub d_hat: Vec<f64>,
    /// `sum_k eta_hat_k u~_k v~_k^T` over the observed singular vectors.
    pub s_hat: DMatrix<f64>,
    pub q: usize,
    pub sigma_used: f64,
}

/// Rotation invariant estimator on a precomputed factorization of the raw
/// observation. Spectral quantities are evaluated on the sigma-normalized
/// eigenvalues `(s_k / sigma)^2`; kept values are
/// `sigma * d_hat_k * a1(d_hat_k) * a2(d_hat_k)`.
pub fn rie_from_svd(svd: &SvdFactorization, sigma: f64) -> Result<RieResult> {
    validate_sigma(sigma)?;
    let m = svd.left.nrows();
    let n = svd.right.nrows();
    let c = AspectRatio::from_dims(m, n)?;
    let mu_normalized: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| {
            let t = s / sigma;
            t * t
        })
        .collect();
    let diag = detect_from_mu(mu_normalized.clone(), c, n, 1.0)?;
    let kept = diag.q - 1;
    let mut eta_hat = vec![0.0; svd.k()];
    let mut d_hat = Vec::with_capacity(kept);
    let mut s_hat = DMatrix::zeros(m, n);
    for k in 0..kept {
        let d = p_inverse(mu_normalized[k], c)?;
        let eta = sigma * d * a1(d, c)? * a2(d, c)?;
        eta_hat[k] = eta;
        d_hat.push(d);
        s_hat.ger(eta, &svd.left.column(k), &svd.right.column(k), 1.0);
    }
    Ok(RieResult {
        eta_hat,
        d_hat,
        s_hat,
        q: diag.q,
        sigma_used: sigma,
    })
}

/// Rotation invariant estimator: shrinks every detected outlier to the
/// asymptotically optimal value for its direction and zeroes the rest.
pub fn rie_denoise(s_tilde: &DMatrix<f64>, sigma: SigmaMode) -> Result<RieResult> {
    let svd = full_svd(s_tilde)?;
    let sigma = resolve_sigma_mode(sigma, &svd)?;
    rie_from_svd(&svd, sigma)
}

/// Oracle shrinkage targets `eta_k = <u~_k, S v~_k>` against the ground
/// truth; the best possible values for estimators constrained to the
/// observed singular vectors. Test and benchmark use only.
pub fn oracle_eta(s_true: &DMatrix<f64>, svd: &SvdFactorization) -> Result<Vec<f64>> {
    if svd.left.nrows() != s_true.nrows() || svd.right.nrows() != s_true.ncols() {
        return Err(Error::dimension(format!(
            "factorization shape {}x{} does not match matrix {}x{}",
            svd.left.nrows(),
            svd.right.nrows(),
            s_true.nrows(),
            s_true.ncols()
        )));
    }
    Ok((0..svd.k())
        .map(|k| {
            let sv = s_true * svd.right.column(k);
            svd.left.column(k).dot(&sv)
        })
        .collect())
}

/// Truncation rule for the TSVD baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsvdMode {
    /// Keep the top `m` components unchanged.
    Rank(usize),
    /// Keep singular values at or above the threshold unchanged.
    Hard(f64),
    /// Subtract the threshold from every singular value, clamped at zero.
    Soft(f64),
}

/// Applies a truncation rule to a precomputed factorization.
pub fn tsvd_apply(svd: &SvdFactorization, mode: TsvdMode) -> Result<DMatrix<f64>> {
    let k = svd.k();
    let kept: Vec<f64> = match mode {
        TsvdMode::Rank(m) => {
            if m > k {
                return Err(Error::domain(format!(
                    "rank {m} exceeds the number of components {k}"
                )));
            }
            (0..k)
                .map(|i| if i < m { svd.singular_values[i] } else { 0.0 })
                .collect()
        }
        TsvdMode::Hard(gamma) => {
            if !gamma.is_finite() {
                return Err(Error::domain("threshold must be finite".to_string()));
            }
            svd.singular_values
                .iter()
                .map(|&s| if s >= gamma { s } else { 0.0 })
                .collect()
        }
        TsvdMode::Soft(gamma) => {
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(Error::domain(format!(
                    "soft threshold must be nonnegative, got {gamma}"
                )));
            }
            svd.singular_values.iter().map(|&s| (s - gamma).max(0.0)).collect()
        }
    };
    let mut out = DMatrix::zeros(svd.left.nrows(), svd.right.nrows());
    for i in 0..k {
        if kept[i] != 0.0 {
            out.ger(kept[i], &svd.left.column(i), &svd.right.column(i), 1.0);
        }
    }
    Ok(out)
}

/// Truncated SVD baseline.
pub fn tsvd_denoise(s_tilde: &DMatrix<f64>, mode: TsvdMode) -> Result<DMatrix<f64>> {
    tsvd_apply(&full_svd(s_tilde)?, mode)
}
