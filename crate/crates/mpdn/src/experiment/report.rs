//! Report envelopes and their table/plot serializations.
//!
//! Reports serialize to JSON (full per-trial records), a summary CSV, and
//! a long-format plot CSV with `x,y,series` columns. All three are
//! deterministic functions of the report contents.

use serde::{Deserialize, Serialize};

use super::{CaseResult, ComparisonConfig, PhaseConfig, PhasePoint, RateConfig, RateLadder};
use crate::error::{Error, Result};
use crate::synth::VectorFamily;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::domain(format!("report serialization failed: {e}")))
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::domain(format!("malformed report: {e}")))
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn plot_row(out: &mut String, x: f64, y: f64, series: &str) {
    out.push_str(&format!("{x},{y},{}\n", csv_field(series)));
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: PhaseConfig,
    pub points: Vec<PhasePoint>,
}

impl PhaseReport {
    pub(crate) fn new(config: PhaseConfig, points: Vec<PhasePoint>) -> Self {
        PhaseReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: tool_version(),
            config,
            points,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    /// One row per sweep point: medians next to their limits.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "point,d1,rank,k_plus,theory_mu1,median_mu1,theory_u_overlap1,median_u_overlap1,\
             theory_v_overlap1,median_v_overlap1,median_v_after_scaled,q_expected_fraction,\
             theory_eta1,median_eta1\n",
        );
        for (i, p) in self.points.iter().enumerate() {
            let eta_obs = p.summary.median_eta1.map(num).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                i,
                num(p.d_values[0]),
                p.d_values.len(),
                p.theory.k_plus,
                num(p.theory.mu[0]),
                num(p.summary.median_mu1),
                num(p.theory.u_overlap[0]),
                num(p.summary.median_u_overlap1),
                num(p.theory.v_overlap[0]),
                num(p.summary.median_v_overlap1),
                num(p.summary.median_v_after_scaled),
                num(p.summary.q_expected_fraction),
                num(p.theory.eta1),
                eta_obs,
            ));
        }
        out
    }

    /// Long-format rows keyed by the leading signal value.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("x,y,series\n");
        for p in &self.points {
            let d1 = p.d_values[0];
            plot_row(&mut out, d1, p.summary.median_mu1, "mu1_observed");
            plot_row(&mut out, d1, p.theory.mu[0], "mu1_theory");
            plot_row(&mut out, d1, p.summary.median_u_overlap1, "u_overlap_observed");
            plot_row(&mut out, d1, p.theory.u_overlap[0], "u_overlap_theory");
            plot_row(&mut out, d1, p.summary.median_v_overlap1, "v_overlap_observed");
            plot_row(&mut out, d1, p.theory.v_overlap[0], "v_overlap_theory");
            if let Some(eta) = p.summary.median_eta1 {
                plot_row(&mut out, d1, eta, "eta1_observed");
                plot_row(&mut out, d1, p.theory.eta1, "eta1_theory");
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: RateConfig,
    pub ladders: Vec<RateLadder>,
}

impl RateReport {
    pub(crate) fn new(config: RateConfig, ladders: Vec<RateLadder>) -> Self {
        RateReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: tool_version(),
            config,
            ladders,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("d,supercritical,n,m,median_abs_err,slope,slope_stderr,r_squared\n");
        for ladder in &self.ladders {
            for p in &ladder.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    num(ladder.d),
                    ladder.supercritical,
                    p.n,
                    p.m,
                    num(p.median_abs_err),
                    num(ladder.fit.slope),
                    num(ladder.fit.slope_stderr),
                    num(ladder.fit.r_squared),
                ));
            }
        }
        out
    }

    pub fn plot_csv(&self) -> String {
        let mut out = String::from("x,y,series\n");
        for ladder in &self.ladders {
            let observed = format!("d={}_observed", ladder.d);
            let fitted = format!("d={}_fit", ladder.d);
            for p in &ladder.points {
                plot_row(&mut out, p.n as f64, p.median_abs_err, &observed);
            }
            for p in &ladder.points {
                let y = (ladder.fit.intercept + ladder.fit.slope * (p.n as f64).ln()).exp();
                plot_row(&mut out, p.n as f64, y, &fitted);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ComparisonConfig,
    pub cases: Vec<CaseResult>,
}

impl ComparisonReport {
    pub(crate) fn new(config: ComparisonConfig, cases: Vec<CaseResult>) -> Self {
        ComparisonReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: tool_version(),
            config,
            cases,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    fn case_sparsity(case: &CaseResult) -> f64 {
        match case.family {
            VectorFamily::DenseOrthonormal => 1.0,
            VectorFamily::Sparse { k_left, .. } => k_left as f64 / case.m as f64,
        }
    }

    /// One row per (case, estimator) with the loss table columns.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "case,sparsity,estimator,l2_norm,std,median_loss,rial,support_recovery_median\n",
        );
        for case in &self.cases {
            let sparsity = Self::case_sparsity(case);
            for est in &case.estimators {
                let rial = est.rial.map(num).unwrap_or_default();
                let recovery = est
                    .recovery
                    .as_ref()
                    .map(|r| num(r.median))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    csv_field(&case.label),
                    num(sparsity),
                    csv_field(&est.name),
                    num(est.mean_loss),
                    num(est.std_loss),
                    num(est.median_loss),
                    rial,
                    recovery,
                ));
            }
        }
        out
    }

    /// Long-format rows; the x axis is the row dimension when the sweep
    /// varies it, otherwise the sparsity ratio.
    pub fn plot_csv(&self) -> String {
        let mut ms: Vec<usize> = self.cases.iter().map(|c| c.m).collect();
        ms.sort_unstable();
        ms.dedup();
        let x_is_m = ms.len() > 1;
        let mut out = String::from("x,y,series\n");
        for case in &self.cases {
            let x = if x_is_m {
                case.m as f64
            } else {
                Self::case_sparsity(case)
            };
            for est in &case.estimators {
                plot_row(&mut out, x, est.mean_loss, &format!("loss_{}", est.name));
                if let Some(rial) = est.rial {
                    plot_row(&mut out, x, rial, &format!("rial_{}", est.name));
                }
            }
        }
        out
    }
}
