//! The `denoise` subcommand: one estimator, one matrix file.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use mpdn::denoise::{
    rie_denoise, stepwise_svd, tsvd_denoise, GateMode, SigmaMode, StepwiseOptions, TsvdMode,
};

use crate::manifest::{epoch_seconds, RunManifest};
use crate::{io, CliError, CliResult, DenoiseArgs};

/// Diagnostic sidecar for a stepwise run. Field values depend only on the
/// input matrix and options, so repeated runs produce byte-identical
/// files; provenance lives in the manifest instead.
#[derive(Serialize)]
struct StepwiseDiagnostics {
    method: &'static str,
    m: usize,
    n: usize,
    sigma_used: f64,
    q: usize,
    d_hat: Vec<f64>,
    row_supports: Vec<Vec<usize>>,
    col_supports: Vec<Vec<usize>>,
    u_separation: Vec<f64>,
    v_separation: Vec<f64>,
    u_fallback: Vec<bool>,
    v_fallback: Vec<bool>,
    empty_support_stop: Option<usize>,
    below_edge_stop: Option<usize>,
}

#[derive(Serialize)]
struct RieDiagnostics {
    method: &'static str,
    m: usize,
    n: usize,
    sigma_used: f64,
    q: usize,
    d_hat: Vec<f64>,
    eta_hat: Vec<f64>,
}

#[derive(Serialize)]
struct TsvdDiagnostics {
    method: &'static str,
    m: usize,
    n: usize,
    mode: String,
}

fn parse_sigma(text: &str) -> CliResult<SigmaMode> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(SigmaMode::Auto);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("sigma must be `auto` or a number, got {text:?}")))?;
    if !value.is_finite() || value <= 0.0 {
        return Err(CliError::Usage(format!(
            "sigma must be positive and finite, got {value}"
        )));
    }
    Ok(SigmaMode::Fixed(value))
}

fn parse_tsvd_mode(text: &str) -> CliResult<TsvdMode> {
    let bad = || {
        CliError::Usage(format!(
            "tsvd mode must be `rank:K`, `hard:GAMMA`, or `soft:GAMMA`, got {text:?}"
        ))
    };
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "rank" => Ok(TsvdMode::Rank(value.parse().map_err(|_| bad())?)),
        "hard" => Ok(TsvdMode::Hard(value.parse().map_err(|_| bad())?)),
        "soft" => Ok(TsvdMode::Soft(value.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn write_diagnostics<T: Serialize>(dir: &Path, diag: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(diag)
        .map_err(|e| CliError::Data(format!("cannot serialize diagnostics: {e}")))?;
    let path = dir.join("diagnostics.json");
    fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn store_estimate(
    dir: &Path,
    format: &str,
    s_hat: &nalgebra::DMatrix<f64>,
) -> CliResult<&'static str> {
    if format == "csv" {
        io::store_csv(&dir.join("s_hat.csv"), s_hat)?;
        Ok("s_hat.csv")
    } else {
        io::store_binary(&dir.join("s_hat.mpdn"), s_hat)?;
        Ok("s_hat.mpdn")
    }
}

pub fn run(args: &DenoiseArgs) -> CliResult<()> {
    let started = epoch_seconds();
    let matrix = io::load_matrix(&args.input)?;
    let (m, n) = matrix.shape();
    let sigma = parse_sigma(&args.sigma)?;
    let out_dir = crate::resolve_out_dir(args.out_dir.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    if args.tsvd_mode.is_some() && args.method != "tsvd" {
        return Err(CliError::Usage(
            "--tsvd-mode only applies to --method tsvd".to_string(),
        ));
    }

    let (estimate_file, summary) = match args.method.as_str() {
        "stepwise" => {
            let mut options = StepwiseOptions {
                sigma,
                ..StepwiseOptions::default()
            };
            if let Some(d) = args.delta1 {
                options.delta1 = d;
            }
            if let Some(t) = args.tau_sep {
                options.tau_sep = t;
            }
            if let Some(g) = &args.gate {
                options.gate = match g.as_str() {
                    "fixed-q" => GateMode::FixedQ,
                    _ => GateMode::Redetect,
                };
            }
            let result = stepwise_svd(&matrix, &options)?;
            let estimate_file = store_estimate(&out_dir, &args.format, &result.s_hat)?;
            write_diagnostics(
                &out_dir,
                &StepwiseDiagnostics {
                    method: "stepwise",
                    m,
                    n,
                    sigma_used: result.sigma_used,
                    q: result.initial_q,
                    d_hat: result.components.iter().map(|c| c.d_hat).collect(),
                    row_supports: result
                        .components
                        .iter()
                        .map(|c| c.row_support.clone())
                        .collect(),
                    col_supports: result
                        .components
                        .iter()
                        .map(|c| c.col_support.clone())
                        .collect(),
                    u_separation: result.components.iter().map(|c| c.u_separation).collect(),
                    v_separation: result.components.iter().map(|c| c.v_separation).collect(),
                    u_fallback: result.components.iter().map(|c| c.u_fallback).collect(),
                    v_fallback: result.components.iter().map(|c| c.v_fallback).collect(),
                    empty_support_stop: result.empty_support_stop,
                    below_edge_stop: result.below_edge_stop,
                },
            )?;
            let summary = format!(
                "stepwise: q={}, {} component(s), sigma={:.6}",
                result.initial_q,
                result.components.len(),
                result.sigma_used
            );
            (estimate_file, summary)
        }
        "rie" => {
            let result = rie_denoise(&matrix, sigma)?;
            let estimate_file = store_estimate(&out_dir, &args.format, &result.s_hat)?;
            write_diagnostics(
                &out_dir,
                &RieDiagnostics {
                    method: "rie",
                    m,
                    n,
                    sigma_used: result.sigma_used,
                    q: result.q,
                    d_hat: result.d_hat.clone(),
                    eta_hat: result.eta_hat.clone(),
                },
            )?;
            let summary = format!(
                "rie: q={}, {} kept value(s), sigma={:.6}",
                result.q,
                result.d_hat.len(),
                result.sigma_used
            );
            (estimate_file, summary)
        }
        "tsvd" => {
            let mode_text = args.tsvd_mode.as_deref().ok_or_else(|| {
                CliError::Usage("--method tsvd requires --tsvd-mode".to_string())
            })?;
            let mode = parse_tsvd_mode(mode_text)?;
            let s_hat = tsvd_denoise(&matrix, mode)?;
            let estimate_file = store_estimate(&out_dir, &args.format, &s_hat)?;
            write_diagnostics(
                &out_dir,
                &TsvdDiagnostics {
                    method: "tsvd",
                    m,
                    n,
                    mode: mode_text.to_string(),
                },
            )?;
            (estimate_file, format!("tsvd: mode {mode_text}"))
        }
        other => return Err(CliError::Usage(format!("unknown method {other:?}"))),
    };

    let config = json!({
        "input": args.input.display().to_string(),
        "method": args.method,
        "sigma": args.sigma,
        "format": args.format,
        "delta1": args.delta1,
        "tau_sep": args.tau_sep,
        "gate": args.gate,
        "tsvd_mode": args.tsvd_mode,
    });
    RunManifest::new("denoise", config, started)
        .write(&out_dir, &[estimate_file, "diagnostics.json"])?;
    println!("{summary}");
    println!("wrote {}", out_dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_parses_auto_and_numbers() {
        assert_eq!(parse_sigma("auto").unwrap(), SigmaMode::Auto);
        assert_eq!(parse_sigma("2.5").unwrap(), SigmaMode::Fixed(2.5));
        assert!(matches!(parse_sigma("-1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_sigma("iron"), Err(CliError::Usage(_))));
    }

    #[test]
    fn tsvd_mode_parses_all_kinds() {
        assert_eq!(parse_tsvd_mode("rank:2").unwrap(), TsvdMode::Rank(2));
        assert_eq!(parse_tsvd_mode("hard:1.5").unwrap(), TsvdMode::Hard(1.5));
        assert_eq!(parse_tsvd_mode("soft:0.7").unwrap(), TsvdMode::Soft(0.7));
        assert!(matches!(parse_tsvd_mode("rank"), Err(CliError::Usage(_))));
        assert!(matches!(parse_tsvd_mode("mid:3"), Err(CliError::Usage(_))));
    }
}
