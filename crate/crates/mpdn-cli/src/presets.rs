//! Shipped experiment configurations and config-file parsing.
//!
//! Presets are embedded at compile time from `presets/*.json`, so the
//! installed binary carries them; the same files live in the repository
//! for diffing and for use with `--config`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mpdn::experiment::{ComparisonConfig, PhaseConfig, RateConfig};
use mpdn::synth::{NoiseSpec, SignalSpec};

use crate::{CliError, CliResult};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const BENCH_PRESETS: [&str; 5] = ["fig1", "fig3", "fig4", "table1", "rates"];

pub fn bench_preset(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(include_str!("../presets/fig1.json")),
        "fig3" => Some(include_str!("../presets/fig3.json")),
        "fig4" => Some(include_str!("../presets/fig4.json")),
        "table1" => Some(include_str!("../presets/table1.json")),
        "rates" => Some(include_str!("../presets/rates.json")),
        _ => None,
    }
}

/// One experiment kind per config file.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchKind {
    Phase(PhaseConfig),
    Rate(RateConfig),
    Comparison(ComparisonConfig),
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub kind: BenchKind,
}

#[derive(Deserialize)]
struct BenchHeader {
    schema_version: u32,
    kind: String,
}

/// Parses a bench config in two passes: the header selects the experiment
/// kind, then the document is deserialized as that kind directly so schema
/// errors carry the offending field path (a tagged-enum parse would buffer
/// the content and lose it).
pub fn parse_bench_file(text: &str, origin: &str) -> CliResult<BenchFile> {
    let header: BenchHeader = parse_config(text, origin)?;
    let kind = match header.kind.as_str() {
        "phase" => BenchKind::Phase(parse_config(text, origin)?),
        "rate" => BenchKind::Rate(parse_config(text, origin)?),
        "comparison" => BenchKind::Comparison(parse_config(text, origin)?),
        other => {
            return Err(CliError::Data(format!(
                "config schema error in {origin} at field `kind`: unknown experiment kind {other:?}, expected phase, rate, or comparison"
            )))
        }
    };
    Ok(BenchFile {
        schema_version: header.schema_version,
        kind,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateFile {
    pub schema_version: u32,
    pub signal: SignalSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
}

/// Parses a config document, reporting the JSON path of the offending
/// field on schema errors.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Data(format!(
            "config schema error in {origin} at field `{}`: {}",
            e.path(),
            e.inner()
        ))
    })
}

pub fn check_schema_version(version: u32, origin: &str) -> CliResult<()> {
    if version != CONFIG_SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "{origin}: config schema version {version} is not supported (expected {CONFIG_SCHEMA_VERSION})"
        )));
    }
    Ok(())
}
