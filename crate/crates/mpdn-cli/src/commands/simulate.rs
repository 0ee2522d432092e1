//! The `simulate` subcommand: materialize one synthetic instance.

use std::fs;

use serde::Serialize;

use mpdn::synth::{assemble, EntryLaw, VectorFamily};

use crate::manifest::{epoch_seconds, RunManifest};
use crate::presets::{check_schema_version, parse_config, SimulateFile};
use crate::{io, CliError, CliResult, SimulateArgs};

/// Ground-truth sidecar; the matrices themselves live in the binary
/// files, this records what generated them and where the signal sits.
#[derive(Serialize)]
struct TruthMetadata {
    schema_version: u32,
    m: usize,
    n: usize,
    d_values: Vec<f64>,
    vector_family: VectorFamily,
    entry_law: EntryLaw,
    seed: u64,
    noise_sigma: f64,
    u_supports: Option<Vec<Vec<usize>>>,
    v_supports: Option<Vec<Vec<usize>>>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let started = epoch_seconds();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let file: SimulateFile = parse_config(&text, &args.config.display().to_string())?;
    check_schema_version(file.schema_version, &args.config.display().to_string())?;
    file.signal.validate().map_err(|e| {
        CliError::Data(format!(
            "config schema error in {}: {e}",
            args.config.display()
        ))
    })?;

    let instance = assemble(&file.signal, &file.noise)?;
    let out_dir = crate::resolve_out_dir(args.out_dir.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    io::store_binary(&out_dir.join("s.mpdn"), &instance.signal)?;
    io::store_binary(&out_dir.join("x.mpdn"), &instance.noise)?;
    io::store_binary(&out_dir.join("s_tilde.mpdn"), &instance.observation)?;
    let truth = TruthMetadata {
        schema_version: 1,
        m: file.signal.m,
        n: file.signal.n,
        d_values: file.signal.d_values.clone(),
        vector_family: file.signal.vector_family,
        entry_law: file.signal.entry_law,
        seed: file.signal.seed,
        noise_sigma: file.noise.sigma,
        u_supports: instance.u_supports.clone(),
        v_supports: instance.v_supports.clone(),
    };
    let truth_text = serde_json::to_string_pretty(&truth)
        .map_err(|e| CliError::Data(format!("cannot serialize truth metadata: {e}")))?;
    fs::write(out_dir.join("truth.json"), truth_text)
        .map_err(|e| CliError::Io(format!("cannot write truth.json: {e}")))?;

    let config = serde_json::to_value(&file)
        .map_err(|e| CliError::Data(format!("cannot serialize config: {e}")))?;
    RunManifest::new("simulate", config, started).write(
        &out_dir,
        &["s.mpdn", "x.mpdn", "s_tilde.mpdn", "truth.json"],
    )?;
    println!(
        "simulate: {} x {} instance, r={}, wrote {}",
        file.signal.m,
        file.signal.n,
        file.signal.d_values.len(),
        out_dir.display()
    );
    Ok(())
}
