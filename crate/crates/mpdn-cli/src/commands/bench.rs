//! The `bench` subcommand: run an experiment config, write its reports.

use std::fs;
use std::path::Path;

use mpdn::experiment::{
    run_estimator_comparison, run_phase_transition, run_rate_experiment, Jobs,
};

use crate::manifest::{epoch_seconds, RunManifest};
use crate::presets::{bench_preset, check_schema_version, parse_bench_file, BenchKind};
use crate::{BenchArgs, CliError, CliResult};

enum JobPlan {
    Serial,
    Parallel,
    Threads(usize),
}

fn parse_jobs(text: &str) -> CliResult<JobPlan> {
    match text {
        "serial" => Ok(JobPlan::Serial),
        "parallel" => Ok(JobPlan::Parallel),
        other => {
            let count: usize = other.parse().map_err(|_| {
                CliError::Usage(format!(
                    "jobs must be `serial`, `parallel`, or a thread count, got {other:?}"
                ))
            })?;
            match count {
                0 => Err(CliError::Usage("thread count must be positive".to_string())),
                1 => Ok(JobPlan::Serial),
                n => Ok(JobPlan::Threads(n)),
            }
        }
    }
}

fn override_trials(kind: &mut BenchKind, trials: Option<usize>) {
    if let Some(t) = trials {
        match kind {
            BenchKind::Phase(c) => c.trials = t,
            BenchKind::Rate(c) => c.trials = t,
            BenchKind::Comparison(c) => c.trials = t,
        }
    }
}

struct ReportFiles {
    json: String,
    summary_csv: String,
    plot_csv: String,
    stdout_line: String,
}

fn execute(kind: &BenchKind, jobs: Jobs) -> CliResult<ReportFiles> {
    Ok(match kind {
        BenchKind::Phase(config) => {
            let report = run_phase_transition(config, jobs)?;
            let line = format!(
                "phase: {} point(s), {} trial(s) each",
                report.points.len(),
                config.trials
            );
            ReportFiles {
                json: report.to_json()?,
                summary_csv: report.summary_csv(),
                plot_csv: report.plot_csv(),
                stdout_line: line,
            }
        }
        BenchKind::Rate(config) => {
            let report = run_rate_experiment(config, jobs)?;
            let slopes: Vec<String> = report
                .ladders
                .iter()
                .map(|l| format!("d={} slope {:.3}", l.d, l.fit.slope))
                .collect();
            ReportFiles {
                json: report.to_json()?,
                summary_csv: report.summary_csv(),
                plot_csv: report.plot_csv(),
                stdout_line: format!("rate: {}", slopes.join(", ")),
            }
        }
        BenchKind::Comparison(config) => {
            let report = run_estimator_comparison(config, jobs)?;
            let line = format!(
                "comparison: {} case(s), {} estimator(s)",
                report.cases.len(),
                config.estimators.len()
            );
            ReportFiles {
                json: report.to_json()?,
                summary_csv: report.summary_csv(),
                plot_csv: report.plot_csv(),
                stdout_line: line,
            }
        }
    })
}

fn write_text(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let started = epoch_seconds();
    let (text, origin) = if let Some(name) = &args.source.preset {
        let text = bench_preset(name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
        (text.to_string(), format!("preset {name}"))
    } else {
        let path = args.source.config.as_ref().expect("clap group");
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        (text, path.display().to_string())
    };
    let mut file = parse_bench_file(&text, &origin)?;
    check_schema_version(file.schema_version, &origin)?;
    override_trials(&mut file.kind, args.trials);

    let plan = parse_jobs(&args.jobs)?;
    let reports = match plan {
        JobPlan::Serial => execute(&file.kind, Jobs::Serial)?,
        JobPlan::Parallel => execute(&file.kind, Jobs::Parallel)?,
        JobPlan::Threads(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Data(format!("cannot build thread pool: {e}")))?;
            pool.install(|| execute(&file.kind, Jobs::Parallel))?
        }
    };

    let out_dir = crate::resolve_out_dir(args.out_dir.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    write_text(&out_dir, "report.json", &reports.json)?;
    write_text(&out_dir, "summary.csv", &reports.summary_csv)?;
    write_text(&out_dir, "plot.csv", &reports.plot_csv)?;

    let config = serde_json::to_value(&file)
        .map_err(|e| CliError::Data(format!("cannot serialize config: {e}")))?;
    RunManifest::new("bench", config, started).write(
        &out_dir,
        &["report.json", "summary.csv", "plot.csv"],
    )?;
    println!("{}", reports.stdout_line);
    print!("{}", reports.summary_csv);
    println!("wrote {}", out_dir.display());
    Ok(())
}
