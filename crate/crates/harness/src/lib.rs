//! Experiment runner for the `stablelike` crate: TOML configs, a worker pool
//! over path seeds, CSV/JSON outputs and digest manifests.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Resolved};
pub use error::{HarnessError, HarnessResult};
pub use manifest::{OutputRecord, RunManifest};
pub use output::RunOutput;

use manifest::{MANIFEST_FILE, SEED_RULE, SUMMARY_FILE};
use validate::{has_errors, Severity};

/// Default output base when neither a flag, the config nor the environment names one.
pub const DEFAULT_OUTPUT_BASE: &str = "stablelike-out";
pub const OUTPUT_DIR_ENV: &str = "STABLELIKE_OUTPUT_DIR";

/// `<base>/<experiment>-s<seed>`, with the base taken from the flag, then the
/// config, then `STABLELIKE_OUTPUT_DIR`, then `stablelike-out`.
pub fn output_dir_for(config: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    let base = flag
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_BASE));
    base.join(format!("{}-s{}", config.experiment, config.seed))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Validates and resolves a config, failing with every error found.
pub fn prepare(config: &ExperimentConfig) -> HarnessResult<(Resolved, Vec<String>)> {
    let diags = validate::validate(config);
    if has_errors(&diags) {
        let list: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        return Err(HarnessError::Config(list.join("; ")));
    }
    let resolved = config.resolve()?;
    Ok((resolved, diags.iter().map(|d| d.to_string()).collect()))
}

/// Runs an experiment in memory without writing anything.
pub fn execute(config: &ExperimentConfig, workers: usize) -> HarnessResult<RunOutput> {
    let (resolved, _) = prepare(config)?;
    experiments::execute(&resolved, workers)
}

/// Runs an experiment, writes its outputs, `summary.json` and `manifest.json`
/// into `dir`, and returns the manifest.
pub fn run_in(config: &ExperimentConfig, workers: usize, dir: &Path) -> HarnessResult<RunManifest> {
    let (resolved, diagnostics) = prepare(config)?;
    let start = Instant::now();
    let out = experiments::execute(&resolved, workers)?;
    let elapsed = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(dir)?;
    let mut outputs = Vec::with_capacity(out.files.len() + 1);
    let summary = output::json_file(SUMMARY_FILE, &out.summary)?;
    for f in out.files.iter().chain(std::iter::once(&summary)) {
        if outputs.iter().any(|o: &OutputRecord| o.name == f.name) {
            return Err(HarnessError::Runtime(format!("duplicate output name {}", f.name)));
        }
        std::fs::write(dir.join(&f.name), &f.bytes)?;
        outputs.push(OutputRecord::of(&f.name, &f.bytes));
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: resolved.config.experiment.to_string(),
        root_seed: resolved.config.seed,
        config: resolved.config,
        auto_epsilon: resolved.auto_epsilon,
        seed_rule: SEED_RULE.to_string(),
        path_seeds: out.path_seeds,
        censored: out.censored,
        diagnostics,
        workers,
        wall_clock_seconds: elapsed,
        outputs,
        passed: out.passed,
    };
    output::json_file(MANIFEST_FILE, &manifest).and_then(|f| Ok(std::fs::write(dir.join(&f.name), &f.bytes)?))?;
    Ok(manifest)
}

/// [`run_in`] with the directory chosen by [`output_dir_for`].
pub fn run(config: &ExperimentConfig, workers: usize, output_flag: Option<&Path>) -> HarnessResult<(RunManifest, PathBuf)> {
    let dir = output_dir_for(config, output_flag);
    let manifest = run_in(config, workers, &dir)?;
    Ok((manifest, dir))
}

/// Re-runs the config recorded in a manifest into `dir` and lists the CSV
/// outputs whose digests changed.
pub fn rerun(manifest: &RunManifest, workers: usize, dir: &Path) -> HarnessResult<(RunManifest, Vec<String>)> {
    let fresh = run_in(&manifest.config, workers, dir)?;
    let mismatches = manifest.csv_mismatches(&fresh);
    Ok((fresh, mismatches))
}
