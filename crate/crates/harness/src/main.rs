use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stablelike_harness::config::{BetaSpec, EpsilonSpec};
use stablelike_harness::validate::{has_errors, validate};
use stablelike_harness::{
    default_workers, output_dir_for, rerun, run, Experiment, ExperimentConfig, HarnessError, HarnessResult,
    RunManifest, OUTPUT_DIR_ENV,
};

/// Simulate stable-like jump processes and run the dimension, variation,
/// sojourn, coupling and symbol experiments.
#[derive(Parser)]
#[command(name = "stablelike", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output base directory; the run writes to <base>/<experiment>-s<seed>.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a config and list every diagnostic.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a manifest and compare CSV digests (exit 3 on any difference).
    Rerun {
        manifest: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Simulate paths and write them out.
    Simulate(ExpArgs),
    /// Box-counting dimension of the range.
    DimRange(ExpArgs),
    /// Box-counting dimension of the graph.
    DimGraph(ExpArgs),
    /// Dyadic p-variation profiles.
    Pvar(ExpArgs),
    /// Sojourn times and their exponential tail bound.
    Sojourn(ExpArgs),
    /// Coupled original and clamped processes on one stream.
    Couple(ExpArgs),
    /// Symbol, Fourier, Lipschitz and growth-integral checks.
    SymbolCheck(ExpArgs),
    /// Monte Carlo generator against quadrature.
    GeneratorCheck(ExpArgs),
    /// Transition-density growth against t^(-d/alpha).
    HeatKernel(ExpArgs),
}

/// Flags mirror the config fields; any flag given overrides `--config`.
#[derive(Args, Clone)]
struct ExpArgs {
    /// Base config; the subcommand's experiment replaces its `experiment` field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    dump_config: bool,
    /// Index function: const:<v>, bump, bump:<floor>,<height>,<width>, clamp:<a>:<base>.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<f64>,
    /// `auto` or a cutoff in (0, 1).
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    index_drop: Option<f64>,
    /// Clamp level a of the coupled process.
    #[arg(long)]
    clamp: Option<f64>,
    /// Range scales as dyadic exponents: coarse,fine.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    scales: Option<Vec<i32>>,
    #[arg(long)]
    drop_coarse: Option<usize>,
    #[arg(long)]
    drop_fine: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    interval: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<u32>>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    tail_slack: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bump_center: Option<Vec<f64>>,
    #[arg(long)]
    bump_radius: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    xi_grid: Option<Vec<f64>>,
    #[arg(long)]
    lipschitz_pairs: Option<usize>,
    #[arg(long)]
    write_paths: Option<bool>,
    /// Also write binary paths and streams.
    #[arg(long)]
    binary: bool,
    /// Stream file to replay (couple only).
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(flatten)]
    flags: RunFlags,
}

macro_rules! set {
    ($cfg:ident, $args:ident; $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

impl ExpArgs {
    fn build(&self, experiment: Experiment) -> HarnessResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(experiment),
        };
        c.experiment = experiment;
        set!(c, self; d, horizon, n_paths, seed, index_drop, clamp, drop_coarse, drop_fine,
             p_grid, depths, t0, a, s, lambdas, tail_slack, t_grid, h, bump_radius, alphas,
             x_grid, xi_grid, lipschitz_pairs);
        if let Some(b) = &self.beta {
            c.beta = BetaSpec::Compact(b.clone());
        }
        if let Some(e) = &self.epsilon {
            c.epsilon = e.parse::<EpsilonSpec>()?;
        }
        if let Some(v) = &self.x0 {
            c.x0 = Some(v.clone());
        }
        if let Some(v) = &self.scales {
            c.scales = Some([v[0], v[1]]);
        }
        if let Some(v) = &self.interval {
            c.interval = Some([v[0], v[1]]);
        }
        if let Some(v) = self.depth {
            c.depth = Some(v);
        }
        if let Some(v) = &self.bump_center {
            c.bump_center = Some(v.clone());
        }
        if let Some(v) = self.write_paths {
            c.write_paths = Some(v);
        }
        if self.binary {
            c.binary = true;
        }
        if let Some(v) = &self.replay {
            c.replay = Some(v.clone());
        }
        Ok(c)
    }
}

fn execute(config: &ExperimentConfig, flags: &RunFlags) -> HarnessResult<()> {
    let workers = flags.workers.unwrap_or_else(default_workers);
    for d in validate(config) {
        eprintln!("{d}");
    }
    let (manifest, dir) = run(config, workers, flags.output_dir.as_deref())?;
    report(&manifest, &dir)
}

fn report(manifest: &RunManifest, dir: &Path) -> HarnessResult<()> {
    let summary = std::fs::read_to_string(dir.join(stablelike_harness::manifest::SUMMARY_FILE))?;
    print!("{summary}");
    eprintln!(
        "{}: {} files in {} ({:.1} s, {} workers, {} censored)",
        manifest.experiment,
        manifest.outputs.len(),
        dir.display(),
        manifest.wall_clock_seconds,
        manifest.workers,
        manifest.censored.len()
    );
    match manifest.passed {
        Some(false) => Err(HarnessError::CheckFailed(format!("{} check did not pass", manifest.experiment))),
        _ => Ok(()),
    }
}

fn dispatch(cli: Cli) -> HarnessResult<()> {
    let (experiment, args) = match cli.command {
        Command::Run { config, flags } => return execute(&ExperimentConfig::load(&config)?, &flags),
        Command::Validate { config } => {
            let c = ExperimentConfig::load(&config)?;
            let diags = validate(&c);
            for d in &diags {
                println!("{d}");
            }
            if has_errors(&diags) {
                return Err(HarnessError::Config(format!("{} has errors", config.display())));
            }
            println!("ok: {} diagnostics", diags.len());
            return Ok(());
        }
        Command::Rerun { manifest, flags } => {
            let m = RunManifest::load(&manifest)?;
            let workers = flags.workers.unwrap_or_else(default_workers);
            let dir = match &flags.output_dir {
                Some(base) => output_dir_for(&m.config, Some(base)),
                None => manifest.parent().unwrap_or(Path::new(".")).join("rerun"),
            };
            let (fresh, mismatches) = rerun(&m, workers, &dir)?;
            eprintln!("rerun written to {} ({:.1} s)", dir.display(), fresh.wall_clock_seconds);
            if !mismatches.is_empty() {
                return Err(HarnessError::CheckFailed(format!("digests differ: {}", mismatches.join(", "))));
            }
            println!("identical: {} CSV outputs", fresh.outputs.iter().filter(|o| o.name.ends_with(".csv")).count());
            return Ok(());
        }
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::DimRange(a) => (Experiment::DimRange, a),
        Command::DimGraph(a) => (Experiment::DimGraph, a),
        Command::Pvar(a) => (Experiment::Pvar, a),
        Command::Sojourn(a) => (Experiment::Sojourn, a),
        Command::Couple(a) => (Experiment::Couple, a),
        Command::SymbolCheck(a) => (Experiment::SymbolCheck, a),
        Command::GeneratorCheck(a) => (Experiment::GeneratorCheck, a),
        Command::HeatKernel(a) => (Experiment::HeatKernel, a),
    };
    let config = args.build(experiment)?;
    if args.dump_config {
        print!("{}", config.resolve()?.config.to_toml());
        return Ok(());
    }
    execute(&config, &args.flags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
