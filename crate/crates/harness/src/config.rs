//! Experiment configuration: one TOML document per run.
//!
//! Every field has a default, so a config can be as short as
//! `experiment = "dim-range"`. [`ExperimentConfig::resolve`] fills in the
//! derived values (`x0`, `ε`, output flags) and the result is what the manifest
//! records.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stablelike::{auto_epsilon, AutoEpsilon, EpsilonBudget, IndexDescriptor, IndexFunction};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    DimRange,
    DimGraph,
    Pvar,
    Sojourn,
    Couple,
    SymbolCheck,
    GeneratorCheck,
    HeatKernel,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::DimRange,
        Experiment::DimGraph,
        Experiment::Pvar,
        Experiment::Sojourn,
        Experiment::Couple,
        Experiment::SymbolCheck,
        Experiment::GeneratorCheck,
        Experiment::HeatKernel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::DimRange => "dim-range",
            Experiment::DimGraph => "dim-graph",
            Experiment::Pvar => "pvar",
            Experiment::Sojourn => "sojourn",
            Experiment::Couple => "couple",
            Experiment::SymbolCheck => "symbol-check",
            Experiment::GeneratorCheck => "generator-check",
            Experiment::HeatKernel => "heat-kernel",
        }
    }

    /// Whether the experiment simulates paths at all.
    pub fn uses_paths(self) -> bool {
        self != Experiment::SymbolCheck
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

/// `beta = "const:1.5"` or a full table such as
/// `beta = { kind = "rational_bump", floor = 0.6, height = 0.8, width = 1.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Compact(String),
    Full(IndexDescriptor),
}

impl BetaSpec {
    pub fn descriptor(&self) -> HarnessResult<IndexDescriptor> {
        match self {
            BetaSpec::Compact(s) => s.parse().map_err(|e| HarnessError::Config(format!("beta: {e}"))),
            BetaSpec::Full(d) => Ok(d.clone()),
        }
    }

    pub fn build(&self) -> HarnessResult<IndexFunction<f64>> {
        IndexFunction::from_descriptor(&self.descriptor()?).map_err(|e| HarnessError::Config(format!("beta: {e}")))
    }
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::Compact("const:1.5".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// `epsilon = "auto"` or a number in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Fixed(f64),
    Auto(AutoTag),
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::Auto(AutoTag::Auto)
    }
}

impl FromStr for EpsilonSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        if s.trim() == "auto" {
            return Ok(EpsilonSpec::Auto(AutoTag::Auto));
        }
        s.trim()
            .parse()
            .map(EpsilonSpec::Fixed)
            .map_err(|_| HarnessError::Config(format!("epsilon: expected `auto` or a number, got `{s}`")))
    }
}

fn default_beta() -> BetaSpec {
    BetaSpec::default()
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn index_drop() -> f64 {
    stablelike::sde::DEFAULT_INDEX_DROP
}
fn p_grid() -> Vec<f64> {
    (0..=30).map(|k| (80 + 4 * k) as f64 / 100.0).collect()
}
fn depths() -> Vec<u32> {
    vec![15, 16, 17, 18]
}
fn sojourn_scale() -> f64 {
    1.0 / 256.0
}
fn lambdas() -> Vec<f64> {
    vec![12.0, 24.0, 48.0]
}
fn tail_slack() -> f64 {
    1.5
}
fn t_grid() -> Vec<f64> {
    vec![0.01, 0.04, 0.16]
}
fn h() -> f64 {
    1e-3
}
fn alphas() -> Vec<f64> {
    vec![0.3, 0.7, 1.0, 1.3, 1.6, 1.9]
}
fn x_grid() -> Vec<f64> {
    vec![-1.0, -0.5, 0.0, 0.5, 1.0]
}
fn xi_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}
fn lipschitz_pairs() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_beta")]
    pub beta: BetaSpec,
    #[serde(default = "one_usize")]
    pub d: usize,
    /// Starting point; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "one_f64")]
    pub horizon: f64,
    #[serde(default)]
    pub epsilon: EpsilonSpec,
    #[serde(default = "one_usize")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// `ε_c` of the coupling stopping times.
    #[serde(default = "index_drop")]
    pub index_drop: f64,
    /// Clamp level `a` of the coupled process `β ∨ a`.
    #[serde(default = "one_f64")]
    pub clamp: f64,

    /// Range scales as dyadic exponents `[coarse, fine]`; per-path defaults when absent.
    #[serde(default)]
    pub scales: Option<[i32; 2]>,
    #[serde(default = "two")]
    pub drop_coarse: usize,
    #[serde(default = "two")]
    pub drop_fine: usize,
    /// Time interval for range estimates and predictions; the whole horizon when absent.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    /// Graph depth; per-path default when absent.
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default = "p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "depths")]
    pub depths: Vec<u32>,

    #[serde(default)]
    pub t0: f64,
    #[serde(default = "sojourn_scale")]
    pub a: f64,
    #[serde(default = "sojourn_scale")]
    pub s: f64,
    #[serde(default = "lambdas")]
    pub lambdas: Vec<f64>,
    /// Multiplicative slack on the sojourn tail bound.
    #[serde(default = "tail_slack")]
    pub tail_slack: f64,

    #[serde(default = "t_grid")]
    pub t_grid: Vec<f64>,

    /// Time step of the generator check.
    #[serde(default = "h")]
    pub h: f64,
    /// Centre of the generator-check bump; `x0` when absent.
    #[serde(default)]
    pub bump_center: Option<Vec<f64>>,
    #[serde(default = "one_f64")]
    pub bump_radius: f64,

    #[serde(default = "alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default = "xi_grid")]
    pub xi_grid: Vec<f64>,
    #[serde(default = "lipschitz_pairs")]
    pub lipschitz_pairs: usize,

    /// Write every simulated path; defaults to on for `simulate` only.
    #[serde(default)]
    pub write_paths: Option<bool>,
    /// Also write paths and streams in the binary format.
    #[serde(default)]
    pub binary: bool,
    /// Stream file replayed by `couple` (binary, or CSV with `ε` and `T` from this config).
    #[serde(default)]
    pub replay: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        // Every other field has a serde default.
        toml::from_str(&format!("experiment = \"{experiment}\"")).expect("defaults deserialize")
    }

    pub fn from_toml(text: &str) -> HarnessResult<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn x0_or_origin(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![0.0; self.d])
    }

    /// Horizon actually simulated: the generator check runs to `h`, the heat
    /// kernel to the last time of its grid.
    pub fn sim_horizon(&self) -> f64 {
        match self.experiment {
            Experiment::GeneratorCheck => self.h,
            Experiment::HeatKernel => self.t_grid.iter().copied().fold(0.0, f64::max),
            _ => self.horizon,
        }
    }

    /// Materializes every derived default. Fails only on inputs that prevent
    /// resolution; [`crate::validate`] reports the rest.
    pub fn resolve(&self) -> HarnessResult<Resolved> {
        let beta = self.beta.build()?;
        let mut config = self.clone();
        config.beta = BetaSpec::Full(beta.descriptor());
        config.x0 = Some(self.x0_or_origin());
        config.write_paths = Some(self.write_paths.unwrap_or(self.experiment == Experiment::Simulate));
        if self.experiment == Experiment::GeneratorCheck && self.bump_center.is_none() {
            config.bump_center = config.x0.clone();
        }
        let auto = match self.epsilon {
            EpsilonSpec::Fixed(_) => None,
            EpsilonSpec::Auto(_) => {
                let a = auto_epsilon(
                    beta.beta_max(),
                    self.sim_horizon(),
                    self.n_paths,
                    &EpsilonBudget::default(),
                )
                .map_err(|e| HarnessError::Config(format!("epsilon: {e}")))?;
                config.epsilon = EpsilonSpec::Fixed(a.epsilon);
                Some(AutoEpsilonRecord::from(a))
            }
        };
        Ok(Resolved {
            config,
            beta,
            auto_epsilon: auto,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoEpsilonRecord {
    pub epsilon: f64,
    pub target_epsilon: f64,
    pub budget_limited: bool,
    pub truncation_bound: f64,
}

impl From<AutoEpsilon> for AutoEpsilonRecord {
    fn from(a: AutoEpsilon) -> Self {
        Self {
            epsilon: a.epsilon,
            target_epsilon: a.target_epsilon,
            budget_limited: a.budget_limited,
            truncation_bound: a.truncation_bound,
        }
    }
}

/// A config with every default materialized, plus the built index function.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub beta: IndexFunction<f64>,
    pub auto_epsilon: Option<AutoEpsilonRecord>,
}

impl Resolved {
    pub fn epsilon(&self) -> f64 {
        match self.config.epsilon {
            EpsilonSpec::Fixed(e) => e,
            EpsilonSpec::Auto(_) => unreachable!("resolved configs carry a numeric epsilon"),
        }
    }

    pub fn x0(&self) -> &[f64] {
        self.config.x0.as_deref().expect("resolved")
    }

    pub fn write_paths(&self) -> bool {
        self.config.write_paths.unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"dim-range\"").unwrap();
        assert_eq!(c.experiment, Experiment::DimRange);
        assert_eq!(c.d, 1);
        assert_eq!(c.epsilon, EpsilonSpec::Auto(AutoTag::Auto));
        assert_eq!(c, ExperimentConfig::new(Experiment::DimRange));
    }

    #[test]
    fn beta_forms() {
        let c = ExperimentConfig::from_toml("experiment = \"simulate\"\nbeta = \"bump\"").unwrap();
        assert_eq!(c.beta.descriptor().unwrap(), IndexDescriptor::default_bump());
        let c = ExperimentConfig::from_toml(
            "experiment = \"simulate\"\nbeta = { kind = \"rational_bump\", floor = 0.6, height = 0.8, width = 1.0 }",
        )
        .unwrap();
        assert_eq!(c.beta.descriptor().unwrap(), IndexDescriptor::default_bump());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_toml("experiment = \"simulate\"\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"nope\"").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = ExperimentConfig::new(Experiment::DimGraph);
        c.n_paths = 400;
        let r = c.resolve().unwrap();
        assert!(r.auto_epsilon.as_ref().unwrap().budget_limited);
        assert_eq!(r.epsilon(), 2e-6);
        let text = r.config.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, r.config);
        // Resolving a resolved config is the identity.
        assert_eq!(back.resolve().unwrap().config, r.config);
    }

    #[test]
    fn epsilon_parsing() {
        assert_eq!("auto".parse::<EpsilonSpec>().unwrap(), EpsilonSpec::Auto(AutoTag::Auto));
        assert_eq!("1e-4".parse::<EpsilonSpec>().unwrap(), EpsilonSpec::Fixed(1e-4));
        assert!("x".parse::<EpsilonSpec>().is_err());
    }
}
