//! Config diagnostics. Errors stop a run; warnings are reported and recorded.

use std::fmt;

use serde::Serialize;
use stablelike::fractal::boxcount::{displacement_scale, resolution_floor, MAX_GRAPH_DEPTH};
use stablelike::fractal::kde::MIN_KDE_SAMPLES;
use stablelike::fractal::pvar::MAX_PVAR_DEPTH;
use stablelike::sde::truncation_bound_for;
use stablelike::symbol::GUARD_BAND;

use crate::config::{EpsilonSpec, Experiment, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Expected event count above which a batch is reported as infeasible.
pub const INFEASIBLE_EVENTS: f64 = 1e11;
/// Expected events per path above which memory becomes a concern (about 64 bytes each).
pub const LARGE_PATH_EVENTS: f64 = 5e7;
/// Paths beyond this count are not worth writing out individually.
pub const MANY_PATH_FILES: usize = 1000;

#[derive(Default)]
struct Report(Vec<Diagnostic>);

impl Report {
    fn error(&mut self, field: &'static str, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            field,
            message: message.into(),
        });
    }

    fn warn(&mut self, field: &'static str, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Warning,
            field,
            message: message.into(),
        });
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Checks every field and cross-field constraint, listing all problems found.
pub fn validate(c: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut r = Report::default();
    let exp = c.experiment;

    let beta = match c.beta.build() {
        Ok(b) => Some(b),
        Err(e) => {
            r.error("beta", e.to_string());
            None
        }
    };
    if let Some(b) = &beta {
        let (lo, hi) = GUARD_BAND;
        if b.beta_max() > hi || b.beta_min() < lo {
            r.warn(
                "beta",
                format!(
                    "range [{}, {}] reaches outside [{lo}, {hi}]: near the guard band, C_alpha quadrature is unstable",
                    b.beta_min(),
                    b.beta_max()
                ),
            );
        }
    }

    if c.d == 0 {
        r.error("d", "dimension must be >= 1");
    }
    if let Some(x0) = &c.x0 {
        if x0.len() != c.d {
            r.error("x0", format!("has {} coordinates but d = {}", x0.len(), c.d));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            r.error("x0", "coordinates must be finite");
        }
    }
    if !(c.horizon > 0.0 && c.horizon.is_finite()) {
        r.error("horizon", "must be positive and finite");
    }
    if c.n_paths == 0 {
        r.error("n_paths", "must be >= 1");
    }
    if !(c.index_drop > 0.0) {
        r.error("index_drop", "must be > 0");
    }

    let horizon = c.sim_horizon();
    let eps = match c.epsilon {
        EpsilonSpec::Fixed(e) if !(e > 0.0 && e < 1.0) => {
            r.error("epsilon", format!("must lie in (0, 1), got {e}"));
            None
        }
        EpsilonSpec::Fixed(e) => Some(e),
        EpsilonSpec::Auto(_) => c.resolve().ok().map(|res| res.epsilon()),
    };

    if let (Some(e), Some(b), true) = (eps, &beta, exp.uses_paths()) {
        let per_path = horizon / e;
        let total = per_path * c.n_paths as f64;
        if total > INFEASIBLE_EVENTS {
            r.warn(
                "epsilon",
                format!("~{total:.1e} events over {} paths: infeasible", c.n_paths),
            );
        }
        if per_path > LARGE_PATH_EVENTS {
            r.warn(
                "epsilon",
                format!("~{per_path:.1e} events per path: about {:.1} GB each", per_path * 64.0 / 1e9),
            );
        }
        if let Ok(bound) = truncation_bound_for(b.beta_max(), e, horizon) {
            if bound > 1e-2 * horizon {
                r.warn(
                    "epsilon",
                    format!("truncation second-moment bound {bound:.3e} exceeds 1% of the horizon"),
                );
            }
        }
        if exp == Experiment::DimRange {
            if let Some([_, fine]) = c.scales {
                let floor = resolution_floor(per_path as usize, displacement_scale(e, b.beta_max()));
                if 2f64.powi(-fine) <= floor {
                    r.warn(
                        "scales",
                        format!("finest scale 2^-{fine} is below the event resolution {floor:.2e}: slope bias toward 0"),
                    );
                }
            }
        }
        if exp == Experiment::DimGraph {
            if let Some(depth) = c.depth {
                if 2f64.powi(depth as i32) > per_path {
                    r.warn(
                        "depth",
                        format!("2^{depth} time boxes exceed the ~{per_path:.0} events per path: slope bias"),
                    );
                }
            }
        }
    }

    if let Some([coarse, fine]) = c.scales {
        if coarse >= fine {
            r.error("scales", "need coarse < fine exponents");
        }
    }
    if let Some([a, b]) = c.interval {
        if !(0.0 <= a && a < b && b <= c.horizon) {
            r.error("interval", format!("[{a}, {b}] is not a sub-interval of [0, {}]", c.horizon));
        }
    }
    if c.write_paths == Some(true) && c.n_paths > MANY_PATH_FILES {
        r.warn("write_paths", format!("{} path files will be written", c.n_paths));
    }

    match exp {
        Experiment::Simulate => {}
        Experiment::DimRange => {
            if c.d > 4 {
                r.error("d", "range box counting supports d <= 4");
            }
        }
        Experiment::DimGraph => {
            if c.d > 4 {
                r.error("d", "graph box counting supports d <= 4");
            }
            if c.depth.is_some_and(|j| j > MAX_GRAPH_DEPTH) {
                r.error("depth", format!("must be <= {MAX_GRAPH_DEPTH}"));
            }
            if c.interval.is_some() {
                r.error("interval", "graph estimates use the whole horizon");
            }
        }
        Experiment::Pvar => {
            if c.p_grid.is_empty() || c.p_grid.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                r.error("p_grid", "needs positive exponents");
            }
            if c.depths.iter().any(|&j| j > MAX_PVAR_DEPTH) {
                r.error("depths", format!("must be <= {MAX_PVAR_DEPTH}"));
            }
            if c.depths.len() < 3 {
                r.warn("depths", "fewer than three depths: no stabilization verdict possible");
            }
        }
        Experiment::Sojourn => {
            if !(c.a >= 0.0 && c.s >= 0.0 && c.t0 >= 0.0) {
                r.error("a, s, t0", "must be non-negative");
            }
            if c.t0 + c.s > c.horizon {
                r.error("s", format!("[t0, t0 + s] = [{}, {}] exceeds the horizon", c.t0, c.t0 + c.s));
            }
            if let Some(b) = &beta {
                if !(b.beta_min() > 1.0) {
                    r.error("beta", "the sojourn tail bound needs beta_min > 1");
                }
            }
            if c.lambdas.is_empty() {
                r.error("lambdas", "needs at least one value");
            }
        }
        Experiment::Couple => {
            if !(c.clamp > 0.0 && c.clamp < 2.0) {
                r.error("clamp", "must lie in (0, 2)");
            }
            if let Some(path) = &c.replay {
                if !path.exists() {
                    r.error("replay", format!("{} does not exist", path.display()));
                }
                if c.n_paths != 1 {
                    r.warn("n_paths", "a replay drives exactly one coupled pair");
                }
            }
        }
        Experiment::SymbolCheck => {
            if !(1..=3).contains(&c.d) {
                r.error("d", "the generator quadrature supports d <= 3");
            }
            if c.alphas.iter().any(|a| !(GUARD_BAND.0..=GUARD_BAND.1).contains(a)) {
                r.error("alphas", format!("must lie in [{}, {}]", GUARD_BAND.0, GUARD_BAND.1));
            }
            if c.xi_grid.iter().any(|&v| v == 0.0 || !v.is_finite()) {
                r.error("xi_grid", "frequencies must be finite and non-zero");
            }
        }
        Experiment::GeneratorCheck => {
            if !(1..=3).contains(&c.d) {
                r.error("d", "the generator quadrature supports d <= 3");
            }
            if !(c.h > 0.0 && c.h.is_finite()) {
                r.error("h", "must be positive");
            }
            if !(c.bump_radius > 0.0) {
                r.error("bump_radius", "must be positive");
            }
            if c.bump_center.as_ref().is_some_and(|v| v.len() != c.d) {
                r.error("bump_center", "needs d coordinates");
            }
        }
        Experiment::HeatKernel => {
            if c.d != 1 {
                r.error("d", "the heat-kernel check is one-dimensional");
            }
            if c.n_paths < MIN_KDE_SAMPLES {
                r.error("n_paths", format!("density estimates need >= {MIN_KDE_SAMPLES} paths"));
            }
            if c.t_grid.len() < 2 || c.t_grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                r.error("t_grid", "needs at least two times in (0, 1)");
            }
        }
    }
    r.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(d: &[Diagnostic], sev: Severity) -> Vec<&'static str> {
        d.iter().filter(|x| x.severity == sev).map(|x| x.field).collect()
    }

    #[test]
    fn defaults_are_clean() {
        for e in Experiment::ALL {
            let mut c = ExperimentConfig::new(e);
            if e == Experiment::HeatKernel {
                c.n_paths = MIN_KDE_SAMPLES;
            }
            let d = validate(&c);
            assert!(!has_errors(&d), "{e}: {d:?}");
        }
    }

    #[test]
    fn tiny_epsilon_many_paths_is_infeasible() {
        let mut c = ExperimentConfig::new(Experiment::Simulate);
        c.epsilon = EpsilonSpec::Fixed(1e-9);
        c.n_paths = 10_000;
        let d = validate(&c);
        assert!(d.iter().any(|x| x.field == "epsilon" && x.message.contains("infeasible")));
        assert!(!has_errors(&d));
    }

    #[test]
    fn guard_band_warning() {
        let mut c = ExperimentConfig::new(Experiment::SymbolCheck);
        c.beta = crate::config::BetaSpec::Compact("const:1.99".into());
        let d = validate(&c);
        assert!(d.iter().any(|x| x.field == "beta" && x.message.contains("guard band")));
    }

    #[test]
    fn scales_below_resolution_warn() {
        let mut c = ExperimentConfig::new(Experiment::DimRange);
        c.epsilon = EpsilonSpec::Fixed(1e-3);
        c.scales = Some([0, 16]);
        let d = validate(&c);
        assert!(fields(&d, Severity::Warning).contains(&"scales"));
    }

    #[test]
    fn errors_are_listed_exhaustively() {
        let mut c = ExperimentConfig::new(Experiment::HeatKernel);
        c.d = 2;
        c.x0 = Some(vec![0.0]);
        c.horizon = -1.0;
        c.n_paths = 0;
        c.epsilon = EpsilonSpec::Fixed(2.0);
        c.t_grid = vec![0.5];
        let d = validate(&c);
        let errs = fields(&d, Severity::Error);
        for f in ["x0", "horizon", "n_paths", "epsilon", "d", "t_grid"] {
            assert!(errs.contains(&f), "missing {f}: {d:?}");
        }
    }
}
