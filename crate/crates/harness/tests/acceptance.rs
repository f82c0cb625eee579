//! Acceptance suite: one line per criterion.
//!
//! Exit status is 0 when every criterion passes or fails only as documented,
//! 3 otherwise. `STABLELIKE_ACCEPTANCE_STRICT=1` turns documented failures into
//! real ones; `STABLELIKE_ACCEPTANCE_ONLY=1,7,14` runs a subset.

use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;
use stablelike_harness::config::{BetaSpec, EpsilonSpec};
use stablelike_harness::{default_workers, execute, rerun, run_in, Experiment, ExperimentConfig, RunManifest};

const ROOT_SEED: u64 = 20_240_601;

const RANGE_SUB: (f64, f64) = (0.55, 0.85);
const RANGE_SUPER: (f64, f64) = (0.9, 1.05);
const RANGE_2D: (f64, f64) = (1.0, 1.4);
const GRAPH_1D_HALF_WIDTH: f64 = 0.12;
const GRAPH_1D_SUB: (f64, f64) = (0.9, 1.1);
const GRAPH_2D: (f64, f64) = (1.35, 1.65);
const VARIABLE_MIN_RANK: f64 = 0.3;
const VARIABLE_MAX_MAE: f64 = 0.2;
const VARIABLE_MARGIN: f64 = 0.05;
const PVAR_MIN_FRACTION: f64 = 0.9;
const RANGE_RUNTIME_SECS: f64 = 300.0;
const COUPLING_RUNTIME_SECS: f64 = 60.0;

struct Outcome {
    pass: bool,
    detail: String,
}

struct Criterion {
    id: u32,
    name: &'static str,
    /// Set for criteria that cannot pass as stated; the reason is printed with the verdict.
    known_failure: Option<&'static str>,
    run: fn(usize) -> Outcome,
}

fn config(exp: Experiment, beta: &str, n_paths: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(exp);
    c.beta = BetaSpec::Compact(beta.into());
    c.n_paths = n_paths;
    c.seed = ROOT_SEED;
    c
}

fn summary(c: &ExperimentConfig, workers: usize) -> Result<Value, String> {
    execute(c, workers).map(|o| o.summary).map_err(|e| e.to_string())
}

fn field(v: &Value, key: &str) -> f64 {
    v.pointer(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn failed(e: String) -> Outcome {
    Outcome {
        pass: false,
        detail: format!("error: {e}"),
    }
}

fn median_in_window(c: ExperimentConfig, workers: usize, window: (f64, f64)) -> Outcome {
    let start = Instant::now();
    let s = match summary(&c, workers) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let secs = start.elapsed().as_secs_f64();
    let m = field(&s, "/median_slope");
    Outcome {
        pass: within(m, window) && secs <= RANGE_RUNTIME_SECS,
        detail: format!(
            "median slope {m:.4} in [{:.4}, {:.4}] (q10 {:.3}, q90 {:.3}, {} paths, eps {:.2e}, {secs:.0} s)",
            window.0,
            window.1,
            field(&s, "/slope/q10"),
            field(&s, "/slope/q90"),
            field(&s, "/fitted"),
            field(&s, "/epsilon"),
        ),
    }
}

fn c1(w: usize) -> Outcome {
    median_in_window(config(Experiment::DimRange, "const:0.7", 200), w, RANGE_SUB)
}

fn c2(w: usize) -> Outcome {
    median_in_window(config(Experiment::DimRange, "const:1.5", 200), w, RANGE_SUPER)
}

fn c3(w: usize) -> Outcome {
    let mut c = config(Experiment::DimRange, "const:1.2", 200);
    c.d = 2;
    median_in_window(c, w, RANGE_2D)
}

fn c4(w: usize) -> Outcome {
    let target = 4.0 / 3.0;
    let a = median_in_window(
        config(Experiment::DimGraph, "const:1.5", 200),
        w,
        (target - GRAPH_1D_HALF_WIDTH, target + GRAPH_1D_HALF_WIDTH),
    );
    let b = median_in_window(config(Experiment::DimGraph, "const:0.7", 200), w, GRAPH_1D_SUB);
    Outcome {
        pass: a.pass && b.pass,
        detail: format!("beta 1.5: {}; beta 0.7: {}", a.detail, b.detail),
    }
}

fn c5(w: usize) -> Outcome {
    let mut c = config(Experiment::DimGraph, "const:1.5", 100);
    c.d = 2;
    median_in_window(c, w, GRAPH_2D)
}

fn c6(w: usize) -> Outcome {
    let mut c = config(Experiment::DimRange, "bump", 500);
    c.x0 = Some(vec![0.0]);
    c.interval = Some([0.5, 1.0]);
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let rank = field(&s, "/rank_correlation");
    let mae = field(&s, "/mean_absolute_error");
    let mean = field(&s, "/mean_estimate");
    let (lo, hi) = (field(&s, "/beta_min"), field(&s, "/beta_max"));
    let between = mean > lo + VARIABLE_MARGIN && mean < hi - VARIABLE_MARGIN;
    Outcome {
        pass: rank >= VARIABLE_MIN_RANK && mae <= VARIABLE_MAX_MAE && between,
        detail: format!(
            "rank correlation {rank:.3} >= {VARIABLE_MIN_RANK}, MAE {mae:.3} <= {VARIABLE_MAX_MAE}, \
             mean estimate {mean:.3} in ({:.2}, {:.2}) ({} paths on [0.5, 1])",
            lo + VARIABLE_MARGIN,
            hi - VARIABLE_MARGIN,
            field(&s, "/fitted"),
        ),
    }
}

fn c7(w: usize) -> Outcome {
    let mut c = config(Experiment::Couple, "bump", 1000);
    c.clamp = 1.0;
    c.index_drop = 0.05;
    let start = Instant::now();
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let secs = start.elapsed().as_secs_f64();
    let n = field(&s, "/n_paths") - field(&s, "/censored");
    let same = field(&s, "/identical_before_tau");
    let zero = field(&s, "/zero_discrepancy");
    Outcome {
        pass: n == 1000.0 && same == n && zero == n && secs <= COUPLING_RUNTIME_SECS,
        detail: format!("identical {same}/{n}, zero discrepancy {zero}/{n}, {secs:.1} s"),
    }
}

fn c8(w: usize) -> Outcome {
    let mut c = config(Experiment::Pvar, "const:1.2", 100);
    c.p_grid = vec![0.96, 1.44];
    c.depths = vec![15, 16, 17, 18];
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let stab = field(&s, "/fractions/1/stabilizes");
    let grow = field(&s, "/fractions/0/grows");
    let decel = field(&s, "/fractions/1/decelerates");
    Outcome {
        pass: stab >= PVAR_MIN_FRACTION && grow >= PVAR_MIN_FRACTION,
        detail: format!(
            "V_1.44 non-increasing {:.0}%, V_0.96 growing {:.0}% (need {:.0}%); \
             V_1.44 increments non-increasing {:.0}%",
            100.0 * stab,
            100.0 * grow,
            100.0 * PVAR_MIN_FRACTION,
            100.0 * decel,
        ),
    }
}

fn c9(w: usize) -> Outcome {
    let mut c = config(Experiment::Sojourn, "const:1.5", 20_000);
    c.a = 1.0 / 256.0;
    c.s = 1.0 / 256.0;
    c.t0 = 0.0;
    c.horizon = 1.0 / 256.0;
    c.lambdas = vec![12.0, 24.0, 48.0];
    c.tail_slack = 1.5;
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let tail: Vec<String> = s["tail"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|r| format!("lambda {}: {:.4} <= {:.4}", r["lambda"], field(r, "/empirical"), field(r, "/allowed")))
        .collect();
    Outcome {
        pass: s["passed"] == Value::Bool(true),
        detail: tail.join(", "),
    }
}

fn symbol_summary(w: usize) -> Result<Value, String> {
    summary(&config(Experiment::SymbolCheck, "bump", 1), w)
}

fn c10(w: usize) -> Outcome {
    let s = match symbol_summary(w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let (ca, fo, pw) = (
        field(&s, "/c_alpha_max_rel_err"),
        field(&s, "/fourier_max_rel_err"),
        field(&s, "/plane_wave_max_rel_err"),
    );
    use stablelike_harness::experiments::{C_ALPHA_TOL, FOURIER_TOL, PLANE_WAVE_TOL};
    Outcome {
        pass: ca <= C_ALPHA_TOL && fo <= FOURIER_TOL && pw <= PLANE_WAVE_TOL,
        detail: format!("C_alpha {ca:.1e} <= {C_ALPHA_TOL:.0e}, Fourier {fo:.1e} <= {FOURIER_TOL:.0e}, plane waves {pw:.1e} <= {PLANE_WAVE_TOL:.0e}"),
    }
}

fn c11(w: usize) -> Outcome {
    let mut c = config(Experiment::GeneratorCheck, "const:1.5", 100_000);
    c.h = 1e-3;
    c.bump_radius = 1.0;
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    Outcome {
        pass: s["passed"] == Value::Bool(true),
        detail: format!(
            "MC {:.4} vs quadrature {:.4}: {:.2} combined SE (limit {}), eps {:.1e}",
            field(&s, "/estimate"),
            field(&s, "/generator"),
            field(&s, "/z"),
            stablelike_harness::experiments::GENERATOR_Z,
            field(&s, "/epsilon"),
        ),
    }
}

fn c12(w: usize) -> Outcome {
    let s = match symbol_summary(w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let g = field(&s, "/growth_max_rel_err");
    let lip = s["lipschitz_pass"] == Value::Bool(true);
    use stablelike_harness::experiments::GROWTH_TOL;
    Outcome {
        pass: lip && g <= GROWTH_TOL && s["lipschitz_pairs"] == 20,
        detail: format!("Lipschitz bound on {} pairs: {lip}; growth integral {g:.1e} <= {GROWTH_TOL:.0e}", s["lipschitz_pairs"]),
    }
}

fn c13(w: usize) -> Outcome {
    let mut c = config(Experiment::HeatKernel, "const:1.5", 100_000);
    c.t_grid = vec![0.01, 0.04, 0.16];
    let s = match summary(&c, w) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let slope = field(&s, "/slope");
    let floor = field(&s, "/predicted_slope") - 0.15;
    Outcome {
        pass: slope >= floor,
        detail: format!("log sup density slope {slope:.4} >= {floor:.4} (eps {:.1e})", field(&s, "/epsilon")),
    }
}

/// Small instances of every experiment, so the whole suite stays quick.
fn determinism_configs() -> Vec<ExperimentConfig> {
    Experiment::ALL
        .into_iter()
        .map(|e| {
            let mut c = config(e, "bump", 24);
            c.epsilon = EpsilonSpec::Fixed(1e-3);
            match e {
                Experiment::Simulate => c.binary = true,
                Experiment::DimGraph => c.d = 2,
                Experiment::Pvar => c.depths = vec![8, 9, 10, 11],
                Experiment::Sojourn => c.beta = BetaSpec::Compact("const:1.5".into()),
                Experiment::SymbolCheck => c.lipschitz_pairs = 5,
                Experiment::GeneratorCheck => c.n_paths = 2000,
                Experiment::HeatKernel => {
                    c.n_paths = 10_000;
                    c.epsilon = EpsilonSpec::Fixed(1e-2);
                }
                _ => {}
            }
            c
        })
        .collect()
}

fn c14(_: usize) -> Outcome {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let mut problems = Vec::new();
    let mut compared = 0usize;
    for c in determinism_configs() {
        let name = c.experiment.name();
        let one = run_in(&c, 1, &tmp.path().join(format!("{name}-w1")));
        let eight = run_in(&c, 8, &tmp.path().join(format!("{name}-w8")));
        let (one, eight) = match (one, eight) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let csv = one.outputs.iter().filter(|o| o.name.ends_with(".csv")).count();
        if csv == 0 {
            problems.push(format!("{name}: no CSV outputs"));
        }
        compared += csv;
        let across = one.csv_mismatches(&eight);
        if !across.is_empty() {
            problems.push(format!("{name} 1 vs 8 workers: {}", across.join(" ")));
        }
        let manifest_path = tmp.path().join(format!("{name}-w8")).join("manifest.json");
        let replayed = RunManifest::load(&manifest_path)
            .and_then(|m| rerun(&m, 8, &tmp.path().join(format!("{name}-rerun"))));
        match replayed {
            Ok((_, diff)) if diff.is_empty() => {}
            Ok((_, diff)) => problems.push(format!("{name} rerun: {}", diff.join(" "))),
            Err(e) => problems.push(format!("{name} rerun: {e}")),
        }
    }
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{compared} CSV digests identical at 1 and 8 workers and on manifest re-runs, all 9 experiments")
        } else {
            problems.join("; ")
        },
    }
}

const PVAR_NOTE: &str = "dyadic V_p of a pure-jump path increases toward the jump sum under refinement for every p";

fn criteria() -> Vec<Criterion> {
    let c = |id, name, run| Criterion {
        id,
        name,
        known_failure: None,
        run,
    };
    vec![
        c(1, "range dimension, beta 0.7", c1 as fn(usize) -> Outcome),
        c(2, "range dimension, beta 1.5", c2),
        c(3, "range dimension, d = 2, beta 1.2", c3),
        c(4, "graph dimension, d = 1", c4),
        c(5, "graph dimension, d = 2, beta 1.5", c5),
        c(6, "variable index prediction", c6),
        c(7, "coupling exactness", c7),
        Criterion {
            known_failure: Some(PVAR_NOTE),
            ..c(8, "p-variation dichotomy", c8)
        },
        c(9, "sojourn tail", c9),
        c(10, "symbol numerics", c10),
        c(11, "generator consistency", c11),
        c(12, "Lipschitz and growth integrals", c12),
        c(13, "heat-kernel bound", c13),
        c(14, "determinism", c14),
    ]
}

fn main() -> ExitCode {
    let strict = std::env::var("STABLELIKE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let only: Option<Vec<u32>> = std::env::var("STABLELIKE_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let workers = default_workers();
    let mut unexpected = 0;
    let mut known = 0;
    let mut ran = 0;
    let total = Instant::now();
    for cr in criteria() {
        if only.as_ref().is_some_and(|o| !o.contains(&cr.id)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = (cr.run)(workers);
        let secs = start.elapsed().as_secs_f64();
        let verdict = match (out.pass, cr.known_failure) {
            (true, _) => "PASS".to_string(),
            (false, Some(why)) if !strict => {
                known += 1;
                format!("FAIL (expected: {why})")
            }
            (false, _) => {
                unexpected += 1;
                "FAIL".to_string()
            }
        };
        println!("criterion {:>2} [{}]: {verdict}: {} [{secs:.1} s]", cr.id, cr.name, out.detail);
    }
    println!(
        "acceptance: {} of {ran} passed, {known} expected failures, {unexpected} unexpected failures, {:.0} s",
        ran - known - unexpected,
        total.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
