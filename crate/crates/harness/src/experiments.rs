//! The named experiments. Each returns its tables in memory; nothing here
//! touches the filesystem except reading a replay stream.

use serde_json::json;
use stablelike::fractal::stats::{median, quantile_sorted};
use stablelike::fractal::{
    box_count_graph_with, box_count_range_with, default_graph_depth, default_range_scales, dimension_vs_prediction,
    displacement_scale, dyadic_scales, heat_kernel_from_samples, p_variation, path_prediction, sojourn, sojourn_tail,
    DimensionEstimate, DimensionKind, Kde, RangeOptions, WindowRule,
};
use stablelike::symbol::{
    apply_generator, beta_infinity, beta_infinity_probe, c_alpha, c_alpha_closed_form, c_alpha_table,
    growth_integral, lipschitz_quadrature_check, plane_wave_check, symbol, symbol_fourier_check, Bump, TestFunction,
};
use stablelike::{
    derive_seed, io, sample_stream, simulate, simulate_coupled, Error, JumpStream64, SamplePath64, SimulationConfig64,
};

use crate::config::{Experiment, Resolved};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{flag, map_ordered, num, opt, OutputFile, RunOutput, Table};

/// Relative tolerance of the closed-form `C_α` comparison.
pub const C_ALPHA_TOL: f64 = 1e-6;
/// Tolerance of the direct Fourier quadrature of the symbol.
pub const FOURIER_TOL: f64 = 1e-4;
/// Relative tolerance of the plane-wave generator check.
pub const PLANE_WAVE_TOL: f64 = 1e-3;
pub const GROWTH_TOL: f64 = 1e-10;
/// Relative quadrature error assumed for `L f(x)` in the combined standard error.
pub const GENERATOR_QUAD_REL: f64 = 1e-3;
/// Standard errors allowed between the Monte Carlo and quadrature generators.
pub const GENERATOR_Z: f64 = 5.0;
/// Half-width of the cube the Lipschitz probe pairs are drawn from.
pub const LIPSCHITZ_BOX: f64 = 2.0;

/// Outcome of one path: an explosion is recorded, not fatal.
enum Slot<T> {
    Done(T),
    Censored(String),
}

struct Batch<T> {
    results: Vec<Option<T>>,
    censored: Vec<usize>,
    notes: Vec<String>,
}

impl<T> Batch<T> {
    fn done(&self) -> impl Iterator<Item = (usize, &T)> + '_ {
        self.results.iter().enumerate().filter_map(|(i, r)| r.as_ref().map(|v| (i, v)))
    }
}

struct Ctx {
    sim: SimulationConfig64,
    seeds: Vec<u64>,
    workers: usize,
}

impl Ctx {
    fn new(r: &Resolved, workers: usize) -> HarnessResult<Self> {
        let c = &r.config;
        let sim = SimulationConfig64::new(r.beta.clone(), r.x0().to_vec(), c.sim_horizon(), r.epsilon(), c.seed)?
            .with_index_drop(c.index_drop)?;
        let seeds = (0..c.n_paths as u64).map(|i| derive_seed(c.seed, i)).collect();
        Ok(Self { sim, seeds, workers })
    }

    fn stream(&self, i: usize) -> HarnessResult<JumpStream64> {
        Ok(sample_stream(self.sim.horizon, self.sim.epsilon, self.sim.dim(), self.seeds[i])?)
    }

    /// Simulates every path and hands it to `f`, in parallel, keeping seed order.
    fn each<T, F>(&self, f: F) -> HarnessResult<Batch<T>>
    where
        T: Send,
        F: Fn(usize, &JumpStream64, &SamplePath64) -> HarnessResult<T> + Sync + Send,
    {
        let slots = map_ordered(self.workers, self.seeds.len(), |i| -> HarnessResult<Slot<T>> {
            let stream = self.stream(i)?;
            match simulate(&self.sim, &stream) {
                Ok(path) => f(i, &stream, &path).map(Slot::Done),
                Err(e @ Error::Exploded { .. }) => Ok(Slot::Censored(e.to_string())),
                Err(e) => Err(e.into()),
            }
        })?;
        collect(slots)
    }
}

fn collect<T>(slots: Vec<HarnessResult<Slot<T>>>) -> HarnessResult<Batch<T>> {
    let mut batch = Batch {
        results: Vec::with_capacity(slots.len()),
        censored: Vec::new(),
        notes: Vec::new(),
    };
    for (i, s) in slots.into_iter().enumerate() {
        match s? {
            Slot::Done(v) => batch.results.push(Some(v)),
            Slot::Censored(msg) => {
                batch.censored.push(i);
                batch.notes.push(format!("path {i}: {msg}"));
                batch.results.push(None);
            }
        }
    }
    Ok(batch)
}

/// Runs the configured experiment on `workers` threads.
pub fn execute(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    match r.config.experiment {
        Experiment::Simulate => run_simulate(r, workers),
        Experiment::DimRange => run_dimension(r, workers, DimensionKind::Range),
        Experiment::DimGraph => run_dimension(r, workers, DimensionKind::Graph),
        Experiment::Pvar => run_pvar(r, workers),
        Experiment::Sojourn => run_sojourn(r, workers),
        Experiment::Couple => run_couple(r, workers),
        Experiment::SymbolCheck => run_symbol_check(r),
        Experiment::GeneratorCheck => run_generator_check(r, workers),
        Experiment::HeatKernel => run_heat_kernel(r, workers),
    }
}

fn status<T>(v: &Option<T>) -> &'static str {
    if v.is_some() {
        "ok"
    } else {
        "censored"
    }
}

fn seeds_and_censored<T>(ctx: &Ctx, batch: &Batch<T>) -> (Vec<u64>, Vec<usize>) {
    (ctx.seeds.clone(), batch.censored.clone())
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}{k}")).collect()
}

/// Median, 10% and 90% quantiles and mean of the finite values.
fn spread(values: &[f64]) -> serde_json::Value {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return json!({ "n": 0 });
    }
    v.sort_by(f64::total_cmp);
    json!({
        "n": v.len(),
        "median": median(&v),
        "q10": quantile_sorted(&v, 0.1),
        "q90": quantile_sorted(&v, 0.9),
        "mean": v.iter().sum::<f64>() / v.len() as f64,
        "min": v[0],
        "max": v[v.len() - 1],
    })
}

fn run_simulate(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let d = ctx.sim.dim();
    let write = r.write_paths();
    let binary = r.config.binary;
    struct Row {
        events: usize,
        jumps: usize,
        max_norm: f64,
        last: Vec<f64>,
        files: Vec<OutputFile>,
    }
    let batch = ctx.each(|i, stream, path| {
        let mut files = Vec::new();
        if write {
            let mut buf = Vec::new();
            io::write_path_csv(path, &mut buf)?;
            files.push(OutputFile {
                name: format!("path_{i}.csv"),
                bytes: buf,
            });
        }
        if binary {
            let mut buf = Vec::new();
            io::write_path_binary(path, &mut buf)?;
            files.push(OutputFile {
                name: format!("path_{i}.bin"),
                bytes: buf,
            });
            let mut buf = Vec::new();
            io::write_stream_binary(stream, &mut buf)?;
            files.push(OutputFile {
                name: format!("stream_{i}.bin"),
                bytes: buf,
            });
        }
        Ok(Row {
            events: stream.len(),
            jumps: path.jump_count(),
            max_norm: path.max_norm(),
            last: path.state(path.len() - 1).to_vec(),
            files,
        })
    })?;

    let mut header = vec!["path".to_string(), "seed".into(), "status".into(), "events".into(), "jumps".into(), "max_norm".into()];
    header.extend(coord_header("x_final_", d));
    let mut table = Table::new("paths.csv", &header)?;
    let mut files = Vec::new();
    let mut events = Vec::new();
    for (i, row) in batch.results.iter().enumerate() {
        let mut rec = vec![i.to_string(), ctx.seeds[i].to_string(), status(row).into()];
        match row {
            Some(row) => {
                events.push(row.events as f64);
                rec.extend([row.events.to_string(), row.jumps.to_string(), num(row.max_norm)]);
                rec.extend(row.last.iter().map(|&v| num(v)));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 3 + d)),
        }
        table.row(&rec)?;
    }
    files.push(table.finish()?);
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    for row in batch.results.into_iter().flatten() {
        files.extend(row.files);
    }
    let summary = json!({
        "experiment": "simulate",
        "n_paths": ctx.seeds.len(),
        "censored": censored.len(),
        "epsilon": ctx.sim.epsilon,
        "horizon": ctx.sim.horizon,
        "events": spread(&events),
        "notes": batch.notes,
    });
    Ok(RunOutput {
        files,
        summary,
        passed: None,
        path_seeds,
        censored,
    })
}

struct DimRow {
    estimate: Result<DimensionEstimate, String>,
    prediction: f64,
    n_points: usize,
}

fn run_dimension(r: &Resolved, workers: usize, kind: DimensionKind) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let c = &r.config;
    let d = ctx.sim.dim();
    let beta_max = r.beta.beta_max();
    let disp = displacement_scale(ctx.sim.epsilon, beta_max);
    let (start, end) = match (kind, c.interval) {
        (DimensionKind::Range, Some([a, b])) => (a, b),
        _ => (0.0, ctx.sim.horizon),
    };
    let batch = ctx.each(|_, _, path| {
        let n_points = path.entries_in(start, end)?.count();
        let fitted = match kind {
            DimensionKind::Range => {
                let scales = match c.scales {
                    Some([coarse, fine]) => dyadic_scales(coarse, fine),
                    None => default_range_scales(n_points, disp),
                };
                let rule = WindowRule {
                    drop_coarse: c.drop_coarse,
                    drop_fine: c.drop_fine,
                    ..WindowRule::for_resolution(n_points, disp)
                };
                let opts = RangeOptions {
                    window: rule,
                    offset: None,
                    interval: c.interval.map(|[a, b]| (a, b)),
                };
                box_count_range_with(path, &scales, &opts)
            }
            DimensionKind::Graph => {
                let depth = c.depth.unwrap_or_else(|| default_graph_depth(n_points));
                // The oscillation covering never saturates, so only the grid count is capped.
                let base = if d == 1 {
                    WindowRule::default()
                } else {
                    WindowRule::for_resolution(n_points, disp)
                };
                let rule = WindowRule {
                    drop_coarse: c.drop_coarse,
                    drop_fine: c.drop_fine,
                    ..base
                };
                box_count_graph_with(path, depth, &rule)
            }
        };
        let estimate = match fitted {
            Ok(e) => Ok(e),
            Err(e @ Error::InsufficientSamples { .. }) => Err(e.to_string()),
            Err(e) => return Err(e.into()),
        };
        Ok(DimRow {
            estimate,
            prediction: path_prediction(kind, path, &r.beta, start, end)?,
            n_points,
        })
    })?;

    let mut est = Table::new(
        "estimates.csv",
        [
            "path", "seed", "status", "slope", "intercept", "r2", "scale_min", "scale_max", "prediction",
            "poor_fit", "degenerate", "n_points",
        ],
    )?;
    let mut counts = Table::new("counts.csv", ["path", "scale", "count", "in_window"])?;
    let mut pairs = Vec::new();
    let mut notes = batch.notes.clone();
    let mut poor = 0usize;
    for (i, row) in batch.results.iter().enumerate() {
        let seed = ctx.seeds[i].to_string();
        let Some(row) = row else {
            est.row([i.to_string(), seed, "censored".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()])?;
            continue;
        };
        match &row.estimate {
            Ok(e) => {
                pairs.push((row.prediction, e.slope));
                poor += e.poor_fit as usize;
                est.row([
                    i.to_string(),
                    seed,
                    "ok".into(),
                    num(e.slope),
                    num(e.intercept),
                    num(e.fit_r2),
                    num(e.scale_window.0),
                    num(e.scale_window.1),
                    num(row.prediction),
                    flag(e.poor_fit),
                    flag(e.degenerate),
                    row.n_points.to_string(),
                ])?;
                for (k, (&s, &n)) in e.scales.iter().zip(&e.counts).enumerate() {
                    let inside = k >= e.window.0 && k < e.window.1 && s >= e.scale_window.0 && s <= e.scale_window.1;
                    counts.row([i.to_string(), num(s), n.to_string(), flag(inside)])?;
                }
            }
            Err(msg) => {
                notes.push(format!("path {i}: {msg}"));
                est.row([
                    i.to_string(),
                    seed,
                    "fit-failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    num(row.prediction),
                    String::new(),
                    String::new(),
                    row.n_points.to_string(),
                ])?;
            }
        }
    }
    let slopes: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let predictions: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let report = (!pairs.is_empty()).then(|| dimension_vs_prediction(&pairs)).transpose()?;
    let summary = json!({
        "experiment": c.experiment.name(),
        "kind": kind,
        "d": d,
        "n_paths": ctx.seeds.len(),
        "censored": batch.censored.len(),
        "fitted": pairs.len(),
        "poor_fits": poor,
        "epsilon": ctx.sim.epsilon,
        "interval": [start, end],
        "slope": spread(&slopes),
        "median_slope": median(&slopes),
        "prediction": spread(&predictions),
        "mean_absolute_error": report.as_ref().map(|r| r.mean_absolute_error),
        "rank_correlation": report.as_ref().and_then(|r| r.rank_correlation),
        "mean_estimate": report.as_ref().map(|r| r.mean_estimate),
        "mean_estimate_se": report.as_ref().map(|r| r.mean_estimate_se),
        "beta_min": r.beta.beta_min(),
        "beta_max": beta_max,
        "notes": notes,
    });
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    Ok(RunOutput {
        files: vec![est.finish()?, counts.finish()?],
        summary,
        passed: None,
        path_seeds,
        censored,
    })
}

fn run_pvar(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let c = &r.config;
    let batch = ctx.each(|_, _, path| {
        let profile = p_variation(path, &c.p_grid, &c.depths)?;
        let sup = path.sup_index_along(&r.beta, 0.0, ctx.sim.horizon)?;
        Ok((profile, sup))
    })?;
    let mut prof = Table::new("profile.csv", ["path", "p", "depth", "v_p"])?;
    let mut sums = Table::new("jump_sums.csv", ["path", "p", "s_p"])?;
    let mut est = Table::new("estimates.csv", ["path", "seed", "status", "p_hat", "p_hat_decelerating", "sup_beta"])?;
    let np = c.p_grid.len();
    let (mut stab, mut grow, mut decel) = (vec![0usize; np], vec![0usize; np], vec![0usize; np]);
    let mut p_hats = Vec::new();
    let mut p_decel = Vec::new();
    for (i, row) in batch.results.iter().enumerate() {
        let Some((profile, sup)) = row else {
            est.row([i.to_string(), ctx.seeds[i].to_string(), "censored".into(), String::new(), String::new(), String::new()])?;
            continue;
        };
        for (k, &p) in c.p_grid.iter().enumerate() {
            for (&j, &v) in profile.depths.iter().zip(&profile.v_values[k]) {
                prof.row([i.to_string(), num(p), j.to_string(), num(v)])?;
            }
            sums.row([i.to_string(), num(p), num(profile.s_values[k])])?;
            stab[k] += profile.stabilizes(k) as usize;
            grow[k] += profile.grows(k) as usize;
            decel[k] += profile.decelerates(k) as usize;
        }
        p_hats.extend(profile.p_hat);
        p_decel.extend(profile.p_hat_decelerating);
        est.row([
            i.to_string(),
            ctx.seeds[i].to_string(),
            "ok".into(),
            opt(profile.p_hat),
            opt(profile.p_hat_decelerating),
            num(*sup),
        ])?;
    }
    let n_ok = batch.done().count().max(1) as f64;
    let mut dich = Table::new("dichotomy.csv", ["p", "stabilizes", "grows", "decelerates"])?;
    let mut fractions = Vec::new();
    for (k, &p) in c.p_grid.iter().enumerate() {
        let (s, g, dc) = (stab[k] as f64 / n_ok, grow[k] as f64 / n_ok, decel[k] as f64 / n_ok);
        dich.row([num(p), num(s), num(g), num(dc)])?;
        fractions.push(json!({ "p": p, "stabilizes": s, "grows": g, "decelerates": dc }));
    }
    let summary = json!({
        "experiment": "pvar",
        "n_paths": ctx.seeds.len(),
        "censored": batch.censored.len(),
        "depths": c.depths,
        "epsilon": ctx.sim.epsilon,
        "p_hat": spread(&p_hats),
        "p_hat_undefined": batch.done().count() - p_hats.len(),
        "p_hat_decelerating": spread(&p_decel),
        "fractions": fractions,
        "notes": batch.notes,
    });
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    Ok(RunOutput {
        files: vec![prof.finish()?, sums.finish()?, est.finish()?, dich.finish()?],
        summary,
        passed: None,
        path_seeds,
        censored,
    })
}

fn run_sojourn(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let c = &r.config;
    let batch = ctx.each(|_, _, path| Ok(sojourn(path, c.t0, c.a, c.s)?.value))?;
    let mut table = Table::new("sojourn.csv", ["path", "seed", "status", "time"])?;
    for (i, v) in batch.results.iter().enumerate() {
        table.row([i.to_string(), ctx.seeds[i].to_string(), status(v).into(), opt(*v)])?;
    }
    let values: Vec<f64> = batch.results.iter().flatten().copied().collect();
    // The bound holds with the smallest index the path can see.
    let beta = r.beta.beta_min();
    let rows = sojourn_tail(&values, c.a, c.s, beta, &c.lambdas)?;
    let mut tail = Table::new("tail.csv", ["lambda", "threshold", "empirical", "bound", "allowed", "pass"])?;
    let mut passed = true;
    let mut out = Vec::new();
    for row in &rows {
        let allowed = c.tail_slack * row.bound;
        let ok = row.empirical <= allowed;
        passed &= ok;
        tail.row([num(row.lambda), num(row.threshold), num(row.empirical), num(row.bound), num(allowed), flag(ok)])?;
        out.push(json!({
            "lambda": row.lambda, "threshold": row.threshold, "empirical": row.empirical,
            "bound": row.bound, "allowed": allowed, "pass": ok,
        }));
    }
    let summary = json!({
        "experiment": "sojourn",
        "n_paths": ctx.seeds.len(),
        "censored": batch.censored.len(),
        "epsilon": ctx.sim.epsilon,
        "t0": c.t0, "a": c.a, "s": c.s,
        "beta": beta,
        "time": spread(&values),
        "tail": out,
        "passed": passed,
        "notes": batch.notes,
    });
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    Ok(RunOutput {
        files: vec![table.finish()?, tail.finish()?],
        summary,
        passed: Some(passed),
        path_seeds,
        censored,
    })
}

/// Reads a replay stream: binary when it carries the stream magic, CSV otherwise.
fn load_replay(r: &Resolved, path: &std::path::Path) -> HarnessResult<JumpStream64> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::Config(format!("replay {}: {e}", path.display())))?;
    if bytes.starts_with(io::STREAM_MAGIC) {
        Ok(io::read_stream_binary(bytes.as_slice())?)
    } else {
        Ok(io::read_stream_csv(
            bytes.as_slice(),
            r.epsilon(),
            r.config.sim_horizon(),
            r.config.seed,
        )?)
    }
}

fn run_couple(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let c = &r.config;
    type Rep = (usize, stablelike::CouplingReport<f64>);
    let (seeds, slots): (Vec<u64>, Vec<HarnessResult<Slot<Rep>>>) = match &c.replay {
        Some(file) => {
            let stream = load_replay(r, file)?;
            let sim = SimulationConfig64::new(
                r.beta.clone(),
                r.x0().to_vec(),
                stream.horizon(),
                stream.epsilon(),
                stream.seed(),
            )?
            .with_index_drop(c.index_drop)?;
            let slot = match simulate_coupled(&sim, c.clamp, &stream) {
                Ok((_, _, rep)) => Ok(Slot::Done((stream.len(), rep))),
                Err(e @ Error::Exploded { .. }) => Ok(Slot::Censored(e.to_string())),
                Err(e) => Err(e.into()),
            };
            (vec![stream.seed()], vec![slot])
        }
        None => {
            let ctx = Ctx::new(r, workers)?;
            let slots = map_ordered(workers, ctx.seeds.len(), |i| -> HarnessResult<Slot<Rep>> {
                let stream = ctx.stream(i)?;
                match simulate_coupled(&ctx.sim, c.clamp, &stream) {
                    Ok((_, _, rep)) => Ok(Slot::Done((stream.len(), rep))),
                    Err(e @ Error::Exploded { .. }) => Ok(Slot::Censored(e.to_string())),
                    Err(e) => Err(e.into()),
                }
            })?;
            (ctx.seeds.clone(), slots)
        }
    };
    let batch = collect(slots)?;
    let mut table = Table::new(
        "coupling.csv",
        [
            "path", "seed", "status", "events", "tau_x", "tau_xa", "tau_ge1", "tau_min", "tau",
            "max_discrepancy_before_tau", "identical_before_tau", "identical_before_tau_min",
        ],
    )?;
    let (mut identical, mut exact, mut stopped) = (0usize, 0usize, 0usize);
    for (i, row) in batch.results.iter().enumerate() {
        let Some((events, rep)) = row else {
            let mut rec = vec![i.to_string(), seeds[i].to_string(), "censored".into()];
            rec.extend(std::iter::repeat_n(String::new(), 9));
            table.row(&rec)?;
            continue;
        };
        identical += rep.identical_before_tau as usize;
        exact += (rep.max_discrepancy_before_tau == 0.0) as usize;
        stopped += rep.tau_min.is_some() as usize;
        table.row([
            i.to_string(),
            seeds[i].to_string(),
            "ok".into(),
            events.to_string(),
            opt(rep.tau_x),
            opt(rep.tau_xa),
            opt(rep.tau_ge1),
            opt(rep.tau_min),
            num(rep.tau),
            num(rep.max_discrepancy_before_tau),
            flag(rep.identical_before_tau),
            flag(rep.identical_before_tau_min),
        ])?;
    }
    let n_ok = batch.done().count();
    let passed = n_ok > 0 && identical == n_ok && exact == n_ok;
    let taus: Vec<f64> = batch.results.iter().flatten().map(|(_, r)| r.tau).collect();
    let summary = json!({
        "experiment": "couple",
        "n_paths": seeds.len(),
        "censored": batch.censored.len(),
        "clamp": c.clamp,
        "index_drop": c.index_drop,
        "replay": c.replay.as_ref().map(|p| p.display().to_string()),
        "identical_before_tau": identical,
        "zero_discrepancy": exact,
        "stopped_before_horizon": stopped,
        "tau": spread(&taus),
        "passed": passed,
        "notes": batch.notes,
    });
    Ok(RunOutput {
        files: vec![table.finish()?],
        summary,
        passed: Some(passed),
        path_seeds: seeds,
        censored: batch.censored,
    })
}

/// Point `v e₁` in `R^d`.
fn on_axis(v: f64, d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[0] = v;
    x
}

/// Frequency `v (1, ..., 1)/√d`, so off-axis directions are exercised in `d >= 2`.
fn diagonal(v: f64, d: usize) -> Vec<f64> {
    vec![v / (d as f64).sqrt(); d]
}

/// Uniform in `[0, 1)` from the `k`-th seed derived from `seed`.
fn unit(seed: u64, k: u64) -> f64 {
    (derive_seed(seed, k) >> 11) as f64 / (1u64 << 53) as f64
}

fn run_symbol_check(r: &Resolved) -> HarnessResult<RunOutput> {
    let c = &r.config;
    let d = c.d;
    let beta = &r.beta;
    let mut files = Vec::new();

    let mut ca = Table::new("c_alpha.csv", ["alpha", "quadrature", "closed_form", "rel_err", "pass"])?;
    let mut worst_c: f64 = 0.0;
    for &a in &c.alphas {
        let (q, cf) = (c_alpha(a)?, c_alpha_closed_form(a)?);
        let rel = (q - cf).abs() / cf;
        worst_c = worst_c.max(rel);
        ca.row([num(a), num(q), num(cf), num(rel), flag(rel <= C_ALPHA_TOL)])?;
    }
    files.push(ca.finish()?);
    let mut cache = Vec::new();
    io::write_c_alpha_csv(&c_alpha_table(&c.alphas)?, &mut cache)?;
    files.push(OutputFile {
        name: "c_alpha_table.csv".into(),
        bytes: cache,
    });

    let mut worst_f: Option<f64> = None;
    if d == 1 {
        let mut t = Table::new("fourier.csv", ["x", "xi", "beta", "symbol", "rel_err", "pass"])?;
        for &x in &c.x_grid {
            for &xi in &c.xi_grid {
                let q = symbol(&[x], &[xi], beta)?;
                let rel = symbol_fourier_check(&[x], xi, beta)?;
                worst_f = Some(worst_f.unwrap_or(0.0).max(rel));
                t.row([num(x), num(xi), num(q.beta), num(q.value), num(rel), flag(rel <= FOURIER_TOL)])?;
            }
        }
        files.push(t.finish()?);
    }

    let mut pw = Table::new("plane_wave.csv", ["x", "xi", "beta", "symbol", "rel_err", "pass"])?;
    let mut worst_p: f64 = 0.0;
    for &x in &c.x_grid {
        for &xi in &c.xi_grid {
            let (xv, kv) = (on_axis(x, d), diagonal(xi, d));
            let q = symbol(&xv, &kv, beta)?;
            let rel = plane_wave_check(&xv, &kv, beta)?;
            worst_p = worst_p.max(rel);
            pw.row([num(x), num(xi), num(q.beta), num(q.value), num(rel), flag(rel <= PLANE_WAVE_TOL)])?;
        }
    }
    files.push(pw.finish()?);

    let mut header = coord_header("x", d);
    header.extend(coord_header("y", d));
    header.extend(["lhs", "rhs", "pass"].map(String::from));
    let mut lip = Table::new("lipschitz.csv", &header)?;
    let mut lip_ok = true;
    for k in 0..c.lipschitz_pairs as u64 {
        let draw = |j: u64| LIPSCHITZ_BOX * (2.0 * unit(c.seed, 2 * d as u64 * k + j) - 1.0);
        let x: Vec<f64> = (0..d as u64).map(draw).collect();
        let y: Vec<f64> = (d as u64..2 * d as u64).map(draw).collect();
        let (lhs, rhs) = lipschitz_quadrature_check(&x, &y, beta)?;
        lip_ok &= lhs <= rhs;
        let mut rec: Vec<String> = x.iter().chain(&y).map(|&v| num(v)).collect();
        rec.extend([num(lhs), num(rhs), flag(lhs <= rhs)]);
        lip.row(&rec)?;
    }
    files.push(lip.finish()?);

    let mut gr = Table::new("growth.csv", ["x", "beta", "quadrature", "closed_form", "rel_err", "pass"])?;
    let mut worst_g: f64 = 0.0;
    for &x in &c.x_grid {
        let b = beta.eval(&on_axis(x, d));
        let (q, cf) = growth_integral(b)?;
        let rel = (q - cf).abs() / cf;
        worst_g = worst_g.max(rel);
        gr.row([num(x), num(b), num(q), num(cf), num(rel), flag(rel <= GROWTH_TOL)])?;
    }
    files.push(gr.finish()?);

    let scales: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
    let probe = beta_infinity_probe(beta, d, LIPSCHITZ_BOX, 64, &scales, 0.05)?;
    let mut bi = Table::new("beta_infinity.csv", ["xi", "ratio_above", "ratio_below"])?;
    for ((s, a), b) in probe.scales.iter().zip(&probe.above).zip(&probe.below) {
        bi.row([num(*s), num(*a), num(*b)])?;
    }
    files.push(bi.finish()?);

    let passed = worst_c <= C_ALPHA_TOL
        && worst_f.is_none_or(|w| w <= FOURIER_TOL)
        && worst_p <= PLANE_WAVE_TOL
        && lip_ok
        && worst_g <= GROWTH_TOL;
    let summary = json!({
        "experiment": "symbol-check",
        "d": d,
        "c_alpha_max_rel_err": worst_c,
        "fourier_max_rel_err": worst_f,
        "plane_wave_max_rel_err": worst_p,
        "lipschitz_pairs": c.lipschitz_pairs,
        "lipschitz_pass": lip_ok,
        "growth_max_rel_err": worst_g,
        "beta_infinity": beta_infinity(beta),
        "beta_infinity_bracketed": probe.brackets_beta_max(),
        "passed": passed,
    });
    Ok(RunOutput {
        files,
        summary,
        passed: Some(passed),
        path_seeds: Vec::new(),
        censored: Vec::new(),
    })
}

/// Monte Carlo estimate of `(E f(X_h) - f(x0)) / h` against `L f(x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorComparison {
    pub estimate: f64,
    pub mc_se: f64,
    pub generator: f64,
    pub combined_se: f64,
    pub z: f64,
}

impl GeneratorComparison {
    pub fn new(values: &[f64], f_x0: f64, h: f64, generator: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let estimate = (mean - f_x0) / h;
        let mc_se = (var / n).sqrt() / h;
        let combined_se = mc_se.hypot(GENERATOR_QUAD_REL * generator.abs());
        Self {
            estimate,
            mc_se,
            generator,
            combined_se,
            z: (estimate - generator).abs() / combined_se,
        }
    }

    pub fn passes(&self) -> bool {
        self.z <= GENERATOR_Z
    }
}

fn run_generator_check(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let c = &r.config;
    let bump = Bump {
        center: c.bump_center.clone().unwrap_or_else(|| r.x0().to_vec()),
        radius: c.bump_radius,
    };
    let batch = ctx.each(|_, _, path| Ok(bump.value(path.state(path.len() - 1))))?;
    let mut table = Table::new("values.csv", ["path", "seed", "status", "f_end"])?;
    for (i, v) in batch.results.iter().enumerate() {
        table.row([i.to_string(), ctx.seeds[i].to_string(), status(v).into(), opt(*v)])?;
    }
    let values: Vec<f64> = batch.results.iter().flatten().copied().collect();
    if values.len() < 2 {
        return Err(HarnessError::Runtime("fewer than two uncensored paths".into()));
    }
    let f_x0 = bump.value(r.x0());
    let generator = apply_generator(&bump, r.x0(), &r.beta)?;
    let cmp = GeneratorComparison::new(&values, f_x0, c.h, generator);
    let mut g = Table::new(
        "generator.csv",
        ["h", "n", "f_x0", "estimate", "mc_se", "generator", "combined_se", "z", "pass"],
    )?;
    g.row([
        num(c.h),
        values.len().to_string(),
        num(f_x0),
        num(cmp.estimate),
        num(cmp.mc_se),
        num(cmp.generator),
        num(cmp.combined_se),
        num(cmp.z),
        flag(cmp.passes()),
    ])?;
    let summary = json!({
        "experiment": "generator-check",
        "n_paths": ctx.seeds.len(),
        "censored": batch.censored.len(),
        "epsilon": ctx.sim.epsilon,
        "h": c.h,
        "f_x0": f_x0,
        "estimate": cmp.estimate,
        "mc_se": cmp.mc_se,
        "generator": generator,
        "combined_se": cmp.combined_se,
        "z": cmp.z,
        "passed": cmp.passes(),
        "notes": batch.notes,
    });
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    Ok(RunOutput {
        files: vec![table.finish()?, g.finish()?],
        summary,
        passed: Some(cmp.passes()),
        path_seeds,
        censored,
    })
}

fn run_heat_kernel(r: &Resolved, workers: usize) -> HarnessResult<RunOutput> {
    let ctx = Ctx::new(r, workers)?;
    let c = &r.config;
    let batch = ctx.each(|_, _, path| {
        c.t_grid
            .iter()
            .map(|&t| Ok(path.value_at(t)?[0]))
            .collect::<HarnessResult<Vec<f64>>>()
    })?;
    let samples: Vec<(f64, Vec<f64>)> = c
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, batch.results.iter().flatten().map(|v| v[k]).collect()))
        .collect();
    let alpha = r.beta.beta_min();
    let report = heat_kernel_from_samples(&samples, alpha)?;
    let mut table = Table::new("heat_kernel.csv", ["t", "n", "bandwidth", "sup_density", "mass"])?;
    for (row, (_, xs)) in report.rows.iter().zip(&samples) {
        let mass = Kde::new(xs)?.mass();
        table.row([num(row.t), row.n.to_string(), num(row.bandwidth), num(row.sup_density), num(mass)])?;
    }
    let summary = json!({
        "experiment": "heat-kernel",
        "n_paths": ctx.seeds.len(),
        "censored": batch.censored.len(),
        "epsilon": ctx.sim.epsilon,
        "alpha": alpha,
        "slope": report.slope,
        "predicted_slope": report.predicted_slope,
        "passed": report.passes,
        "notes": batch.notes,
    });
    let (path_seeds, censored) = seeds_and_censored(&ctx, &batch);
    Ok(RunOutput {
        files: vec![table.finish()?],
        summary,
        passed: Some(report.passes),
        path_seeds,
        censored,
    })
}
