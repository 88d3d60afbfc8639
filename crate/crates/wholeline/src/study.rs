//! Convergence studies and parameter sweeps. Runs fan out over a thread
//! pool; results are merged in input order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use wholeline_core::integrators::{CnStepper, Irk4Stepper, Nonlinearity, Scheme, SchemeConfig, Stepper};
use wholeline_core::multidomain::{diagonal_operator, CompositeField};

use crate::config::{Boundary, ExperimentConfig, Problem};
use crate::error::{ConfigError, HarnessError};
use crate::experiment::{run, RunOutput, Sample};

/// Errors at or below this level are treated as round-off floor.
pub const ERROR_FLOOR: f64 = 1e-13;

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub h: f64,
    pub error: f64,
}

/// Final-time errors per resolution and the fitted order.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Which sample entry was used: `delta` or `delta_inf`.
    pub metric: &'static str,
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `ln error` over `ln h`.
    pub order: f64,
    /// Set when some error sits at the round-off floor or errors do not
    /// decrease with `h`, so the slope says nothing about the scheme.
    pub degenerate: bool,
}

impl ConvergenceReport {
    fn from_rows(metric: &'static str, mut rows: Vec<ConvergenceRow>) -> Self {
        rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let floor = e.iter().any(|&v| !(v > ERROR_FLOOR));
        let monotone = e.windows(2).all(|w| w[1] < w[0]);
        let order = if floor { f64::NAN } else { log_log_slope(&h, &e) };
        Self { metric, rows, order, degenerate: floor || !monotone }
    }
}

fn final_error(run: &RunOutput) -> Result<(&'static str, f64), HarnessError> {
    if let Some(f) = &run.failure {
        return Err(HarnessError::RunFailed(f.clone()));
    }
    let last = run.report.last().ok_or_else(|| HarnessError::Output("empty report".into()))?;
    match (last.delta, last.delta_inf) {
        (Some(d), _) => Ok(("delta", d)),
        (None, Some(d)) => Ok(("delta_inf", d)),
        _ => Err(ConfigError::Study("convergence needs a problem with a reference solution".into()).into()),
    }
}

fn check_resolutions(resolutions: &[usize]) -> Result<(), ConfigError> {
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 || sorted.len() != resolutions.len() {
        return Err(ConfigError::Study("need at least two distinct resolutions".into()));
    }
    if sorted[0] == 0 {
        return Err(ConfigError::Study("resolutions must be positive".into()));
    }
    Ok(())
}

/// Runs `config` at each step count and fits the order of the final-time error.
pub fn convergence_study(
    config: &ExperimentConfig,
    resolutions: &[usize],
) -> Result<(ConvergenceReport, Vec<RunOutput>), HarnessError> {
    check_resolutions(resolutions)?;
    if config.problem == Problem::PerturbedPeregrine {
        return Err(ConfigError::Study("convergence needs a problem with a reference solution".into()).into());
    }
    let configs: Vec<ExperimentConfig> = resolutions.iter().map(|&n| config.with_steps(n)).collect();
    for c in &configs {
        c.validate()?;
    }
    let runs: Vec<RunOutput> = configs.par_iter().map(run).collect::<Result<_, _>>()?;
    let mut metric = "delta";
    let mut rows = Vec::new();
    for r in &runs {
        let (m, error) = final_error(r)?;
        metric = m;
        rows.push(ConvergenceRow { steps: r.config.steps(), h: r.config.h(), error });
    }
    Ok((ConvergenceReport::from_rows(metric, rows), runs))
}

/// Order of a scheme on `u' = iλu`, `λ = 1`, `T = 1`, from the exact
/// solution `e^{iT}`.
pub fn scalar_self_test(scheme: Scheme, resolutions: &[usize]) -> Result<ConvergenceReport, HarnessError> {
    check_resolutions(resolutions)?;
    let lambda = 1.0;
    let exact = Complex64::new(0.0, lambda).exp();
    let mut rows = Vec::new();
    for &n in resolutions {
        let cfg = SchemeConfig::new(scheme, 1.0, n)?.with_tolerance(1e-15, 100);
        let op = diagonal_operator(vec![Complex64::new(lambda, 0.0)]);
        let mut stepper: Box<dyn Stepper> = match scheme {
            Scheme::CrankNicolson => Box::new(CnStepper::new(op, Nonlinearity::Linear, &cfg)?),
            Scheme::Irk4 => Box::new(Irk4Stepper::new(op, Nonlinearity::Linear, &cfg)?),
        };
        let mut u = CompositeField::new(vec![Complex64::new(1.0, 0.0)]);
        for _ in 0..n {
            stepper.step(&mut u)?;
        }
        rows.push(ConvergenceRow { steps: n, h: cfg.h, error: (u.values()[0] - exact).norm() });
    }
    Ok(ConvergenceReport::from_rows("abs", rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub value: String,
    /// Peak absolute window error from the boundary crossing to the end.
    pub score: f64,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub param: String,
    /// Time after which the score is taken.
    pub crossing_time: f64,
    pub entries: Vec<SweepEntry>,
    /// Entry with the smallest score among complete runs.
    pub best: Option<String>,
}

/// Time at which the amplitude maximum reaches the right window edge; zero
/// when it never does.
pub fn crossing_time(config: &ExperimentConfig) -> f64 {
    let speed = match config.problem {
        Problem::Gaussian => 16.0,
        Problem::Soliton => config.soliton.map_or(0.0, |s| s.c),
        _ => 0.0,
    };
    if speed > 0.0 {
        (config.domain.x_r / speed).clamp(0.0, config.time.final_time)
    } else {
        0.0
    }
}

fn sweep_score(samples: &[Sample], from: f64) -> f64 {
    samples
        .iter()
        .filter(|s| s.t >= from - 1e-12)
        .filter_map(|s| s.abs_err.or(s.delta_inf))
        .fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Parses a value as TOML, so `40` is an integer and `4e1` a float.
pub fn parse_value(text: &str) -> Result<toml::Value, ConfigError> {
    let table: toml::Table =
        toml::from_str(&format!("v = {text}")).map_err(|_| ConfigError::Parse(format!("bad value {text}")))?;
    Ok(table["v"].clone())
}

fn coerce(value: &toml::Value, current: Option<&toml::Value>) -> toml::Value {
    match (value, current) {
        (toml::Value::Integer(i), Some(toml::Value::Float(_))) => toml::Value::Float(*i as f64),
        _ => value.clone(),
    }
}

fn lookup<'a>(root: &'a toml::Value, key: &str) -> Option<&'a toml::Value> {
    key.split('.').try_fold(root, |v, part| v.get(part))
}

/// Runs `config` once per value of the dotted key `param`.
pub fn parameter_sweep(
    config: &ExperimentConfig,
    param: &str,
    values: &[String],
) -> Result<(SweepReport, Vec<RunOutput>), HarnessError> {
    if values.is_empty() {
        return Err(ConfigError::Study("empty sweep".into()).into());
    }
    let root = toml::Value::try_from(config).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let current = lookup(&root, param);
    let configs = values
        .iter()
        .map(|v| config.with_override(param, coerce(&parse_value(v)?, current)))
        .collect::<Result<Vec<_>, _>>()?;
    let runs: Vec<RunOutput> = configs.par_iter().map(run).collect::<Result<_, _>>()?;
    let from = crossing_time(config);
    let entries: Vec<SweepEntry> = values
        .iter()
        .zip(&runs)
        .map(|(v, r)| SweepEntry { value: v.clone(), score: sweep_score(&r.report.samples, from), complete: r.is_complete() })
        .collect();
    let best = entries
        .iter()
        .filter(|e| e.complete && e.score.is_finite())
        .min_by(|a, b| a.score.total_cmp(&b.score))
        .map(|e| e.value.clone());
    Ok((SweepReport { param: param.to_string(), crossing_time: from, entries, best }, runs))
}

/// Sweep over the layer damping `pml.sigma0`.
pub fn sigma_sweep(config: &ExperimentConfig, sigmas: &[f64]) -> Result<(SweepReport, Vec<RunOutput>), HarnessError> {
    if config.boundary != Boundary::Pml {
        return Err(ConfigError::Study("sigma sweeps need boundary = \"pml\"".into()).into());
    }
    let values: Vec<String> = sigmas.iter().map(|s| crate::report::format_float(*s)).collect();
    parameter_sweep(config, "pml.sigma0", &values)
}
