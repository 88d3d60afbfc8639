//! CSV time series, JSON summaries and field dumps.
//!
//! Floats are written in the shortest form that parses back to the same
//! value; undefined entries are empty cells.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::{ErrorReport, RunOutput, Sample};

const ROMAN: [&str; 10] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"];

/// Shortest round-trip text of a float.
pub fn format_float(v: f64) -> String {
    format!("{v:e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn domain_label(k: usize) -> String {
    ROMAN.get(k).map_or_else(|| (k + 1).to_string(), |s| (*s).to_string())
}

/// Column names of the time series.
pub fn csv_header(domain_count: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "delta", "delta_inf", "delta_E"].iter().map(|s| s.to_string()).collect();
    h.extend((0..domain_count).map(|k| format!("tail_coeff_{}", domain_label(k))));
    h.push("abs_err".into());
    h.push("energy".into());
    h
}

fn csv_row(s: &Sample) -> Vec<String> {
    let mut r = vec![format_float(s.t), cell(s.delta), cell(s.delta_inf), cell(s.delta_e)];
    r.extend(s.tail_coeffs.iter().map(|&v| format_float(v)));
    r.push(cell(s.abs_err));
    r.push(cell(s.energy));
    r
}

/// One row per sample.
pub fn write_csv<W: Write>(report: &ErrorReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(report.domain_count))?;
    for s in &report.samples {
        w.write_record(csv_row(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a time series written by [`write_csv`]; empty cells become `None`.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Vec<Option<f64>>>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>().map(Some).map_err(|e| HarnessError::Output(format!("bad float {c}: {e}")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// `x, re, im` per node; nodes at infinity are written as `inf`.
pub fn write_field<W: Write>(nodes: &[f64], values: &[Complex64], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re", "im"])?;
    for (x, v) in nodes.iter().zip(values) {
        w.write_record([format_float(*x), format_float(v.re), format_float(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Run metadata written next to the time series.
#[derive(Debug, Serialize)]
pub struct RunSummary<'a> {
    pub name: &'a str,
    pub status: &'static str,
    /// True when the run stopped early and the outputs hold partial data.
    pub partial: bool,
    pub failure: Option<&'a str>,
    pub config: &'a ExperimentConfig,
    pub total_size: usize,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    pub samples: usize,
    pub wall_time_s: f64,
    pub final_sample: Option<&'a Sample>,
    pub max_delta: Option<f64>,
    pub max_delta_inf: Option<f64>,
    pub max_abs_err: Option<f64>,
    pub max_delta_e: Option<f64>,
}

impl<'a> RunSummary<'a> {
    pub fn new(name: &'a str, run: &'a RunOutput) -> Self {
        let r = &run.report;
        let all = |m: fn(&Sample) -> Option<f64>| r.max_over(f64::NEG_INFINITY, f64::INFINITY, m);
        Self {
            name,
            status: if run.is_complete() { "ok" } else { "failed" },
            partial: !run.is_complete(),
            failure: run.failure.as_deref(),
            config: &run.config,
            total_size: run.nodes.len(),
            steps_requested: run.config.steps(),
            steps_completed: run.stats.steps,
            total_iterations: run.stats.total_iterations,
            max_iterations: run.stats.max_iterations,
            mean_iterations: if run.stats.steps > 0 {
                run.stats.total_iterations as f64 / run.stats.steps as f64
            } else {
                0.0
            },
            samples: r.samples.len(),
            wall_time_s: run.wall_time.as_secs_f64(),
            final_sample: r.last(),
            max_delta: all(|s| s.delta),
            max_delta_inf: all(|s| s.delta_inf),
            max_abs_err: all(|s| s.abs_err),
            max_delta_e: all(|s| s.delta_e),
        }
    }
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub series: PathBuf,
    pub summary: PathBuf,
    pub field: PathBuf,
}

/// Writes `<name>.csv`, `<name>.json` and `<name>_field.csv` into `dir`.
pub fn write_run(run: &RunOutput, dir: &Path, name: &str) -> Result<RunFiles, HarnessError> {
    fs::create_dir_all(dir)?;
    let files = RunFiles {
        series: dir.join(format!("{name}.csv")),
        summary: dir.join(format!("{name}.json")),
        field: dir.join(format!("{name}_field.csv")),
    };
    write_csv(&run.report, fs::File::create(&files.series)?)?;
    write_field(&run.nodes, run.field.values(), fs::File::create(&files.field)?)?;
    write_json(&RunSummary::new(name, run), &files.summary)?;
    Ok(files)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}
