use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wholeline::config::presets;
use wholeline::report::{write_json, write_run};
use wholeline::study::{convergence_study, parameter_sweep, scalar_self_test, ConvergenceReport};
use wholeline::{run, ConfigError, ExperimentConfig, HarnessError, RunOutput};
use wholeline_core::integrators::Scheme;

/// Whole-line Schrödinger experiments: compactified exteriors, absorbing
/// layers and transparent boundaries.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
#[derive(Parser)]
#[command(name = "wholeline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Configuration file (TOML with dotted keys).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Use a bundled preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; defaults to `output.dir` or `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok(ExperimentConfig::from_file(path)?),
            (None, Some(name)) => Ok(presets::get(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?),
            (None, None) => unreachable!("enforced by clap"),
        }
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out.clone().or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<name>.csv`, `<name>.json` and `<name>_field.csv`.
    Run(Source),
    /// Run one experiment per value of a dotted parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Dotted key to vary, e.g. `pml.sigma0`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Run at several step counts and fit the convergence order.
    Converge {
        #[command(flatten)]
        source: Source,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<usize>,
    },
    /// List presets, or print one as a configuration file.
    Presets { name: Option<String> },
    /// Check the order of both time integrators on a scalar equation.
    SelfTest,
}

fn name_of(config: &ExperimentConfig) -> String {
    config.output.name.clone().unwrap_or_else(|| "run".to_string())
}

fn finish(run: &RunOutput, dir: &Path, name: &str) -> Result<(), HarnessError> {
    let files = write_run(run, dir, name)?;
    println!("{name}: wrote {} ({:.2} s)", files.series.display(), run.wall_time.as_secs_f64());
    Ok(())
}

fn check_runs(runs: &[RunOutput]) -> Result<(), HarnessError> {
    match runs.iter().find_map(|r| r.failure.clone()) {
        Some(f) => Err(HarnessError::RunFailed(f)),
        None => Ok(()),
    }
}

fn print_convergence(report: &ConvergenceReport) {
    println!("steps,h,error");
    for r in &report.rows {
        println!("{},{:e},{:e}", r.steps, r.h, r.error);
    }
    let flag = if report.degenerate { " (degenerate fit)" } else { "" };
    println!("order {:.3} from {}{flag}", report.order, report.metric);
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(source) => {
            let config = source.load()?;
            let output = run(&config)?;
            finish(&output, &source.out_dir(&config), &name_of(&config))?;
            check_runs(std::slice::from_ref(&output))
        }
        Command::Sweep { source, param, values } => {
            let config = source.load()?;
            let dir = source.out_dir(&config);
            let name = name_of(&config);
            let (report, runs) = parameter_sweep(&config, &param, &values)?;
            let key = param.replace('.', "_");
            for (v, r) in values.iter().zip(&runs) {
                finish(r, &dir, &format!("{name}_{key}_{v}"))?;
            }
            write_json(&report, &dir.join(format!("{name}_sweep.json")))?;
            println!("value,score");
            for e in &report.entries {
                println!("{},{:e}", e.value, e.score);
            }
            println!("best {}", report.best.as_deref().unwrap_or("none"));
            check_runs(&runs)
        }
        Command::Converge { source, resolutions } => {
            let config = source.load()?;
            let dir = source.out_dir(&config);
            let name = name_of(&config);
            let (report, runs) = convergence_study(&config, &resolutions)?;
            for r in &runs {
                finish(r, &dir, &format!("{name}_n{}", r.config.steps()))?;
            }
            write_json(&report, &dir.join(format!("{name}_converge.json")))?;
            print_convergence(&report);
            Ok(())
        }
        Command::Presets { name: None } => {
            for n in presets::NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let config = presets::get(&name).ok_or(ConfigError::UnknownPreset(name))?;
            print!("{}", config.to_toml());
            Ok(())
        }
        Command::SelfTest => {
            for (label, scheme) in [("cn", Scheme::CrankNicolson), ("irk4", Scheme::Irk4)] {
                println!("{label}");
                print_convergence(&scalar_self_test(scheme, &[10, 20, 40, 80])?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
