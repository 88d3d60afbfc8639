//! Builds a solver from a configuration and propagates it with error observers.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::Serialize;

use wholeline_core::integrators::{build_stepper, propagate, PropagationStats, Scheme, SchemeConfig, Stepper};
use wholeline_core::multidomain::{assemble, CompositeField, Decomposition, Window};
use wholeline_core::pml::{build_pml_decomposition, PmlConfig};
use wholeline_core::problems::{
    absolute_error_inf, energy_functional, error_delta, perturbed_peregrine_initial, ExactSolution,
};
use wholeline_core::tbc::{ConvolutionWeights, TbcLinearStepper, TbcNlsStepper};

use crate::config::{Boundary, ExperimentConfig, Problem, SchemeName, TbcWeights};
use crate::error::HarnessError;

/// Below this initial energy the relative energy drift is not reported.
const ENERGY_FLOOR: f64 = 1e-10;

/// Focusing coupling of all cubic problems.
const RHO: f64 = -1.0;

/// Everything needed to propagate one experiment.
pub struct Setup {
    pub decomp: Decomposition,
    pub stepper: Box<dyn Stepper + Send>,
    pub initial: CompositeField,
    pub exact: Option<ExactSolution>,
    /// Region where errors are measured: whole line for CED, the window otherwise.
    pub window: Window,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let d = &config.domain;
        let o = &d.orders;
        let decomp = match config.boundary {
            Boundary::Ced => Decomposition::ced(d.x_l, d.x_r, [o[0], o[1], o[2]])?,
            Boundary::Pml => {
                let p = config.pml.expect("validated");
                build_pml_decomposition(d.x_l, d.x_r, &PmlConfig::new(p.delta, p.sigma0)?, [o[0], o[1], o[2]])?
            }
            Boundary::Tbc => Decomposition::single(d.x_l, d.x_r, o[0])?,
        };
        let exact = match config.problem {
            Problem::Gaussian => Some(ExactSolution::Gaussian),
            Problem::Soliton => {
                let s = config.soliton.expect("validated");
                Some(ExactSolution::Soliton { a: s.a, c: s.c })
            }
            Problem::Peregrine => Some(ExactSolution::Peregrine),
            Problem::PerturbedPeregrine => None,
        };
        let initial = match (&exact, config.perturbation) {
            (Some(e), _) => e.sample(&decomp, 0.0),
            (None, Some(p)) => perturbed_peregrine_initial(&decomp, p.amplitude),
            (None, None) => unreachable!("validated"),
        };
        let scheme = match config.scheme {
            SchemeName::Cn => Scheme::CrankNicolson,
            SchemeName::Irk4 => Scheme::Irk4,
        };
        let scheme_config = SchemeConfig::new(scheme, config.time.final_time, config.steps())?
            .with_tolerance(config.solver.tolerance, config.solver.max_iterations);
        let nonlinearity = if config.problem.is_linear() {
            wholeline_core::integrators::Nonlinearity::Linear
        } else {
            wholeline_core::problems::Potential::Cubic { rho: RHO }.nonlinearity()
        };
        let op = assemble(&decomp, &vec![Complex64::new(0.0, 0.0); decomp.total_size()])?;
        let stepper: Box<dyn Stepper + Send> = match config.boundary {
            Boundary::Ced | Boundary::Pml => build_stepper(op, nonlinearity, &scheme_config)?,
            Boundary::Tbc => {
                let weights = match config.tbc.unwrap_or_default().weights {
                    TbcWeights::HalfDerivative => ConvolutionWeights::HalfDerivative,
                    TbcWeights::Recurrence => ConvolutionWeights::Recurrence,
                };
                if config.problem.is_linear() {
                    Box::new(TbcLinearStepper::new(op, &decomp, &scheme_config, weights, &initial)?)
                } else {
                    Box::new(TbcNlsStepper::new(op, &decomp, RHO, &scheme_config, weights, &initial)?)
                }
            }
        };
        let window = match config.boundary {
            Boundary::Ced => Window::WholeLine,
            _ => Window::Computational,
        };
        Ok(Self { decomp, stepper, initial, exact, window })
    }
}

/// Observables at one sampled time level. Undefined entries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    /// Relative `L²` error over the measurement window; needs a decaying reference.
    pub delta: Option<f64>,
    /// Relative max-norm error over the nodes of the window.
    pub delta_inf: Option<f64>,
    /// `|1 − E(t)/E(0)|` on a nonzero background.
    pub delta_e: Option<f64>,
    /// Largest of the two trailing Chebyshev coefficients, per domain.
    pub tail_coeffs: Vec<f64>,
    /// Absolute max-norm error over the nodes of the window.
    pub abs_err: Option<f64>,
    /// Energy functional on a nonzero background.
    pub energy: Option<f64>,
}

/// Time series of [`Sample`]s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub domain_count: usize,
    pub samples: Vec<Sample>,
}

impl ErrorReport {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Sample closest to time `t`.
    pub fn at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// Largest value of `metric` over samples with `t` in `[from, to]`.
    pub fn max_over(&self, from: f64, to: f64, metric: impl Fn(&Sample) -> Option<f64>) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| s.t >= from - 1e-12 && s.t <= to + 1e-12)
            .filter_map(metric)
            .reduce(|a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
    }
}

/// Result of [`run`]: the report, the last field and run statistics.
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub report: ErrorReport,
    pub nodes: Vec<f64>,
    pub field: CompositeField,
    pub stats: PropagationStats,
    pub wall_time: Duration,
    /// Set when propagation stopped early; the report then holds the
    /// samples taken before the failure.
    pub failure: Option<String>,
}

impl RunOutput {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Computes all observables for one field.
struct Observer<'a> {
    decomp: &'a Decomposition,
    exact: Option<&'a ExactSolution>,
    window: Window,
    background: bool,
    in_window: Vec<bool>,
    initial_energy: Option<f64>,
}

impl<'a> Observer<'a> {
    fn new(decomp: &'a Decomposition, exact: Option<&'a ExactSolution>, window: Window, background: bool) -> Self {
        let mut in_window = vec![false; decomp.total_size()];
        for d in decomp.domains() {
            if window.includes(d) {
                in_window[d.range()].iter_mut().for_each(|v| *v = true);
            }
        }
        Self { decomp, exact, window, background, in_window, initial_energy: None }
    }

    fn sample(&mut self, step: usize, t: f64, u: &[Complex64]) -> wholeline_core::Result<Sample> {
        let mut s = Sample {
            step,
            t,
            delta: None,
            delta_inf: None,
            delta_e: None,
            tail_coeffs: self.decomp.tail_coefficients(u)?,
            abs_err: None,
            energy: None,
        };
        if let Some(exact) = self.exact {
            let e = exact.sample(self.decomp, t);
            let e = e.values();
            if !self.background {
                s.delta = Some(error_delta(self.decomp, u, e, self.window)?);
            }
            let (mut num, mut den) = (0.0f64, 0.0f64);
            for (i, _) in self.in_window.iter().enumerate().filter(|(_, &w)| w) {
                num = num.max((u[i] - e[i]).norm());
                den = den.max(e[i].norm());
            }
            if den > 0.0 {
                s.delta_inf = Some(num / den);
            }
            s.abs_err = Some(absolute_error_inf(self.decomp, u, e, self.window)?);
        }
        if self.background {
            let energy = energy_functional(self.decomp, u)?;
            let e0 = *self.initial_energy.get_or_insert(energy);
            s.energy = Some(energy);
            if e0.abs() > ENERGY_FLOOR {
                s.delta_e = Some((1.0 - energy / e0).abs());
            }
        }
        Ok(s)
    }
}

/// Runs one experiment. Configuration and setup problems are errors; a
/// failure during propagation is reported in [`RunOutput::failure`] with the
/// samples gathered so far.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let start = Instant::now();
    let Setup { decomp, mut stepper, initial, exact, window } = Setup::new(config)?;
    let mut field = initial;
    let mut samples = Vec::new();
    let mut observer = Observer::new(&decomp, exact.as_ref(), window, config.problem.has_background());
    let result = propagate(&mut field, stepper.as_mut(), config.steps(), config.stride(), |step, t, u| {
        samples.push(observer.sample(step, t, u.values())?);
        Ok(())
    });
    let (stats, failure) = match result {
        Ok(stats) => (stats, None),
        Err(e) => {
            let steps = match &e {
                wholeline_core::Error::StepFailed { step, .. } => step - 1,
                _ => samples.last().map_or(0, |s: &Sample| s.step),
            };
            (PropagationStats { steps, samples: samples.len(), ..Default::default() }, Some(e.to_string()))
        }
    };
    Ok(RunOutput {
        config: config.clone(),
        report: ErrorReport { domain_count: decomp.domains().len(), samples },
        nodes: decomp.nodes(),
        field,
        stats,
        wall_time: start.elapsed(),
        failure,
    })
}
