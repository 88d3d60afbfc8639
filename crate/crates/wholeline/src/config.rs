//! Experiment configuration: a TOML file with dotted keys, validated against
//! the chosen boundary treatment.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Free Gaussian drifting at speed 16.
    Gaussian,
    /// Focusing bright soliton, parameters in `[soliton]`.
    Soliton,
    /// Rational breather on the unit background.
    Peregrine,
    /// Breather initial data plus `amplitude·exp(−x²)`; no reference solution.
    PerturbedPeregrine,
}

impl Problem {
    pub fn has_background(self) -> bool {
        matches!(self, Problem::Peregrine | Problem::PerturbedPeregrine)
    }

    pub fn is_linear(self) -> bool {
        self == Problem::Gaussian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Compactified exterior domains covering the whole line.
    Ced,
    /// Absorbing layers outside the window.
    Pml,
    /// Transparent boundary conditions at the window ends.
    Tbc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Cn,
    Irk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TbcWeights {
    /// Taylor coefficients of the discrete half derivative.
    #[default]
    HalfDerivative,
    /// The two-term recurrence variant.
    Recurrence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub x_l: f64,
    pub x_r: f64,
    /// Chebyshev orders left to right: three for CED and PML, one for TBC.
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "final")]
    pub final_time: f64,
    /// Number of steps; exactly one of `steps` and `h` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSection {
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlSection {
    pub delta: f64,
    pub sigma0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbcSection {
    #[serde(default)]
    pub weights: TbcWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), max_iterations: default_max_iterations() }
    }
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_max_iterations() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Steps between samples; the final step is always sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem of the outputs; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub boundary: Boundary,
    pub scheme: SchemeName,
    pub domain: DomainSection,
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pml: Option<PmlSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tbc: Option<TbcSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Default number of samples when no stride is configured.
const DEFAULT_SAMPLES: usize = 100;

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        let mut config = Self::from_toml(&text)?;
        if config.output.name.is_none() {
            config.output.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks that exactly the fields required by the problem and boundary
    /// treatment are present and that all numbers are usable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        let d = &self.domain;
        if !(d.x_l.is_finite() && d.x_r.is_finite() && d.x_l < d.x_r) {
            return bad("domain.x_l must be finite and below domain.x_r");
        }
        let expected = match self.boundary {
            Boundary::Ced | Boundary::Pml => 3,
            Boundary::Tbc => 1,
        };
        if d.orders.len() != expected {
            return match self.boundary {
                Boundary::Tbc => bad("tbc takes a single interior order; exterior orders are not allowed"),
                _ => bad("domain.orders needs three entries (left, interior, right)"),
            };
        }
        if d.orders.iter().any(|&n| n < 2) {
            return bad("every Chebyshev order must be at least 2");
        }
        let t = &self.time;
        if !(t.final_time > 0.0 && t.final_time.is_finite()) {
            return bad("time.final must be positive");
        }
        match (t.steps, t.h) {
            (Some(0), _) => return bad("time.steps must be positive"),
            (Some(_), None) => {}
            (None, Some(h)) if h > 0.0 && h.is_finite() => {
                let n = t.final_time / h;
                if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
                    return bad("time.h must divide time.final");
                }
            }
            (None, Some(_)) => return bad("time.h must be positive"),
            _ => return bad("give exactly one of time.steps and time.h"),
        }
        match (self.boundary, &self.pml) {
            (Boundary::Pml, None) => return bad("pml needs pml.delta and pml.sigma0"),
            (Boundary::Pml, Some(p)) => {
                if !(p.delta > 0.0 && p.delta.is_finite()) {
                    return bad("pml.delta must be positive");
                }
                if !(p.sigma0 >= 0.0 && p.sigma0.is_finite()) {
                    return bad("pml.sigma0 must be non-negative");
                }
            }
            (_, Some(_)) => return bad("[pml] is only allowed with boundary = \"pml\""),
            _ => {}
        }
        if self.tbc.is_some() && self.boundary != Boundary::Tbc {
            return bad("[tbc] is only allowed with boundary = \"tbc\"");
        }
        if self.boundary == Boundary::Tbc && self.scheme != SchemeName::Cn {
            return bad("transparent boundaries are built for the cn scheme");
        }
        if self.problem.has_background() && self.boundary != Boundary::Ced {
            return bad("problems on a nonzero background need boundary = \"ced\"");
        }
        match (self.problem, &self.soliton) {
            (Problem::Soliton, None) => return bad("soliton needs soliton.a and soliton.c"),
            (Problem::Soliton, Some(s)) if !(s.a > 0.0 && s.a.is_finite() && s.c.is_finite()) => {
                return bad("soliton.a must be positive and soliton.c finite")
            }
            (Problem::Soliton, Some(_)) => {}
            (_, Some(_)) => return bad("[soliton] is only allowed with problem = \"soliton\""),
            _ => {}
        }
        match (self.problem, &self.perturbation) {
            (Problem::PerturbedPeregrine, None) => return bad("perturbed-peregrine needs perturbation.amplitude"),
            (Problem::PerturbedPeregrine, Some(p)) if !p.amplitude.is_finite() => {
                return bad("perturbation.amplitude must be finite")
            }
            (Problem::PerturbedPeregrine, Some(_)) => {}
            (_, Some(_)) => return bad("[perturbation] is only allowed with problem = \"perturbed-peregrine\""),
            _ => {}
        }
        if !(self.solver.tolerance > 0.0) || self.solver.max_iterations == 0 {
            return bad("solver.tolerance and solver.max_iterations must be positive");
        }
        if self.output.stride == Some(0) {
            return bad("output.stride must be positive");
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        match (self.time.steps, self.time.h) {
            (Some(n), _) => n,
            (None, Some(h)) => (self.time.final_time / h).round() as usize,
            (None, None) => 0,
        }
    }

    pub fn h(&self) -> f64 {
        self.time.final_time / self.steps() as f64
    }

    pub fn stride(&self) -> usize {
        self.output.stride.unwrap_or_else(|| (self.steps() / DEFAULT_SAMPLES).max(1))
    }

    /// Returns a copy with `steps` time steps, dropping any `h`.
    pub fn with_steps(&self, steps: usize) -> Self {
        let mut c = self.clone();
        c.time.steps = Some(steps);
        c.time.h = None;
        c
    }

    /// Sets a dotted key such as `pml.sigma0` and revalidates.
    pub fn with_override(&self, key: &str, value: toml::Value) -> Result<Self, ConfigError> {
        let mut root = toml::Value::try_from(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        let mut table = root.as_table_mut().expect("configuration is a table");
        for part in parts {
            table = table
                .entry(part)
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        }
        table.insert(last.to_string(), value);
        let config: Self = root.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// Bundled experiments, one per benchmark.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 9] = [
        "linear-ced",
        "linear-pml",
        "linear-tbc",
        "soliton-ced",
        "soliton-pml",
        "soliton-tbc",
        "peregrine",
        "peregrine-perturbed",
        "peregrine-cn",
    ];

    fn base(problem: Problem, boundary: Boundary, scheme: SchemeName, x: f64, orders: &[usize], t: f64, steps: usize) -> ExperimentConfig {
        ExperimentConfig {
            problem,
            boundary,
            scheme,
            domain: DomainSection { x_l: -x, x_r: x, orders: orders.to_vec() },
            time: TimeSection { final_time: t, steps: Some(steps), h: None },
            soliton: None,
            perturbation: None,
            pml: None,
            tbc: None,
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }

    fn soliton(mut c: ExperimentConfig) -> ExperimentConfig {
        c.soliton = Some(SolitonSection { a: 2.0, c: 15.0 });
        c
    }

    pub fn get(name: &str) -> Option<ExperimentConfig> {
        use Boundary::*;
        use Problem::*;
        use SchemeName::*;
        let mut c = match name {
            "linear-ced" => base(Gaussian, Ced, Cn, 5.0, &[20, 120, 600], 0.5, 1000),
            "linear-pml" => {
                let mut c = base(Gaussian, Pml, Cn, 5.0, &[40, 120, 40], 0.5, 1000);
                c.pml = Some(PmlSection { delta: 0.5, sigma0: 50.0 });
                c
            }
            "linear-tbc" => {
                let mut c = base(Gaussian, Tbc, Cn, 5.0, &[120], 0.5, 10000);
                c.tbc = Some(TbcSection::default());
                c
            }
            "soliton-ced" => soliton(base(Soliton, Ced, Irk4, 25.0, &[20, 700, 500], 2.0, 10000)),
            "soliton-pml" => {
                let mut c = soliton(base(Soliton, Pml, Cn, 25.0, &[50, 700, 100], 2.0, 1000));
                c.pml = Some(PmlSection { delta: 1.0, sigma0: 3.0 });
                c
            }
            "soliton-tbc" => {
                let mut c = soliton(base(Soliton, Tbc, Cn, 25.0, &[700], 2.0, 1000));
                c.tbc = Some(TbcSection::default());
                c
            }
            "peregrine" => base(Peregrine, Ced, Irk4, 10.0, &[50, 700, 50], 1.0, 1000),
            "peregrine-perturbed" => {
                let mut c = base(PerturbedPeregrine, Ced, Irk4, 10.0, &[400, 400, 400], 1.0, 1000);
                c.perturbation = Some(PerturbationSection { amplitude: 0.1 });
                c
            }
            "peregrine-cn" => base(Peregrine, Ced, Cn, 10.0, &[50, 700, 50], 1.0, 1000),
            _ => return None,
        };
        c.output.name = Some(name.to_string());
        Some(c)
    }
}
