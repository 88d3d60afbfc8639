//! Implicit time stepping of `∂_t U = i𝓛U + iV(|U|²)U`.
//!
//! Both schemes prefactor their step matrices once; nonlinear terms are
//! handled by fixed-point iteration on top of those factorizations.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::StepMatrix;
use crate::multidomain::{CompositeField, CompositeOperator};

const I: Complex64 = Complex64::new(0.0, 1.0);
const SQRT3_6: f64 = 0.288_675_134_594_812_9;

/// 2-stage Gauss tableau.
pub mod gauss {
    use super::SQRT3_6;
    pub const C1: f64 = 0.5 - SQRT3_6;
    pub const C2: f64 = 0.5 + SQRT3_6;
    pub const A11: f64 = 0.25;
    pub const A12: f64 = 0.25 - SQRT3_6;
    pub const A21: f64 = 0.25 + SQRT3_6;
    pub const A22: f64 = 0.25;
    pub const B1: f64 = 0.5;
    pub const B2: f64 = 0.5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    Irk4,
}

/// Time stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub h: f64,
    pub n_steps: usize,
    pub fp_tolerance: f64,
    pub fp_max_iters: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, final_time: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(final_time > 0.0) {
            return Err(Error::InvalidSetup("need a positive final time and step count"));
        }
        Ok(Self {
            scheme,
            h: final_time / n_steps as f64,
            n_steps,
            fp_tolerance: 1e-8,
            fp_max_iters: 200,
        })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iters: usize) -> Self {
        self.fp_tolerance = tol;
        self.fp_max_iters = max_iters;
        self
    }

    pub fn final_time(&self) -> f64 {
        self.h * self.n_steps as f64
    }
}

/// Solution-dependent part of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Linear,
    /// `V = coupling·|u|²`; `coupling = 2` is the focusing cubic equation.
    Cubic { coupling: f64 },
}

impl Nonlinearity {
    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::Linear)
    }

    /// Replaces `u` by `iV(|u|²)u`.
    pub fn rate_into_in_place(&self, u: &mut [Complex64]) {
        match *self {
            Nonlinearity::Linear => u.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0)),
            Nonlinearity::Cubic { coupling } => {
                for v in u.iter_mut() {
                    *v = I * *v * (coupling * v.norm_sqr());
                }
            }
        }
    }

    /// `iV(|u|²)u` written into `out`.
    pub fn rate_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        match *self {
            Nonlinearity::Linear => out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0)),
            Nonlinearity::Cubic { coupling } => {
                for (o, &v) in out.iter_mut().zip(u) {
                    *o = I * v * (coupling * v.norm_sqr());
                }
            }
        }
    }
}

/// Work done by one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub iterations: usize,
    pub last_change: f64,
}

/// A one-step time integrator acting in place.
pub trait Stepper {
    fn step(&mut self, u: &mut CompositeField) -> Result<StepStats>;
    fn time_step(&self) -> f64;
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Crank–Nicolson: `(1 − ih𝓛/2)U⁺ = (1 + ih𝓛/2)U + (h/2)(N(U⁺) + N(U))`.
#[derive(Debug, Clone)]
pub struct CnStepper {
    op: CompositeOperator,
    matrix: StepMatrix,
    nonlinearity: Nonlinearity,
    h: f64,
    tol: f64,
    max_iters: usize,
}

impl CnStepper {
    pub fn new(op: CompositeOperator, nonlinearity: Nonlinearity, config: &SchemeConfig) -> Result<Self> {
        let matrix = StepMatrix::new(&op, -I * (config.h / 2.0))?;
        Ok(Self {
            op,
            matrix,
            nonlinearity,
            h: config.h,
            tol: config.fp_tolerance,
            max_iters: config.fp_max_iters,
        })
    }

    pub fn operator(&self) -> &CompositeOperator {
        &self.op
    }
}

impl Stepper for CnStepper {
    fn step(&mut self, u: &mut CompositeField) -> Result<StepStats> {
        let h = self.h;
        let values = u.values();
        let n = values.len();
        let lu = self.op.apply(values);
        let mut base: Vec<Complex64> = values
            .iter()
            .zip(&lu)
            .map(|(&v, &l)| v + I * l * (h / 2.0))
            .collect();
        if self.nonlinearity.is_linear() {
            self.matrix.solve_with_tau(&mut base)?;
            u.values_mut().copy_from_slice(&base);
            return Ok(StepStats { iterations: 1, last_change: 0.0 });
        }
        let mut rate = vec![Complex64::new(0.0, 0.0); n];
        self.nonlinearity.rate_into(values, &mut rate);
        for (b, r) in base.iter_mut().zip(&rate) {
            *b += r * (h / 2.0);
        }
        let mut y = values.to_vec();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        let mut change = f64::INFINITY;
        for it in 1..=self.max_iters {
            self.nonlinearity.rate_into(&y, &mut rate);
            for ((x, b), r) in next.iter_mut().zip(&base).zip(&rate) {
                *x = b + r * (h / 2.0);
            }
            self.matrix.solve_with_tau(&mut next)?;
            change = max_diff(&next, &y);
            core::mem::swap(&mut y, &mut next);
            if change < self.tol {
                u.values_mut().copy_from_slice(&y);
                return Ok(StepStats { iterations: it, last_change: change });
            }
        }
        Err(Error::NotConverged { iterations: self.max_iters, last_change: change })
    }

    fn time_step(&self) -> f64 {
        self.h
    }
}

/// Two-stage Gauss method with a Gauss–Seidel sweep over the stages.
///
/// Since `a11 = a22` a single factorization of `1 − iha11𝓛` serves both stages.
/// Each stage solve also yields `𝓛K = (K − rhs)/(iha11)` off the tau rows, so
/// a sweep needs no operator applications.
#[derive(Debug, Clone)]
pub struct Irk4Stepper {
    op: CompositeOperator,
    matrix: StepMatrix,
    nonlinearity: Nonlinearity,
    h: f64,
    tol: f64,
    max_iters: usize,
    previous: Option<[Stage; 2]>,
}

/// A stage slope `K` together with `𝓛K`.
#[derive(Debug, Clone)]
struct Stage {
    k: Vec<Complex64>,
    lk: Vec<Complex64>,
}

impl Stage {
    fn zeros(n: usize) -> Self {
        Self { k: vec![Complex64::new(0.0, 0.0); n], lk: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// `a + w·(b − a)` applied to both parts.
    fn extrapolate(a: &Stage, b: &Stage, w: f64) -> Self {
        let lerp = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| p + (q - p) * w).collect();
        Self { k: lerp(&a.k, &b.k), lk: lerp(&a.lk, &b.lk) }
    }
}

impl Irk4Stepper {
    pub fn new(op: CompositeOperator, nonlinearity: Nonlinearity, config: &SchemeConfig) -> Result<Self> {
        let matrix = StepMatrix::new(&op, -I * (config.h * gauss::A11))?;
        Ok(Self {
            op,
            matrix,
            nonlinearity,
            h: config.h,
            tol: config.fp_tolerance,
            max_iters: config.fp_max_iters,
            previous: None,
        })
    }

    pub fn operator(&self) -> &CompositeOperator {
        &self.op
    }

    /// One stage update: solves `(1 − iha11𝓛)K = i𝓛U + iha_off𝓛K_other + N(Y)`
    /// into `out`.
    fn stage(
        &self,
        u: &[Complex64],
        ilu: &[Complex64],
        own: &[Complex64],
        other: &Stage,
        a_off: f64,
        work: &mut [Complex64],
        out: &mut Stage,
    ) -> Result<()> {
        let h = self.h;
        let rhs = &mut out.lk;
        for ((r, &l), &lo) in rhs.iter_mut().zip(ilu).zip(&other.lk) {
            *r = l + I * lo * (h * a_off);
        }
        if !self.nonlinearity.is_linear() {
            for (((w, &ui), &ki), &kj) in work.iter_mut().zip(u).zip(own).zip(&other.k) {
                *w = ui + ki * (h * gauss::A11) + kj * (h * a_off);
            }
            self.nonlinearity.rate_into_in_place(work);
            for (r, &n) in rhs.iter_mut().zip(work.iter()) {
                *r += n;
            }
        }
        out.k.copy_from_slice(rhs);
        self.matrix.solve_with_tau(&mut out.k)?;
        let scale = I * (h * gauss::A11);
        for (l, &k) in out.lk.iter_mut().zip(&out.k) {
            *l = (k - *l) / scale;
        }
        for row in self.matrix.tau_indices() {
            out.lk[row] = Complex64::new(0.0, 0.0);
        }
        Ok(())
    }
}

impl Stepper for Irk4Stepper {
    fn step(&mut self, u: &mut CompositeField) -> Result<StepStats> {
        let h = self.h;
        let values = u.values();
        let n = values.len();
        let ilu: Vec<Complex64> = self.op.apply(values).into_iter().map(|l| I * l).collect();
        // The previous step's converged slopes are extrapolated along the
        // collocation polynomial; the first step starts from zero. Both keep
        // stiff modes out of the guess, which the explicit slope `i𝓛U`
        // would fill with amplified roundoff.
        let [mut s1, mut s2] = match self.previous.take() {
            Some([p1, p2]) => {
                // p'(θ) is linear through (c1, K1), (c2, K2); evaluate at 1 + c_i
                let gap = gauss::C2 - gauss::C1;
                [Stage::extrapolate(&p1, &p2, 1.0 / gap), Stage::extrapolate(&p1, &p2, (1.0 + gap) / gap)]
            }
            None => [Stage::zeros(n), Stage::zeros(n)],
        };
        let mut fresh = Stage::zeros(n);
        let mut work = vec![Complex64::new(0.0, 0.0); n];
        let mut change = f64::INFINITY;
        for it in 1..=self.max_iters {
            self.stage(values, &ilu, &s1.k, &s2, gauss::A12, &mut work, &mut fresh)?;
            let d1 = max_diff(&fresh.k, &s1.k);
            core::mem::swap(&mut s1, &mut fresh);
            self.stage(values, &ilu, &s2.k, &s1, gauss::A21, &mut work, &mut fresh)?;
            let d2 = max_diff(&fresh.k, &s2.k);
            core::mem::swap(&mut s2, &mut fresh);
            change = d1.max(d2);
            if change < self.tol {
                let out = u.values_mut();
                for ((o, a), b) in out.iter_mut().zip(&s1.k).zip(&s2.k) {
                    *o += (a * gauss::B1 + b * gauss::B2) * h;
                }
                self.previous = Some([s1, s2]);
                return Ok(StepStats { iterations: it, last_change: change });
            }
        }
        Err(Error::NotConverged { iterations: self.max_iters, last_change: change })
    }

    fn time_step(&self) -> f64 {
        self.h
    }
}

/// Builds the stepper selected by `config`.
pub fn build_stepper(
    op: CompositeOperator,
    nonlinearity: Nonlinearity,
    config: &SchemeConfig,
) -> Result<Box<dyn Stepper + Send>> {
    Ok(match config.scheme {
        Scheme::CrankNicolson => Box::new(CnStepper::new(op, nonlinearity, config)?),
        Scheme::Irk4 => Box::new(Irk4Stepper::new(op, nonlinearity, config)?),
    })
}

/// Aggregate iteration statistics of a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationStats {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub samples: usize,
}

/// Advances `u` by `n_steps`, calling `observer(step, t, u)` at step 0, every
/// `stride` steps and at the final step.
pub fn propagate<S, O>(
    u: &mut CompositeField,
    stepper: &mut S,
    n_steps: usize,
    stride: usize,
    mut observer: O,
) -> Result<PropagationStats>
where
    S: Stepper + ?Sized,
    O: FnMut(usize, f64, &CompositeField) -> Result<()>,
{
    let stride = stride.max(1);
    let h = stepper.time_step();
    let mut stats = PropagationStats::default();
    observer(0, 0.0, u)?;
    stats.samples = 1;
    for step in 1..=n_steps {
        let s = stepper
            .step(u)
            .map_err(|e| Error::StepFailed { step, cause: Box::new(e) })?;
        stats.steps = step;
        stats.total_iterations += s.iterations;
        stats.max_iterations = stats.max_iterations.max(s.iterations);
        if step % stride == 0 || step == n_steps {
            observer(step, step as f64 * h, u)?;
            stats.samples += 1;
        }
    }
    Ok(stats)
}
