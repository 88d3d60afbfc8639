//! Transparent boundary conditions on a single finite domain.
//!
//! Outside `[x_l, x_r]` the equation is free (linear case) or the integrable
//! cubic equation (nonlinear case). A discrete Dirichlet-to-Neumann map then
//! relates the outward normal derivative `g1` at each end to the history of
//! the Dirichlet trace `g0`. Both maps are written as Robin conditions
//! `g1 = α·g0 + v` and imposed through an influence decomposition of the
//! Crank–Nicolson step matrix.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix4;
use num_complex::Complex64;
// f64 math when std is absent from the build
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::integrators::{Nonlinearity, SchemeConfig, StepStats, Stepper};
use crate::linalg::StepMatrix;
use crate::multidomain::{CompositeField, CompositeOperator, Decomposition, MapKind};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Convolution weights from the recurrence `β₀ = 1, β₁ = −1`,
/// `β_{k+2} = β_k(1 − 1/(k+1))`, returned for `k = 0..=n+1`.
pub fn beta_sequence(n: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n + 2];
    beta[0] = 1.0;
    beta[1] = -1.0;
    for k in 0..n {
        beta[k + 2] = beta[k] * (1.0 - 1.0 / (k as f64 + 1.0));
    }
    beta
}

/// Taylor coefficients of `√((1 − z)/(1 + z))` for `k = 0..=n+1`:
/// `1, −1, 1/2, −1/2, 3/8, −3/8, …`.
pub fn half_derivative_weights(n: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n + 2];
    beta[0] = 1.0;
    beta[1] = -1.0;
    for k in 0..n {
        let shrink = if k % 2 == 0 { 1.0 / (k as f64 + 2.0) } else { 1.0 / (k as f64 + 1.0) };
        beta[k + 2] = beta[k] * (1.0 - shrink);
    }
    beta
}

/// Which weights discretize the half-order time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionWeights {
    /// Coefficients of the Crank–Nicolson symbol; second-order accurate.
    #[default]
    HalfDerivative,
    /// [`beta_sequence`] as stated; its even weights vanish and the map
    /// does not converge.
    Recurrence,
}

impl ConvolutionWeights {
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            ConvolutionWeights::HalfDerivative => half_derivative_weights(n),
            ConvolutionWeights::Recurrence => beta_sequence(n),
        }
    }
}

/// `F = −e^{−iπ/4}√(2/h)`, the prefactor of the discrete half derivative.
pub fn dtn_factor(h: f64) -> Complex64 {
    -Complex64::from_polar(1.0, -core::f64::consts::FRAC_PI_4) * (2.0 / h).sqrt()
}

/// Growable weight table.
#[derive(Debug, Clone)]
struct Weights {
    kind: ConvolutionWeights,
    beta: Vec<f64>,
}

impl Weights {
    fn new(kind: ConvolutionWeights, n: usize) -> Self {
        Self { kind, beta: kind.weights(n) }
    }

    /// Makes `β_0..β_{len−1}` available.
    fn ensure(&mut self, len: usize) {
        if self.beta.len() < len {
            self.beta = self.kind.weights(len.max(2 * self.beta.len()));
        }
    }

    /// `Σ_{k≥1} β_k f^{n+1−k}` for the levels `past = f^0..f^n`.
    fn history_sum(&self, past: &[Complex64]) -> Complex64 {
        let len = past.len();
        (1..=len).map(|k| past[len - k] * self.beta[k]).sum()
    }
}

/// Boundary index: `0` is `x_l`, `1` is `x_r`.
const LEFT: usize = 0;
const RIGHT: usize = 1;

/// Splits a Crank–Nicolson solve with prescribed end values into an
/// interior-driven part and two boundary influence vectors.
///
/// With `L̃` the step matrix whose first and last rows are unit rows,
/// `U = u₀ + g0_l·e_l + g0_r·e_r`, where `u₀` solves with zero end values and
/// `e_l`, `e_r` solve with unit data at `x_l` and `x_r`. The outward normal
/// derivatives then follow as `ν(u₀) + Γ·(g0_l, g0_r)`.
#[derive(Debug, Clone)]
pub struct InfluenceDecomposition {
    matrix: StepMatrix,
    influence: [Vec<Complex64>; 2],
    normal_rows: [Vec<f64>; 2],
    gamma: [[Complex64; 2]; 2],
}

impl InfluenceDecomposition {
    /// Builds `L̃ = 1 − i(h/2)𝓛` on a single finite domain.
    pub fn new(op: &CompositeOperator, decomp: &Decomposition, h: f64) -> Result<Self> {
        let [domain] = decomp.domains() else {
            return Err(Error::InvalidSetup("transparent boundaries need a single domain"));
        };
        if !matches!(domain.map.kind, MapKind::FiniteLinear { .. }) {
            return Err(Error::InvalidSetup("transparent boundaries need a finite domain"));
        }
        let n = decomp.total_size();
        let last = n - 1;
        let matrix = StepMatrix::new(op, -I * (h / 2.0))?;
        let rows_ok = op.tau_rows().len() == 2 && op.tau_rows()[0].row == 0 && op.tau_rows()[1].row == last;
        if !rows_ok {
            return Err(Error::InvalidSetup("expected Dirichlet rows at both ends"));
        }
        let left_row: Vec<f64> = domain.derivative_row(0).into_iter().map(|d| -d).collect();
        let right_row = domain.derivative_row(last);
        let mut influence = [vec![ZERO; n], vec![ZERO; n]];
        influence[LEFT][0] = Complex64::new(1.0, 0.0);
        influence[RIGHT][last] = Complex64::new(1.0, 0.0);
        for e in influence.iter_mut() {
            matrix.solve_in_place(e)?;
        }
        let normal_rows = [left_row, right_row];
        let mut gamma = [[ZERO; 2]; 2];
        for side in [LEFT, RIGHT] {
            for source in [LEFT, RIGHT] {
                gamma[side][source] = dot(&normal_rows[side], &influence[source]);
            }
        }
        Ok(Self { matrix, influence, normal_rows, gamma })
    }

    /// `Γ[side][source]`: normal derivative at `side` per unit trace at `source`.
    pub fn gamma(&self) -> [[Complex64; 2]; 2] {
        self.gamma
    }

    /// Outward normal derivatives `(−u_x(x_l), u_x(x_r))`.
    pub fn normals(&self, u: &[Complex64]) -> [Complex64; 2] {
        [dot(&self.normal_rows[LEFT], u), dot(&self.normal_rows[RIGHT], u)]
    }

    /// Turns a step right-hand side into `u₀` by zeroing the end rows and solving.
    pub fn interior(&self, rhs: &mut [Complex64]) -> Result<()> {
        let last = rhs.len() - 1;
        rhs[0] = ZERO;
        rhs[last] = ZERO;
        self.matrix.solve_in_place(rhs)
    }

    /// Solves the Robin pair `g1 = α·g0 + v` for the traces `g0`.
    pub fn boundary_traces(
        &self,
        interior: &[Complex64],
        alpha: [Complex64; 2],
        v: [Complex64; 2],
        level: usize,
    ) -> Result<[Complex64; 2]> {
        let nu = self.normals(interior);
        let g = self.gamma;
        let a = [[g[0][0] - alpha[0], g[0][1]], [g[1][0], g[1][1] - alpha[1]]];
        let r = [v[0] - nu[0], v[1] - nu[1]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let size = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if !(det.norm() > 1e-14 * size * size) {
            return Err(Error::SingularBoundarySystem { level });
        }
        Ok([
            (r[0] * a[1][1] - r[1] * a[0][1]) / det,
            (a[0][0] * r[1] - a[1][0] * r[0]) / det,
        ])
    }

    /// `u₀ + g0_l·e_l + g0_r·e_r`, written into `out`.
    pub fn reconstruct(&self, interior: &[Complex64], g0: [Complex64; 2], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = interior[i] + g0[LEFT] * self.influence[LEFT][i] + g0[RIGHT] * self.influence[RIGHT][i];
        }
    }
}

fn dot(row: &[f64], u: &[Complex64]) -> Complex64 {
    row.iter().zip(u).map(|(&r, &v)| v * r).sum()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Right-hand side `U + i(h/2)𝓛U` of the Crank–Nicolson step.
fn explicit_half(op: &CompositeOperator, u: &[Complex64], h: f64) -> Vec<Complex64> {
    op.apply(u).into_iter().zip(u).map(|(l, &v)| v + I * l * (h / 2.0)).collect()
}

fn check_single_finite(decomp: &Decomposition, op: &CompositeOperator) -> Result<()> {
    if op.size() != decomp.total_size() {
        return Err(Error::LengthMismatch { expected: decomp.total_size(), got: op.size() });
    }
    Ok(())
}

/// Crank–Nicolson for the linear equation with the discrete transparent
/// condition `g1^{n+1} = F Σ_k β_k g0^{n+1−k}` at both ends.
#[derive(Debug, Clone)]
pub struct TbcLinearStepper {
    op: CompositeOperator,
    influence: InfluenceDecomposition,
    weights: Weights,
    factor: Complex64,
    history: [Vec<Complex64>; 2],
    h: f64,
}

impl TbcLinearStepper {
    /// `u0` is the initial field; its end values start the trace histories.
    pub fn new(
        op: CompositeOperator,
        decomp: &Decomposition,
        config: &SchemeConfig,
        weights: ConvolutionWeights,
        u0: &CompositeField,
    ) -> Result<Self> {
        check_single_finite(decomp, &op)?;
        let influence = InfluenceDecomposition::new(&op, decomp, config.h)?;
        let v = u0.values();
        Ok(Self {
            op,
            influence,
            weights: Weights::new(weights, config.n_steps),
            factor: dtn_factor(config.h),
            history: [vec![v[0]], vec![v[v.len() - 1]]],
            h: config.h,
        })
    }

    /// Dirichlet traces per completed level at `x_l` and `x_r`.
    pub fn history(&self) -> &[Vec<Complex64>; 2] {
        &self.history
    }

    pub fn influence(&self) -> &InfluenceDecomposition {
        &self.influence
    }
}

impl Stepper for TbcLinearStepper {
    fn step(&mut self, u: &mut CompositeField) -> Result<StepStats> {
        let level = self.history[LEFT].len();
        self.weights.ensure(level + 1);
        let mut rhs = explicit_half(&self.op, u.values(), self.h);
        self.influence.interior(&mut rhs)?;
        let alpha = [self.factor * self.weights.beta[0]; 2];
        let mut v = [ZERO; 2];
        for side in [LEFT, RIGHT] {
            v[side] = self.factor * self.weights.history_sum(&self.history[side]);
        }
        let g0 = self.influence.boundary_traces(&rhs, alpha, v, level)?;
        self.influence.reconstruct(&rhs, g0, u.values_mut());
        for side in [LEFT, RIGHT] {
            self.history[side].push(g0[side]);
        }
        Ok(StepStats { iterations: 1, last_change: 0.0 })
    }

    fn time_step(&self) -> f64 {
        self.h
    }
}

/// One level of the auxiliary functions on the characteristic grid
/// `s_m = −t_n + 2hm`, `m = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxLevel {
    pub l1: Vec<Complex64>,
    pub l2: Vec<Complex64>,
    pub m1: Vec<Complex64>,
    pub m2: Vec<Complex64>,
}

impl AuxLevel {
    fn zeros(len: usize) -> Self {
        Self { l1: vec![ZERO; len], l2: vec![ZERO; len], m1: vec![ZERO; len], m2: vec![ZERO; len] }
    }

    pub fn len(&self) -> usize {
        self.l1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l1.is_empty()
    }
}

/// Auxiliary system of one boundary for the cubic equation
/// `iu_t + u_xx − 2ρ|u|²u = 0`.
///
/// Only the current level is stored; the trapezoidal update needs nothing
/// older, and the Dirichlet-to-Neumann map reads the diagonal trace from the
/// new level.
#[derive(Debug, Clone)]
pub struct AuxState {
    rho: f64,
    h: f64,
    level: AuxLevel,
    g0: Vec<Complex64>,
    g1: Vec<Complex64>,
    solves: u64,
}

impl AuxState {
    /// Starts at `t = 0` from the traces `g0`, `g1` of the initial data.
    pub fn new(rho: f64, h: f64, g0: Complex64, g1: Complex64) -> Self {
        let mut level = AuxLevel::zeros(1);
        level.l1[0] = I * 0.5 * g1;
        level.m1[0] = g0;
        Self { rho, h, level, g0: vec![g0], g1: vec![g1], solves: 0 }
    }

    /// Index of the current level.
    pub fn current(&self) -> usize {
        self.g0.len() - 1
    }

    pub fn level(&self) -> &AuxLevel {
        &self.level
    }

    pub fn traces(&self) -> (&[Complex64], &[Complex64]) {
        (&self.g0, &self.g1)
    }

    /// Number of 4×4 interior solves performed so far.
    pub fn interior_solves(&self) -> u64 {
        self.solves
    }

    fn a_coeff(&self, g0: Complex64, g1: Complex64) -> Complex64 {
        I * (self.rho * (g0 * g1.conj()).im)
    }

    fn b_coeff(&self, g0: Complex64, g0_t: Complex64) -> Complex64 {
        I * 0.5 * (g0_t + I * (self.rho * g0.norm_sqr()) * g0)
    }

    /// Computes level `n+1` from the current level and trial traces.
    pub fn advance(&mut self, new_g0: Complex64, new_g1: Complex64, out: &mut AuxLevel) -> Result<()> {
        let n = self.current();
        let h = self.h;
        let q = h / 2.0;
        let rho = self.rho;
        let (p0, p1) = (self.g0[n], self.g1[n]);
        let (big0, big1) = (new_g0, new_g1);
        let pa = self.a_coeff(p0, p1);
        let na = self.a_coeff(big0, big1);
        // g0_t at the midpoint of the step, shared by both trapezoid ends
        let g0_t = (big0 - p0) / h;
        let pb = self.b_coeff(p0, g0_t);
        let nb = self.b_coeff(big0, g0_t);

        let qc = Complex64::new(q, 0.0);
        let one = Complex64::new(1.0, 0.0);
        #[rustfmt::skip]
        let system = Matrix4::new(
            one, -qc * I * big1, -qc * na, -qc * nb,
            qc * I * rho * big1.conj(), one, -qc * rho * nb.conj(), qc * na,
            ZERO, -qc * 2.0 * big0, one, -qc * I * big1,
            -qc * 2.0 * rho * big0.conj(), ZERO, qc * I * rho * big1.conj(), one,
        );
        let inverse = system
            .try_inverse()
            .ok_or(Error::SingularAuxSystem { level: n + 1, column: 1 })?;

        if out.len() != n + 2 {
            *out = AuxLevel::zeros(n + 2);
        }
        let old = &self.level;
        for m in 1..=n {
            let rhs = nalgebra::Vector4::new(
                old.l1[m] + qc * (I * p1 * old.l2[m] + pa * old.m1[m] + pb * old.m2[m]),
                old.l2[m - 1]
                    + qc * (-I * rho * p1.conj() * old.l1[m - 1] + rho * pb.conj() * old.m1[m - 1]
                        - pa * old.m2[m - 1]),
                old.m1[m] + qc * (2.0 * p0 * old.l2[m] + I * p1 * old.m2[m]),
                old.m2[m - 1] + qc * (2.0 * rho * p0.conj() * old.l1[m - 1] - I * rho * p1.conj() * old.m1[m - 1]),
            );
            let x = inverse * rhs;
            out.l1[m] = x[0];
            out.l2[m] = x[1];
            out.m1[m] = x[2];
            out.m2[m] = x[3];
        }
        self.solves += n as u64;

        let m2_corner = old.m2[n] - I * h * (na + pa);
        let l2_corner = old.l2[n]
            + qc * (rho * 0.5 * (big1.norm_sqr() + p1.norm_sqr())
                + rho * (nb.conj() * big0 + pb.conj() * p0)
                - (na * m2_corner + pa * old.m2[n]));
        out.l1[0] = ZERO;
        out.l2[0] = ZERO;
        out.m1[0] = ZERO;
        out.m2[0] = ZERO;
        out.l1[n + 1] = I * 0.5 * big1;
        out.m1[n + 1] = big0;
        out.m2[n + 1] = m2_corner;
        out.l2[n + 1] = l2_corner;
        Ok(())
    }

    /// Accepts `next` (from [`AuxState::advance`] with the same traces) as
    /// the new current level.
    pub fn commit(&mut self, next: &mut AuxLevel, g0: Complex64, g1: Complex64) {
        core::mem::swap(&mut self.level, next);
        self.g0.push(g0);
        self.g1.push(g1);
    }

    /// Largest violation of the corner identities on the current level:
    /// `L1 = (i/2)g1`, `M1 = g0` on `s = t`, and all four functions zero on
    /// `s = −t` once `t > 0`.
    pub fn corner_residual(&self) -> f64 {
        let n = self.current();
        let lv = &self.level;
        let mut r = (lv.l1[n] - I * 0.5 * self.g1[n]).norm().max((lv.m1[n] - self.g0[n]).norm());
        if n > 0 {
            for v in [lv.l1[0], lv.l2[0], lv.m1[0], lv.m2[0]] {
                r = r.max(v.norm());
            }
        }
        r
    }
}

/// Robin coefficients of the nonlinear map on a freshly advanced level:
/// `g1 = (M2(t,t) + Fβ₀)·g0 + F Σ_{k≥1} β_k M1(t, s_{n+1−k})`.
fn dtn_robin(next: &AuxLevel, weights: &Weights, factor: Complex64) -> (Complex64, Complex64) {
    let top = next.len() - 1;
    let alpha = next.m2[top] + factor * weights.beta[0];
    (alpha, factor * weights.history_sum(&next.m1[..top]))
}

/// Normal derivative predicted by the nonlinear map for a freshly advanced level.
pub fn dtn_nls(next: &AuxLevel, weights: &[f64], h: f64) -> Complex64 {
    let top = next.len() - 1;
    let factor = dtn_factor(h);
    let conv: Complex64 = (0..=top).map(|k| next.m1[top - k] * weights[k]).sum();
    next.m2[top] * next.m1[top] + factor * conv
}

/// Crank–Nicolson for the cubic equation with the integrable transparent
/// condition, iterating field, traces and auxiliary systems together.
#[derive(Debug, Clone)]
pub struct TbcNlsStepper {
    op: CompositeOperator,
    influence: InfluenceDecomposition,
    nonlinearity: Nonlinearity,
    weights: Weights,
    factor: Complex64,
    aux: [AuxState; 2],
    scratch: [AuxLevel; 2],
    h: f64,
    tol: f64,
    max_iters: usize,
}

impl TbcNlsStepper {
    pub fn new(
        op: CompositeOperator,
        decomp: &Decomposition,
        rho: f64,
        config: &SchemeConfig,
        weights: ConvolutionWeights,
        u0: &CompositeField,
    ) -> Result<Self> {
        check_single_finite(decomp, &op)?;
        let influence = InfluenceDecomposition::new(&op, decomp, config.h)?;
        let v = u0.values();
        let g1 = influence.normals(v);
        let aux = [
            AuxState::new(rho, config.h, v[0], g1[LEFT]),
            AuxState::new(rho, config.h, v[v.len() - 1], g1[RIGHT]),
        ];
        Ok(Self {
            op,
            influence,
            nonlinearity: Nonlinearity::Cubic { coupling: -2.0 * rho },
            weights: Weights::new(weights, config.n_steps),
            factor: dtn_factor(config.h),
            aux,
            scratch: [AuxLevel::zeros(0), AuxLevel::zeros(0)],
            h: config.h,
            tol: config.fp_tolerance,
            max_iters: config.fp_max_iters,
        })
    }

    /// Auxiliary states at `x_l` and `x_r`.
    pub fn aux(&self) -> &[AuxState; 2] {
        &self.aux
    }
}

impl Stepper for TbcNlsStepper {
    fn step(&mut self, u: &mut CompositeField) -> Result<StepStats> {
        let h = self.h;
        let level = self.aux[LEFT].current() + 1;
        self.weights.ensure(level + 1);
        let values = u.values();
        let n = values.len();
        let mut base = explicit_half(&self.op, values, h);
        let mut rate = vec![ZERO; n];
        self.nonlinearity.rate_into(values, &mut rate);
        for (b, r) in base.iter_mut().zip(&rate) {
            *b += r * (h / 2.0);
        }
        let mut y = values.to_vec();
        let mut next = vec![ZERO; n];
        let mut rhs = vec![ZERO; n];
        let mut traces = [ZERO; 2];
        let mut normals = [ZERO; 2];
        for side in [LEFT, RIGHT] {
            let (g0, g1) = self.aux[side].traces();
            traces[side] = g0[g0.len() - 1];
            normals[side] = g1[g1.len() - 1];
        }
        let mut change = f64::INFINITY;
        for it in 1..=self.max_iters {
            self.nonlinearity.rate_into(&y, &mut rate);
            for ((x, b), r) in rhs.iter_mut().zip(&base).zip(&rate) {
                *x = b + r * (h / 2.0);
            }
            self.influence.interior(&mut rhs)?;
            let mut alpha = [ZERO; 2];
            let mut v = [ZERO; 2];
            for side in [LEFT, RIGHT] {
                self.aux[side].advance(traces[side], normals[side], &mut self.scratch[side])?;
                (alpha[side], v[side]) = dtn_robin(&self.scratch[side], &self.weights, self.factor);
            }
            let g0 = self.influence.boundary_traces(&rhs, alpha, v, level)?;
            self.influence.reconstruct(&rhs, g0, &mut next);
            let g1 = self.influence.normals(&next);
            change = max_diff(&next, &y);
            for side in [LEFT, RIGHT] {
                change = change.max((g0[side] - traces[side]).norm()).max((g1[side] - normals[side]).norm());
            }
            core::mem::swap(&mut y, &mut next);
            traces = g0;
            normals = g1;
            if change < self.tol {
                for side in [LEFT, RIGHT] {
                    self.aux[side].advance(traces[side], normals[side], &mut self.scratch[side])?;
                    self.aux[side].commit(&mut self.scratch[side], traces[side], normals[side]);
                }
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
