//! Equations, exact reference solutions, error norms and the energy functional.
//!
//! The equation is `i u_t + u_xx + V u = 0`. The cubic case uses
//! `V = -2ρ|u|²`, so `ρ = -1` is focusing.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_complex::Complex64;
// f64 math when std is absent from the build
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::integrators::Nonlinearity;
use crate::multidomain::{CompositeField, Decomposition, Window};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Potential term of the equation.
#[derive(Debug, Clone, Copy)]
pub enum Potential {
    Zero,
    Cubic { rho: f64 },
    External(fn(f64) -> f64),
}

impl Potential {
    pub fn focusing() -> Self {
        Potential::Cubic { rho: -1.0 }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        match *self {
            Potential::Cubic { rho } => Nonlinearity::Cubic { coupling: -2.0 * rho },
            _ => Nonlinearity::Linear,
        }
    }

    /// Solution-independent diagonal on the given nodes; infinite nodes get 0.
    pub fn external_diagonal(&self, nodes: &[f64]) -> Vec<Complex64> {
        nodes
            .iter()
            .map(|&x| match self {
                Potential::External(f) if x.is_finite() => Complex64::new(f(x), 0.0),
                _ => Complex64::new(0.0, 0.0),
            })
            .collect()
    }
}

/// Closed-form solutions used as references.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactSolution {
    /// Free Gaussian drifting at speed 16.
    Gaussian,
    /// Focusing bright soliton of amplitude `√a` and speed `c`.
    Soliton { a: f64, c: f64 },
    /// Rational breather on the unit background.
    Peregrine,
    /// Galilei boost of another solution.
    Boosted { base: Box<ExactSolution>, c: f64 },
}

impl ExactSolution {
    pub fn potential(&self) -> Potential {
        match self {
            ExactSolution::Gaussian => Potential::Zero,
            ExactSolution::Soliton { .. } | ExactSolution::Peregrine => Potential::focusing(),
            ExactSolution::Boosted { base, .. } => base.potential(),
        }
    }

    /// Limit of `u(x, t)` as `x → ±∞`.
    pub fn at_infinity(&self, t: f64) -> Complex64 {
        match self {
            ExactSolution::Peregrine => (I * (2.0 * t)).exp(),
            ExactSolution::Boosted { base, .. } => {
                let v = base.at_infinity(t);
                if v == Complex64::new(0.0, 0.0) {
                    v
                } else {
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `u(x, t)`, including `x = ±∞`.
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        if !x.is_finite() {
            return self.at_infinity(t);
        }
        match self {
            ExactSolution::Gaussian => eval_gaussian(x, t),
            ExactSolution::Soliton { a, c } => eval_soliton(x, t, *a, *c),
            ExactSolution::Peregrine => eval_peregrine(x, t),
            ExactSolution::Boosted { base, c } => {
                base.eval(x - c * t, t) * (I * (c * x / 2.0 - c * c * t / 4.0)).exp()
            }
        }
    }

    /// Samples at every node of the decomposition.
    pub fn sample(&self, decomp: &Decomposition, t: f64) -> CompositeField {
        decomp.sample(|x| self.eval(x, t))
    }
}

pub fn eval_gaussian(x: f64, t: f64) -> Complex64 {
    let w = Complex64::new(1.0, 4.0 * t);
    (-(Complex64::new(x * x, -8.0 * x) + I * (64.0 * t)) / w).exp() / w.sqrt()
}

pub fn eval_soliton(x: f64, t: f64, a: f64, c: f64) -> Complex64 {
    let sa = a.sqrt();
    let amplitude = sa / (sa * (x - c * t)).cosh();
    (I * (c * x / 2.0 + (a - c * c / 4.0) * t)).exp() * amplitude
}

pub fn eval_peregrine(x: f64, t: f64) -> Complex64 {
    let rational = Complex64::new(4.0, 16.0 * t) / (1.0 + 4.0 * x * x + 16.0 * t * t);
    (Complex64::new(1.0, 0.0) - rational) * (I * (2.0 * t)).exp()
}

/// `û(x,t) = u(x − ct, t)·exp(icx/2 − ic²t/4)`.
pub fn galilei_boost(solution: ExactSolution, c: f64) -> ExactSolution {
    if c == 0.0 {
        return solution;
    }
    match solution {
        ExactSolution::Boosted { base, c: c0 } if c0 + c == 0.0 => *base,
        other => ExactSolution::Boosted { base: Box::new(other), c },
    }
}

/// Applies the Galilei boost to a decaying numerical field at time `t`,
/// interpolating at the shifted points.
pub fn boost_field(decomp: &Decomposition, values: &[Complex64], c: f64, t: f64) -> Vec<Complex64> {
    decomp
        .nodes()
        .iter()
        .map(|&x| {
            if !x.is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            let shifted = decomp.evaluate(values, x - c * t).unwrap_or_default();
            shifted * (I * (c * x / 2.0 - c * c * t / 4.0)).exp()
        })
        .collect()
}

/// Relative `L²` error `‖u − u_ex‖/‖u_ex‖` over the window.
pub fn error_delta(
    decomp: &Decomposition,
    u: &[Complex64],
    exact: &[Complex64],
    window: Window,
) -> Result<f64> {
    if u.len() != exact.len() {
        return Err(Error::LengthMismatch { expected: exact.len(), got: u.len() });
    }
    let diff: Vec<f64> = u.iter().zip(exact).map(|(a, b)| (a - b).norm_sqr()).collect();
    let reference: Vec<Complex64> = exact.iter().map(|b| Complex64::new(b.norm_sqr(), 0.0)).collect();
    let denominator = decomp.integrate(&reference, window)?.re;
    if !(denominator > 0.0) {
        return Err(Error::VanishingNorm);
    }
    let scale = reference.iter().map(|v| v.re).fold(0.0, f64::max);
    let numerator = decomp.integrate_nonnegative(&diff, window, scale)?;
    Ok((numerator / denominator).sqrt())
}

/// Relative max-norm error over all nodes.
pub fn error_delta_inf(u: &[Complex64], exact: &[Complex64]) -> Result<f64> {
    let den = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(den > 0.0) {
        return Err(Error::VanishingNorm);
    }
    let num = u.iter().zip(exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(num / den)
}

/// Largest pointwise `|u − u_ex|` over the nodes of `window`.
pub fn absolute_error_inf(decomp: &Decomposition, u: &[Complex64], exact: &[Complex64], window: Window) -> Result<f64> {
    if u.len() != decomp.total_size() || exact.len() != decomp.total_size() {
        return Err(Error::LengthMismatch { expected: decomp.total_size(), got: u.len().min(exact.len()) });
    }
    let mut worst: f64 = 0.0;
    for d in decomp.domains() {
        if window.includes(d) {
            for i in d.range() {
                worst = worst.max((u[i] - exact[i]).norm());
            }
        }
    }
    Ok(worst)
}

/// `E = ½∫(|u_x|² − |u|²(|u|² − 1)) dx` over the whole decomposition.
pub fn energy_functional(decomp: &Decomposition, u: &[Complex64]) -> Result<f64> {
    let ux = decomp.derivative(u);
    let density: Vec<Complex64> = u
        .iter()
        .zip(&ux)
        .map(|(v, d)| {
            let m = v.norm_sqr();
            Complex64::new(0.5 * (d.norm_sqr() - m * (m - 1.0)), 0.0)
        })
        .collect();
    Ok(decomp.integrate(&density, Window::WholeLine)?.re)
}

/// Peregrine data at `t = 0` plus `amplitude·exp(−x²)`.
pub fn perturbed_peregrine_initial(decomp: &Decomposition, amplitude: f64) -> CompositeField {
    decomp.sample(|x| {
        let base = ExactSolution::Peregrine.eval(x, 0.0);
        if x.is_finite() {
            base + amplitude * (-x * x).exp()
        } else {
            base
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidomain::assemble;
    extern crate std;
    use alloc::vec;

    #[test]
    fn gaussian_examples() {
        assert!((eval_gaussian(0.0, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for x in [-1.5, 0.3, 2.0] {
            assert!((eval_gaussian(x, 0.0).norm() - (-x * x).exp()).abs() < 1e-15);
        }
        // |u| peaks where x = 16t
        let t = 0.3125;
        let peak = (0..=2000)
            .map(|i| 4.0 + i as f64 * 0.0005)
            .max_by(|a, b| eval_gaussian(*a, t).norm().partial_cmp(&eval_gaussian(*b, t).norm()).unwrap())
            .unwrap();
        assert!((peak - 5.0).abs() < 1e-3);
    }

    #[test]
    fn soliton_examples() {
        let s = ExactSolution::Soliton { a: 2.0, c: 15.0 };
        assert!((s.eval(15.0 * 0.7, 0.7).norm() - 2f64.sqrt()).abs() < 1e-14);
        assert!(s.eval(25.0, 0.0).norm() < 1e-14);
        assert!(s.eval(25.0, 0.0).norm() > 1e-16);
        assert_eq!(s.eval(f64::INFINITY, 1.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn peregrine_examples() {
        assert!((eval_peregrine(0.0, 0.0) - Complex64::new(-3.0, 0.0)).norm() < 1e-15);
        assert!((eval_peregrine(1e8, 0.4).norm() - 1.0).abs() < 1e-12);
        let t = 0.37;
        assert_eq!(ExactSolution::Peregrine.eval(f64::NEG_INFINITY, t), (I * (2.0 * t)).exp());
    }

    #[test]
    fn boost_examples() {
        let still = ExactSolution::Soliton { a: 2.0, c: 0.0 };
        assert_eq!(galilei_boost(still.clone(), 0.0), still);
        let moving = galilei_boost(still.clone(), 15.0);
        let reference = ExactSolution::Soliton { a: 2.0, c: 15.0 };
        for (x, t) in [(0.0, 0.0), (3.0, 0.2), (-1.0, 0.05), (20.0, 1.4)] {
            assert!((moving.eval(x, t) - reference.eval(x, t)).norm() < 1e-12);
        }
        assert_eq!(galilei_boost(moving, -15.0), still);
    }

    #[test]
    fn double_boost_is_identity_pointwise() {
        let base = ExactSolution::Gaussian;
        let there = ExactSolution::Boosted { base: Box::new(base.clone()), c: 3.0 };
        let back = ExactSolution::Boosted { base: Box::new(there), c: -3.0 };
        for (x, t) in [(0.5, 0.1), (-2.0, 0.3)] {
            assert!((back.eval(x, t) - base.eval(x, t)).norm() < 1e-13);
        }
    }

    /// `i u_t + u_xx + V u` with a centred difference in time and the spectral
    /// operator in space.
    fn residual(sol: &ExactSolution, decomp: &Decomposition, t: f64) -> f64 {
        let dt = 1e-4;
        let nodes = decomp.nodes();
        let op = assemble(decomp, &vec![Complex64::new(0.0, 0.0); nodes.len()]).unwrap();
        let u = sol.sample(decomp, t);
        let uxx = op.apply(u.values());
        let coupling = match sol.potential().nonlinearity() {
            Nonlinearity::Cubic { coupling } => coupling,
            Nonlinearity::Linear => 0.0,
        };
        let skip: Vec<usize> = op.tau_rows().iter().map(|r| r.row).collect();
        (0..nodes.len())
            .filter(|i| !skip.contains(i))
            .map(|i| {
                let x = nodes[i];
                let ut = (sol.eval(x, t + 2.0 * dt) * -1.0 + sol.eval(x, t + dt) * 8.0
                    - sol.eval(x, t - dt) * 8.0
                    + sol.eval(x, t - 2.0 * dt))
                    / (12.0 * dt);
                let v = u.values()[i];
                (I * ut + uxx[i] + v * (coupling * v.norm_sqr())).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn exact_solutions_satisfy_their_equations() {
        let d = Decomposition::ced(-5.0, 5.0, [40, 120, 80]).unwrap();
        assert!(residual(&ExactSolution::Gaussian, &d, 0.1) < 1e-6);
        let d = Decomposition::ced(-10.0, 10.0, [60, 300, 60]).unwrap();
        assert!(residual(&ExactSolution::Soliton { a: 2.0, c: 1.5 }, &d, 0.2) < 1e-6);
        assert!(residual(&ExactSolution::Peregrine, &d, 0.3) < 1e-6);
    }

    #[test]
    fn error_norm_examples() {
        let d = Decomposition::ced(-5.0, 5.0, [30, 100, 60]).unwrap();
        let ex = ExactSolution::Gaussian.sample(&d, 0.1);
        assert!(error_delta(&d, ex.values(), ex.values(), Window::WholeLine).unwrap() < 1e-14);
        let twice: Vec<Complex64> = ex.values().iter().map(|v| v * 2.0).collect();
        assert!((error_delta(&d, &twice, ex.values(), Window::WholeLine).unwrap() - 1.0).abs() < 1e-12);
        assert!((error_delta(&d, &twice, ex.values(), Window::Computational).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(error_delta_inf(ex.values(), ex.values()).unwrap(), 0.0);
        let zeros = vec![Complex64::new(0.0, 0.0); d.total_size()];
        assert_eq!(error_delta(&d, &zeros, &zeros, Window::WholeLine), Err(Error::VanishingNorm));
    }

    #[test]
    fn peregrine_rejects_whole_line_l2() {
        let d = Decomposition::ced(-10.0, 10.0, [50, 100, 50]).unwrap();
        let ex = ExactSolution::Peregrine.sample(&d, 0.0);
        assert!(matches!(
            error_delta(&d, ex.values(), ex.values(), Window::WholeLine),
            Err(Error::NonDecaying { .. })
        ));
    }

    #[test]
    fn energy_examples() {
        let d = Decomposition::ced(-10.0, 10.0, [50, 700, 50]).unwrap();
        let flat = vec![Complex64::new(1.0, 0.0); d.total_size()];
        assert!(energy_functional(&d, &flat).unwrap().abs() < 1e-25);
        let p = ExactSolution::Peregrine.sample(&d, 0.0);
        assert!(energy_functional(&d, p.values()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn perturbed_peregrine_examples() {
        let d = Decomposition::ced(-10.0, 10.0, [50, 100, 50]).unwrap();
        let p0 = perturbed_peregrine_initial(&d, 0.0);
        assert_eq!(p0, ExactSolution::Peregrine.sample(&d, 0.0));
        let p = perturbed_peregrine_initial(&d, 0.1);
        let centre = d.domain(1).offset + 50;
        assert_eq!(d.nodes()[centre], 0.0);
        assert!((p.values()[centre] - Complex64::new(-2.9, 0.0)).norm() < 1e-15);
        for i in 0..d.total_size() {
            assert_eq!(p.values()[i], p.values()[d.mirror_index(i)]);
        }
    }

    #[test]
    fn potential_sign_convention() {
        assert_eq!(Potential::focusing().nonlinearity(), Nonlinearity::Cubic { coupling: 2.0 });
        assert_eq!(Potential::Cubic { rho: 1.0 }.nonlinearity(), Nonlinearity::Cubic { coupling: -2.0 });
        assert_eq!(Potential::Zero.nonlinearity(), Nonlinearity::Linear);
        let ext = Potential::External(|x| x * x);
        assert_eq!(
            ext.external_diagonal(&[2.0, f64::INFINITY]),
            vec![Complex64::new(4.0, 0.0), Complex64::new(0.0, 0.0)]
        );
    }
}
