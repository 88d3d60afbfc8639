//! Chebyshev machinery on the reference interval `[-1, 1]`.
//!
//! Grids use the Gauss–Lobatto points `l_j = cos(jπ/N)`, ordered from `l_0 = 1`
//! down to `l_N = -1`. Differentiation matrices are the exact derivatives of the
//! degree-`N` interpolant; coefficient transforms are direct `O(N²)` cosine sums.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// f64 math when std is absent from the build
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Collocation grid of order `N` (`N + 1` points).
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    n: usize,
    points: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateGrid);
        }
        // sin form keeps the grid exactly antisymmetric and the endpoints exactly ±1
        let nf = n as f64;
        let points = (0..=n)
            .map(|j| (PI * (nf - 2.0 * j as f64) / (2.0 * nf)).sin())
            .collect();
        Ok(Self { n, points })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Barycentric interpolation of grid samples at an arbitrary `l ∈ [-1, 1]`.
    pub fn interpolate(&self, values: &[Complex64], l: f64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, (&lj, &fj)) in self.points.iter().zip(values).enumerate() {
            let diff = l - lj;
            if diff == 0.0 {
                return fj;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == self.n {
                w *= 0.5;
            }
            let c = w / diff;
            num += fj * c;
            den += c;
        }
        num / den
    }
}

/// Convenience constructor matching [`ChebGrid::new`].
pub fn collocation_points(n: usize) -> Result<ChebGrid> {
    ChebGrid::new(n)
}

/// Dense `(N+1)×(N+1)` differentiation matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DiffMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateGrid);
        }
        let size = n + 1;
        let nf = n as f64;
        let mut entries = vec![0.0; size * size];
        let weight = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        for i in 0..size {
            for j in 0..size {
                if i == j {
                    continue;
                }
                // l_i - l_j via the product formula avoids cancellation
                let diff = -2.0
                    * ((i + j) as f64 * PI / (2.0 * nf)).sin()
                    * ((i as f64 - j as f64) * PI / (2.0 * nf)).sin();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                entries[i * size + j] = weight(i) / weight(j) * sign / diff;
            }
        }
        // negative-sum trick: rows annihilate constants exactly up to rounding
        for i in 0..size {
            let row = &mut entries[i * size..(i + 1) * size];
            let mut off: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            off.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(core::cmp::Ordering::Equal));
            row[i] = -off.iter().sum::<f64>();
        }
        Ok(Self { n, entries })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = self.size();
        &self.entries[i * s..(i + 1) * s]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn apply(&self, values: &[Complex64]) -> Vec<Complex64> {
        (0..self.size())
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(values)
                    .map(|(&d, &v)| v * d)
                    .sum()
            })
            .collect()
    }

    /// `D²` as a row-major matrix.
    pub fn squared(&self) -> Vec<f64> {
        let s = self.size();
        let mut out = vec![0.0; s * s];
        for i in 0..s {
            let row_i = self.row(i);
            let out_row = &mut out[i * s..(i + 1) * s];
            for (k, &dik) in row_i.iter().enumerate() {
                if dik == 0.0 {
                    continue;
                }
                for (o, &dkj) in out_row.iter_mut().zip(self.row(k)) {
                    *o += dik * dkj;
                }
            }
        }
        out
    }
}

/// Convenience constructor matching [`DiffMatrix::new`].
pub fn diff_matrix(n: usize) -> Result<DiffMatrix> {
    DiffMatrix::new(n)
}

/// Chebyshev coefficients `a_n` of `Σ a_n T_n(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs(pub Vec<Complex64>);

impl SpectralCoeffs {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Clenshaw evaluation of the series at `l`.
    pub fn evaluate(&self, l: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let (mut b1, mut b2) = (zero, zero);
        for &a in self.0.iter().skip(1).rev() {
            let b0 = a + b1 * (2.0 * l) - b2;
            b2 = b1;
            b1 = b0;
        }
        match self.0.first() {
            Some(&a0) => a0 + b1 * l - b2,
            None => zero,
        }
    }

    /// Largest modulus among the last `count` coefficients.
    pub fn tail_magnitude(&self, count: usize) -> f64 {
        let start = self.0.len().saturating_sub(count);
        self.0[start..].iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// `cos(kπ/N)` for `k = 0..2N`, computed in the symmetric sine form.
fn cos_table(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..2 * n)
        .map(|k| (PI * (nf - 2.0 * k as f64) / (2.0 * nf)).sin())
        .collect()
}

/// Values on the grid → coefficients.
pub fn to_coefficients(values: &[Complex64]) -> Result<SpectralCoeffs> {
    if values.len() < 2 {
        return Err(Error::DegenerateGrid);
    }
    let n = values.len() - 1;
    let table = cos_table(n);
    let edge = |j: usize| if j == 0 || j == n { 0.5 } else { 1.0 };
    let coeffs = (0..=n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &f) in values.iter().enumerate() {
                acc += f * (edge(j) * table[(k * j) % (2 * n)]);
            }
            acc * (2.0 * edge(k) / n as f64)
        })
        .collect();
    Ok(SpectralCoeffs(coeffs))
}

/// Coefficients → values on the grid of the same order.
pub fn from_coefficients(coeffs: &SpectralCoeffs) -> Result<Vec<Complex64>> {
    if coeffs.len() < 2 {
        return Err(Error::DegenerateGrid);
    }
    let n = coeffs.len() - 1;
    let table = cos_table(n);
    Ok((0..=n)
        .map(|j| {
            coeffs
                .0
                .iter()
                .enumerate()
                .map(|(k, &a)| a * table[(k * j) % (2 * n)])
                .sum()
        })
        .collect())
}

/// Clenshaw–Curtis weights on the Chebyshev grid of order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights(pub Vec<f64>);

impl QuadratureWeights {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateGrid);
        }
        let nf = n as f64;
        let mut w = vec![0.0; n + 1];
        let theta = |j: usize| j as f64 * PI / nf;
        let end = if n.is_multiple_of(2) {
            1.0 / (nf * nf - 1.0)
        } else {
            1.0 / (nf * nf)
        };
        w[0] = end;
        w[n] = end;
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let mut v = 1.0;
            let upper = if n.is_multiple_of(2) { n / 2 - 1 } else { (n - 1) / 2 };
            for k in 1..=upper {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta(j)).cos() / (4.0 * kf * kf - 1.0);
            }
            if n.is_multiple_of(2) {
                v -= (nf * theta(j)).cos() / (nf * nf - 1.0);
            }
            *wj = 2.0 * v / nf;
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `Σ w_n f(l_n)`, the Clenshaw–Curtis approximation of `∫_{-1}^{1} f dl`.
pub fn clenshaw_curtis(values: &[Complex64], weights: &QuadratureWeights) -> Result<Complex64> {
    if values.len() != weights.0.len() {
        return Err(Error::LengthMismatch {
            expected: weights.0.len(),
            got: values.len(),
        });
    }
    Ok(values.iter().zip(&weights.0).map(|(&f, &w)| f * w).sum())
}

/// Which linear factor `(l + 1)` or `(l - 1)` to divide or multiply by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `l + 1`, vanishing at `l = -1`.
    Plus,
    /// `l - 1`, vanishing at `l = 1`.
    Minus,
}

impl Factor {
    fn sign(self) -> f64 {
        match self {
            Factor::Plus => 1.0,
            Factor::Minus => -1.0,
        }
    }

    /// The root of the factor.
    pub fn root(self) -> f64 {
        -self.sign()
    }
}

/// Value of the series at the root of `factor`, i.e. the residue that has to
/// vanish for the division to be exact.
pub fn residue(a: &SpectralCoeffs, factor: Factor) -> Complex64 {
    let r = factor.root();
    a.0.iter()
        .enumerate()
        .map(|(k, &c)| if r < 0.0 && k % 2 == 1 { -c } else { c })
        .sum()
}

/// Divides `Σ a_n T_n` by `(l ± 1)` in coefficient space.
///
/// The residue at the root is removed first, so the division is always exact in
/// exact arithmetic. The result has the same length as the input with the
/// top coefficient zero.
pub fn divide_by_factor(a: &SpectralCoeffs, factor: Factor) -> SpectralCoeffs {
    let n = a.0.len();
    if n == 0 {
        return SpectralCoeffs(Vec::new());
    }
    let sign = factor.sign();
    let mut shifted = a.0.clone();
    shifted[0] -= residue(a, factor);
    let zero = Complex64::new(0.0, 0.0);
    let mut b = vec![zero; n + 1];
    // a_k = b_{k-1}/2 ± b_k + b_{k+1}/2 for k ≥ 2, solved downward from b_N = 0
    for k in (2..n).rev() {
        b[k - 1] = (shifted[k] - b[k] * sign) * 2.0 - b[k + 1];
    }
    if n >= 2 {
        b[0] = shifted[1] - b[1] * sign - b[2] * 0.5;
    }
    b.truncate(n);
    SpectralCoeffs(b)
}

/// Multiplies `Σ b_n T_n` by `(l ± 1)`; the output has one more coefficient.
pub fn multiply_by_factor(b: &SpectralCoeffs, factor: Factor) -> SpectralCoeffs {
    let n = b.0.len();
    let sign = factor.sign();
    let mut a = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, &bk) in b.0.iter().enumerate() {
        a[k] += bk * sign;
        if k == 0 {
            a[1] += bk;
        } else {
            a[k + 1] += bk * 0.5;
            a[k - 1] += bk * 0.5;
        }
    }
    SpectralCoeffs(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    extern crate std;
    use std::f64::consts::E;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        ChebGrid::new(n).unwrap().points().iter().map(|&l| c(f(l))).collect()
    }

    #[test]
    fn grid_small_orders() {
        assert_eq!(ChebGrid::new(2).unwrap().points(), &[1.0, 0.0, -1.0]);
        let g = ChebGrid::new(4).unwrap();
        let h = 2f64.sqrt() / 2.0;
        for (p, e) in g.points().iter().zip([1.0, h, 0.0, -h, -1.0]) {
            assert!((p - e).abs() < 1e-15);
        }
        let g = ChebGrid::new(120).unwrap();
        assert_eq!(g.points()[0], 1.0);
        assert_eq!(g.points()[120], -1.0);
        assert!(g.points().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn zero_order_is_rejected() {
        assert_eq!(ChebGrid::new(0), Err(Error::DegenerateGrid));
        assert_eq!(DiffMatrix::new(0), Err(Error::DegenerateGrid));
    }

    #[test]
    fn diff_matrix_order_one() {
        let d = DiffMatrix::new(1).unwrap();
        assert_eq!(d.entries(), &[0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn diff_rows_sum_to_zero() {
        for n in [1, 5, 16, 64, 200] {
            let d = DiffMatrix::new(n).unwrap();
            for i in 0..=n {
                let scale: f64 = d.row(i).iter().map(|v| v.abs()).sum();
                assert!(d.row(i).iter().sum::<f64>().abs() < 1e-14 * scale, "n={n} row={i}");
            }
        }
    }

    #[test]
    fn second_derivative_of_cubic() {
        for n in [3, 4, 9, 30] {
            let d = DiffMatrix::new(n).unwrap();
            let d2 = d.squared();
            let g = ChebGrid::new(n).unwrap();
            let f: Vec<f64> = g.points().iter().map(|l| l * l * l).collect();
            for i in 0..=n {
                let v: f64 = (0..=n).map(|j| d2[i * (n + 1) + j] * f[j]).sum();
                let expected = 6.0 * g.points()[i];
                assert!((v - expected).abs() < 1e-10 * (n * n) as f64, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn diff_exact_on_polynomials() {
        let n = 12;
        let d = DiffMatrix::new(n).unwrap();
        let u = sample(n, |l| l.powi(12) - 3.0 * l.powi(5) + 2.0);
        let du = d.apply(&u);
        let g = ChebGrid::new(n).unwrap();
        for (j, &l) in g.points().iter().enumerate() {
            let expected = 12.0 * l.powi(11) - 15.0 * l.powi(4);
            assert!((du[j].re - expected).abs() < 1e-10 * (n * n) as f64);
        }
    }

    #[test]
    fn coefficients_of_basis_and_constant() {
        let t3 = sample(5, |l| 4.0 * l * l * l - 3.0 * l);
        let a = to_coefficients(&t3).unwrap();
        for (k, ak) in a.0.iter().enumerate() {
            let expected = if k == 3 { 1.0 } else { 0.0 };
            assert!((ak - c(expected)).norm() < 1e-14);
        }
        let constant = vec![Complex64::new(2.5, -1.0); 9];
        let a = to_coefficients(&constant).unwrap();
        assert!((a.0[0] - Complex64::new(2.5, -1.0)).norm() < 1e-14);
        assert!(a.0[1..].iter().all(|x| x.norm() < 1e-14));
    }

    /// Chebyshev coefficients by trapezoidal quadrature in θ, which is
    /// spectrally accurate for the periodic integrand `f(cos θ) cos(nθ)`.
    fn quadrature_coefficient(f: impl Fn(f64) -> f64, k: usize) -> f64 {
        let m = 4000;
        let mut acc = 0.0;
        for i in 0..m {
            let th = 2.0 * PI * i as f64 / m as f64;
            acc += f(th.cos()) * (k as f64 * th).cos();
        }
        let scale = if k == 0 { 1.0 } else { 2.0 };
        scale * acc / m as f64
    }

    #[test]
    fn exp_coefficients_match_quadrature() {
        let a = to_coefficients(&sample(20, f64::exp)).unwrap();
        assert!(a.0[20].norm() < 1e-13);
        for k in 0..=10 {
            let oracle = quadrature_coefficient(f64::exp, k);
            assert!((a.0[k].re - oracle).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn analytic_function_has_geometric_decay() {
        let a = to_coefficients(&sample(60, |l| 1.0 / (2.0 + l))).unwrap();
        let max = a.0.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(a.0[60].norm() / max < 1e-10);
    }

    #[test]
    fn clenshaw_curtis_examples() {
        for n in [1, 2, 7, 30] {
            let w = QuadratureWeights::new(n).unwrap();
            let v = clenshaw_curtis(&vec![c(1.0); n + 1], &w).unwrap();
            assert!((v.re - 2.0).abs() < 1e-13);
            assert!(w.as_slice().iter().all(|&x| x > 0.0));
        }
        let w2 = QuadratureWeights::new(2).unwrap();
        for (a, b) in w2.as_slice().iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let v = clenshaw_curtis(&sample(2, |l| l * l), &w2).unwrap();
        assert!((v.re - 2.0 / 3.0).abs() < 1e-15);
        let v = clenshaw_curtis(&sample(20, f64::exp), &QuadratureWeights::new(20).unwrap()).unwrap();
        assert!((v.re - (E - 1.0 / E)).abs() < 1e-13);
    }

    #[test]
    fn clenshaw_curtis_length_mismatch() {
        let w = QuadratureWeights::new(4).unwrap();
        assert_eq!(
            clenshaw_curtis(&[c(1.0); 3], &w),
            Err(Error::LengthMismatch { expected: 5, got: 3 })
        );
    }

    #[test]
    fn quadrature_derivative_duality() {
        let n = 16;
        let d = DiffMatrix::new(n).unwrap();
        let w = QuadratureWeights::new(n).unwrap();
        let f = |l: f64| l.powi(15) - 2.0 * l.powi(4) + l;
        let df = d.apply(&sample(n, f));
        let integral = clenshaw_curtis(&df, &w).unwrap();
        assert!((integral.re - (f(1.0) - f(-1.0))).abs() < 1e-11);
    }

    #[test]
    fn divide_examples() {
        let a = SpectralCoeffs(vec![c(1.0), c(1.0), c(0.0), c(0.0)]);
        let b = divide_by_factor(&a, Factor::Plus);
        assert!((b.0[0] - c(1.0)).norm() < 1e-15);
        assert!(b.0[1..].iter().all(|x| x.norm() < 1e-15));

        // (l - 1) T_1 = l² - l = T_2/2 - T_1 + 1/2
        let a = SpectralCoeffs(vec![c(0.5), c(-1.0), c(0.5), c(0.0)]);
        let b = divide_by_factor(&a, Factor::Minus);
        for (k, bk) in b.0.iter().enumerate() {
            let expected = if k == 1 { 1.0 } else { 0.0 };
            assert!((bk - c(expected)).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn divide_removes_residue() {
        // f = 3 + T_2 has f(-1) = 4; dividing (f - 4) by (l + 1) gives 2(l - 1)
        let a = SpectralCoeffs(vec![c(3.0), c(0.0), c(1.0)]);
        assert!((residue(&a, Factor::Plus) - c(4.0)).norm() < 1e-15);
        let b = divide_by_factor(&a, Factor::Plus);
        for l in [-0.7, 0.1, 0.9] {
            let lhs = b.evaluate(l) * (l + 1.0);
            let rhs = SpectralCoeffs(vec![c(3.0), c(0.0), c(1.0)]).evaluate(l) - c(4.0);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let g = ChebGrid::new(10).unwrap();
        let f = |l: f64| l.powi(7) - l;
        let v: Vec<Complex64> = g.points().iter().map(|&l| c(f(l))).collect();
        for l in [-0.93, -0.2, 0.0, 0.55, 1.0] {
            assert!((g.interpolate(&v, l).re - f(l)).abs() < 1e-13);
        }
    }

    #[test]
    fn series_evaluation_matches_transform() {
        let g = ChebGrid::new(8).unwrap();
        let v = sample(8, |l| (3.0 * l).sin());
        let a = to_coefficients(&v).unwrap();
        for (j, &l) in g.points().iter().enumerate() {
            assert!((a.evaluate(l) - v[j]).norm() < 1e-14);
        }
    }
}
