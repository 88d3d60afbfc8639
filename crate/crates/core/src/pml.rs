//! Perfectly matched layers: finite absorbing domains attached to the
//! computational window, with the complex-stretched second derivative
//! `A ∂_x (A ∂_x)` where `A = 1/(1 + Rσ(x))`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multidomain::{Decomposition, Domain, DomainMap, MapKind};

/// Rotation `e^{iπ/4}` of the complex coordinate stretch.
pub const ROTATION: Complex64 = Complex64::new(
    core::f64::consts::FRAC_1_SQRT_2,
    core::f64::consts::FRAC_1_SQRT_2,
);

/// Layer width and damping strength, shared by both layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlConfig {
    pub delta: f64,
    pub sigma0: f64,
}

impl PmlConfig {
    pub fn new(delta: f64, sigma0: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidSetup("layer width must be positive"));
        }
        if !(sigma0 >= 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidSetup("damping amplitude must be non-negative"));
        }
        Ok(Self { delta, sigma0 })
    }

    /// Defaults tuned for the linear Gaussian benchmark.
    pub fn linear_default() -> Self {
        Self { delta: 0.5, sigma0: 50.0 }
    }

    /// Defaults tuned for the soliton benchmark.
    pub fn nls_default() -> Self {
        Self { delta: 1.0, sigma0: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Quadratic damping profile inside one of the layers.
pub fn sigma_profile(x: f64, cfg: &PmlConfig, side: Side, x_l: f64, x_r: f64) -> Result<f64> {
    let (edge, inside) = match side {
        Side::Left => (x_l, x >= x_l - cfg.delta && x <= x_l),
        Side::Right => (x_r, x >= x_r && x <= x_r + cfg.delta),
    };
    if !inside {
        return Err(Error::OutsideLayer { x });
    }
    Ok(cfg.sigma0 * (x - edge) * (x - edge))
}

/// Stretched second derivative on a layer domain, row-major.
///
/// Non-layer domains yield the plain jacobian-scaled `D²`.
pub fn deformed_block(domain: &Domain) -> Vec<Complex64> {
    let n = domain.len();
    let (inner, sigma0) = match domain.map.kind {
        MapKind::Layer { inner, sigma0, .. } => (inner, sigma0),
        _ => (0.0, 0.0),
    };
    let weights: Vec<Complex64> = domain
        .nodes()
        .iter()
        .map(|&x| {
            let sigma = sigma0 * (x - inner) * (x - inner);
            (Complex64::new(1.0, 0.0) + ROTATION * sigma).inv()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| domain.derivative_row(i)).collect();
    // inner = diag(A) Dx, then block = diag(A) Dx · inner
    let mut inner_m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            inner_m[i * n + j] = weights[i] * rows[i][j];
        }
    }
    let mut block = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        let out = &mut block[i * n..(i + 1) * n];
        for (k, &dik) in rows[i].iter().enumerate() {
            if dik == 0.0 {
                continue;
            }
            let scale = weights[i] * dik;
            for (o, &m) in out.iter_mut().zip(&inner_m[k * n..(k + 1) * n]) {
                *o += scale * m;
            }
        }
    }
    block
}

/// Window `[x_l, x_r]` flanked by layers `[x_l - δ, x_l]` and `[x_r, x_r + δ]`.
///
/// Outer ends receive homogeneous Dirichlet rows through the usual tau
/// bookkeeping, interfaces the usual matching rows.
pub fn build_pml_decomposition(
    x_l: f64,
    x_r: f64,
    cfg: &PmlConfig,
    orders: [usize; 3],
) -> Result<Decomposition> {
    Decomposition::new(&[
        DomainMap::new(
            MapKind::Layer { inner: x_l, outer: x_l - cfg.delta, sigma0: cfg.sigma0 },
            orders[0],
        )?,
        DomainMap::new(MapKind::FiniteLinear { left: x_l, right: x_r }, orders[1])?,
        DomainMap::new(
            MapKind::Layer { inner: x_r, outer: x_r + cfg.delta, sigma0: cfg.sigma0 },
            orders[2],
        )?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidomain::{matching_rows, second_derivative_block};
    extern crate std;

    #[test]
    fn rotation_is_eighth_root_of_unity() {
        let r4 = ROTATION * ROTATION * ROTATION * ROTATION;
        assert!((r4 + Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn profile_examples() {
        let cfg = PmlConfig::linear_default();
        assert_eq!(sigma_profile(5.0, &cfg, Side::Right, -5.0, 5.0).unwrap(), 0.0);
        assert_eq!(sigma_profile(5.5, &cfg, Side::Right, -5.0, 5.0).unwrap(), 12.5);
        assert_eq!(sigma_profile(-5.5, &cfg, Side::Left, -5.0, 5.0).unwrap(), 12.5);
        let nls = PmlConfig::nls_default();
        assert_eq!(sigma_profile(26.0, &nls, Side::Right, -25.0, 25.0).unwrap(), 3.0);
        assert_eq!(
            sigma_profile(0.0, &cfg, Side::Right, -5.0, 5.0),
            Err(Error::OutsideLayer { x: 0.0 })
        );
    }

    #[test]
    fn undamped_layer_is_plain_second_derivative() {
        let cfg = PmlConfig::new(0.5, 0.0).unwrap();
        let d = build_pml_decomposition(-5.0, 5.0, &cfg, [20, 30, 20]).unwrap();
        let layer = d.domain(2);
        let block = second_derivative_block(layer);
        let jac = layer.map.dl_dx(0.0);
        let d2 = layer.diff.squared();
        let scale = d2.iter().map(|v| v.abs()).fold(0.0, f64::max) * jac * jac;
        for (a, b) in block.iter().zip(&d2) {
            assert!((a - Complex64::new(b * jac * jac, 0.0)).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let cfg = PmlConfig::linear_default();
        let d = build_pml_decomposition(-5.0, 5.0, &cfg, [20, 30, 20]).unwrap();
        for k in [0, 2] {
            let dom = d.domain(k);
            let n = dom.len();
            let block = second_derivative_block(dom);
            for i in 0..n {
                let s: Complex64 = block[i * n..(i + 1) * n].iter().sum();
                assert!(s.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn damping_deforms_plane_waves() {
        let k = 4.0;
        let mut previous = 0.0;
        for sigma0 in [0.0, 5.0, 50.0] {
            let cfg = PmlConfig::new(0.5, sigma0).unwrap();
            let d = build_pml_decomposition(-5.0, 5.0, &cfg, [10, 10, 30]).unwrap();
            let dom = d.domain(2);
            let x = dom.nodes();
            let n = dom.len();
            let u: Vec<Complex64> = x.iter().map(|&xi| Complex64::new(0.0, k * xi).exp()).collect();
            let block = second_derivative_block(dom);
            let deviation = (0..n)
                .map(|i| {
                    let v: Complex64 = (0..n).map(|j| block[i * n + j] * u[j]).sum();
                    (v + u[i] * (k * k)).norm()
                })
                .fold(0.0, f64::max);
            if sigma0 == 0.0 {
                assert!(deviation < 1e-8);
            } else {
                assert!(deviation > previous);
            }
            previous = deviation;
        }
    }

    #[test]
    fn layouts_and_outer_rows() {
        let lin = build_pml_decomposition(-5.0, 5.0, &PmlConfig::linear_default(), [20, 120, 50]).unwrap();
        assert_eq!(lin.total_size(), 21 + 121 + 51);
        assert_eq!(lin.nodes()[0], -5.5);
        assert_eq!(*lin.nodes().last().unwrap(), 5.5);
        let rows = matching_rows(&lin);
        let idx: Vec<usize> = rows.iter().map(|r| r.row).collect();
        assert_eq!(idx, vec![0, 20, 21, 141, 142, 192]);
        let constant = vec![Complex64::new(0.7, 0.0); lin.total_size()];
        assert!((rows[0].residual(&constant) - Complex64::new(0.7, 0.0)).norm() < 1e-15);
        assert!((rows[5].residual(&constant) - Complex64::new(0.7, 0.0)).norm() < 1e-15);
        let nls = build_pml_decomposition(-25.0, 25.0, &PmlConfig::nls_default(), [50, 700, 100]).unwrap();
        assert_eq!(nls.domain(0).map.order, 50);
        assert_eq!(nls.domain(2).map.order, 100);
    }
}
