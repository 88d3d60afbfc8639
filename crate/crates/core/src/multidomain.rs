//! Domain maps, the global decomposition of the line, operator assembly and
//! whole-line integrals.
//!
//! Every domain is oriented so that local index `j` grows with `x`: `l = 1` is
//! the left end and `l = -1` the right end. The compactified exterior domains
//! use `s = 1/x`, which is linear in `l`, and carry the point at infinity as a
//! regular collocation node.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cheb::{
    divide_by_factor, residue, to_coefficients, ChebGrid, DiffMatrix, Factor,
    QuadratureWeights, SpectralCoeffs,
};
use crate::error::{Error, Result};
use crate::pml;

/// Residues above this fraction of the integrand's maximum (or of machine
/// epsilon, whichever is larger) mean the integrand does not vanish at infinity.
pub const DECAY_TOLERANCE: f64 = 1e-6;

/// Geometry of one domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    /// `x = left (1+l)/2 + right (1-l)/2`.
    FiniteLinear { left: f64, right: f64 },
    /// `x = 2 x_l / (1 - l)`, covering `(-∞, x_l]`.
    CompactifiedLeft { x_l: f64 },
    /// `x = 2 x_r / (1 + l)`, covering `[x_r, ∞)`.
    CompactifiedRight { x_r: f64 },
    /// Finite absorbing layer between `inner` (touching the interior) and `outer`.
    Layer { inner: f64, outer: f64, sigma0: f64 },
}

/// A map together with its Chebyshev order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMap {
    pub kind: MapKind,
    pub order: usize,
}

impl DomainMap {
    pub fn new(kind: MapKind, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::DegenerateGrid);
        }
        let ok = match kind {
            MapKind::FiniteLinear { left, right } => left.is_finite() && right.is_finite() && left < right,
            MapKind::CompactifiedLeft { x_l } => x_l.is_finite() && x_l < 0.0,
            MapKind::CompactifiedRight { x_r } => x_r.is_finite() && x_r > 0.0,
            MapKind::Layer { inner, outer, sigma0 } => {
                inner.is_finite() && outer.is_finite() && inner != outer && sigma0 >= 0.0
            }
        };
        if !ok {
            return Err(Error::InvalidMap(match kind {
                MapKind::FiniteLinear { .. } => "finite domain needs left < right",
                MapKind::CompactifiedLeft { .. } => "left exterior needs x_l < 0",
                MapKind::CompactifiedRight { .. } => "right exterior needs x_r > 0",
                MapKind::Layer { .. } => "layer needs distinct ends and sigma0 >= 0",
            }));
        }
        Ok(Self { kind, order })
    }

    /// Physical interval `[a, b]` covered by the map (ends may be infinite).
    pub fn interval(&self) -> (f64, f64) {
        match self.kind {
            MapKind::FiniteLinear { left, right } => (left, right),
            MapKind::CompactifiedLeft { x_l } => (f64::NEG_INFINITY, x_l),
            MapKind::CompactifiedRight { x_r } => (x_r, f64::INFINITY),
            MapKind::Layer { inner, outer, .. } => (inner.min(outer), inner.max(outer)),
        }
    }

    pub fn is_compactified(&self) -> bool {
        matches!(
            self.kind,
            MapKind::CompactifiedLeft { .. } | MapKind::CompactifiedRight { .. }
        )
    }

    pub fn is_finite(&self) -> bool {
        !self.is_compactified()
    }

    /// `x(l)`; the infinity end of a compactified map returns `±∞`.
    pub fn to_physical(&self, l: f64) -> f64 {
        match self.kind {
            MapKind::CompactifiedLeft { x_l } => {
                if l >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    2.0 * x_l / (1.0 - l)
                }
            }
            MapKind::CompactifiedRight { x_r } => {
                if l <= -1.0 {
                    f64::INFINITY
                } else {
                    2.0 * x_r / (1.0 + l)
                }
            }
            _ => {
                let (left, right) = self.interval();
                0.5 * left * (1.0 + l) + 0.5 * right * (1.0 - l)
            }
        }
    }

    /// `l(x)`, the inverse of [`DomainMap::to_physical`].
    pub fn to_local(&self, x: f64) -> f64 {
        match self.kind {
            MapKind::CompactifiedLeft { x_l } => 1.0 - 2.0 * x_l / x,
            MapKind::CompactifiedRight { x_r } => 2.0 * x_r / x - 1.0,
            _ => {
                let (left, right) = self.interval();
                (2.0 * x - left - right) / (left - right)
            }
        }
    }

    /// `dl/dx` at local coordinate `l`; zero at a compactified infinity.
    pub fn dl_dx(&self, l: f64) -> f64 {
        match self.kind {
            MapKind::CompactifiedLeft { x_l } => (1.0 - l) * (1.0 - l) / (2.0 * x_l),
            MapKind::CompactifiedRight { x_r } => -(1.0 + l) * (1.0 + l) / (2.0 * x_r),
            _ => {
                let (left, right) = self.interval();
                2.0 / (left - right)
            }
        }
    }

    /// `s = 1/x` at `l` for compactified maps, `None` otherwise.
    pub fn inverse_coordinate(&self, l: f64) -> Option<f64> {
        match self.kind {
            MapKind::CompactifiedLeft { x_l } => Some((1.0 - l) / (2.0 * x_l)),
            MapKind::CompactifiedRight { x_r } => Some((1.0 + l) / (2.0 * x_r)),
            _ => None,
        }
    }

    /// `dl/ds` for compactified maps.
    fn dl_ds(&self) -> Option<f64> {
        match self.kind {
            MapKind::CompactifiedLeft { x_l } => Some(-2.0 * x_l),
            MapKind::CompactifiedRight { x_r } => Some(2.0 * x_r),
            _ => None,
        }
    }
}

/// Evaluates a map at local coordinate `l`.
pub fn map_to_physical(map: &DomainMap, l: f64) -> f64 {
    map.to_physical(l)
}

/// One domain of a decomposition: its map, grid, differentiation matrix and
/// global offset.
#[derive(Debug, Clone)]
pub struct Domain {
    pub map: DomainMap,
    pub grid: ChebGrid,
    pub diff: DiffMatrix,
    pub offset: usize,
}

impl Domain {
    pub fn len(&self) -> usize {
        self.map.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    /// Physical nodes, ascending in `x`.
    pub fn nodes(&self) -> Vec<f64> {
        self.grid.points().iter().map(|&l| self.map.to_physical(l)).collect()
    }

    /// `du/dx` at the nodes of this domain.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let du = self.diff.apply(values);
        du.into_iter()
            .zip(self.grid.points())
            .map(|(d, &l)| d * self.map.dl_dx(l))
            .collect()
    }

    /// Row `i` of the `x`-derivative matrix.
    pub fn derivative_row(&self, i: usize) -> Vec<f64> {
        let jac = self.map.dl_dx(self.grid.points()[i]);
        self.diff.row(i).iter().map(|&d| d * jac).collect()
    }

    /// `∫ f dx` over the domain.
    ///
    /// In compactified domains `dx = 2|x_b| dl/(1 ∓ l)²`. The series is divided
    /// twice by the vanishing factor in coefficient space; the residues of
    /// those divisions detect integrands that do not decay at infinity.
    pub fn integrate(&self, values: &[Complex64], domain_index: usize, scale: f64) -> Result<Complex64> {
        self.integrate_with(values, domain_index, scale, false)
    }

    /// Shared body of the domain quadratures. With `nonnegative` the value at
    /// infinity, the only node where division noise can flip the sign, is
    /// clamped at zero.
    fn integrate_with(
        &self,
        values: &[Complex64],
        domain_index: usize,
        scale: f64,
        nonnegative: bool,
    ) -> Result<Complex64> {
        let weights = QuadratureWeights::new(self.map.order)?;
        match self.map.kind {
            MapKind::FiniteLinear { .. } | MapKind::Layer { .. } => {
                let (a, b) = self.map.interval();
                Ok(crate::cheb::clenshaw_curtis(values, &weights)? * (0.5 * (b - a)))
            }
            MapKind::CompactifiedLeft { x_l: xb } | MapKind::CompactifiedRight { x_r: xb } => {
                let factor = if matches!(self.map.kind, MapKind::CompactifiedLeft { .. }) {
                    Factor::Minus
                } else {
                    Factor::Plus
                };
                let mut coeffs = to_coefficients(values)?;
                for _ in 0..2 {
                    let r = residue(&coeffs, factor).norm();
                    if r > DECAY_TOLERANCE * scale {
                        return Err(Error::NonDecaying { domain: domain_index, residue: r });
                    }
                    coeffs = divide_by_factor(&coeffs, factor);
                }
                // Regular nodes are divided pointwise, which keeps far-field
                // roundoff from being amplified by the recurrence; only the
                // value at infinity needs the divided series.
                let root = factor.root();
                let reduced: Vec<Complex64> = values
                    .iter()
                    .zip(self.grid.points())
                    .map(|(&f, &l)| {
                        if l == root {
                            let v = coeffs.evaluate(root);
                            if nonnegative {
                                Complex64::new(v.re.max(0.0), 0.0)
                            } else {
                                v
                            }
                        } else {
                            f / ((l - root) * (l - root))
                        }
                    })
                    .collect();
                Ok(crate::cheb::clenshaw_curtis(&reduced, &weights)? * (2.0 * xb.abs()))
            }
        }
    }
}

/// Which part of the line an integral or error norm covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Every domain, including exterior and layer domains.
    WholeLine,
    /// Only the plain finite domains, i.e. the computational window.
    Computational,
}

impl Window {
    pub fn includes(self, domain: &Domain) -> bool {
        match self {
            Window::WholeLine => true,
            Window::Computational => matches!(domain.map.kind, MapKind::FiniteLinear { .. }),
        }
    }
}

/// Ordered list of domains covering an interval of the line.
#[derive(Debug, Clone)]
pub struct Decomposition {
    domains: Vec<Domain>,
    total: usize,
}

impl Decomposition {
    pub fn new(maps: &[DomainMap]) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSetup("decomposition needs at least one domain"));
        }
        for (k, m) in maps.iter().enumerate() {
            let first = k == 0;
            let last = k + 1 == maps.len();
            match m.kind {
                MapKind::CompactifiedLeft { .. } if !first => {
                    return Err(Error::InvalidMap("left exterior must be the first domain"))
                }
                MapKind::CompactifiedRight { .. } if !last => {
                    return Err(Error::InvalidMap("right exterior must be the last domain"))
                }
                MapKind::Layer { .. } if !first && !last => {
                    return Err(Error::InvalidMap("layers must sit at the ends"))
                }
                _ => {}
            }
        }
        for (k, pair) in maps.windows(2).enumerate() {
            if pair[0].interval().1 != pair[1].interval().0 {
                return Err(Error::Disconnected { left: k, right: k + 1 });
            }
        }
        let mut offset = 0;
        let mut domains = Vec::with_capacity(maps.len());
        for &map in maps {
            let domain = Domain {
                map,
                grid: ChebGrid::new(map.order)?,
                diff: DiffMatrix::new(map.order)?,
                offset,
            };
            offset += domain.len();
            domains.push(domain);
        }
        Ok(Self { domains, total: offset })
    }

    /// Finite interior `[x_l, x_r]` flanked by two compactified exterior domains.
    pub fn ced(x_l: f64, x_r: f64, orders: [usize; 3]) -> Result<Self> {
        Self::new(&[
            DomainMap::new(MapKind::CompactifiedLeft { x_l }, orders[0])?,
            DomainMap::new(MapKind::FiniteLinear { left: x_l, right: x_r }, orders[1])?,
            DomainMap::new(MapKind::CompactifiedRight { x_r }, orders[2])?,
        ])
    }

    /// A single finite domain `[x_l, x_r]`.
    pub fn single(x_l: f64, x_r: f64, order: usize) -> Result<Self> {
        Self::new(&[DomainMap::new(MapKind::FiniteLinear { left: x_l, right: x_r }, order)?])
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, k: usize) -> &Domain {
        &self.domains[k]
    }

    pub fn total_size(&self) -> usize {
        self.total
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.domains.iter().map(|d| d.offset).collect()
    }

    /// Physical nodes of every domain, concatenated. Shared boundary points
    /// appear twice and compactified infinities appear as `±∞`.
    pub fn nodes(&self) -> Vec<f64> {
        self.domains.iter().flat_map(|d| d.nodes()).collect()
    }

    /// Global index of the node mirrored through `x = 0`, valid for
    /// decompositions that are symmetric about the origin.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.total - 1 - i
    }

    /// Whether the decomposition is symmetric about `x = 0` node by node.
    pub fn is_symmetric(&self) -> bool {
        let n = self.domains.len();
        (0..n).all(|k| {
            let a = &self.domains[k].map;
            let b = &self.domains[n - 1 - k].map;
            let (a0, a1) = a.interval();
            let (b0, b1) = b.interval();
            a.order == b.order && a0 == -b1 && a1 == -b0
        })
    }

    /// Samples `f(x)` at every node; `f` receives `±∞` at compactified ends.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> CompositeField {
        CompositeField::new(self.nodes().into_iter().map(f).collect())
    }

    /// `du/dx` at every node.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.domains
            .iter()
            .flat_map(|d| d.derivative(&values[d.range()]))
            .collect()
    }

    /// `∫ f dx` over the window.
    pub fn integrate(&self, values: &[Complex64], window: Window) -> Result<Complex64> {
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.integrate_scaled(values, window, scale)
    }

    /// As [`Decomposition::integrate`], judging decay at infinity against
    /// `scale` instead of the integrand's own maximum.
    pub fn integrate_scaled(&self, values: &[Complex64], window: Window, scale: f64) -> Result<Complex64> {
        self.integrate_windowed(values, window, scale, false)
    }

    /// Integral of a real nonnegative density such as `|u − v|²`; the result
    /// is never negative.
    pub fn integrate_nonnegative(&self, values: &[f64], window: Window, scale: f64) -> Result<f64> {
        let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.integrate_windowed(&complex, window, scale, true)?.re.max(0.0))
    }

    fn integrate_windowed(
        &self,
        values: &[Complex64],
        window: Window,
        scale: f64,
        nonnegative: bool,
    ) -> Result<Complex64> {
        if values.len() != self.total {
            return Err(Error::LengthMismatch { expected: self.total, got: values.len() });
        }
        // integrands at roundoff level are not flagged
        let scale = scale.max(f64::EPSILON);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, d) in self.domains.iter().enumerate() {
            if window.includes(d) {
                acc += d.integrate_with(&values[d.range()], k, scale, nonnegative)?;
            }
        }
        Ok(acc)
    }

    /// Evaluates the field at an arbitrary physical `x` by barycentric
    /// interpolation on the domain containing it.
    pub fn evaluate(&self, values: &[Complex64], x: f64) -> Option<Complex64> {
        self.domains.iter().find_map(|d| {
            let (a, b) = d.map.interval();
            (x >= a && x <= b).then(|| {
                let l = d.map.to_local(x).clamp(-1.0, 1.0);
                d.grid.interpolate(&values[d.range()], l)
            })
        })
    }

    /// Largest magnitude among the trailing two Chebyshev coefficients of
    /// each domain.
    pub fn tail_coefficients(&self, values: &[Complex64]) -> Result<Vec<f64>> {
        self.domains
            .iter()
            .map(|d| Ok(to_coefficients(&values[d.range()])?.tail_magnitude(2)))
            .collect()
    }

    /// Per-domain Chebyshev coefficients.
    pub fn coefficients(&self, values: &[Complex64]) -> Result<Vec<SpectralCoeffs>> {
        self.domains.iter().map(|d| to_coefficients(&values[d.range()])).collect()
    }
}

/// Solution values concatenated over all domains.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeField {
    values: Vec<Complex64>,
}

impl CompositeField {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(decomp: &Decomposition) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); decomp.total_size()])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values belonging to domain `k`.
    pub fn domain<'a>(&'a self, decomp: &Decomposition, k: usize) -> &'a [Complex64] {
        &self.values[decomp.domain(k).range()]
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Second-derivative block of a domain, row-major and complex.
pub fn second_derivative_block(domain: &Domain) -> Vec<Complex64> {
    let n = domain.len();
    match domain.map.kind {
        MapKind::FiniteLinear { .. } => {
            let jac = domain.map.dl_dx(0.0);
            domain
                .diff
                .squared()
                .into_iter()
                .map(|v| Complex64::new(v * jac * jac, 0.0))
                .collect()
        }
        MapKind::CompactifiedLeft { .. } | MapKind::CompactifiedRight { .. } => {
            let d2 = domain.diff.squared();
            let dl_ds = domain.map.dl_ds().unwrap_or(0.0);
            let mut block = vec![Complex64::new(0.0, 0.0); n * n];
            for (i, &l) in domain.grid.points().iter().enumerate() {
                let s = domain.map.inverse_coordinate(l).unwrap_or(0.0);
                let c2 = s * s * s * s * dl_ds * dl_ds;
                let c1 = 2.0 * s * s * s * dl_ds;
                let drow = domain.diff.row(i);
                for j in 0..n {
                    block[i * n + j] = Complex64::new(c2 * d2[i * n + j] + c1 * drow[j], 0.0);
                }
            }
            block
        }
        MapKind::Layer { .. } => pml::deformed_block(domain),
    }
}

/// A row that replaces an evolution equation: `Σ entries · u = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub row: usize,
    pub entries: Vec<(usize, f64)>,
    pub rhs: Complex64,
}

impl TauRow {
    pub fn residual(&self, values: &[Complex64]) -> Complex64 {
        self.entries.iter().map(|&(j, c)| values[j] * c).sum::<Complex64>() - self.rhs
    }
}

/// Value and derivative matching rows at every interface, plus homogeneous
/// Dirichlet rows at finite outer ends, sorted by row index.
pub fn matching_rows(decomp: &Decomposition) -> Vec<TauRow> {
    let zero = Complex64::new(0.0, 0.0);
    let mut rows = Vec::new();
    let domains = decomp.domains();
    if let Some(first) = domains.first() {
        if first.map.is_finite() {
            rows.push(TauRow { row: 0, entries: vec![(0, 1.0)], rhs: zero });
        }
    }
    for pair in domains.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let end_a = a.offset + a.map.order;
        rows.push(TauRow {
            row: end_a,
            entries: vec![(end_a, 1.0), (b.offset, -1.0)],
            rhs: zero,
        });
        let mut entries: Vec<(usize, f64)> = a
            .derivative_row(a.map.order)
            .into_iter()
            .enumerate()
            .map(|(j, v)| (a.offset + j, v))
            .collect();
        entries.extend(
            b.derivative_row(0)
                .into_iter()
                .enumerate()
                .map(|(j, v)| (b.offset + j, -v)),
        );
        rows.push(TauRow { row: b.offset, entries, rhs: zero });
    }
    if let Some(last) = domains.last() {
        if last.map.is_finite() {
            let r = decomp.total_size() - 1;
            rows.push(TauRow { row: r, entries: vec![(r, 1.0)], rhs: zero });
        }
    }
    rows.sort_by_key(|r| r.row);
    rows
}

/// Block-diagonal spatial operator plus a diagonal potential, with the tau
/// rows that the time steppers substitute into their step matrices.
#[derive(Debug, Clone)]
pub struct CompositeOperator {
    blocks: Vec<Vec<Complex64>>,
    ranges: Vec<core::ops::Range<usize>>,
    potential: Vec<Complex64>,
    tau_rows: Vec<TauRow>,
    total: usize,
}

impl CompositeOperator {
    pub fn blocks(&self) -> &[Vec<Complex64>] {
        &self.blocks
    }

    pub fn potential(&self) -> &[Complex64] {
        &self.potential
    }

    /// Index range of each block.
    pub fn ranges(&self) -> &[core::ops::Range<usize>] {
        &self.ranges
    }

    pub fn tau_rows(&self) -> &[TauRow] {
        &self.tau_rows
    }

    pub fn size(&self) -> usize {
        self.total
    }

    /// Returns a copy with a different potential diagonal.
    pub fn with_potential(&self, potential: Vec<Complex64>) -> Result<Self> {
        if potential.len() != self.total {
            return Err(Error::LengthMismatch { expected: self.total, got: potential.len() });
        }
        Ok(Self { potential, ..self.clone() })
    }

    /// `𝓛u` at every node, tau rows included as ordinary evolution rows.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.total];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (block, range) in self.blocks.iter().zip(&self.ranges) {
            let n = range.len();
            let local = &u[range.clone()];
            for i in 0..n {
                let row = &block[i * n..(i + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in row.iter().zip(local) {
                    acc += a * b;
                }
                out[range.start + i] = acc;
            }
        }
        for ((o, v), x) in out.iter_mut().zip(&self.potential).zip(u) {
            *o += v * x;
        }
    }

    /// Dense matrix of `𝓛` without tau substitution.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.total, self.total);
        for (block, range) in self.blocks.iter().zip(&self.ranges) {
            let n = range.len();
            for i in 0..n {
                for j in 0..n {
                    m[(range.start + i, range.start + j)] = block[i * n + j];
                }
            }
        }
        for (i, v) in self.potential.iter().enumerate() {
            m[(i, i)] += v;
        }
        m
    }
}

/// Assembles the operator `∂_xx + V` on the decomposition.
pub fn assemble(decomp: &Decomposition, potential: &[Complex64]) -> Result<CompositeOperator> {
    if potential.len() != decomp.total_size() {
        return Err(Error::LengthMismatch {
            expected: decomp.total_size(),
            got: potential.len(),
        });
    }
    Ok(CompositeOperator {
        blocks: decomp.domains().iter().map(second_derivative_block).collect(),
        ranges: decomp.domains().iter().map(|d| d.range()).collect(),
        potential: potential.to_vec(),
        tau_rows: matching_rows(decomp),
        total: decomp.total_size(),
    })
}

/// Purely diagonal operator without blocks or tau rows.
pub fn diagonal_operator(diagonal: Vec<Complex64>) -> CompositeOperator {
    CompositeOperator {
        blocks: Vec::new(),
        ranges: Vec::new(),
        total: diagonal.len(),
        potential: diagonal,
        tau_rows: Vec::new(),
    }
}

/// `∫ f dx` over the whole decomposition.
pub fn whole_line_integral(decomp: &Decomposition, values: &[Complex64]) -> Result<Complex64> {
    decomp.integrate(values, Window::WholeLine)
}

/// Squared `L²` norm `∫|u|² dx` over the whole decomposition.
pub fn whole_line_l2(decomp: &Decomposition, field: &CompositeField) -> Result<f64> {
    let density: Vec<Complex64> = field
        .values()
        .iter()
        .map(|u| Complex64::new(u.norm_sqr(), 0.0))
        .collect();
    Ok(decomp.integrate(&density, Window::WholeLine)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    extern crate std;
    use core::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn map_examples() {
        let left = DomainMap::new(MapKind::CompactifiedLeft { x_l: -10.0 }, 4).unwrap();
        assert_eq!(left.to_physical(-1.0), -10.0);
        assert_eq!(left.to_physical(1.0), f64::NEG_INFINITY);
        let right = DomainMap::new(MapKind::CompactifiedRight { x_r: 5.0 }, 4).unwrap();
        assert_eq!(right.to_physical(0.0), 10.0);
        assert_eq!(right.to_physical(-1.0), f64::INFINITY);
        let mid = DomainMap::new(MapKind::FiniteLinear { left: -5.0, right: 5.0 }, 4).unwrap();
        assert_eq!(mid.to_physical(1.0), -5.0);
        assert_eq!(mid.to_physical(-1.0), 5.0);
        for l in [-0.9, -0.3, 0.2, 0.7] {
            for m in [left, right, mid] {
                assert!((m.to_local(m.to_physical(l)) - l).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(DomainMap::new(MapKind::CompactifiedLeft { x_l: 1.0 }, 4).is_err());
        assert!(DomainMap::new(MapKind::CompactifiedRight { x_r: -1.0 }, 4).is_err());
        assert!(DomainMap::new(MapKind::FiniteLinear { left: 1.0, right: 1.0 }, 4).is_err());
        assert!(DomainMap::new(MapKind::FiniteLinear { left: 0.0, right: 1.0 }, 0).is_err());
    }

    #[test]
    fn disconnected_domains_rejected() {
        let maps = [
            DomainMap::new(MapKind::CompactifiedLeft { x_l: -5.0 }, 4).unwrap(),
            DomainMap::new(MapKind::FiniteLinear { left: -4.0, right: 5.0 }, 4).unwrap(),
        ];
        assert_eq!(
            Decomposition::new(&maps).unwrap_err(),
            Error::Disconnected { left: 0, right: 1 }
        );
    }

    #[test]
    fn nodes_ascend_across_domains() {
        let d = Decomposition::ced(-5.0, 5.0, [20, 120, 600]).unwrap();
        assert_eq!(d.total_size(), 743);
        let x = d.nodes();
        assert!(x.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(x[20], -5.0);
        assert_eq!(x[21], -5.0);
        assert_eq!(x[141], 5.0);
        assert_eq!(x[142], 5.0);
    }

    #[test]
    fn tau_rows_at_interface_indices() {
        let d = Decomposition::ced(-10.0, 5.0, [20, 120, 60]).unwrap();
        let rows: Vec<usize> = matching_rows(&d).iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![20, 21, 141, 142]);
        let deriv = &matching_rows(&d)[1];
        let last_d = d.domain(0).diff.row(20);
        for (j, &dv) in last_d.iter().enumerate() {
            let entry = deriv.entries.iter().find(|e| e.0 == j).unwrap().1;
            assert!((entry - (-0.2) * dv).abs() < 1e-12 * dv.abs().max(1.0));
        }
        let mid = deriv.entries.iter().find(|e| e.0 == 21).unwrap().1;
        let mid_d = d.domain(1).diff.get(0, 0);
        assert!((mid + 2.0 / (-10.0 - 5.0) * mid_d).abs() < 1e-12 * mid_d.abs());
    }

    #[test]
    fn finite_block_is_scaled_d2() {
        let d = Decomposition::single(-1.0, 1.0, 8).unwrap();
        let block = second_derivative_block(d.domain(0));
        let d2 = d.domain(0).diff.squared();
        for (a, b) in block.iter().zip(&d2) {
            assert_eq!(a.re, *b);
        }
    }

    #[test]
    fn compactified_block_on_inverse_power() {
        for kind in [MapKind::CompactifiedLeft { x_l: -3.0 }, MapKind::CompactifiedRight { x_r: 2.0 }] {
            let d = Decomposition::new(&[DomainMap::new(kind, 40).unwrap()]).unwrap();
            let dom = d.domain(0);
            let block = second_derivative_block(dom);
            let x = dom.nodes();
            // 1/x² is quadratic in s; its second derivative 6/x⁴ is a clean oracle
            for (power, expect) in [(1, 2.0), (2, 6.0)] {
                let u: Vec<Complex64> = x
                    .iter()
                    .map(|&xi| if xi.is_finite() { c(xi.powi(-power)) } else { c(0.0) })
                    .collect();
                let n = dom.len();
                for i in 0..n {
                    let v: Complex64 = (0..n).map(|j| block[i * n + j] * u[j]).sum();
                    if x[i].is_finite() {
                        let e = expect / x[i].powi(power + 2);
                        assert!((v.re - e).abs() <= 1e-8 * e.abs().max(1e-300) + 1e-13, "i={i}");
                    } else {
                        assert_eq!(v.norm(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn matching_rows_on_smooth_functions() {
        let d = Decomposition::ced(-10.0, 5.0, [40, 120, 60]).unwrap();
        let rows = matching_rows(&d);
        let constant = d.sample(|_| Complex64::new(1.5, -0.5));
        for r in &rows {
            assert!(r.residual(constant.values()).norm() < 1e-11);
        }
        let gauss = d.sample(|x| if x.is_finite() { c((-x * x / 20.0).exp()) } else { c(0.0) });
        for r in &rows {
            assert!(r.residual(gauss.values()).norm() < 1e-9, "row {}", r.row);
        }
    }

    #[test]
    fn assembly_examples() {
        let d = Decomposition::single(-1.0, 1.0, 6).unwrap();
        let op = assemble(&d, &[c(0.0); 7]).unwrap();
        let dense = op.to_dense();
        let d2 = d.domain(0).diff.squared();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(dense[(i, j)].re, d2[i * 7 + j]);
            }
        }
        assert!(assemble(&d, &[c(0.0); 3]).is_err());
    }

    #[test]
    fn assembly_is_linear_in_potential() {
        let d = Decomposition::ced(-4.0, 4.0, [8, 12, 8]).unwrap();
        let x = d.nodes();
        let v1: Vec<Complex64> = x.iter().map(|&xi| c(1.0 / (1.0 + xi * xi))).collect();
        let v2: Vec<Complex64> = x.iter().map(|&xi| Complex64::new(0.5, (xi / 10.0).atan())).collect();
        let sum: Vec<Complex64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
        let diff = assemble(&d, &sum).unwrap().to_dense() - assemble(&d, &v1).unwrap().to_dense();
        for i in 0..d.total_size() {
            for j in 0..d.total_size() {
                let expected = if i == j { v2[i] } else { c(0.0) };
                assert!((diff[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn operator_commutes_with_parity() {
        let d = Decomposition::ced(-6.0, 6.0, [16, 30, 16]).unwrap();
        assert!(d.is_symmetric());
        let v: Vec<Complex64> = d.nodes().iter().map(|&x| c(1.0 / (1.0 + x * x))).collect();
        let m = assemble(&d, &v).unwrap().to_dense();
        let n = d.total_size();
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                let p = m[(d.mirror_index(i), d.mirror_index(j))];
                assert!((m[(i, j)] - p).norm() < 1e-12 * scale, "({i},{j})");
            }
        }
    }

    #[test]
    fn whole_line_norms() {
        let d = Decomposition::ced(-25.0, 25.0, [20, 700, 40]).unwrap();
        let a: f64 = 2.0;
        let soliton = d.sample(|x| c(a.sqrt() / (a.sqrt() * x).cosh()));
        let mass = whole_line_l2(&d, &soliton).unwrap();
        assert!((mass - 2.0 * a.sqrt()).abs() < 1e-10, "{}", mass - 2.0 * a.sqrt());

        let d = Decomposition::ced(-5.0, 5.0, [20, 120, 60]).unwrap();
        let gauss = d.sample(|x| c((-x * x).exp()));
        let mass = whole_line_l2(&d, &gauss).unwrap();
        assert!((mass - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(whole_line_l2(&d, &CompositeField::zeros(&d)).unwrap(), 0.0);
    }

    #[test]
    fn algebraic_decay_integrates_through_infinity() {
        // ∫ 1/(1+x²) dx = π, which only decays like s² at infinity
        let d = Decomposition::ced(-2.0, 2.0, [60, 80, 60]).unwrap();
        let f = d.sample(|x| if x.is_finite() { c(1.0 / (1.0 + x * x)) } else { c(0.0) });
        let v = whole_line_integral(&d, f.values()).unwrap();
        assert!((v.re - PI).abs() < 1e-12, "{}", v.re - PI);
    }

    #[test]
    fn non_decaying_integrand_flagged() {
        let d = Decomposition::ced(-2.0, 2.0, [10, 10, 10]).unwrap();
        let ones = vec![c(1.0); d.total_size()];
        assert!(matches!(
            whole_line_integral(&d, &ones),
            Err(Error::NonDecaying { domain: 0, .. })
        ));
    }

    #[test]
    fn evaluate_interpolates_owning_domain() {
        let d = Decomposition::ced(-5.0, 5.0, [60, 60, 60]).unwrap();
        let f = d.sample(|x| if x.is_finite() { c((-x * x / 4.0).exp()) } else { c(0.0) });
        for x in [-7.3, -1.2, 0.4, 4.99, 12.0] {
            let v = d.evaluate(f.values(), x).unwrap();
            assert!((v.re - (-x * x / 4.0).exp()).abs() < 1e-10, "x={x} {}", v.re - (-x * x / 4.0).exp());
        }
    }
}
