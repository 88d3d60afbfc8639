//! Prefactored step matrices `I + c·𝓛` with tau rows substituted.
//!
//! The spatial operator is block diagonal and only the tau rows reach into
//! neighbouring blocks. Each block is factored on its own and the few
//! coupling rows are restored with a Woodbury correction, which halves the
//! memory traffic of a solve compared with one dense factorization.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{DMatrix, DVectorViewMut, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multidomain::{CompositeOperator, TauRow};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone)]
struct Block {
    range: Range<usize>,
    lu: LU<Complex64, Dyn, Dyn>,
}

/// Part of a tau row that lies outside the row's own block.
#[derive(Debug, Clone)]
struct Coupling {
    row: usize,
    entries: Vec<(usize, Complex64)>,
    /// Block index of `row` and the block solve of the unit vector at `row`.
    block: usize,
    response: Vec<Complex64>,
}

/// Factorization of a step matrix whose tau rows hold matching or boundary
/// conditions instead of evolution equations.
#[derive(Debug, Clone)]
pub struct StepMatrix {
    blocks: Vec<Block>,
    couplings: Vec<Coupling>,
    capacitance: Option<LU<Complex64, Dyn, Dyn>>,
    tau: Vec<(usize, Complex64)>,
    size: usize,
}

impl StepMatrix {
    /// Factors `I + coeff·𝓛` after replacing the operator's tau rows.
    pub fn new(op: &CompositeOperator, coeff: Complex64) -> Result<Self> {
        let n = op.size();
        let ranges = cover(op.ranges(), n);
        let mut dense: Vec<DMatrix<Complex64>> = Vec::with_capacity(ranges.len());
        let mut stored = op.blocks().iter().zip(op.ranges());
        let mut next = stored.next();
        for range in &ranges {
            let len = range.len();
            let mut m = DMatrix::identity(len, len);
            if let Some((block, _)) = next.filter(|(_, r)| *r == range) {
                for i in 0..len {
                    for j in 0..len {
                        m[(i, j)] += coeff * block[i * len + j];
                    }
                }
                next = stored.next();
            }
            for i in 0..len {
                m[(i, i)] += coeff * op.potential()[range.start + i];
            }
            dense.push(m);
        }
        Self::assemble(ranges, dense, op.tau_rows())
    }

    /// Substitutes `tau` into a dense matrix and factors it as one block.
    pub fn from_dense(m: DMatrix<Complex64>, tau: &[TauRow]) -> Result<Self> {
        let n = m.nrows();
        Self::assemble(vec![0..n], vec![m], tau)
    }

    fn assemble(ranges: Vec<Range<usize>>, mut dense: Vec<DMatrix<Complex64>>, tau: &[TauRow]) -> Result<Self> {
        let size = ranges.last().map_or(0, |r| r.end);
        let owner = |i: usize| ranges.partition_point(|r| r.end <= i);
        let mut couplings = Vec::new();
        for row in tau {
            let b = owner(row.row);
            let start = ranges[b].start;
            let m = &mut dense[b];
            let local = row.row - start;
            for j in 0..m.ncols() {
                m[(local, j)] = ZERO;
            }
            let mut outside = Vec::new();
            for &(j, c) in &row.entries {
                if ranges[b].contains(&j) {
                    m[(local, j - start)] += Complex64::new(c, 0.0);
                } else {
                    outside.push((j, Complex64::new(c, 0.0)));
                }
            }
            if !outside.is_empty() {
                couplings.push(Coupling { row: row.row, entries: outside, block: b, response: Vec::new() });
            }
        }
        let mut blocks = Vec::with_capacity(ranges.len());
        for (range, m) in ranges.into_iter().zip(dense) {
            let lu = m.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularStepMatrix);
            }
            blocks.push(Block { range, lu });
        }
        for c in couplings.iter_mut() {
            let block = &blocks[c.block];
            let mut e = vec![ZERO; block.range.len()];
            e[c.row - block.range.start] = ONE;
            solve_block(&block.lu, &mut e)?;
            c.response = e;
        }
        // capacitance I + Vᵀ B⁻¹ U of the Woodbury identity
        let p = couplings.len();
        let capacitance = if p == 0 {
            None
        } else {
            let mut cap = DMatrix::<Complex64>::identity(p, p);
            for (q, cq) in couplings.iter().enumerate() {
                for (r, cr) in couplings.iter().enumerate() {
                    let start = blocks[cr.block].range.start;
                    let range = &blocks[cr.block].range;
                    cap[(q, r)] += cq
                        .entries
                        .iter()
                        .filter(|(j, _)| range.contains(j))
                        .map(|&(j, c)| c * cr.response[j - start])
                        .sum::<Complex64>();
                }
            }
            let lu = cap.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularStepMatrix);
            }
            Some(lu)
        };
        Ok(Self {
            blocks,
            couplings,
            capacitance,
            tau: tau.iter().map(|r| (r.row, r.rhs)).collect(),
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Rows that carry tau conditions.
    pub fn tau_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.tau.iter().map(|&(row, _)| row)
    }

    /// Overwrites the tau components of `rhs` with their prescribed values.
    pub fn impose_tau(&self, rhs: &mut [Complex64]) {
        for &(row, value) in &self.tau {
            rhs[row] = value;
        }
    }

    /// Solves in place; the caller is responsible for the tau components.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) -> Result<()> {
        if rhs.len() != self.size {
            return Err(Error::LengthMismatch { expected: self.size, got: rhs.len() });
        }
        for block in &self.blocks {
            solve_block(&block.lu, &mut rhs[block.range.clone()])?;
        }
        if let Some(cap) = &self.capacitance {
            let w: Vec<Complex64> = self
                .couplings
                .iter()
                .map(|c| c.entries.iter().map(|&(j, v)| v * rhs[j]).sum())
                .collect();
            let mut w = nalgebra::DVector::from_vec(w);
            if !cap.solve_mut(&mut w) {
                return Err(Error::SingularStepMatrix);
            }
            for (c, z) in self.couplings.iter().zip(w.iter()) {
                let start = self.blocks[c.block].range.start;
                for (i, r) in c.response.iter().enumerate() {
                    rhs[start + i] -= r * z;
                }
            }
        }
        Ok(())
    }

    /// Imposes the tau values and solves in place.
    pub fn solve_with_tau(&self, rhs: &mut [Complex64]) -> Result<()> {
        self.impose_tau(rhs);
        self.solve_in_place(rhs)
    }
}

fn solve_block(lu: &LU<Complex64, Dyn, Dyn>, rhs: &mut [Complex64]) -> Result<()> {
    let n = rhs.len();
    let mut view = DVectorViewMut::from_slice(rhs, n);
    if lu.solve_mut(&mut view) {
        Ok(())
    } else {
        Err(Error::SingularStepMatrix)
    }
}

/// Sorted block ranges covering `0..n`; indices outside every operator block
/// become 1×1 blocks.
fn cover(ranges: &[Range<usize>], n: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut at = 0;
    for r in ranges {
        out.extend((at..r.start).map(|i| i..i + 1));
        out.push(r.clone());
        at = r.end;
    }
    out.extend((at..n).map(|i| i..i + 1));
    out
}
