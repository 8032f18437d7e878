//! Block-structured evaluation of the Lindblad generator.
//!
//! The Hamiltonian and the anticommutator term are block diagonal over the
//! excitation manifolds, and every jump operator maps whole manifolds onto
//! whole manifolds. A density matrix is therefore stored as the set of
//! manifold pairs `(m, m')` it populates (plus everything the jumps can
//! reach from them); all other blocks stay exactly zero and are never
//! touched.
//!
//! With `K = -i H / hbar - D / 2` and `D = sum_k rate_k L_k^dag L_k` the
//! generator reads `K rho + (K rho)^dag + sum_k rate_k L_k rho L_k^dag`, so
//! only one sparse-times-dense product per block pair is needed. Each
//! manifold block of `H` is shifted by the mean of its diagonal to keep the
//! large `N_exc * omega` offset out of the cancelling products; the shift
//! is restored for coherences between different manifolds.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::integrator::OdeSystem;
use crate::error::{Error, Result};
use crate::operators::SparseOperator;
use crate::units::HBAR_EV_FS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
struct CsrBlock {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub(crate) struct PairBlock {
    pub row_block: usize,
    pub col_block: usize,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    /// Index of the pair `(col_block, row_block)`.
    transpose: usize,
}

/// One jump operator, entries grouped by (source block, target block).
#[derive(Clone, Debug)]
struct JumpChannel {
    rate: f64,
    /// source block -> [(target block, [(src local, tgt local, coeff)])]
    maps: Vec<Vec<(usize, Vec<(usize, usize, Complex64)>)>>,
}

/// Precomputed contribution of one jump channel to one target pair.
#[derive(Clone, Debug)]
struct JumpRoute {
    rate: f64,
    src_pair: usize,
    dst_pair: usize,
    channel: usize,
    left: usize,
    right: usize,
}

#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    blocks: Vec<Range<usize>>,
    k_blocks: Vec<CsrBlock>,
    /// Diagonal shift of each block in rad/fs.
    shifts: Vec<f64>,
    pairs: Vec<PairBlock>,
    pair_index: BTreeMap<(usize, usize), usize>,
    channels: Vec<JumpChannel>,
    routes: Vec<JumpRoute>,
    len: usize,
    scratch: Vec<Complex64>,
}

fn block_of(blocks: &[Range<usize>], i: usize) -> usize {
    blocks
        .partition_point(|r| r.end <= i)
}

impl LindbladGenerator {
    /// `seed_pairs` are the manifold pairs present initially; the pair set
    /// is closed under the jump maps and under transposition.
    pub fn new(
        hamiltonian: &SparseOperator,
        jumps: &[(f64, &SparseOperator)],
        blocks: Vec<Range<usize>>,
        seed_pairs: &BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        if blocks.last().map(|r| r.end) != Some(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: blocks.last().map(|r| r.end).unwrap_or(0),
            });
        }
        let mut dissipator_diag = SparseOperator::zeros(dim);
        for (rate, op) in jumps {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            let ldl = op.adjoint().mul(op)?.scale(Complex64::new(*rate, 0.0));
            dissipator_diag = dissipator_diag.add(&ldl)?;
        }

        let nb = blocks.len();
        let mut k_blocks = Vec::with_capacity(nb);
        let mut shifts = Vec::with_capacity(nb);
        for b in 0..nb {
            let range = blocks[b].clone();
            let h = hamiltonian.submatrix(range.clone());
            let d = dissipator_diag.submatrix(range.clone());
            let mean = if range.is_empty() {
                0.0
            } else {
                h.diagonal().iter().map(|z| z.re).sum::<f64>() / range.len() as f64
            };
            let shifted = h.sub(&SparseOperator::identity(range.len()).scale(Complex64::new(mean, 0.0)))?;
            let k = shifted
                .scale(Complex64::new(0.0, -1.0 / HBAR_EV_FS))
                .add(&d.scale(Complex64::new(-0.5, 0.0)))?;
            let mut row_ptr = vec![0];
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for r in 0..k.dim() {
                for (c, v) in k.row(r) {
                    cols.push(c);
                    vals.push(v);
                }
                row_ptr.push(cols.len());
            }
            k_blocks.push(CsrBlock {
                row_ptr,
                cols,
                vals,
            });
            shifts.push(mean / HBAR_EV_FS);
        }

        // H and D must not couple different blocks
        for (r, c, _) in hamiltonian.iter().chain(dissipator_diag.iter()) {
            if block_of(&blocks, r) != block_of(&blocks, c) {
                return Err(Error::ModelMismatch(format!(
                    "generator couples blocks at ({r}, {c}); Hamiltonian must conserve the block structure"
                )));
            }
        }

        let mut channels = Vec::new();
        for (rate, op) in jumps {
            let mut grouped: Vec<BTreeMap<usize, Vec<(usize, usize, Complex64)>>> =
                vec![BTreeMap::new(); nb];
            for (t, s, c) in op.iter() {
                let sb = block_of(&blocks, s);
                let tb = block_of(&blocks, t);
                grouped[sb]
                    .entry(tb)
                    .or_default()
                    .push((s - blocks[sb].start, t - blocks[tb].start, c));
            }
            channels.push(JumpChannel {
                rate: *rate,
                maps: grouped
                    .into_iter()
                    .map(|m| m.into_iter().collect())
                    .collect(),
            });
        }

        // closure of the active pairs
        let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue: Vec<(usize, usize)> = seed_pairs
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();
        while let Some(p) = queue.pop() {
            if !active.insert(p) {
                continue;
            }
            for ch in &channels {
                for (tl, _) in &ch.maps[p.0] {
                    for (tr, _) in &ch.maps[p.1] {
                        for q in [(*tl, *tr), (*tr, *tl)] {
                            if !active.contains(&q) {
                                queue.push(q);
                            }
                        }
                    }
                }
            }
        }

        let mut pairs = Vec::new();
        let mut pair_index = BTreeMap::new();
        let mut offset = 0;
        for &(a, b) in &active {
            let rows = blocks[a].len();
            let cols = blocks[b].len();
            pair_index.insert((a, b), pairs.len());
            pairs.push(PairBlock {
                row_block: a,
                col_block: b,
                offset,
                rows,
                cols,
                transpose: 0,
            });
            offset += rows * cols;
        }
        for i in 0..pairs.len() {
            pairs[i].transpose = pair_index[&(pairs[i].col_block, pairs[i].row_block)];
        }

        let mut routes = Vec::new();
        for (ci, ch) in channels.iter().enumerate() {
            if ch.rate == 0.0 {
                continue;
            }
            for (pi, p) in pairs.iter().enumerate() {
                for (li, (tl, _)) in ch.maps[p.row_block].iter().enumerate() {
                    for (ri, (tr, _)) in ch.maps[p.col_block].iter().enumerate() {
                        routes.push(JumpRoute {
                            rate: ch.rate,
                            src_pair: pi,
                            dst_pair: pair_index[&(*tl, *tr)],
                            channel: ci,
                            left: li,
                            right: ri,
                        });
                    }
                }
            }
        }

        Ok(Self {
            blocks,
            k_blocks,
            shifts,
            pairs,
            pair_index,
            channels,
            routes,
            len: offset,
            scratch: vec![ZERO; offset],
        })
    }

    /// Manifold pairs present in a dense matrix.
    pub fn populated_pairs(blocks: &[Range<usize>], rho: &DMatrix<Complex64>) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for (a, ra) in blocks.iter().enumerate() {
            for (b, rb) in blocks.iter().enumerate() {
                let nonzero = ra
                    .clone()
                    .any(|i| rb.clone().any(|j| rho[(i, j)] != ZERO));
                if nonzero {
                    out.insert((a, b));
                }
            }
        }
        out
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub(crate) fn pairs(&self) -> &[PairBlock] {
        &self.pairs
    }

    pub fn pair_slice<'a>(&self, state: &'a [Complex64], a: usize, b: usize) -> Option<&'a [Complex64]> {
        let p = &self.pairs[*self.pair_index.get(&(a, b))?];
        Some(&state[p.offset..p.offset + p.rows * p.cols])
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map(|r| r.end).unwrap_or(0)
    }

    /// Flattens the active blocks of a dense matrix. Entries outside the
    /// active pairs must be zero.
    pub fn pack(&self, rho: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; self.len];
        for p in &self.pairs {
            let rs = self.blocks[p.row_block].start;
            let cs = self.blocks[p.col_block].start;
            for i in 0..p.rows {
                for j in 0..p.cols {
                    out[p.offset + i * p.cols + j] = rho[(rs + i, cs + j)];
                }
            }
        }
        let inactive = Self::populated_pairs(&self.blocks, rho)
            .into_iter()
            .find(|pair| !self.pair_index.contains_key(pair));
        if let Some((a, b)) = inactive {
            return Err(Error::InvalidArgument(format!(
                "density matrix populates manifold pair ({a}, {b}) outside the generator's pair set"
            )));
        }
        Ok(out)
    }

    pub fn unpack(&self, state: &[Complex64]) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut rho = DMatrix::zeros(dim, dim);
        for p in &self.pairs {
            let rs = self.blocks[p.row_block].start;
            let cs = self.blocks[p.col_block].start;
            for i in 0..p.rows {
                for j in 0..p.cols {
                    rho[(rs + i, cs + j)] = state[p.offset + i * p.cols + j];
                }
            }
        }
        rho
    }

    /// Replaces the state by `(rho + rho^dag) / 2`; returns the largest
    /// deviation `|rho_ij - conj(rho_ji)|` found before symmetrizing.
    pub fn symmetrize(&self, state: &mut [Complex64]) -> f64 {
        let mut dev: f64 = 0.0;
        for (pi, p) in self.pairs.iter().enumerate() {
            let q = &self.pairs[p.transpose];
            if p.transpose < pi {
                continue;
            }
            for i in 0..p.rows {
                for j in 0..p.cols {
                    let a = p.offset + i * p.cols + j;
                    let b = q.offset + j * q.cols + i;
                    if p.transpose == pi && j < i {
                        continue;
                    }
                    let x = state[a];
                    let y = state[b];
                    dev = dev.max((x - y.conj()).norm());
                    let avg = (x + y.conj()) * 0.5;
                    state[a] = avg;
                    state[b] = avg.conj();
                }
            }
        }
        dev
    }
}

impl OdeSystem for LindbladGenerator {
    fn len(&self) -> usize {
        self.len
    }

    fn rhs(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
        let scratch = &mut self.scratch;
        // B = K rho, pair by pair
        for p in &self.pairs {
            let k = &self.k_blocks[p.row_block];
            let rho = &y[p.offset..p.offset + p.rows * p.cols];
            let out = &mut scratch[p.offset..p.offset + p.rows * p.cols];
            let n = p.cols;
            for i in 0..p.rows {
                let row = &mut out[i * n..(i + 1) * n];
                row.fill(ZERO);
                for idx in k.row_ptr[i]..k.row_ptr[i + 1] {
                    let v = k.vals[idx];
                    let src = &rho[k.cols[idx] * n..(k.cols[idx] + 1) * n];
                    axpy(row, v, src);
                }
            }
        }
        // dy = B + B^dag (- i (s_a - s_b) rho for coherences between blocks)
        const TILE: usize = 32;
        for p in &self.pairs {
            let q = &self.pairs[p.transpose];
            let shift = self.shifts[p.row_block] - self.shifts[p.col_block];
            let (rows, cols) = (p.rows, p.cols);
            for i0 in (0..rows).step_by(TILE) {
                for j0 in (0..cols).step_by(TILE) {
                    for i in i0..(i0 + TILE).min(rows) {
                        for j in j0..(j0 + TILE).min(cols) {
                            let a = p.offset + i * cols + j;
                            let b = q.offset + j * q.cols + i;
                            dy[a] = scratch[a] + scratch[b].conj();
                        }
                    }
                }
            }
            if shift != 0.0 {
                let s = Complex64::new(0.0, -shift);
                for a in p.offset..p.offset + rows * cols {
                    dy[a] += s * y[a];
                }
            }
        }
        // jumps
        for r in &self.routes {
            let ch = &self.channels[r.channel];
            let src = &self.pairs[r.src_pair];
            let dst = &self.pairs[r.dst_pair];
            let left = &ch.maps[src.row_block][r.left].1;
            let right = &ch.maps[src.col_block][r.right].1;
            for &(s1, t1, c1) in left {
                let w1 = c1 * r.rate;
                let src_row = src.offset + s1 * src.cols;
                let dst_row = dst.offset + t1 * dst.cols;
                for &(s2, t2, c2) in right {
                    dy[dst_row + t2] += w1 * c2.conj() * y[src_row + s2];
                }
            }
        }
    }
}

#[inline]
fn axpy(out: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (o, v) in out.iter_mut().zip(x) {
        o.re += a.re * v.re - a.im * v.im;
        o.im += a.re * v.im + a.im * v.re;
    }
}
