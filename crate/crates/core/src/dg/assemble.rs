//! Block-sparse assembly of bilinear forms `Σ w·⟨B·X u, Y w⟩`.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{Eval, Mat3};

/// Accumulates `(test cell, trial cell)` blocks of `nb × nb` tiles.
#[derive(Debug)]
pub struct Assembler {
    nb: usize,
    blocks: HashMap<(usize, usize), Vec<f64>>,
}

impl Assembler {
    pub fn new(nb: usize) -> Self {
        Self { nb, blocks: HashMap::new() }
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    /// Adds `weight·⟨B·X u_xcell, Y w_ycell⟩`.
    pub fn add(&mut self, weight: f64, b: &Mat3, x: &Eval, xcell: usize, y: &Eval, ycell: usize) {
        let nb = self.nb;
        // BX(i, cu) = Σ_j B_ij X(j, cu)
        let mut bx = [[0.0; crate::basis::MAX_NB]; 9];
        let mut bx_nz = [false; 9];
        for i in 0..3 {
            for j in 0..3 {
                let bij = b[i][j];
                if bij == 0.0 {
                    continue;
                }
                for cu in 0..3 {
                    if let Some(t) = x.tile(j, cu) {
                        let dst = &mut bx[i * 3 + cu];
                        for a in 0..nb {
                            dst[a] += bij * t[a];
                        }
                        bx_nz[i * 3 + cu] = true;
                    }
                }
            }
        }
        let block = self.blocks.entry((ycell, xcell)).or_insert_with(|| vec![0.0; 9 * nb * nb]);
        for cw in 0..3 {
            for cu in 0..3 {
                let tile = &mut block[(cw * 3 + cu) * nb * nb..(cw * 3 + cu + 1) * nb * nb];
                for i in 0..3 {
                    if !bx_nz[i * 3 + cu] {
                        continue;
                    }
                    let Some(yv) = y.tile(i, cw) else { continue };
                    let xv = &bx[i * 3 + cu][..nb];
                    for (bi, yb) in yv.iter().enumerate() {
                        let s = weight * yb;
                        if s == 0.0 {
                            continue;
                        }
                        let row = &mut tile[bi * nb..(bi + 1) * nb];
                        for (r, xa) in row.iter_mut().zip(xv) {
                            *r += s * xa;
                        }
                    }
                }
            }
        }
    }

    /// Merges another assembler's blocks (scaled by `scale`).
    pub fn merge(&mut self, other: &Assembler, scale: f64) {
        let mut keys: Vec<_> = other.blocks.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            let src = &other.blocks[&k];
            let dst = self.blocks.entry(k).or_insert_with(|| vec![0.0; src.len()]);
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
        }
    }

    pub fn finish(self, ncells: usize) -> BlockOperator {
        let nb = self.nb;
        let mut keys: Vec<(usize, usize)> = self.blocks.keys().copied().collect();
        keys.sort_unstable();
        let mut row_ptr = vec![0usize; ncells + 1];
        let mut cols = Vec::with_capacity(keys.len());
        let mut tile_ptr = vec![0usize];
        let mut tile_idx = Vec::new();
        let mut data = Vec::new();
        for &(r, c) in &keys {
            let blk = &self.blocks[&(r, c)];
            let before = tile_idx.len();
            for t in 0..9 {
                let tile = &blk[t * nb * nb..(t + 1) * nb * nb];
                if tile.iter().any(|v| *v != 0.0) {
                    tile_idx.push(t as u8);
                    data.extend_from_slice(tile);
                }
            }
            if tile_idx.len() == before {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            tile_ptr.push(tile_idx.len());
        }
        for r in 0..ncells {
            row_ptr[r + 1] += row_ptr[r];
        }
        BlockOperator { nb, ncells, row_ptr, cols, tile_ptr, tile_idx, data }
    }
}

/// Square block-sparse matrix with `3nb × 3nb` blocks, each stored as nonzero `nb × nb` tiles.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    nb: usize,
    ncells: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    tile_ptr: Vec<usize>,
    tile_idx: Vec<u8>,
    data: Vec<f64>,
}

impl BlockOperator {
    pub fn ncells(&self) -> usize {
        self.ncells
    }

    pub fn nnz_tiles(&self) -> usize {
        self.tile_idx.len()
    }

    fn row_apply(&self, r: usize, x: &[f64], out: &mut [f64], abs: bool) {
        let nb = self.nb;
        let bs = 3 * nb;
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in self.row_ptr[r]..self.row_ptr[r + 1] {
            let c = self.cols[e];
            let xc = &x[c * bs..(c + 1) * bs];
            for t in self.tile_ptr[e]..self.tile_ptr[e + 1] {
                let ti = self.tile_idx[t] as usize;
                let (cw, cu) = (ti / 3, ti % 3);
                let tile = &self.data[t * nb * nb..(t + 1) * nb * nb];
                let xv = &xc[cu * nb..(cu + 1) * nb];
                for b in 0..nb {
                    let row = &tile[b * nb..(b + 1) * nb];
                    let s: f64 = if abs {
                        row.iter().zip(xv).map(|(m, v)| m.abs() * v.abs()).sum()
                    } else {
                        row.iter().zip(xv).map(|(m, v)| m * v).sum()
                    };
                    out[cw * nb + b] += s;
                }
            }
        }
    }

    /// `y = L x`, row blocks in parallel (each row block has a fixed summation order).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let bs = 3 * self.nb;
        y.par_chunks_mut(bs).enumerate().for_each(|(r, out)| self.row_apply(r, x, out, false));
    }

    /// `|L|·|x|` entrywise, used to scale residual checks.
    pub fn apply_abs(&self, x: &[f64], y: &mut [f64]) {
        let bs = 3 * self.nb;
        y.par_chunks_mut(bs).enumerate().for_each(|(r, out)| self.row_apply(r, x, out, true));
    }

    /// `xᵀ L x`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// `|x|ᵀ |L| |x|`.
    pub fn abs_quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply_abs(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a.abs() * b).sum()
    }

    /// Bilinear form `wᵀ L u`.
    pub fn bilinear(&self, u: &[f64], w: &[f64]) -> f64 {
        let mut y = vec![0.0; u.len()];
        self.apply(u, &mut y);
        w.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}
