//! Linear evaluation maps from a cell's coefficient block to a state (or its gradient) at a point.

use super::Discretization;
use crate::basis::MAX_NB;
use crate::geometry::Point;

/// Reflection across a straight wall through `x0` with unit normal `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mirror {
    pub x0: Point,
    pub n: Point,
}

impl Mirror {
    /// Orthogonal projection of `x` onto the wall line.
    pub fn project(&self, x: &Point) -> Point {
        x - self.n * (x - self.x0).dot(&self.n)
    }
}

/// Polynomial extension of a cell's solution, evaluated in some other cell's frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ext {
    pub cell: usize,
    /// Source-cell coordinates are evaluation coordinates plus `shift`.
    pub shift: Point,
    pub mirror: Option<Mirror>,
}

impl Ext {
    pub fn plain(cell: usize) -> Self {
        Self { cell, shift: Point::zeros(), mirror: None }
    }

    pub fn shifted(cell: usize, shift: Point) -> Self {
        Self { cell, shift, mirror: None }
    }

    pub fn mirrored(self, x0: Point, n: Point) -> Self {
        Self { mirror: Some(Mirror { x0, n }), ..self }
    }
}

/// `3 × 3·nb` matrix stored as 3×3 tiles of length-`nb` rows: `out[i] = Σ_j Σ_a tile(i,j)[a]·u_j[a]`.
#[derive(Clone, Debug)]
pub struct Eval {
    pub nb: usize,
    pub data: [[f64; MAX_NB]; 9],
    pub nz: [bool; 9],
}

impl Eval {
    pub fn zero(nb: usize) -> Self {
        Self { nb, data: [[0.0; MAX_NB]; 9], nz: [false; 9] }
    }

    #[inline]
    pub fn tile(&self, i: usize, j: usize) -> Option<&[f64]> {
        if self.nz[i * 3 + j] {
            Some(&self.data[i * 3 + j][..self.nb])
        } else {
            None
        }
    }

    fn set_diag(&mut self, phi: &[f64]) {
        for c in 0..3 {
            self.data[c * 4][..self.nb].copy_from_slice(&phi[..self.nb]);
            self.nz[c * 4] = true;
        }
    }

    /// Applies the map to a coefficient block.
    pub fn apply(&self, block: &[f64]) -> [f64; 3] {
        let nb = self.nb;
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                if let Some(t) = self.tile(i, j) {
                    out[i] += t.iter().zip(&block[j * nb..(j + 1) * nb]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        out
    }

    /// Builds `p ↦ p`, `v ↦ v·φ(x) − 2 n (n·v)·ψ` with `φ`, `ψ` basis rows.
    fn mirrored(nb: usize, phi: &[f64], psi: &[f64], n: &Point) -> Self {
        let mut e = Self::zero(nb);
        e.data[0][..nb].copy_from_slice(&phi[..nb]);
        e.nz[0] = true;
        for i in 0..2 {
            for j in 0..2 {
                let t = (i + 1) * 3 + (j + 1);
                let diag = if i == j { 1.0 } else { 0.0 };
                let c = -2.0 * n[i] * n[j];
                for a in 0..nb {
                    e.data[t][a] = diag * phi[a] + c * psi[a];
                }
                e.nz[t] = diag != 0.0 || c != 0.0;
            }
        }
        e
    }
}

impl Discretization {
    /// Value map of `ext` at `x`.
    pub fn eval_value(&self, ext: &Ext, x: &Point) -> Eval {
        let nb = self.nb;
        let basis = &self.bases[ext.cell];
        let mut phi = [0.0; MAX_NB];
        basis.eval(&(x + ext.shift), &mut phi);
        match &ext.mirror {
            None => {
                let mut e = Eval::zero(nb);
                e.set_diag(&phi);
                e
            }
            Some(m) => {
                let mut psi = [0.0; MAX_NB];
                basis.eval(&(m.project(x) + ext.shift), &mut psi);
                Eval::mirrored(nb, &phi, &psi, &m.n)
            }
        }
    }

    /// Value map and the two partial-derivative maps of `ext` at `x`.
    pub fn eval_value_grad(&self, ext: &Ext, x: &Point) -> (Eval, [Eval; 2]) {
        let nb = self.nb;
        let basis = &self.bases[ext.cell];
        let mut phi = [0.0; MAX_NB];
        let mut dphi = [[0.0; 2]; MAX_NB];
        basis.eval_grad(&(x + ext.shift), &mut phi, &mut dphi);
        let dk = |k: usize| -> [f64; MAX_NB] {
            let mut out = [0.0; MAX_NB];
            for a in 0..nb {
                out[a] = dphi[a][k];
            }
            out
        };
        match &ext.mirror {
            None => {
                let mut v = Eval::zero(nb);
                v.set_diag(&phi);
                let mut g0 = Eval::zero(nb);
                g0.set_diag(&dk(0));
                let mut g1 = Eval::zero(nb);
                g1.set_diag(&dk(1));
                (v, [g0, g1])
            }
            Some(m) => {
                let mut psi = [0.0; MAX_NB];
                let mut dpsi = [[0.0; 2]; MAX_NB];
                basis.eval_grad(&(m.project(x) + ext.shift), &mut psi, &mut dpsi);
                let v = Eval::mirrored(nb, &phi, &psi, &m.n);
                // ∂_k [v(x^⊥)] = Σ_m ∂_m v(x^⊥) P_mk with P = I − n nᵀ
                let n = m.n;
                let grads = [0usize, 1].map(|k| {
                    let mut chain = [0.0; MAX_NB];
                    for a in 0..nb {
                        let mut s = 0.0;
                        for (mm, d) in dpsi[a].iter().enumerate() {
                            let p = if mm == k { 1.0 } else { 0.0 } - n[mm] * n[k];
                            s += d * p;
                        }
                        chain[a] = s;
                    }
                    Eval::mirrored(nb, &dk(k), &chain, &n)
                });
                (v, grads)
            }
        }
    }
}
