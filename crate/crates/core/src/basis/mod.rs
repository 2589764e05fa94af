//! Orthonormal modal bases on cut cells and the quadrature rules they rely on.

mod quadrature;

pub use quadrature::{
    cell_quadrature, face_quadrature, gauss_legendre_unit, gauss_points_for, polygon_quadrature, square_quadrature,
    triangle_quadrature, QuadratureRule,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{CutCell, Point};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 3;
/// Basis size for `MAX_DEGREE`.
pub const MAX_NB: usize = 10;

/// Number of scalar basis functions of total degree `<= r` in 2D.
pub const fn n_basis(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Exponents `(a, b)` of `ξ^a η^b`, ordered by total degree.
pub fn exponents(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_basis(r));
    for d in 0..=r {
        for j in 0..=d {
            out.push((d - j, j));
        }
    }
    out
}

/// Orthonormal basis of `P^r(E)`: `φ_a = Σ_b T[a][b] m_b` with scaled monomials
/// `m_b = ((x - center)/scale)^exp_b` on the cell's bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementBasis {
    pub cell: usize,
    pub degree: usize,
    pub center: Point,
    pub scale: Point,
    exps: Vec<(usize, usize)>,
    /// Row-major `nb × nb`.
    transform: Vec<f64>,
}

impl ElementBasis {
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn transform(&self) -> &[f64] {
        &self.transform
    }

    fn monomials(&self, x: &Point, m: &mut [f64], dm: Option<&mut [[f64; 2]]>) {
        let r = self.degree;
        let xi = (x.x - self.center.x) / self.scale.x;
        let eta = (x.y - self.center.y) / self.scale.y;
        let mut px = [1.0; MAX_DEGREE + 1];
        let mut py = [1.0; MAX_DEGREE + 1];
        for k in 1..=r {
            px[k] = px[k - 1] * xi;
            py[k] = py[k - 1] * eta;
        }
        for (b, &(ea, eb)) in self.exps.iter().enumerate() {
            m[b] = px[ea] * py[eb];
        }
        if let Some(dm) = dm {
            for (b, &(ea, eb)) in self.exps.iter().enumerate() {
                let gx = if ea > 0 { ea as f64 * px[ea - 1] * py[eb] / self.scale.x } else { 0.0 };
                let gy = if eb > 0 { eb as f64 * px[ea] * py[eb - 1] / self.scale.y } else { 0.0 };
                dm[b] = [gx, gy];
            }
        }
    }

    /// Basis values at `x` (any point in the plane).
    pub fn eval(&self, x: &Point, out: &mut [f64]) {
        let nb = self.len();
        let mut m = [0.0; MAX_NB];
        self.monomials(x, &mut m, None);
        for a in 0..nb {
            let row = &self.transform[a * nb..(a + 1) * nb];
            out[a] = row.iter().zip(&m[..nb]).map(|(t, v)| t * v).sum();
        }
    }

    /// Basis values and gradients at `x`.
    pub fn eval_grad(&self, x: &Point, val: &mut [f64], grad: &mut [[f64; 2]]) {
        let nb = self.len();
        let mut m = [0.0; MAX_NB];
        let mut dm = [[0.0; 2]; MAX_NB];
        self.monomials(x, &mut m, Some(&mut dm));
        for a in 0..nb {
            let row = &self.transform[a * nb..(a + 1) * nb];
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for b in 0..nb {
                v += row[b] * m[b];
                g[0] += row[b] * dm[b][0];
                g[1] += row[b] * dm[b][1];
            }
            val[a] = v;
            grad[a] = g;
        }
    }

    /// Value and gradient tables for a point list, `nb` entries per point.
    pub fn tabulate(&self, points: &[Point]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let nb = self.len();
        let mut val = vec![0.0; nb * points.len()];
        let mut grad = vec![[0.0; 2]; nb * points.len()];
        for (q, x) in points.iter().enumerate() {
            self.eval_grad(x, &mut val[q * nb..(q + 1) * nb], &mut grad[q * nb..(q + 1) * nb]);
        }
        (val, grad)
    }

    /// Maximum entrywise deviation of the quadrature Gram matrix from the identity.
    pub fn gram_deviation(&self, quad: &QuadratureRule) -> f64 {
        let nb = self.len();
        let mut g = vec![0.0; nb * nb];
        let mut v = [0.0; MAX_NB];
        for (x, w) in quad.points.iter().zip(&quad.weights) {
            self.eval(x, &mut v);
            for a in 0..nb {
                for b in 0..nb {
                    g[a * nb + b] += w * v[a] * v[b];
                }
            }
        }
        let mut dev: f64 = 0.0;
        for a in 0..nb {
            for b in 0..nb {
                let target = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((g[a * nb + b] - target).abs());
            }
        }
        dev
    }
}

fn weighted_columns(basis: &ElementBasis, quad: &QuadratureRule) -> DMatrix<f64> {
    // rows: quadrature points scaled by sqrt(w); columns: current basis functions
    let nb = basis.len();
    let mut a = DMatrix::zeros(quad.len(), nb);
    let mut v = [0.0; MAX_NB];
    for (q, (x, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        basis.eval(x, &mut v);
        let s = w.sqrt();
        for b in 0..nb {
            a[(q, b)] = s * v[b];
        }
    }
    a
}

/// One Cholesky orthonormalization pass; returns false if the Gram matrix is not SPD.
fn cholesky_pass(basis: &mut ElementBasis, quad: &QuadratureRule) -> bool {
    let nb = basis.len();
    let a = weighted_columns(basis, quad);
    let gram = a.transpose() * &a;
    let Some(chol) = gram.cholesky() else { return false };
    let l = chol.l();
    let Some(linv) = l.try_inverse() else { return false };
    let t = DMatrix::from_row_slice(nb, nb, &basis.transform);
    let tn = linv * t;
    if tn.iter().any(|v| !v.is_finite()) {
        return false;
    }
    for i in 0..nb {
        for j in 0..nb {
            basis.transform[i * nb + j] = tn[(i, j)];
        }
    }
    true
}

/// Modified Gram–Schmidt with column pivoting on the quadrature-weighted monomials.
fn mgs_orthonormalize(basis: &mut ElementBasis, quad: &QuadratureRule) {
    let nb = basis.len();
    let a = weighted_columns(basis, quad);
    let mut cols: Vec<Vec<f64>> = (0..nb).map(|b| a.column(b).iter().copied().collect()).collect();
    let t0 = basis.transform.clone();
    let mut coef: Vec<Vec<f64>> = (0..nb).map(|b| t0[b * nb..(b + 1) * nb].to_vec()).collect();
    let mut done = vec![false; nb];
    let mut out_cols: Vec<Vec<f64>> = Vec::new();
    let mut out_coef: Vec<Vec<f64>> = Vec::new();
    for _ in 0..nb {
        let norm = |c: &Vec<f64>| c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (p, _) = (0..nb)
            .filter(|b| !done[*b])
            .map(|b| (b, norm(&cols[b])))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        done[p] = true;
        let mut v = cols[p].clone();
        let mut c = coef[p].clone();
        for _ in 0..2 {
            for (q, qc) in out_cols.iter().zip(&out_coef) {
                let d: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
                c.iter_mut().zip(qc).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        c.iter_mut().for_each(|x| *x /= n);
        out_cols.push(v);
        out_coef.push(c);
        // update remaining columns against the new direction
        let (qv, qc) = (out_cols.last().unwrap().clone(), out_coef.last().unwrap().clone());
        for b in 0..nb {
            if !done[b] {
                let d: f64 = cols[b].iter().zip(&qv).map(|(x, y)| x * y).sum();
                cols[b].iter_mut().zip(&qv).for_each(|(x, y)| *x -= d * y);
                coef[b].iter_mut().zip(&qc).for_each(|(x, y)| *x -= d * y);
            }
        }
    }
    for (a, c) in out_coef.iter().enumerate() {
        basis.transform[a * nb..(a + 1) * nb].copy_from_slice(c);
    }
}

/// Builds the orthonormal basis of degree `r` on `cell` using the cell quadrature `quad`.
/// Cholesky is applied twice; modified Gram–Schmidt is the fallback.
pub fn build_cell_basis(cell: &CutCell, r: usize, quad: &QuadratureRule) -> Result<ElementBasis> {
    if r > MAX_DEGREE {
        return Err(Error::Config(format!("degree {r} exceeds the supported maximum {MAX_DEGREE}")));
    }
    let (lo, hi) = cell.bbox();
    let exps = exponents(r);
    let nb = exps.len();
    let mut transform = vec![0.0; nb * nb];
    for a in 0..nb {
        transform[a * nb + a] = 1.0;
    }
    let mut basis = ElementBasis {
        cell: cell.id,
        degree: r,
        center: (lo + hi) * 0.5,
        scale: ((hi - lo) * 0.5).map(|v| v.max(f64::MIN_POSITIVE)),
        exps,
        transform,
    };
    let ok = cholesky_pass(&mut basis, quad) && cholesky_pass(&mut basis, quad);
    if !ok {
        let mut identity = vec![0.0; nb * nb];
        for a in 0..nb {
            identity[a * nb + a] = 1.0;
        }
        basis.transform = identity;
        mgs_orthonormalize(&mut basis, quad);
        mgs_orthonormalize(&mut basis, quad);
    }
    let deviation = basis.gram_deviation(quad);
    if !(deviation <= 1e-8) {
        return Err(Error::BasisConditioningFailure { cell: cell.id, alpha: cell.alpha, deviation });
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_background_mesh, build_cut_mesh, GeometrySpec, HalfPlane, MeshOptions};
    use approx::assert_relative_eq;

    fn single_cell(planes: Vec<HalfPlane>) -> CutCell {
        let bg = build_background_mesh(1, 1, Point::zeros(), Point::new(1.0, 1.0), [false; 2]).unwrap();
        let m = build_cut_mesh(&bg, &GeometrySpec::HalfPlaneList(planes), MeshOptions::default()).unwrap();
        m.cells[0].clone()
    }

    /// Corner triangle of the unit square with area `alpha`.
    fn sliver(alpha: f64) -> CutCell {
        let s = 0.5f64.sqrt();
        let d = (2.0 * alpha).sqrt();
        single_cell(vec![HalfPlane::new(Point::new(d, 0.0), Point::new(s, s))])
    }

    #[test]
    fn degree_zero_is_normalized_constant() {
        let c = sliver(0.01);
        let q = cell_quadrature(&c, 2, 1.0);
        let b = build_cell_basis(&c, 0, &q).unwrap();
        let mut v = [0.0];
        let mut g = [[0.0; 2]];
        b.eval_grad(&Point::new(3.0, -2.0), &mut v, &mut g);
        assert_relative_eq!(v[0].abs(), 1.0 / c.area.sqrt(), max_relative = 1e-13);
        assert_eq!(g[0], [0.0, 0.0]);
    }

    #[test]
    fn unit_square_degree_one_is_orthonormal() {
        let c = single_cell(vec![]);
        let q = cell_quadrature(&c, 4, 1.0);
        let b = build_cell_basis(&c, 1, &q).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.gram_deviation(&q) <= 1e-13);
    }

    #[test]
    fn tiny_sliver_stays_orthonormal() {
        for alpha in [1e-5, 1e-9, 1e-12] {
            let c = sliver(alpha);
            assert_relative_eq!(c.alpha, alpha, max_relative = 1e-6);
            let q = cell_quadrature(&c, 6, 1.0);
            let b = build_cell_basis(&c, 2, &q).unwrap();
            assert!(b.gram_deviation(&q) <= 1e-11, "alpha {alpha}");
        }
    }

    #[test]
    fn evaluation_matches_monomial_oracle() {
        let c = sliver(0.05);
        let q = cell_quadrature(&c, 8, 1.0);
        let b = build_cell_basis(&c, 3, &q).unwrap();
        let nb = b.len();
        let t = b.transform().to_vec();
        let exps = exponents(3);
        for x in [b.center, Point::new(0.7, -0.4), Point::new(-1.5, 2.0)] {
            let mut v = [0.0; MAX_NB];
            b.eval(&x, &mut v);
            for a in 0..nb {
                let direct: f64 = (0..nb)
                    .map(|k| {
                        let (ea, eb) = exps[k];
                        t[a * nb + k]
                            * ((x.x - b.center.x) / b.scale.x).powi(ea as i32)
                            * ((x.y - b.center.y) / b.scale.y).powi(eb as i32)
                    })
                    .sum();
                assert!((v[a] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = sliver(0.2);
        let q = cell_quadrature(&c, 8, 1.0);
        let b = build_cell_basis(&c, 3, &q).unwrap();
        let nb = b.len();
        let x = Point::new(0.1, 0.15);
        let step = 1e-6;
        let mut v = [0.0; MAX_NB];
        let mut g = [[0.0; 2]; MAX_NB];
        b.eval_grad(&x, &mut v, &mut g);
        for k in 0..2 {
            let mut e = Point::zeros();
            e[k] = step;
            let mut vp = [0.0; MAX_NB];
            let mut vm = [0.0; MAX_NB];
            b.eval(&(x + e), &mut vp);
            b.eval(&(x - e), &mut vm);
            for a in 0..nb {
                let fd = (vp[a] - vm[a]) / (2.0 * step);
                let scale = g.iter().take(nb).map(|gg| gg[k].abs()).fold(1.0, f64::max);
                assert!((fd - g[a][k]).abs() <= 1e-7 * scale, "a={a} k={k} fd={fd} g={}", g[a][k]);
            }
        }
    }

    #[test]
    fn mgs_fallback_orthonormalizes() {
        let c = sliver(0.1);
        let q = cell_quadrature(&c, 6, 1.0);
        let mut b = build_cell_basis(&c, 2, &q).unwrap();
        let nb = b.len();
        b.transform.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..nb {
            b.transform[a * nb + a] = 1.0;
        }
        mgs_orthonormalize(&mut b, &q);
        mgs_orthonormalize(&mut b, &q);
        assert!(b.gram_deviation(&q) <= 1e-12);
    }
}
