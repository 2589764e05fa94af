//! Physical flux, mirroring, and the unstabilized DG operator `a_h + s_h`.

mod assemble;
mod base;
mod eval;

pub use assemble::{Assembler, BlockOperator};
pub use base::{assemble_base, assemble_face, assemble_volume, BaseParts};
pub use eval::{Eval, Ext, Mirror};

use serde::{Deserialize, Serialize};

use crate::basis::{build_cell_basis, cell_quadrature, face_quadrature, n_basis, ElementBasis, QuadratureRule};
use crate::error::{Error, Result};
use crate::geometry::{CutCellMesh, Point};

pub type Mat3 = [[f64; 3]; 3];

/// Pressure and velocity at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State {
    pub p: f64,
    pub v: Point,
}

impl State {
    pub fn new(p: f64, v1: f64, v2: f64) -> Self {
        Self { p, v: Point::new(v1, v2) }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p, self.v.x, self.v.y]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.x.is_finite() && self.v.y.is_finite()
    }
}

/// `A_n = n₁A₁ + n₂A₂` for the acoustic flux `f(u) = c·(v, p·e₁, p·e₂)`.
pub fn flux_matrix(n: &Point, c: f64) -> Mat3 {
    [[0.0, c * n.x, c * n.y], [c * n.x, 0.0, 0.0], [c * n.y, 0.0, 0.0]]
}

/// `A_k` for the coordinate direction `k`.
pub fn axis_flux(k: usize, c: f64) -> Mat3 {
    let mut n = Point::zeros();
    n[k] = 1.0;
    flux_matrix(&n, c)
}

pub fn mat_vec(a: &Mat3, u: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = a[i][0] * u[0] + a[i][1] * u[1] + a[i][2] * u[2];
    }
    out
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn scale_mat(a: &Mat3, s: f64) -> Mat3 {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|v| *v *= s);
    out
}

pub fn identity3() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// Reflecting wall state `(p, v - 2(v·n)n)`.
pub fn mirror_state(u: State, n: &Point) -> State {
    State { p: u.p, v: u.v - n * (2.0 * u.v.dot(n)) }
}

/// Symmetric positive semi-definite face penalty `S_n^M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dissipation {
    Zero,
    LaxFriedrichs,
}

impl Dissipation {
    /// `S_n^M` for direction `n`; `None` when the penalty vanishes.
    pub fn matrix(&self, _n: &Point, c: f64) -> Option<Mat3> {
        match self {
            Dissipation::Zero => None,
            Dissipation::LaxFriedrichs => Some(scale_mat(&identity3(), 0.5 * c)),
        }
    }
}

/// Modal coefficients: per cell, `3·nb` values ordered `[p | v₁ | v₂]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DgField {
    pub ncells: usize,
    pub nb: usize,
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl DgField {
    pub fn zeros(ncells: usize, nb: usize) -> Self {
        Self { ncells, nb, coeffs: vec![0.0; ncells * 3 * nb], t: 0.0 }
    }

    pub fn block(&self, cell: usize) -> &[f64] {
        let s = 3 * self.nb;
        &self.coeffs[cell * s..(cell + 1) * s]
    }

    pub fn block_mut(&mut self, cell: usize) -> &mut [f64] {
        let s = 3 * self.nb;
        &mut self.coeffs[cell * s..(cell + 1) * s]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DgField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// First cell holding a non-finite coefficient.
    pub fn first_non_finite(&self) -> Option<usize> {
        let s = 3 * self.nb;
        self.coeffs.iter().position(|v| !v.is_finite()).map(|k| k / s)
    }
}

/// Mesh plus per-cell bases and quadrature rules.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: CutCellMesh,
    pub degree: usize,
    pub nb: usize,
    pub c: f64,
    pub quad_degree: usize,
    pub bases: Vec<ElementBasis>,
    pub cell_quad: Vec<QuadratureRule>,
    /// Face rules in the left cell's frame.
    pub face_quad: Vec<QuadratureRule>,
}

impl Discretization {
    /// Builds bases with the default quadrature degree `2r + 2`.
    pub fn new(mesh: CutCellMesh, degree: usize, c: f64) -> Result<Self> {
        Self::with_quad_degree(mesh, degree, c, 2 * degree + 2)
    }

    pub fn with_quad_degree(mesh: CutCellMesh, degree: usize, c: f64, quad_degree: usize) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Config(format!("sound speed must be positive, got {c}")));
        }
        let h = mesh.h();
        let cell_quad: Vec<QuadratureRule> = mesh.cells.iter().map(|cell| cell_quadrature(cell, quad_degree, h)).collect();
        let bases = mesh
            .cells
            .iter()
            .zip(&cell_quad)
            .map(|(cell, q)| build_cell_basis(cell, degree, q))
            .collect::<Result<Vec<_>>>()?;
        let face_quad = mesh.faces.iter().map(|f| face_quadrature(f.a, f.b, quad_degree)).collect();
        Ok(Self { nb: n_basis(degree), mesh, degree, c, quad_degree, bases, cell_quad, face_quad })
    }

    pub fn ncells(&self) -> usize {
        self.mesh.cells.len()
    }

    pub fn ndof(&self) -> usize {
        self.ncells() * 3 * self.nb
    }

    pub fn zero_field(&self) -> DgField {
        DgField::zeros(self.ncells(), self.nb)
    }

    pub fn check_field(&self, field: &DgField) -> Result<()> {
        if field.ncells != self.ncells() || field.nb != self.nb || field.coeffs.len() != self.ndof() {
            return Err(Error::MeshFieldMismatch(format!(
                "field has {} cells × {} basis functions, mesh needs {} × {}",
                field.ncells,
                field.nb,
                self.ncells(),
                self.nb
            )));
        }
        Ok(())
    }

    /// Evaluates the polynomial of `cell` at `x` (in that cell's frame).
    pub fn eval_cell(&self, field: &DgField, cell: usize, x: &Point) -> State {
        let nb = self.nb;
        let mut phi = [0.0; crate::basis::MAX_NB];
        self.bases[cell].eval(x, &mut phi);
        let blk = field.block(cell);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (0..nb).map(|a| blk[k * nb + a] * phi[a]).sum();
        }
        State::from_array(out)
    }

    /// Cell-wise mean of `(p, v₁, v₂)`.
    pub fn cell_mean(&self, field: &DgField, cell: usize) -> [f64; 3] {
        let q = &self.cell_quad[cell];
        let mut s = [0.0; 3];
        for (x, w) in q.points.iter().zip(&q.weights) {
            let u = self.eval_cell(field, cell, x).to_array();
            for k in 0..3 {
                s[k] += w * u[k];
            }
        }
        let area = self.mesh.cells[cell].area;
        s.map(|v| v / area)
    }
}

/// Assembled base operator `L` with `a_h(u, w) + s_h(u, w) = wᵀ L u`.
pub fn base_operator(disc: &Discretization, diss: Dissipation) -> BlockOperator {
    let mut asm = Assembler::new(disc.nb);
    assemble_base(disc, diss, BaseParts::ALL, &mut asm);
    asm.finish(disc.ncells())
}

/// Residual `R` with `⟨R, w⟩ = a_h(u, w) + s_h(u, w)`; the semi-discrete system is `du/dt = -R`.
pub fn apply_base_operator(disc: &Discretization, field: &DgField, diss: Dissipation) -> Result<DgField> {
    disc.check_field(field)?;
    let op = base_operator(disc, diss);
    let mut out = DgField { t: field.t, ..disc.zero_field() };
    op.apply(&field.coeffs, &mut out.coeffs);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axis_flux_matrices() {
        assert_eq!(flux_matrix(&Point::new(1.0, 0.0), 1.0), [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(flux_matrix(&Point::new(0.0, 1.0), 2.0), [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
    }

    fn char_poly_at(a: &Mat3, l: f64) -> f64 {
        let m = [
            [a[0][0] - l, a[0][1], a[0][2]],
            [a[1][0], a[1][1] - l, a[1][2]],
            [a[2][0], a[2][1], a[2][2] - l],
        ];
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[test]
    fn diagonal_flux_eigenvalues() {
        let s = 0.5f64.sqrt();
        let a = flux_matrix(&Point::new(s, s), 1.0);
        for l in [1.0, -1.0, 0.0] {
            assert!(char_poly_at(&a, l).abs() <= 1e-13);
        }
    }

    #[test]
    fn mirror_examples() {
        let n = Point::new(0.6, 0.8);
        let u = mirror_state(State { p: 1.0, v: n }, &n);
        assert!((u.v + n).norm() < 1e-15 && u.p == 1.0);
        let t = Point::new(-0.8, 0.6);
        let u = mirror_state(State { p: 1.0, v: t }, &n);
        assert!((u.v - t).norm() < 1e-15);
    }

    fn unit(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }

    proptest! {
        #[test]
        fn flux_is_symmetric_and_linear(theta in 0.0..std::f64::consts::TAU, c in 0.1f64..5.0) {
            let n = unit(theta);
            let a = flux_matrix(&n, c);
            let a1 = axis_flux(0, c);
            let a2 = axis_flux(1, c);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(a[i][j], a[j][i]);
                    prop_assert!((a[i][j] - n.x * a1[i][j] - n.y * a2[i][j]).abs() <= 1e-15);
                }
            }
            for l in [c, -c, 0.0] {
                prop_assert!(char_poly_at(&a, l).abs() <= 1e-13 * c.powi(3).max(1.0));
            }
        }

        #[test]
        fn mirror_average_has_no_normal_velocity(theta in 0.0..std::f64::consts::TAU, v1 in -5.0..5.0f64, v2 in -5.0..5.0f64) {
            let n = unit(theta);
            let u = State::new(0.3, v1, v2);
            let m = mirror_state(u, &n);
            prop_assert!(((u.v + m.v) * 0.5).dot(&n).abs() <= 1e-14 * (1.0 + u.v.norm()));
        }

        #[test]
        fn mirror_skew_symmetry(theta in 0.0..std::f64::consts::TAU, u in proptest::array::uniform3(-3.0..3.0f64), w in proptest::array::uniform3(-3.0..3.0f64)) {
            let n = unit(theta);
            let a = flux_matrix(&n, 1.0);
            let mu = mirror_state(State::from_array(u), &n).to_array();
            let mw = mirror_state(State::from_array(w), &n).to_array();
            let lhs = dot3(&mat_vec(&a, &mu), &w) + dot3(&mat_vec(&a, &u), &mw);
            prop_assert!(lhs.abs() <= 1e-14 * 9.0);
        }

        #[test]
        fn lax_friedrichs_is_half_c(theta in 0.0..std::f64::consts::TAU, c in 0.1f64..5.0) {
            let s = Dissipation::LaxFriedrichs.matrix(&unit(theta), c).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(s[i][j], if i == j { 0.5 * c } else { 0.0 });
                }
            }
            prop_assert!(Dissipation::Zero.matrix(&unit(theta), c).is_none());
        }
    }
}
