//! Surface and volume forms on a small cell and the propagation-form families built from them.

use crate::basis::{face_quadrature, QuadratureRule};
use crate::dg::{axis_flux, dot3, flux_matrix, mat_vec, DgField, Discretization, Ext};
use crate::geometry::Point;

/// Vector-valued polynomial that can be evaluated anywhere in the plane.
pub trait Field3 {
    fn value(&self, x: &Point) -> [f64; 3];
    /// `[∂₁u, ∂₂u]`.
    fn grad(&self, x: &Point) -> [[f64; 3]; 2];
}

/// A cell polynomial (optionally shifted or mirrored) with explicit coefficients.
pub struct PolyField<'a> {
    pub disc: &'a Discretization,
    pub ext: Ext,
    pub coeffs: Vec<f64>,
}

impl<'a> PolyField<'a> {
    pub fn new(disc: &'a Discretization, ext: Ext, coeffs: Vec<f64>) -> Self {
        Self { disc, ext, coeffs }
    }

    /// Extension of the field's polynomial on `ext.cell`.
    pub fn from_field(disc: &'a Discretization, ext: Ext, field: &DgField) -> Self {
        Self { disc, ext, coeffs: field.block(ext.cell).to_vec() }
    }

    pub fn with_ext(&self, ext: Ext) -> PolyField<'a> {
        PolyField { disc: self.disc, ext, coeffs: self.coeffs.clone() }
    }
}

impl Field3 for PolyField<'_> {
    fn value(&self, x: &Point) -> [f64; 3] {
        self.disc.eval_value(&self.ext, x).apply(&self.coeffs)
    }

    fn grad(&self, x: &Point) -> [[f64; 3]; 2] {
        let (_, g) = self.disc.eval_value_grad(&self.ext, x);
        [g[0].apply(&self.coeffs), g[1].apply(&self.coeffs)]
    }
}

/// Linear combination `Σ cᵢ fᵢ`.
pub struct Combo<'a>(pub Vec<(f64, &'a dyn Field3)>);

impl Field3 for Combo<'_> {
    fn value(&self, x: &Point) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, f) in &self.0 {
            let v = f.value(x);
            (0..3).for_each(|k| out[k] += c * v[k]);
        }
        out
    }

    fn grad(&self, x: &Point) -> [[f64; 3]; 2] {
        let mut out = [[0.0; 3]; 2];
        for (c, f) in &self.0 {
            let g = f.grad(x);
            for d in 0..2 {
                (0..3).for_each(|k| out[d][k] += c * g[d][k]);
            }
        }
        out
    }
}

/// A face of a small cell in that cell's frame, with the cell's outward normal.
#[derive(Clone, Debug)]
pub struct FaceGeom {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
    pub rule: QuadratureRule,
    pub boundary: bool,
}

/// Faces of `cell` as seen from the cell.
pub fn cell_face_geoms(disc: &Discretization, cell: usize) -> Vec<FaceGeom> {
    disc.mesh.cells[cell]
        .faces
        .iter()
        .map(|f| FaceGeom {
            a: f.a,
            b: f.b,
            normal: f.normal,
            rule: face_quadrature(f.a, f.b, disc.quad_degree),
            boundary: f.is_boundary(),
        })
        .collect()
}

/// `b_γ(u_μ, u_ν, w) = ∫_γ ⟨½ A_n (u_μ + u_ν), w⟩`.
pub fn surface_form(face: &FaceGeom, c: f64, u_mu: &dyn Field3, u_nu: &dyn Field3, w: &dyn Field3) -> f64 {
    let a = flux_matrix(&face.normal, c);
    face.rule
        .points
        .iter()
        .zip(&face.rule.weights)
        .map(|(x, wq)| {
            let (um, un) = (u_mu.value(x), u_nu.value(x));
            let s = [0.5 * (um[0] + un[0]), 0.5 * (um[1] + un[1]), 0.5 * (um[2] + un[2])];
            wq * dot3(&mat_vec(&a, &s), &w.value(x))
        })
        .sum()
}

/// `∫_E ½ (f(u_μ) + f(u_ν)) · ∇w`.
pub fn volume_form(rule: &QuadratureRule, c: f64, u_mu: &dyn Field3, u_nu: &dyn Field3, w: &dyn Field3) -> f64 {
    let a = [axis_flux(0, c), axis_flux(1, c)];
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(x, wq)| {
            let (um, un) = (u_mu.value(x), u_nu.value(x));
            let s = [0.5 * (um[0] + un[0]), 0.5 * (um[1] + un[1]), 0.5 * (um[2] + un[2])];
            let g = w.grad(x);
            wq * (dot3(&mat_vec(&a[0], &s), &g[0]) + dot3(&mat_vec(&a[1], &s), &g[1]))
        })
        .sum()
}

/// `∫_E ½ ⟨∇·(f(w_μ) + f(w_ν)), u⟩`.
pub fn volume_form_adj(rule: &QuadratureRule, c: f64, w_mu: &dyn Field3, w_nu: &dyn Field3, u: &dyn Field3) -> f64 {
    let a = [axis_flux(0, c), axis_flux(1, c)];
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(x, wq)| {
            let (gm, gn) = (w_mu.grad(x), w_nu.grad(x));
            let uv = u.value(x);
            let mut div = [0.0; 3];
            for k in 0..2 {
                let s = [0.5 * (gm[k][0] + gn[k][0]), 0.5 * (gm[k][1] + gn[k][1]), 0.5 * (gm[k][2] + gn[k][2])];
                let t = mat_vec(&a[k], &s);
                (0..3).for_each(|i| div[i] += t[i]);
            }
            wq * dot3(&div, &uv)
        })
        .sum()
}

/// Which propagation-form family a small cell uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormFamily {
    Central,
    /// Central forms plus the kernel correction for the reflecting face `reflecting`.
    ReflectingCentral { reflecting: usize },
}

impl FormFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FormFamily::Central => "central",
            FormFamily::ReflectingCentral { .. } => "reflecting-central",
        }
    }
}

/// `p_ij = Σ_k C[i][j][k]·b_{γ_k}` for `i ≠ j`, plus the volume weight `κ = 2/(K(K−1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationFormSet {
    pub cell: usize,
    pub k: usize,
    pub coeff: Vec<f64>,
    pub kappa: f64,
    pub family: FormFamily,
}

impl PropagationFormSet {
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeff[(i * self.k + j) * self.k + k]
    }

    fn c_mut(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        &mut self.coeff[(i * self.k + j) * self.k + k]
    }

    /// `p_ij(u, v, w)` and the sum of magnitudes of its surface terms.
    pub fn p_scaled(&self, i: usize, j: usize, faces: &[FaceGeom], c: f64, u: &dyn Field3, v: &dyn Field3, w: &dyn Field3) -> (f64, f64) {
        let mut val = 0.0;
        let mut mag = 0.0;
        for (k, face) in faces.iter().enumerate() {
            let ck = self.c(i, j, k);
            if ck != 0.0 {
                let b = surface_form(face, c, u, v, w);
                val += ck * b;
                mag += (ck * b).abs();
            }
        }
        (val, mag)
    }

    pub fn p(&self, i: usize, j: usize, faces: &[FaceGeom], c: f64, u: &dyn Field3, v: &dyn Field3, w: &dyn Field3) -> f64 {
        self.p_scaled(i, j, faces, c, u, v, w).0
    }

    pub fn pv(&self, rule: &QuadratureRule, c: f64, u: &dyn Field3, v: &dyn Field3, w: &dyn Field3) -> f64 {
        self.kappa * volume_form(rule, c, u, v, w)
    }

    pub fn pv_adj(&self, rule: &QuadratureRule, c: f64, wm: &dyn Field3, wn: &dyn Field3, u: &dyn Field3) -> f64 {
        self.kappa * volume_form_adj(rule, c, wm, wn, u)
    }
}

/// Central propagation forms on a cell with `k` faces.
pub fn central_forms(cell: usize, k: usize) -> PropagationFormSet {
    let kf = k as f64;
    let mut set = PropagationFormSet {
        cell,
        k,
        coeff: vec![0.0; k * k * k],
        kappa: if k >= 2 { 2.0 / (kf * (kf - 1.0)) } else { 0.0 },
        family: FormFamily::Central,
    };
    if k < 2 {
        return set;
    }
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            for m in 0..k {
                *set.c_mut(i, j, m) = if m == j {
                    1.0 / (kf - 1.0)
                } else if m == i {
                    -(kf - 2.0) / (kf * (kf - 1.0))
                } else {
                    1.0 / (kf * (kf - 1.0))
                };
            }
        }
    }
    set
}

/// Central forms plus the antisymmetric correction for reflecting face `istar`.
pub fn reflecting_forms(cell: usize, k: usize, istar: usize) -> PropagationFormSet {
    let mut set = central_forms(cell, k);
    set.family = FormFamily::ReflectingCentral { reflecting: istar };
    if k < 2 {
        return set;
    }
    let kf = k as f64;
    let w = 1.0 / (kf * (kf - 1.0));
    for j in 0..k {
        if j == istar {
            continue;
        }
        for m in 0..k {
            let t = if m == j {
                -(kf - 2.0) * w
            } else if m != istar {
                w
            } else {
                0.0
            };
            *set.c_mut(istar, j, m) += t;
            *set.c_mut(j, istar, m) -= t;
        }
        for m in 0..k {
            if m == istar || m == j {
                continue;
            }
            // p̃_jm = (b_m − b_j)/(K(K−1))
            *set.c_mut(j, m, m) += w;
            *set.c_mut(j, m, j) -= w;
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_face_central_coefficients() {
        let s = central_forms(0, 3);
        assert!((s.c(0, 1, 1) - 0.5).abs() < 1e-15);
        assert!((s.c(0, 1, 0) + 1.0 / 6.0).abs() < 1e-15);
        assert!((s.c(0, 1, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.kappa - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_face_forms_collapse() {
        let s = central_forms(0, 2);
        assert_eq!(s.c(0, 1, 1), 1.0);
        assert_eq!(s.c(0, 1, 0), 0.0);
        assert_eq!(s.c(1, 0, 0), 1.0);
        assert_eq!(s.c(1, 0, 1), 0.0);
    }

    #[test]
    fn reflecting_row_collapses_to_wall_face() {
        for k in 2..7 {
            for istar in 0..k {
                let s = reflecting_forms(0, k, istar);
                let kf = k as f64;
                for j in 0..k {
                    if j == istar {
                        continue;
                    }
                    for m in 0..k {
                        let expect = if m == istar { 1.0 / (kf - 1.0) } else { 0.0 };
                        assert!((s.c(j, istar, m) - expect).abs() < 1e-15, "k={k} i*={istar} j={j} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn correction_is_antisymmetric_and_keeps_consistency() {
        for k in 2..7 {
            let central = central_forms(0, k);
            for istar in 0..k {
                let s = reflecting_forms(0, k, istar);
                for i in 0..k {
                    for j in 0..k {
                        if i == j {
                            continue;
                        }
                        for m in 0..k {
                            let ti = s.c(i, j, m) - central.c(i, j, m);
                            let tj = s.c(j, i, m) - central.c(j, i, m);
                            assert!((ti + tj).abs() < 1e-15);
                        }
                    }
                }
                for j in 0..k {
                    for m in 0..k {
                        let sum: f64 = (0..k).filter(|i| *i != j).map(|i| s.c(i, j, m)).sum();
                        let expect = if m == j { 1.0 } else { 0.0 };
                        assert!((sum - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }
}
