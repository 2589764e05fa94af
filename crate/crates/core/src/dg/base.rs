//! Assembly of the base scheme: central fluxes `a_h` plus face penalty `s_h`.

use super::{axis_flux, flux_matrix, scale_mat, Assembler, Discretization, Dissipation, Ext};

/// Which parts of the base operator to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaseParts {
    pub volume: bool,
    pub central: bool,
    pub dissipation: bool,
}

impl BaseParts {
    pub const ALL: BaseParts = BaseParts { volume: true, central: true, dissipation: true };
    pub const CENTRAL: BaseParts = BaseParts { volume: true, central: true, dissipation: false };
    pub const DISSIPATION: BaseParts = BaseParts { volume: false, central: false, dissipation: true };
}

/// Face terms of one mesh face, scaled by `scale`.
pub fn assemble_face(disc: &Discretization, face_id: usize, diss: Dissipation, parts: BaseParts, scale: f64, asm: &mut Assembler) {
    let face = &disc.mesh.faces[face_id];
    let rule = &disc.face_quad[face_id];
    let n = face.normal;
    let half_a = scale_mat(&flux_matrix(&n, disc.c), 0.5);
    let s_mat = diss.matrix(&n, disc.c);
    let left = Ext::plain(face.left);
    match face.right {
        Some(r) => {
            let right = Ext::shifted(r, face.shift);
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let xl = disc.eval_value(&left, x);
                let xr = disc.eval_value(&right, x);
                let w = w * scale;
                if parts.central {
                    asm.add(w, &half_a, &xl, face.left, &xl, face.left);
                    asm.add(w, &half_a, &xr, r, &xl, face.left);
                    asm.add(-w, &half_a, &xl, face.left, &xr, r);
                    asm.add(-w, &half_a, &xr, r, &xr, r);
                }
                if let (true, Some(s)) = (parts.dissipation, s_mat.as_ref()) {
                    asm.add(w, s, &xl, face.left, &xl, face.left);
                    asm.add(-w, s, &xr, r, &xl, face.left);
                    asm.add(-w, s, &xl, face.left, &xr, r);
                    asm.add(w, s, &xr, r, &xr, r);
                }
            }
        }
        None => {
            let mirrored = left.mirrored(face.a, n);
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let xu = disc.eval_value(&left, x);
                let xm = disc.eval_value(&mirrored, x);
                let w = w * scale;
                if parts.central {
                    asm.add(w, &half_a, &xu, face.left, &xu, face.left);
                    asm.add(w, &half_a, &xm, face.left, &xu, face.left);
                }
                if let (true, Some(s)) = (parts.dissipation, s_mat.as_ref()) {
                    asm.add(w, s, &xu, face.left, &xu, face.left);
                    asm.add(-w, s, &xm, face.left, &xu, face.left);
                }
            }
        }
    }
}

/// Volume term `-∫_E f(u)·∇w` of one cell.
pub fn assemble_volume(disc: &Discretization, cell: usize, scale: f64, asm: &mut Assembler) {
    let rule = &disc.cell_quad[cell];
    let ext = Ext::plain(cell);
    let a = [axis_flux(0, disc.c), axis_flux(1, disc.c)];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let (v, g) = disc.eval_value_grad(&ext, x);
        for k in 0..2 {
            asm.add(-w * scale, &a[k], &v, cell, &g[k], cell);
        }
    }
}

/// Assembles `a_h + s_h` (restricted to `parts`) into `asm`.
pub fn assemble_base(disc: &Discretization, diss: Dissipation, parts: BaseParts, asm: &mut Assembler) {
    if parts.volume {
        for cell in 0..disc.ncells() {
            assemble_volume(disc, cell, 1.0, asm);
        }
    }
    if parts.central || parts.dissipation {
        for f in 0..disc.mesh.faces.len() {
            assemble_face(disc, f, diss, parts, 1.0, asm);
        }
    }
}
