//! Pointwise evaluation of one cell's stabilization terms through the form API, independent of the block assembly.

use super::forms::{volume_form, Combo, Field3, PolyField};
use super::{CellStabilizer, StabParts};
use crate::basis::face_quadrature;
use crate::dg::{dot3, flux_matrix, mat_vec, mirror_state, DgField, Discretization, Dissipation, Ext, State};

/// A form value and the sum of the magnitudes of the terms it was summed from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub magnitude: f64,
}

impl FormValue {
    fn push(&mut self, v: f64) {
        self.value += v;
        self.magnitude += v.abs();
    }
}

struct Zero;

impl Field3 for Zero {
    fn value(&self, _: &crate::Point) -> [f64; 3] {
        [0.0; 3]
    }
    fn grad(&self, _: &crate::Point) -> [[f64; 3]; 2] {
        [[0.0; 3]; 2]
    }
}

/// `J⁰ + J¹ + Jˢ` of one small cell (restricted to `parts`) for trial `u` and test `w`.
pub fn stabilizer_form_value(
    disc: &Discretization,
    stab: &CellStabilizer,
    diss: Dissipation,
    parts: StabParts,
    u: &DgField,
    w: &DgField,
) -> FormValue {
    let mut out = FormValue::default();
    let eta = stab.eta;
    let c = disc.c;
    let e = stab.cell;
    let faces = &stab.faces;
    let rule = &disc.cell_quad[e];
    let kappa = stab.forms.kappa;
    let uf = |x: Ext| PolyField::from_field(disc, x, u);
    let wf = |x: Ext| PolyField::from_field(disc, x, w);
    let zero = Zero;

    for p in &stab.pairs {
        let (ui, uj, ue) = (uf(p.ui), uf(p.uj), uf(Ext::plain(e)));
        let (ti, tj, te) = (wf(p.ui), wf(p.uj), wf(Ext::plain(e)));
        if parts.central {
            let wi = p.wi.map(wf);
            let wj = p.wj.map(wf);
            let wi_ref: &dyn Field3 = wi.as_ref().map_or(&zero as &dyn Field3, |f| f as &dyn Field3);
            let wj_ref: &dyn Field3 = wj.as_ref().map_or(&zero as &dyn Field3, |f| f as &dyn Field3);
            let test_ij = Combo(vec![(1.0, &te), (-1.0, wj_ref)]);
            let test_ji = Combo(vec![(1.0, &te), (-1.0, wi_ref)]);
            let (a, ma) = stab.forms.p_scaled(p.i, p.j, faces, c, &ui, &uj, &test_ij);
            let (b, mb) = stab.forms.p_scaled(p.j, p.i, faces, c, &ui, &uj, &test_ji);
            out.value += eta * (a + b);
            out.magnitude += eta * (ma + mb);

            let slots: [(f64, &PolyField, &PolyField); 3] = [(-1.0, &ue, &te), (0.5, &ui, &ti), (0.5, &uj, &tj)];
            for (om, us, ts) in slots {
                out.push(eta * om * stab.forms.pv(rule, c, &ui, &uj, ts));
                out.push(-eta * om * kappa * volume_form(rule, c, us, us, ts));
                out.push(eta * om * stab.forms.pv_adj(rule, c, &ti, &tj, us));
            }
        }
        if parts.dissipation {
            for f in faces {
                let Some(s) = diss.matrix(&f.normal, c) else { continue };
                for (x, q) in f.rule.points.iter().zip(&f.rule.weights) {
                    let (a, b) = (ui.value(x), uj.value(x));
                    let (ta, tb) = (ti.value(x), tj.value(x));
                    let du = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
                    let dt = [ta[0] - tb[0], ta[1] - tb[1], ta[2] - tb[2]];
                    let sdu = mat_vec(&s, &du);
                    let ndu = [-du[0], -du[1], -du[2]];
                    let ndt = [-dt[0], -dt[1], -dt[2]];
                    out.push(eta * q / 6.0 * dot3(&sdu, &dt));
                    out.push(eta * q / 6.0 * dot3(&mat_vec(&s, &ndu), &ndt));
                }
            }
        }
    }

    // −η times the base face terms of E, evaluated from E's side
    let cell = &disc.mesh.cells[e];
    for cf in &cell.faces {
        let rule = face_quadrature(cf.a, cf.b, disc.quad_degree);
        let a = flux_matrix(&cf.normal, c);
        let s = diss.matrix(&cf.normal, c);
        let (uo, wo) = (uf(Ext::plain(e)), wf(Ext::plain(e)));
        let nb = cf.neighbor.map(|n| (uf(Ext::shifted(n, cf.shift)), wf(Ext::shifted(n, cf.shift))));
        for (x, q) in rule.points.iter().zip(&rule.weights) {
            let (u_in, w_in) = (uo.value(x), wo.value(x));
            let (u_out, w_out) = match &nb {
                Some((un, wn)) => (un.value(x), wn.value(x)),
                None => (mirror_state(State::from_array(u_in), &cf.normal).to_array(), [0.0; 3]),
            };
            let jump_w = [w_in[0] - w_out[0], w_in[1] - w_out[1], w_in[2] - w_out[2]];
            if parts.central {
                let avg = [0.5 * (u_in[0] + u_out[0]), 0.5 * (u_in[1] + u_out[1]), 0.5 * (u_in[2] + u_out[2])];
                out.push(-eta * q * dot3(&mat_vec(&a, &avg), &jump_w));
            }
            if let (true, Some(s)) = (parts.dissipation, s.as_ref()) {
                let ju = [u_in[0] - u_out[0], u_in[1] - u_out[1], u_in[2] - u_out[2]];
                out.push(-eta * q * dot3(&mat_vec(s, &ju), &jump_w));
            }
        }
    }
    out
}
