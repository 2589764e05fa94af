//! Domain-of-dependence stabilization on small cut cells.

mod forms;
mod reference;

pub use forms::{
    cell_face_geoms, central_forms, reflecting_forms, surface_form, volume_form, volume_form_adj, Combo, FaceGeom, Field3,
    FormFamily, PolyField, PropagationFormSet,
};
pub use reference::{stabilizer_form_value, FormValue};

use crate::basis::QuadratureRule;
use crate::dg::{
    assemble_base, assemble_face, axis_flux, flux_matrix, scale_mat, Assembler, BaseParts, BlockOperator, DgField,
    Discretization, Dissipation, Eval, Ext, Mat3,
};
use crate::error::{Error, Result};
use crate::geometry::SmallCellSet;

/// Cell capacity `𝔠_E` and clamped stabilization parameter `η_E`.
pub fn capacity(area: f64, dt: f64, r: usize, c: f64, max_face: f64) -> (f64, f64) {
    let cap = area / ((2 * r + 1) as f64 * dt * c * max_face);
    (cap, (1.0 - cap).clamp(0.0, 1.0))
}

/// How `η_E` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaMode {
    /// From the cell capacity at the run's step size.
    Capacity { dt: f64 },
    /// The same value on every small cell (0 disables the stabilization).
    Fixed(f64),
}

/// Unified extensions for one face pair `(i, j)` of a small cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PairExtensions {
    pub i: usize,
    pub j: usize,
    /// `ℒ^{ij}_{E_i}` and `ℒ^{ij}_{E_j}` (a mirrored opposite neighbor on a wall face).
    pub ui: Ext,
    pub uj: Ext,
    /// Plain neighbor extensions used as test functions in `J⁰` (`None` on a wall face).
    pub wi: Option<Ext>,
    pub wj: Option<Ext>,
}

#[derive(Clone, Debug)]
pub struct CellStabilizer {
    pub cell: usize,
    pub capacity: f64,
    pub eta: f64,
    pub forms: PropagationFormSet,
    pub faces: Vec<FaceGeom>,
    pub pairs: Vec<PairExtensions>,
}

impl CellStabilizer {
    pub fn k(&self) -> usize {
        self.faces.len()
    }
}

fn neighbor_ext(disc: &Discretization, cell: usize, face: usize) -> Option<Ext> {
    let cf = &disc.mesh.cells[cell].faces[face];
    cf.neighbor.map(|n| Ext::shifted(n, cf.shift))
}

fn unified(disc: &Discretization, cell: usize, face: usize, other: usize) -> Result<Ext> {
    if let Some(e) = neighbor_ext(disc, cell, face) {
        return Ok(e);
    }
    let cf = &disc.mesh.cells[cell].faces[face];
    let opposite = neighbor_ext(disc, cell, other).ok_or(Error::MultipleBoundaryFaces { cell, count: 2 })?;
    Ok(opposite.mirrored(cf.a, cf.normal))
}

/// Builds the stabilizer of one small cell.
pub fn build_stabilizer(disc: &Discretization, cell: usize, eta: EtaMode) -> Result<CellStabilizer> {
    let c = disc.mesh.cells.get(cell).ok_or_else(|| Error::StabilizerMeshMismatch(format!("no cell {cell}")))?;
    let nbnd = c.boundary_face_count();
    if nbnd > 1 {
        return Err(Error::MultipleBoundaryFaces { cell, count: nbnd });
    }
    let k = c.faces.len();
    if k < 2 {
        return Err(Error::AssumptionViolated(format!("cell {cell} has {k} faces")));
    }
    let forms = match c.faces.iter().position(|f| f.is_boundary()) {
        Some(istar) => reflecting_forms(cell, k, istar),
        None => central_forms(cell, k),
    };
    let max_face = c.faces.iter().map(|f| f.length).fold(0.0, f64::max);
    let (cap, eta) = match eta {
        EtaMode::Capacity { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("time step must be positive, got {dt}")));
            }
            capacity(c.area, dt, disc.degree, disc.c, max_face)
        }
        EtaMode::Fixed(v) => (f64::NAN, v.clamp(0.0, 1.0)),
    };
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            pairs.push(PairExtensions {
                i,
                j,
                ui: unified(disc, cell, i, j)?,
                uj: unified(disc, cell, j, i)?,
                wi: neighbor_ext(disc, cell, i),
                wj: neighbor_ext(disc, cell, j),
            });
        }
    }
    Ok(CellStabilizer { cell, capacity: cap, eta, forms, faces: cell_face_geoms(disc, cell), pairs })
}

/// Stabilizers for every small cell, in ascending cell order.
pub fn build_stabilizers(disc: &Discretization, small: &SmallCellSet, eta: EtaMode) -> Result<Vec<CellStabilizer>> {
    small.members.iter().map(|m| build_stabilizer(disc, m.cell, eta)).collect()
}

/// Which stabilization terms to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabParts {
    /// `J⁰ + J¹`.
    pub central: bool,
    /// `Jˢ`.
    pub dissipation: bool,
}

impl StabParts {
    pub const ALL: StabParts = StabParts { central: true, dissipation: true };
    pub const CENTRAL: StabParts = StabParts { central: true, dissipation: false };
    pub const DISSIPATION: StabParts = StabParts { central: false, dissipation: true };
}

fn check_stabilizer(disc: &Discretization, stab: &CellStabilizer) -> Result<()> {
    let ok = disc.mesh.cells.get(stab.cell).is_some_and(|c| c.faces.len() == stab.k());
    if ok {
        Ok(())
    } else {
        Err(Error::StabilizerMeshMismatch(format!("stabilizer of cell {} does not fit the mesh", stab.cell)))
    }
}

/// Adds `Σ coef·⟨B·X_a u, Y_b w⟩` over `(coef, a, b)` at one quadrature point.
fn add_terms(asm: &mut Assembler, w: f64, b: &Mat3, vals: &[(Eval, usize)], tests: &[(Eval, usize)], terms: &[(f64, usize, usize)]) {
    for &(coef, a, t) in terms {
        if coef != 0.0 {
            asm.add(w * coef, b, &vals[a].0, vals[a].1, &tests[t].0, tests[t].1);
        }
    }
}

fn ext_list(stab: &CellStabilizer, p: &PairExtensions) -> [Ext; 3] {
    [Ext::plain(stab.cell), p.ui, p.uj]
}

/// `η·J⁰_ij` over the faces of E. Trial slots: 1 = U_i, 2 = U_j. Test slots: 0 = E, 3 = W_i, 4 = W_j.
fn assemble_j0_pair(disc: &Discretization, stab: &CellStabilizer, p: &PairExtensions, asm: &mut Assembler) {
    let exts = ext_list(stab, p);
    for (kf, face) in stab.faces.iter().enumerate() {
        let cij = stab.forms.c(p.i, p.j, kf);
        let cji = stab.forms.c(p.j, p.i, kf);
        if cij == 0.0 && cji == 0.0 {
            continue;
        }
        let half_a = scale_mat(&flux_matrix(&face.normal, disc.c), 0.5);
        let mut terms = Vec::with_capacity(6);
        for a in [1, 2] {
            terms.push((cij + cji, a, 0));
            if p.wj.is_some() {
                terms.push((-cij, a, 4));
            }
            if p.wi.is_some() {
                terms.push((-cji, a, 3));
            }
        }
        for (x, wq) in face.rule.points.iter().zip(&face.rule.weights) {
            let vals: Vec<(Eval, usize)> = exts.iter().map(|e| (disc.eval_value(e, x), e.cell)).collect();
            let mut tests = vals.clone();
            for w in [p.wi, p.wj] {
                match w {
                    Some(e) => tests.push((disc.eval_value(&e, x), e.cell)),
                    None => tests.push((Eval::zero(disc.nb), stab.cell)),
                }
            }
            add_terms(asm, wq * stab.eta, &half_a, &vals, &tests, &terms);
        }
    }
}

/// Coefficients `M[a][b]` of `Σ_k ⟨A_k U_a, ∂_k T_b⟩` in `J¹_ij / κ`, slots 0 = E, 1 = E_i, 2 = E_j.
fn j1_coefficients() -> [[f64; 3]; 3] {
    let omega = [-1.0, 0.5, 0.5];
    let mut m = [[0.0; 3]; 3];
    for (e, om) in omega.iter().enumerate() {
        // p_V(U_i, U_j, T_e)
        m[1][e] += 0.5 * om;
        m[2][e] += 0.5 * om;
        // − ∫ f(U_e)·∇T_e
        m[e][e] -= om;
        // p_V*(T_i, T_j, U_e)
        m[e][1] += 0.5 * om;
        m[e][2] += 0.5 * om;
    }
    m
}

fn assemble_j1_pair(disc: &Discretization, stab: &CellStabilizer, p: &PairExtensions, rule: &QuadratureRule, asm: &mut Assembler) {
    let exts = ext_list(stab, p);
    let m = j1_coefficients();
    let mut terms = Vec::with_capacity(9);
    for (a, row) in m.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if *v != 0.0 {
                terms.push((*v, a, b));
            }
        }
    }
    let axis = [axis_flux(0, disc.c), axis_flux(1, disc.c)];
    let scale = stab.eta * stab.forms.kappa;
    for (x, wq) in rule.points.iter().zip(&rule.weights) {
        let evs: Vec<(Eval, [Eval; 2], usize)> = exts
            .iter()
            .map(|e| {
                let (v, g) = disc.eval_value_grad(e, x);
                (v, g, e.cell)
            })
            .collect();
        let vals: Vec<(Eval, usize)> = evs.iter().map(|(v, _, c)| (v.clone(), *c)).collect();
        for (kd, ak) in axis.iter().enumerate() {
            let grads: Vec<(Eval, usize)> = evs.iter().map(|(_, g, c)| (g[kd].clone(), *c)).collect();
            add_terms(asm, wq * scale, ak, &vals, &grads, &terms);
        }
    }
}

/// `η·Jˢ_ij`, both symmetric halves with weight 1/6 over all faces of E.
fn assemble_js_pair(disc: &Discretization, stab: &CellStabilizer, p: &PairExtensions, diss: Dissipation, asm: &mut Assembler) {
    let exts = [p.ui, p.uj];
    // ⟨S(U_i − U_j), T_i − T_j⟩ + ⟨S(U_j − U_i), T_j − T_i⟩
    let mut terms = Vec::new();
    for (si, sj) in [(0usize, 1usize), (1, 0)] {
        terms.push((1.0 / 6.0, si, si));
        terms.push((-1.0 / 6.0, sj, si));
        terms.push((-1.0 / 6.0, si, sj));
        terms.push((1.0 / 6.0, sj, sj));
    }
    for face in &stab.faces {
        let Some(s) = diss.matrix(&face.normal, disc.c) else { continue };
        for (x, wq) in face.rule.points.iter().zip(&face.rule.weights) {
            let vals: Vec<(Eval, usize)> = exts.iter().map(|e| (disc.eval_value(e, x), e.cell)).collect();
            add_terms(asm, wq * stab.eta, &s, &vals, &vals, &terms);
        }
    }
}

/// Assembles `J⁰ + J¹ + Jˢ` (restricted to `parts`) of one small cell.
pub fn assemble_stabilizer(
    disc: &Discretization,
    stab: &CellStabilizer,
    diss: Dissipation,
    parts: StabParts,
    asm: &mut Assembler,
) -> Result<()> {
    check_stabilizer(disc, stab)?;
    if stab.eta == 0.0 {
        return Ok(());
    }
    let rule = &disc.cell_quad[stab.cell];
    let cell = &disc.mesh.cells[stab.cell];
    for p in &stab.pairs {
        if parts.central {
            assemble_j0_pair(disc, stab, p, asm);
            assemble_j1_pair(disc, stab, p, rule, asm);
        }
        if parts.dissipation && diss != Dissipation::Zero {
            assemble_js_pair(disc, stab, p, diss, asm);
        }
    }
    let base = BaseParts { volume: false, central: parts.central, dissipation: parts.dissipation };
    for cf in &cell.faces {
        assemble_face(disc, cf.face, diss, base, -stab.eta, asm);
    }
    Ok(())
}

/// Operator `L_J` with `J⁰ + J¹ + Jˢ = wᵀ L_J u`.
pub fn dod_operator(disc: &Discretization, stabs: &[CellStabilizer], diss: Dissipation, parts: StabParts) -> Result<BlockOperator> {
    let mut asm = Assembler::new(disc.nb);
    for s in stabs {
        assemble_stabilizer(disc, s, diss, parts, &mut asm)?;
    }
    Ok(asm.finish(disc.ncells()))
}

/// Stabilization residual `R_J` with `⟨R_J, w⟩ = J⁰ + J¹ + Jˢ`.
pub fn apply_dod(disc: &Discretization, field: &DgField, stabs: &[CellStabilizer], diss: Dissipation) -> Result<DgField> {
    disc.check_field(field)?;
    let op = dod_operator(disc, stabs, diss, StabParts::ALL)?;
    let mut out = DgField { t: field.t, ..disc.zero_field() };
    op.apply(&field.coeffs, &mut out.coeffs);
    Ok(out)
}

/// Full semi-discrete operator `L = L_base + L_J`; the scheme is `du/dt = −L u`.
#[derive(Clone, Debug)]
pub struct StabilizedOperator {
    pub op: BlockOperator,
    pub dissipation: Dissipation,
    pub stabilizers: Vec<CellStabilizer>,
}

impl StabilizedOperator {
    pub fn new(disc: &Discretization, diss: Dissipation, stabilizers: Vec<CellStabilizer>) -> Result<Self> {
        let mut asm = Assembler::new(disc.nb);
        assemble_base(disc, diss, BaseParts::ALL, &mut asm);
        for s in &stabilizers {
            assemble_stabilizer(disc, s, diss, StabParts::ALL, &mut asm)?;
        }
        Ok(Self { op: asm.finish(disc.ncells()), dissipation: diss, stabilizers })
    }

    /// `out = −L u`.
    pub fn rhs(&self, u: &[f64], out: &mut [f64]) {
        self.op.apply(u, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }

    pub fn apply(&self, field: &DgField) -> DgField {
        let mut out = DgField { t: field.t, ..DgField::zeros(field.ncells, field.nb) };
        self.op.apply(&field.coeffs, &mut out.coeffs);
        out
    }
}
