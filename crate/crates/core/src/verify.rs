//! Randomized checks of the algebraic identities behind the stabilized scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dg::{
    assemble_base, dot3, flux_matrix, mat_vec, mirror_state, Assembler, BaseParts, DgField, Discretization, Dissipation, Ext,
    State,
};
use crate::dod::{
    build_stabilizer, central_forms, dod_operator, reflecting_forms, stabilizer_form_value, volume_form, volume_form_adj,
    Combo, EtaMode, FaceGeom, Field3, PolyField, PropagationFormSet, StabParts,
};
use crate::error::Result;
use crate::geometry::{build_background_mesh, build_cut_mesh, GeometrySpec, HalfPlane, MeshOptions};
use crate::Point;

/// Identity names in report order.
pub const IDENTITIES: [&str; 11] = [
    "mirror_skew_symmetry",
    "integration_by_parts",
    "balance",
    "consistency",
    "symmetry_linearity",
    "energy_preservation_1",
    "energy_preservation_2",
    "reflection",
    "j0_j1_annihilation",
    "dissipativity",
    "assembly_agreement",
];

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    /// Perturbation added to one central-form coefficient (negative control).
    pub corrupt: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 20240611, trials: 100, tolerance: 1e-11, corrupt: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResult {
    pub name: &'static str,
    pub trials: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub results: Vec<IdentityResult>,
}

impl VerifyReport {
    pub fn passes(&self) -> bool {
        self.results.iter().all(|r| r.max_residual <= self.tolerance)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("identity,trials,max_residual,pass\n");
        for r in &self.results {
            s.push_str(&format!("{},{},{:e},{}\n", r.name, r.trials, r.max_residual, r.max_residual <= self.tolerance));
        }
        s
    }
}

/// `|a − b| / scale`, with 0/0 read as 0.
pub fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if scale > 0.0 {
        diff.abs() / scale
    } else {
        f64::INFINITY
    }
}

/// Uniform random coefficients in `[-1, 1]`.
pub fn random_field<R: Rng>(disc: &Discretization, rng: &mut R) -> DgField {
    let mut f = disc.zero_field();
    f.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
    f
}

/// A 3×3 unit-square mesh whose center cell is cut by a random line.
pub struct TrialMesh {
    pub disc: Discretization,
    pub cell: usize,
    pub wall: usize,
}

/// Builds one randomized trial mesh of degree `r`.
pub fn random_trial_mesh<R: Rng>(rng: &mut R, r: usize) -> Result<TrialMesh> {
    let bg = build_background_mesh(3, 3, Point::new(0.0, 0.0), Point::new(1.0, 1.0), [false; 2])?;
    loop {
        let third = 1.0 / 3.0;
        let p = Point::new(third + third * rng.gen_range(0.1..0.9), third + third * rng.gen_range(0.1..0.9));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let plane = HalfPlane::new(p, Point::new(th.cos(), th.sin()));
        let mesh = build_cut_mesh(&bg, &GeometrySpec::HalfPlaneList(vec![plane]), MeshOptions::default())?;
        let Some(cell) = mesh.cell_of_bg[4] else { continue };
        let c = &mesh.cells[cell];
        let Some(wall) = c.faces.iter().position(|f| f.is_boundary()) else { continue };
        if c.boundary_face_count() != 1 || c.faces.iter().any(|f| f.length < 1e-3 * third) {
            continue;
        }
        let disc = Discretization::new(mesh, r, 1.0)?;
        return Ok(TrialMesh { disc, cell, wall });
    }
}

struct Tracker {
    results: Vec<IdentityResult>,
}

impl Tracker {
    fn record(&mut self, name: &'static str, residual: f64) {
        let r = self.results.iter_mut().find(|r| r.name == name).expect("known identity");
        r.trials += 1;
        if residual.is_nan() || residual > r.max_residual {
            r.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
        }
    }
}

fn form_residuals(
    t: &mut Tracker,
    forms: &PropagationFormSet,
    faces: &[FaceGeom],
    disc: &Discretization,
    cell: usize,
    f: [&dyn Field3; 4],
    lin: (f64, f64),
) {
    let c = disc.c;
    let rule = &disc.cell_quad[cell];
    let k = forms.k;
    let [u, v, w, z] = f;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            // balance
            let (a, ma) = forms.p_scaled(i, j, faces, c, u, v, w);
            let (b, mb) = forms.p_scaled(j, i, faces, c, u, v, w);
            let pv = forms.pv(rule, c, u, v, w);
            let pva = forms.pv_adj(rule, c, u, v, w);
            t.record("balance", relative(a + b - pv - pva, ma + mb + pv.abs() + pva.abs()));
            // symmetry in the first two arguments, linearity in the third
            let (s, ms) = forms.p_scaled(i, j, faces, c, v, u, w);
            t.record("symmetry_linearity", relative(a - s, ma + ms));
            let comb = Combo(vec![(lin.0, w), (lin.1, z)]);
            let (l, ml) = forms.p_scaled(i, j, faces, c, u, v, &comb);
            let (lz, mlz) = forms.p_scaled(i, j, faces, c, u, v, z);
            t.record("symmetry_linearity", relative(l - lin.0 * a - lin.1 * lz, ml + lin.0.abs() * ma + lin.1.abs() * mlz));
            // energy preservation 1
            let (ww, mww) = forms.p_scaled(i, j, faces, c, w, w, w);
            let (ww2, mww2) = forms.p_scaled(j, i, faces, c, w, w, w);
            let vol = forms.kappa * volume_form(rule, c, w, w, w);
            t.record("energy_preservation_1", relative(vol - 0.5 * ww - 0.5 * ww2, vol.abs() + 0.5 * (mww + mww2)));
            // energy preservation 2
            let umv = Combo(vec![(1.0, u), (-1.0, v)]);
            let (lhs, ml) = forms.p_scaled(i, j, faces, c, u, v, &umv);
            let (uu, muu) = forms.p_scaled(i, j, faces, c, u, u, u);
            let (vv, mvv) = forms.p_scaled(i, j, faces, c, v, v, v);
            t.record("energy_preservation_2", relative(lhs - 0.5 * uu + 0.5 * vv, ml + 0.5 * (muu + mvv)));
        }
        // consistency: Σ_{i≠j} p_ij = b_j
        let j = i;
        let mut sum = 0.0;
        let mut mag = 0.0;
        for i2 in (0..k).filter(|i2| *i2 != j) {
            let (p, m) = forms.p_scaled(i2, j, faces, c, u, v, w);
            sum += p;
            mag += m;
        }
        let bj = crate::dod::surface_form(&faces[j], c, u, v, w);
        t.record("consistency", relative(sum - bj, mag + bj.abs()));
    }
}

/// Runs every identity on `opts.trials` random cut cells with degrees cycling through 0..=3.
pub fn run_identity_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut t = Tracker {
        results: IDENTITIES.iter().map(|n| IdentityResult { name: n, trials: 0, max_residual: 0.0 }).collect(),
    };
    for trial in 0..opts.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(trial as u64));
        let r = trial % 4;

        // pointwise skew symmetry of the mirror
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let n = Point::new(th.cos(), th.sin());
        let su = State::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let sw = State::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = flux_matrix(&n, 1.0);
        let x1 = dot3(&mat_vec(&a, &mirror_state(su, &n).to_array()), &sw.to_array());
        let x2 = dot3(&mat_vec(&a, &su.to_array()), &mirror_state(sw, &n).to_array());
        t.record("mirror_skew_symmetry", relative(x1 + x2, x1.abs() + x2.abs()));

        let tm = random_trial_mesh(&mut rng, r)?;
        let disc = &tm.disc;
        let e = tm.cell;
        let faces = crate::dod::cell_face_geoms(disc, e);
        let k = faces.len();
        let ncell = disc.ncells();
        let fields: Vec<DgField> = (0..4).map(|_| random_field(disc, &mut rng)).collect();
        let src: Vec<usize> = (0..4).map(|_| rng.gen_range(0..ncell)).collect();
        let pf: Vec<PolyField> = (0..4).map(|q| PolyField::from_field(disc, Ext::plain(src[q]), &fields[q])).collect();
        let f: [&dyn Field3; 4] = [&pf[0], &pf[1], &pf[2], &pf[3]];

        // integration by parts on E
        let rule = &disc.cell_quad[e];
        let mut sb = 0.0;
        let mut mb = 0.0;
        for g in &faces {
            let b = crate::dod::surface_form(g, disc.c, f[0], f[1], f[2]);
            sb += b;
            mb += b.abs();
        }
        let v1 = volume_form(rule, disc.c, f[0], f[1], f[2]);
        let v2 = volume_form_adj(rule, disc.c, f[0], f[1], f[2]);
        t.record("integration_by_parts", relative(sb - v1 - v2, mb + v1.abs() + v2.abs()));

        let lin = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut central = central_forms(e, k);
        let mut refl = reflecting_forms(e, k, tm.wall);
        if let Some(d) = opts.corrupt {
            central.coeff[k] += d;
            refl.coeff[k] += d;
        }
        form_residuals(&mut t, &central, &faces, disc, e, f, lin);
        form_residuals(&mut t, &refl, &faces, disc, e, f, lin);

        // reflection identity p_{j i*}(u, ℒ(v), w) = −p_{j i*}(ℒ(u), v, ℒ(w))
        let wall = &disc.mesh.cells[e].faces[tm.wall];
        let mirrored = |q: usize| pf[q].with_ext(Ext::plain(src[q]).mirrored(wall.a, wall.normal));
        let (mu, mv, mw) = (mirrored(0), mirrored(1), mirrored(2));
        for j in (0..k).filter(|j| *j != tm.wall) {
            let (l, ml) = refl.p_scaled(j, tm.wall, &faces, disc.c, f[0], &mv, f[2]);
            let (rr, mr) = refl.p_scaled(j, tm.wall, &faces, disc.c, &mu, f[1], &mw);
            t.record("reflection", relative(l + rr, ml + mr));
        }

        // stabilizer quadratic forms
        let eta: f64 = rng.gen_range(0.05..1.0);
        let stab = build_stabilizer(disc, e, EtaMode::Fixed(eta))?;
        let stabs = std::slice::from_ref(&stab);
        let u = &fields[0];
        let l_central = dod_operator(disc, stabs, Dissipation::Zero, StabParts::CENTRAL)?;
        t.record("j0_j1_annihilation", relative(l_central.quadratic(&u.coeffs), l_central.abs_quadratic(&u.coeffs)));

        let mut asm = Assembler::new(disc.nb);
        assemble_base(disc, Dissipation::LaxFriedrichs, BaseParts::DISSIPATION, &mut asm);
        let mut sasm = Assembler::new(disc.nb);
        crate::dod::assemble_stabilizer(disc, &stab, Dissipation::LaxFriedrichs, StabParts::DISSIPATION, &mut sasm)?;
        asm.merge(&sasm, 1.0);
        let ls = asm.finish(ncell);
        let q = ls.quadratic(&u.coeffs);
        t.record("dissipativity", relative(q.min(0.0), ls.abs_quadratic(&u.coeffs)));

        let w = &fields[1];
        let l_all = dod_operator(disc, stabs, Dissipation::LaxFriedrichs, StabParts::ALL)?;
        let assembled = l_all.bilinear(&u.coeffs, &w.coeffs);
        let reference = stabilizer_form_value(disc, &stab, Dissipation::LaxFriedrichs, StabParts::ALL, u, w);
        t.record("assembly_agreement", relative(assembled - reference.value, reference.magnitude));
    }
    Ok(VerifyReport { tolerance: opts.tolerance, results: t.results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_handles_zero() {
        assert_eq!(relative(0.0, 0.0), 0.0);
        assert_eq!(relative(1.0, 0.0), f64::INFINITY);
        assert_eq!(relative(-1.0, 4.0), 0.25);
    }

    #[test]
    fn trial_meshes_have_one_wall_and_three_to_five_faces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in 0..4 {
            let tm = random_trial_mesh(&mut rng, r).unwrap();
            let c = &tm.disc.mesh.cells[tm.cell];
            assert!((3..=5).contains(&c.faces.len()));
            assert_eq!(c.boundary_face_count(), 1);
            assert!(c.faces[tm.wall].is_boundary());
        }
    }
}
