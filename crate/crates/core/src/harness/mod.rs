//! Scenario setup, run orchestration and result files.

pub mod config;
pub mod output;

use std::ops::ControlFlow;
use std::path::Path;

use log::info;

pub use config::{ChannelConfig, RunConfig, Scenario, VerifyConfig};
pub use output::{
    energy_csv, errors_csv, parse_vtk, rates_csv, smallcells_csv, vtk_string, write_text, write_vtk, EnergySample, SmallCellRow,
    VtkData,
};

use crate::dg::{DgField, Discretization, Dissipation};
use crate::diagnostics::{convergence_rates, energy, error_norms, max_abs, project, ErrorReport, ManufacturedSolution, RateRow};
use crate::dod::{build_stabilizers, EtaMode, StabilizedOperator};
use crate::error::{Error, Result};
use crate::geometry::{
    build_background_mesh, build_cut_mesh, classify_small_cells, validate_assumptions, CutCellMesh, GeometrySpec, MeshOptions,
    SmallCellSet, ValidationReport,
};
use crate::time::{compute_dt, integrate, IntegrationStats, RkScheme, TimeControls};
use crate::verify::{run_identity_suite, VerifyOptions, VerifyReport};
use crate::Point;

fn square_extent(angle: f64) -> f64 {
    angle.cos() + angle.sin()
}

/// Rotated unit square on an `n × n` grid. With `shift = 0` the grid is the square's
/// bounding box; otherwise the square moves right by `shift ∈ (0, h)` and the grid grows by one cell.
pub fn rotated_square_mesh(n: usize, angle: f64, shift: f64) -> Result<CutCellMesh> {
    let l = square_extent(angle);
    let (hi, h) = if shift == 0.0 {
        (l, l / n as f64)
    } else {
        let h = l / (n as f64 - 1.0);
        (n as f64 * h, h)
    };
    if shift != 0.0 && !(n > 1 && shift > 0.0 && shift < h) {
        return Err(Error::Config(format!("origin shift {shift} must lie in (0, h = {h})")));
    }
    let bg = build_background_mesh(n, n, Point::zeros(), Point::new(hi, hi), [false; 2])?;
    let geom = GeometrySpec::RotatedSquare { angle, origin: Point::new(angle.sin() + shift, 0.0) };
    build_cut_mesh(&bg, &geom, MeshOptions::default())
}

/// Uncut periodic unit torus.
pub fn torus_mesh(n: usize) -> Result<CutCellMesh> {
    let bg = build_background_mesh(n, n, Point::zeros(), Point::new(1.0, 1.0), [true; 2])?;
    build_cut_mesh(&bg, &GeometrySpec::whole(), MeshOptions::default())
}

/// Wall offsets of the 45° channel on an `n × n` torus grid.
///
/// Each wall sits at distance `h·√(2α)/√2` from a row of grid vertices on the fluid side, so the
/// corner triangles it cuts off have volume fraction exactly `min_alpha`.
pub fn channel_offsets(n: usize, width: f64, min_alpha: f64) -> (f64, f64) {
    let h = 1.0 / n as f64;
    let m1 = ((0.5 - 0.5 * width) / h).round();
    let m2 = m1 + (width / h).round().max(1.0);
    let delta = h * (2.0 * min_alpha).sqrt();
    (m1 * h - delta, m2 * h + delta)
}

pub fn channel_mesh(n: usize, width: f64, min_alpha: f64) -> Result<CutCellMesh> {
    let (lower, upper) = channel_offsets(n, width, min_alpha);
    let bg = build_background_mesh(n, n, Point::zeros(), Point::new(1.0, 1.0), [true; 2])?;
    build_cut_mesh(&bg, &GeometrySpec::channel(lower, upper), MeshOptions::default())
}

/// Smallest origin shift of the rotated square whose mesh has a cell of volume fraction close to
/// `target` (within a factor 2) and satisfies the small-cell assumptions.
pub fn targeted_shift(n: usize, angle: f64, target: f64, alpha: f64, rho_aniso: f64) -> Result<(f64, CutCellMesh)> {
    if n < 2 || !(target > 0.0 && target < alpha) {
        return Err(Error::Config(format!("cannot target alpha {target} on an {n}-grid")));
    }
    let h = square_extent(angle) / (n as f64 - 1.0);
    let GeometrySpec::RotatedSquare { origin, .. } = GeometrySpec::rotated_square(angle) else { unreachable!() };
    let planes = GeometrySpec::RotatedSquare { angle, origin }.planes_for_cell(Point::zeros(), h)?;
    let mut candidates = Vec::new();
    for (e, (hp, _)) in planes.iter().enumerate() {
        let nx = hp.normal.x;
        if nx.abs() < 1e-3 {
            continue;
        }
        let d = h * (2.0 * target * (nx * hp.normal.y).abs()).sqrt();
        for i in 0..=n {
            for j in 0..=n {
                let g = Point::new(i as f64 * h, j as f64 * h);
                // signed distances move by −s·n_x under a shift s
                let s = (d + hp.signed_distance(&g)) / nx;
                if !(s > 0.0 && s < h * (1.0 - 1e-9)) {
                    continue;
                }
                let interior = planes.iter().enumerate().all(|(o, (q, _))| o == e || q.signed_distance(&g) - s * q.normal.x < -h);
                if interior {
                    candidates.push(s);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    for s in candidates.into_iter().take(200) {
        let Ok(mesh) = rotated_square_mesh(n, angle, s) else { continue };
        let m = mesh.min_alpha();
        if m < 0.5 * target || m > 2.0 * target {
            continue;
        }
        let small = classify_small_cells(&mesh, alpha);
        if validate_assumptions(&mesh, &small, rho_aniso).passes() {
            return Ok((s, mesh));
        }
    }
    Err(Error::AssumptionViolated(format!("no shift on the {n}-grid yields a valid mesh with alpha near {target:e}")))
}

/// Discretization parameters shared by all scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemOptions {
    pub degree: usize,
    pub c: f64,
    pub alpha: f64,
    pub cfl_factor: f64,
    pub dissipation: Dissipation,
    pub rho_aniso: f64,
    pub eta_override: Option<f64>,
}

impl ProblemOptions {
    pub fn from_config(cfg: &RunConfig, degree: usize) -> Self {
        Self {
            degree,
            c: cfg.c,
            alpha: cfg.alpha,
            cfl_factor: cfg.cfl_for(degree),
            dissipation: cfg.dissipation,
            rho_aniso: cfg.rho_aniso,
            eta_override: cfg.eta_override,
        }
    }
}

/// A validated mesh with its discretization, step size and assembled operator.
#[derive(Debug)]
pub struct Problem {
    pub disc: Discretization,
    pub small: SmallCellSet,
    pub validation: ValidationReport,
    pub dt: f64,
    pub operator: StabilizedOperator,
    pub exact: ManufacturedSolution,
}

impl Problem {
    pub fn smallcell_rows(&self, run: &str) -> Vec<SmallCellRow> {
        self.operator
            .stabilizers
            .iter()
            .map(|s| {
                let cell = &self.disc.mesh.cells[s.cell];
                let basis = &self.disc.bases[s.cell];
                SmallCellRow {
                    run: run.to_string(),
                    cell: s.cell,
                    alpha: cell.alpha,
                    k: s.k(),
                    family: s.forms.family.name(),
                    capacity: s.capacity,
                    eta: s.eta,
                    gram_deviation: basis.gram_deviation(&self.disc.cell_quad[s.cell]),
                    max_transform: basis.transform().iter().fold(0.0, |m, v| m.max(v.abs())),
                }
            })
            .collect()
    }
}

/// Classifies and validates the small cells, then builds bases and the stabilized operator.
pub fn setup(mesh: CutCellMesh, opts: &ProblemOptions) -> Result<Problem> {
    let exact = ManufacturedSolution::for_geometry(&mesh.geometry)
        .ok_or_else(|| Error::Config("no reference solution for this geometry".into()))?;
    let small = classify_small_cells(&mesh, opts.alpha);
    let validation = validate_assumptions(&mesh, &small, opts.rho_aniso);
    if !validation.passes() {
        return Err(Error::AssumptionViolated(validation.summary()));
    }
    let dt = compute_dt(mesh.h(), opts.degree, opts.c, opts.cfl_factor)?;
    let disc = Discretization::new(mesh, opts.degree, opts.c)?;
    let mode = match opts.eta_override {
        Some(v) => EtaMode::Fixed(v),
        None => EtaMode::Capacity { dt },
    };
    let stabs = build_stabilizers(&disc, &small, mode)?;
    let operator = StabilizedOperator::new(&disc, opts.dissipation, stabs)?;
    Ok(Problem { disc, small, validation, dt, operator, exact })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunControls {
    pub scheme: RkScheme,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub rho_filter: Vec<f64>,
    /// Stop once the energy exceeds this multiple of its initial value (NaN also counts).
    pub blowup_factor: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blowup {
    pub t: f64,
    pub growth: f64,
    /// Offending cell when the run produced a non-finite value.
    pub non_finite_cell: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub label: String,
    pub field: DgField,
    /// Errors at the final time (`None` after a blow-up).
    pub report: Option<ErrorReport>,
    pub series: Vec<EnergySample>,
    pub blowup: Option<Blowup>,
    pub stats: IntegrationStats,
}

impl RunOutcome {
    pub fn initial_energy(&self) -> f64 {
        self.series[0].energy
    }

    pub fn initial_max_abs(&self) -> f64 {
        self.series[0].max_abs
    }

    /// Largest `|E(t) − E(0)| / E(0)` over the samples.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.initial_energy();
        self.series.iter().map(|s| (s.energy - e0).abs() / e0).fold(0.0, f64::max)
    }

    pub fn max_solution(&self) -> f64 {
        self.series.iter().map(|s| s.max_abs).fold(0.0, f64::max)
    }
}

/// Projects the reference solution at `t = 0` and integrates it, sampling energy, `max |u_h|`
/// and the pointwise error at every stop.
pub fn run(problem: &Problem, label: &str, controls: &RunControls) -> Result<RunOutcome> {
    let disc = &problem.disc;
    let mut field = project(disc, &problem.exact, 0.0);
    let mut series: Vec<EnergySample> = Vec::new();
    let mut blowup = None;
    let rhs = |u: &[f64], out: &mut [f64]| problem.operator.rhs(u, out);
    let tc = TimeControls { dt: problem.dt, t_end: controls.t_end, snapshots: controls.snapshots.clone() };
    let result = integrate(controls.scheme, &rhs, &mut field, &tc, |f| {
        let e = energy(f);
        let err = error_norms(disc, f, &problem.exact, &[]);
        series.push(EnergySample {
            run: label.to_string(),
            t: f.t,
            energy: e,
            max_abs: max_abs(disc, f),
            linf_p: err.linf_p,
            linf_v: err.linf_v,
        });
        if let Some(k) = controls.blowup_factor {
            let growth = e / series[0].energy;
            if !(growth <= k) {
                blowup = Some(Blowup { t: f.t, growth, non_finite_cell: None });
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    });
    let stats = match result {
        Ok(s) => s,
        Err(Error::NonFinite { cell, t }) if controls.blowup_factor.is_some() => {
            blowup = Some(Blowup { t, growth: f64::INFINITY, non_finite_cell: Some(cell) });
            IntegrationStats::default()
        }
        Err(e) => return Err(e),
    };
    let report = blowup.is_none().then(|| {
        let mut r = error_norms(disc, &field, &problem.exact, &controls.rho_filter);
        r.n = disc.mesh.background.nx;
        r.degree = disc.degree;
        r
    });
    info!("{label}: {} steps, final energy {:e}", stats.steps, energy(&field));
    Ok(RunOutcome { label: label.to_string(), field, report, series, blowup, stats })
}

/// Result tables of a convergence sweep.
#[derive(Clone, Debug, Default)]
pub struct ConvergenceOutput {
    pub reports: Vec<ErrorReport>,
    pub rates: Vec<RateRow>,
    pub smallcells: Vec<SmallCellRow>,
    pub samples: Vec<EnergySample>,
}

fn convergence_mesh(cfg: &RunConfig, n: usize) -> Result<CutCellMesh> {
    match cfg.scenario {
        Scenario::PeriodicConvergence => torus_mesh(n),
        _ => rotated_square_mesh(n, cfg.angle(), cfg.origin_shift),
    }
}

fn scenario_tag(s: Scenario) -> &'static str {
    match s {
        Scenario::RotatedSquareConvergence => "rotated",
        Scenario::PeriodicConvergence => "periodic",
        Scenario::ChannelLongTime => "channel",
        Scenario::VerifyForms => "verify",
        Scenario::Custom => "custom",
    }
}

/// Runs every `(degree, n)` pair to `t_end` and writes `errors.csv`, `rates.csv`, `smallcells.csv`
/// and `energy.csv` (plus VTK files of the final fields).
///
/// The custom scenario also samples 20 intermediate times per run.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceOutput> {
    let mut out = ConvergenceOutput::default();
    let tag = scenario_tag(cfg.scenario);
    for &r in &cfg.degrees {
        let mut per_degree = Vec::new();
        let mut ns = cfg.n.clone();
        ns.sort_unstable();
        for n in ns {
            let label = format!("{tag}_r{r}_n{n}");
            let problem = setup(convergence_mesh(cfg, n)?, &ProblemOptions::from_config(cfg, r))?;
            let snapshots = match cfg.scenario {
                Scenario::Custom => (1..20).map(|k| cfg.t_end * k as f64 / 20.0).collect(),
                _ => Vec::new(),
            };
            let controls = RunControls {
                scheme: cfg.scheme_for(r),
                t_end: cfg.t_end,
                snapshots,
                rho_filter: cfg.rho_filter.clone(),
                blowup_factor: None,
            };
            let o = run(&problem, &label, &controls)?;
            if cfg.vtk {
                write_vtk(&problem.disc, &o.field, &cfg.output_dir.join(format!("fields_{label}.vtk")))?;
            }
            out.smallcells.extend(problem.smallcell_rows(&label));
            out.samples.extend(o.series);
            per_degree.push(o.report.expect("run finished"));
        }
        out.rates.extend(convergence_rates(&per_degree));
        out.reports.extend(per_degree);
    }
    let dir = &cfg.output_dir;
    write_text(dir, "errors.csv", &errors_csv(&out.reports))?;
    write_text(dir, "rates.csv", &rates_csv(&out.rates))?;
    write_text(dir, "smallcells.csv", &smallcells_csv(&out.smallcells))?;
    write_text(dir, "energy.csv", &energy_csv(&out.samples))?;
    Ok(out)
}

/// Problem of the long-time channel scenario.
pub fn channel_problem(cfg: &RunConfig) -> Result<Problem> {
    let ch = &cfg.channel;
    let mesh = channel_mesh(ch.n, ch.width, ch.min_alpha)?;
    let opts = ProblemOptions { degree: ch.degree, dissipation: ch.dissipation, ..ProblemOptions::from_config(cfg, ch.degree) };
    setup(mesh, &opts)
}

pub fn channel_label(ch: &ChannelConfig) -> String {
    let d = match ch.dissipation {
        Dissipation::Zero => "zero",
        Dissipation::LaxFriedrichs => "lf",
    };
    format!("channel_alpha{:e}_{d}", ch.min_alpha)
}

/// Integrates the channel wave over `periods` channel lengths and writes `energy.csv`,
/// `errors.csv` and `smallcells.csv`.
pub fn run_channel(cfg: &RunConfig) -> Result<RunOutcome> {
    let ch = &cfg.channel;
    let problem = channel_problem(cfg)?;
    let l = problem.exact.channel_length() / cfg.c;
    let per = ch.snapshots_per_period.max(1);
    let total = (ch.periods * per as f64).round() as usize;
    let t_end = ch.periods * l;
    let snapshots = (1..total).map(|k| k as f64 * l / per as f64).filter(|t| *t < t_end).collect();
    let controls = RunControls { scheme: ch.scheme, t_end, snapshots, rho_filter: cfg.rho_filter.clone(), blowup_factor: None };
    let label = channel_label(ch);
    let o = run(&problem, &label, &controls)?;
    let dir = &cfg.output_dir;
    write_text(dir, "energy.csv", &energy_csv(&o.series))?;
    write_text(dir, "errors.csv", &errors_csv(o.report.as_slice()))?;
    write_text(dir, "smallcells.csv", &smallcells_csv(&problem.smallcell_rows(&label)))?;
    if cfg.vtk {
        write_vtk(&problem.disc, &o.field, &dir.join(format!("fields_{label}.vtk")))?;
    }
    Ok(o)
}

/// Runs the randomized identity suite and writes `verify.csv`; failing identities are reported, not raised.
pub fn run_verify_forms(cfg: &RunConfig) -> Result<VerifyReport> {
    let opts = VerifyOptions { seed: cfg.seed, trials: cfg.verify.trials, tolerance: cfg.verify.tolerance, corrupt: cfg.verify.corrupt };
    let rep = run_identity_suite(&opts)?;
    write_text(&cfg.output_dir, "verify.csv", &rep.to_csv())?;
    Ok(rep)
}

/// Mesh of the configured scenario (first entry of `n` for the square scenarios).
pub fn scenario_mesh(cfg: &RunConfig) -> Result<CutCellMesh> {
    match cfg.scenario {
        Scenario::ChannelLongTime => channel_mesh(cfg.channel.n, cfg.channel.width, cfg.channel.min_alpha),
        _ => convergence_mesh(cfg, cfg.n[0]),
    }
}

/// Writes `mesh.csv`; returns the mesh for inspection.
pub fn mesh_dump(cfg: &RunConfig) -> Result<CutCellMesh> {
    let mesh = scenario_mesh(cfg)?;
    write_text(&cfg.output_dir, "mesh.csv", &mesh.dump_csv())?;
    Ok(mesh)
}

/// Dispatches on `cfg.scenario`.
pub fn run_scenario(cfg: &RunConfig) -> Result<()> {
    match cfg.scenario {
        Scenario::RotatedSquareConvergence | Scenario::PeriodicConvergence | Scenario::Custom => run_convergence(cfg).map(|_| ()),
        Scenario::ChannelLongTime => run_channel(cfg).map(|_| ()),
        Scenario::VerifyForms => {
            let rep = run_verify_forms(cfg)?;
            if rep.passes() {
                Ok(())
            } else {
                let failed: Vec<&str> = rep.results.iter().filter(|r| r.max_residual > rep.tolerance).map(|r| r.name).collect();
                Err(Error::VerificationFailed(failed.join(", ")))
            }
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
