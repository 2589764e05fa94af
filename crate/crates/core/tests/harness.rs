use cutdg::dg::{Discretization, Dissipation};
use cutdg::diagnostics::project;
use cutdg::geometry::{build_background_mesh, build_cut_mesh, GeometrySpec, MeshOptions};
use cutdg::harness::*;
use cutdg::Point;

fn tmp_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("cutdg-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn vtk_round_trip_of_a_projected_field() {
    let p = setup(rotated_square_mesh(8, 35f64.to_radians(), 0.0).unwrap(), &ProblemOptions {
        degree: 2,
        c: 1.0,
        alpha: 0.1,
        cfl_factor: 0.25,
        dissipation: Dissipation::LaxFriedrichs,
        rho_aniso: 20.0,
        eta_override: None,
    })
    .unwrap();
    let u = project(&p.disc, &p.exact, 0.2);
    let back = parse_vtk(&vtk_string(&p.disc, &u).unwrap()).unwrap();
    assert_eq!(back.polygons.len(), p.disc.ncells());
    for (c, cell) in p.disc.mesh.cells.iter().enumerate() {
        assert_eq!(back.polygons[c].len(), cell.polygon.len());
        for (k, v) in back.polygons[c].iter().enumerate() {
            assert!((back.points[*v] - cell.polygon[k]).norm() <= 1e-15);
        }
        let m = p.disc.cell_mean(&u, c);
        assert!((back.pressure[c] - m[0]).abs() <= 1e-12);
        assert!((back.velocity[c][0] - m[1]).abs() <= 1e-12);
        assert!((back.velocity[c][1] - m[2]).abs() <= 1e-12);
    }
}

#[test]
fn vtk_of_a_single_cell_and_a_zero_field() {
    let bg = build_background_mesh(1, 1, Point::zeros(), Point::new(1.0, 1.0), [false; 2]).unwrap();
    let mesh = build_cut_mesh(&bg, &GeometrySpec::whole(), MeshOptions::default()).unwrap();
    let disc = Discretization::new(mesh, 1, 1.0).unwrap();
    let text = vtk_string(&disc, &disc.zero_field()).unwrap();
    let back = parse_vtk(&text).unwrap();
    assert_eq!(back.polygons, vec![vec![0, 1, 2, 3]]);
    assert_eq!(back.pressure, vec![0.0]);
    assert_eq!(back.velocity, vec![[0.0, 0.0]]);
    assert!(parse_vtk(&text.replace("POINTS", "PIONTS")).is_err());
}

#[test]
fn config_file_round_trip() {
    let dir = tmp_dir("config");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "scenario = \"custom\"\nn = [16]\ndegrees = [2]\neta_override = 0.5\n[verify]\ntrials = 3\n").unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.scenario, Scenario::Custom);
    assert_eq!(cfg.verify.trials, 3);
    let text = cfg.to_toml().unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap().to_toml().unwrap(), text);
    assert!(RunConfig::from_toml("alpha = -1.0").is_err());
    assert!(RunConfig::from_toml("degrees = [4]").is_err());
}

fn small_run(dir: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.scenario = Scenario::RotatedSquareConvergence;
    cfg.n = vec![8, 16];
    cfg.degrees = vec![1];
    cfg.t_end = 0.25;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let read = |d: &std::path::Path| {
        ["errors.csv", "rates.csv", "energy.csv", "smallcells.csv"].map(|f| std::fs::read(d.join(f)).unwrap())
    };
    let (a, b) = (tmp_dir("det1"), tmp_dir("det4"));
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    one.install(|| run_convergence(&small_run(&a))).unwrap();
    four.install(|| run_convergence(&small_run(&b))).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(a.join("fields_rotated_r1_n16.vtk").exists());
}

#[test]
fn convergence_tables_have_expected_shape() {
    let dir = tmp_dir("tables");
    let out = run_convergence(&small_run(&dir)).unwrap();
    assert_eq!(out.reports.len(), 2);
    let errors = std::fs::read_to_string(dir.join("errors.csv")).unwrap();
    assert!(errors.starts_with("n,degree,t,component,norm,value\n"));
    // 4 norms + 6 filters, two components each
    assert_eq!(errors.lines().count(), 1 + 2 * (4 + 2 * 6));
    let rates = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 16);
    let l2 = out.rates.iter().find(|r| r.component == "p" && r.norm == "l2").unwrap();
    assert!(l2.rate > 1.0, "{l2:?}");
}

#[test]
fn channel_lax_friedrichs_energy_decreases() {
    let dir = tmp_dir("channel");
    let mut cfg = RunConfig::default();
    cfg.output_dir = dir.clone();
    cfg.channel.n = 20;
    cfg.channel.degree = 1;
    cfg.channel.scheme = cutdg::time::RkScheme::Ssprk33;
    cfg.channel.dissipation = Dissipation::LaxFriedrichs;
    cfg.channel.periods = 0.5;
    cfg.channel.snapshots_per_period = 8;
    let o = run_channel(&cfg).unwrap();
    assert_eq!(o.series.len(), 5);
    assert!(o.series.windows(2).all(|w| w[1].energy < w[0].energy));
    let csv = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(std::fs::read_to_string(dir.join("smallcells.csv")).unwrap().lines().count() > 1);
}

#[test]
fn disabled_stabilization_is_caught_as_blowup() {
    let mut cfg = RunConfig::default();
    cfg.eta_override = Some(0.0);
    cfg.channel.min_alpha = 1e-12;
    cfg.channel.n = 20;
    cfg.channel.degree = 1;
    let p = channel_problem(&cfg).unwrap();
    let controls = RunControls {
        scheme: cutdg::time::RkScheme::Ssprk22,
        t_end: 0.5,
        snapshots: (1..50).map(|k| k as f64 * 0.01).collect(),
        rho_filter: vec![],
        blowup_factor: Some(1e3),
    };
    let o = run(&p, "eta0", &controls).unwrap();
    let b = o.blowup.expect("blow-up");
    assert!(b.growth > 1e3);
    assert!(o.report.is_none());
}

#[test]
fn mesh_dump_writes_csv() {
    let dir = tmp_dir("mesh");
    let mut cfg = RunConfig::default();
    cfg.scenario = Scenario::ChannelLongTime;
    cfg.channel.n = 10;
    cfg.output_dir = dir.clone();
    let mesh = mesh_dump(&cfg).unwrap();
    let csv = std::fs::read_to_string(dir.join("mesh.csv")).unwrap();
    assert_eq!(csv.lines().count(), mesh.cells.len() + 1);
    assert!(csv.starts_with("id,i,j,alpha,area,vertices"));
}
