//! Shared fixtures for the operator benchmarks.

use cutdg::dg::Dissipation;
use cutdg::harness::{rotated_square_mesh, setup, Problem, ProblemOptions};

/// Stabilized rotated-square problem at resolution `n` and degree `r`.
pub fn rotated_problem(n: usize, r: usize) -> Problem {
    let mesh = rotated_square_mesh(n, 35f64.to_radians(), 0.0).expect("mesh");
    let opts = ProblemOptions {
        degree: r,
        c: 1.0,
        alpha: 0.1,
        cfl_factor: 0.25,
        dissipation: Dissipation::LaxFriedrichs,
        rho_aniso: 20.0,
        eta_override: None,
    };
    setup(mesh, &opts).expect("setup")
}
