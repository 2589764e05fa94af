//! Energy, error norms, manufactured solutions and convergence rates.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use crate::basis::MAX_NB;
use crate::dg::{DgField, Discretization, State};
use crate::geometry::GeometrySpec;
use crate::Point;

/// `E_h = ‖u_h‖_{L²}`, the Euclidean norm of the coefficients for orthonormal bases.
pub fn energy(field: &DgField) -> f64 {
    field.norm()
}

/// `sqrt(∫ p² + |v|²)` by cell quadrature.
pub fn energy_by_quadrature(disc: &Discretization, field: &DgField) -> f64 {
    let s: f64 = (0..disc.ncells())
        .map(|c| {
            let rule = &disc.cell_quad[c];
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| {
                    let u = disc.eval_cell(field, c, x);
                    w * (u.p * u.p + u.v.norm_squared())
                })
                .sum::<f64>()
        })
        .sum();
    s.sqrt()
}

/// Exact solutions used for initial data and error measurement (wave speed 1).
#[derive(Clone, Debug, PartialEq)]
pub enum ManufacturedSolution {
    /// Standing mode of the unit square, rotated by `angle` and moved to `origin`.
    StandingSquare { angle: f64, origin: Point },
    /// Traveling wave along the 45° channel of the unit torus, periodic over the channel length `√2`.
    ChannelPlaneWave { lower: f64 },
    /// `p = sin(2π(x₁ + x₂) − 2π√2 t)` on the uncut unit torus, `v = p·(1, 1)/√2`.
    TorusPlaneWave,
}

impl ManufacturedSolution {
    /// Matching solution for a rotated-square or channel geometry.
    pub fn for_geometry(g: &GeometrySpec) -> Option<Self> {
        match g {
            GeometrySpec::RotatedSquare { angle, origin } => Some(Self::StandingSquare { angle: *angle, origin: *origin }),
            GeometrySpec::Channel { lower, .. } => Some(Self::ChannelPlaneWave { lower: *lower }),
            GeometrySpec::HalfPlaneList(l) if l.is_empty() => Some(Self::TorusPlaneWave),
            GeometrySpec::HalfPlaneList(_) => None,
        }
    }

    pub fn standing_square(angle: f64) -> Self {
        Self::StandingSquare { angle, origin: Point::new(angle.sin(), 0.0) }
    }

    pub fn channel_length(&self) -> f64 {
        SQRT_2
    }

    pub fn eval(&self, x: &Point, t: f64) -> State {
        match self {
            Self::StandingSquare { angle, origin } => {
                let (s, c) = angle.sin_cos();
                let d = x - origin;
                let xh = Point::new(c * d.x + s * d.y, -s * d.x + c * d.y);
                let om = SQRT_2 * PI;
                let (st, ct) = (om * t).sin_cos();
                let (s1, c1) = (PI * xh.x).sin_cos();
                let (s2, c2) = (PI * xh.y).sin_cos();
                let p = om * (st - ct) * c1 * c2;
                let a = -PI * (ct + st);
                let v1 = a * s1 * c2;
                let v2 = a * c1 * s2;
                State::new(p, c * v1 - s * v2, s * v1 + c * v2)
            }
            Self::ChannelPlaneWave { lower } => {
                let l = SQRT_2;
                let k = (x.y - x.x - lower).floor();
                let s = (x.x + x.y - k) / SQRT_2;
                let p = (2.0 * PI * (s - t) / l).sin();
                let v = p * std::f64::consts::FRAC_1_SQRT_2;
                State::new(p, v, v)
            }
            Self::TorusPlaneWave => {
                let p = (2.0 * PI * (x.x + x.y) - 2.0 * PI * SQRT_2 * t).sin();
                let v = p * std::f64::consts::FRAC_1_SQRT_2;
                State::new(p, v, v)
            }
        }
    }
}

/// L²-orthogonal projection onto the discrete space at time `t`.
pub fn project(disc: &Discretization, exact: &ManufacturedSolution, t: f64) -> DgField {
    let nb = disc.nb;
    let mut f = disc.zero_field();
    f.t = t;
    f.coeffs.par_chunks_mut(3 * nb).enumerate().for_each(|(c, blk)| {
        let rule = &disc.cell_quad[c];
        let mut phi = [0.0; MAX_NB];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            disc.bases[c].eval(x, &mut phi);
            let u = exact.eval(x, t).to_array();
            for comp in 0..3 {
                for a in 0..nb {
                    blk[comp * nb + a] += w * u[comp] * phi[a];
                }
            }
        }
    });
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredNorm {
    pub rho: f64,
    pub p: f64,
    pub v: f64,
}

/// Error of one run: `p` scalar, `v` measured as the Euclidean vector error.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub degree: usize,
    pub t: f64,
    pub l2_p: f64,
    pub l2_v: f64,
    pub linf_p: f64,
    pub linf_v: f64,
    pub filtered: Vec<FilteredNorm>,
    /// Cell holding the largest pointwise error (either component).
    pub max_cell: usize,
    pub max_cell_alpha: f64,
}

impl ErrorReport {
    pub fn value(&self, component: &str, norm: &str) -> Option<f64> {
        match (component, norm) {
            ("p", "l2") => Some(self.l2_p),
            ("v", "l2") => Some(self.l2_v),
            ("p", "linf") => Some(self.linf_p),
            ("v", "linf") => Some(self.linf_v),
            _ => None,
        }
    }

    /// `(component, norm label, value)` rows in output order.
    pub fn rows(&self) -> Vec<(&'static str, String, f64)> {
        let mut r = vec![
            ("p", "l2".to_string(), self.l2_p),
            ("v", "l2".to_string(), self.l2_v),
            ("p", "linf".to_string(), self.linf_p),
            ("v", "linf".to_string(), self.linf_v),
        ];
        for f in &self.filtered {
            r.push(("p", format!("linf_rho_{:e}", f.rho), f.p));
            r.push(("v", format!("linf_rho_{:e}", f.rho), f.v));
        }
        r
    }
}

struct CellError {
    l2_p: f64,
    l2_v: f64,
    max_p: f64,
    max_v: f64,
}

/// L², L∞ and filtered L∞ errors; L∞ samples the cell quadrature points and the polygon vertices.
pub fn error_norms(disc: &Discretization, field: &DgField, exact: &ManufacturedSolution, rho_filter: &[f64]) -> ErrorReport {
    let t = field.t;
    let per_cell: Vec<CellError> = (0..disc.ncells())
        .into_par_iter()
        .map(|c| {
            let rule = &disc.cell_quad[c];
            let mut e = CellError { l2_p: 0.0, l2_v: 0.0, max_p: 0.0, max_v: 0.0 };
            let mut sample = |x: &Point, w: f64| {
                let uh = disc.eval_cell(field, c, x);
                let u = exact.eval(x, t);
                let dp = (uh.p - u.p).abs();
                let dv = (uh.v - u.v).norm();
                e.l2_p += w * dp * dp;
                e.l2_v += w * dv * dv;
                e.max_p = e.max_p.max(dp);
                e.max_v = e.max_v.max(dv);
            };
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                sample(x, *w);
            }
            for x in &disc.mesh.cells[c].polygon {
                sample(x, 0.0);
            }
            e
        })
        .collect();
    let mut rep = ErrorReport {
        n: disc.mesh.background.nx,
        degree: disc.degree,
        t,
        l2_p: per_cell.iter().map(|e| e.l2_p).sum::<f64>().sqrt(),
        l2_v: per_cell.iter().map(|e| e.l2_v).sum::<f64>().sqrt(),
        linf_p: 0.0,
        linf_v: 0.0,
        filtered: Vec::new(),
        max_cell: 0,
        max_cell_alpha: 1.0,
    };
    let mut worst = -1.0;
    for (c, e) in per_cell.iter().enumerate() {
        rep.linf_p = rep.linf_p.max(e.max_p);
        rep.linf_v = rep.linf_v.max(e.max_v);
        let m = e.max_p.max(e.max_v);
        if m > worst {
            worst = m;
            rep.max_cell = c;
        }
    }
    rep.max_cell_alpha = disc.mesh.cells.get(rep.max_cell).map_or(1.0, |c| c.alpha);
    for &rho in rho_filter {
        let mut f = FilteredNorm { rho, p: 0.0, v: 0.0 };
        for (c, e) in per_cell.iter().enumerate() {
            if disc.mesh.cells[c].alpha > rho {
                f.p = f.p.max(e.max_p);
                f.v = f.v.max(e.max_v);
            }
        }
        rep.filtered.push(f);
    }
    rep
}

/// Largest absolute value of any component at the L∞ sample points.
pub fn max_abs(disc: &Discretization, field: &DgField) -> f64 {
    (0..disc.ncells())
        .into_par_iter()
        .map(|c| {
            let cell = &disc.mesh.cells[c];
            disc.cell_quad[c]
                .points
                .iter()
                .chain(&cell.polygon)
                .map(|x| {
                    let u = disc.eval_cell(field, c, x);
                    u.p.abs().max(u.v.x.abs()).max(u.v.y.abs())
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub degree: usize,
    pub component: &'static str,
    pub norm: String,
    pub rate: f64,
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)` for consecutive reports of one degree.
pub fn convergence_rates(reports: &[ErrorReport]) -> Vec<RateRow> {
    let mut out = Vec::new();
    for w in reports.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.degree != b.degree || b.n <= a.n {
            continue;
        }
        let ratio = (b.n as f64 / a.n as f64).ln();
        for ((comp, norm, ea), (_, _, eb)) in a.rows().into_iter().zip(b.rows()) {
            out.push(RateRow { n_coarse: a.n, n_fine: b.n, degree: a.degree, component: comp, norm, rate: (ea / eb).ln() / ratio });
        }
    }
    out
}

/// Rate from two error values at resolutions `n` and `2n`.
pub fn rate(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_residual(m: &ManufacturedSolution, x: Point, t: f64) -> f64 {
        let h = 1e-4;
        let dt = (m.eval(&x, t + h).to_array(), m.eval(&x, t - h).to_array());
        let dx = (m.eval(&(x + Point::new(h, 0.0)), t), m.eval(&(x - Point::new(h, 0.0)), t));
        let dy = (m.eval(&(x + Point::new(0.0, h)), t), m.eval(&(x - Point::new(0.0, h)), t));
        let ut: Vec<f64> = (0..3).map(|i| (dt.0[i] - dt.1[i]) / (2.0 * h)).collect();
        let px = (dx.0.p - dx.1.p) / (2.0 * h);
        let py = (dy.0.p - dy.1.p) / (2.0 * h);
        let div = (dx.0.v.x - dx.1.v.x + dy.0.v.y - dy.1.v.y) / (2.0 * h);
        let r = [ut[0] + div, ut[1] + px, ut[2] + py];
        r.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn standing_square_at_origin() {
        let m = ManufacturedSolution::standing_square(0.3);
        let u = m.eval(&Point::new(0.3f64.sin(), 0.0), 0.0);
        assert!((u.p + SQRT_2 * PI).abs() < 1e-14);
        assert!(u.v.norm() < 1e-14);
    }

    #[test]
    fn standing_square_walls_are_reflecting() {
        let g = 35f64.to_radians();
        let m = ManufacturedSolution::standing_square(g);
        let (s, c) = g.sin_cos();
        let o = Point::new(s, 0.0);
        let e1 = Point::new(c, s);
        let e2 = Point::new(-s, c);
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            for t in [0.0, 0.37, 1.0] {
                let on = [(o + e2 * a, e1), (o + e1 + e2 * a, e1), (o + e1 * a, e2), (o + e2 + e1 * a, e2)];
                for (x, n) in on {
                    assert!(m.eval(&x, t).v.dot(&n).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn channel_wave_is_periodic_and_wall_tangent() {
        let m = ManufacturedSolution::ChannelPlaneWave { lower: 0.1 };
        let n = Point::new(1.0, -1.0) / SQRT_2;
        for (x, y) in [(0.2, 0.35), (0.9, 0.05), (0.5, 0.65)] {
            let p = Point::new(x, y);
            let u0 = m.eval(&p, 0.0);
            let u1 = m.eval(&p, SQRT_2);
            assert!((u0.p - u1.p).abs() < 1e-12);
            assert!(u0.v.dot(&n).abs() < 1e-15);
            // periodic images on the torus
            for sh in [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 1.0)] {
                assert!((m.eval(&(p + sh), 0.3).p - m.eval(&p, 0.3).p).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn manufactured_solutions_solve_the_system(x in 0.05f64..0.95, y in 0.05f64..0.95, t in 0.0f64..2.0) {
            let sq = ManufacturedSolution::standing_square(35f64.to_radians());
            prop_assert!(fd_residual(&sq, Point::new(x, y), t) < 1e-6);
            prop_assert!(fd_residual(&ManufacturedSolution::TorusPlaneWave, Point::new(x, y), t) < 1e-6);
            let ch = ManufacturedSolution::ChannelPlaneWave { lower: 0.0 };
            // away from the copy seams of the torus band index
            let d = (y - x).rem_euclid(1.0);
            prop_assume!(d > 1e-3 && d < 1.0 - 1e-3);
            prop_assert!(fd_residual(&ch, Point::new(x, y), t) < 1e-6);
        }

        #[test]
        fn rates_of_power_laws(c in 0.1f64..10.0, q in 0.5f64..5.0, n in 4usize..64) {
            let e = |n: usize| c * (n as f64).powf(-q);
            prop_assert!((rate(e(n), e(2 * n)) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(1.0, 0.25), 2.0);
        assert_eq!(rate(1.0, 1.0), 0.0);
    }
}
