//! Explicit SSP Runge-Kutta schemes in Shu–Osher form and the fixed-step driver.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::dg::DgField;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RkScheme {
    Ssprk22,
    Ssprk33,
    Ssprk104,
}

/// `u⁽ⁱ⁾ = Σ_k α[i][k]·u⁽ᵏ⁾ + dt·β[i][k]·F(u⁽ᵏ⁾)` for `i = 1..=s`, `k < i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShuOsher {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl ShuOsher {
    pub fn stages(&self) -> usize {
        self.alpha.len()
    }

    /// Largest `β/α` ratio: each stage is a convex combination of Euler steps of size `dt·ratio`.
    pub fn euler_ratio(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (a, b) in self.alpha.iter().zip(&self.beta) {
            for (x, y) in a.iter().zip(b) {
                if *y != 0.0 {
                    m = m.max(y / x);
                }
            }
        }
        m
    }
}

fn row(n: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut r = vec![0.0; n];
    for &(k, v) in entries {
        r[k] = v;
    }
    r
}

impl RkScheme {
    pub fn order(&self) -> usize {
        match self {
            RkScheme::Ssprk22 => 2,
            RkScheme::Ssprk33 => 3,
            RkScheme::Ssprk104 => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RkScheme::Ssprk22 => "ssprk22",
            RkScheme::Ssprk33 => "ssprk33",
            RkScheme::Ssprk104 => "ssprk104",
        }
    }

    /// Order-matched scheme for polynomial degree `r`.
    pub fn for_degree(r: usize) -> Self {
        match r {
            0 | 1 => RkScheme::Ssprk22,
            2 => RkScheme::Ssprk33,
            _ => RkScheme::Ssprk104,
        }
    }

    pub fn tableau(&self) -> ShuOsher {
        match self {
            RkScheme::Ssprk22 => ShuOsher {
                alpha: vec![row(1, &[(0, 1.0)]), row(2, &[(0, 0.5), (1, 0.5)])],
                beta: vec![row(1, &[(0, 1.0)]), row(2, &[(1, 0.5)])],
            },
            RkScheme::Ssprk33 => ShuOsher {
                alpha: vec![
                    row(1, &[(0, 1.0)]),
                    row(2, &[(0, 0.75), (1, 0.25)]),
                    row(3, &[(0, 1.0 / 3.0), (2, 2.0 / 3.0)]),
                ],
                beta: vec![row(1, &[(0, 1.0)]), row(2, &[(1, 0.25)]), row(3, &[(2, 2.0 / 3.0)])],
            },
            RkScheme::Ssprk104 => {
                let mut alpha = Vec::new();
                let mut beta = Vec::new();
                for i in 1..=10usize {
                    match i {
                        5 => {
                            alpha.push(row(i, &[(0, 0.6), (4, 0.4)]));
                            beta.push(row(i, &[(4, 1.0 / 15.0)]));
                        }
                        10 => {
                            alpha.push(row(i, &[(0, 1.0 / 25.0), (4, 9.0 / 25.0), (9, 0.6)]));
                            beta.push(row(i, &[(4, 3.0 / 50.0), (9, 0.1)]));
                        }
                        _ => {
                            alpha.push(row(i, &[(i - 1, 1.0)]));
                            beta.push(row(i, &[(i - 1, 1.0 / 6.0)]));
                        }
                    }
                }
                ShuOsher { alpha, beta }
            }
        }
    }
}

/// `dt = cfl·h / ((2r+1)·c)`.
pub fn compute_dt(h: f64, r: usize, c: f64, cfl: f64) -> Result<f64> {
    if !(h > 0.0 && c > 0.0 && cfl > 0.0) {
        return Err(Error::Config(format!("time step inputs must be positive (h={h}, c={c}, cfl={cfl})")));
    }
    Ok(cfl * h / ((2 * r + 1) as f64 * c))
}

/// Stage storage reused across steps.
#[derive(Debug, Default)]
pub struct Workspace {
    stages: Vec<Vec<f64>>,
    rhs: Vec<Vec<f64>>,
}

/// One step of `du/dt = F(u)`, where `rhs(u, out)` writes `F(u)`.
pub fn step<F>(tab: &ShuOsher, rhs: &F, u: &mut [f64], dt: f64, ws: &mut Workspace)
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    let n = u.len();
    let s = tab.stages();
    ws.stages.resize_with(s, Vec::new);
    ws.rhs.resize_with(s, Vec::new);
    for v in ws.stages.iter_mut().chain(ws.rhs.iter_mut()) {
        v.resize(n, 0.0);
    }
    // stage k lives in stages[k-1] for k ≥ 1; stage 0 is u itself
    let mut need_rhs = vec![false; s];
    for b in &tab.beta {
        for (k, v) in b.iter().enumerate() {
            if *v != 0.0 {
                need_rhs[k] = true;
            }
        }
    }
    for i in 1..=s {
        let k_prev = i - 1;
        if need_rhs[k_prev] {
            let (src, dst) = if k_prev == 0 {
                (&*u, &mut ws.rhs[0])
            } else {
                (&ws.stages[k_prev - 1][..], &mut ws.rhs[k_prev])
            };
            rhs(src, dst);
        }
        let (a, b) = (&tab.alpha[i - 1], &tab.beta[i - 1]);
        let mut out = std::mem::take(&mut ws.stages[i - 1]);
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..i {
            let src: &[f64] = if k == 0 { &*u } else { &ws.stages[k - 1] };
            if a[k] != 0.0 {
                out.iter_mut().zip(src).for_each(|(o, x)| *o += a[k] * x);
            }
            if b[k] != 0.0 {
                let w = dt * b[k];
                out.iter_mut().zip(&ws.rhs[k]).for_each(|(o, f)| *o += w * f);
            }
        }
        ws.stages[i - 1] = out;
    }
    u.copy_from_slice(&ws.stages[s - 1]);
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeControls {
    pub dt: f64,
    pub t_end: f64,
    /// Intermediate stop times; steps are shortened to land on them exactly.
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    pub truncated_steps: usize,
}

/// Integrates `field` from `field.t` to `controls.t_end`, calling `observe` at the start and at every stop.
/// `observe` may end the run early by returning `ControlFlow::Break`.
///
/// Aborts with `NonFinite` at the first step that produces a NaN or infinity.
pub fn integrate<F, O>(scheme: RkScheme, rhs: &F, field: &mut DgField, controls: &TimeControls, mut observe: O) -> Result<IntegrationStats>
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
    O: FnMut(&DgField) -> Result<ControlFlow<()>>,
{
    if !(controls.dt > 0.0) || !controls.t_end.is_finite() {
        return Err(Error::Config(format!("invalid time controls dt={} t_end={}", controls.dt, controls.t_end)));
    }
    let tab = scheme.tableau();
    let mut ws = Workspace::default();
    let mut stats = IntegrationStats::default();
    let mut stops: Vec<f64> = controls.snapshots.iter().copied().filter(|s| *s > field.t && *s < controls.t_end).collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(controls.t_end);
    if observe(field)?.is_break() {
        return Ok(stats);
    }
    let dt = controls.dt;
    for stop in stops {
        while field.t < stop {
            let rest = stop - field.t;
            let last = rest <= dt * (1.0 + 1e-12);
            let h = if last { rest } else { dt };
            step(&tab, rhs, &mut field.coeffs, h, &mut ws);
            field.t = if last { stop } else { field.t + h };
            stats.steps += 1;
            if last && h < dt * (1.0 - 1e-12) {
                stats.truncated_steps += 1;
            }
            if let Some(i) = field.first_non_finite() {
                return Err(Error::NonFinite { cell: i, t: field.t });
            }
        }
        if observe(field)?.is_break() {
            break;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [RkScheme; 3] = [RkScheme::Ssprk22, RkScheme::Ssprk33, RkScheme::Ssprk104];

    fn scalar_step(s: RkScheme, lambda: f64, y0: f64, dt: f64) -> f64 {
        let mut u = [y0];
        let rhs = move |x: &[f64], o: &mut [f64]| o[0] = lambda * x[0];
        step(&s.tableau(), &rhs, &mut u, dt, &mut Workspace::default());
        u[0]
    }

    #[test]
    fn weights_are_convex() {
        for s in ALL {
            let t = s.tableau();
            for (a, b) in t.alpha.iter().zip(&t.beta) {
                assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                assert!(a.iter().chain(b).all(|v| *v >= 0.0));
                for (x, y) in a.iter().zip(b) {
                    assert!(*y == 0.0 || *x > 0.0);
                }
            }
        }
        assert!((RkScheme::Ssprk104.tableau().euler_ratio() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ssprk33_matches_cubic_taylor() {
        let y = scalar_step(RkScheme::Ssprk33, -1.0, 1.0, 0.1);
        let taylor = 1.0 - 0.1 + 0.005 - 0.001 / 6.0;
        assert!((y - taylor).abs() < 1e-15);
        assert!((y - (-0.1f64).exp()).abs() <= 5e-6);
    }

    #[test]
    fn ssprk104_matches_quartic_taylor() {
        let dt: f64 = 0.1;
        let y = scalar_step(RkScheme::Ssprk104, -1.0, 1.0, dt);
        let taylor = 1.0 - dt + dt.powi(2) / 2.0 - dt.powi(3) / 6.0 + dt.powi(4) / 24.0;
        // the stability polynomial agrees with exp through fourth order
        assert!((y - taylor).abs() < dt.powi(5));
    }

    #[test]
    fn observed_orders_on_linear_decay() {
        for s in ALL {
            let err = |n: usize| {
                let dt = 1.0 / n as f64;
                let mut y = 1.0;
                for _ in 0..n {
                    y = scalar_step(s, -1.0, y, dt);
                }
                (y - (-1.0f64).exp()).abs()
            };
            let rate = (err(20) / err(40)).log2();
            assert!(rate >= s.order() as f64 - 0.1, "{s:?}: {rate}");
        }
    }

    #[test]
    fn dt_formula() {
        assert!((compute_dt(0.1, 0, 1.0, 1.0).unwrap() - 0.1).abs() < 1e-16);
        assert!((compute_dt(0.1, 2, 1.0, 0.25).unwrap() - 0.005).abs() < 1e-16);
        assert!(compute_dt(0.0, 1, 1.0, 0.25).is_err());
    }

    #[test]
    fn integrate_lands_on_stops() {
        let mut f = DgField::zeros(1, 1);
        f.coeffs[0] = 1.0;
        let rhs = |x: &[f64], o: &mut [f64]| o.iter_mut().zip(x).for_each(|(a, b)| *a = -b);
        let mut times = Vec::new();
        let c = TimeControls { dt: 0.3, t_end: 1.0, snapshots: vec![0.5] };
        let stats = integrate(RkScheme::Ssprk33, &rhs, &mut f, &c, |g| {
            times.push(g.t);
            Ok(ControlFlow::Continue(()))
        })
        .unwrap();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        assert_eq!(stats.steps, 4);
        assert!((f.coeffs[0] - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn nan_aborts_with_cell() {
        let mut f = DgField::zeros(2, 1);
        let rhs = |_: &[f64], o: &mut [f64]| {
            o.iter_mut().for_each(|v| *v = 0.0);
            o[4] = f64::NAN;
        };
        let c = TimeControls { dt: 0.1, t_end: 1.0, snapshots: vec![] };
        match integrate(RkScheme::Ssprk22, &rhs, &mut f, &c, |_| Ok(ControlFlow::Continue(()))) {
            Err(Error::NonFinite { cell, t }) => {
                assert_eq!(cell, 1);
                assert!((t - 0.1).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn observer_can_stop_early() {
        let mut f = DgField::zeros(1, 1);
        let rhs = |_: &[f64], o: &mut [f64]| o.iter_mut().for_each(|v| *v = 0.0);
        let c = TimeControls { dt: 0.1, t_end: 1.0, snapshots: vec![0.2, 0.4, 0.6] };
        let stats = integrate(RkScheme::Ssprk22, &rhs, &mut f, &c, |g| {
            Ok(if g.t >= 0.4 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
        })
        .unwrap();
        assert!((f.t - 0.4).abs() < 1e-15);
        assert_eq!(stats.steps, 4);
    }

    proptest! {
        #[test]
        fn step_is_linear(a in prop::collection::vec(-1.0f64..1.0, 4), b in prop::collection::vec(-1.0f64..1.0, 4), si in 0usize..3) {
            let m = [[0.0, 1.0, 0.2, 0.0], [-1.0, 0.0, 0.0, 0.3], [0.1, 0.0, -0.5, 1.0], [0.0, -0.3, -1.0, 0.0]];
            let rhs = move |x: &[f64], o: &mut [f64]| {
                for i in 0..4 {
                    o[i] = (0..4).map(|j| m[i][j] * x[j]).sum();
                }
            };
            let tab = ALL[si].tableau();
            let mut ws = Workspace::default();
            let run = |v: &[f64], ws: &mut Workspace| {
                let mut v = v.to_vec();
                step(&tab, &rhs, &mut v, 0.05, ws);
                v
            };
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (sa, sb, ss) = (run(&a, &mut ws), run(&b, &mut ws), run(&sum, &mut ws));
            for i in 0..4 {
                prop_assert!((ss[i] - sa[i] - sb[i]).abs() <= 1e-13 * (1.0 + ss[i].abs()));
            }
        }

        #[test]
        fn zero_rhs_leaves_state(a in prop::collection::vec(-1.0f64..1.0, 3), si in 0usize..3) {
            let rhs = |_: &[f64], o: &mut [f64]| o.iter_mut().for_each(|v| *v = 0.0);
            let mut v = a.clone();
            step(&ALL[si].tableau(), &rhs, &mut v, 0.3, &mut Workspace::default());
            for (x, y) in v.iter().zip(&a) {
                prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * y.abs());
            }
        }
    }
}
