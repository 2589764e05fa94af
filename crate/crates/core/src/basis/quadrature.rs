//! Gauss rules on segments, triangles and convex polygons.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use log::warn;

use crate::geometry::{CutCell, Point};

/// Points in physical coordinates with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Number of Gauss points exact for polynomials of `degree`.
pub fn gauss_points_for(degree: usize) -> usize {
    degree / 2 + 1
}

/// Gauss–Legendre rule with `⌈(degree+1)/2⌉` points on the segment `a`–`b`.
pub fn face_quadrature(a: Point, b: Point, degree: usize) -> QuadratureRule {
    let (xs, ws) = gauss_legendre_unit(gauss_points_for(degree));
    let len = (b - a).norm();
    QuadratureRule {
        points: xs.iter().map(|t| a + (b - a) * *t).collect(),
        weights: ws.iter().map(|w| w * len).collect(),
        degree,
    }
}

/// Collapsed (Duffy) Gauss rule on triangle `a, b, c`.
pub fn triangle_quadrature(a: Point, b: Point, c: Point, degree: usize) -> QuadratureRule {
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new(), degree };
    push_triangle(&mut rule, a, b, c, degree);
    rule
}

fn push_triangle(rule: &mut QuadratureRule, a: Point, b: Point, c: Point, degree: usize) {
    let two_area = (b - a).perp(&(c - a)).abs();
    let (ss, ws) = gauss_legendre_unit(gauss_points_for(degree + 1));
    let (ts, wt) = gauss_legendre_unit(gauss_points_for(degree));
    for (s, w1) in ss.iter().zip(&ws) {
        for (t, w2) in ts.iter().zip(&wt) {
            rule.points.push(a + (b - a) * *s + (c - b) * (s * t));
            rule.weights.push(w1 * w2 * s * two_area);
        }
    }
}

/// Tensor Gauss rule on the axis-aligned square `[lo, lo + h]²`.
pub fn square_quadrature(lo: Point, h: f64, degree: usize) -> QuadratureRule {
    let (xs, ws) = gauss_legendre_unit(gauss_points_for(degree));
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new(), degree };
    for (y, wy) in xs.iter().zip(&ws) {
        for (x, wx) in xs.iter().zip(&ws) {
            rule.points.push(lo + Point::new(x * h, y * h));
            rule.weights.push(wx * wy * h * h);
        }
    }
    rule
}

/// Fan triangulation of a convex polygon from its vertex mean, one collapsed rule per triangle.
/// Fan triangles with area below `1e-30·scale²` are skipped.
pub fn polygon_quadrature(poly: &[Point], degree: usize, scale: f64) -> QuadratureRule {
    let n = poly.len();
    let center = poly.iter().fold(Point::zeros(), |s, v| s + v) / n as f64;
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new(), degree };
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let area = 0.5 * (a - center).perp(&(b - center)).abs();
        if area < 1e-30 * scale * scale {
            warn!("skipping degenerate fan triangle of area {area:e}");
            continue;
        }
        push_triangle(&mut rule, center, a, b, degree);
    }
    rule
}

/// Cell rule: tensor rule on uncut squares, fan rule otherwise.
pub fn cell_quadrature(cell: &CutCell, degree: usize, h: f64) -> QuadratureRule {
    if cell.is_full() {
        square_quadrature(cell.polygon[0], h, degree)
    } else {
        polygon_quadrature(&cell.polygon, degree, h)
    }
}
