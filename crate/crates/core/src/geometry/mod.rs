//! Background grid, embedded geometries and the cut-cell mesh.

mod clip;
mod mesh;
mod small;

pub use clip::{clip_halfplane, clip_square, shoelace_area, EdgeTag, HalfPlane, TaggedPolygon};
pub use mesh::{build_cut_mesh, CellFace, CutCell, CutCellMesh, Face, FaceKind, MeshOptions};
pub use small::{classify_small_cells, validate_assumptions, SmallCell, SmallCellSet, ValidationReport};

use crate::error::{Error, Result};

pub type Point = nalgebra::Vector2<f64>;

/// Embedded domain Ω intersected with the background grid.
#[derive(Clone, Debug, PartialEq)]
pub enum GeometrySpec {
    /// `R(angle)·[0,1]² + origin`.
    RotatedSquare { angle: f64, origin: Point },
    /// Band `lower < (x₂ - x₁) mod 1 < upper` on the unit torus; only 45° is supported.
    Channel { angle: f64, lower: f64, upper: f64 },
    /// Intersection of the listed half-planes (empty list = whole background).
    HalfPlaneList(Vec<HalfPlane>),
}

impl GeometrySpec {
    /// Rotated unit square placed so that its bounding box is `[0, cos γ + sin γ]²`.
    pub fn rotated_square(angle: f64) -> Self {
        GeometrySpec::RotatedSquare { angle, origin: Point::new(angle.sin(), 0.0) }
    }

    pub fn channel(lower: f64, upper: f64) -> Self {
        GeometrySpec::Channel { angle: std::f64::consts::FRAC_PI_4, lower, upper }
    }

    pub fn whole() -> Self {
        GeometrySpec::HalfPlaneList(Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeometrySpec::RotatedSquare { angle, origin } => {
                if !angle.is_finite() || !origin.x.is_finite() || !origin.y.is_finite() {
                    return Err(Error::InvalidGeometry("non-finite rotated square".into()));
                }
            }
            GeometrySpec::Channel { angle, lower, upper } => {
                if (angle - std::f64::consts::FRAC_PI_4).abs() > 1e-12 {
                    return Err(Error::InvalidGeometry(format!("channel angle {angle} unsupported, only 45° channels exist")));
                }
                if !(lower < upper) || upper - lower >= 1.0 {
                    return Err(Error::InvalidGeometry(format!("channel offsets need lower < upper < lower + 1, got {lower}, {upper}")));
                }
            }
            GeometrySpec::HalfPlaneList(list) => {
                for hp in list {
                    if (hp.normal.norm() - 1.0).abs() > 1e-14 {
                        return Err(Error::InvalidGeometry(format!("normal {:?} is not unit length", hp.normal)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Half-planes (with their tag index) relevant for the square `[lo, lo + h]²`.
    pub fn planes_for_cell(&self, lo: Point, h: f64) -> Result<Vec<(HalfPlane, usize)>> {
        match self {
            GeometrySpec::RotatedSquare { angle, origin } => {
                let (s, c) = angle.sin_cos();
                let e1 = Point::new(c, s);
                let e2 = Point::new(-s, c);
                let far = origin + e1 + e2;
                Ok(vec![
                    (HalfPlane::new(*origin, -e2), 0),
                    (HalfPlane::new(far, e1), 1),
                    (HalfPlane::new(far, e2), 2),
                    (HalfPlane::new(*origin, -e1), 3),
                ])
            }
            GeometrySpec::Channel { lower, upper, .. } => {
                let dmin = lo.y - (lo.x + h);
                let dmax = (lo.y + h) - lo.x;
                let kmin = (dmin - upper).ceil() as i64;
                let kmax = (dmax - lower).floor() as i64;
                if kmax > kmin {
                    return Err(Error::InvalidGeometry("channel copies overlap a single background cell".into()));
                }
                let k = kmin as f64;
                Ok(channel_planes(*lower, *upper, k).to_vec())
            }
            GeometrySpec::HalfPlaneList(list) => Ok(list.iter().copied().enumerate().map(|(i, hp)| (hp, i)).collect()),
        }
    }

    /// Analytic area of Ω (for the periodic channel: area on the unit torus).
    pub fn analytic_area(&self) -> Option<f64> {
        match self {
            GeometrySpec::RotatedSquare { .. } => Some(1.0),
            GeometrySpec::Channel { lower, upper, .. } => Some(upper - lower),
            GeometrySpec::HalfPlaneList(_) => None,
        }
    }
}

/// Lower and upper wall of band copy `k` of the 45° channel.
pub fn channel_planes(lower: f64, upper: f64, k: f64) -> [(HalfPlane, usize); 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        (HalfPlane::new(Point::new(0.0, lower + k), Point::new(s, -s)), 0),
        (HalfPlane::new(Point::new(0.0, upper + k), Point::new(-s, s)), 1),
    ]
}

/// Uniform Cartesian grid of square cells.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundMesh {
    pub nx: usize,
    pub ny: usize,
    pub lo: Point,
    pub hi: Point,
    pub h: f64,
    pub periodic: [bool; 2],
}

impl BackgroundMesh {
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_lo(&self, i: usize, j: usize) -> Point {
        Point::new(self.lo.x + i as f64 * self.h, self.lo.y + j as f64 * self.h)
    }

    pub fn extent(&self) -> Point {
        self.hi - self.lo
    }

    /// Number of background faces on the two opposing sides of `axis` that are
    /// identified with each other (0 when that axis is not periodic).
    pub fn identified_faces(&self, axis: usize) -> usize {
        if !self.periodic[axis] {
            return 0;
        }
        if axis == 0 {
            2 * self.ny
        } else {
            2 * self.nx
        }
    }
}

/// Builds the uniform background grid on `[lo, hi]`.
pub fn build_background_mesh(nx: usize, ny: usize, lo: Point, hi: Point, periodic: [bool; 2]) -> Result<BackgroundMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry("background mesh needs nx, ny >= 1".into()));
    }
    let ext = hi - lo;
    if !(ext.x > 0.0 && ext.y > 0.0) {
        return Err(Error::InvalidGeometry("degenerate background bounds".into()));
    }
    let hx = ext.x / nx as f64;
    let hy = ext.y / ny as f64;
    if ((hx - hy) / hx).abs() > 1e-12 {
        return Err(Error::NonSquareCells { hx, hy });
    }
    Ok(BackgroundMesh { nx, ny, lo, hi, h: hx, periodic })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_background() {
        let bg = build_background_mesh(1, 1, Point::new(0.0, 0.0), Point::new(1.0, 1.0), [false; 2]).unwrap();
        assert_eq!(bg.cell_count(), 1);
        assert_eq!(bg.h, 1.0);
    }

    #[test]
    fn scaled_background() {
        let bg = build_background_mesh(10, 10, Point::new(0.0, 0.0), Point::new(1.4, 1.4), [false; 2]).unwrap();
        assert_eq!(bg.cell_count(), 100);
        assert!((bg.h - 0.14).abs() < 1e-15);
        assert!(((bg.h * 10.0) - 1.4).abs() / 1.4 < 1e-13);
    }

    #[test]
    fn torus_face_identification() {
        let bg = build_background_mesh(100, 100, Point::new(0.0, 0.0), Point::new(1.0, 1.0), [true; 2]).unwrap();
        assert_eq!(bg.identified_faces(0), 200);
        assert_eq!(bg.identified_faces(1), 200);
    }

    #[test]
    fn rectangular_cells_rejected() {
        let r = build_background_mesh(10, 10, Point::new(0.0, 0.0), Point::new(1.0, 2.0), [false; 2]);
        assert!(matches!(r, Err(Error::NonSquareCells { .. })));
    }

    #[test]
    fn geometry_validation() {
        assert!(GeometrySpec::channel(0.3, 0.1).validate().is_err());
        assert!(GeometrySpec::channel(0.1, 0.3).validate().is_ok());
        let bad = GeometrySpec::HalfPlaneList(vec![HalfPlane::new(Point::zeros(), Point::new(1.0, 1.0))]);
        assert!(bad.validate().is_err());
        let angle = 0.3;
        assert!(GeometrySpec::Channel { angle, lower: 0.0, upper: 0.2 }.validate().is_err());
    }
}
