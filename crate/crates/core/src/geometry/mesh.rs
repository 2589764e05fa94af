//! Cut-cell mesh: clipped polygons, faces, neighbor links and periodic shifts.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::clip::{clip_square, EdgeTag, TaggedPolygon};
use super::{BackgroundMesh, GeometrySpec, Point};
use crate::error::{Error, Result};

/// Tolerances for mesh construction, relative to `h` (and `h²` for areas).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOptions {
    pub eps_geom: f64,
    pub eps_area: f64,
    /// Cells with `alpha` below this are dropped; 0 keeps everything.
    pub drop_alpha: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { eps_geom: 1e-14, eps_area: 1e-300, drop_alpha: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Internal,
    /// Internal face across a periodic identification.
    Periodic,
    /// Reflecting wall.
    Boundary,
}

/// Mesh face. Geometry is stored in the frame of the left cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub id: usize,
    pub kind: FaceKind,
    pub a: Point,
    pub b: Point,
    pub length: f64,
    /// Outward normal of the left cell.
    pub normal: Point,
    pub left: usize,
    pub right: Option<usize>,
    /// Right-cell coordinates are left-cell coordinates plus `shift`.
    pub shift: Point,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.kind == FaceKind::Boundary
    }
}

/// A face seen from one of its cells, in that cell's frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFace {
    pub face: usize,
    pub a: Point,
    pub b: Point,
    pub length: f64,
    /// Outward normal of the owning cell.
    pub normal: Point,
    pub neighbor: Option<usize>,
    /// Neighbor coordinates are own coordinates plus `shift`.
    pub shift: Point,
    /// True if the owning cell is the face's left cell.
    pub is_left: bool,
}

impl CellFace {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    pub fn midpoint(&self) -> Point {
        (self.a + self.b) * 0.5
    }
}

/// Clipped cell `Ê ∩ Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutCell {
    pub id: usize,
    pub index: (usize, usize),
    pub polygon: Vec<Point>,
    pub tags: Vec<EdgeTag>,
    pub area: f64,
    pub alpha: f64,
    pub diameter: f64,
    pub faces: Vec<CellFace>,
}

impl CutCell {
    pub fn is_full(&self) -> bool {
        self.tags.len() == 4 && self.tags.iter().all(|t| t.is_side()) && self.alpha == 1.0
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = self.polygon[0];
        let mut hi = self.polygon[0];
        for v in &self.polygon {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn vertex_mean(&self) -> Point {
        self.polygon.iter().fold(Point::zeros(), |s, v| s + v) / self.polygon.len() as f64
    }

    pub fn centroid(&self) -> Point {
        let n = self.polygon.len();
        let mut c = Point::zeros();
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let cr = a.x * b.y - b.x * a.y;
            c += (a + b) * cr;
        }
        c / (6.0 * self.area)
    }

    pub fn boundary_face_count(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }
}

/// Background grid plus clipped cells and faces.
#[derive(Clone, Debug)]
pub struct CutCellMesh {
    pub background: BackgroundMesh,
    pub geometry: GeometrySpec,
    pub cells: Vec<CutCell>,
    pub faces: Vec<Face>,
    /// Background index `i + nx·j` to surviving cell id.
    pub cell_of_bg: Vec<Option<usize>>,
}

impl CutCellMesh {
    pub fn h(&self) -> f64 {
        self.background.h
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn min_alpha(&self) -> f64 {
        self.cells.iter().map(|c| c.alpha).fold(f64::INFINITY, f64::min)
    }

    pub fn internal_face_count(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn boundary_face_count(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// CSV dump: `id,i,j,alpha,area,vertices` with vertices as `x y` pairs separated by `;`.
    pub fn dump_csv(&self) -> String {
        let mut s = String::from("id,i,j,alpha,area,vertices\n");
        for c in &self.cells {
            let verts: Vec<String> = c.polygon.iter().map(|v| format!("{:.17e} {:.17e}", v.x, v.y)).collect();
            let _ = writeln!(s, "{},{},{},{:.17e},{:.17e},{}", c.id, c.index.0, c.index.1, c.alpha, c.area, verts.join(";"));
        }
        s
    }
}

fn neighbor_index(bg: &BackgroundMesh, i: usize, j: usize, side: EdgeTag) -> Option<((usize, usize), Point)> {
    let (di, dj): (i64, i64) = match side {
        EdgeTag::South => (0, -1),
        EdgeTag::East => (1, 0),
        EdgeTag::North => (0, 1),
        EdgeTag::West => (-1, 0),
        EdgeTag::Clip(_) => return None,
    };
    let ext = bg.extent();
    let mut ni = i as i64 + di;
    let mut nj = j as i64 + dj;
    let mut shift = Point::zeros();
    if ni < 0 || ni >= bg.nx as i64 {
        if !bg.periodic[0] {
            return None;
        }
        let wrap = ni.div_euclid(bg.nx as i64);
        ni -= wrap * bg.nx as i64;
        shift.x -= wrap as f64 * ext.x;
    }
    if nj < 0 || nj >= bg.ny as i64 {
        if !bg.periodic[1] {
            return None;
        }
        let wrap = nj.div_euclid(bg.ny as i64);
        nj -= wrap * bg.ny as i64;
        shift.y -= wrap as f64 * ext.y;
    }
    Some(((ni as usize, nj as usize), shift))
}

fn diameter(poly: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for a in poly {
        for b in poly {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn side_edge(poly: &TaggedPolygon, side: EdgeTag) -> Option<(Point, Point)> {
    poly.tags.iter().position(|t| *t == side).map(|k| poly.edge(k))
}

/// Clips every background cell against `geometry` and links the surviving cells.
pub fn build_cut_mesh(bg: &BackgroundMesh, geometry: &GeometrySpec, opts: MeshOptions) -> Result<CutCellMesh> {
    geometry.validate()?;
    let h = bg.h;
    let full = h * h;
    let eps_geom = opts.eps_geom * h;
    let eps_area = opts.eps_area * full;

    let mut polys: Vec<TaggedPolygon> = Vec::new();
    let mut index = Vec::new();
    let mut cell_of_bg = vec![None; bg.cell_count()];
    for j in 0..bg.ny {
        for i in 0..bg.nx {
            let lo = bg.cell_lo(i, j);
            let planes = geometry.planes_for_cell(lo, h)?;
            if let Some(p) = clip_square(lo, h, &planes, eps_geom, eps_area) {
                if opts.drop_alpha > 0.0 && p.area() / full < opts.drop_alpha {
                    continue;
                }
                cell_of_bg[i + bg.nx * j] = Some(polys.len());
                polys.push(p);
                index.push((i, j));
            }
        }
    }

    let mut cells = Vec::with_capacity(polys.len());
    for (id, p) in polys.iter().enumerate() {
        let area = p.area();
        if !(area > 0.0) || !is_convex(&p.vertices) {
            return Err(Error::GeometryDegenerate { cell: id, reason: "clipped polygon is not simple and convex".into() });
        }
        let alpha = if p.tags.len() == 4 && p.tags.iter().all(|t| t.is_side()) { 1.0 } else { (area / full).min(1.0) };
        cells.push(CutCell {
            id,
            index: index[id],
            polygon: p.vertices.clone(),
            tags: p.tags.clone(),
            area,
            alpha,
            diameter: diameter(&p.vertices),
            faces: Vec::new(),
        });
    }

    let planes_normal = |cell: &CutCell, k: usize| -> Result<Point> {
        let lo = bg.cell_lo(cell.index.0, cell.index.1);
        let planes = geometry.planes_for_cell(lo, h)?;
        Ok(planes.iter().find(|(_, t)| *t == k).map(|(hp, _)| hp.normal).expect("clip tag refers to a known plane"))
    };

    let mut faces: Vec<Face> = Vec::new();
    // (cell, side) -> face created by the other cell
    let mut pending: HashMap<(usize, EdgeTag), usize> = HashMap::new();
    for id in 0..cells.len() {
        let (i, j) = cells[id].index;
        let mut local = Vec::with_capacity(polys[id].len());
        for e in 0..polys[id].len() {
            let tag = polys[id].tags[e];
            let (a, b) = polys[id].edge(e);
            let length = (b - a).norm();
            if let Some(fid) = pending.remove(&(id, tag)) {
                let f = &faces[fid];
                let shift = -f.shift;
                if ((a + shift) - f.b).norm() > 1e-10 * h || ((b + shift) - f.a).norm() > 1e-10 * h {
                    return Err(Error::GeometryDegenerate { cell: id, reason: format!("shared edge mismatch on face {fid}") });
                }
                local.push(CellFace {
                    face: fid,
                    a,
                    b,
                    length,
                    normal: -f.normal,
                    neighbor: Some(f.left),
                    shift,
                    is_left: false,
                });
                continue;
            }
            let normal = match tag.side_normal() {
                Some(n) => n,
                None => {
                    let n = planes_normal(&cells[id], match tag {
                        EdgeTag::Clip(k) => k,
                        _ => unreachable!(),
                    })?;
                    // endpoint offset from the wall line, absolute so that tiny edges are not rejected for rounding
                    if (b - a).dot(&n).abs() > 1e-10 * h {
                        return Err(Error::NonPlanarFace { face: faces.len() });
                    }
                    n
                }
            };
            let neighbor = neighbor_index(bg, i, j, tag).and_then(|((ni, nj), shift)| {
                let nb = cell_of_bg[ni + bg.nx * nj]?;
                side_edge(&polys[nb], tag.opposite()).map(|_| (nb, shift))
            });
            let fid = faces.len();
            match neighbor {
                Some((nb, shift)) => {
                    let kind = if shift == Point::zeros() { FaceKind::Internal } else { FaceKind::Periodic };
                    faces.push(Face { id: fid, kind, a, b, length, normal, left: id, right: Some(nb), shift });
                    pending.insert((nb, tag.opposite()), fid);
                    local.push(CellFace { face: fid, a, b, length, normal, neighbor: Some(nb), shift, is_left: true });
                }
                None => {
                    faces.push(Face {
                        id: fid,
                        kind: FaceKind::Boundary,
                        a,
                        b,
                        length,
                        normal,
                        left: id,
                        right: None,
                        shift: Point::zeros(),
                    });
                    local.push(CellFace {
                        face: fid,
                        a,
                        b,
                        length,
                        normal,
                        neighbor: None,
                        shift: Point::zeros(),
                        is_left: true,
                    });
                }
            }
        }
        cells[id].faces = local;
    }
    if let Some(((cell, _), _)) = pending.iter().next() {
        return Err(Error::GeometryDegenerate { cell: *cell, reason: "unmatched internal face".into() });
    }

    Ok(CutCellMesh { background: bg.clone(), geometry: geometry.clone(), cells, faces, cell_of_bg })
}

fn is_convex(v: &[Point]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let scale = v.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        let cross = (b - a).perp(&(c - b));
        if cross < -1e-12 * scale * (b - a).norm().max((c - b).norm()) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::super::{build_background_mesh, HalfPlane};
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_bg(n: usize, periodic: bool) -> BackgroundMesh {
        build_background_mesh(n, n, Point::new(0.0, 0.0), Point::new(1.0, 1.0), [periodic; 2]).unwrap()
    }

    #[test]
    fn single_cell_whole_domain() {
        let m = build_cut_mesh(&unit_bg(1, false), &GeometrySpec::whole(), MeshOptions::default()).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.internal_face_count(), 0);
        assert_eq!(m.boundary_face_count(), 4);
    }

    #[test]
    fn rotated_square_area_is_one() {
        let angle = 35f64.to_radians();
        let ext = angle.cos() + angle.sin();
        let bg = build_background_mesh(10, 10, Point::zeros(), Point::new(ext, ext), [false; 2]).unwrap();
        let m = build_cut_mesh(&bg, &GeometrySpec::rotated_square(angle), MeshOptions::default()).unwrap();
        assert!((m.total_area() - 1.0).abs() <= 1e-12);
    }

    fn check_closed_and_oriented(m: &CutCellMesh) {
        let h = m.h();
        for c in &m.cells {
            let s = c.faces.iter().fold(Point::zeros(), |s, f| s + f.normal * f.length);
            assert!(s.norm() <= 1e-12 * h, "cell {} normal sum {:?}", c.id, s);
            assert!((c.area - shoelace_area(&c.polygon)).abs() <= 1e-12 * h * h);
            assert!(c.alpha > 0.0 && c.alpha <= 1.0);
        }
        for f in &m.faces {
            assert!(f.length > 0.0);
            if let Some(r) = f.right {
                let dl = m.cells[f.left].centroid();
                let dr = m.cells[r].centroid() - f.shift;
                assert!((dr - dl).dot(&f.normal) > 0.0, "face {} orientation", f.id);
                assert!(f.left < r || (f.left == r));
            }
        }
    }

    use super::super::shoelace_area;

    #[test]
    fn periodic_torus_links() {
        let m = build_cut_mesh(&unit_bg(4, true), &GeometrySpec::whole(), MeshOptions::default()).unwrap();
        assert_eq!(m.cells.len(), 16);
        assert_eq!(m.boundary_face_count(), 0);
        assert_eq!(m.faces.len(), 32);
        assert_eq!(m.faces.iter().filter(|f| f.kind == FaceKind::Periodic).count(), 8);
        check_closed_and_oriented(&m);
    }

    #[test]
    fn channel_mesh_is_consistent() {
        let m = build_cut_mesh(&unit_bg(20, true), &GeometrySpec::channel(0.1037, 0.3119), MeshOptions::default()).unwrap();
        assert!((m.total_area() - (0.3119 - 0.1037)).abs() <= 1e-12);
        check_closed_and_oriented(&m);
        for c in &m.cells {
            assert!(c.boundary_face_count() <= 1);
        }
    }

    #[test]
    fn rotated_square_mesh_is_consistent() {
        let angle = 35f64.to_radians();
        let ext = angle.cos() + angle.sin();
        for n in [7, 13, 20] {
            let bg = build_background_mesh(n, n, Point::zeros(), Point::new(ext, ext), [false; 2]).unwrap();
            let m = build_cut_mesh(&bg, &GeometrySpec::rotated_square(angle), MeshOptions::default()).unwrap();
            check_closed_and_oriented(&m);
            assert!((m.total_area() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn triangle_cut_single_cell() {
        let s = 0.5f64.sqrt();
        let g = GeometrySpec::HalfPlaneList(vec![HalfPlane::new(Point::new(0.25, 0.25), Point::new(s, s))]);
        let m = build_cut_mesh(&unit_bg(1, false), &g, MeshOptions::default()).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_abs_diff_eq!(m.cells[0].alpha, 0.125, epsilon = 1e-15);
        assert_eq!(m.boundary_face_count(), 3);
    }

    #[test]
    fn dump_has_row_per_cell() {
        let m = build_cut_mesh(&unit_bg(3, false), &GeometrySpec::whole(), MeshOptions::default()).unwrap();
        assert_eq!(m.dump_csv().lines().count(), 10);
    }
}
