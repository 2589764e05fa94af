//! Half-plane clipping of axis-aligned squares (Sutherland–Hodgman).

use super::Point;

/// Which boundary an edge of a clipped polygon came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    South,
    East,
    North,
    West,
    /// Edge lies on the clip line with the given index in the geometry's half-plane list.
    Clip(usize),
}

impl EdgeTag {
    pub fn is_side(self) -> bool {
        !matches!(self, EdgeTag::Clip(_))
    }

    pub fn opposite(self) -> EdgeTag {
        match self {
            EdgeTag::South => EdgeTag::North,
            EdgeTag::North => EdgeTag::South,
            EdgeTag::East => EdgeTag::West,
            EdgeTag::West => EdgeTag::East,
            c => c,
        }
    }

    /// Outward normal of a square side.
    pub fn side_normal(self) -> Option<Point> {
        match self {
            EdgeTag::South => Some(Point::new(0.0, -1.0)),
            EdgeTag::East => Some(Point::new(1.0, 0.0)),
            EdgeTag::North => Some(Point::new(0.0, 1.0)),
            EdgeTag::West => Some(Point::new(-1.0, 0.0)),
            EdgeTag::Clip(_) => None,
        }
    }
}

/// Closed half-plane `{x : (x - point)·normal <= 0}`; `normal` is the outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub point: Point,
    pub normal: Point,
}

impl HalfPlane {
    pub fn new(point: Point, normal: Point) -> Self {
        Self { point, normal }
    }

    #[inline]
    pub fn signed_distance(&self, x: &Point) -> f64 {
        (x - self.point).dot(&self.normal)
    }
}

/// Convex polygon with counterclockwise vertices; `tags[i]` labels the edge `vertices[i] -> vertices[i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedPolygon {
    pub vertices: Vec<Point>,
    pub tags: Vec<EdgeTag>,
}

impl TaggedPolygon {
    /// Axis-aligned square with lower-left corner `lo` and side `h`.
    pub fn square(lo: Point, h: f64) -> Self {
        let vertices = vec![
            lo,
            Point::new(lo.x + h, lo.y),
            Point::new(lo.x + h, lo.y + h),
            Point::new(lo.x, lo.y + h),
        ];
        let tags = vec![EdgeTag::South, EdgeTag::East, EdgeTag::North, EdgeTag::West];
        Self { vertices, tags }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices)
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }
}

/// Signed shoelace area (positive for counterclockwise order).
pub fn shoelace_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a.x * b.y - a.y * b.x;
    }
    0.5 * s
}

/// Intersection of segment `a`–`b` with the line of `hp`, computed in a canonical
/// endpoint order so that both cells sharing the segment get identical bits.
fn intersect(a: &Point, da: f64, b: &Point, db: f64) -> Point {
    let swap = (b.x, b.y) < (a.x, a.y);
    let (p, dp, q, dq) = if swap { (b, db, a, da) } else { (a, da, b, db) };
    let t = dp / (dp - dq);
    p + (q - p) * t
}

/// Clips `poly` against one half-plane. Distances with `|d| <= eps` count as on the line.
pub fn clip_halfplane(poly: &TaggedPolygon, hp: &HalfPlane, tag: EdgeTag, eps: f64) -> TaggedPolygon {
    let n = poly.len();
    let mut out = TaggedPolygon { vertices: Vec::with_capacity(n + 1), tags: Vec::with_capacity(n + 1) };
    if n == 0 {
        return out;
    }
    let d: Vec<f64> = poly
        .vertices
        .iter()
        .map(|v| {
            let s = hp.signed_distance(v);
            if s.abs() <= eps {
                0.0
            } else {
                s
            }
        })
        .collect();
    for i in 0..n {
        let j = (i + 1) % n;
        let (cur, nxt) = (&poly.vertices[i], &poly.vertices[j]);
        let (dc, dn) = (d[i], d[j]);
        let t = poly.tags[i];
        if dc <= 0.0 {
            if dn <= 0.0 {
                out.vertices.push(*cur);
                out.tags.push(t);
            } else if dc < 0.0 {
                out.vertices.push(*cur);
                out.tags.push(t);
                out.vertices.push(intersect(cur, dc, nxt, dn));
                out.tags.push(tag);
            } else {
                out.vertices.push(*cur);
                out.tags.push(tag);
            }
        } else if dn < 0.0 {
            out.vertices.push(intersect(cur, dc, nxt, dn));
            out.tags.push(t);
        }
    }
    dedup(&mut out, eps);
    out
}

/// Removes zero-length edges; the surviving edge keeps the tag of the edge that follows.
fn dedup(poly: &mut TaggedPolygon, eps: f64) {
    loop {
        let n = poly.vertices.len();
        if n < 2 {
            return;
        }
        let mut hit = None;
        for i in 0..n {
            let j = (i + 1) % n;
            if (poly.vertices[j] - poly.vertices[i]).norm() <= eps {
                hit = Some((i, j));
                break;
            }
        }
        match hit {
            Some((i, j)) => {
                poly.tags[i] = poly.tags[j];
                poly.vertices.remove(j);
                poly.tags.remove(j);
            }
            None => return,
        }
    }
}

/// Clips a square successively against `planes`; returns `None` when the result is
/// degenerate (fewer than three vertices or area below `eps_area`).
pub fn clip_square(
    lo: Point,
    h: f64,
    planes: &[(HalfPlane, usize)],
    eps_geom: f64,
    eps_area: f64,
) -> Option<TaggedPolygon> {
    let mut poly = TaggedPolygon::square(lo, h);
    for (hp, k) in planes {
        poly = clip_halfplane(&poly, hp, EdgeTag::Clip(*k), eps_geom);
        if poly.len() < 3 {
            return None;
        }
    }
    if poly.len() < 3 || poly.area() < eps_area {
        None
    } else {
        Some(poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag_plane() -> HalfPlane {
        let s = 0.5f64.sqrt();
        HalfPlane::new(Point::new(0.25, 0.25), Point::new(s, s))
    }

    #[test]
    fn inside_square_is_unchanged() {
        let hp = HalfPlane::new(Point::new(5.0, 0.0), Point::new(1.0, 0.0));
        let p = clip_square(Point::new(0.0, 0.0), 1.0, &[(hp, 0)], 1e-14, 1e-300).unwrap();
        assert_eq!(p, TaggedPolygon::square(Point::new(0.0, 0.0), 1.0));
    }

    #[test]
    fn outside_square_is_empty() {
        let hp = HalfPlane::new(Point::new(-1.0, 0.0), Point::new(1.0, 0.0));
        assert!(clip_square(Point::new(0.0, 0.0), 1.0, &[(hp, 0)], 1e-14, 1e-300).is_none());
    }

    #[test]
    fn diagonal_cut_gives_corner_triangle() {
        let p = clip_square(Point::new(0.0, 0.0), 1.0, &[(diag_plane(), 3)], 1e-14, 1e-300).unwrap();
        let expect = [Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(0.0, 0.5)];
        assert_eq!(p.len(), 3);
        for (v, e) in p.vertices.iter().zip(expect.iter()) {
            assert_abs_diff_eq!((v - e).norm(), 0.0, epsilon = 1e-15);
        }
        // hand shoelace of the expected vertices
        let oracle = 0.5 * (0.5 * 0.5 - 0.0);
        assert_abs_diff_eq!(p.area(), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(p.area(), 0.125, epsilon = 1e-15);
        assert_eq!(p.tags, vec![EdgeTag::South, EdgeTag::Clip(3), EdgeTag::West]);
    }

    #[test]
    fn cut_through_vertex_has_no_duplicate() {
        // line through corners (1,0) and (0,1)
        let s = 0.5f64.sqrt();
        let hp = HalfPlane::new(Point::new(0.5, 0.5), Point::new(s, s));
        let p = clip_square(Point::new(0.0, 0.0), 1.0, &[(hp, 0)], 1e-14, 1e-300).unwrap();
        assert_eq!(p.len(), 3);
        assert_abs_diff_eq!(p.area(), 0.5, epsilon = 1e-15);
        assert_eq!(p.tags, vec![EdgeTag::South, EdgeTag::Clip(0), EdgeTag::West]);
    }

    #[test]
    fn line_on_side_keeps_side_tag() {
        let hp = HalfPlane::new(Point::new(1.0, 0.0), Point::new(1.0, 0.0));
        let p = clip_square(Point::new(0.0, 0.0), 1.0, &[(hp, 0)], 1e-14, 1e-300).unwrap();
        assert_eq!(p, TaggedPolygon::square(Point::new(0.0, 0.0), 1.0));
    }

    #[test]
    fn clipping_is_idempotent() {
        let hp = diag_plane();
        let once = clip_square(Point::new(0.0, 0.0), 1.0, &[(hp, 0)], 1e-14, 1e-300).unwrap();
        let twice = clip_halfplane(&once, &hp, EdgeTag::Clip(0), 1e-14);
        assert_eq!(once.len(), twice.len());
        for (a, b) in once.vertices.iter().zip(twice.vertices.iter()) {
            assert!((a - b).norm() <= 1e-13);
        }
    }
}
