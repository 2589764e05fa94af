//! Small-cell classification and the structural mesh assumptions.

use super::CutCellMesh;

/// A stabilized cell with its face index set.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallCell {
    pub cell: usize,
    /// Local face indices of the cell (all faces, internal and boundary).
    pub faces: Vec<usize>,
    /// Neighbor across each face (`None` for reflecting walls).
    pub neighbors: Vec<Option<usize>>,
}

impl SmallCell {
    pub fn k(&self) -> usize {
        self.faces.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallCellSet {
    pub alpha: f64,
    pub members: Vec<SmallCell>,
}

impl SmallCellSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.members.binary_search_by_key(&cell, |m| m.cell).is_ok()
    }
}

/// Cells with `alpha_E < alpha`, in ascending id order.
pub fn classify_small_cells(mesh: &CutCellMesh, alpha: f64) -> SmallCellSet {
    let members = mesh
        .cells
        .iter()
        .filter(|c| c.alpha < alpha)
        .map(|c| SmallCell {
            cell: c.id,
            faces: (0..c.faces.len()).collect(),
            neighbors: c.faces.iter().map(|f| f.neighbor).collect(),
        })
        .collect();
    SmallCellSet { alpha, members }
}

/// Outcome of the assumption checks, with offending cell ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// (i) pairs of adjacent small cells.
    pub small_neighbors: Vec<(usize, usize)>,
    /// (ii) small cells with a curved boundary face.
    pub nonplanar: Vec<usize>,
    /// (iii) small cells with `h_E² > rho_aniso·|E|`.
    pub anisotropic: Vec<usize>,
    /// Small cells touching more than one reflecting face.
    pub multiple_boundary: Vec<usize>,
    /// Small cells with fewer than two faces.
    pub too_few_faces: Vec<usize>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.small_neighbors.is_empty()
            && self.nonplanar.is_empty()
            && self.anisotropic.is_empty()
            && self.multiple_boundary.is_empty()
            && self.too_few_faces.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.small_neighbors.is_empty() {
            parts.push(format!("(i) adjacent small cells {:?}", self.small_neighbors));
        }
        if !self.nonplanar.is_empty() {
            parts.push(format!("(ii) non-planar boundary faces in cells {:?}", self.nonplanar));
        }
        if !self.anisotropic.is_empty() {
            parts.push(format!("(iii) anisotropic cells {:?}", self.anisotropic));
        }
        if !self.multiple_boundary.is_empty() {
            parts.push(format!("multiple reflecting faces in cells {:?}", self.multiple_boundary));
        }
        if !self.too_few_faces.is_empty() {
            parts.push(format!("fewer than two faces in cells {:?}", self.too_few_faces));
        }
        if parts.is_empty() {
            "all assumptions hold".into()
        } else {
            parts.join("; ")
        }
    }
}

/// Checks assumptions (i)–(iii) for the small cells of `mesh`.
pub fn validate_assumptions(mesh: &CutCellMesh, small: &SmallCellSet, rho_aniso: f64) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let h = mesh.h();
    for m in &small.members {
        let cell = &mesh.cells[m.cell];
        for nb in m.neighbors.iter().flatten() {
            if small.contains(*nb) && !rep.small_neighbors.contains(&(*nb, m.cell)) {
                rep.small_neighbors.push((m.cell, *nb));
            }
        }
        for f in cell.faces.iter().filter(|f| f.is_boundary()) {
            let straight = (f.b - f.a).dot(&f.normal).abs() <= 1e-10 * h && (f.normal.norm() - 1.0).abs() <= 1e-12;
            if !straight || f.length <= 1e-14 * h {
                rep.nonplanar.push(m.cell);
                break;
            }
        }
        if cell.diameter * cell.diameter > rho_aniso * cell.area {
            rep.anisotropic.push(m.cell);
        }
        if cell.boundary_face_count() > 1 {
            rep.multiple_boundary.push(m.cell);
        }
        if m.k() < 2 {
            rep.too_few_faces.push(m.cell);
        }
    }
    rep
}
