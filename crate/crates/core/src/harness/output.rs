//! CSV tables and ASCII VTK output.

use std::fmt::Write as _;
use std::path::Path;

use crate::dg::{DgField, Discretization};
use crate::diagnostics::{ErrorReport, RateRow};
use crate::error::{Error, Result};
use crate::Point;

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn errors_csv(reports: &[ErrorReport]) -> String {
    let mut s = String::from("n,degree,t,component,norm,value\n");
    for r in reports {
        for (comp, norm, v) in r.rows() {
            let _ = writeln!(s, "{},{},{:e},{},{},{:e}", r.n, r.degree, r.t, comp, norm, v);
        }
    }
    s
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("n_coarse,n_fine,degree,component,norm,rate\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{:.6}", r.n_coarse, r.n_fine, r.degree, r.component, r.norm, r.rate);
    }
    s
}

/// One sample of a time series.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergySample {
    pub run: String,
    pub t: f64,
    pub energy: f64,
    pub max_abs: f64,
    pub linf_p: f64,
    pub linf_v: f64,
}

pub fn energy_csv(samples: &[EnergySample]) -> String {
    let mut s = String::from("run,t,energy,max_abs,linf_p,linf_v\n");
    for e in samples {
        let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},{:e}", e.run, e.t, e.energy, e.max_abs, e.linf_p, e.linf_v);
    }
    s
}

/// Per-cell data of one stabilized run.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallCellRow {
    pub run: String,
    pub cell: usize,
    pub alpha: f64,
    pub k: usize,
    pub family: &'static str,
    pub capacity: f64,
    pub eta: f64,
    /// `max |G − I|` of the basis Gram matrix on the cell's quadrature.
    pub gram_deviation: f64,
    /// Largest entry of the monomial-to-orthonormal transform.
    pub max_transform: f64,
}

pub fn smallcells_csv(rows: &[SmallCellRow]) -> String {
    let mut s = String::from("run,cell,alpha,k,family,capacity,eta,gram_deviation,max_transform\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:e},{},{},{:e},{:e},{:e},{:e}",
            r.run, r.cell, r.alpha, r.k, r.family, r.capacity, r.eta, r.gram_deviation, r.max_transform
        );
    }
    s
}

/// Polygons and cell means of `(p, v₁, v₂)` as a legacy ASCII unstructured grid.
pub fn vtk_string(disc: &Discretization, field: &DgField) -> Result<String> {
    disc.check_field(field)?;
    let cells = &disc.mesh.cells;
    let npts: usize = cells.iter().map(|c| c.polygon.len()).sum();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\ncutdg t={:e}\nASCII\nDATASET UNSTRUCTURED_GRID", field.t);
    let _ = writeln!(s, "POINTS {npts} double");
    for c in cells {
        for v in &c.polygon {
            let _ = writeln!(s, "{:e} {:e} 0", v.x, v.y);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), npts + cells.len());
    let mut next = 0;
    for c in cells {
        let ids: Vec<String> = (next..next + c.polygon.len()).map(|i| i.to_string()).collect();
        next += c.polygon.len();
        let _ = writeln!(s, "{} {}", c.polygon.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in cells {
        s.push_str("7\n");
    }
    let means: Vec<[f64; 3]> = (0..cells.len()).map(|i| disc.cell_mean(field, i)).collect();
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS pressure double 1\nLOOKUP_TABLE default", cells.len());
    for m in &means {
        let _ = writeln!(s, "{:e}", m[0]);
    }
    let _ = writeln!(s, "VECTORS velocity double");
    for m in &means {
        let _ = writeln!(s, "{:e} {:e} 0", m[1], m[2]);
    }
    Ok(s)
}

pub fn write_vtk(disc: &Discretization, field: &DgField, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, vtk_string(disc, field)?)?;
    Ok(())
}

/// Contents of a file written by [`vtk_string`].
#[derive(Clone, Debug, PartialEq)]
pub struct VtkData {
    pub points: Vec<Point>,
    pub polygons: Vec<Vec<usize>>,
    pub pressure: Vec<f64>,
    pub velocity: Vec<[f64; 2]>,
}

pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let bad = |m: String| Error::Config(format!("vtk parse: {m}"));
    let mut tok = text.lines().skip(2).flat_map(str::split_whitespace);
    let mut word = |expect: Option<&str>| -> Result<&str> {
        let t = tok.next().ok_or_else(|| bad("unexpected end of file".into()))?;
        match expect {
            Some(e) if e != t => Err(bad(format!("expected {e}, found {t}"))),
            _ => Ok(t),
        }
    };
    let mut header = |words: &[&str]| -> Result<()> { words.iter().try_for_each(|w| word(Some(w)).map(|_| ())) };
    header(&["ASCII", "DATASET", "UNSTRUCTURED_GRID", "POINTS"])?;
    drop(header);
    fn parse<T: std::str::FromStr>(t: &str) -> Result<T> {
        t.parse().map_err(|_| Error::Config(format!("vtk parse: bad number {t}")))
    }
    let npts: usize = parse(word(None)?)?;
    word(Some("double"))?;
    let mut points = Vec::with_capacity(npts);
    for _ in 0..npts {
        let (x, y): (f64, f64) = (parse(word(None)?)?, parse(word(None)?)?);
        word(None)?;
        points.push(Point::new(x, y));
    }
    word(Some("CELLS"))?;
    let ncells: usize = parse(word(None)?)?;
    word(None)?;
    let mut polygons = Vec::with_capacity(ncells);
    for _ in 0..ncells {
        let m: usize = parse(word(None)?)?;
        polygons.push((0..m).map(|_| parse(word(None)?)).collect::<Result<Vec<usize>>>()?);
    }
    word(Some("CELL_TYPES"))?;
    word(None)?;
    for _ in 0..ncells {
        word(Some("7"))?;
    }
    for w in ["CELL_DATA", "", "SCALARS", "pressure", "double", "1", "LOOKUP_TABLE", "default"] {
        word((!w.is_empty()).then_some(w))?;
    }
    let pressure = (0..ncells).map(|_| parse(word(None)?)).collect::<Result<Vec<f64>>>()?;
    for w in ["VECTORS", "velocity", "double"] {
        word(Some(w))?;
    }
    let mut velocity = Vec::with_capacity(ncells);
    for _ in 0..ncells {
        let v = [parse(word(None)?)?, parse(word(None)?)?];
        word(None)?;
        velocity.push(v);
    }
    Ok(VtkData { points, polygons, pressure, velocity })
}
