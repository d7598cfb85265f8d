//! Legacy ASCII VTK unstructured grids. Each element is split into
//! `n x n` quadrilateral cells carrying the fields at their centres.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dpg::FieldSolution;
use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VtkError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

pub fn write_vtk(mesh: &Mesh, fields: &FieldSolution, eta_sq: &[f64], subdivisions: usize) -> String {
    let n = subdivisions.max(1);
    let ncell = mesh.num_elements() * n * n;
    let npt = mesh.num_elements() * (n + 1) * (n + 1);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ndpgmg trace solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {npt} double");
    for el in mesh.elements() {
        for j in 0..=n {
            for i in 0..=n {
                let x = el.to_physical([2.0 * i as f64 / n as f64 - 1.0, 2.0 * j as f64 / n as f64 - 1.0]);
                let _ = writeln!(s, "{:e} {:e} 0", x[0], x[1]);
            }
        }
    }
    let _ = writeln!(s, "CELLS {ncell} {}", 5 * ncell);
    for e in 0..mesh.num_elements() {
        let base = e * (n + 1) * (n + 1);
        for j in 0..n {
            for i in 0..n {
                let v = base + j * (n + 1) + i;
                let _ = writeln!(s, "4 {} {} {} {}", v, v + 1, v + n + 2, v + n + 1);
            }
        }
    }
    let _ = writeln!(s, "CELL_TYPES {ncell}");
    for _ in 0..ncell {
        s.push_str("9\n");
    }
    let mut values: Vec<(&str, Vec<f64>)> =
        ["p_real", "p_imag", "ux_real", "ux_imag", "uy_real", "uy_imag", "order", "eta"]
            .iter()
            .map(|name| (*name, Vec::with_capacity(ncell)))
            .collect();
    for (e, el) in mesh.elements().iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                let xi = [(2.0 * i as f64 + 1.0) / n as f64 - 1.0, (2.0 * j as f64 + 1.0) / n as f64 - 1.0];
                let (p, u) = fields.eval(e, xi);
                let row = [p.re, p.im, u[0].re, u[0].im, u[1].re, u[1].im, el.order as f64, eta_sq[e].sqrt()];
                for (slot, v) in values.iter_mut().zip(row) {
                    slot.1.push(v);
                }
            }
        }
    }
    let _ = writeln!(s, "CELL_DATA {ncell}");
    for (name, v) in values {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v {
            let _ = writeln!(s, "{x:e}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct VtkSummary {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
}

/// Reads back the subset of the legacy format produced by [`write_vtk`],
/// checking counts and connectivity.
pub fn parse_vtk(text: &str) -> Result<VtkSummary, VtkError> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, msg: &str| VtkError::Malformed { line: line + 1, msg: msg.to_string() };
    if !lines.first().is_some_and(|l| l.starts_with("# vtk DataFile Version")) {
        return Err(err(0, "missing version line"));
    }
    if lines.get(2).map(|l| l.trim()) != Some("ASCII") {
        return Err(err(2, "only ASCII files are supported"));
    }
    if lines.get(3).map(|l| l.trim()) != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(err(3, "expected DATASET UNSTRUCTURED_GRID"));
    }
    let mut i = 4;
    let header = |i: usize, kw: &str| -> Result<Vec<&str>, VtkError> {
        let f: Vec<&str> = lines.get(i).ok_or_else(|| err(i, "unexpected end of file"))?.split_whitespace().collect();
        if f.first() != Some(&kw) {
            return Err(err(i, &format!("expected {kw}")));
        }
        Ok(f)
    };
    let count = |i: usize, s: Option<&&str>| -> Result<usize, VtkError> {
        s.and_then(|v| v.parse().ok()).ok_or_else(|| err(i, "bad count"))
    };
    let nums = |i: usize| -> Result<Vec<f64>, VtkError> {
        lines
            .get(i)
            .ok_or_else(|| err(i, "unexpected end of file"))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(i, "bad number")))
            .collect()
    };

    let f = header(i, "POINTS")?;
    let npt = count(i, f.get(1))?;
    i += 1;
    let mut points = Vec::with_capacity(npt);
    for _ in 0..npt {
        match nums(i)?.as_slice() {
            [x, y, z] => points.push([*x, *y, *z]),
            _ => return Err(err(i, "point needs three coordinates")),
        }
        i += 1;
    }

    let f = header(i, "CELLS")?;
    let (ncell, size) = (count(i, f.get(1))?, count(i, f.get(2))?);
    i += 1;
    let mut cells = Vec::with_capacity(ncell);
    let mut total = 0;
    for _ in 0..ncell {
        let v = nums(i)?;
        let ids: Vec<usize> = v.iter().map(|x| *x as usize).collect();
        if ids.is_empty() || ids[0] + 1 != ids.len() || ids[1..].iter().any(|&p| p >= npt) {
            return Err(err(i, "bad connectivity"));
        }
        total += ids.len();
        cells.push(ids[1..].to_vec());
        i += 1;
    }
    if total != size {
        return Err(err(i, "CELLS size mismatch"));
    }

    let f = header(i, "CELL_TYPES")?;
    if count(i, f.get(1))? != ncell {
        return Err(err(i, "cell type count mismatch"));
    }
    i += 1;
    let mut cell_types = Vec::with_capacity(ncell);
    for _ in 0..ncell {
        let t: u8 = lines.get(i).and_then(|l| l.trim().parse().ok()).ok_or_else(|| err(i, "bad cell type"))?;
        cell_types.push(t);
        i += 1;
    }

    let mut cell_scalars = Vec::new();
    if i < lines.len() {
        let f = header(i, "CELL_DATA")?;
        if count(i, f.get(1))? != ncell {
            return Err(err(i, "cell data count mismatch"));
        }
        i += 1;
        while i < lines.len() {
            let f = header(i, "SCALARS")?;
            let name = f.get(1).ok_or_else(|| err(i, "missing name"))?.to_string();
            i += 1;
            header(i, "LOOKUP_TABLE")?;
            i += 1;
            let mut v = Vec::with_capacity(ncell);
            for _ in 0..ncell {
                match nums(i)?.as_slice() {
                    [x] => v.push(*x),
                    _ => return Err(err(i, "expected one value")),
                }
                i += 1;
            }
            cell_scalars.push((name, v));
        }
    }
    Ok(VtkSummary { points, cells, cell_types, cell_scalars })
}
