//! The `pxmesh 1` text format.
//!
//! ```text
//! pxmesh 1
//! <#vertices> <#cells>
//! x y boundary_flag      (one line per vertex)
//! i j k                  (one line per cell, zero-based)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::Triangulation;
use crate::errors::{Error, Result};
use crate::scalar::Real;

pub fn render_mesh<T: Real>(mesh: &Triangulation<T>) -> String {
    let digits = T::ROUND_TRIP_DIGITS - 1;
    let mut out = String::new();
    let _ = writeln!(out, "pxmesh 1");
    let _ = writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_cells());
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{:.*e} {:.*e} {}", digits, p[0], digits, p[1], u8::from(mesh.is_boundary(v)));
    }
    for c in mesh.cells() {
        let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
    }
    out
}

pub fn write_mesh<T: Real>(mesh: &Triangulation<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh<T: Real>(path: impl AsRef<Path>) -> Result<Triangulation<T>> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<V: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<V> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_mesh<T: Real>(text: &str) -> Result<Triangulation<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let last_line = text.lines().count().max(1);

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "missing header 'pxmesh 1'"))?;
    if header != "pxmesh 1" {
        return Err(parse_err(ln, format!("expected header 'pxmesh 1', found '{header}'")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| parse_err(last_line, "missing counts line"))?;
    let mut tok = counts.split_whitespace();
    let nv: usize = field(tok.next(), ln, "vertex count")?;
    let nc: usize = field(tok.next(), ln, "cell count")?;
    if tok.next().is_some() {
        return Err(parse_err(ln, "trailing tokens after counts"));
    }

    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for found in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| {
            parse_err(last_line, format!("vertex section truncated: expected {nv} vertices, found {found}"))
        })?;
        let mut tok = l.split_whitespace();
        let x: T = field(tok.next(), ln, "x coordinate")?;
        let y: T = field(tok.next(), ln, "y coordinate")?;
        let flag: u8 = field(tok.next(), ln, "boundary flag")?;
        if flag > 1 || tok.next().is_some() {
            return Err(parse_err(ln, "vertex line must be 'x y flag' with flag 0 or 1"));
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        vertices.push([x, y]);
        flags.push(flag == 1);
    }
    let mut cells = Vec::with_capacity(nc);
    for found in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| {
            parse_err(last_line, format!("cell section truncated: expected {nc} cells, found {found}"))
        })?;
        let mut tok = l.split_whitespace();
        let c = [
            field(tok.next(), ln, "vertex index")?,
            field(tok.next(), ln, "vertex index")?,
            field(tok.next(), ln, "vertex index")?,
        ];
        if tok.next().is_some() {
            return Err(parse_err(ln, "cell line must have three indices"));
        }
        if let Some(&bad) = c.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        cells.push(c);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected content after the cell section"));
    }
    let mesh = Triangulation::new(vertices, cells)?;
    if let Some(v) = (0..nv).find(|&v| mesh.is_boundary(v) != flags[v]) {
        return Err(Error::Validation(format!("boundary flag of vertex {v} disagrees with the mesh topology")));
    }
    Ok(mesh)
}
