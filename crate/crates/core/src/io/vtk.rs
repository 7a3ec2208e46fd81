use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::GridView;

fn check_len(name: &str, values: &[f64], expected: usize) -> Result<(), IoError> {
    if values.len() != expected {
        return Err(IoError::DataLength { name: name.to_string(), expected, got: values.len() });
    }
    Ok(())
}

fn scalars<W: Write>(out: &mut W, name: &str, values: &[f64]) -> std::io::Result<()> {
    let name: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    writeln!(out, "SCALARS {name} double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// Writes a view as a legacy ASCII VTK unstructured grid. Points and cells
/// appear in index-set order; points always get three components. Values are
/// printed in shortest round-trip form, so output is byte-deterministic.
pub fn write_vtk<W: Write>(
    view: &GridView<'_>,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
    out: &mut W,
) -> Result<(), IoError> {
    let grid = view.grid();
    let d = grid.dim();
    let np = view.size(d);
    let nc = view.size(0);
    for (name, v) in point_data {
        check_len(name, v, np)?;
    }
    for (name, v) in cell_data {
        check_len(name, v, nc)?;
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "netgrid")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {np} double")?;
    for &v in view.vertices() {
        let x = grid.vertex_coords(v)?;
        let c: Vec<String> = (0..3).map(|i| x.get(i).copied().unwrap_or(0.0).to_string()).collect();
        writeln!(out, "{}", c.join(" "))?;
    }
    writeln!(out, "CELLS {nc} {}", nc * (d + 2))?;
    for &e in view.elements() {
        let mut line = (d + 1).to_string();
        for v in grid.corners(e)? {
            line.push(' ');
            line.push_str(&view.index(v)?.to_string());
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    let cell_type = if d == 1 { 3 } else { 5 };
    for _ in 0..nc {
        writeln!(out, "{cell_type}")?;
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {np}")?;
        for (name, v) in point_data {
            scalars(out, name, v)?;
        }
    }
    if !cell_data.is_empty() {
        writeln!(out, "CELL_DATA {nc}")?;
        for (name, v) in cell_data {
            scalars(out, name, v)?;
        }
    }
    Ok(())
}

pub fn write_vtk_file(
    view: &GridView<'_>,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(view, point_data, cell_data, &mut f)?;
    f.flush()?;
    Ok(())
}
