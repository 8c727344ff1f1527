//! CSV, legacy VTK and JSON writers.

use std::io::Write;

use crate::analysis::{ConvergenceRow, CrossSection};
use crate::error::Result;
use crate::fe_space::DofMap;
use crate::mesh::CellKind;
use crate::scalar::Scalar;

pub const TABLE_HEADER: &str = "N,Itr,err_L2,EOC,err_h,EOC,norm_s_minus,EOC";
pub const SECTION_HEADER: &str = "t,x,y,value";

fn rate(r: Option<f64>) -> String {
    r.map_or_else(String::new, |v| format!("{v:.2}"))
}

fn iterations(i: Option<usize>) -> String {
    i.map_or_else(|| "NC".to_string(), |v| v.to_string())
}

/// Convergence table with rates to two decimals and errors to seven
/// significant digits. Missing rates are blank.
pub fn write_table_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> Result<()> {
    writeln!(w, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6e},{},{:.6e},{},{:.6e},{}",
            r.n,
            iterations(r.iterations),
            r.err_l2,
            rate(r.eoc_l2),
            r.err_energy,
            rate(r.eoc_energy),
            r.norm_s_minus,
            rate(r.eoc_s)
        )?;
    }
    Ok(())
}

/// Aligned text rendering of a convergence table.
pub fn format_table(rows: &[ConvergenceRow]) -> String {
    let dash = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut out = format!(
        "{:>5} {:>5} {:>10} {:>6} {:>10} {:>6} {:>12} {:>6}\n",
        "N", "Itr", "err_L2", "EOC", "err_h", "EOC", "|u-|_s", "EOC"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>5} {:>5} {:>10.2e} {:>6} {:>10.2e} {:>6} {:>12.2e} {:>6}\n",
            r.n,
            iterations(r.iterations),
            r.err_l2,
            dash(r.eoc_l2),
            r.err_energy,
            dash(r.eoc_energy),
            r.norm_s_minus,
            dash(r.eoc_s)
        ));
    }
    out
}

pub fn write_section_csv<W: Write>(section: &CrossSection, mut w: W) -> Result<()> {
    writeln!(w, "{SECTION_HEADER}")?;
    for s in &section.samples {
        writeln!(w, "{:.10},{:.10},{:.10},{:.10e}", s.t, s.x, s.y, s.value)?;
    }
    Ok(())
}

/// Global dof sitting on each mesh vertex.
pub fn vertex_dofs(dofs: &DofMap) -> Vec<usize> {
    let mesh = dofs.mesh();
    let mut out = vec![usize::MAX; mesh.vertices.len()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        for (i, &v) in cell.vertices.iter().enumerate() {
            out[v] = dofs.cell_dofs(c)[i];
        }
    }
    out
}

/// Legacy ASCII VTK unstructured grid with one point-data scalar per field,
/// sampled at the mesh vertices.
pub fn write_vtk<S: Scalar, W: Write>(
    dofs: &DofMap,
    fields: &[(&str, &[S])],
    title: &str,
    mut w: W,
) -> Result<()> {
    let mesh = dofs.mesh();
    let vd = vertex_dofs(dofs);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let size: usize = mesh.cells.iter().map(|c| c.vertices.len() + 1).sum();
    writeln!(w, "CELLS {} {}", mesh.cells.len(), size)?;
    for c in &mesh.cells {
        let ids: Vec<String> = c.vertices.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{} {}", c.vertices.len(), ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.cells.len())?;
    for c in &mesh.cells {
        let t = match c.kind {
            CellKind::Triangle => 5,
            CellKind::Quadrilateral => 9,
        };
        writeln!(w, "{t}")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.vertices.len())?;
    for (name, values) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for &d in &vd {
            writeln!(w, "{:e}", values[d].to_f64_lossy())?;
        }
    }
    Ok(())
}
