//! Snapshot output: VTK XML unstructured-grid files (`.vtu`, ASCII).
//!
//! Each snapshot holds the mesh nodes as 3D points — longitude, latitude,
//! and the water level scaled by an exaggeration factor so waves measured
//! in meters are visible next to coordinates measured in degrees — the
//! triangles as cells, and two point-data arrays: the water level `u` and
//! the bathymetry `h_b`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::femcore::DofMap;
use crate::{Error, Result};

/// Default snapshot z-scale: degrees of displayed height per meter of
/// water level (a 6 m wave renders 0.006° ≈ 670 m tall at the equator).
pub const DEFAULT_EXAGGERATION: f64 = 1e-3;

/// VTK cell type code for a linear triangle.
const VTK_TRIANGLE: u8 = 5;

/// Writes one snapshot with the default exaggeration.
pub fn write_vtu(dofmap: &DofMap, u: &[f64], path: &Path) -> Result<()> {
    write_vtu_scaled(dofmap, u, DEFAULT_EXAGGERATION, path)
}

/// Writes one snapshot; `exaggeration` scales water level into the z
/// coordinate.
pub fn write_vtu_scaled(
    dofmap: &DofMap,
    u: &[f64],
    exaggeration: f64,
    path: &Path,
) -> Result<()> {
    if u.len() != dofmap.dof_count() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} values but the mesh has {} nodes",
            u.len(),
            dofmap.dof_count()
        )));
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    render(dofmap, u, exaggeration, &mut w)?;
    w.flush()?;
    Ok(())
}

fn render<W: Write>(dofmap: &DofMap, u: &[f64], exaggeration: f64, w: &mut W) -> Result<()> {
    let n_points = dofmap.dof_count();
    let n_cells = dofmap.triangles().len();

    writeln!(w, r#"<?xml version="1.0"?>"#)?;
    writeln!(
        w,
        r#"<VTKFile type="UnstructuredGrid" version="0.1" byte_order="LittleEndian">"#
    )?;
    writeln!(w, "  <UnstructuredGrid>")?;
    writeln!(
        w,
        r#"    <Piece NumberOfPoints="{n_points}" NumberOfCells="{n_cells}">"#
    )?;

    writeln!(w, r#"      <PointData Scalars="u">"#)?;
    writeln!(
        w,
        r#"        <DataArray type="Float64" Name="u" format="ascii">"#
    )?;
    for value in u {
        writeln!(w, "          {value}")?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(
        w,
        r#"        <DataArray type="Float64" Name="h_b" format="ascii">"#
    )?;
    for value in dofmap.h_b() {
        writeln!(w, "          {value}")?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(w, "      </PointData>")?;

    writeln!(w, "      <Points>")?;
    writeln!(
        w,
        r#"        <DataArray type="Float64" NumberOfComponents="3" format="ascii">"#
    )?;
    for i in 0..n_points {
        let (lon, lat) = dofmap.position(i);
        writeln!(w, "          {lon} {lat} {}", u[i] * exaggeration)?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(w, "      </Points>")?;

    writeln!(w, "      <Cells>")?;
    writeln!(
        w,
        r#"        <DataArray type="Int64" Name="connectivity" format="ascii">"#
    )?;
    for &(_, dofs) in dofmap.triangles() {
        writeln!(w, "          {} {} {}", dofs[0], dofs[1], dofs[2])?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(
        w,
        r#"        <DataArray type="Int64" Name="offsets" format="ascii">"#
    )?;
    for k in 1..=n_cells {
        writeln!(w, "          {}", 3 * k)?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(
        w,
        r#"        <DataArray type="UInt8" Name="types" format="ascii">"#
    )?;
    for _ in 0..n_cells {
        writeln!(w, "          {VTK_TRIANGLE}")?;
    }
    writeln!(w, "        </DataArray>")?;
    writeln!(w, "      </Cells>")?;

    writeln!(w, "    </Piece>")?;
    writeln!(w, "  </UnstructuredGrid>")?;
    writeln!(w, "</VTKFile>")?;
    Ok(())
}
