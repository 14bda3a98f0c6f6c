use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::IndicatorField;
use crate::fem::Solution;
use crate::mesh::Mesh;
use crate::model::ProblemSpec;

const VTK_TRIANGLE: u8 = 5;
const VTK_TETRA: u8 = 10;

/// Optional fields attached to a VTK file.
#[derive(Debug, Clone, Copy, Default)]
pub struct VtkFields<'a> {
    /// Enables the `k_inverse_norm` cell array.
    pub spec: Option<&'a ProblemSpec>,
    pub solution: Option<&'a Solution>,
    pub indicators: Option<&'a IndicatorField>,
}

/// Writes a legacy ASCII unstructured grid. Velocity is sampled at the vertices.
pub fn write_vtk_to(mut w: impl Write, mesh: &Mesh, fields: VtkFields) -> std::io::Result<()> {
    let d = mesh.dim();
    let nv = mesh.n_vertices();
    let ne = mesh.n_elements();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "stokes-brinkman {d}D mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {ne} {}", ne * (d + 2))?;
    for el in mesh.elements() {
        write!(w, "{}", d + 1)?;
        for v in el {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let ty = if d == 2 { VTK_TRIANGLE } else { VTK_TETRA };
    for _ in 0..ne {
        writeln!(w, "{ty}")?;
    }

    writeln!(w, "CELL_DATA {ne}")?;
    writeln!(w, "SCALARS region_id int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for r in mesh.regions() {
        writeln!(w, "{r}")?;
    }
    if let Some(spec) = fields.spec {
        writeln!(w, "SCALARS k_inverse_norm double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for r in mesh.regions() {
            let n = spec.k_inverse.get(r).map_or(f64::NAN, |k| k.norm());
            writeln!(w, "{n}")?;
        }
    }
    if let Some(ind) = fields.indicators {
        writeln!(w, "SCALARS eta double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for e in &ind.eta {
            writeln!(w, "{e}")?;
        }
    }

    if let Some(sol) = fields.solution {
        writeln!(w, "POINT_DATA {nv}")?;
        writeln!(w, "VECTORS velocity double")?;
        for v in 0..nv {
            let u = sol.vertex_velocity(v);
            writeln!(w, "{} {} {}", u[0], u[1], u[2])?;
        }
        writeln!(w, "SCALARS pressure double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for p in sol.pressure() {
            writeln!(w, "{p}")?;
        }
    }
    w.flush()
}

pub fn write_vtk(path: impl AsRef<Path>, mesh: &Mesh, fields: VtkFields) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_vtk_to(BufWriter::new(file), mesh, fields).map_err(|e| Error::io(path, e))
}
