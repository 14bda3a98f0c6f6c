use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DofMap, Solution};

/// Full coefficient vectors in P2 node order (vertices, then edges).
#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    dim: usize,
    n_nodes: usize,
    velocity: Vec<f64>,
    pressure: Vec<f64>,
}

pub fn solution_to_string(sol: &Solution) -> String {
    let doc = SolutionDoc {
        dim: sol.dofs().dim(),
        n_nodes: sol.dofs().n_nodes(),
        velocity: sol.velocity().to_vec(),
        pressure: sol.pressure().to_vec(),
    };
    serde_json::to_string(&doc).expect("solution documents always serialize")
}

/// Parses a solution dump for the numbering `dofs`, checking its sizes.
pub fn solution_from_str(text: &str, dofs: DofMap, origin: &Path) -> Result<Solution> {
    let err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let doc: SolutionDoc = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    if doc.dim != dofs.dim() || doc.n_nodes != dofs.n_nodes() {
        return Err(err(format!(
            "solution is {}D with {} nodes, mesh is {}D with {} nodes",
            doc.dim,
            doc.n_nodes,
            dofs.dim(),
            dofs.n_nodes()
        )));
    }
    if doc.velocity.len() != dofs.n_velocity() || doc.pressure.len() != dofs.n_pressure() {
        return Err(err("coefficient vector length does not match the mesh".into()));
    }
    Ok(Solution::new(dofs, doc.velocity, doc.pressure))
}

pub fn write_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, solution_to_string(sol)).map_err(|e| Error::io(path, e))
}

pub fn read_solution(path: impl AsRef<Path>, dofs: DofMap) -> Result<Solution> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    solution_from_str(&text, dofs, path)
}
