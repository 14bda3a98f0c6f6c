//! File formats: JSON meshes, problem configurations and solutions, VTK output and CSV logs.

mod config;
mod log;
mod mesh;
mod solution;
mod vtk;

pub use config::{problem_from_str, read_problem};
pub use log::{write_log, write_log_to};
pub use mesh::{mesh_from_str, mesh_to_string, read_mesh, write_mesh};
pub use solution::{read_solution, solution_from_str, solution_to_string, write_solution};
pub use vtk::{write_vtk, write_vtk_to, VtkFields};
