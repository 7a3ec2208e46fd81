//! Mesh input (Gmsh MSH 2.2 ASCII) and output (legacy ASCII VTK).

mod gmsh;
mod vtk;

pub use gmsh::{read_gmsh, read_gmsh_file, GmshMesh};
pub use vtk::{write_vtk, write_vtk_file};

use thiserror::Error;

use crate::GridError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported file: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("data array '{name}' has {got} values, expected {expected}")]
    DataLength { name: String, expected: usize, got: usize },
}
