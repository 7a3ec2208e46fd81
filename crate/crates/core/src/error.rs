use thiserror::Error;

/// Errors raised by grid construction, queries and modification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid configuration: dim={dim}, world_dim={world_dim}")]
    InvalidConfig { dim: usize, world_dim: usize },
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown vertex index {0}")]
    UnknownVertex(usize),
    #[error("vertex index {0} repeated within one element")]
    RepeatedVertex(usize),
    #[error("geometry type {0:?} is not a simplex of the grid dimension")]
    NotASimplex(crate::GeometryType),
    #[error("element has {got} vertices, a {dim}-simplex needs {expected}")]
    WrongVertexCount { dim: usize, expected: usize, got: usize },
    #[error("no elements were inserted")]
    EmptyGrid,
    #[error("codimension {codim} out of range for a grid of dimension {dim}")]
    CodimOutOfRange { codim: usize, dim: usize },
    #[error("sub-entity index {index} out of range ({count} available)")]
    SubEntityOutOfRange { index: usize, count: usize },
    #[error("geometry is degenerate (zero measure)")]
    SingularGeometry,
    #[error("entity {0:?} is not part of this view or no longer exists")]
    StaleEntity(crate::Entity),
    #[error("neighbor index {index} out of range ({count} neighbors)")]
    NeighborIndex { index: usize, count: usize },
    #[error("lifecycle error: {0}")]
    Lifecycle(&'static str),
    #[error("element {0:?} is not a leaf")]
    NotLeaf(crate::Entity),
    #[error("entity {0:?} is not an element of this grid")]
    NotAnElement(crate::Entity),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;
