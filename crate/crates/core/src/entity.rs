use std::fmt;

use crate::error::{GridError, Result};

/// Grid dimension `d` and embedding dimension `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridConfig {
    dim: usize,
    world_dim: usize,
}

impl GridConfig {
    pub fn new(dim: usize, world_dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) || world_dim < dim {
            return Err(GridError::InvalidConfig { dim, world_dim });
        }
        Ok(GridConfig { dim, world_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn world_dim(&self) -> usize {
        self.world_dim
    }
}

/// Reference element kind handed to the insertion methods. Only simplices
/// of the grid dimension are accepted; the cube variant exists so callers
/// translating from other formats get a proper error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryType {
    Simplex(usize),
    Cube(usize),
}

impl GeometryType {
    pub fn line() -> Self {
        GeometryType::Simplex(1)
    }

    pub fn triangle() -> Self {
        GeometryType::Simplex(2)
    }
}

/// Handle of a vertex, edge or element: the entity dimension plus its
/// (level, slot) position in the per-level arena. Slots are never reused,
/// so a handle to a removed entity stays detectably stale.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entity {
    pub(crate) dim: u8,
    pub(crate) level: u32,
    pub(crate) slot: u32,
}

impl Entity {
    pub(crate) fn new(dim: usize, level: usize, slot: usize) -> Self {
        Entity { dim: dim as u8, level: level as u32, slot: slot as u32 }
    }

    /// Dimension of the entity itself (0 for vertices).
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn level(&self) -> usize {
        self.level as usize
    }

    pub fn slot(&self) -> usize {
        self.slot as usize
    }
}

impl fmt::Debug for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.dim {
            0 => "V",
            1 => "E",
            _ => "T",
        };
        write!(f, "{kind}{}@{}", self.slot, self.level)
    }
}

/// Persistent entity id. Stable while the entity exists; never reused.
/// Copies of a vertex on finer levels share the id of the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PersistentId(pub(crate) u64);

impl PersistentId {
    pub fn raw(&self) -> u64 {
        self.0
    }
}

impl fmt::Display for PersistentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
