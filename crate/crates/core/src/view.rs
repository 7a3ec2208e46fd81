//! Leaf and level views with consecutive index sets, plus persistent ids and
//! id-keyed data transfer helpers.

use std::collections::HashMap;

use crate::entity::{Entity, PersistentId};
use crate::error::{GridError, Result};
use crate::geometry::AffineGeometry;
use crate::grid::GridContainer;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewKind {
    Leaf,
    Level(usize),
}

const NONE: u32 = u32::MAX;

/// Consecutive zero-based numbering of the entities of one view, per
/// codimension.
#[derive(Debug, Clone)]
pub struct IndexSet {
    entities: Vec<Vec<Entity>>,
    // [codim][level][slot] -> index or NONE
    lookup: Vec<Vec<Vec<u32>>>,
}

impl IndexSet {
    fn build(grid: &GridContainer, entities: Vec<Vec<Entity>>) -> Self {
        let d = grid.dim();
        let lookup = entities
            .iter()
            .enumerate()
            .map(|(codim, list)| {
                let dim = d - codim;
                let mut table: Vec<Vec<u32>> = grid
                    .levels
                    .iter()
                    .map(|l| {
                        let n = match dim {
                            0 => l.vertices.len(),
                            x if x == d => l.elements.len(),
                            _ => l.edges.len(),
                        };
                        vec![NONE; n]
                    })
                    .collect();
                for (i, e) in list.iter().enumerate() {
                    table[e.level()][e.slot()] = i as u32;
                }
                table
            })
            .collect();
        IndexSet { entities, lookup }
    }

    pub fn size(&self, codim: usize) -> usize {
        self.entities.get(codim).map_or(0, Vec::len)
    }

    /// Index of `e` if it belongs to the view, without vertex resolution.
    pub fn get(&self, e: Entity, codim: usize) -> Option<usize> {
        let i = *self.lookup.get(codim)?.get(e.level())?.get(e.slot())?;
        (i != NONE).then_some(i as usize)
    }
}

/// A set of entities of the grid: the leaf entities or the entities of one
/// level. Views are snapshots and must be recreated after the grid changes.
#[derive(Clone)]
pub struct GridView<'g> {
    grid: &'g GridContainer,
    kind: ViewKind,
    index: IndexSet,
}

impl GridContainer {
    /// Leaf view: leaf elements and the (finest copies of the) sub-entities
    /// of leaf elements.
    pub fn leaf_view(&self) -> GridView<'_> {
        let d = self.dim();
        let mut elements = Vec::new();
        for (l, lv) in self.levels.iter().enumerate() {
            for (s, r) in lv.elements.iter().enumerate() {
                if r.alive && r.children.is_empty() {
                    elements.push(Entity::new(d, l, s));
                }
            }
        }
        let mut vertices: Vec<Entity> = elements
            .iter()
            .flat_map(|e| self.rec(e.level(), e.slot).vertices.iter().map(move |&v| (e.level(), v)))
            .map(|(l, v)| self.leaf_vertex(self.vertex(l, v)).expect("live corner"))
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        let mut per_codim = vec![elements.clone()];
        if d == 2 {
            let mut edges: Vec<Entity> = elements
                .iter()
                .flat_map(|e| self.rec(e.level(), e.slot).edges.iter().map(move |&s| self.edge(e.level(), s)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            per_codim.push(edges);
        }
        per_codim.push(vertices);
        GridView { grid: self, kind: ViewKind::Leaf, index: IndexSet::build(self, per_codim) }
    }

    /// All live entities of one level.
    pub fn level_view(&self, level: usize) -> GridView<'_> {
        let d = self.dim();
        let per_codim = (0..=d).map(|codim| self.level_entities(level, d - codim)).collect();
        GridView { grid: self, kind: ViewKind::Level(level), index: IndexSet::build(self, per_codim) }
    }

    /// Persistent ids of this grid.
    pub fn id_set(&self) -> IdSet<'_> {
        IdSet { grid: self }
    }
}

impl<'g> GridView<'g> {
    pub fn grid(&self) -> &'g GridContainer {
        self.grid
    }

    pub fn kind(&self) -> ViewKind {
        self.kind
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    fn check_codim(&self, codim: usize) -> Result<()> {
        let d = self.grid.dim();
        if codim > d {
            Err(GridError::CodimOutOfRange { codim, dim: d })
        } else {
            Ok(())
        }
    }

    /// Entities of codimension `codim`, ordered by their index.
    pub fn entities(&self, codim: usize) -> Result<&[Entity]> {
        self.check_codim(codim)?;
        Ok(&self.index.entities[codim])
    }

    pub fn elements(&self) -> &[Entity] {
        &self.index.entities[0]
    }

    pub fn vertices(&self) -> &[Entity] {
        &self.index.entities[self.grid.dim()]
    }

    pub fn size(&self, codim: usize) -> usize {
        self.index.size(codim)
    }

    /// Index of `e` within its codimension. In the leaf view a coarse copy
    /// of a vertex resolves to its finest copy.
    pub fn index(&self, e: Entity) -> Result<usize> {
        let d = self.grid.dim();
        if e.dim() > d {
            return Err(GridError::StaleEntity(e));
        }
        let codim = d - e.dim();
        if let Some(i) = self.index.get(e, codim) {
            return Ok(i);
        }
        if e.dim() == 0 && self.kind == ViewKind::Leaf && self.grid.contains(e) {
            let leaf = self.grid.leaf_vertex(e)?;
            if let Some(i) = self.index.get(leaf, codim) {
                return Ok(i);
            }
        }
        Err(GridError::StaleEntity(e))
    }

    pub fn contains(&self, e: Entity) -> bool {
        self.index(e).is_ok()
    }

    pub fn element_geometries(&self, exec: Execution) -> Vec<AffineGeometry> {
        par::map_slice(exec, self.elements(), |e| self.grid.geometry(*e).expect("live element"))
    }

    pub fn element_volumes(&self, exec: Execution) -> Result<Vec<f64>> {
        par::map_slice(exec, self.elements(), |e| self.grid.geometry(*e)?.volume()).into_iter().collect()
    }

    /// Copies index-addressed data into an id-keyed map.
    pub fn store<T: Clone>(&self, codim: usize, values: &[T]) -> Result<HashMap<PersistentId, T>> {
        let ents = self.entities(codim)?;
        assert_eq!(ents.len(), values.len(), "one value per entity expected");
        ents.iter().zip(values).map(|(e, v)| Ok((self.grid.id(*e)?, v.clone()))).collect()
    }

    /// Rebuilds an index-addressed array from an id-keyed map; entities
    /// without stored data get `fallback(entity)`.
    pub fn restore<T: Clone>(
        &self,
        codim: usize,
        map: &HashMap<PersistentId, T>,
        mut fallback: impl FnMut(Entity) -> T,
    ) -> Result<Vec<T>> {
        self.entities(codim)?
            .iter()
            .map(|e| Ok(map.get(&self.grid.id(*e)?).cloned().unwrap_or_else(|| fallback(*e))))
            .collect()
    }
}

/// Persistent numbering of all entities of a grid.
#[derive(Clone, Copy)]
pub struct IdSet<'g> {
    grid: &'g GridContainer,
}

impl IdSet<'_> {
    pub fn id(&self, e: Entity) -> Result<PersistentId> {
        self.grid.id(e)
    }
}
