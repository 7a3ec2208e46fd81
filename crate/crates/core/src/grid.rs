//! Entity storage: per-level arenas of vertices, edges (facets of 2D grids)
//! and elements, linked into refinement trees.

use std::collections::{HashMap, HashSet};

use smallvec::SmallVec;

use crate::entity::{Entity, GridConfig, PersistentId};
use crate::error::{GridError, Result};
use crate::geometry::{AffineGeometry, Coords};
use crate::growth::{GrowReport, GrowthQueue};
use crate::param::Parametrization;

/// Local edges of a triangle as pairs of local corner numbers.
pub const TRIANGLE_EDGES: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];

/// Corners of the reference simplex of dimension 1 and 2.
pub(crate) fn reference_corners(dim: usize) -> SmallVec<[[f64; 2]; 3]> {
    match dim {
        1 => SmallVec::from_slice(&[[0.0, 0.0], [1.0, 0.0]]),
        _ => SmallVec::from_slice(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    }
}

#[derive(Clone)]
pub(crate) struct VertexRecord {
    pub coords: Coords,
    /// Copy of this vertex on the next coarser level.
    pub father: Option<u32>,
    /// Copy of this vertex on the next finer level.
    pub son: Option<u32>,
    /// Elements of the same level having this vertex as a corner.
    pub incident: SmallVec<[u32; 4]>,
    pub id: PersistentId,
    pub alive: bool,
}

/// Edge of a two-dimensional grid. Edges form their own binary refinement
/// tree: child 0 runs from (the son of) `vertices[0]` to the midpoint,
/// child 1 from the midpoint to (the son of) `vertices[1]`.
#[derive(Clone)]
pub(crate) struct EdgeRecord {
    pub vertices: [u32; 2],
    pub father: Option<u32>,
    pub children: Option<[u32; 2]>,
    /// Triangles of the same level containing this edge; any number.
    pub incident: SmallVec<[u32; 2]>,
    pub id: PersistentId,
    pub alive: bool,
}

#[derive(Clone)]
pub(crate) struct ElementRecord {
    pub vertices: SmallVec<[u32; 3]>,
    /// Edge slots (2D only), numbered by `TRIANGLE_EDGES`.
    pub edges: SmallVec<[u32; 3]>,
    pub father: Option<u32>,
    pub children: SmallVec<[u32; 4]>,
    pub mark: i8,
    pub is_new: bool,
    pub might_vanish: bool,
    pub macro_ancestor: Entity,
    /// Corner positions in the reference simplex of the macro ancestor.
    pub macro_local: SmallVec<[[f64; 2]; 3]>,
    /// Only set on elements without a father.
    pub param: Option<Parametrization>,
    pub id: PersistentId,
    pub alive: bool,
}

#[derive(Default, Clone)]
pub(crate) struct Level {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    pub elements: Vec<ElementRecord>,
    pub edge_lookup: HashMap<(u32, u32), u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Idle,
    PreAdapted,
    Adapted,
    Grown,
}

/// Owner of the complete entity hierarchy of a network grid.
///
/// Elements are edges for `dim == 1` and triangles for `dim == 2`. Any
/// number of elements may share a facet. Read access is `Sync`; all
/// mutation goes through `&mut self`.
#[derive(Clone)]
pub struct GridContainer {
    pub(crate) config: GridConfig,
    pub(crate) levels: Vec<Level>,
    pub(crate) next_id: u64,
    pub(crate) phase: Phase,
    pub(crate) queue: GrowthQueue,
    pub(crate) report: GrowReport,
    pub(crate) factory_vertices: Vec<Option<u32>>,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl GridContainer {
    pub(crate) fn empty(config: GridConfig) -> Self {
        GridContainer {
            config,
            levels: vec![Level::default()],
            next_id: 0,
            phase: Phase::Idle,
            queue: GrowthQueue::default(),
            report: GrowReport::default(),
            factory_vertices: Vec::new(),
        }
    }

    pub fn config(&self) -> GridConfig {
        self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn world_dim(&self) -> usize {
        self.config.world_dim()
    }

    /// Highest level holding at least one element.
    pub fn max_level(&self) -> usize {
        self.levels.iter().rposition(|l| l.elements.iter().any(|e| e.alive)).unwrap_or(0)
    }

    // ---------------------------------------------------------------- lookup

    pub(crate) fn vrec(&self, level: usize, slot: u32) -> &VertexRecord {
        &self.levels[level].vertices[slot as usize]
    }

    pub(crate) fn vrec_mut(&mut self, level: usize, slot: u32) -> &mut VertexRecord {
        &mut self.levels[level].vertices[slot as usize]
    }

    pub(crate) fn erec(&self, level: usize, slot: u32) -> &EdgeRecord {
        &self.levels[level].edges[slot as usize]
    }

    pub(crate) fn erec_mut(&mut self, level: usize, slot: u32) -> &mut EdgeRecord {
        &mut self.levels[level].edges[slot as usize]
    }

    pub(crate) fn rec(&self, level: usize, slot: u32) -> &ElementRecord {
        &self.levels[level].elements[slot as usize]
    }

    pub(crate) fn rec_mut(&mut self, level: usize, slot: u32) -> &mut ElementRecord {
        &mut self.levels[level].elements[slot as usize]
    }

    pub(crate) fn element(&self, level: usize, slot: u32) -> Entity {
        Entity::new(self.dim(), level, slot as usize)
    }

    pub(crate) fn vertex(&self, level: usize, slot: u32) -> Entity {
        Entity::new(0, level, slot as usize)
    }

    pub(crate) fn edge(&self, level: usize, slot: u32) -> Entity {
        Entity::new(1, level, slot as usize)
    }

    /// Whether the handle refers to a live entity of this grid.
    pub fn contains(&self, e: Entity) -> bool {
        let Some(level) = self.levels.get(e.level()) else {
            return false;
        };
        let slot = e.slot();
        match e.dim() {
            0 => level.vertices.get(slot).is_some_and(|r| r.alive),
            d if d == self.dim() => level.elements.get(slot).is_some_and(|r| r.alive),
            1 => level.edges.get(slot).is_some_and(|r| r.alive),
            _ => false,
        }
    }

    pub(crate) fn check(&self, e: Entity) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(GridError::StaleEntity(e))
        }
    }

    pub(crate) fn check_element(&self, e: Entity) -> Result<&ElementRecord> {
        if e.dim() != self.dim() {
            return Err(GridError::NotAnElement(e));
        }
        self.check(e)?;
        Ok(self.rec(e.level(), e.slot))
    }

    pub fn is_element(&self, e: Entity) -> bool {
        e.dim() == self.dim()
    }

    // ------------------------------------------------------------- hierarchy

    pub fn level(&self, e: Entity) -> usize {
        e.level()
    }

    /// Father in the refinement tree. For vertices this is the copy on the
    /// next coarser level; edge-midpoint vertices have none.
    pub fn father(&self, e: Entity) -> Result<Option<Entity>> {
        self.check(e)?;
        let l = e.level();
        let up = |s: Option<u32>| s.map(|s| Entity::new(e.dim(), l - 1, s as usize));
        Ok(match e.dim() {
            0 => up(self.vrec(l, e.slot).father),
            d if d == self.dim() => up(self.rec(l, e.slot).father),
            _ => up(self.erec(l, e.slot).father),
        })
    }

    /// Children in the refinement tree (the finer copy for vertices).
    pub fn children(&self, e: Entity) -> Result<Vec<Entity>> {
        self.check(e)?;
        let l = e.level();
        let down = |s: u32| Entity::new(e.dim(), l + 1, s as usize);
        Ok(match e.dim() {
            0 => self.vrec(l, e.slot).son.into_iter().map(down).collect(),
            d if d == self.dim() => self.rec(l, e.slot).children.iter().copied().map(down).collect(),
            _ => self.erec(l, e.slot).children.into_iter().flatten().map(down).collect(),
        })
    }

    pub fn is_leaf(&self, e: Entity) -> bool {
        if !self.contains(e) {
            return false;
        }
        let l = e.level();
        match e.dim() {
            0 => self.vrec(l, e.slot).son.is_none(),
            d if d == self.dim() => self.rec(l, e.slot).children.is_empty(),
            _ => self.erec(l, e.slot).children.is_none(),
        }
    }

    /// Number of sub-entities of grid codimension `codim`.
    pub fn sub_entity_count(&self, e: Entity, codim: usize) -> Result<usize> {
        let d = self.dim();
        if codim > d || d - codim > e.dim() {
            return Err(GridError::CodimOutOfRange { codim, dim: d });
        }
        let sub_dim = d - codim;
        Ok(match (e.dim(), sub_dim) {
            (k, s) if k == s => 1,
            (2, 1) => 3,
            (2, 0) => 3,
            (1, 0) => 2,
            _ => unreachable!(),
        })
    }

    /// The `i`-th sub-entity of grid codimension `codim`. Corners follow the
    /// vertex order given at insertion; triangle edges are numbered
    /// `(0,1), (0,2), (1,2)`.
    pub fn sub_entity(&self, e: Entity, codim: usize, i: usize) -> Result<Entity> {
        self.check(e)?;
        let count = self.sub_entity_count(e, codim)?;
        if i >= count {
            return Err(GridError::SubEntityOutOfRange { index: i, count });
        }
        let sub_dim = self.dim() - codim;
        let l = e.level();
        if sub_dim == e.dim() {
            return Ok(e);
        }
        Ok(match (e.dim(), sub_dim) {
            (_, 0) if e.dim() == self.dim() => self.vertex(l, self.rec(l, e.slot).vertices[i]),
            (1, 0) => self.vertex(l, self.erec(l, e.slot).vertices[i]),
            (2, 1) => self.edge(l, self.rec(l, e.slot).edges[i]),
            _ => unreachable!(),
        })
    }

    /// Corner vertices of any entity, in local order.
    pub fn corners(&self, e: Entity) -> Result<SmallVec<[Entity; 3]>> {
        self.check(e)?;
        let l = e.level();
        Ok(match e.dim() {
            0 => SmallVec::from_slice(&[e]),
            d if d == self.dim() => self.rec(l, e.slot).vertices.iter().map(|&s| self.vertex(l, s)).collect(),
            _ => self.erec(l, e.slot).vertices.iter().map(|&s| self.vertex(l, s)).collect(),
        })
    }

    pub fn vertex_coords(&self, v: Entity) -> Result<&Coords> {
        if v.dim() != 0 {
            return Err(GridError::CodimOutOfRange { codim: self.dim() - v.dim(), dim: self.dim() });
        }
        self.check(v)?;
        Ok(&self.vrec(v.level(), v.slot).coords)
    }

    /// Affine geometry of any entity.
    pub fn geometry(&self, e: Entity) -> Result<AffineGeometry> {
        let corners = self.corners(e)?;
        AffineGeometry::new(corners.iter().map(|v| self.vrec(v.level(), v.slot).coords.clone()))
    }

    pub fn id(&self, e: Entity) -> Result<PersistentId> {
        self.check(e)?;
        let l = e.level();
        Ok(match e.dim() {
            0 => self.vrec(l, e.slot).id,
            d if d == self.dim() => self.rec(l, e.slot).id,
            _ => self.erec(l, e.slot).id,
        })
    }

    /// Elements of the same level having `v` as a corner.
    pub fn incident_elements(&self, v: Entity) -> Result<Vec<Entity>> {
        self.check(v)?;
        if v.dim() != 0 {
            return Err(GridError::CodimOutOfRange { codim: self.dim() - v.dim(), dim: self.dim() });
        }
        let l = v.level();
        Ok(self.vrec(l, v.slot).incident.iter().map(|&s| self.element(l, s)).collect())
    }

    /// Triangles of the same level containing the edge (2D grids).
    pub fn incident_triangles(&self, edge: Entity) -> Result<Vec<Entity>> {
        if self.dim() != 2 || edge.dim() != 1 {
            return Err(GridError::CodimOutOfRange { codim: self.dim().saturating_sub(edge.dim()), dim: self.dim() });
        }
        self.check(edge)?;
        let l = edge.level();
        Ok(self.erec(l, edge.slot).incident.iter().map(|&s| self.element(l, s)).collect())
    }

    pub fn is_new(&self, e: Entity) -> Result<bool> {
        Ok(self.check_element(e)?.is_new)
    }

    pub fn might_vanish(&self, e: Entity) -> Result<bool> {
        Ok(self.check_element(e)?.might_vanish)
    }

    /// Root of the element's refinement tree.
    pub fn macro_ancestor(&self, e: Entity) -> Result<Entity> {
        Ok(self.check_element(e)?.macro_ancestor)
    }

    /// Corner positions of `e` in the reference simplex of its macro ancestor.
    pub fn macro_local_corners(&self, e: Entity) -> Result<Vec<Coords>> {
        let d = self.dim();
        Ok(self.check_element(e)?.macro_local.iter().map(|p| Coords::from_slice(&p[..d])).collect())
    }

    /// Parametrization attached to the element's macro ancestor.
    pub fn parametrization(&self, e: Entity) -> Result<Option<Parametrization>> {
        let m = self.check_element(e)?.macro_ancestor;
        Ok(self.rec(m.level(), m.slot).param.clone())
    }

    /// All copies of a vertex across levels, coarsest first.
    pub fn vertex_chain(&self, v: Entity) -> Result<Vec<Entity>> {
        self.check(v)?;
        let mut l = v.level();
        let mut s = v.slot;
        while let Some(f) = self.vrec(l, s).father {
            l -= 1;
            s = f;
        }
        let mut chain = vec![self.vertex(l, s)];
        while let Some(son) = self.vrec(l, s).son {
            l += 1;
            s = son;
            chain.push(self.vertex(l, s));
        }
        Ok(chain)
    }

    /// Finest copy of a vertex.
    pub fn leaf_vertex(&self, v: Entity) -> Result<Entity> {
        self.check(v)?;
        let (mut l, mut s) = (v.level(), v.slot);
        while let Some(son) = self.vrec(l, s).son {
            l += 1;
            s = son;
        }
        Ok(self.vertex(l, s))
    }

    /// Level-0 (or coarsest) copy of a vertex.
    pub fn root_vertex(&self, v: Entity) -> Result<Entity> {
        Ok(self.vertex_chain(v)?[0])
    }

    /// Live entities of dimension `dim` on `level`, in slot order.
    pub fn level_entities(&self, level: usize, dim: usize) -> Vec<Entity> {
        let Some(lv) = self.levels.get(level) else {
            return Vec::new();
        };
        let alive: Vec<usize> = match dim {
            0 => alive_slots(lv.vertices.iter().map(|r| r.alive)),
            d if d == self.dim() => alive_slots(lv.elements.iter().map(|r| r.alive)),
            1 => alive_slots(lv.edges.iter().map(|r| r.alive)),
            _ => Vec::new(),
        };
        alive.into_iter().map(|s| Entity::new(dim, level, s)).collect()
    }

    /// Level-0 vertex created from the `i`-th factory vertex, if it was used.
    pub fn factory_vertex(&self, i: usize) -> Option<Entity> {
        self.factory_vertices.get(i).copied().flatten().map(|s| self.vertex(0, s)).filter(|v| self.contains(*v))
    }

    /// Level-0 element created from the `i`-th factory element.
    pub fn factory_element(&self, i: usize) -> Option<Entity> {
        let e = self.element(0, i as u32);
        self.contains(e).then_some(e)
    }

    // -------------------------------------------------------------- mutation

    pub(crate) fn fresh_id(&mut self) -> PersistentId {
        let id = PersistentId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn ensure_level(&mut self, level: usize) {
        while self.levels.len() <= level {
            self.levels.push(Level::default());
        }
    }

    pub(crate) fn add_vertex(&mut self, level: usize, coords: Coords, father: Option<u32>) -> u32 {
        self.ensure_level(level);
        let id = match father {
            Some(f) => self.vrec(level - 1, f).id,
            None => self.fresh_id(),
        };
        let lv = &mut self.levels[level];
        lv.vertices.push(VertexRecord { coords, father, son: None, incident: SmallVec::new(), id, alive: true });
        (lv.vertices.len() - 1) as u32
    }

    /// Copy of a vertex on the next finer level, created on demand.
    pub(crate) fn ensure_son(&mut self, level: usize, slot: u32) -> u32 {
        if let Some(s) = self.vrec(level, slot).son {
            return s;
        }
        let coords = self.vrec(level, slot).coords.clone();
        let s = self.add_vertex(level + 1, coords, Some(slot));
        self.vrec_mut(level, slot).son = Some(s);
        s
    }

    pub(crate) fn find_edge(&self, level: usize, a: u32, b: u32) -> Option<u32> {
        self.levels.get(level)?.edge_lookup.get(&edge_key(a, b)).copied()
    }

    pub(crate) fn add_edge(&mut self, level: usize, a: u32, b: u32, father: Option<u32>) -> u32 {
        let id = self.fresh_id();
        let lv = &mut self.levels[level];
        lv.edges.push(EdgeRecord {
            vertices: [a, b],
            father,
            children: None,
            incident: SmallVec::new(),
            id,
            alive: true,
        });
        let slot = (lv.edges.len() - 1) as u32;
        lv.edge_lookup.insert(edge_key(a, b), slot);
        slot
    }

    pub(crate) fn find_or_add_edge(&mut self, level: usize, a: u32, b: u32) -> u32 {
        match self.find_edge(level, a, b) {
            Some(s) => s,
            None => self.add_edge(level, a, b, None),
        }
    }

    /// Creates an element and registers it with its vertices and edges.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn add_element(
        &mut self,
        level: usize,
        vertices: SmallVec<[u32; 3]>,
        father: Option<u32>,
        macro_ancestor: Option<Entity>,
        macro_local: SmallVec<[[f64; 2]; 3]>,
        param: Option<Parametrization>,
        is_new: bool,
    ) -> u32 {
        self.ensure_level(level);
        let slot = self.levels[level].elements.len() as u32;
        let mut edges = SmallVec::new();
        if self.dim() == 2 {
            for [a, b] in TRIANGLE_EDGES {
                let e = self.find_or_add_edge(level, vertices[a], vertices[b]);
                self.erec_mut(level, e).incident.push(slot);
                edges.push(e);
            }
        }
        for &v in &vertices {
            self.vrec_mut(level, v).incident.push(slot);
        }
        let id = self.fresh_id();
        let me = self.element(level, slot);
        self.levels[level].elements.push(ElementRecord {
            vertices,
            edges,
            father,
            children: SmallVec::new(),
            mark: 0,
            is_new,
            might_vanish: false,
            macro_ancestor: macro_ancestor.unwrap_or(me),
            macro_local,
            param,
            id,
            alive: true,
        });
        if let Some(f) = father {
            self.rec_mut(level - 1, f).children.push(slot);
        }
        slot
    }

    /// Removes an element and unlinks it from its father, vertices and
    /// edges. Sub-entities left without users are collected separately.
    pub(crate) fn kill_element(&mut self, level: usize, slot: u32) {
        let rec = self.rec(level, slot).clone();
        debug_assert!(rec.children.is_empty());
        for &v in &rec.vertices {
            self.vrec_mut(level, v).incident.retain(|s| *s != slot);
        }
        for &e in &rec.edges {
            self.erec_mut(level, e).incident.retain(|s| *s != slot);
        }
        if let Some(f) = rec.father {
            self.rec_mut(level - 1, f).children.retain(|s| *s != slot);
        }
        let r = self.rec_mut(level, slot);
        r.alive = false;
        r.param = None;
    }

    /// Removes edges and vertices no longer used by any element, finest
    /// level first. Split edges lose their children only when both halves
    /// are unused.
    pub(crate) fn collect_garbage(&mut self) {
        for level in (0..self.levels.len()).rev() {
            if self.dim() == 2 {
                let n = self.levels[level].edges.len();
                for s in 0..n as u32 {
                    if !self.edge_removable(level, s) || !self.erec(level, s).alive {
                        continue;
                    }
                    match self.erec(level, s).father {
                        Some(f) => {
                            let [c0, c1] = self.erec(level - 1, f).children.expect("child edge without split father");
                            if self.edge_removable(level, c0) && self.edge_removable(level, c1) {
                                self.kill_edge(level, c0);
                                self.kill_edge(level, c1);
                                self.erec_mut(level - 1, f).children = None;
                            }
                        }
                        None => self.kill_edge(level, s),
                    }
                }
            }
            let used_by_edges: HashSet<u32> =
                self.levels[level].edges.iter().filter(|e| e.alive).flat_map(|e| e.vertices).collect();
            let n = self.levels[level].vertices.len();
            for s in 0..n as u32 {
                let v = self.vrec(level, s);
                if v.alive && v.incident.is_empty() && v.son.is_none() && !used_by_edges.contains(&s) {
                    let father = v.father;
                    self.vrec_mut(level, s).alive = false;
                    if let Some(f) = father {
                        self.vrec_mut(level - 1, f).son = None;
                    }
                }
            }
        }
        while self.levels.len() > 1
            && self
                .levels
                .last()
                .is_some_and(|l| l.vertices.iter().all(|r| !r.alive) && l.elements.iter().all(|r| !r.alive))
        {
            self.levels.pop();
        }
    }

    fn edge_removable(&self, level: usize, s: u32) -> bool {
        let e = self.erec(level, s);
        e.alive && e.incident.is_empty() && e.children.is_none()
    }

    fn kill_edge(&mut self, level: usize, s: u32) {
        let [a, b] = self.erec(level, s).vertices;
        let lv = &mut self.levels[level];
        if lv.edge_lookup.get(&edge_key(a, b)) == Some(&s) {
            lv.edge_lookup.remove(&edge_key(a, b));
        }
        lv.edges[s as usize].alive = false;
    }

    // ----------------------------------------------------------------- audit

    /// Full topology consistency check. Returns a description of the first
    /// violation found.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let d = self.dim();
        let max_children = 1usize << d;
        let mut ids: HashMap<PersistentId, Entity> = HashMap::new();
        for (l, lv) in self.levels.iter().enumerate() {
            for (s, r) in lv.elements.iter().enumerate().filter(|(_, r)| r.alive) {
                let me = Entity::new(d, l, s);
                let s = s as u32;
                if r.vertices.len() != d + 1 {
                    return Err(format!("{me:?} has {} corners", r.vertices.len()));
                }
                for &v in &r.vertices {
                    let vr = lv.vertices.get(v as usize).ok_or(format!("{me:?}: dangling vertex"))?;
                    if !vr.alive || !vr.incident.contains(&s) {
                        return Err(format!("{me:?}: vertex {v} dead or missing incidence"));
                    }
                }
                if d == 2 {
                    for (k, &e) in r.edges.iter().enumerate() {
                        let er = &lv.edges[e as usize];
                        let [a, b] = TRIANGLE_EDGES[k];
                        let pair = edge_key(r.vertices[a], r.vertices[b]);
                        if !er.alive || edge_key(er.vertices[0], er.vertices[1]) != pair || !er.incident.contains(&s) {
                            return Err(format!("{me:?}: edge {k} inconsistent"));
                        }
                    }
                }
                if r.children.len() > max_children {
                    return Err(format!("{me:?} has {} children", r.children.len()));
                }
                for &c in &r.children {
                    let cr = self.levels.get(l + 1).and_then(|n| n.elements.get(c as usize));
                    if !cr.is_some_and(|cr| cr.alive && cr.father == Some(s)) {
                        return Err(format!("{me:?}: child {c} not reciprocal"));
                    }
                }
                if let Some(f) = r.father {
                    let fr = self.rec(l - 1, f);
                    if !fr.alive || !fr.children.contains(&s) {
                        return Err(format!("{me:?}: father {f} not reciprocal"));
                    }
                }
                if !self.contains(r.macro_ancestor) {
                    return Err(format!("{me:?}: macro ancestor gone"));
                }
                if ids.insert(r.id, me).is_some() {
                    return Err(format!("{me:?}: duplicate id {}", r.id));
                }
            }
            for (s, r) in lv.edges.iter().enumerate().filter(|(_, r)| r.alive) {
                let me = Entity::new(1, l, s);
                for &t in &r.incident {
                    let tr = &lv.elements[t as usize];
                    if !tr.alive || !tr.edges.contains(&(s as u32)) {
                        return Err(format!("{me:?}: incident triangle {t} inconsistent"));
                    }
                }
                for &v in &r.vertices {
                    if !lv.vertices[v as usize].alive {
                        return Err(format!("{me:?}: dead vertex {v}"));
                    }
                }
                if let Some(ch) = r.children {
                    for c in ch {
                        let cr = &self.levels[l + 1].edges[c as usize];
                        if !cr.alive || cr.father != Some(s as u32) {
                            return Err(format!("{me:?}: child edge {c} not reciprocal"));
                        }
                    }
                }
                if let Some(f) = r.father {
                    if !self.erec(l - 1, f).children.is_some_and(|c| c.contains(&(s as u32))) {
                        return Err(format!("{me:?}: father edge not reciprocal"));
                    }
                }
                if ids.insert(r.id, me).is_some() {
                    return Err(format!("{me:?}: duplicate id {}", r.id));
                }
            }
            let used_by_edges: HashSet<u32> = lv.edges.iter().filter(|e| e.alive).flat_map(|e| e.vertices).collect();
            for (s, r) in lv.vertices.iter().enumerate().filter(|(_, r)| r.alive) {
                let me = Entity::new(0, l, s);
                if r.coords.len() != self.world_dim() {
                    return Err(format!("{me:?}: coordinate length"));
                }
                for &t in &r.incident {
                    let tr = &lv.elements[t as usize];
                    if !tr.alive || !tr.vertices.contains(&(s as u32)) {
                        return Err(format!("{me:?}: incident element {t} inconsistent"));
                    }
                }
                if r.incident.is_empty() && r.son.is_none() && !used_by_edges.contains(&(s as u32)) {
                    return Err(format!("{me:?}: orphaned vertex"));
                }
                if let Some(son) = r.son {
                    let sr = &self.levels[l + 1].vertices[son as usize];
                    if !sr.alive || sr.father != Some(s as u32) || sr.id != r.id {
                        return Err(format!("{me:?}: son not reciprocal"));
                    }
                }
                if let Some(f) = r.father {
                    if self.vrec(l - 1, f).son != Some(s as u32) {
                        return Err(format!("{me:?}: father copy not reciprocal"));
                    }
                } else if ids.insert(r.id, me).is_some() {
                    return Err(format!("{me:?}: duplicate id {}", r.id));
                }
            }
        }
        Ok(())
    }
}

fn alive_slots(flags: impl Iterator<Item = bool>) -> Vec<usize> {
    flags.enumerate().filter(|(_, a)| *a).map(|(s, _)| s).collect()
}
