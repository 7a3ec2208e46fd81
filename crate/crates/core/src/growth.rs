//! Runtime growth and shrinkage: queued insertion of vertices and elements,
//! queued removal of leaf elements, applied together by
//! [`GridContainer::grow`].
//!
//! Vertices in a queued element are referenced by one index space: indices
//! below the number of leaf vertices address existing leaf vertices (in leaf
//! index order at the time the transaction was opened), larger ones the
//! queued vertices in insertion order.

use smallvec::SmallVec;

use crate::entity::{Entity, GeometryType};
use crate::error::{GridError, Result};
use crate::factory::{check_distinct, check_simplex, warn_on_corner_mismatch};
use crate::geometry::Coords;
use crate::grid::{reference_corners, GridContainer, Phase};
use crate::param::Parametrization;

#[derive(Clone)]
struct QueuedElement {
    vertices: SmallVec<[usize; 3]>,
    param: Option<Parametrization>,
}

#[derive(Default, Clone)]
pub(crate) struct GrowthQueue {
    /// Leaf vertices at the time the transaction was opened.
    snapshot: Option<Vec<Entity>>,
    vertices: Vec<Coords>,
    elements: Vec<QueuedElement>,
    removals: Vec<Entity>,
}

impl GrowthQueue {
    pub(crate) fn is_empty(&self) -> bool {
        self.snapshot.is_none() && self.removals.is_empty()
    }
}

/// Why a queued element was not inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// The copy chains of the existing vertices share no level.
    NoCommonLevel,
    /// An element with the same corners already exists on the target level.
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkippedElement {
    /// Position of the element in the insertion queue.
    pub index: usize,
    pub reason: SkipReason,
}

/// Outcome of the last [`GridContainer::grow`].
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GrowReport {
    /// (queue position, new element) for every inserted element.
    pub inserted: Vec<(usize, Entity)>,
    pub skipped: Vec<SkippedElement>,
    pub removed: usize,
}

impl GridContainer {
    fn open_growth(&mut self) -> Result<()> {
        if self.phase != Phase::Idle {
            return Err(GridError::Lifecycle("growth queued while another transaction is open"));
        }
        if self.queue.snapshot.is_none() {
            self.queue.snapshot = Some(self.leaf_view().vertices().to_vec());
        }
        Ok(())
    }

    /// Queues a vertex and returns its provisional index.
    pub fn grow_insert_vertex(&mut self, coords: &[f64]) -> Result<usize> {
        let w = self.world_dim();
        if coords.len() != w {
            return Err(GridError::DimensionMismatch { expected: w, got: coords.len() });
        }
        self.open_growth()?;
        let q = &mut self.queue;
        q.vertices.push(Coords::from_slice(coords));
        Ok(q.snapshot.as_ref().unwrap().len() + q.vertices.len() - 1)
    }

    /// Queues an element. Insertion is not guaranteed; see
    /// [`last_grow_report`](Self::last_grow_report).
    pub fn grow_insert_element(&mut self, kind: GeometryType, vertices: &[usize]) -> Result<()> {
        self.queue_element(kind, vertices, None)
    }

    pub fn grow_insert_parametrized_element(
        &mut self,
        kind: GeometryType,
        vertices: &[usize],
        param: Parametrization,
    ) -> Result<()> {
        self.queue_element(kind, vertices, Some(param))
    }

    fn queue_element(&mut self, kind: GeometryType, vertices: &[usize], param: Option<Parametrization>) -> Result<()> {
        check_simplex(kind, self.dim(), vertices.len())?;
        self.open_growth()?;
        let n = self.queue.snapshot.as_ref().unwrap().len() + self.queue.vertices.len();
        if let Some(&bad) = vertices.iter().find(|&&v| v >= n) {
            return Err(GridError::UnknownVertex(bad));
        }
        check_distinct(vertices)?;
        self.queue.elements.push(QueuedElement { vertices: SmallVec::from_slice(vertices), param });
        Ok(())
    }

    /// Queues a leaf element for removal. Removal is guaranteed.
    pub fn remove_element(&mut self, element: Entity) -> Result<()> {
        self.check_element(element)?;
        if !self.is_leaf(element) {
            return Err(GridError::NotLeaf(element));
        }
        if self.phase != Phase::Idle {
            return Err(GridError::Lifecycle("growth queued while another transaction is open"));
        }
        if !self.queue.removals.contains(&element) {
            self.queue.removals.push(element);
        }
        Ok(())
    }

    /// Applies the queued removals and insertions. Returns true if at least
    /// one element was inserted.
    pub fn grow(&mut self) -> Result<bool> {
        if self.phase != Phase::Idle {
            return Err(GridError::Lifecycle("grow called while another transaction is open"));
        }
        let queue = std::mem::take(&mut self.queue);
        let mut report = GrowReport::default();

        for &e in &queue.removals {
            if self.contains(e) && self.is_leaf(e) {
                self.kill_element(e.level(), e.slot);
                report.removed += 1;
            }
        }

        let snapshot = queue.snapshot.unwrap_or_default();
        // Level-resolved slot of every queued vertex once it exists.
        let mut placed: Vec<Option<(usize, u32)>> = vec![None; queue.vertices.len()];
        for (qi, qe) in queue.elements.iter().enumerate() {
            // Range of levels on which each already existing vertex has a copy.
            let mut lo = 0usize;
            let mut hi = usize::MAX;
            let mut any_existing = false;
            for &v in &qe.vertices {
                let range = if v < snapshot.len() {
                    let chain = self.vertex_chain(snapshot[v])?;
                    Some((chain[0].level(), chain[chain.len() - 1].level()))
                } else {
                    placed[v - snapshot.len()].map(|(l, _)| (l, l))
                };
                if let Some((a, b)) = range {
                    any_existing = true;
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
            }
            if any_existing && lo > hi {
                report.skipped.push(SkippedElement { index: qi, reason: SkipReason::NoCommonLevel });
                continue;
            }
            let level = if any_existing { lo } else { 0 };
            let slots: SmallVec<[Option<u32>; 3]> = qe
                .vertices
                .iter()
                .map(|&v| {
                    if v < snapshot.len() {
                        self.vertex_chain(snapshot[v]).ok().map(|c| c[level - c[0].level()].slot)
                    } else {
                        placed[v - snapshot.len()].map(|(_, s)| s)
                    }
                })
                .collect();
            if self.duplicate_exists(level, &slots) {
                report.skipped.push(SkippedElement { index: qi, reason: SkipReason::Duplicate });
                continue;
            }
            self.ensure_level(level);
            let slots: SmallVec<[u32; 3]> = qe
                .vertices
                .iter()
                .zip(slots)
                .map(|(&v, s)| {
                    s.unwrap_or_else(|| {
                        let k = v - snapshot.len();
                        let s = self.add_vertex(level, queue.vertices[k].clone(), None);
                        placed[k] = Some((level, s));
                        s
                    })
                })
                .collect();
            if let Some(p) = &qe.param {
                let xs: Vec<Coords> = slots.iter().map(|&s| self.vrec(level, s).coords.clone()).collect();
                warn_on_corner_mismatch(&xs, p, self.dim(), qi);
            }
            let d = self.dim();
            let s = self.add_element(level, slots, None, None, reference_corners(d), qe.param.clone(), true);
            report.inserted.push((qi, self.element(level, s)));
        }
        self.collect_garbage();
        self.phase = Phase::Grown;
        let any = !report.inserted.is_empty();
        if !report.skipped.is_empty() {
            log::info!("grow: {} queued element(s) not inserted", report.skipped.len());
        }
        self.report = report;
        Ok(any)
    }

    fn duplicate_exists(&self, level: usize, slots: &[Option<u32>]) -> bool {
        let Some(Some(first)) = slots.first() else {
            return false;
        };
        if slots.iter().any(Option::is_none) || level >= self.levels.len() {
            return false;
        }
        self.vrec(level, *first).incident.iter().any(|&t| {
            let vs = &self.rec(level, t).vertices;
            slots.iter().all(|s| vs.contains(&s.unwrap()))
        })
    }

    /// Ends the growth transaction and clears all `is_new` flags.
    pub fn post_grow(&mut self) -> Result<()> {
        if self.phase != Phase::Grown {
            return Err(GridError::Lifecycle("post_grow called without grow"));
        }
        for lv in &mut self.levels {
            for r in &mut lv.elements {
                r.is_new = false;
            }
        }
        self.phase = Phase::Idle;
        Ok(())
    }

    pub fn last_grow_report(&self) -> &GrowReport {
        &self.report
    }

    /// True while vertices, elements or removals are queued.
    pub fn growth_pending(&self) -> bool {
        !self.queue.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{GridConfig, GridFactory};

    fn chain(n: usize) -> GridContainer {
        let mut f = GridFactory::new(GridConfig::new(1, 3).unwrap());
        for i in 0..=n {
            f.insert_vertex(&[0.0, 0.0, -(i as f64)]).unwrap();
        }
        for i in 0..n {
            f.insert_element(GeometryType::line(), &[i, i + 1]).unwrap();
        }
        f.create_grid().unwrap()
    }

    #[test]
    fn provisional_indices_are_consecutive() {
        let mut g = chain(2);
        let k = g.grow_insert_vertex(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(k, 3);
        assert_eq!(g.grow_insert_vertex(&[3.0, 0.0, 0.0]), Ok(4));
        assert!(g.grow_insert_vertex(&[1.0]).is_err());
        assert_eq!(g.grow_insert_element(GeometryType::line(), &[0, 9]), Err(GridError::UnknownVertex(9)));
    }

    #[test]
    fn extend_tip() {
        let mut g = chain(2);
        let tip = g.leaf_view().index(g.factory_vertex(2).unwrap()).unwrap();
        let k = g.grow_insert_vertex(&[0.0, 0.0, -3.0]).unwrap();
        g.grow_insert_element(GeometryType::line(), &[tip, k]).unwrap();
        assert!(g.grow().unwrap());
        let (_, e) = g.last_grow_report().inserted[0];
        assert!(g.is_new(e).unwrap());
        assert_eq!(g.leaf_view().size(0), 3);
        assert_eq!(g.level(e), 0);
        g.post_grow().unwrap();
        assert!(!g.is_new(e).unwrap());
        assert!(g.post_grow().is_err());
        assert!(g.audit().is_ok());
    }

    #[test]
    fn remove_only_transaction() {
        let mut g = chain(3);
        let last = g.factory_element(2).unwrap();
        g.remove_element(last).unwrap();
        assert!(!g.grow().unwrap());
        g.post_grow().unwrap();
        assert_eq!(g.leaf_view().size(0), 2);
        assert_eq!(g.leaf_view().size(1), 3);
        assert!(!g.contains(last));
        assert!(g.audit().is_ok());
    }

    #[test]
    fn non_leaf_removal_is_rejected() {
        let mut g = chain(1);
        let e = g.factory_element(0).unwrap();
        g.mark(1, e);
        g.pre_adapt().unwrap();
        g.adapt().unwrap();
        g.post_adapt().unwrap();
        assert_eq!(g.remove_element(e), Err(GridError::NotLeaf(e)));
    }

    #[test]
    fn unresolvable_level_is_skipped() {
        let mut g = chain(1);
        for _ in 0..2 {
            let leaf = g.leaf_view().elements()[0];
            g.mark(1, leaf);
            g.pre_adapt().unwrap();
            g.adapt().unwrap();
            g.post_adapt().unwrap();
        }
        let v = g.leaf_view();
        // Bottom end has copies on levels 0 and 1, the new midpoint only on 2.
        let bottom = v.index(g.factory_vertex(1).unwrap()).unwrap();
        let mid2 = v.vertices().iter().position(|&x| x.level() == 2 && g.father(x).unwrap().is_none()).unwrap();
        let n = v.size(0);
        g.grow_insert_element(GeometryType::line(), &[bottom, mid2]).unwrap();
        assert!(!g.grow().unwrap());
        assert_eq!(g.last_grow_report().skipped, vec![SkippedElement { index: 0, reason: SkipReason::NoCommonLevel }]);
        g.post_grow().unwrap();
        assert_eq!(g.leaf_view().size(0), n);
    }

    #[test]
    fn new_element_adopts_level_of_fine_vertex() {
        let mut g = chain(1);
        let e = g.factory_element(0).unwrap();
        g.mark(1, e);
        g.pre_adapt().unwrap();
        g.adapt().unwrap();
        g.post_adapt().unwrap();
        let kids = g.children(e).unwrap();
        // Drop the lower child; the midpoint becomes the tip on level 1.
        g.remove_element(kids[1]).unwrap();
        g.grow().unwrap();
        g.post_grow().unwrap();
        let v = g.leaf_view();
        let tip = v.vertices().iter().position(|&x| x.level() == 1 && g.father(x).unwrap().is_none()).unwrap();
        let k = g.grow_insert_vertex(&[1.0, 0.0, -0.5]).unwrap();
        g.grow_insert_element(GeometryType::line(), &[tip, k]).unwrap();
        assert!(g.grow().unwrap());
        g.post_grow().unwrap();
        let (_, new) = g.last_grow_report().inserted[0];
        assert_eq!(g.level(new), 1);
        assert!(g.level_view(1).contains(new));
        assert_eq!(g.father(new).unwrap(), None);
        assert!(g.audit().is_ok());
    }

    #[test]
    fn adapt_and_grow_do_not_mix() {
        let mut g = chain(1);
        g.grow_insert_vertex(&[1.0, 0.0, 0.0]).unwrap();
        assert!(!g.mark(1, g.factory_element(0).unwrap()));
        assert!(g.pre_adapt().is_err());
        g.grow().unwrap();
        assert!(g.grow_insert_vertex(&[1.0, 0.0, 0.0]).is_err());
        g.post_grow().unwrap();
        g.pre_adapt().unwrap();
        assert!(g.grow().is_err());
    }
}
