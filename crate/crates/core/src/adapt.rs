//! Mark-based red refinement and coarsening.
//!
//! A cycle is `mark* → pre_adapt → adapt → post_adapt`. Refinement is
//! non-conforming: neighbors of a refined element are left alone, so hanging
//! vertices of any depth may appear.

use smallvec::{smallvec, SmallVec};

use crate::entity::Entity;
use crate::error::{GridError, Result};
use crate::grid::{GridContainer, Phase, TRIANGLE_EDGES};

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl GridContainer {
    /// Marks a leaf element: positive `ref_count` for one round of
    /// refinement, negative for coarsening, zero to clear. Returns false if
    /// the element is not a live leaf or a growth transaction is open.
    pub fn mark(&mut self, ref_count: i32, element: Entity) -> bool {
        if self.phase != Phase::Idle || !self.queue.is_empty() {
            return false;
        }
        if self.check_element(element).is_err() || !self.is_leaf(element) {
            return false;
        }
        self.rec_mut(element.level(), element.slot).mark = ref_count.signum() as i8;
        true
    }

    /// 1, -1 or 0.
    pub fn get_mark(&self, element: Entity) -> Result<i8> {
        Ok(self.check_element(element)?.mark)
    }

    /// Flags elements that may disappear in [`adapt`](Self::adapt) and
    /// returns true if there is at least one.
    pub fn pre_adapt(&mut self) -> Result<bool> {
        if self.phase != Phase::Idle {
            return Err(GridError::Lifecycle("pre_adapt called while another transaction is open"));
        }
        if !self.queue.is_empty() {
            return Err(GridError::Lifecycle("pre_adapt called with a pending growth transaction"));
        }
        let mut any = false;
        for l in 1..self.levels.len() {
            for s in 0..self.levels[l].elements.len() as u32 {
                let r = self.rec(l, s);
                if !r.alive {
                    continue;
                }
                // Grown elements may sit above level 0 without a father.
                let Some(f) = r.father else {
                    continue;
                };
                let vanish = self.rec(l - 1, f).children.iter().all(|&c| {
                    let cr = self.rec(l, c);
                    cr.children.is_empty() && cr.mark < 0
                });
                self.rec_mut(l, s).might_vanish = vanish;
                any |= vanish;
            }
        }
        self.phase = Phase::PreAdapted;
        Ok(any)
    }

    /// Coarsens agreed sibling groups, then refines every element marked for
    /// refinement. Returns true if at least one element was refined.
    pub fn adapt(&mut self) -> Result<bool> {
        if self.phase != Phase::PreAdapted {
            return Err(GridError::Lifecycle("adapt called without pre_adapt"));
        }
        let mut fathers = Vec::new();
        for l in 1..self.levels.len() {
            for (s, r) in self.levels[l].elements.iter().enumerate() {
                if r.alive && r.might_vanish {
                    fathers.push((l - 1, r.father.unwrap(), l, s as u32));
                }
            }
        }
        for (_, _, l, s) in &fathers {
            self.kill_element(*l, *s);
        }
        let mut to_refine = Vec::new();
        for (l, lv) in self.levels.iter().enumerate() {
            for (s, r) in lv.elements.iter().enumerate() {
                if r.alive && r.mark > 0 && r.children.is_empty() {
                    to_refine.push((l, s as u32));
                }
            }
        }
        for &(l, s) in &to_refine {
            self.refine(l, s)?;
        }
        for lv in &mut self.levels {
            for r in &mut lv.elements {
                r.mark = 0;
            }
        }
        self.collect_garbage();
        self.phase = Phase::Adapted;
        log::debug!("adapt: {} coarsened, {} refined", fathers.len(), to_refine.len());
        Ok(!to_refine.is_empty())
    }

    /// Ends the adapt cycle and clears the `is_new` / `might_vanish` flags.
    pub fn post_adapt(&mut self) -> Result<()> {
        if self.phase != Phase::Adapted {
            return Err(GridError::Lifecycle("post_adapt called without adapt"));
        }
        for lv in &mut self.levels {
            for r in &mut lv.elements {
                r.is_new = false;
                r.might_vanish = false;
            }
        }
        self.phase = Phase::Idle;
        Ok(())
    }

    fn refine(&mut self, l: usize, s: u32) -> Result<()> {
        let parent = self.element(l, s);
        let rec = self.rec(l, s).clone();
        let macro_ancestor = Some(rec.macro_ancestor);
        let ml = &rec.macro_local;
        let sons: SmallVec<[u32; 3]> = rec.vertices.iter().map(|&v| self.ensure_son(l, v)).collect();
        if self.dim() == 1 {
            let pos = self.refined_vertex_position(parent, 0)?;
            let m = self.add_vertex(l + 1, pos, None);
            let mm = mid(ml[0], ml[1]);
            self.add_element(l + 1, smallvec![sons[0], m], Some(s), macro_ancestor, smallvec![ml[0], mm], None, true);
            self.add_element(l + 1, smallvec![m, sons[1]], Some(s), macro_ancestor, smallvec![mm, ml[1]], None, true);
            return Ok(());
        }
        // Midpoints on local edges (0,1), (0,2), (1,2).
        let mut m = [0u32; 3];
        for (k, [a, b]) in TRIANGLE_EDGES.into_iter().enumerate() {
            let e = rec.edges[k];
            m[k] = match self.erec(l, e).children {
                Some([c0, _]) => self.erec(l + 1, c0).vertices[1],
                None => {
                    let pos = self.refined_vertex_position(parent, k)?;
                    let mv = self.add_vertex(l + 1, pos, None);
                    let [v0, v1] = self.erec(l, e).vertices;
                    let (s0, s1) = if v0 == rec.vertices[a] { (sons[a], sons[b]) } else { (sons[b], sons[a]) };
                    debug_assert_eq!(v1, if v0 == rec.vertices[a] { rec.vertices[b] } else { rec.vertices[a] });
                    let c0 = self.add_edge(l + 1, s0, mv, Some(e));
                    let c1 = self.add_edge(l + 1, mv, s1, Some(e));
                    self.erec_mut(l, e).children = Some([c0, c1]);
                    mv
                }
            };
        }
        let [m01, m02, m12] = m;
        let [c0, c1, c2] = [sons[0], sons[1], sons[2]];
        let (p0, p1, p2) = (ml[0], ml[1], ml[2]);
        let (q01, q02, q12) = (mid(p0, p1), mid(p0, p2), mid(p1, p2));
        let children: [([u32; 3], [[f64; 2]; 3]); 4] = [
            ([c0, m01, m02], [p0, q01, q02]),
            ([m01, c1, m12], [q01, p1, q12]),
            ([m02, m12, c2], [q02, q12, p2]),
            ([m01, m12, m02], [q01, q12, q02]),
        ];
        for (vs, loc) in children {
            self.add_element(
                l + 1,
                SmallVec::from_slice(&vs),
                Some(s),
                macro_ancestor,
                SmallVec::from_slice(&loc),
                None,
                true,
            );
        }
        Ok(())
    }

    /// Local coordinates of the corners of `e` in its father's reference
    /// element, or `None` for elements without a father.
    pub fn geometry_in_father(&self, e: Entity) -> Result<Option<Vec<crate::Coords>>> {
        let rec = self.check_element(e)?;
        let Some(f) = rec.father else {
            return Ok(None);
        };
        let fr = self.rec(e.level() - 1, f);
        // Macro-local coordinates are affine in the father's local ones.
        let d = self.dim();
        let origin = fr.macro_local[0];
        let axes: Vec<[f64; 2]> =
            (1..=d).map(|i| [fr.macro_local[i][0] - origin[0], fr.macro_local[i][1] - origin[1]]).collect();
        let solve = |p: [f64; 2]| -> crate::Coords {
            let r = [p[0] - origin[0], p[1] - origin[1]];
            if d == 1 {
                let a = axes[0];
                let aa = a[0] * a[0] + a[1] * a[1];
                smallvec![(r[0] * a[0] + r[1] * a[1]) / aa]
            } else {
                let (a, b) = (axes[0], axes[1]);
                let det = a[0] * b[1] - a[1] * b[0];
                smallvec![(r[0] * b[1] - r[1] * b[0]) / det, (a[0] * r[1] - a[1] * r[0]) / det]
            }
        };
        Ok(Some(rec.macro_local.iter().map(|p| solve(*p)).collect()))
    }
}
