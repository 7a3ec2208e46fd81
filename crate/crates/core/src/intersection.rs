//! Intersections of an element with the groups of neighbors sharing a facet
//! fragment.
//!
//! Each [`Intersection`] relates one inside element to *all* outside
//! elements meeting it over one fragment of one of its facets, so the
//! geometries-in-inside of an element's intersections partition its
//! boundary. [`pairwise`] flattens the groups into one record per
//! (inside, outside) pair with all pairs of a fragment adjacent.
//!
//! Fragments of non-conforming 2D facets are found through the edge
//! refinement tree, never by comparing coordinates.

use smallvec::SmallVec;

use crate::entity::Entity;
use crate::error::{GridError, Result};
use crate::geometry::{norm, sub, AffineGeometry, Coords};
use crate::grid::{reference_corners, GridContainer, TRIANGLE_EDGES};
use crate::par::{self, Execution};
use crate::view::{GridView, ViewKind};

/// One neighbor of an intersection.
#[derive(Debug, Clone)]
pub struct Outside {
    element: Entity,
    index_in_outside: usize,
    geometry_in_outside: AffineGeometry,
}

impl Outside {
    pub fn element(&self) -> Entity {
        self.element
    }

    pub fn index_in_outside(&self) -> usize {
        self.index_in_outside
    }

    pub fn geometry_in_outside(&self) -> &AffineGeometry {
        &self.geometry_in_outside
    }
}

/// The relation between an inside element and the group of elements
/// sharing one facet fragment with it.
#[derive(Debug, Clone)]
pub struct Intersection {
    inside: Entity,
    index_in_inside: usize,
    outsides: SmallVec<[Outside; 2]>,
    geometry_in_inside: AffineGeometry,
    geometry: AffineGeometry,
    normal: Option<Coords>,
}

impl Intersection {
    pub fn inside(&self) -> Entity {
        self.inside
    }

    /// Local facet number of the intersection in the inside element.
    pub fn index_in_inside(&self) -> usize {
        self.index_in_inside
    }

    /// Number of outside elements: 0 on the boundary, 1 on a manifold
    /// facet, more at junctions.
    pub fn neighbor(&self) -> usize {
        self.outsides.len()
    }

    pub fn boundary(&self) -> bool {
        self.outsides.is_empty()
    }

    /// Outside elements, ordered by persistent id.
    pub fn outsides(&self) -> &[Outside] {
        &self.outsides
    }

    fn nth(&self, k: usize) -> Result<&Outside> {
        self.outsides.get(k).ok_or(GridError::NeighborIndex { index: k, count: self.outsides.len() })
    }

    pub fn outside(&self, k: usize) -> Result<Entity> {
        Ok(self.nth(k)?.element)
    }

    pub fn geometry_in_outside(&self, k: usize) -> Result<&AffineGeometry> {
        Ok(&self.nth(k)?.geometry_in_outside)
    }

    pub fn index_in_outside(&self, k: usize) -> Result<usize> {
        Ok(self.nth(k)?.index_in_outside)
    }

    /// Embedding of the intersection into the inside reference element.
    pub fn geometry_in_inside(&self) -> &AffineGeometry {
        &self.geometry_in_inside
    }

    /// Global shape of the intersection as seen from the inside element.
    pub fn geometry(&self) -> &AffineGeometry {
        &self.geometry
    }

    /// Unit vector tangent to the inside element, normal to the
    /// intersection and pointing outwards. Constant for affine elements, so
    /// `local` only has its length checked.
    pub fn unit_outer_normal(&self, local: &[f64]) -> Result<Coords> {
        let k = self.geometry_in_inside.mydim();
        if local.len() != k {
            return Err(GridError::DimensionMismatch { expected: k, got: local.len() });
        }
        self.normal.clone().ok_or(GridError::SingularGeometry)
    }

    pub fn center_unit_outer_normal(&self) -> Result<Coords> {
        self.normal.clone().ok_or(GridError::SingularGeometry)
    }
}

/// One (inside, outside) pair of the pairwise traversal.
#[derive(Debug, Clone, Copy)]
pub struct IntersectionPair<'a> {
    group: &'a Intersection,
    k: usize,
}

impl<'a> IntersectionPair<'a> {
    pub fn group(&self) -> &'a Intersection {
        self.group
    }

    /// Size of the neighbor group this pair belongs to.
    pub fn neighbor(&self) -> usize {
        self.group.neighbor()
    }

    pub fn boundary(&self) -> bool {
        self.group.boundary()
    }

    pub fn outside(&self) -> Option<Entity> {
        self.group.outsides.get(self.k).map(|o| o.element)
    }

    pub fn index_in_outside(&self) -> Option<usize> {
        self.group.outsides.get(self.k).map(|o| o.index_in_outside)
    }

    pub fn index_in_inside(&self) -> usize {
        self.group.index_in_inside
    }

    pub fn geometry_in_inside(&self) -> &'a AffineGeometry {
        &self.group.geometry_in_inside
    }
}

/// Expands intersection groups into pairs; all pairs over one
/// geometry-in-inside are yielded consecutively.
pub fn pairwise(groups: &[Intersection]) -> impl Iterator<Item = IntersectionPair<'_>> {
    groups.iter().flat_map(|g| (0..g.neighbor().max(1)).map(move |k| IntersectionPair { group: g, k }))
}

/// Point on a reference simplex edge: `t` runs from corner `p` to `q`.
fn edge_point(dim: usize, p: usize, q: usize, t: f64) -> Coords {
    let c = reference_corners(dim);
    (0..dim).map(|i| c[p][i] + t * (c[q][i] - c[p][i])).collect()
}

impl GridView<'_> {
    /// All intersections of an element of this view.
    pub fn intersections(&self, element: Entity) -> Result<Vec<Intersection>> {
        let grid = self.grid();
        grid.check_element(element)?;
        if !self.contains(element) {
            return Err(GridError::StaleEntity(element));
        }
        let leaf = self.kind() == ViewKind::Leaf;
        let inside_geo = grid.geometry(element)?;
        if grid.dim() == 1 {
            (0..2).map(|k| intersection_1d(grid, element, k, leaf, &inside_geo)).collect()
        } else {
            let mut all = Vec::new();
            for k in 0..3 {
                intersections_2d(grid, element, k, leaf, &inside_geo, &mut all)?;
            }
            Ok(all)
        }
    }

    /// Intersections of every element, in element index order.
    pub fn all_intersections(&self, exec: Execution) -> Result<Vec<Vec<Intersection>>> {
        par::map_slice(exec, self.elements(), |e| self.intersections(*e)).into_iter().collect()
    }
}

fn sort_by_id(grid: &GridContainer, outsides: &mut SmallVec<[Outside; 2]>) {
    outsides.sort_by_key(|o| grid.id(o.element).expect("live outside"));
}

fn intersection_1d(
    grid: &GridContainer,
    inside: Entity,
    k: usize,
    leaf: bool,
    inside_geo: &AffineGeometry,
) -> Result<Intersection> {
    let l = inside.level();
    let rec = grid.rec(l, inside.slot);
    let v = grid.vertex(l, rec.vertices[k]);
    let copies = if leaf { grid.vertex_chain(v)? } else { vec![v] };
    let mut outsides = SmallVec::new();
    for c in copies {
        for &t in &grid.vrec(c.level(), c.slot).incident {
            let e = grid.element(c.level(), t);
            if e == inside || (leaf && !grid.is_leaf(e)) {
                continue;
            }
            let j = grid.rec(c.level(), t).vertices.iter().position(|&s| s == c.slot).unwrap();
            outsides.push(Outside {
                element: e,
                index_in_outside: j,
                geometry_in_outside: AffineGeometry::new([[j as f64]])?,
            });
        }
    }
    sort_by_id(grid, &mut outsides);
    let x = inside_geo.corner(k).clone();
    let other = inside_geo.corner(1 - k);
    let dir = sub(&x, other);
    let len = norm(&dir);
    let normal = (len > 0.0).then(|| dir.iter().map(|c| c / len).collect());
    Ok(Intersection {
        inside,
        index_in_inside: k,
        outsides,
        geometry_in_inside: AffineGeometry::new([[k as f64]])?,
        geometry: AffineGeometry::new([x])?,
        normal,
    })
}

/// Whether a leaf triangle is incident to a strict descendant of the edge.
fn finer_leaf_below(grid: &GridContainer, level: usize, edge: u32) -> bool {
    let Some(children) = grid.erec(level, edge).children else {
        return false;
    };
    children.iter().any(|&c| {
        grid.erec(level + 1, c).incident.iter().any(|&t| grid.rec(level + 1, t).children.is_empty())
            || finer_leaf_below(grid, level + 1, c)
    })
}

/// Parameter interval of `edge` inside its ancestor on `target` level.
fn interval_in_ancestor(grid: &GridContainer, mut level: usize, mut edge: u32, target: usize) -> (u32, [f64; 2]) {
    let mut iv = [0.0, 1.0];
    while level > target {
        let f = grid.erec(level, edge).father.expect("edge ancestor chain broken");
        let ch = grid.erec(level - 1, f).children.unwrap();
        let offset = if ch[0] == edge { 0.0 } else { 0.5 };
        iv = [offset + 0.5 * iv[0], offset + 0.5 * iv[1]];
        level -= 1;
        edge = f;
    }
    (edge, iv)
}

/// Local coordinates in `element` of the points at parameters `iv` along
/// its edge `edge` (same level), measured from the edge's first vertex.
fn local_on_edge(grid: &GridContainer, element: Entity, local_edge: usize, edge: u32, iv: [f64; 2]) -> [Coords; 2] {
    let l = element.level();
    let rec = grid.rec(l, element.slot);
    let [p, q] = TRIANGLE_EDGES[local_edge];
    let forward = rec.vertices[p] == grid.erec(l, edge).vertices[0];
    let (p, q) = if forward { (p, q) } else { (q, p) };
    [edge_point(2, p, q, iv[0]), edge_point(2, p, q, iv[1])]
}

fn intersections_2d(
    grid: &GridContainer,
    inside: Entity,
    k: usize,
    leaf: bool,
    inside_geo: &AffineGeometry,
    out: &mut Vec<Intersection>,
) -> Result<()> {
    let l = inside.level();
    let edge = grid.rec(l, inside.slot).edges[k];
    let is_candidate = |lev: usize, t: u32| {
        let e = grid.element(lev, t);
        e != inside && (!leaf || grid.rec(lev, t).children.is_empty())
    };

    // Fragments: finest subdivision of the facet induced by leaf neighbors.
    let mut fragments: Vec<(usize, u32)> = Vec::new();
    if leaf {
        let mut stack = vec![(l, edge)];
        while let Some((lev, s)) = stack.pop() {
            match grid.erec(lev, s).children {
                Some([c0, c1]) if finer_leaf_below(grid, lev, s) => {
                    stack.push((lev + 1, c1));
                    stack.push((lev + 1, c0));
                }
                _ => fragments.push((lev, s)),
            }
        }
    } else {
        fragments.push((l, edge));
    }

    // Normal is shared by all fragments of the facet.
    let [p, q] = TRIANGLE_EDGES[k];
    let o = 3 - p - q;
    let xp = inside_geo.corner(p);
    let tangent = sub(inside_geo.corner(q), xp);
    let mut n = sub(xp, inside_geo.corner(o));
    let tt = tangent.iter().map(|x| x * x).sum::<f64>();
    if tt > 0.0 {
        let s = n.iter().zip(&tangent).map(|(a, b)| a * b).sum::<f64>() / tt;
        for (ni, ti) in n.iter_mut().zip(&tangent) {
            *ni -= s * ti;
        }
    }
    let len = norm(&n);
    let normal: Option<Coords> =
        (!inside_geo.is_degenerate() && len > 0.0).then(|| n.iter().map(|x| x / len).collect());

    for (flev, fslot) in fragments {
        let mut outsides: SmallVec<[Outside; 2]> = SmallVec::new();
        // Walk from the fragment up to the root edge, collecting neighbors
        // incident to every edge on the way.
        let mut lev = flev;
        let mut s = fslot;
        loop {
            for &t in &grid.erec(lev, s).incident {
                if !is_candidate(lev, t) {
                    continue;
                }
                let b = grid.element(lev, t);
                let j = grid.rec(lev, t).edges.iter().position(|&x| x == s).unwrap();
                let (_, iv) = interval_in_ancestor(grid, flev, fslot, lev);
                let corners = local_on_edge(grid, b, j, s, iv);
                outsides.push(Outside {
                    element: b,
                    index_in_outside: j,
                    geometry_in_outside: AffineGeometry::new(corners)?,
                });
            }
            if !leaf {
                break;
            }
            match grid.erec(lev, s).father {
                Some(f) => {
                    lev -= 1;
                    s = f;
                }
                None => break,
            }
        }
        sort_by_id(grid, &mut outsides);
        let (_, iv) = interval_in_ancestor(grid, flev, fslot, l);
        let local = local_on_edge(grid, inside, k, edge, iv);
        let global = [inside_geo.global(&local[0]), inside_geo.global(&local[1])];
        out.push(Intersection {
            inside,
            index_in_inside: k,
            outsides,
            geometry_in_inside: AffineGeometry::new(local)?,
            geometry: AffineGeometry::new(global)?,
            normal: normal.clone(),
        });
    }
    Ok(())
}
