//! Cell connectivity of a network leaf view and junction-aware two-point
//! coefficients shared by both solvers.

use netgrid::{Entity, Execution, GeometryType, GridConfig, GridContainer, GridFactory, GridView, PersistentId};

use crate::{Result, SolverError};

/// One end of an element.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetLink {
    /// Vertex at this end.
    pub vertex: Entity,
    /// Id of that vertex (shared by all its copies).
    pub vertex_id: PersistentId,
    /// Indices of the other elements meeting at the vertex.
    pub neighbors: Vec<usize>,
}

impl FacetLink {
    pub fn is_boundary(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Element lengths and end-point neighborhoods of a 1D leaf view, in index
/// order.
#[derive(Debug, Clone)]
pub struct Connectivity {
    pub elements: Vec<Entity>,
    pub ids: Vec<PersistentId>,
    pub lengths: Vec<f64>,
    pub facets: Vec<[FacetLink; 2]>,
}

impl Connectivity {
    pub fn new(view: &GridView<'_>, exec: Execution) -> Result<Self> {
        let grid = view.grid();
        if grid.dim() != 1 {
            return Err(SolverError::NotANetwork(grid.dim()));
        }
        let elements = view.elements().to_vec();
        let all = view.all_intersections(exec)?;
        let lengths = view.element_volumes(exec)?;
        let mut facets = Vec::with_capacity(elements.len());
        let mut ids = Vec::with_capacity(elements.len());
        for (e, is) in elements.iter().zip(&all) {
            ids.push(grid.id(*e)?);
            let corners = grid.corners(*e)?;
            let link = |k: usize| -> Result<FacetLink> {
                let group = is.iter().find(|i| i.index_in_inside() == k).expect("one intersection per end");
                let neighbors =
                    group.outsides().iter().map(|o| view.index(o.element())).collect::<netgrid::Result<Vec<_>>>()?;
                Ok(FacetLink { vertex: corners[k], vertex_id: grid.id(corners[k])?, neighbors })
            };
            facets.push([link(0)?, link(1)?]);
        }
        Ok(Connectivity { elements, ids, lengths, facets })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Two-point coefficients `c_ij = c_i c_j / Σ_{k∈G} c_k` for every element
/// end, where `G` is the element plus all its neighbors at that end.
/// Entry `[i][k]` lists `(j, c_ij)`; boundary ends have no entries. A
/// group with zero total gets zero coefficients.
pub fn junction_coefficients(conn: &Connectivity, per_element: &[f64]) -> Vec<[Vec<(usize, f64)>; 2]> {
    assert_eq!(per_element.len(), conn.len());
    conn.facets
        .iter()
        .enumerate()
        .map(|(i, ends)| {
            ends.clone().map(|end| {
                let sum: f64 = per_element[i] + end.neighbors.iter().map(|&j| per_element[j]).sum::<f64>();
                let c = |j: usize| if sum > 0.0 { per_element[i] * per_element[j] / sum } else { 0.0 };
                end.neighbors.iter().map(|&j| (j, c(j))).collect()
            })
        })
        .collect()
}

/// `n` segments starting at the origin, each displaced by `step`. Vertex
/// `k` of the factory is the `k`-th point along the chain.
pub fn straight_chain(n: usize, step: &[f64]) -> Result<GridContainer> {
    let mut f = GridFactory::new(GridConfig::new(1, step.len())?);
    for k in 0..=n {
        let x: Vec<f64> = step.iter().map(|s| s * k as f64).collect();
        f.insert_vertex(&x)?;
    }
    for k in 0..n {
        f.insert_element(GeometryType::line(), &[k, k + 1])?;
    }
    Ok(f.create_grid()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use netgrid::{GeometryType, GridConfig, GridFactory};

    fn y_junction() -> netgrid::GridContainer {
        let mut f = GridFactory::new(GridConfig::new(1, 2).unwrap());
        for x in [[0.0, 0.0], [1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]] {
            f.insert_vertex(&x).unwrap();
        }
        for leg in 1..4 {
            f.insert_element(GeometryType::line(), &[0, leg]).unwrap();
        }
        f.create_grid().unwrap()
    }

    #[test]
    fn y_junction_splits_evenly() {
        let g = y_junction();
        let conn = Connectivity::new(&g.leaf_view(), Execution::Sequential).unwrap();
        let c = junction_coefficients(&conn, &[1.0, 1.0, 1.0]);
        for ends in &c {
            assert_eq!(ends[0].len(), 2);
            assert!(ends[0].iter().all(|&(_, t)| (t - 1.0 / 3.0).abs() < 1e-15));
            assert!(ends[1].is_empty());
        }
    }

    #[test]
    fn rejects_surfaces() {
        let mut f = GridFactory::new(GridConfig::new(2, 2).unwrap());
        for x in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            f.insert_vertex(&x).unwrap();
        }
        f.insert_element(GeometryType::triangle(), &[0, 1, 2]).unwrap();
        let g = f.create_grid().unwrap();
        assert!(matches!(Connectivity::new(&g.leaf_view(), Execution::Sequential), Err(SolverError::NotANetwork(2))));
    }
}
