use smallvec::SmallVec;

use crate::entity::{GeometryType, GridConfig};
use crate::error::{GridError, Result};
use crate::geometry::Coords;
use crate::grid::{reference_corners, GridContainer};
use crate::param::Parametrization;

/// Tolerance for the check that a parametrization reproduces the corners of
/// its element.
pub const CORNER_CONSISTENCY_TOL: f64 = 1e-9;

pub(crate) fn check_simplex(kind: GeometryType, dim: usize, nvertices: usize) -> Result<()> {
    if kind != GeometryType::Simplex(dim) {
        return Err(GridError::NotASimplex(kind));
    }
    if nvertices != dim + 1 {
        return Err(GridError::WrongVertexCount { dim, expected: dim + 1, got: nvertices });
    }
    Ok(())
}

pub(crate) fn check_distinct(vertices: &[usize]) -> Result<()> {
    for (i, v) in vertices.iter().enumerate() {
        if vertices[..i].contains(v) {
            return Err(GridError::RepeatedVertex(*v));
        }
    }
    Ok(())
}

/// Stages vertices and elements of a macro grid.
///
/// ```
/// use netgrid::{GridConfig, GridFactory, GeometryType};
/// let mut f = GridFactory::new(GridConfig::new(2, 3).unwrap());
/// for x in [[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]] {
///     f.insert_vertex(&x).unwrap();
/// }
/// f.insert_element(GeometryType::triangle(), &[0, 1, 2]).unwrap();
/// let grid = f.create_grid().unwrap();
/// assert_eq!(grid.leaf_view().size(0), 1);
/// ```
pub struct GridFactory {
    config: GridConfig,
    vertices: Vec<Coords>,
    elements: Vec<(SmallVec<[usize; 3]>, Option<Parametrization>)>,
}

impl GridFactory {
    pub fn new(config: GridConfig) -> Self {
        GridFactory { config, vertices: Vec::new(), elements: Vec::new() }
    }

    pub fn config(&self) -> GridConfig {
        self.config
    }

    /// Stages a vertex and returns its 0-based insertion index.
    pub fn insert_vertex(&mut self, coords: &[f64]) -> Result<usize> {
        let w = self.config.world_dim();
        if coords.len() != w {
            return Err(GridError::DimensionMismatch { expected: w, got: coords.len() });
        }
        self.vertices.push(Coords::from_slice(coords));
        Ok(self.vertices.len() - 1)
    }

    pub fn insert_element(&mut self, kind: GeometryType, vertices: &[usize]) -> Result<()> {
        self.stage(kind, vertices, None)
    }

    /// Stages an element whose refinement follows `param`.
    pub fn insert_parametrized_element(
        &mut self,
        kind: GeometryType,
        vertices: &[usize],
        param: Parametrization,
    ) -> Result<()> {
        self.stage(kind, vertices, Some(param))
    }

    fn stage(&mut self, kind: GeometryType, vertices: &[usize], param: Option<Parametrization>) -> Result<()> {
        check_simplex(kind, self.config.dim(), vertices.len())?;
        if let Some(&bad) = vertices.iter().find(|&&v| v >= self.vertices.len()) {
            return Err(GridError::UnknownVertex(bad));
        }
        check_distinct(vertices)?;
        self.elements.push((SmallVec::from_slice(vertices), param));
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Builds the level-0 grid. Staged vertices not referenced by any
    /// element are dropped. Element `i` becomes the level-0 element with
    /// slot `i` (see [`GridContainer::factory_element`]).
    pub fn create_grid(self) -> Result<GridContainer> {
        if self.elements.is_empty() {
            return Err(GridError::EmptyGrid);
        }
        let d = self.config.dim();
        let mut grid = GridContainer::empty(self.config);
        let mut used = vec![false; self.vertices.len()];
        for (vs, _) in &self.elements {
            for &v in vs {
                used[v] = true;
            }
        }
        let mut map = vec![None; self.vertices.len()];
        for (i, coords) in self.vertices.into_iter().enumerate() {
            if used[i] {
                map[i] = Some(grid.add_vertex(0, coords, None));
            } else {
                log::warn!("factory vertex {i} is not used by any element and was dropped");
            }
        }
        for (n, (vs, param)) in self.elements.into_iter().enumerate() {
            let slots: SmallVec<[u32; 3]> = vs.iter().map(|&v| map[v].unwrap()).collect();
            if let Some(p) = &param {
                let xs: Vec<Coords> = slots.iter().map(|&v| grid.vrec(0, v).coords.clone()).collect();
                warn_on_corner_mismatch(&xs, p, d, n);
            }
            grid.add_element(0, slots, None, None, reference_corners(d), param, false);
        }
        grid.factory_vertices = map;
        Ok(grid)
    }
}

pub(crate) fn warn_on_corner_mismatch(corners: &[Coords], param: &Parametrization, d: usize, which: usize) {
    for (k, corner) in reference_corners(d).iter().enumerate() {
        let y = param.evaluate(&corner[..d]);
        let x = &corners[k];
        let dev = y.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if y.len() != x.len() || dev > CORNER_CONSISTENCY_TOL {
            log::warn!("parametrization of element {which} does not reproduce corner {k} (deviation {dev:e})");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Entity;

    fn cfg(d: usize, w: usize) -> GridConfig {
        GridConfig::new(d, w).unwrap()
    }

    #[test]
    fn insertion_indices_are_consecutive() {
        let mut f = GridFactory::new(cfg(2, 3));
        assert_eq!(f.insert_vertex(&[0., 0., 0.]), Ok(0));
        assert_eq!(f.insert_vertex(&[1., 0., 0.]), Ok(1));
        assert_eq!(f.insert_vertex(&[1., 0.]), Err(GridError::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn element_validation() {
        let mut f = GridFactory::new(cfg(1, 2));
        f.insert_vertex(&[0., 0.]).unwrap();
        f.insert_vertex(&[1., 0.]).unwrap();
        assert_eq!(f.insert_element(GeometryType::line(), &[0, 0]), Err(GridError::RepeatedVertex(0)));
        assert_eq!(f.insert_element(GeometryType::line(), &[0, 5]), Err(GridError::UnknownVertex(5)));
        assert_eq!(
            f.insert_element(GeometryType::Cube(1), &[0, 1]),
            Err(GridError::NotASimplex(GeometryType::Cube(1)))
        );
        assert!(matches!(f.insert_element(GeometryType::triangle(), &[0, 1, 2]), Err(GridError::NotASimplex(_))));
        f.insert_element(GeometryType::line(), &[0, 1]).unwrap();
        assert_eq!(f.num_elements(), 1);
    }

    #[test]
    fn empty_factory_fails() {
        let f = GridFactory::new(cfg(2, 3));
        assert_eq!(f.create_grid().err(), Some(GridError::EmptyGrid));
    }

    #[test]
    fn triangle_with_unknown_index() {
        let mut f = GridFactory::new(cfg(2, 2));
        for x in [[0., 0.], [1., 0.], [0., 1.]] {
            f.insert_vertex(&x).unwrap();
        }
        assert_eq!(f.insert_element(GeometryType::triangle(), &[0, 1, 5]), Err(GridError::UnknownVertex(5)));
    }

    #[test]
    fn unused_vertices_are_dropped() {
        let mut f = GridFactory::new(cfg(1, 1));
        for x in [0.0, 1.0, 7.0] {
            f.insert_vertex(&[x]).unwrap();
        }
        f.insert_element(GeometryType::line(), &[0, 1]).unwrap();
        let g = f.create_grid().unwrap();
        assert!(g.factory_vertex(2).is_none());
        assert_eq!(g.factory_vertex(1), Some(Entity::new(0, 0, 1)));
        assert!(g.audit().is_ok());
    }
}
