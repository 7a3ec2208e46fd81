//! Element parametrizations: maps from a macro element's reference simplex
//! into `R^w` that decide where refinement places new vertices.
//!
//! Elements themselves stay affine. When an edge of a parametrized element
//! is split, the midpoint is expressed in the local coordinates of the
//! coarsest ancestor and pushed through that ancestor's parametrization, so
//! repeated refinement converges towards the parametrized shape.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::entity::{Entity, GeometryType, GridConfig};
use crate::error::Result;
use crate::factory::GridFactory;
use crate::geometry::{AffineGeometry, Coords};
use crate::grid::GridContainer;

/// Embedding `φ_T: T_ref → R^w` of one macro element.
pub trait ElementParametrization: Send + Sync {
    /// `local` has `d` components and lies in the reference simplex.
    fn evaluate(&self, local: &[f64]) -> Coords;
}

impl<F> ElementParametrization for F
where
    F: Fn(&[f64]) -> Coords + Send + Sync,
{
    fn evaluate(&self, local: &[f64]) -> Coords {
        self(local)
    }
}

/// Shared parametrization handle.
pub type Parametrization = Arc<dyn ElementParametrization>;

/// The affine map of the element itself; refinement with it is identical to
/// plain midpoint refinement.
pub struct AffineParametrization(pub AffineGeometry);

impl ElementParametrization for AffineParametrization {
    fn evaluate(&self, local: &[f64]) -> Coords {
        self.0.global(local)
    }
}

/// `φ_T = φ ∘ F_T`: a global function composed with the affine map of the
/// macro element.
pub struct GlobalFunctionParametrization<F> {
    geometry: AffineGeometry,
    function: F,
}

impl<F> GlobalFunctionParametrization<F>
where
    F: Fn(&[f64]) -> Coords + Send + Sync,
{
    pub fn new(geometry: AffineGeometry, function: F) -> Self {
        GlobalFunctionParametrization { geometry, function }
    }
}

impl<F> ElementParametrization for GlobalFunctionParametrization<F>
where
    F: Fn(&[f64]) -> Coords + Send + Sync,
{
    fn evaluate(&self, local: &[f64]) -> Coords {
        (self.function)(&self.geometry.global(local))
    }
}

/// Height of the damped radial wave `0.2·exp(-|x|)·cos(4.5π|x|)` over the
/// point `(x1, x2)`.
pub fn wavelet_height(x1: f64, x2: f64) -> f64 {
    let r = x1.hypot(x2);
    0.2 * (-r).exp() * (4.5 * PI * r).cos()
}

/// Lifts a point of `R^w` (`w >= 3`) onto the graph of [`wavelet_height`]
/// over its first two coordinates.
pub fn wavelet(x: &[f64]) -> Coords {
    let mut y = Coords::from_slice(x);
    y[2] = wavelet_height(x[0], x[1]);
    y
}

/// The square `[-h, h]^2` in `R^3` as two triangles, corners lifted onto the
/// graph of [`wavelet_height`] and both triangles parametrized by
/// [`wavelet`] composed with their affine map.
pub fn wavelet_square(h: f64) -> Result<GridContainer> {
    let mut f = GridFactory::new(GridConfig::new(2, 3)?);
    for [x, y] in [[-h, -h], [h, -h], [-h, h], [h, h]] {
        f.insert_vertex(&[x, y, wavelet_height(x, y)])?;
    }
    for tri in [[0, 1, 2], [1, 3, 2]] {
        let corners: Vec<Coords> =
            tri.iter().map(|&i| Coords::from_slice(&[[-h, -h], [h, -h], [-h, h], [h, h]][i])).collect();
        let flat = AffineGeometry::new(corners.iter().map(|c| [c[0], c[1], 0.0]))?;
        let p = GlobalFunctionParametrization::new(flat, |x: &[f64]| wavelet(x));
        f.insert_parametrized_element(GeometryType::triangle(), &tri, Arc::new(p))?;
    }
    f.create_grid()
}

/// Quadratic Lagrange interpolation through the nodes of a 3-node line or a
/// 6-node triangle (Gmsh node order: corners, then edge midpoints
/// `(0,1), (1,2), (2,0)`).
pub struct LagrangeP2 {
    nodes: Vec<Coords>,
}

impl LagrangeP2 {
    pub fn new(nodes: Vec<Coords>) -> Self {
        assert!(nodes.len() == 3 || nodes.len() == 6, "P2 needs 3 or 6 nodes");
        LagrangeP2 { nodes }
    }

    fn shape(&self, local: &[f64]) -> Vec<f64> {
        if self.nodes.len() == 3 {
            let s = local[0];
            vec![(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
        } else {
            let (l1, l2) = (local[0], local[1]);
            let l0 = 1.0 - l1 - l2;
            vec![
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l0 * l1,
                4.0 * l1 * l2,
                4.0 * l2 * l0,
            ]
        }
    }
}

impl ElementParametrization for LagrangeP2 {
    fn evaluate(&self, local: &[f64]) -> Coords {
        let w = self.nodes[0].len();
        let mut y = Coords::from_elem(0.0, w);
        for (n, node) in self.shape(local).into_iter().zip(&self.nodes) {
            for (yi, xi) in y.iter_mut().zip(node) {
                *yi += n * xi;
            }
        }
        y
    }
}

impl GridContainer {
    /// Position of the vertex that refinement of `element` creates on its
    /// local edge `edge` (the element itself for 1D grids, `edge == 0`).
    ///
    /// Without a parametrization on the macro ancestor this is the affine
    /// midpoint.
    pub fn refined_vertex_position(&self, element: Entity, edge: usize) -> Result<Coords> {
        let rec = self.check_element(element)?;
        let [a, b] = if self.dim() == 1 { [0, 1] } else { crate::grid::TRIANGLE_EDGES[edge] };
        let l = element.level();
        let m = rec.macro_ancestor;
        match &self.rec(m.level(), m.slot).param {
            Some(p) => {
                let d = self.dim();
                let (pa, pb) = (rec.macro_local[a], rec.macro_local[b]);
                let mid: Vec<f64> = (0..d).map(|i| 0.5 * (pa[i] + pb[i])).collect();
                Ok(p.evaluate(&mid))
            }
            None => {
                let xa = &self.vrec(l, rec.vertices[a]).coords;
                let xb = &self.vrec(l, rec.vertices[b]).coords;
                Ok(xa.iter().zip(xb).map(|(p, q)| 0.5 * (p + q)).collect())
            }
        }
    }
}
