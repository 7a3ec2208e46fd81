//! Hierarchical simplicial grids for networks and surfaces.
//!
//! A [`GridContainer`] holds one- or two-dimensional simplex meshes embedded
//! in `R^w` for any `w >= d`. Any number of elements may share a facet, so
//! branching networks and T-junction surfaces are first-class. Grids are
//! built with a [`GridFactory`], refined and coarsened through the
//! mark/adapt cycle, and grown or shrunk at runtime through the growth queue.
//!
//! Traversal goes through [`GridView`]s (leaf or level) whose index sets
//! number entities consecutively; [`PersistentId`]s survive adaptation and
//! growth and are the key for data transfer.
//!
//! ```
//! use netgrid::{GeometryType, GridConfig, GridFactory};
//!
//! // A "Y" of three segments meeting at the origin.
//! let mut f = GridFactory::new(GridConfig::new(1, 2)?);
//! for x in [[0.0, 0.0], [1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]] {
//!     f.insert_vertex(&x)?;
//! }
//! for leg in 1..4 {
//!     f.insert_element(GeometryType::line(), &[0, leg])?;
//! }
//! let grid = f.create_grid()?;
//! let view = grid.leaf_view();
//! let is = view.intersections(view.elements()[0])?;
//! assert_eq!(is[0].neighbor(), 2);
//! assert!(is[1].boundary());
//! # Ok::<(), netgrid::GridError>(())
//! ```

mod adapt;
mod entity;
mod error;
mod factory;
mod geometry;
mod grid;
mod growth;
mod intersection;
pub mod io;
pub mod par;
mod param;
mod view;

pub use entity::{Entity, GeometryType, GridConfig, PersistentId};
pub use error::{GridError, Result};
pub use factory::{GridFactory, CORNER_CONSISTENCY_TOL};
pub use geometry::{AffineGeometry, Coords, Matrix};
pub use grid::{GridContainer, TRIANGLE_EDGES};
pub use growth::{GrowReport, SkipReason, SkippedElement};
pub use intersection::{pairwise, Intersection, IntersectionPair, Outside};
pub use par::Execution;
pub use param::{
    wavelet, wavelet_height, wavelet_square, AffineParametrization, ElementParametrization,
    GlobalFunctionParametrization, LagrangeP2, Parametrization,
};
pub use view::{GridView, IdSet, IndexSet, ViewKind};
