#![allow(dead_code)]

use netgrid::{Entity, GeometryType, GridConfig, GridContainer, GridFactory};

pub fn build(dim: usize, points: &[&[f64]], cells: &[&[usize]]) -> GridContainer {
    let w = points[0].len();
    let mut f = GridFactory::new(GridConfig::new(dim, w).unwrap());
    for p in points {
        f.insert_vertex(p).unwrap();
    }
    let kind = if dim == 1 { GeometryType::line() } else { GeometryType::triangle() };
    for c in cells {
        f.insert_element(kind, c).unwrap();
    }
    f.create_grid().unwrap()
}

/// One full adapt cycle refining (`+1`) or coarsening (`-1`) the given
/// leaf elements.
pub fn adapt(grid: &mut GridContainer, marks: &[(Entity, i32)]) -> bool {
    for &(e, m) in marks {
        assert!(grid.mark(m, e), "mark failed on {e:?}");
    }
    grid.pre_adapt().unwrap();
    let refined = grid.adapt().unwrap();
    grid.post_adapt().unwrap();
    refined
}

pub fn refine_all(grid: &mut GridContainer) {
    let leaves = grid.leaf_view().elements().to_vec();
    let marks: Vec<_> = leaves.into_iter().map(|e| (e, 1)).collect();
    adapt(grid, &marks);
}

/// Two triangles in the plane sharing the edge (1,0)-(0,1).
pub fn square() -> GridContainer {
    build(2, &[&[0., 0.], &[1., 0.], &[0., 1.], &[1., 1.]], &[&[0, 1, 2], &[1, 3, 2]])
}

/// Three triangles in R^3 sharing the edge (0,0,0)-(1,0,0).
pub fn t_junction() -> GridContainer {
    build(
        2,
        &[&[0., 0., 0.], &[1., 0., 0.], &[0.5, 1., 0.], &[0.5, -1., 0.], &[0.5, 0., 1.]],
        &[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4]],
    )
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}
