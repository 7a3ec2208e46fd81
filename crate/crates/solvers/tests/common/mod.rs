#![allow(dead_code)]

use netgrid::{GeometryType, GridConfig, GridContainer, GridFactory};

/// Gaussian elimination with partial pivoting on a dense copy.
#[allow(clippy::needless_range_loop)]
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn network(w: usize, points: &[&[f64]], segments: &[[usize; 2]]) -> GridContainer {
    let mut f = GridFactory::new(GridConfig::new(1, w).unwrap());
    for p in points {
        f.insert_vertex(p).unwrap();
    }
    for s in segments {
        f.insert_element(GeometryType::line(), s).unwrap();
    }
    f.create_grid().unwrap()
}

/// Three unit legs meeting at the origin of the plane.
pub fn y_junction() -> GridContainer {
    let s = 0.5 * 3f64.sqrt();
    network(2, &[&[0., 0.], &[1., 0.], &[-0.5, s], &[-0.5, -s]], &[[0, 1], [0, 2], [0, 3]])
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
