//! Row-wise assembled linear systems solved by dense LU.

use nalgebra::{DMatrix, DVector};
use netgrid::par::{self, Execution};

use crate::{Result, SolverError};

/// One assembled row: sparse entries plus right-hand side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn add(&mut self, col: usize, value: f64) {
        match self.entries.iter_mut().find(|(c, _)| *c == col) {
            Some((_, v)) => *v += value,
            None => self.entries.push((col, value)),
        }
    }
}

/// Assembles `n` independent rows, in parallel when requested.
pub fn assemble<F>(exec: Execution, n: usize, row: F) -> Vec<Row>
where
    F: Fn(usize) -> Row + Sync + Send,
{
    par::map_range(exec, n, row)
}

pub fn to_dense(rows: &[Row]) -> (DMatrix<f64>, DVector<f64>) {
    let n = rows.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in &r.entries {
            a[(i, j)] += v;
        }
        b[i] = r.rhs;
    }
    (a, b)
}

/// Solves the assembled system. A pivot below `1e-13` times the largest
/// diagonal entry is reported as singular.
pub fn solve(rows: &[Row]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (a, b) = to_dense(rows);
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(SolverError::InvalidParameter("linear system has non-finite coefficients".into()));
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(scale > 0.0) || min_pivot <= 1e-13 * scale {
        return Err(SolverError::Singular { size: n });
    }
    let x = lu.solve(&b).ok_or(SolverError::Singular { size: n })?;
    let residual = (&a * &x - &b).amax();
    let tol = 1e-10 * (scale * x.amax() + b.amax()).max(f64::MIN_POSITIVE);
    if residual > tol {
        log::warn!("linear solve residual {residual:e} above {tol:e}");
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(entries: &[(usize, f64)], rhs: f64) -> Row {
        Row { entries: entries.to_vec(), rhs }
    }

    #[test]
    fn solves_small_system() {
        let rows = vec![row(&[(0, 2.0), (1, -1.0)], 1.0), row(&[(0, -1.0), (1, 2.0)], 1.0)];
        let x = solve(&rows).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detects_singular() {
        let rows = vec![row(&[(0, 1.0), (1, -1.0)], 0.0), row(&[(0, -1.0), (1, 1.0)], 0.0)];
        assert!(matches!(solve(&rows), Err(SolverError::Singular { size: 2 })));
    }

    #[test]
    fn add_merges_columns() {
        let mut r = Row::default();
        r.add(3, 1.0);
        r.add(3, 0.5);
        r.add(1, 2.0);
        assert_eq!(r.entries, vec![(3, 1.5), (1, 2.0)]);
    }
}
