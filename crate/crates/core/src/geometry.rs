//! Affine simplex geometries `F(ξ) = Aξ + b` from the reference simplex into
//! `R^w`, with the pseudo-inverse used for the extended (closest-point)
//! inverse map.

use smallvec::SmallVec;

use crate::error::{GridError, Result};

/// Coordinates of a point; inline storage covers embeddings up to `R^3`.
pub type Coords = SmallVec<[f64; 3]>;

/// Dense row-major matrix for the small Jacobians (at most 3x2).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: SmallVec<[f64; 6]>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: SmallVec::from_elem(0.0, rows * cols) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix shapes do not match");
        let mut m = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let s = (0..self.cols).map(|k| self.get(r, k) * other.get(k, c)).sum();
                m.set(r, c, s);
            }
        }
        m
    }
}

/// Affine map from the `k`-dimensional reference simplex onto a simplex with
/// `k+1` corners in `R^w` (`k <= 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGeometry {
    corners: SmallVec<[Coords; 3]>,
    // Columns c_i - c_0 of the Jacobian.
    columns: SmallVec<[Coords; 2]>,
    // Gram matrix AᵀA, row-major k×k.
    gram: [f64; 4],
    gram_det: f64,
    degenerate: bool,
}

impl AffineGeometry {
    /// Builds the geometry from its corners. All corners must have the same
    /// length and there may be at most three of them.
    pub fn new<I, C>(corners: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[f64]>,
    {
        let corners: SmallVec<[Coords; 3]> = corners.into_iter().map(|c| Coords::from_slice(c.as_ref())).collect();
        assert!(!corners.is_empty() && corners.len() <= 3, "affine geometries have 1 to 3 corners");
        let w = corners[0].len();
        if let Some(bad) = corners.iter().find(|c| c.len() != w) {
            return Err(GridError::DimensionMismatch { expected: w, got: bad.len() });
        }
        let columns: SmallVec<[Coords; 2]> =
            corners[1..].iter().map(|c| c.iter().zip(&corners[0]).map(|(a, b)| a - b).collect()).collect();
        let k = columns.len();
        let mut gram = [0.0; 4];
        for i in 0..k {
            for j in 0..k {
                gram[i * 2 + j] = dot(&columns[i], &columns[j]);
            }
        }
        let (gram_det, scale) = match k {
            0 => (1.0, 1.0),
            1 => (gram[0], gram[0]),
            _ => (gram[0] * gram[3] - gram[1] * gram[2], gram[0] * gram[3]),
        };
        // Relative threshold on det(AᵀA) against the product of squared edge
        // lengths; catches both zero-length edges and collinear corners.
        let degenerate = k > 0 && (gram_det <= 4.0 * f64::EPSILON * scale || scale == 0.0);
        Ok(AffineGeometry { corners, columns, gram, gram_det, degenerate })
    }

    /// Dimension `k` of the reference simplex.
    pub fn mydim(&self) -> usize {
        self.columns.len()
    }

    /// Embedding dimension `w`.
    pub fn coorddim(&self) -> usize {
        self.corners[0].len()
    }

    pub fn corners(&self) -> &[Coords] {
        &self.corners
    }

    pub fn corner(&self, i: usize) -> &Coords {
        &self.corners[i]
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `F(ξ) = Aξ + b`. Points outside the reference simplex are mapped by
    /// the affine extension.
    pub fn global(&self, local: &[f64]) -> Coords {
        assert_eq!(local.len(), self.mydim(), "local coordinate has wrong length");
        let mut x = self.corners[0].clone();
        for (xi, col) in local.iter().zip(&self.columns) {
            for (xc, a) in x.iter_mut().zip(col) {
                *xc += xi * a;
            }
        }
        x
    }

    /// Closest-point inverse: the `ξ` in the affine hull of the reference
    /// simplex minimizing `|F(ξ) - x|`.
    pub fn local(&self, global: &[f64]) -> Result<Coords> {
        if global.len() != self.coorddim() {
            return Err(GridError::DimensionMismatch { expected: self.coorddim(), got: global.len() });
        }
        self.check()?;
        let diff: Coords = global.iter().zip(&self.corners[0]).map(|(x, b)| x - b).collect();
        let rhs: SmallVec<[f64; 2]> = self.columns.iter().map(|c| dot(c, &diff)).collect();
        Ok(self.solve_gram(&rhs))
    }

    /// `J = sqrt(det(AᵀA))`.
    pub fn integration_element(&self) -> Result<f64> {
        self.check()?;
        Ok(self.gram_det.sqrt())
    }

    /// Volume of the reference simplex (`1/k!`).
    pub fn reference_volume(&self) -> f64 {
        match self.mydim() {
            2 => 0.5,
            _ => 1.0,
        }
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(self.integration_element()? * self.reference_volume())
    }

    /// Arithmetic mean of the corners.
    pub fn center(&self) -> Coords {
        let n = self.corners.len() as f64;
        let mut c = Coords::from_elem(0.0, self.coorddim());
        for corner in &self.corners {
            for (ci, x) in c.iter_mut().zip(corner) {
                *ci += x / n;
            }
        }
        c
    }

    /// `Aᵀ`, a `k × w` matrix.
    pub fn jacobian_transposed(&self) -> Matrix {
        let mut m = Matrix::zeros(self.mydim(), self.coorddim());
        for (r, col) in self.columns.iter().enumerate() {
            for (c, v) in col.iter().enumerate() {
                m.set(r, c, *v);
            }
        }
        m
    }

    /// Pseudo-inverse transpose `A (AᵀA)⁻¹`, a `w × k` matrix.
    pub fn jacobian_inverse_transposed(&self) -> Result<Matrix> {
        self.check()?;
        let k = self.mydim();
        let w = self.coorddim();
        let inv = self.gram_inverse();
        let mut m = Matrix::zeros(w, k);
        for r in 0..w {
            for c in 0..k {
                let v = (0..k).map(|j| self.columns[j][r] * inv[j * 2 + c]).sum();
                m.set(r, c, v);
            }
        }
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if self.degenerate {
            Err(GridError::SingularGeometry)
        } else {
            Ok(())
        }
    }

    fn gram_inverse(&self) -> [f64; 4] {
        match self.mydim() {
            1 => [1.0 / self.gram[0], 0.0, 0.0, 0.0],
            2 => {
                let d = self.gram_det;
                [self.gram[3] / d, -self.gram[1] / d, -self.gram[2] / d, self.gram[0] / d]
            }
            _ => [0.0; 4],
        }
    }

    fn solve_gram(&self, rhs: &[f64]) -> Coords {
        match self.mydim() {
            0 => Coords::new(),
            1 => Coords::from_slice(&[rhs[0] / self.gram[0]]),
            _ => {
                let d = self.gram_det;
                Coords::from_slice(&[
                    (self.gram[3] * rhs[0] - self.gram[1] * rhs[1]) / d,
                    (self.gram[0] * rhs[1] - self.gram[2] * rhs[0]) / d,
                ])
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Coords {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(c: &[&[f64]]) -> AffineGeometry {
        AffineGeometry::new(c.iter().copied()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn global_maps_corners_and_interior() {
        let g = geo(&[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]]);
        assert_eq!(g.global(&[0.0, 0.0]).as_slice(), &[0., 0., 0.]);
        assert_eq!(g.global(&[0.25, 0.25]).as_slice(), &[0.25, 0.25, 0.0]);
        let e = geo(&[&[0., 0., 0.], &[2., 0., 0.]]);
        assert_eq!(e.global(&[0.5]).as_slice(), &[1., 0., 0.]);
    }

    #[test]
    fn local_projects_orthogonally() {
        let g = geo(&[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]]);
        assert!(close(&g.local(&[0.25, 0.25, 5.0]).unwrap(), &[0.25, 0.25], 1e-15));
        // 1x1 normal equation: A = (1,1), x - b = (1,0) -> ξ = 1/2.
        let e = geo(&[&[0., 0.], &[1., 1.]]);
        assert!(close(&e.local(&[1.0, 0.0]).unwrap(), &[0.5], 1e-15));
        // Affine hull extension: points beyond the edge map outside [0,1].
        assert!(close(&e.local(&[3.0, 3.0]).unwrap(), &[3.0], 1e-15));
    }

    #[test]
    fn volumes_and_integration_elements() {
        let e = geo(&[&[0., 0., 0.], &[2., 0., 0.]]);
        assert_eq!(e.integration_element().unwrap(), 2.0);
        assert_eq!(e.volume().unwrap(), 2.0);
        let t = geo(&[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]]);
        assert_eq!(t.integration_element().unwrap(), 1.0);
        assert_eq!(t.volume().unwrap(), 0.5);
        // ½|(2,0,0)×(0,2,0)| = 2
        let t2 = geo(&[&[0., 0., 0.], &[2., 0., 0.], &[0., 2., 0.]]);
        assert!((t2.volume().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(t2.center().as_slice(), &[2.0 / 3.0, 2.0 / 3.0, 0.0]);
    }

    #[test]
    fn pseudo_inverse_transposed() {
        let e = geo(&[&[0., 0., 0.], &[2., 0., 0.]]);
        let jit = e.jacobian_inverse_transposed().unwrap();
        assert_eq!((jit.rows(), jit.cols()), (3, 1));
        assert!(close(&[jit.get(0, 0), jit.get(1, 0), jit.get(2, 0)], &[0.5, 0.0, 0.0], 1e-15));

        let t = geo(&[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]]);
        let ident = t.jacobian_inverse_transposed().unwrap().transpose().mul(&t.jacobian_transposed().transpose());
        assert!(close(&ident.data, &[1.0, 0.0, 0.0, 1.0], 1e-15));

        let s = geo(&[&[0., 0.], &[3., 0.], &[0., 3.]]);
        let jit = s.jacobian_inverse_transposed().unwrap();
        assert!(close(&jit.data, &[1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0], 1e-15));
    }

    #[test]
    fn degenerate_geometries_are_rejected() {
        let g = geo(&[&[0., 0., 0.], &[1., 1., 1.], &[2., 2., 2.]]);
        assert!(g.is_degenerate());
        assert_eq!(g.integration_element(), Err(GridError::SingularGeometry));
        assert_eq!(g.local(&[0., 0., 0.]), Err(GridError::SingularGeometry));
        // Still evaluable.
        assert_eq!(g.global(&[1.0, 0.0]).as_slice(), &[1., 1., 1.]);
        let p = geo(&[&[1., 1.], &[1., 1.]]);
        assert!(p.is_degenerate());
    }

    #[test]
    fn tiny_elements_are_not_degenerate() {
        let g = geo(&[&[1.0, 1.0, 1.0], &[1.0 + 1e-9, 1.0, 1.0], &[1.0, 1.0 + 1e-9, 1.0]]);
        assert!(!g.is_degenerate());
        assert!((g.volume().unwrap() - 0.5e-18).abs() < 1e-24);
    }

    #[test]
    fn point_geometry() {
        let p = geo(&[&[1.0, 2.0]]);
        assert_eq!(p.mydim(), 0);
        assert_eq!(p.global(&[]).as_slice(), &[1.0, 2.0]);
        assert_eq!(p.integration_element().unwrap(), 1.0);
        assert!(p.local(&[5.0, 5.0]).unwrap().is_empty());
    }

    #[test]
    fn mismatched_corner_lengths() {
        let r = AffineGeometry::new([vec![0.0, 0.0], vec![1.0]]);
        assert_eq!(r, Err(GridError::DimensionMismatch { expected: 2, got: 1 }));
    }
}
