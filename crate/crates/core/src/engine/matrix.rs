use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tile edge of the blocked multiply.
pub const TILE: usize = 64;

static PARALLEL: AtomicBool = AtomicBool::new(false);

/// Enables row-tile parallelism in [`DenseMatrix::matmul`]. Every output
/// entry is still accumulated in the same order, so results do not depend on
/// the thread count.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Row-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} values supplied for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix input"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// `rows × cols` matrix with `diag` on the main diagonal.
    pub fn from_diagonal(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Blocked product `self · other` with a fixed `TILE × TILE` tiling.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (m, inner, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        let block = |(bi, chunk): (usize, &mut [f64])| {
            let i0 = bi * TILE;
            let rows_here = chunk.len() / n;
            for k0 in (0..inner).step_by(TILE) {
                let k1 = (k0 + TILE).min(inner);
                for j0 in (0..n).step_by(TILE) {
                    let j1 = (j0 + TILE).min(n);
                    for r in 0..rows_here {
                        let a_row = &self.data[(i0 + r) * inner..(i0 + r + 1) * inner];
                        let c_row = &mut chunk[r * n + j0..r * n + j1];
                        #[allow(clippy::needless_range_loop)]
                        for k in k0..k1 {
                            let a = a_row[k];
                            let b_row = &other.data[k * n + j0..k * n + j1];
                            for (c, b) in c_row.iter_mut().zip(b_row) {
                                *c += a * b;
                            }
                        }
                    }
                }
            }
        };
        if parallel_enabled() {
            out.par_chunks_mut(TILE * n).enumerate().for_each(block);
        } else {
            out.chunks_mut(TILE * n).enumerate().for_each(block);
        }
        Ok(DenseMatrix { rows: m, cols: n, data: out })
    }

    /// `selfᵀ · self`, made exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = self.transpose().matmul(self).expect("shapes agree");
        let n = g.rows;
        for i in 0..n {
            for j in i + 1..n {
                g.data[j * n + i] = g.data[i * n + j];
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, other: &DenseMatrix, s: f64) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Ok(DenseMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.add_scaled(other, -1.0)
    }

    /// `self + s·I` for a square matrix.
    pub fn add_identity(&self, s: f64) -> DenseMatrix {
        assert_eq!(self.rows, self.cols, "add_identity needs a square matrix");
        let mut m = self.clone();
        for i in 0..self.rows {
            m.data[i * self.cols + i] += s;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = self.data.iter().map(|v| (v / scale) * (v / scale)).sum();
        scale * sum.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn dot(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "shape {}x{} does not match {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn blocked_product_matches_naive() {
        let a = gaussian_matrix(130, 70, 1);
        let b = gaussian_matrix(70, 150, 2);
        let c = a.matmul(&b).unwrap();
        let d = naive(&a, &b);
        assert!(c.sub(&d).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn parallel_product_is_bitwise_identical() {
        let a = gaussian_matrix(200, 90, 3);
        let b = gaussian_matrix(90, 75, 4);
        let serial = a.matmul(&b).unwrap();
        set_parallel(true);
        let par = a.matmul(&b).unwrap();
        set_parallel(false);
        assert_eq!(serial, par);
    }

    #[test]
    fn shape_errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(a.matmul(&DenseMatrix::zeros(2, 3)).is_err());
        assert!(a.add(&DenseMatrix::zeros(3, 2)).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn gram_is_symmetric() {
        let a = gaussian_matrix(40, 9, 5);
        let g = a.gram();
        assert_eq!(g, g.transpose());
        assert!(g.sub(&naive(&a.transpose(), &a)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn norms() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(m.frobenius_norm(), 5.0);
        assert_eq!(m.trace(), 7.0);
        assert_eq!(DenseMatrix::zeros(2, 2).frobenius_norm(), 0.0);
        assert_eq!(DenseMatrix::identity(16).frobenius_norm(), 4.0);
    }
}
