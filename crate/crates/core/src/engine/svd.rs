//! One-sided (Hestenes) Jacobi SVD, used as the ground truth in tests and
//! for spectral error metrics.

use crate::engine::DenseMatrix;
use crate::error::{Error, Result};

/// Largest column count the oracle accepts.
pub const ORACLE_CAP: usize = 512;

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;

/// Thin SVD `A = U·diag(s)·Vᵀ` with `U` m×n, `V` n×n, `s` non-increasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.s.len();
        let us = DenseMatrix::from_fn(self.u.rows(), n, |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.transpose()).expect("shapes agree")
    }

    /// Orthogonal polar factor `U·Vᵀ`.
    pub fn polar_factor(&self) -> DenseMatrix {
        self.u.matmul(&self.v.transpose()).expect("shapes agree")
    }
}

struct Columns {
    m: usize,
    data: Vec<f64>,
}

impl Columns {
    fn from_matrix(a: &DenseMatrix) -> Self {
        Self { m: a.rows(), data: a.transpose().data().to_vec() }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    fn pair(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let (lo, hi) = self.data.split_at_mut(q * self.m);
        (&mut lo[p * self.m..(p + 1) * self.m], &mut hi[..self.m])
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn check_input(a: &DenseMatrix) -> Result<()> {
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!("oracle SVD needs rows >= cols, got {}x{}", a.rows(), a.cols())));
    }
    if a.cols() > ORACLE_CAP {
        return Err(Error::OracleCap { cols: a.cols(), cap: ORACLE_CAP });
    }
    Ok(())
}

/// Orthogonalizes the columns of `w` in place, applying the same rotations
/// to `v` when present.
fn jacobi_sweeps(w: &mut Columns, mut v: Option<&mut Columns>, n: usize) {
    let mut norms: Vec<f64> = (0..n).map(|j| dot(w.col(j), w.col(j))).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(w.col(p), w.col(q));
                if gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let (wp, wq) = w.pair(p, q);
                rotate(wp, wq, c, s);
                if let Some(v) = v.as_deref_mut() {
                    let (vp, vq) = v.pair(p, q);
                    rotate(vp, vq, c, s);
                }
                norms[p] = dot(w.col(p), w.col(p));
                norms[q] = dot(w.col(q), w.col(q));
            }
        }
        if !rotated {
            return;
        }
    }
    log::warn!("one-sided Jacobi stopped after {MAX_SWEEPS} sweeps");
}

fn sorted_norms(w: &Columns, n: usize) -> (Vec<usize>, Vec<f64>) {
    let norms: Vec<f64> = (0..n).map(|j| dot(w.col(j), w.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s = order.iter().map(|&j| norms[j]).collect();
    (order, s)
}

/// Full thin SVD. Left vectors of zero singular values are completed to an
/// orthonormal set.
pub fn reference_svd(a: &DenseMatrix) -> Result<Svd> {
    check_input(a)?;
    let (m, n) = a.shape();
    let mut w = Columns::from_matrix(a);
    let mut v = Columns::from_matrix(&DenseMatrix::identity(n));
    jacobi_sweeps(&mut w, Some(&mut v), n);
    let (order, s) = sorted_norms(&w, n);
    let tiny = s[0] * (m as f64) * f64::EPSILON;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        if s[k] > tiny && s[k] > 0.0 {
            u_cols.push(w.col(j).iter().map(|x| x / s[k]).collect());
        } else {
            u_cols.push(complete_column(&u_cols, m));
        }
    }
    let u = DenseMatrix::from_fn(m, n, |i, k| u_cols[k][i]);
    let v_mat = DenseMatrix::from_fn(n, n, |i, k| v.col(order[k])[i]);
    Ok(Svd { u, s, v: v_mat })
}

/// Unit vector orthogonal to `basis`, found by Gram-Schmidt on coordinate
/// vectors.
fn complete_column(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..m {
        let mut x = vec![0.0; m];
        x[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &x);
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
            }
        }
        let norm = dot(&x, &x).sqrt();
        if norm > 0.5 {
            return x.into_iter().map(|xi| xi / norm).collect();
        }
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, x));
        }
    }
    let (norm, x) = best.expect("m >= 1");
    x.into_iter().map(|xi| xi / norm).collect()
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_input(a)?;
    let n = a.cols();
    let mut w = Columns::from_matrix(a);
    jacobi_sweeps(&mut w, None, n);
    Ok(sorted_norms(&w, n).1)
}

pub fn polar_factor(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(reference_svd(a)?.polar_factor())
}
