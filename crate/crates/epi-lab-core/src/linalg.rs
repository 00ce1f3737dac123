//! Small dense symmetric-positive-definite matrices (noise covariances).
//!
//! Dimensions here are tiny (d <= 3 in practice), so everything is done with
//! a plain Cholesky factor and forward/backward substitution.

use crate::error::{Error, Result};

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    elems: Vec<f64>,      // row-major d*d
    chol_lower: Vec<f64>, // row-major lower-triangular L with A = L L^T
    log_det: f64,
}

impl SpdMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(
                "covariance matrix must be square and non-empty".into(),
            ));
        }
        let mut elems = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                elems[i * d + j] = rows[i][j];
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let diff = (elems[i * d + j] - elems[j * d + i]).abs();
                let scale = elems[i * d + i].abs().max(elems[j * d + j].abs()).max(1.0);
                if diff > 1e-12 * scale {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let chol_lower = cholesky(&elems, d)?;
        let log_det = 2.0 * (0..d).map(|i| chol_lower[i * d + i].ln()).sum::<f64>();
        Ok(Self {
            dim: d,
            elems,
            chol_lower,
            log_det,
        })
    }

    pub fn identity(d: usize) -> Self {
        let mut rows = vec![vec![0.0; d]; d];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        Self::new(&rows).expect("identity is SPD")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut rows = vec![vec![0.0; d]; d];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = diag[i];
        }
        Self::new(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.elems[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    /// Whether the matrix is diagonal (up to exact zeros off the diagonal).
    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// x^T A^{-1} x via one forward substitution: solve L z = x, return |z|^2.
    pub fn quad_form_inv(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let l = &self.chol_lower;
        let mut z = [0.0f64; 8];
        let mut acc = 0.0;
        for i in 0..d {
            let mut s = x[i];
            for j in 0..i {
                s -= l[i * d + j] * z[j];
            }
            let zi = s / l[i * d + i];
            z[i] = zi;
            acc += zi * zi;
        }
        acc
    }

    /// Solve A w = x.
    pub fn solve(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let l = &self.chol_lower;
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut s = x[i];
            for j in 0..i {
                s -= l[i * d + j] * z[j];
            }
            z[i] = s / l[i * d + i];
        }
        // backward: L^T w = z
        let mut w = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = z[i];
            for j in (i + 1)..d {
                s -= l[j * d + i] * w[j];
            }
            w[i] = s / l[i * d + i];
        }
        w
    }

    /// tr(A^{-1} C) for a symmetric C given as rows.
    pub fn trace_inv_times(&self, c: &[Vec<f64>]) -> f64 {
        let d = self.dim;
        let mut tr = 0.0;
        for j in 0..d {
            let col: Vec<f64> = (0..d).map(|i| c[i][j]).collect();
            let w = self.solve(&col);
            tr += w[j];
        }
        tr
    }

    /// y = L x (used to sample N(0, A) from standard normals).
    pub fn chol_mul(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.chol_lower[i * d + j] * x[j];
            }
            out[i] = s;
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor <= 0.0 {
            return Err(Error::InvalidParameter(
                "covariance scale factor must be positive".into(),
            ));
        }
        let rows: Vec<Vec<f64>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(|v| v * factor).collect())
            .collect();
        Self::new(&rows)
    }
}

fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    if d > 8 {
        return Err(Error::Unsupported(format!(
            "covariance dimension {d} exceeds the supported maximum of 8"
        )));
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_roundtrip() {
        let m = SpdMatrix::identity(3);
        assert_eq!(m.det(), 1.0);
        assert_eq!(m.quad_form_inv(&[1.0, 2.0, 3.0]), 14.0);
    }

    #[test]
    fn quad_form_matches_manual_2x2() {
        let m = SpdMatrix::new(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        // inverse of [[2,.5],[.5,1]] is [[1,-0.5],[-0.5,2]]/1.75 * ... check via solve
        let x = [1.0, -1.0];
        let w = m.solve(&x);
        let qf: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((m.quad_form_inv(&x) - qf).abs() < 1e-12);
        assert!((m.det() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_spd() {
        assert!(SpdMatrix::new(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(SpdMatrix::new(&[vec![0.0]]).is_err());
        assert!(SpdMatrix::new(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
    }

    #[test]
    fn trace_inv() {
        let m = SpdMatrix::diagonal(&[2.0, 4.0]).unwrap();
        let c = vec![vec![2.0, 0.0], vec![0.0, 8.0]];
        assert!((m.trace_inv_times(&c) - 3.0).abs() < 1e-12);
    }
}
