//! Banded LU factorization without pivoting.
//!
//! The step matrices of the time-stepping kernels and the Dirichlet Laplacian
//! are strictly diagonally dominant (or symmetric positive definite), so
//! Gaussian elimination without pivoting is stable and preserves the band.
//! In 1D the half-bandwidth is 1 and this reduces to the Thomas algorithm.

use crate::error::{Result, WaveError};

/// Square matrix with equal lower and upper half-bandwidth `bw`.
///
/// Entry `(i, j)` with `|i - j| <= bw` is stored at `data[i * (2 bw + 1) + (j + bw - i)]`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.offset(i, j)] * x[j];
            }
            out[i] = acc;
        }
    }

    /// In-place LU factorization (Doolittle, unit lower triangle).
    pub fn factorize(mut self) -> Result<BandedLu> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.data[self.offset(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(WaveError::ZeroPivot(k));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let oik = self.offset(i, k);
                let l = self.data[oik] / pivot;
                self.data[oik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last {
                    let okj = self.offset(k, j);
                    let oij = self.offset(i, j);
                    self.data[oij] -= l * self.data[okj];
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

/// Factored form of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.m.n
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.m.n;
        let bw = self.m.bw;
        debug_assert_eq!(rhs.len(), n);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut acc = rhs[i];
            for k in lo..i {
                acc -= self.m.data[self.m.offset(i, k)] * rhs[k];
            }
            rhs[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut acc = rhs[i];
            for j in i + 1..=hi {
                acc -= self.m.data[self.m.offset(i, j)] * rhs[j];
            }
            rhs[i] = acc / self.m.data[self.m.offset(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        // Gaussian elimination with partial pivoting, used only as an oracle.
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
                .unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                x[i] -= l * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= m[i][j] * x[j];
            }
            x[i] = acc / m[i][i];
        }
        x
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 9;
        let mut band = BandedMatrix::zeros(n, 1);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            band.set(i, i, 4.0 + i as f64 * 0.1);
            dense[i][i] = 4.0 + i as f64 * 0.1;
            if i + 1 < n {
                band.set(i, i + 1, -1.0);
                band.set(i + 1, i, -1.3);
                dense[i][i + 1] = -1.0;
                dense[i + 1][i] = -1.3;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        band.factorize().unwrap().solve_in_place(&mut x);
        let oracle = dense_solve(&dense, &b);
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn wide_band_matches_dense() {
        let n = 12;
        let bw = 3;
        let mut band = BandedMatrix::zeros(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                let v = if i == j {
                    10.0
                } else {
                    ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6
                };
                band.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut x = b.clone();
        band.factorize().unwrap().solve_in_place(&mut x);
        let oracle = dense_solve(&dense, &b);
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut ax = vec![0.0; n];
        let mut check = BandedMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                check.set(i, j, dense[i][j]);
            }
        }
        check.matvec(&x, &mut ax);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let band = BandedMatrix::zeros(3, 1);
        assert!(matches!(band.factorize(), Err(WaveError::ZeroPivot(0))));
    }
}
