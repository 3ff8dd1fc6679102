//! Banded LU factorisation without pivoting.
//!
//! Every sparse system in the crate is a five-point stencil on a
//! row-major structured grid, so the half-bandwidth is the row length.
//! The pressure matrices are SPD and the upwind transport Jacobians are
//! column diagonally dominant, both of which make pivoting unnecessary.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Relative pivot threshold below which a factorisation is rejected.
const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    // row i holds columns i-lower ..= i+upper
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = lower + upper + 1;
        BandMatrix {
            n,
            lower,
            upper,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper, "({i},{j}) outside band");
        i * self.width() + (j + self.lower - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            return 0.0;
        }
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self.offset(i, j);
        self.data[k] += value;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.offset(i, j);
        self.data[k] = value;
    }

    /// Zeroes row and column `i` and puts a one on the diagonal.
    pub fn pin(&mut self, i: usize) {
        let lo = i.saturating_sub(self.lower);
        let hi = (i + self.upper).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, 0.0);
        }
        let lo = i.saturating_sub(self.upper);
        let hi = (i + self.lower).min(self.n - 1);
        for r in lo..=hi {
            self.set(r, i, 0.0);
        }
        self.set(i, i, 1.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[self.offset(i, j)] * xj;
            }
            *yi = acc;
        }
        y
    }

    /// In-place LU factorisation (unit lower factor stored below the diagonal).
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let scale = (0..n).map(|i| self.get(i, i).abs()).fold(0.0_f64, f64::max);
        if scale == 0.0 && n > 0 {
            return Err(Error::SingularSystem {
                row: 0,
                pivot: 0.0,
                scale,
            });
        }
        for k in 0..n {
            let pivot = self.data[self.offset(k, k)];
            if !(pivot.abs() > PIVOT_TOLERANCE * scale) {
                return Err(Error::SingularSystem {
                    row: k,
                    pivot,
                    scale,
                });
            }
            let row_end = (k + self.lower).min(n - 1);
            let col_end = (k + self.upper).min(n - 1);
            for i in k + 1..=row_end {
                let ik = self.offset(i, k);
                let factor = self.data[ik] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[ik] = factor;
                for j in k + 1..=col_end {
                    let kj = self.data[self.offset(k, j)];
                    let ij = self.offset(i, j);
                    self.data[ij] -= factor * kj;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        for i in 0..n {
            let lo = i.saturating_sub(m.lower);
            let mut acc = b[i];
            for (j, bj) in b.iter().enumerate().take(i).skip(lo) {
                acc -= m.data[m.offset(i, j)] * bj;
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + m.upper).min(n - 1);
            let mut acc = b[i];
            for (j, bj) in b.iter().enumerate().take(hi + 1).skip(i + 1) {
                acc -= m.data[m.offset(i, j)] * bj;
            }
            b[i] = acc / m.data[m.offset(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
