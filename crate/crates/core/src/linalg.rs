//! Banded LU without pivoting. Only used for matrices of the form
//! I - dt J with J the (symmetric, negative semidefinite) Jacobian of the
//! discrete p-Laplacian, which are symmetric positive definite.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    // row-major, each row holds columns i-bw ..= i+bw
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

    pub fn identity(n: usize, bw: usize) -> Self {
        let mut m = Self::zeros(n, bw);
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        m
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Factorizes in place and solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::NonFinite("banded solve (zero pivot)"));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let s = self.slot(i, k);
                let factor = self.data[s] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[s] = factor;
                for j in k + 1..=last {
                    let src = self.data[self.slot(k, j)];
                    let dst = self.slot(i, j);
                    self.data[dst] -= factor * src;
                }
                b[i] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let last = (k + bw).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=last {
                acc -= self.data[self.slot(k, j)] * b[j];
            }
            b[k] = acc / self.data[self.slot(k, k)];
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("banded solve"));
        }
        Ok(())
    }
}
