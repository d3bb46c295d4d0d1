//! Square banded matrices with an in-place LU factorization (no pivoting).

use crate::error::{numerical, Result};
use crate::scalar::Real;

/// `n × n` matrix with equal lower and upper bandwidth `bw`.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![T::zero(); n * (2 * bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::zero()
        } else {
            self.data[self.at(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.at(i, j);
        self.data[k] = self.data[k] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Doolittle LU in place; fails on a vanishing pivot.
    pub fn factor(mut self) -> Result<BandLu<T>> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let piv = self.data[self.at(k, k)];
            if !(piv.abs() > T::min_positive_value()) || !piv.is_finite() {
                return numerical(format!("banded LU: pivot {piv} at row {k}"));
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let ik = self.at(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..end {
                    let kj = self.data[self.at(k, j)];
                    let ij = self.at(i, j);
                    self.data[ij] = self.data[ij] - l * kj;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

/// Factored form of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    m: BandMatrix<T>,
}

impl<T: Real> BandLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, bw) = (self.m.n, self.m.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for j in lo..i {
                s = s - self.m.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let mut s = x[i];
            for j in i + 1..hi {
                s = s - self.m.get(i, j) * x[j];
            }
            x[i] = s / self.m.get(i, i);
        }
        x
    }
}
