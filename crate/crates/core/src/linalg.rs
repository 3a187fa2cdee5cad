//! Banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage keeps `kl` extra super-diagonals for the fill-in produced by row
/// interchanges, so the factorization runs in place.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        // Column-major band storage; row `kl + ku + i - j` of column `j`.
        j * self.ld + self.kl + self.ku + i - j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku;
        let mut x = b.to_vec();
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let at = |m: &Self, i: usize, j: usize| m.data[j * m.ld + kv + i - j];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = at(&self, k, k).abs();
            for i in k + 1..=last {
                let v = at(&self, i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300 && best > f64::EPSILON * 1e-6 * scale) {
                return Err(Error::Singular(k));
            }
            let jmax = (k + kv).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, c) = (j * self.ld + kv + k - j, j * self.ld + kv + p - j);
                    self.data.swap(a, c);
                }
                x.swap(k, p);
            }
            let piv = at(&self, k, k);
            for i in k + 1..=last {
                let l = at(&self, i, k) / piv;
                if l == 0.0 {
                    continue;
                }
                self.data[k * self.ld + kv + i - k] = l;
                for j in k + 1..=jmax {
                    let u = at(&self, k, j);
                    if u != 0.0 {
                        self.data[j * self.ld + kv + i - j] -= l * u;
                    }
                }
                x[i] -= l * x[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + kv).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=jmax {
                s -= at(&self, k, j) * x[j];
            }
            x[k] = s / at(&self, k, k);
        }
        Ok(x)
    }
}
