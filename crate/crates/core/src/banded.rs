/*
Copyright 2026 The maobs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Symmetric banded matrices and their Cholesky factorization.

/// Lower band of a symmetric matrix: `data[i * (bw + 1) + d] = A[i][i - d]`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Replaces row and column `i` by the unit vector scaled by `diag`.
    pub fn isolate(&mut self, i: usize, diag: f64) {
        for j in i.saturating_sub(self.bw)..i {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        for r in i + 1..(i + self.bw + 1).min(self.n) {
            let k = self.idx(r, i);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = diag;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky `A = L L^T`; returns the failing pivot on breakdown.
    pub fn cholesky(mut self) -> Result<BandCholesky, usize> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.data[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(i);
                    }
                    self.data[i * w] = s.sqrt();
                } else {
                    self.data[i * w + (i - j)] = s / self.data[j * w];
                }
            }
        }
        Ok(BandCholesky { m: self })
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky {
    m: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.m.n, self.m.bw);
        let w = bw + 1;
        let d = &self.m.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= d[i * w + (i - k)] * y[k];
            }
            y[i] = s / d[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for r in i + 1..(i + w).min(n) {
                s -= d[r * w + (r - i)] * y[r];
            }
            y[i] = s / d[i * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solves_random_spd(n in 1usize..40, bw in 0usize..6, seed in proptest::collection::vec(-1.0f64..1.0, 300)) {
            let mut m = BandMatrix::zeros(n, bw);
            let mut t = 0;
            for i in 0..n {
                for j in i.saturating_sub(bw)..i {
                    m.add(i, j, seed[t % seed.len()] * 0.3);
                    t += 1;
                }
                m.add(i, i, 2.0 * bw as f64 + 1.0);
            }
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let b = m.mul_vec(&x);
            let y = m.clone().cholesky().unwrap().solve(&b);
            for (a, c) in x.iter().zip(&y) {
                prop_assert!((a - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn isolate_keeps_symmetry() {
        let mut m = BandMatrix::zeros(3, 1);
        for i in 0..3 {
            m.add(i, i, 4.0);
        }
        m.add(1, 0, 1.0);
        m.add(2, 1, 1.0);
        m.isolate(1, 5.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(2, 1), 0.0);
        assert_eq!(m.get(1, 1), 5.0);
        assert!(BandMatrix::zeros(1, 0).cholesky().is_err());
    }
}
