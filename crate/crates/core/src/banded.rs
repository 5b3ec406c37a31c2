//! Banded LU factorization with partial pivoting.
//!
//! Row `r` stores columns `r - kl ..= r + kl + ku`; the extra `kl` columns
//! on the right hold fill-in created by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let offset = c as isize - r as isize + self.kl as isize;
        if r < self.n && c < self.n && offset >= 0 && (offset as usize) < self.width {
            Some(r * self.width + offset as usize)
        } else {
            None
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |s| self.data[s])
    }

    /// Writes an entry inside the declared band. Panics outside it.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r}, {c}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let s = self.slot(r, c).expect("in band");
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.get(r, c) * x[c]).sum()
            })
            .collect()
    }

    /// Factorizes in place, consuming the matrix.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let last_row = (i + self.kl).min(n - 1);
            let mut p = i;
            let mut best = self.get(i, i).abs();
            for r in i + 1..=last_row {
                let v = self.get(r, i).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > scale * 1e-300) || best == 0.0 {
                return Err(Error::SingularJacobian(i));
            }
            pivots[i] = p;
            let last_col = (i + self.kl + self.ku).min(n - 1);
            if p != i {
                for c in i..=last_col {
                    let a = self.slot(i, c).expect("pivot row band");
                    let b = self.slot(p, c).expect("candidate row band");
                    self.data.swap(a, b);
                }
            }
            let diag = self.get(i, i);
            for r in i + 1..=last_row {
                let sr = self.slot(r, i).expect("sub-diagonal");
                let factor = self.data[sr] / diag;
                self.data[sr] = factor;
                if factor != 0.0 {
                    for c in i + 1..=last_col {
                        let u = self.get(i, c);
                        if u != 0.0 {
                            let s = self.slot(r, c).expect("fill-in band");
                            self.data[s] -= factor * u;
                        }
                    }
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.lu;
        let n = a.n;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let p = self.pivots[i];
            if p != i {
                x.swap(i, p);
            }
            let last_row = (i + a.kl).min(n - 1);
            for r in i + 1..=last_row {
                x[r] -= a.get(r, i) * x[i];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + a.kl + a.ku).min(n - 1);
            let mut s = x[i];
            for c in i + 1..=last_col {
                s -= a.get(i, c) * x[c];
            }
            x[i] = s / a.get(i, i);
        }
        x
    }
}
