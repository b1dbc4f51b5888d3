//! Eigenvalues of symmetric banded matrices.
//!
//! The band is reduced to tridiagonal form with Givens rotations (bulge
//! chasing, `O(N²b)`), and the tridiagonal eigenvalues are found by the
//! implicit QL iteration. Only eigenvalues are produced.

use crate::error::{Error, Result};

const QL_MAX_ITERATIONS: usize = 60;

/// Symmetric matrix with half-bandwidth `bandwidth`, stored densely.
struct BandWork {
    n: usize,
    bandwidth: usize,
    a: Vec<f64>,
}

impl BandWork {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Rotates rows/columns `p` and `p + 1` so that entry `(p + 1, col)` vanishes.
    fn annihilate(&mut self, p: usize, col: usize) {
        let q = p + 1;
        let x = self.at(p, col);
        let y = self.at(q, col);
        if y == 0.0 {
            return;
        }
        let r = x.hypot(y);
        let (c, s) = (x / r, y / r);
        let n = self.n;
        let lo = p.saturating_sub(self.bandwidth + 1);
        let hi = (q + self.bandwidth + 2).min(n);
        for j in lo..hi {
            let (u, v) = (self.a[p * n + j], self.a[q * n + j]);
            self.a[p * n + j] = c * u + s * v;
            self.a[q * n + j] = -s * u + c * v;
        }
        for i in lo..hi {
            let (u, v) = (self.a[i * n + p], self.a[i * n + q]);
            self.a[i * n + p] = c * u + s * v;
            self.a[i * n + q] = -s * u + c * v;
        }
        self.a[q * n + col] = 0.0;
        self.a[col * n + q] = 0.0;
    }
}

/// Reduces a symmetric band matrix, given by its generator `entry(i, j)` for
/// `|i - j| ≤ bandwidth`, to tridiagonal `(diagonal, off_diagonal)`.
pub fn tridiagonalize<F: Fn(usize, usize) -> f64>(n: usize, bandwidth: usize, entry: F) -> (Vec<f64>, Vec<f64>) {
    let mut work = BandWork {
        n,
        bandwidth,
        a: vec![0.0; n * n],
    };
    for i in 0..n {
        for j in i.saturating_sub(bandwidth)..(i + bandwidth + 1).min(n) {
            work.a[i * n + j] = entry(i, j);
        }
    }
    if bandwidth > 1 {
        for k in 0..n.saturating_sub(2) {
            let reach = bandwidth.min(n - 1 - k);
            for offset in (2..=reach).rev() {
                let row = k + offset;
                work.annihilate(row - 1, k);
                // Chase the bulge this rotation created down the band.
                let mut col = row - 1;
                let mut bulge = row + bandwidth;
                while bulge < n {
                    work.annihilate(bulge - 1, col);
                    col = bulge - 1;
                    bulge += bandwidth;
                }
            }
        }
    }
    let diagonal = (0..n).map(|i| work.at(i, i)).collect();
    let off_diagonal = (0..n.saturating_sub(1)).map(|i| work.at(i + 1, i)).collect();
    (diagonal, off_diagonal)
}

/// Eigenvalues (unsorted) of the symmetric tridiagonal matrix by implicit QL.
pub fn tridiagonal_eigenvalues(diagonal: &[f64], off_diagonal: &[f64]) -> Result<Vec<f64>> {
    let n = diagonal.len();
    assert_eq!(off_diagonal.len(), n.saturating_sub(1));
    let mut d = diagonal.to_vec();
    let mut e = off_diagonal.to_vec();
    e.push(0.0);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > QL_MAX_ITERATIONS {
                return Err(Error::NotConverged("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Eigenvalues of a symmetric band matrix, sorted descending.
pub fn band_eigenvalues<F: Fn(usize, usize) -> f64>(n: usize, bandwidth: usize, entry: F) -> Result<Vec<f64>> {
    let (d, e) = tridiagonalize(n, bandwidth, entry);
    let mut values = tridiagonal_eigenvalues(&d, &e)?;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};

    fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    fn random_band(n: usize, bw: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..(i + bw + 1).min(n) {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn matches_dense_solver() {
        for (n, bw, seed) in [(1, 0, 1), (2, 1, 2), (7, 3, 3), (30, 5, 4), (64, 20, 5), (25, 24, 6), (40, 1, 7)] {
            let m = random_band(n, bw, seed);
            let banded = band_eigenvalues(n, bw, |i, j| m[(i, j)]).unwrap();
            let dense = dense_eigenvalues(&m);
            for (a, b) in banded.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-11, "n={n} bw={bw}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tridiagonal_form_is_similar() {
        let m = random_band(20, 4, 9);
        let (d, e) = tridiagonalize(20, 4, |i, j| m[(i, j)]);
        let trace: f64 = d.iter().sum();
        assert!((trace - m.trace()).abs() < 1e-12);
        let frob: f64 = d.iter().map(|x| x * x).sum::<f64>() + 2.0 * e.iter().map(|x| x * x).sum::<f64>();
        assert!((frob - m.norm_squared()).abs() < 1e-11);
    }

    #[test]
    fn diagonal_input() {
        let values = band_eigenvalues(4, 2, |i, j| if i == j { i as f64 } else { 0.0 }).unwrap();
        assert_eq!(values, vec![3.0, 2.0, 1.0, 0.0]);
    }
}
