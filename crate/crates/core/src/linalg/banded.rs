use super::C64;
use crate::error::{Error, Result};
use serde::Serialize;

/// Signature of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Hermitian matrix stored as its lower band: row `i` keeps columns
/// `i - bandwidth ..= i`.
#[derive(Debug, Clone)]
pub struct BandedHermitian {
    n: usize,
    bw: usize,
    data: Vec<C64>,
}

impl BandedHermitian {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![C64::new(0.0, 0.0); n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Entry `(i, j)` of the full matrix.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j <= i {
            if i - j > self.bw {
                return C64::new(0.0, 0.0);
            }
            self.data[self.idx(i, j)]
        } else {
            self.get(j, i).conj()
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `conj(v)` to `(j, i)`).
    /// Diagonal contributions must be real.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        if j <= i {
            assert!(i - j <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
            let k = self.idx(i, j);
            self.data[k] += v;
        } else {
            self.add(j, i, v.conj());
        }
    }

    /// `self + s * other`, same shape.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect();
        Self { n: self.n, bw: self.bw, data }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a.conj() * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    /// `x^H A x` (real for Hermitian `A`).
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let ax = self.matvec(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Largest relative deviation of the stored diagonal from being real.
    pub fn diagonal_imag_defect(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let d = self.data[self.idx(i, i)];
                d.im.abs() / d.re.abs().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `LDL^H` without pivoting. Fails if a pivot vanishes relative to the
    /// matrix scale.
    pub fn ldl(&self) -> Result<BandedLdl> {
        let n = self.n;
        let bw = self.bw;
        let scale = (0..n).map(|i| self.data[self.idx(i, i)].norm()).fold(0.0, f64::max).max(1e-300);
        let tiny = 64.0 * f64::EPSILON * scale;
        let mut l = self.data.clone();
        let mut d = vec![0.0f64; n];
        let mut w = vec![C64::new(0.0, 0.0); bw + 1];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = i * (bw + 1);
            // w_k = l_ik d_k for k < i, filled as the row is finished.
            for j in j0..i {
                let rowj = j * (bw + 1);
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[row + (j + bw - i)];
                for k in k0..j {
                    s -= w[k - j0] * l[rowj + (k + bw - j)].conj();
                }
                let lij = s / d[j];
                l[row + (j + bw - i)] = lij;
                w[j - j0] = lij * d[j];
            }
            let mut di = l[row + bw].re;
            for k in j0..i {
                let lik = l[row + (k + bw - i)];
                di -= lik.norm_sqr() * d[k];
            }
            if !di.is_finite() || di.abs() <= tiny {
                return Err(Error::Breakdown(i));
            }
            d[i] = di;
            l[row + bw] = C64::new(1.0, 0.0);
        }
        Ok(BandedLdl { n, bw, l, d })
    }
}

/// Result of [`BandedHermitian::ldl`].
#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    bw: usize,
    l: Vec<C64>,
    d: Vec<f64>,
}

impl BandedLdl {
    pub fn inertia(&self) -> Inertia {
        let negative = self.d.iter().filter(|&&v| v < 0.0).count();
        let zero = self.d.iter().filter(|&&v| v == 0.0).count();
        Inertia { negative, zero, positive: self.n - negative - zero }
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let (n, bw) = (self.n, self.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = i * (bw + 1);
            let mut s = y[i];
            for j in j0..i {
                s -= self.l[row + (j + bw - i)] * y[j];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let yi = y[i];
            let j0 = i.saturating_sub(bw);
            let row = i * (bw + 1);
            for j in j0..i {
                y[j] -= self.l[row + (j + bw - i)].conj() * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_banded(n: usize, bw: usize, shift: f64, seed: u64) -> BandedHermitian {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandedHermitian::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
            a.add(i, i, C64::new(rng.random_range(-1.0..1.0) + shift, 0.0));
        }
        a
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        for seed in 0..5 {
            let a = random_banded(40, 4, 0.5, seed);
            let ev = nalgebra::linalg::SymmetricEigen::new(a.to_dense()).eigenvalues;
            let neg = ev.iter().filter(|&&v| v < 0.0).count();
            assert_eq!(a.ldl().unwrap().inertia().negative, neg);
        }
    }

    #[test]
    fn solve_inverts_matvec() {
        let a = random_banded(30, 3, 6.0, 11);
        let x: Vec<C64> = (0..30).map(|i| C64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let b = a.matvec(&x);
        let y = a.ldl().unwrap().solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err = {err}");
    }

    #[test]
    fn exact_zero_pivot_reports_breakdown() {
        let mut a = BandedHermitian::zeros(2, 1);
        a.add(1, 0, C64::new(1.0, 0.0));
        assert!(matches!(a.ldl(), Err(Error::Breakdown(0))));
    }
}
