use crate::error::{Error, Result};

/// Real symmetric tridiagonal pencil `(K, M)` with `M` positive definite.
///
/// Eigenvalue counts use Sylvester's law of inertia on `K - sigma M`, whose
/// `LDL^T` pivots come out of a two-term recurrence.
#[derive(Debug, Clone)]
pub struct TridiagPencil {
    pub k_diag: Vec<f64>,
    pub k_off: Vec<f64>,
    pub m_diag: Vec<f64>,
    pub m_off: Vec<f64>,
}

impl TridiagPencil {
    pub fn zeros(n: usize) -> Self {
        Self {
            k_diag: vec![0.0; n],
            k_off: vec![0.0; n.saturating_sub(1)],
            m_diag: vec![0.0; n],
            m_off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.k_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_diag.is_empty()
    }

    /// Drops the first degree of freedom.
    pub fn without_first(&self) -> Self {
        Self {
            k_diag: self.k_diag[1..].to_vec(),
            k_off: self.k_off.get(1..).unwrap_or(&[]).to_vec(),
            m_diag: self.m_diag[1..].to_vec(),
            m_off: self.m_off.get(1..).unwrap_or(&[]).to_vec(),
        }
    }

    fn scale(&self) -> f64 {
        let k = self.k_diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let m = self.m_diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        k.max(m).max(f64::MIN_POSITIVE)
    }

    /// Number of pencil eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.len();
        let pivmin = f64::EPSILON * f64::EPSILON * self.scale();
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..n {
            let a = self.k_diag[i] - sigma * self.m_diag[i];
            d = if i == 0 {
                a
            } else {
                let b = self.k_off[i - 1] - sigma * self.m_off[i - 1];
                a - b * b / d
            };
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// A shift below the whole spectrum.
    pub fn lower_bound(&self) -> f64 {
        let mut lo = -1.0;
        while self.count_below(lo) > 0 {
            lo *= 2.0;
            if lo < -1e300 {
                break;
            }
        }
        lo
    }

    /// The `k`-th eigenvalue (0-based, ascending) by bisection.
    pub fn eigenvalue(&self, k: usize, rel_tol: f64) -> f64 {
        let mut lo = self.lower_bound();
        let mut hi = 1.0;
        while self.count_below(hi) <= k {
            hi *= 2.0;
            if hi > 1e300 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= rel_tol * (lo.abs().max(hi.abs()).max(1e-300)) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues strictly below `sigma`, ascending.
    pub fn eigenvalues_below(&self, sigma: f64, rel_tol: f64) -> Vec<f64> {
        let n = self.count_below(sigma);
        (0..n).map(|k| self.eigenvalue(k, rel_tol)).collect()
    }

    pub fn mul_m(&self, x: &[f64]) -> Vec<f64> {
        tri_mul(&self.m_diag, &self.m_off, x)
    }

    pub fn mul_k(&self, x: &[f64]) -> Vec<f64> {
        tri_mul(&self.k_diag, &self.k_off, x)
    }

    /// Solves `(K - sigma M) x = rhs` without pivoting.
    pub fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let pivmin = f64::EPSILON * f64::EPSILON * self.scale();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let a = self.k_diag[i] - sigma * self.m_diag[i];
            d[i] = if i == 0 {
                a
            } else {
                let b = self.k_off[i - 1] - sigma * self.m_off[i - 1];
                l[i - 1] = b / d[i - 1];
                a - l[i - 1] * b
            };
            if d[i].abs() < pivmin {
                d[i] = pivmin;
            }
            if !d[i].is_finite() {
                return Err(Error::Breakdown(i));
            }
        }
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= l[i] * y[i + 1];
        }
        Ok(y)
    }

    /// Eigenvector for a converged eigenvalue by inverse iteration,
    /// normalized so that `x^T M x = 1` and with positive last entry sum.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let shift = lambda - 1e-10 * lambda.abs().max(1e-3);
        let mut x = vec![1.0; n];
        for _ in 0..8 {
            let rhs = self.mul_m(&x);
            x = self.solve_shifted(shift, &rhs)?;
            let nrm = dot(&x, &self.mul_m(&x)).sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        if x.iter().sum::<f64>() < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(x)
    }
}

fn tri_mul(diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut y: Vec<f64> = diag.iter().zip(x).map(|(d, x)| d * x).collect();
    for i in 0..n.saturating_sub(1) {
        y[i] += off[i] * x[i + 1];
        y[i + 1] += off[i] * x[i];
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Second-difference matrix with identity mass: eigenvalues
    /// 2 - 2 cos(k pi / (n + 1)).
    fn laplacian(n: usize) -> TridiagPencil {
        let mut p = TridiagPencil::zeros(n);
        p.k_diag.iter_mut().for_each(|v| *v = 2.0);
        p.k_off.iter_mut().for_each(|v| *v = -1.0);
        p.m_diag.iter_mut().for_each(|v| *v = 1.0);
        p
    }

    #[test]
    fn sturm_count_matches_closed_form() {
        let n = 50;
        let p = laplacian(n);
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        for (k, e) in exact.iter().enumerate() {
            assert!((p.eigenvalue(k, 1e-14) - e).abs() < 1e-12);
        }
        assert_eq!(p.count_below(1.1), exact.iter().filter(|&&e| e < 1.1).count());
    }

    #[test]
    fn inverse_iteration_gives_eigenvector() {
        let p = laplacian(30);
        let l = p.eigenvalue(0, 1e-15);
        let x = p.eigenvector(l).unwrap();
        let kx = p.mul_k(&x);
        let mx = p.mul_m(&x);
        let res: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - l * b).abs()).fold(0.0, f64::max);
        assert!(res < 1e-10);
    }
}
