//! The boundary operator `D_V = -i d/ds + V` on closed curves.
//!
//! On a curve of length `L` with `w = 2 pi / L` the eigenpairs are
//! `mu_m = w (m + Phi_V)` and `f_{m,V} = e^{i Theta_V} e^{i m w s} / sqrt(L)`,
//! `Theta_V(s) = w Phi_V s - int_0^s V`.

use crate::fourier::{coefficients, Periodic};
use crate::linalg::{hermitian_eigen, C64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Potential on every boundary component, outer first.
#[derive(Debug, Clone)]
pub struct BoundaryPotential {
    pub components: Vec<Periodic>,
}

impl BoundaryPotential {
    pub fn single(v: Periodic) -> Self {
        Self { components: vec![v] }
    }

    /// `V = g - A_tau` per component.
    pub fn from_robin_and_trace(g: &[Periodic], a_tau: &[Periodic]) -> Self {
        Self { components: g.iter().zip(a_tau).map(|(g, a)| g.minus(a)).collect() }
    }

    /// `V^c = -g - A_tau` per component.
    pub fn conjugate_from_robin_and_trace(g: &[Periodic], a_tau: &[Periodic]) -> Self {
        Self { components: g.iter().zip(a_tau).map(|(g, a)| g.negated().minus(a)).collect() }
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.components.iter().map(Periodic::flux).collect()
    }
}

/// Closed-form spectrum on one component.
#[derive(Debug, Clone, Serialize)]
pub struct BoundarySpectrum {
    pub length: f64,
    pub flux: f64,
    pub modes: Vec<i64>,
    pub eigenvalues: Vec<f64>,
    /// Sample points for `eigenfunctions`.
    pub s: Vec<f64>,
    /// `eigenfunctions[i][j] = f_{modes[i], V}(s[j])`.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<C64>>,
}

/// Default Fourier cutoff for phases and numeric checks.
pub const DEFAULT_MODES: usize = 128;

/// `Theta_V` through the spectral antiderivative of the Fourier series.
pub fn theta(v: &Periodic, kmax: usize) -> impl Fn(f64) -> f64 {
    let c = v.coefficients(8 * kmax.max(8), kmax);
    let w = v.omega();
    move |s: f64| {
        let mut acc = C64::new(0.0, 0.0);
        for (i, ck) in c.iter().enumerate() {
            let k = i as i64 - kmax as i64;
            if k != 0 {
                let kw = k as f64 * w;
                acc += ck * (C64::from_polar(1.0, kw * s) - 1.0) / C64::new(0.0, kw);
            }
        }
        -acc.re
    }
}

pub fn eigenvalue(v: &Periodic, m: i64) -> f64 {
    v.omega() * (m as f64 + v.flux())
}

/// Eigenvalues for `m` in `window` and eigenfunctions sampled at `samples`
/// equispaced points (none if `samples == 0`).
pub fn dirac_spectrum(v: &Periodic, window: (i64, i64), samples: usize) -> BoundarySpectrum {
    let modes: Vec<i64> = (window.0..=window.1).collect();
    let eigenvalues = modes.iter().map(|&m| eigenvalue(v, m)).collect();
    let s: Vec<f64> = (0..samples).map(|j| v.length * j as f64 / samples as f64).collect();
    let th = theta(v, DEFAULT_MODES);
    let phase: Vec<f64> = s.iter().map(|&x| th(x)).collect();
    let w = v.omega();
    let norm = 1.0 / v.length.sqrt();
    let eigenfunctions = modes
        .iter()
        .map(|&m| s.iter().zip(&phase).map(|(&x, &p)| C64::from_polar(norm, p + m as f64 * w * x)).collect())
        .collect();
    BoundarySpectrum { length: v.length, flux: v.flux(), modes, eigenvalues, s, eigenfunctions }
}

/// Union of the component spectra, sorted.
pub fn direct_sum_spectrum(v: &BoundaryPotential, window: (i64, i64)) -> Vec<f64> {
    let mut all: Vec<f64> = v.components.iter().flat_map(|c| dirac_spectrum(c, window, 0).eigenvalues).collect();
    all.sort_by(f64::total_cmp);
    all
}

/// `dim ker D_V` on one component: 1 when `Phi_V` is an integer.
pub fn kernel_dimension(v: &Periodic) -> usize {
    let f = v.flux();
    usize::from((f - f.round()).abs() < 1e-12)
}

/// `(2M+1)^2` Fourier-basis matrix `w n delta_{mn} + V^(m - n)`, modes
/// `-M..=M`.
pub fn fourier_matrix(v: &Periodic, m_max: usize) -> DMatrix<C64> {
    let vh = v.coefficients(8 * m_max.max(8), 2 * m_max);
    let w = v.omega();
    let n = 2 * m_max + 1;
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as i64 - j as i64;
        let mut e = vh[(d + 2 * m_max as i64) as usize];
        if i == j {
            e += w * (i as f64 - m_max as f64);
        }
        e
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCheck {
    /// Largest distance of a central eigenvalue to the lattice `w (k + Phi_V)`.
    pub deviation: f64,
    /// Largest deviation of central gaps from `w`.
    pub gap_deviation: f64,
    /// Central eigenvalues, ascending.
    pub central: Vec<f64>,
}

/// Diagonalizes the truncated Fourier matrix and compares its middle third
/// with the exact lattice.
pub fn numeric_spectrum_check(v: &Periodic, m_max: usize) -> SpectrumCheck {
    let (vals, _) = hermitian_eigen(fourier_matrix(v, m_max));
    let n = vals.len();
    let central: Vec<f64> = vals[n / 3..(2 * n).div_ceil(3)].to_vec();
    let w = v.omega();
    let flux = v.flux();
    let deviation = central
        .iter()
        .map(|&mu| {
            let k = (mu / w - flux).round();
            (mu - w * (k + flux)).abs()
        })
        .fold(0.0, f64::max);
    let gap_deviation = central.windows(2).map(|p| (p[1] - p[0] - w).abs()).fold(0.0, f64::max);
    SpectrumCheck { deviation, gap_deviation, central }
}

/// `1_{(-inf, alpha)}(D_V)` in the Fourier basis, from the eigenvectors of
/// the truncated matrix.
#[derive(Debug, Clone)]
pub struct Projection {
    pub matrix: DMatrix<C64>,
    pub rank: usize,
    /// `alpha` lies within `1e-12` of an eigenvalue.
    pub ambiguous: bool,
}

pub fn spectral_projection(v: &Periodic, alpha: f64, m_max: usize) -> Projection {
    let (vals, vecs) = hermitian_eigen(fourier_matrix(v, m_max));
    let n = vals.len();
    let mut p = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (k, &mu) in vals.iter().enumerate() {
        if mu < alpha {
            let col = vecs.column(k);
            p += &col * col.adjoint();
            rank += 1;
        }
    }
    let ambiguous = vals.iter().any(|mu| (mu - alpha).abs() < 1e-12) || {
        let w = v.omega();
        let x = alpha / w - v.flux();
        (x - x.round()).abs() * w < 1e-12
    };
    Projection { matrix: p, rank, ambiguous }
}

/// Toeplitz matrix of multiplication by `u(s)` on modes `-M..=M`.
pub fn multiplication_matrix(u: impl Fn(f64) -> C64, length: f64, m_max: usize) -> DMatrix<C64> {
    let c = coefficients(u, length, 16 * m_max.max(8), 2 * m_max);
    let n = 2 * m_max + 1;
    DMatrix::from_fn(n, n, |i, j| c[(i as i64 - j as i64 + 2 * m_max as i64) as usize])
}

/// Frobenius norm of `Pi_V(alpha) - e^{i Theta} Pi_0(alpha - w Phi_V) e^{-i Theta}`
/// on the central block `|m|, |n| <= M / 3`.
pub fn conjugation_residual(v: &Periodic, alpha: f64, m_max: usize) -> f64 {
    let pv = spectral_projection(v, alpha, m_max).matrix;
    let th = theta(v, m_max);
    let u = multiplication_matrix(|s| C64::from_polar(1.0, th(s)), v.length, m_max);
    let w = v.omega();
    let shifted = alpha - w * v.flux();
    let n = 2 * m_max + 1;
    let p0 = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
        let m = i as f64 - m_max as f64;
        C64::new(if w * m < shifted { 1.0 } else { 0.0 }, 0.0)
    }));
    let conj = &u * p0 * u.adjoint();
    let c = m_max / 3;
    let (lo, hi) = (m_max - c, m_max + c);
    let mut s = 0.0;
    for i in lo..=hi {
        for j in lo..=hi {
            s += (pv[(i, j)] - conj[(i, j)]).norm_sqr();
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    /// `|Pi_{V - kappa}(0) w|`.
    pub lhs_norm: f64,
    /// `|Pi_V(0) h|` with `h = conj(nu) w`.
    pub rhs_norm: f64,
    pub lhs_orthogonal: bool,
    pub rhs_orthogonal: bool,
    pub agree: bool,
}

/// Compares `w _|_ im Pi_{V - kappa}` with `conj(nu) w _|_ im Pi_V`, where
/// `nu(s) = i tau(0) e^{i int_0^s kappa}` is the inward normal as a complex
/// number. `w` holds Fourier coefficients on modes `-M..=M`.
pub fn duality_check(v: &Periodic, kappa: &Periodic, tau0: C64, w: &DVector<C64>, m_max: usize) -> DualityReport {
    let th_k = {
        let c = kappa.coefficients(8 * m_max.max(8), m_max);
        let om = kappa.omega();
        move |s: f64| {
            let mut acc = c[m_max] * s;
            for (i, ck) in c.iter().enumerate() {
                let k = i as i64 - m_max as i64;
                if k != 0 {
                    let kw = k as f64 * om;
                    acc += ck * (C64::from_polar(1.0, kw * s) - 1.0) / C64::new(0.0, kw);
                }
            }
            acc.re
        }
    };
    let nu_bar = move |s: f64| (C64::i() * tau0 * C64::from_polar(1.0, th_k(s))).conj();
    let mult = multiplication_matrix(nu_bar, v.length, m_max);
    let h = &mult * w;
    let p_left = spectral_projection(&v.minus(kappa), 0.0, m_max).matrix;
    let p_right = spectral_projection(v, 0.0, m_max).matrix;
    let lhs_norm = (&p_left * w).norm();
    let rhs_norm = (&p_right * &h).norm();
    let tol = 1e-8 * w.norm().max(1e-300);
    let lhs_orthogonal = lhs_norm <= tol;
    let rhs_orthogonal = rhs_norm <= tol;
    let agree = lhs_orthogonal == rhs_orthogonal && (lhs_norm - rhs_norm).abs() <= tol;
    DualityReport { lhs_norm, rhs_norm, lhs_orthogonal, rhs_orthogonal, agree }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const L: f64 = 2.0 * PI;

    #[test]
    fn closed_form_examples() {
        let s = dirac_spectrum(&Periodic::constant(0.0, L), (-3, 3), 0);
        assert!(s.eigenvalues.iter().zip(&s.modes).all(|(mu, &m)| (mu - m as f64).abs() < 1e-15));
        let half = Periodic::constant(0.5, L);
        assert_eq!(kernel_dimension(&half), 0);
        assert!((eigenvalue(&half, 2) - 2.5).abs() < 1e-15);
        assert_eq!(kernel_dimension(&Periodic::trig(0.0, &[1.0], &[], L)), 1);
    }

    #[test]
    fn cosine_eigenfunctions() {
        let v = Periodic::trig(0.0, &[1.0], &[], L);
        let sp = dirac_spectrum(&v, (-2, 2), 64);
        for (i, &m) in sp.modes.iter().enumerate() {
            for (j, &s) in sp.s.iter().enumerate() {
                let exact = C64::from_polar(1.0 / L.sqrt(), m as f64 * s - s.sin());
                assert!((sp.eigenfunctions[i][j] - exact).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn eigenfunctions_orthonormal_under_quadrature() {
        let v = Periodic::trig(0.7, &[0.3], &[0.2], L);
        let n = 256;
        let sp = dirac_spectrum(&v, (-4, 4), n);
        for a in 0..sp.modes.len() {
            for b in 0..sp.modes.len() {
                let ip: C64 = sp.eigenfunctions[a].iter().zip(&sp.eigenfunctions[b]).map(|(x, y)| x.conj() * y).sum::<C64>() * (L / n as f64);
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ip - target).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn numeric_matches_lattice() {
        assert_eq!(numeric_spectrum_check(&Periodic::constant(0.0, L), 16).deviation, 0.0);
        assert!(numeric_spectrum_check(&Periodic::constant(0.37, L), 16).deviation < 1e-12);
        let chk = numeric_spectrum_check(&Periodic::trig(0.7, &[0.3], &[], L), 64);
        assert!(chk.deviation < 1e-8 && chk.gap_deviation < 1e-8);
    }

    #[test]
    fn projection_ranks() {
        assert_eq!(spectral_projection(&Periodic::constant(0.0, L), 0.0, 20).rank, 20);
        assert_eq!(spectral_projection(&Periodic::constant(-2.5, L), 0.0, 20).rank, 23);
        let p = spectral_projection(&Periodic::constant(0.3, L), 0.0, 10).matrix;
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!(spectral_projection(&Periodic::constant(0.5, L), 0.5, 10).ambiguous);
    }

    #[test]
    fn conjugation_identity() {
        let v = Periodic::trig(0.7, &[0.3], &[], L);
        assert!(conjugation_residual(&v, 0.0, 64) < 1e-8);
    }

    #[test]
    fn duality_on_unit_circle() {
        let m = 16;
        let kappa = Periodic::constant(1.0, L);
        let v = Periodic::constant(0.0, L);
        let mode = |k: i64| DVector::from_fn(2 * m + 1, |i, _| C64::new(if i as i64 - m as i64 == k { 1.0 } else { 0.0 }, 0.0));
        let r = duality_check(&v, &kappa, C64::i(), &mode(5), m);
        assert!(r.lhs_orthogonal && r.rhs_orthogonal && r.agree);
        let r = duality_check(&v, &kappa, C64::i(), &mode(-5), m);
        assert!(!r.lhs_orthogonal && !r.rhs_orthogonal && r.agree);
    }

    #[test]
    fn direct_sum_is_union() {
        let bp = BoundaryPotential { components: vec![Periodic::constant(0.25, L), Periodic::constant(0.5, PI)] };
        let all = direct_sum_spectrum(&bp, (-1, 1));
        let mut expected = vec![-0.75, 0.25, 1.25, -1.5, 0.5, 2.5];
        expected.sort_by(f64::total_cmp);
        assert!(all.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
