//! Compression of `D_V` to the Hardy space (modes `m >= 0`) and the Cayley
//! transfer to the real line.

use crate::count::{Certificate, SpectralCount};
use crate::error::{Error, Result};
use crate::fourier::Periodic;
use crate::linalg::{hermitian_eigen, C64};
use crate::quadrature::adaptive_simpson;
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// `T_{mn} = w m delta_{mn} + V^(m - n)` on modes `0..=M`. Coefficients
/// come from an FFT with `8 M` samples.
pub fn toeplitz_matrix(v: &Periodic, m_max: usize) -> DMatrix<C64> {
    let vh = v.coefficients(8 * m_max.max(2), m_max);
    let w = v.omega();
    let n = m_max + 1;
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as i64 - j as i64;
        let mut e = vh[(d + m_max as i64) as usize];
        if i == j {
            e += w * i as f64;
        }
        e
    })
}

/// Negative eigenvalues of the compression below `-1e-10 w M`.
pub fn toeplitz_count(v: &Periodic, m_max: usize) -> SpectralCount {
    let (vals, _) = hermitian_eigen(toeplitz_matrix(v, m_max));
    let eps = 1e-10 * v.omega() * m_max.max(1) as f64;
    let below: Vec<f64> = vals.into_iter().filter(|&x| x < -eps).collect();
    let cert = Certificate { method: "toeplitz".into(), resolution: m_max, tolerance: eps, fiber_range: None };
    SpectralCount::new(below.len(), below, 0.0, cert)
}

/// `<D_V v, v>` for `v = sum_{n >= 0} a_n e^{i n w s}`, by Fourier algebra:
/// `L * a^H T a`.
pub fn holomorphic_witness_form(coeffs: &[(i64, C64)], v: &Periodic) -> Result<f64> {
    if let Some(&(n, _)) = coeffs.iter().find(|c| c.0 < 0) {
        return Err(Error::NotHolomorphic(n));
    }
    let deg = coeffs.iter().map(|c| c.0).max().unwrap_or(0) as usize;
    let mut a = vec![C64::new(0.0, 0.0); deg + 1];
    for &(n, c) in coeffs {
        a[n as usize] += c;
    }
    let t = toeplitz_matrix(v, deg.max(1));
    let mut s = C64::new(0.0, 0.0);
    for i in 0..=deg {
        for j in 0..=deg {
            s += a[i].conj() * t[(i, j)] * a[j];
        }
    }
    Ok(v.length * s.re)
}

/// Same pairing by the periodic trapezoid rule on `n` points, using
/// `v` and `v'` in closed form.
pub fn witness_by_quadrature(coeffs: &[(i64, C64)], v: &Periodic, n: usize) -> f64 {
    let w = v.omega();
    let mut s = 0.0;
    for j in 0..n {
        let x = v.length * j as f64 / n as f64;
        let mut u = C64::new(0.0, 0.0);
        let mut du = C64::new(0.0, 0.0);
        for &(k, c) in coeffs {
            let e = c * C64::from_polar(1.0, k as f64 * w * x);
            u += e;
            du += e * C64::new(0.0, k as f64 * w);
        }
        let du_op = -C64::i() * du + v.eval(x) * u;
        s += (u.conj() * du_op).re;
    }
    s * v.length / n as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct CayleyTransfer {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub t_max: f64,
    /// `int_R W dt`: adaptive quadrature on `[-t_max, t_max]` plus tail.
    pub line_integral: f64,
    pub tail: f64,
    /// `int V ds` over the unit circle.
    pub circle_integral: f64,
    pub flagged: bool,
}

/// Angle `s` of `(i - t) / (i + t)` on the unit circle.
pub fn cayley_angle(t: f64) -> f64 {
    let d = 1.0 + t * t;
    (2.0 * t / d).atan2((1.0 - t * t) / d)
}

/// `W(t) = 2 / (1 + t^2) V((i - t) / (i + t))` for `V` on the unit circle.
pub fn cayley_transfer(v: &Periodic, t_max: f64, samples: usize, tol: f64) -> Result<CayleyTransfer> {
    if (v.length - 2.0 * PI).abs() > 1e-12 {
        return Err(Error::InvalidInput("Cayley transfer expects a potential on the unit circle".into()));
    }
    let wf = |t: f64| 2.0 / (1.0 + t * t) * v.eval(cayley_angle(t).rem_euclid(2.0 * PI));
    let t: Vec<f64> = (0..samples).map(|i| -t_max + 2.0 * t_max * i as f64 / (samples.max(2) - 1) as f64).collect();
    let w: Vec<f64> = t.iter().map(|&x| wf(x)).collect();
    // split at the origin and at |t| = 1 where W varies fastest
    let breaks = [-t_max, -10.0, -1.0, 0.0, 1.0, 10.0, t_max];
    let mut line = 0.0;
    for p in breaks.windows(2) {
        line += adaptive_simpson(&wf, p[0], p[1], 1e-12);
    }
    // W ~ 2 V(pi) / t^2 for large |t|
    let tail = 4.0 * v.eval(PI) / t_max;
    let line_integral = line + tail;
    let n = 4096;
    let circle_integral = (0..n).map(|k| v.eval(2.0 * PI * k as f64 / n as f64)).sum::<f64>() * 2.0 * PI / n as f64;
    let flagged = (line_integral - circle_integral).abs() > tol;
    Ok(CayleyTransfer { t, w, t_max, line_integral, tail, circle_integral, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: f64 = 2.0 * PI;

    #[test]
    fn constant_potentials_count_exactly() {
        for m in [3, 4, 10, 40] {
            assert_eq!(toeplitz_count(&Periodic::constant(-2.5, L), m).count_negative, 3);
        }
        assert_eq!(toeplitz_count(&Periodic::constant(0.0, L), 16).count_negative, 0);
    }

    #[test]
    fn compression_counts_are_monotone() {
        let v = Periodic::trig(-1.2, &[1.0], &[], L);
        let counts: Vec<usize> = [8, 16, 32, 64].iter().map(|&m| toeplitz_count(&v, m).count_negative).collect();
        assert!(counts.windows(2).all(|p| p[0] <= p[1]), "{counts:?}");
        assert!(counts[3] >= 2);
    }

    #[test]
    fn witness_simple_cases() {
        let v = Periodic::constant(0.8, L);
        assert!((holomorphic_witness_form(&[(0, C64::new(1.0, 0.0))], &v).unwrap() - 2.0 * PI * 0.8).abs() < 1e-13);
        let phi = 1.5;
        let v = Periodic::constant(-phi, L);
        let val = holomorphic_witness_form(&[(3, C64::new(1.0, 0.0))], &v).unwrap();
        assert!((val - 2.0 * PI * (3.0 - phi)).abs() < 1e-12);
        assert!(matches!(holomorphic_witness_form(&[(-1, C64::new(1.0, 0.0))], &v), Err(Error::NotHolomorphic(-1))));
    }

    #[test]
    fn cayley_examples() {
        let one = cayley_transfer(&Periodic::constant(1.0, L), 1e3, 11, 1e-6).unwrap();
        assert!((one.line_integral - 2.0 * PI).abs() < 1e-6 && !one.flagged);
        assert!((one.w[5] - 2.0).abs() < 1e-15);
        let zero = cayley_transfer(&Periodic::constant(0.0, L), 1e3, 11, 1e-6).unwrap();
        assert!(zero.w.iter().all(|&x| x == 0.0));
        let cos = cayley_transfer(&Periodic::trig(0.0, &[1.0], &[], L), 1e3, 11, 1e-6).unwrap();
        assert!(cos.line_integral.abs() < 1e-6, "{}", cos.line_integral);
    }

    #[test]
    fn cayley_angle_parametrizes_the_circle() {
        for t in [-3.0f64, -0.2, 0.0, 0.5, 7.0] {
            let s = cayley_angle(t);
            assert!((s.cos() - (1.0 - t * t) / (1.0 + t * t)).abs() < 1e-15);
            assert!((s.sin() - 2.0 * t / (1.0 + t * t)).abs() < 1e-15);
        }
    }
}
