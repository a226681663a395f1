//! Periodic functions on `[0, L)` and their Fourier coefficients.

use crate::field::ScalarFn1;
use crate::linalg::C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Fourier coefficients `c_k`, `|k| <= K`, of `f(s) = sum c_k e^{i k w s}`
/// from `n` equispaced samples (`w = 2 pi / L`). `n` is raised to
/// `2K + 1` if needed.
pub fn coefficients(f: impl Fn(f64) -> C64, length: f64, n: usize, kmax: usize) -> Vec<C64> {
    let n = n.max(2 * kmax + 1);
    let mut buf: Vec<C64> = (0..n).map(|j| f(length * j as f64 / n as f64)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    (0..=2 * kmax)
        .map(|i| {
            let k = i as i64 - kmax as i64;
            buf[k.rem_euclid(n as i64) as usize] * scale
        })
        .collect()
}

/// Real periodic function of arclength on a curve of length `length`.
#[derive(Clone)]
pub struct Periodic {
    pub length: f64,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    /// `a0 + sum cos[k-1] cos(k w s) + sin[k-1] sin(k w s)`.
    Trig { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
    Function(ScalarFn1),
    /// Equispaced samples, periodic linear interpolation.
    Samples(Vec<f64>),
}

impl fmt::Debug for Periodic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Trig { a0, cos, sin } => write!(f, "Trig(L = {}, a0 = {a0}, cos = {cos:?}, sin = {sin:?})", self.length),
            Kind::Function(_) => write!(f, "Function(L = {})", self.length),
            Kind::Samples(v) => write!(f, "Samples(L = {}, {} values)", self.length, v.len()),
        }
    }
}

impl Periodic {
    pub fn constant(c: f64, length: f64) -> Self {
        Self::trig(c, &[], &[], length)
    }

    pub fn trig(a0: f64, cos: &[f64], sin: &[f64], length: f64) -> Self {
        Self { length, kind: Kind::Trig { a0, cos: cos.to_vec(), sin: sin.to_vec() } }
    }

    pub fn function(length: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { length, kind: Kind::Function(Arc::new(f)) }
    }

    pub fn samples(length: f64, values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self { length, kind: Kind::Samples(values) }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Trig { a0, cos, sin } => {
                let x = self.omega() * s;
                let mut v = *a0;
                for (k, c) in cos.iter().enumerate() {
                    v += c * ((k + 1) as f64 * x).cos();
                }
                for (k, c) in sin.iter().enumerate() {
                    v += c * ((k + 1) as f64 * x).sin();
                }
                v
            }
            Kind::Function(f) => f(s),
            Kind::Samples(v) => {
                let n = v.len();
                let x = (s / self.length).rem_euclid(1.0) * n as f64;
                let i = (x.floor() as usize).min(n - 1);
                let t = x - i as f64;
                (1.0 - t) * v[i] + t * v[(i + 1) % n]
            }
        }
    }

    /// `(1 / 2 pi) int_0^L f ds`.
    pub fn flux(&self) -> f64 {
        match &self.kind {
            Kind::Trig { a0, .. } => a0 * self.length / (2.0 * PI),
            Kind::Samples(v) => v.iter().sum::<f64>() / v.len() as f64 * self.length / (2.0 * PI),
            Kind::Function(_) => {
                let n = 4096;
                (0..n).map(|j| self.eval(self.length * j as f64 / n as f64)).sum::<f64>() / n as f64 * self.length / (2.0 * PI)
            }
        }
    }

    /// Coefficients `c_k`, `|k| <= kmax`, by FFT of `n` samples.
    pub fn coefficients(&self, n: usize, kmax: usize) -> Vec<C64> {
        coefficients(|s| C64::new(self.eval(s), 0.0), self.length, n, kmax)
    }

    /// `self - other`, both on the same length.
    pub fn minus(&self, other: &Periodic) -> Periodic {
        match (&self.kind, &other.kind) {
            (Kind::Trig { a0, cos, sin }, Kind::Trig { a0: b0, cos: bc, sin: bs }) => {
                let sub = |x: &[f64], y: &[f64]| -> Vec<f64> {
                    (0..x.len().max(y.len())).map(|i| x.get(i).unwrap_or(&0.0) - y.get(i).unwrap_or(&0.0)).collect()
                };
                Periodic::trig(a0 - b0, &sub(cos, bc), &sub(sin, bs), self.length)
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Periodic::function(self.length, move |s| a.eval(s) - b.eval(s))
            }
        }
    }

    pub fn negated(&self) -> Periodic {
        Periodic::constant(0.0, self.length).minus(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_of_trig_polynomial() {
        let f = Periodic::trig(0.7, &[0.3], &[0.0, -0.5], 4.0);
        let c = f.coefficients(64, 3);
        let at = |k: i64| c[(k + 3) as usize];
        assert!((at(0) - 0.7).norm() < 1e-15);
        assert!((at(1) - 0.15).norm() < 1e-15 && (at(-1) - 0.15).norm() < 1e-15);
        // -0.5 sin(2x) = -0.5 (e^{2ix} - e^{-2ix}) / 2i
        assert!((at(2) - C64::new(0.0, 0.25)).norm() < 1e-15);
        assert!(at(3).norm() < 1e-15);
        assert!((f.flux() - 0.7 * 4.0 / (2.0 * PI)).abs() < 1e-15);
    }
}
