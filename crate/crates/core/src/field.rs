//! Magnetic fields and Robin boundary data.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type ScalarFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Monotone piecewise cubic Hermite (Fritsch-Carlson slopes).
    Pchip,
}

/// Tabulated radial profile `B(r)`. Constant extrapolation past the last
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r: Vec<f64>,
    b: Vec<f64>,
    slopes: Vec<f64>,
    interp: Interpolation,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, b: Vec<f64>, interp: Interpolation) -> Result<Self> {
        if r.len() != b.len() || r.len() < 2 {
            return Err(Error::InvalidInput("radial profile needs at least two (r, B) samples of equal length".into()));
        }
        if r[0] != 0.0 {
            return Err(Error::InvalidInput(format!("radial profile must start at r = 0 (got {})", r[0])));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radial profile radii must be strictly increasing".into()));
        }
        if b.iter().chain(&r).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("radial profile contains non-finite values".into()));
        }
        let slopes = match interp {
            Interpolation::Linear => Vec::new(),
            Interpolation::Pchip => pchip_slopes(&r, &b),
        };
        Ok(Self { r, b, slopes, interp })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= 0.0 {
            return self.b[0];
        }
        if r >= self.r[n - 1] {
            return self.b[n - 1];
        }
        let i = self.r.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let (y0, y1) = (self.b[i], self.b[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        match self.interp {
            Interpolation::Linear => y0 + t * (y1 - y0),
            Interpolation::Pchip => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
            }
        }
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

#[derive(Clone)]
pub enum FieldKind {
    Constant(f64),
    Radial(RadialProfile),
    /// `amplitude * exp(-(r / width)^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `c0 + cx * x + cy * y`.
    Affine { c0: f64, cx: f64, cy: f64 },
    /// Closed-form `B(x, y)`.
    Function(ScalarFn2),
    /// Values at the nodes of a mesh.
    Nodal(Vec<f64>),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(b) => write!(f, "Constant({b})"),
            Self::Radial(p) => write!(f, "Radial({} samples)", p.r.len()),
            Self::Gaussian { amplitude, width } => write!(f, "Gaussian {{ amplitude: {amplitude}, width: {width} }}"),
            Self::Affine { c0, cx, cy } => write!(f, "Affine {{ c0: {c0}, cx: {cx}, cy: {cy} }}"),
            Self::Function(_) => write!(f, "Function(..)"),
            Self::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
        }
    }
}

/// Magnetic field `B` together with the sign and monotonicity flags that the
/// counting results rely on.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub nonnegative: bool,
    pub radially_nonincreasing: bool,
}

impl FieldSpec {
    pub fn constant(beta: f64) -> Self {
        Self { kind: FieldKind::Constant(beta), nonnegative: beta >= 0.0, radially_nonincreasing: true }
    }

    pub fn radial(profile: RadialProfile) -> Self {
        let nonnegative = profile.b.iter().all(|&v| v >= 0.0);
        let radially_nonincreasing = profile.b.windows(2).all(|w| w[1] <= w[0]);
        Self { kind: FieldKind::Radial(profile), nonnegative, radially_nonincreasing }
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self {
            kind: FieldKind::Gaussian { amplitude, width },
            nonnegative: amplitude >= 0.0,
            radially_nonincreasing: amplitude >= 0.0,
        }
    }

    pub fn affine(c0: f64, cx: f64, cy: f64) -> Self {
        let flat = cx == 0.0 && cy == 0.0;
        Self { kind: FieldKind::Affine { c0, cx, cy }, nonnegative: flat && c0 >= 0.0, radially_nonincreasing: flat }
    }

    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: FieldKind::Function(Arc::new(f)), nonnegative: false, radially_nonincreasing: false }
    }

    pub fn nodal(values: Vec<f64>) -> Self {
        Self { kind: FieldKind::Nodal(values), nonnegative: false, radially_nonincreasing: false }
    }

    /// Overrides the asserted metadata; checked by [`FieldSpec::validate`].
    pub fn with_flags(mut self, nonnegative: bool, radially_nonincreasing: bool) -> Self {
        self.nonnegative = nonnegative;
        self.radially_nonincreasing = radially_nonincreasing;
        self
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, FieldKind::Constant(_) | FieldKind::Radial(_) | FieldKind::Gaussian { .. })
            || matches!(self.kind, FieldKind::Affine { cx, cy, .. } if cx == 0.0 && cy == 0.0)
    }

    /// `B` as a function of the radius, for radial kinds.
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant(b) => Some(*b),
            FieldKind::Radial(p) => Some(p.eval(r)),
            FieldKind::Gaussian { amplitude, width } => Some(amplitude * (-(r / width).powi(2)).exp()),
            FieldKind::Affine { c0, cx, cy } if *cx == 0.0 && *cy == 0.0 => Some(*c0),
            _ => None,
        }
    }

    /// Pointwise value. `None` for nodal fields.
    pub fn value(&self, x: f64, y: f64) -> Option<f64> {
        match &self.kind {
            FieldKind::Affine { c0, cx, cy } => Some(c0 + cx * x + cy * y),
            FieldKind::Function(f) => Some(f(x, y)),
            FieldKind::Nodal(_) => None,
            _ => self.radial_value(x.hypot(y)),
        }
    }

    /// Values at mesh nodes.
    pub fn nodal_values(&self, nodes: &[[f64; 2]]) -> Result<Vec<f64>> {
        match &self.kind {
            FieldKind::Nodal(v) => {
                if v.len() != nodes.len() {
                    return Err(Error::InvalidInput(format!(
                        "nodal field has {} values but the mesh has {} nodes",
                        v.len(),
                        nodes.len()
                    )));
                }
                Ok(v.clone())
            }
            _ => Ok(nodes.iter().map(|p| self.value(p[0], p[1]).unwrap_or(f64::NAN)).collect()),
        }
    }

    /// `s * B`; flags follow the sign of `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let kind = match &self.kind {
            FieldKind::Constant(b) => FieldKind::Constant(s * b),
            FieldKind::Radial(p) => {
                let b = p.b.iter().map(|v| s * v).collect();
                let slopes = p.slopes.iter().map(|v| s * v).collect();
                FieldKind::Radial(RadialProfile { r: p.r.clone(), b, slopes, interp: p.interp })
            }
            FieldKind::Gaussian { amplitude, width } => FieldKind::Gaussian { amplitude: s * amplitude, width: *width },
            FieldKind::Affine { c0, cx, cy } => FieldKind::Affine { c0: s * c0, cx: s * cx, cy: s * cy },
            FieldKind::Function(f) => {
                let f = f.clone();
                FieldKind::Function(Arc::new(move |x, y| s * f(x, y)))
            }
            FieldKind::Nodal(v) => FieldKind::Nodal(v.iter().map(|b| s * b).collect()),
        };
        let keep = s >= 0.0;
        Self {
            kind,
            nonnegative: keep && self.nonnegative,
            radially_nonincreasing: keep && self.radially_nonincreasing,
        }
    }

    /// Checks the asserted flags against the profile samples and against
    /// values at `probe` points.
    pub fn validate(&self, probe: &[[f64; 2]]) -> Result<()> {
        if let FieldKind::Radial(p) = &self.kind {
            if self.radially_nonincreasing && p.b.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidInput("field flagged radially nonincreasing but the profile increases".into()));
            }
        }
        if self.radially_nonincreasing && !self.is_radial() {
            return Err(Error::InvalidInput("field flagged radially nonincreasing but it is not radial".into()));
        }
        if self.nonnegative {
            let vals = self.nodal_values(probe)?;
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if let Some(v) = vals.iter().find(|&&v| v < -1e-12 * scale) {
                return Err(Error::InvalidInput(format!("field flagged nonnegative but takes the value {v}")));
            }
        }
        Ok(())
    }
}

/// Robin coefficient on one boundary component as a function of the
/// normalized arclength `t = 2 pi s / L` in `[0, 2 pi)`.
#[derive(Clone)]
pub enum RobinData {
    Constant(f64),
    /// `a0 + sum_k cos[k-1] cos(k t) + sin[k-1] sin(k t)`.
    Fourier { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
    Function(ScalarFn1),
}

impl fmt::Debug for RobinData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Fourier { a0, cos, sin } => write!(f, "Fourier {{ a0: {a0}, cos: {cos:?}, sin: {sin:?} }}"),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl RobinData {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Fourier { a0, cos, sin } => {
                let mut v = *a0;
                for (k, c) in cos.iter().enumerate() {
                    v += c * ((k + 1) as f64 * t).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    v += s * ((k + 1) as f64 * t).sin();
                }
                v
            }
            Self::Function(f) => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Fourier { a0, cos, sin } if cos.iter().chain(sin).all(|&c| c == 0.0) => Some(*a0),
            _ => None,
        }
    }

    /// `(1 / 2 pi) * integral of g ds` over a component of length `length`.
    pub fn flux(&self, length: f64) -> f64 {
        match self {
            Self::Constant(c) => c * length / (2.0 * PI),
            Self::Fourier { a0, .. } => a0 * length / (2.0 * PI),
            Self::Function(f) => {
                let n = 1024;
                let mean = (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).sum::<f64>() / n as f64;
                mean * length / (2.0 * PI)
            }
        }
    }
}

/// Robin data per boundary component, outer component first.
#[derive(Debug, Clone)]
pub struct RobinSpec {
    pub components: Vec<RobinData>,
}

impl RobinSpec {
    pub fn neumann(components: usize) -> Self {
        Self { components: vec![RobinData::Constant(0.0); components] }
    }

    pub fn constant(values: &[f64]) -> Self {
        Self { components: values.iter().map(|&c| RobinData::Constant(c)).collect() }
    }

    pub fn component(&self, j: usize) -> &RobinData {
        &self.components[j]
    }

    pub fn is_neumann(&self) -> bool {
        self.components.iter().all(|g| g.as_constant() == Some(0.0))
    }
}

/// Per-component Robin fluxes and their total.
pub fn robin_fluxes(robin: &RobinSpec, lengths: &[f64]) -> Result<(Vec<f64>, f64)> {
    if robin.components.len() != lengths.len() {
        return Err(Error::InvalidInput(format!(
            "Robin data has {} components, domain has {}",
            robin.components.len(),
            lengths.len()
        )));
    }
    let per: Vec<f64> = robin.components.iter().zip(lengths).map(|(g, &l)| g.flux(l)).collect();
    let total = per.iter().sum();
    Ok((per, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_preserves_monotonicity() {
        let p = RadialProfile::new(vec![0.0, 0.3, 0.5, 1.0], vec![4.0, 3.9, 1.0, 0.9], Interpolation::Pchip).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let v = p.eval(i as f64 / 1000.0);
            assert!(v <= prev + 1e-14);
            prev = v;
        }
        assert_eq!(p.eval(0.3), 3.9);
    }

    #[test]
    fn profile_rejects_bad_radii() {
        assert!(RadialProfile::new(vec![0.1, 0.5], vec![1.0, 1.0], Interpolation::Linear).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.5, 0.5], vec![1.0, 1.0, 1.0], Interpolation::Linear).is_err());
    }

    #[test]
    fn nonnegative_flag_is_checked() {
        let f = FieldSpec::affine(0.0, 0.0, -4.0).with_flags(true, false);
        assert!(f.validate(&[[0.0, 0.5]]).is_err());
        assert!(FieldSpec::constant(3.0).validate(&[[0.2, 0.1]]).is_ok());
    }

    #[test]
    fn robin_flux_examples() {
        let two_pi = 2.0 * PI;
        let (per, total) = robin_fluxes(&RobinSpec::neumann(1), &[two_pi]).unwrap();
        assert_eq!((per[0], total), (0.0, 0.0));
        let (_, total) = robin_fluxes(&RobinSpec::constant(&[0.7]), &[two_pi]).unwrap();
        assert!((total - 0.7).abs() < 1e-15);
        let g = RobinSpec { components: vec![RobinData::Function(Arc::new(|t: f64| t.cos()))] };
        let (_, total) = robin_fluxes(&g, &[two_pi]).unwrap();
        assert!(total.abs() < 1e-14);
    }
}
