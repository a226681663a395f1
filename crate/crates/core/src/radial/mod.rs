//! Angular-momentum fibers on discs and annuli.
//!
//! On a rotationally symmetric domain with the radial gauge `A = a(r) e_theta`
//! the form splits over `u = f(r) e^{i m theta}` into
//! `int (|f'|^2 + W_m |f|^2) r dr` plus boundary terms, with
//! `W_m = (m / r - a)^2 - B`.

mod galerkin;
mod zero_energy;

pub use galerkin::Galerkin;
pub use zero_energy::ZeroEnergy;

use crate::count::{Certificate, SpectralCount};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{FieldSpec, RobinSpec};
use crate::gauge::{solve_radial_potential, GaugeData, RadialGauge};
use crate::linalg::TridiagPencil;
use crate::quadrature::gauss_legendre;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// One fiber `H_m` with constant Robin coefficients at the ends.
#[derive(Debug, Clone)]
pub struct FiberOperator<'a> {
    pub m: i64,
    pub gauge: &'a RadialGauge,
    pub g_outer: f64,
    pub g_inner: f64,
    /// Number of grid intervals.
    pub n: usize,
}

impl<'a> FiberOperator<'a> {
    pub fn new(m: i64, gauge: &'a RadialGauge, n: usize) -> Self {
        Self { m, gauge, g_outer: 0.0, g_inner: 0.0, n }
    }

    pub fn with_robin(mut self, g_outer: f64, g_inner: f64) -> Self {
        self.g_outer = g_outer;
        self.g_inner = g_inner;
        self
    }

    pub fn potential(&self, r: f64) -> f64 {
        let v = self.m as f64 / r - self.gauge.a(r);
        v * v - self.gauge.b(r)
    }

    /// Size of `W_m` used to scale the zero guard.
    pub fn scale(&self) -> f64 {
        let g = self.gauge;
        let samples = 256;
        let mut sup_b: f64 = 0.0;
        let mut sup_a2: f64 = 0.0;
        for i in 0..=samples {
            let r = g.r0 + (g.r1 - g.r0) * i as f64 / samples as f64;
            sup_b = sup_b.max(g.b(r).abs());
            sup_a2 = sup_a2.max(g.a(r).powi(2));
        }
        let m = self.m as f64;
        1.0 + sup_b + sup_a2 + m * m / (g.r1 * g.r1)
    }

    /// Zero guard: eigenvalues in `[-eps_neg, 0)` are not counted.
    pub fn eps_neg(&self) -> f64 {
        1e-10 * self.scale()
    }

    /// P1 pencil with weight `r dr` on a uniform grid. On the disc the
    /// origin degree of freedom is dropped when `remove_origin` is set,
    /// which is only allowed for `m != 0`.
    pub fn assemble_with(&self, remove_origin: bool) -> Result<TridiagPencil> {
        if remove_origin && self.m == 0 {
            return Err(Error::OriginDofRemoved);
        }
        let g = self.gauge;
        let n = self.n;
        let h = (g.r1 - g.r0) / n as f64;
        let (gx, gw) = gauss_legendre(4);
        let mut p = TridiagPencil::zeros(n + 1);
        for e in 0..n {
            let ra = g.r0 + h * e as f64;
            let rb = ra + h;
            let stiff = 0.5 * (ra + rb) / h;
            let (mut maa, mut mab, mut mbb) = (0.0, 0.0, 0.0);
            let (mut waa, mut wab, mut wbb) = (0.0, 0.0, 0.0);
            for (x, w) in gx.iter().zip(&gw) {
                let t = 0.5 * (x + 1.0);
                let r = ra + h * t;
                let wt = 0.5 * w * h * r;
                let (pa, pb) = (1.0 - t, t);
                maa += wt * pa * pa;
                mab += wt * pa * pb;
                mbb += wt * pb * pb;
                let v = self.potential(r);
                waa += wt * v * pa * pa;
                wab += wt * v * pa * pb;
                wbb += wt * v * pb * pb;
            }
            p.k_diag[e] += stiff + waa;
            p.k_diag[e + 1] += stiff + wbb;
            p.k_off[e] += -stiff + wab;
            p.m_diag[e] += maa;
            p.m_diag[e + 1] += mbb;
            p.m_off[e] += mab;
        }
        p.k_diag[n] += self.g_outer * g.r1;
        if g.r0 > 0.0 {
            p.k_diag[0] += self.g_inner * g.r0;
        }
        if remove_origin {
            if g.r0 > 0.0 {
                return Err(Error::InvalidInput("the annulus has no origin degree of freedom".into()));
            }
            return Ok(p.without_first());
        }
        Ok(p)
    }

    /// Pencil with the natural choice of degrees of freedom.
    pub fn assemble(&self) -> Result<TridiagPencil> {
        self.assemble_with(self.gauge.is_disc() && self.m != 0)
    }

    /// Lowest eigenvalue of the discrete fiber.
    pub fn lowest_eigenvalue(&self) -> Result<f64> {
        Ok(self.assemble()?.eigenvalue(0, 1e-14))
    }
}

/// Outcome for a single fiber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberResult {
    pub m: i64,
    pub count: usize,
    /// Lowest eigenvalues when the counter resolves them, ascending.
    pub lowest: Vec<f64>,
    /// Eigenvalues counted as negative, ascending.
    pub negative: Vec<f64>,
    pub eps_neg: f64,
}

/// A way of counting the negative eigenvalues of one fiber.
pub trait FiberCounter: Send + Sync {
    fn name(&self) -> &'static str;
    fn count(&self, fiber: &FiberOperator) -> Result<FiberResult>;
}

/// Fiber counters selectable by name.
pub struct FiberCounterRegistry {
    counters: BTreeMap<&'static str, Box<dyn FiberCounter>>,
}

impl FiberCounterRegistry {
    pub fn empty() -> Self {
        Self { counters: BTreeMap::new() }
    }

    pub fn register(&mut self, counter: Box<dyn FiberCounter>) {
        self.counters.insert(counter.name(), counter);
    }

    pub fn get(&self, name: &str) -> Option<&dyn FiberCounter> {
        self.counters.get(name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.counters.keys().copied().collect()
    }
}

impl Default for FiberCounterRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Galerkin::default()));
        r.register(Box::new(ZeroEnergy::default()));
        r
    }
}

/// Fiber sum plus the per-fiber breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct TotalCount {
    pub count: SpectralCount,
    pub fibers: Vec<FiberResult>,
    /// Lowest Galerkin eigenvalue at `m = -M` and `m = M`.
    pub truncation_witness: (f64, f64),
}

/// Inputs for [`total_count`].
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub gauge: GaugeData,
    pub g_outer: f64,
    pub g_inner: f64,
}

impl RadialProblem {
    pub fn new(field: &FieldSpec, domain: &DomainSpec, robin: &RobinSpec) -> Result<Self> {
        let gauge = solve_radial_potential(field, domain)?.with_robin(robin, &domain.lengths())?;
        let constant = |j: usize| {
            robin.components.get(j).map_or(Ok(0.0), |g| {
                g.as_constant().ok_or_else(|| Error::InvalidInput("radial route needs constant Robin data per component".into()))
            })
        };
        Ok(Self { gauge, g_outer: constant(0)?, g_inner: constant(1)? })
    }

    pub fn radial_gauge(&self) -> &RadialGauge {
        self.gauge.radial().expect("radial problem carries a radial gauge")
    }

    pub fn fiber(&self, m: i64, n: usize) -> FiberOperator<'_> {
        FiberOperator::new(m, self.radial_gauge(), n).with_robin(self.g_outer, self.g_inner)
    }

    /// `ceil(|Phi| + |Phi_g|) + 8`.
    pub fn default_cutoff(&self) -> i64 {
        let phi = self.gauge.fluxes.iter().map(|f| f.abs()).sum::<f64>();
        let phig = self.gauge.robin_fluxes.iter().map(|f| f.abs()).sum::<f64>();
        (phi + phig).ceil() as i64 + 8
    }
}

/// Sum of fiber counts over `m in [-cutoff, cutoff]`.
pub fn total_count(problem: &RadialProblem, n: usize, cutoff: i64, counter: &dyn FiberCounter) -> Result<TotalCount> {
    let fibers: Vec<FiberResult> = (-cutoff..=cutoff)
        .into_par_iter()
        .map(|m| counter.count(&problem.fiber(m, n)))
        .collect::<Result<_>>()?;
    let lo = problem.fiber(-cutoff, n).lowest_eigenvalue()?;
    let hi = problem.fiber(cutoff, n).lowest_eigenvalue()?;
    for (m, v) in [(-cutoff, lo), (cutoff, hi)] {
        if v < 0.0 {
            return Err(Error::TruncationCertificate { m, lowest: v });
        }
    }
    let count = fibers.iter().map(|f| f.count).sum();
    let eigs: Vec<f64> = fibers.iter().flat_map(|f| f.negative.iter().copied()).collect();
    let tol = fibers.iter().map(|f| f.eps_neg).fold(0.0, f64::max);
    let cert = Certificate {
        method: format!("radial-{}", counter.name()),
        resolution: n,
        tolerance: tol,
        fiber_range: Some((-cutoff, cutoff)),
    };
    Ok(TotalCount { count: SpectralCount::new(count, eigs, 0.0, cert), fibers, truncation_witness: (lo, hi) })
}

/// `u(r) = r^m e^{-phi(r)}`, the zero-energy solution regular at the origin.
pub fn zero_mode(m: i64, gauge: &RadialGauge) -> impl Fn(f64) -> f64 + '_ {
    move |r: f64| r.powi(m as i32) * (-gauge.phi(r)).exp()
}

/// `u'(R)` for `u = r^m e^{-phi}`; equals `(m - Phi) R^{m-1}` because
/// `phi(R) = 0` and `R a(R) = Phi`.
pub fn zero_mode_derivative(m: i64, gauge: &GaugeData, radius: f64) -> Result<f64> {
    if m < 0 {
        return Err(Error::InvalidInput("zero mode r^m e^{-phi} needs m >= 0".into()));
    }
    let g = gauge.radial().ok_or(Error::NonRadial)?;
    if !g.is_disc() {
        return Err(Error::InvalidInput("zero mode derivative is defined on the disc".into()));
    }
    let u = zero_mode(m, g)(radius);
    Ok((m as f64 / radius - g.a(radius)) * u)
}

/// `d lambda / d beta` for the lowest eigenvalue of the fiber with field
/// `beta B`, at `beta = m / Phi` where the zero mode meets the Neumann
/// condition.
pub fn feynman_hellmann_slope(m: i64, field: &FieldSpec, radius: f64, n: usize) -> Result<f64> {
    if m < 0 {
        return Err(Error::InvalidInput("slope is evaluated for m >= 0".into()));
    }
    let domain = DomainSpec::disc(radius)?;
    let unit = solve_radial_potential(field, &domain)?;
    let flux = unit.fluxes[0];
    if flux.abs() < 1e-14 {
        return Err(Error::ZeroFlux);
    }
    let beta = m as f64 / flux;
    let scaled = solve_radial_potential(&field.scaled(beta), &domain)?;
    let fiber = FiberOperator::new(m, scaled.radial().expect("radial"), n);
    let pencil = fiber.assemble()?;
    let lambda = pencil.eigenvalue(0, 1e-15);
    let mut u = pencil.eigenvector(lambda)?;
    if m != 0 {
        u.insert(0, 0.0);
    }
    let g1 = unit.radial().expect("radial");
    let h = radius / n as f64;
    let (gx, gw) = gauss_legendre(4);
    let mut s = 0.0;
    for e in 0..n {
        let ra = h * e as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let t = 0.5 * (x + 1.0);
            let r = ra + h * t;
            let ur = (1.0 - t) * u[e] + t * u[e + 1];
            let a1 = g1.a(r);
            let integrand = 2.0 * (m as f64 / r - beta * a1) * a1 + g1.b(r);
            s += 0.5 * w * h * r * integrand * ur * ur;
        }
    }
    Ok(-s)
}
