//! Counts and eigenvalue sums of `(-i h grad - A)^2` on the disc below the
//! first Landau level `h`, and the de Gennes constant.
//!
//! With `B = 1` the operator equals `h + h^2 H` where `H` is the Pauli form
//! with field `1/h`, so `e_j = h + h^2 lambda_j` and `e_j < h` iff `lambda_j < 0`.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{FieldSpec, RobinSpec};
use crate::linalg::TridiagPencil;
use crate::quadrature::{adaptive_simpson, gauss_legendre};
use crate::radial::{FiberCounter, RadialProblem, ZeroEnergy};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub h: f64,
    pub count: usize,
    /// `ceil(R^2 / 2h)`.
    pub prediction: usize,
    pub sum_e: f64,
    pub sum_gap: f64,
}

impl SweepRow {
    pub fn scaled_gap(&self) -> f64 {
        self.sum_gap / self.h.sqrt()
    }

    pub fn h_count(&self) -> f64 {
        self.h * self.count as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub radius: f64,
    pub rows: Vec<SweepRow>,
    /// `|Omega| / 2 pi`.
    pub area_constant: f64,
    /// Least-squares slope of `h N` against `h`, intercept `area_constant`.
    pub count_slope: f64,
}

/// Radial grid used by the sweep.
pub const SWEEP_GRID: usize = 4096;

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::BadSemiclassical(h));
    }
    Ok(())
}

/// `ceil(R^2 / 2h) + 16`.
pub fn fiber_cutoff(radius: f64, h: f64) -> i64 {
    (radius * radius / (2.0 * h)).ceil() as i64 + 16
}

/// Count and both eigenvalue sums at one `h`. Fibers are counted exactly by
/// the zero-energy counter; the sums use the Galerkin eigenvalues of those
/// fibers, clamped to be nonpositive.
pub fn eigenvalue_sums(radius: f64, h: f64, n: usize) -> Result<SweepRow> {
    check_h(h)?;
    let domain = DomainSpec::disc(radius)?;
    let problem = RadialProblem::new(&FieldSpec::constant(1.0 / h), &domain, &RobinSpec::neumann(1))?;
    let cutoff = fiber_cutoff(radius, h);
    let counter = ZeroEnergy::default();
    let per_fiber: Vec<(usize, Vec<f64>)> = (-cutoff..=cutoff)
        .into_par_iter()
        .map(|m| {
            let fiber = problem.fiber(m, n);
            let k = counter.count(&fiber)?.count;
            if k == 0 {
                return Ok((0, Vec::new()));
            }
            let pencil = fiber.assemble()?;
            let vals = (0..k.min(pencil.len())).map(|i| pencil.eigenvalue(i, 1e-13).min(0.0)).collect();
            Ok((k, vals))
        })
        .collect::<Result<_>>()?;
    let count = per_fiber.iter().map(|f| f.0).sum();
    let lambdas = per_fiber.iter().flat_map(|f| f.1.iter().copied());
    let (mut sum_e, mut sum_gap) = (0.0, 0.0);
    for l in lambdas {
        let e = h + h * h * l;
        sum_e += e;
        sum_gap += h - e;
    }
    let prediction = (radius * radius / (2.0 * h)).ceil() as usize;
    Ok(SweepRow { h, count, prediction, sum_e, sum_gap })
}

/// Rows for a strictly decreasing list of `h`.
pub fn sweep_disc(radius: f64, h_list: &[f64], n: usize) -> Result<SweepResult> {
    for &h in h_list {
        check_h(h)?;
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("h values must be strictly decreasing".into()));
    }
    let rows: Vec<SweepRow> = h_list.par_iter().map(|&h| eigenvalue_sums(radius, h, n)).collect::<Result<_>>()?;
    let area_constant = radius * radius / 2.0;
    let (num, den) = rows.iter().fold((0.0, 0.0), |(a, b), r| (a + r.h * (r.h_count() - area_constant), b + r.h * r.h));
    let count_slope = if den > 0.0 { num / den } else { 0.0 };
    Ok(SweepResult { radius, rows, area_constant, count_slope })
}

/// Lowest eigenvalue of `-u'' + (t - xi)^2 u` on `[0, xi + 10]` with Neumann
/// ends, P1 with `per_unit` elements per unit length.
pub fn de_gennes_mu1(xi: f64, per_unit: usize) -> f64 {
    let len = xi.max(0.0) + 10.0;
    let n = (per_unit as f64 * len).ceil() as usize;
    let h = len / n as f64;
    let (gx, gw) = gauss_legendre(3);
    let mut p = TridiagPencil::zeros(n + 1);
    for e in 0..n {
        let a = h * e as f64;
        let (mut kaa, mut kab, mut kbb) = (1.0 / h, -1.0 / h, 1.0 / h);
        let (mut maa, mut mab, mut mbb) = (0.0, 0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (x + 1.0);
            let t = a + h * s;
            let wt = 0.5 * w * h;
            let v = (t - xi) * (t - xi);
            let (pa, pb) = (1.0 - s, s);
            kaa += wt * v * pa * pa;
            kab += wt * v * pa * pb;
            kbb += wt * v * pb * pb;
            maa += wt * pa * pa;
            mab += wt * pa * pb;
            mbb += wt * pb * pb;
        }
        p.k_diag[e] += kaa;
        p.k_diag[e + 1] += kbb;
        p.k_off[e] += kab;
        p.m_diag[e] += maa;
        p.m_diag[e + 1] += mbb;
        p.m_off[e] += mab;
    }
    p.eigenvalue(0, 1e-15)
}

/// Two-grid extrapolation `(4 mu(2n) - mu(n)) / 3`.
pub fn de_gennes_mu1_extrapolated(xi: f64, per_unit: usize) -> f64 {
    (4.0 * de_gennes_mu1(xi, 2 * per_unit) - de_gennes_mu1(xi, per_unit)) / 3.0
}

#[derive(Debug, Clone, Serialize)]
pub struct DeGennes {
    pub c1: f64,
    /// `|c1 - c1_fine|`.
    pub error_bar: f64,
    pub c1_coarse: f64,
    pub c1_fine: f64,
    /// Estimate of `int_{xi_max}^inf (1 - mu_1)`.
    pub tail: f64,
    pub xi_max: f64,
    pub per_unit: usize,
}

/// Tail tolerance for [`de_gennes_c1`].
pub const DE_GENNES_TAIL_TOL: f64 = 1e-8;

/// `C_1 = int_0^inf (1 - mu_1(xi)) dxi` on grids `per_unit` and
/// `2 per_unit`, extrapolated.
pub fn de_gennes_c1(xi_max: f64, per_unit: usize) -> Result<DeGennes> {
    let integral = |pu: usize| {
        let f = |xi: f64| 1.0 - de_gennes_mu1(xi, pu);
        // the integrand peaks near xi = 0.77; split there to help the adaptive rule
        adaptive_simpson(&f, 0.0, 1.5, 1e-9) + adaptive_simpson(&f, 1.5, xi_max, 1e-9)
    };
    let fine_pu = 2 * per_unit;
    let f_end = (1.0 - de_gennes_mu1_extrapolated(xi_max, fine_pu)).abs();
    let f_prev = (1.0 - de_gennes_mu1_extrapolated(xi_max - 0.5, fine_pu)).abs();
    // geometric tail from the last two samples
    let ratio = if f_prev > 0.0 { f_end / f_prev } else { 0.0 };
    let tail = if ratio < 1.0 { 0.5 * f_end / (1.0 - ratio) } else { 0.5 * (f_prev + f_end) };
    if !(tail < DE_GENNES_TAIL_TOL) {
        return Err(Error::TailNotConverged(tail));
    }
    let (coarse, fine) = rayon::join(|| integral(per_unit), || integral(fine_pu));
    let c1 = (4.0 * fine - coarse) / 3.0;
    Ok(DeGennes { c1, error_bar: (c1 - fine).abs(), c1_coarse: coarse, c1_fine: fine, tail, xi_max, per_unit })
}

/// `(xi, mu_1(xi))` samples.
pub fn de_gennes_curve(xis: &[f64], per_unit: usize) -> Vec<(f64, f64)> {
    xis.par_iter().map(|&xi| (xi, de_gennes_mu1_extrapolated(xi, per_unit))).collect()
}
