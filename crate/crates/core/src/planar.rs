//! P1 Galerkin discretization of the magnetic Robin form on a planar mesh.

use crate::count::{Certificate, SpectralCount};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{FieldKind, FieldSpec, RobinSpec};
use crate::gauge::{gradients, midpoint_field, solve_potential_on_mesh, GaugeData, Potential};
use crate::linalg::{generalized_hermitian_eigen, lowest_eigenpairs, BandedHermitian, C64};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Sign of the field term: `Up` is `-B |u|^2`, `Down` is `+B |u|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    fn sign(self) -> f64 {
        match self {
            Spin::Up => -1.0,
            Spin::Down => 1.0,
        }
    }
}

pub type VectorFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct FormOptions {
    pub spin: Spin,
    /// `grad chi`, added to `A`.
    pub gauge_shift: Option<VectorFn>,
}

impl Default for FormOptions {
    fn default() -> Self {
        Self { spin: Spin::Up, gauge_shift: None }
    }
}

/// Stiffness and mass matrices in reverse Cuthill-McKee order.
#[derive(Debug, Clone)]
pub struct MagneticForm {
    pub k: BandedHermitian,
    pub m: BandedHermitian,
    /// `order[new] = old`.
    pub order: Vec<usize>,
    /// `position[old] = new`.
    pub position: Vec<usize>,
    pub level: usize,
    /// Size of the potential terms, used for the zero guard.
    pub scale: f64,
    pub spin: Spin,
}

type ElementBlock = ([usize; 3], [[C64; 3]; 3], [[f64; 3]; 3]);

/// Assembles the form on `mesh`. Robin data are evaluated at the boundary
/// parameter given by `domain`.
pub fn assemble(domain: &DomainSpec, mesh: &Mesh, gauge: &GaugeData, field: &FieldSpec, robin: &RobinSpec, opts: &FormOptions) -> Result<MagneticForm> {
    mesh.check()?;
    if let Potential::Fem(g) = &gauge.potential {
        if g.level != mesh.level || g.phi.len() != mesh.num_nodes() {
            return Err(Error::LevelMismatch {
                gauge_level: g.level,
                gauge_nodes: g.phi.len(),
                mesh_level: mesh.level,
                mesh_nodes: mesh.num_nodes(),
            });
        }
    }
    if robin.components.len() != mesh.boundary.len() {
        return Err(Error::InvalidInput(format!(
            "{} Robin components for {} boundary components",
            robin.components.len(),
            mesh.boundary.len()
        )));
    }
    let nodal = match field.kind {
        FieldKind::Nodal(_) => Some(field.nodal_values(&mesh.nodes)?),
        _ => None,
    };
    let sign = opts.spin.sign();
    let a_at = |t: usize, e: usize| -> [f64; 2] {
        let tri = mesh.triangles[t];
        let (i, j) = (tri[e], tri[(e + 1) % 3]);
        let (p, q) = (mesh.nodes[i], mesh.nodes[j]);
        let (x, y) = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]));
        let mut a = match &gauge.potential {
            Potential::Fem(g) => [0.5 * (g.a_nodal[i][0] + g.a_nodal[j][0]), 0.5 * (g.a_nodal[i][1] + g.a_nodal[j][1])],
            Potential::Radial(_) => gauge.vector_potential_at(x, y).unwrap_or([0.0, 0.0]),
        };
        if let Some(shift) = &opts.gauge_shift {
            let s = shift(x, y);
            a[0] += s[0];
            a[1] += s[1];
        }
        a
    };

    let blocks: Vec<(ElementBlock, f64)> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let (g, area) = gradients(mesh, t);
            let bm = midpoint_field(field, nodal.as_deref(), mesh, t);
            let w = area / 3.0;
            let mut ke = [[C64::new(0.0, 0.0); 3]; 3];
            let mut me = [[0.0; 3]; 3];
            let mut scale: f64 = 0.0;
            for e in 0..3 {
                let a = a_at(t, e);
                let a2 = a[0] * a[0] + a[1] * a[1];
                scale = scale.max(a2 + bm[e].abs());
                // basis values at the midpoint of edge (e, e+1)
                let mut psi = [0.0; 3];
                psi[e] = 0.5;
                psi[(e + 1) % 3] = 0.5;
                for r in 0..3 {
                    for c in 0..3 {
                        let cross = a[0] * (psi[r] * g[c][0] - psi[c] * g[r][0]) + a[1] * (psi[r] * g[c][1] - psi[c] * g[r][1]);
                        ke[r][c] += C64::new(w * (a2 + sign * bm[e]) * psi[r] * psi[c], w * cross);
                        me[r][c] += w * psi[r] * psi[c];
                    }
                }
            }
            for r in 0..3 {
                for c in 0..3 {
                    ke[r][c] += area * (g[r][0] * g[c][0] + g[r][1] * g[c][1]);
                }
            }
            ((mesh.triangles[t], ke, me), scale)
        })
        .collect();

    let n = mesh.num_nodes();
    let order = mesh.rcm_order();
    let mut position = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let bw = mesh.bandwidth(&position);
    let mut k = BandedHermitian::zeros(n, bw);
    let mut m = BandedHermitian::zeros(n, bw);
    let mut scale: f64 = 1.0;
    for ((tri, ke, me), s) in &blocks {
        scale = scale.max(1.0 + s);
        for r in 0..3 {
            for c in 0..=r {
                let (i, j) = (position[tri[r]], position[tri[c]]);
                k.add(i, j, ke[r][c]);
                m.add(i, j, C64::new(me[r][c], 0.0));
            }
        }
    }

    for (j, data) in robin.components.iter().enumerate() {
        let constant = data.as_constant();
        if constant == Some(0.0) {
            continue;
        }
        let g_at = |p: [f64; 2]| constant.unwrap_or_else(|| data.eval(domain.boundary_parameter(j, p)));
        for (a, b) in mesh.boundary_edges(j) {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let (ga, gm, gb) = (g_at(p), g_at(mid), g_at(q));
            scale = scale.max(1.0 + ga.abs().max(gm.abs()).max(gb.abs()));
            let (i, l) = (position[a], position[b]);
            k.add(i, i, C64::new(len / 6.0 * (ga + gm), 0.0));
            k.add(l, l, C64::new(len / 6.0 * (gb + gm), 0.0));
            k.add(i, l, C64::new(len / 6.0 * gm, 0.0));
        }
    }

    Ok(MagneticForm { k, m, order, position, level: mesh.level, scale, spin: opts.spin })
}

/// Negative count and the pencil eigenvalues closest to the threshold from
/// below, together with the count at the opposite guard.
#[derive(Debug, Clone, Serialize)]
pub struct FemCount {
    /// Eigenvalues below `-eps`.
    pub count: SpectralCount,
    /// Eigenvalues below `+eps`.
    pub count_upper: usize,
    pub eps: f64,
    pub nodes: usize,
}

impl MagneticForm {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Default zero guard.
    pub fn eps_neg(&self) -> f64 {
        1e-8 * self.scale
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.k.diagonal_imag_defect().max(self.m.diagonal_imag_defect())
    }

    fn to_internal(&self, u: &[C64]) -> Vec<C64> {
        self.order.iter().map(|&old| u[old]).collect()
    }

    fn to_external(&self, v: &[C64]) -> Vec<C64> {
        self.position.iter().map(|&new| v[new]).collect()
    }

    /// `q(u)` for nodal values in mesh numbering.
    pub fn quadratic_form(&self, u: &[C64]) -> f64 {
        self.k.quadratic_form(&self.to_internal(u))
    }

    pub fn mass(&self, u: &[C64]) -> f64 {
        self.m.quadratic_form(&self.to_internal(u))
    }

    /// Number of pencil eigenvalues strictly below `sigma`. A factorization
    /// breakdown is retried at nearby shifts before falling back to a dense
    /// eigendecomposition.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        let nudge = 1e-3 * self.eps_neg();
        for k in 0..4 {
            let s = sigma - k as f64 * nudge;
            if let Ok(f) = self.k.add_scaled(-s, &self.m).ldl() {
                return Ok(f.inertia().negative);
            }
        }
        if self.dim() > 4000 {
            return Err(Error::Breakdown(self.dim()));
        }
        let (vals, _) = generalized_hermitian_eigen(&self.k.to_dense(), &self.m.to_dense()).ok_or(Error::Breakdown(0))?;
        Ok(vals.iter().filter(|&&v| v < sigma).count())
    }

    /// The `nev` lowest eigenpairs, vectors in mesh numbering.
    pub fn lowest(&self, nev: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let (vals, vecs) = lowest_eigenpairs(&self.k, &self.m, nev, self.scale, seed)?;
        Ok((vals, vecs.iter().map(|v| self.to_external(v)).collect()))
    }

    /// Inertia counts at `-eps` and `+eps`; up to `report` of the negative
    /// eigenvalues are resolved.
    pub fn count_negative(&self, report: usize, seed: u64) -> Result<FemCount> {
        let eps = self.eps_neg();
        let count = self.count_below(-eps)?;
        let count_upper = self.count_below(eps)?;
        let nev = count.min(report);
        let vals = if nev > 0 { self.lowest(nev, seed)?.0 } else { Vec::new() };
        let vals = vals.into_iter().filter(|&v| v < -eps).collect();
        let cert = Certificate { method: "fem-p1".into(), resolution: self.level, tolerance: eps, fiber_range: None };
        Ok(FemCount { count: SpectralCount::new(count, vals, 0.0, cert), count_upper, eps, nodes: self.dim() })
    }
}

/// FEM gauge, assembly and count on `domain.mesh(level)`.
pub fn fem_count(domain: &DomainSpec, field: &FieldSpec, robin: &RobinSpec, level: usize, spin: Spin, report: usize, seed: u64) -> Result<(FemCount, GaugeData)> {
    let mesh = domain.mesh(level)?;
    let gauge = solve_potential_on_mesh(field, &mesh)?.with_robin(robin, &domain.lengths())?;
    let opts = FormOptions { spin, gauge_shift: None };
    let form = assemble(domain, &mesh, &gauge, field, robin, &opts)?;
    Ok((form.count_negative(report, seed)?, gauge))
}

/// Count for the `+B` component of the Pauli operator.
pub fn pauli_second_component_count(domain: &DomainSpec, field: &FieldSpec, robin: &RobinSpec, level: usize) -> Result<FemCount> {
    fem_count(domain, field, robin, level, Spin::Down, 4, 0).map(|r| r.0)
}

/// A function with its gradient.
pub type SampledFn<'a> = &'a (dyn Fn(f64, f64) -> (C64, [C64; 2]) + Sync);

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Barycentric points and weights of the 7-point degree-5 rule.
fn triangle_rule() -> [([f64; 3], f64); 7] {
    let (a, b, wa) = (0.059_715_871_789_769_8, 0.470_142_064_105_115_1, 0.132_394_152_788_506_2);
    let (c, d, wc) = (0.797_426_985_353_087_3, 0.101_286_507_323_456_3, 0.125_939_180_544_827_1);
    let t = 1.0 / 3.0;
    [
        ([t, t, t], 0.225),
        ([a, b, b], wa),
        ([b, a, b], wa),
        ([b, b, a], wa),
        ([c, d, d], wc),
        ([d, c, d], wc),
        ([d, d, c], wc),
    ]
}

/// Both sides of
/// `q(u) = int |(d1 + i d2) u + (d1 phi + i d2 phi) u|^2 + int_G g|u|^2 + Re(conj(u) (-i d_tau - A_tau) u)`
/// evaluated by quadrature on the polygonal domain of `mesh`. Needs a
/// pointwise gauge.
pub fn form_identity_residual(domain: &DomainSpec, mesh: &Mesh, gauge: &GaugeData, field: &FieldSpec, robin: &RobinSpec, u: SampledFn<'_>) -> Result<IdentityResidual> {
    if gauge.radial().is_none() {
        return Err(Error::NonRadial);
    }
    let rule = triangle_rule();
    let (lhs_bulk, rhs_bulk) = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let [i, j, k] = mesh.triangles[t];
            let (p, q, r) = (mesh.nodes[i], mesh.nodes[j], mesh.nodes[k]);
            let area = mesh.area(t);
            let mut acc = (0.0, 0.0);
            for (l, w) in rule {
                let x = l[0] * p[0] + l[1] * q[0] + l[2] * r[0];
                let y = l[0] * p[1] + l[1] * q[1] + l[2] * r[1];
                let (v, dv) = u(x, y);
                let (_, gp) = gauge.potential_at(x, y).unwrap_or((0.0, [0.0, 0.0]));
                let a = [-gp[1], gp[0]];
                let b = field.value(x, y).unwrap_or(0.0);
                let i = C64::i();
                let p1 = -i * dv[0] - a[0] * v;
                let p2 = -i * dv[1] - a[1] * v;
                acc.0 += w * area * (p1.norm_sqr() + p2.norm_sqr() - b * v.norm_sqr());
                let dbar = dv[0] + i * dv[1] + C64::new(gp[0], gp[1]) * v;
                acc.1 += w * area * dbar.norm_sqr();
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    let (xs, ws) = gauss_legendre(6);
    let mut robin_term = 0.0;
    let mut current = 0.0;
    for (j, data) in robin.components.iter().enumerate() {
        for (a, b) in mesh.boundary_edges(j) {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let tau = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
            for (x, w) in xs.iter().zip(&ws) {
                let s = 0.5 * (x + 1.0);
                let pt = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                let (v, dv) = u(pt[0], pt[1]);
                let (_, gp) = gauge.potential_at(pt[0], pt[1]).unwrap_or((0.0, [0.0, 0.0]));
                let a_tau = -gp[1] * tau[0] + gp[0] * tau[1];
                let dtau = dv[0] * tau[0] + dv[1] * tau[1];
                let g = data.as_constant().unwrap_or_else(|| data.eval(domain.boundary_parameter(j, pt)));
                let wl = 0.5 * w * len;
                robin_term += wl * g * v.norm_sqr();
                current += wl * (v.conj() * (-C64::i() * dtau - a_tau * v)).re;
            }
        }
    }
    let lhs = lhs_bulk + robin_term;
    let rhs = rhs_bulk + robin_term + current;
    Ok(IdentityResidual { lhs, rhs, residual: (lhs - rhs).abs() / (1.0 + lhs.abs()) })
}

/// `u = sum_{k >= 0} c_k z^k + sum_{k < 0} c_k conj(z)^|k|` with its gradient.
pub fn harmonic_extension(coeffs: Vec<(i64, C64)>) -> impl Fn(f64, f64) -> (C64, [C64; 2]) + Sync {
    move |x, y| {
        let z = C64::new(x, y);
        let zb = z.conj();
        let mut v = C64::new(0.0, 0.0);
        let mut dx = C64::new(0.0, 0.0);
        let mut dy = C64::new(0.0, 0.0);
        for &(k, c) in &coeffs {
            let n = k.unsigned_abs() as i32;
            let w = if k >= 0 { z } else { zb };
            v += c * w.powi(n);
            if n > 0 {
                let d = c * n as f64 * w.powi(n - 1);
                dx += d;
                dy += if k >= 0 { C64::i() * d } else { -C64::i() * d };
            }
        }
        (v, [dx, dy])
    }
}

/// Random trace coefficients for modes `-kmax..=kmax`, decaying like `1/(1+|k|)`.
pub fn band_limited_trace(kmax: i64, seed: u64) -> Vec<(i64, C64)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (-kmax..=kmax)
        .map(|k| {
            let s = 1.0 / (1.0 + k.abs() as f64);
            (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s)
        })
        .collect()
}
