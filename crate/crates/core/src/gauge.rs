//! Gauge fixing `Delta phi = B`, `phi = 0` on the boundary, `A = (-d2 phi, d1 phi)`,
//! and the flux bookkeeping built on it.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{robin_fluxes, FieldSpec, RobinSpec};
use crate::linalg::{BandedHermitian, C64};
use crate::mesh::Mesh;
use std::f64::consts::PI;

const TABLE_INTERVALS: usize = 8192;

/// Tabulated radial gauge on `[r0, r1]` with `r phi'(r) = F(r) + c`,
/// `F(r) = int_{r0}^r B rho d rho`. Values between nodes use cubic Hermite
/// interpolation with the exact derivatives `F' = B r` and `phi' = a`.
#[derive(Debug, Clone)]
pub struct RadialGauge {
    pub r0: f64,
    pub r1: f64,
    h: f64,
    f: Vec<f64>,
    b: Vec<f64>,
    phi: Vec<f64>,
    c: f64,
    field: FieldSpec,
}

impl RadialGauge {
    fn build(field: &FieldSpec, r0: f64, r1: f64) -> Self {
        let n = TABLE_INTERVALS;
        let h = (r1 - r0) / n as f64;
        let bval = |r: f64| field.radial_value(r).unwrap_or(f64::NAN);
        let rs: Vec<f64> = (0..=n).map(|i| r0 + h * i as f64).collect();
        let b: Vec<f64> = rs.iter().map(|&r| bval(r)).collect();
        let mut f = vec![0.0; n + 1];
        for i in 0..n {
            let m = rs[i] + 0.5 * h;
            f[i + 1] = f[i] + h / 6.0 * (b[i] * rs[i] + 4.0 * bval(m) * m + b[i + 1] * rs[i + 1]);
        }
        let mut g = Self { r0, r1, h, f, b, phi: vec![0.0; n + 1], c: 0.0, field: field.clone() };
        if r0 > 0.0 {
            // int F / rho, then c so that phi(r1) = 0
            let mut s = 0.0;
            for i in 0..n {
                let m = rs[i] + 0.5 * h;
                s += h / 6.0 * (g.f[i] / rs[i] + 4.0 * g.big_f(m) / m + g.f[i + 1] / rs[i + 1]);
            }
            g.c = -s / (r1 / r0).ln();
        }
        let mut phi = vec![0.0; n + 1];
        for i in 0..n {
            let m = rs[i] + 0.5 * h;
            phi[i + 1] = phi[i] + h / 6.0 * (g.a_node(i) + 4.0 * g.a(m) + g.a_node(i + 1));
        }
        if r0 == 0.0 {
            let shift = phi[n];
            phi.iter_mut().for_each(|p| *p -= shift);
        } else {
            // phi(r1) vanishes up to quadrature error; remove the residue linearly in log r
            let res = phi[n];
            let lr = (r1 / r0).ln();
            for (i, p) in phi.iter_mut().enumerate() {
                *p -= res * (rs[i] / r0).ln() / lr;
            }
            g.c -= res / lr;
        }
        g.phi = phi;
        g
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let x = ((r - self.r0) / self.h).clamp(0.0, TABLE_INTERVALS as f64);
        let i = (x.floor() as usize).min(TABLE_INTERVALS - 1);
        (i, x - i as f64)
    }

    fn node(&self, i: usize) -> f64 {
        self.r0 + self.h * i as f64
    }

    fn a_node(&self, i: usize) -> f64 {
        let r = self.node(i);
        if r == 0.0 {
            0.0
        } else {
            (self.f[i] + self.c) / r
        }
    }

    fn big_f(&self, r: f64) -> f64 {
        let (i, t) = self.locate(r);
        let (r0, r1) = (self.node(i), self.node(i + 1));
        hermite(t, self.h, self.f[i], self.b[i] * r0, self.f[i + 1], self.b[i + 1] * r1)
    }

    /// `B(r)`.
    pub fn b(&self, r: f64) -> f64 {
        self.field.radial_value(r).unwrap_or(f64::NAN)
    }

    /// `a(r) = phi'(r)`; the vector potential is `a(r) e_theta`.
    pub fn a(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        (self.big_f(r) + self.c) / r
    }

    pub fn phi(&self, r: f64) -> f64 {
        let (i, t) = self.locate(r);
        hermite(t, self.h, self.phi[i], self.a_node(i), self.phi[i + 1], self.a_node(i + 1))
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn is_disc(&self) -> bool {
        self.r0 == 0.0
    }

    /// Rows `(r, phi, a)` at `n + 1` equally spaced radii.
    pub fn table(&self, n: usize) -> Vec<(f64, f64, f64)> {
        (0..=n)
            .map(|i| {
                let r = self.r0 + (self.r1 - self.r0) * i as f64 / n as f64;
                (r, self.phi(r), self.a(r))
            })
            .collect()
    }
}

fn hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

/// P1 finite-element gauge on a mesh.
#[derive(Debug, Clone)]
pub struct FemGauge {
    pub level: usize,
    pub phi: Vec<f64>,
    /// `rot grad phi_h` per triangle.
    pub a_elem: Vec<[f64; 2]>,
    /// Area-weighted nodal average of `a_elem`.
    pub a_nodal: Vec<[f64; 2]>,
    /// Tangential component per boundary edge, per component.
    pub a_tau: Vec<Vec<f64>>,
    /// `(1/2pi) sum A_tau |e|` per component.
    pub circulation_fluxes: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Potential {
    Radial(RadialGauge),
    Fem(FemGauge),
}

/// Gauge potential and fluxes. Components are ordered outer first.
#[derive(Debug, Clone)]
pub struct GaugeData {
    pub potential: Potential,
    pub flux_total: f64,
    pub fluxes: Vec<f64>,
    pub robin_fluxes: Vec<f64>,
    pub robin_flux_total: f64,
}

impl GaugeData {
    pub fn with_robin(mut self, robin: &RobinSpec, lengths: &[f64]) -> Result<Self> {
        let (per, total) = robin_fluxes(robin, lengths)?;
        self.robin_fluxes = per;
        self.robin_flux_total = total;
        Ok(self)
    }

    pub fn radial(&self) -> Option<&RadialGauge> {
        match &self.potential {
            Potential::Radial(g) => Some(g),
            Potential::Fem(_) => None,
        }
    }

    pub fn fem(&self) -> Option<&FemGauge> {
        match &self.potential {
            Potential::Fem(g) => Some(g),
            Potential::Radial(_) => None,
        }
    }

    /// Pointwise `(phi, grad phi)` for radial gauges.
    pub fn potential_at(&self, x: f64, y: f64) -> Option<(f64, [f64; 2])> {
        let g = self.radial()?;
        let r = x.hypot(y);
        let a = g.a(r);
        let grad = if r > 0.0 { [a * x / r, a * y / r] } else { [0.0, 0.0] };
        Some((g.phi(r), grad))
    }

    /// `A = (-d2 phi, d1 phi)` for radial gauges.
    pub fn vector_potential_at(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        self.potential_at(x, y).map(|(_, g)| [-g[1], g[0]])
    }

    pub fn stokes_defect(&self) -> f64 {
        (self.fluxes.iter().sum::<f64>() - self.flux_total).abs()
    }
}

/// Closed-form radial gauge on a disc or annulus.
pub fn solve_radial_potential(field: &FieldSpec, domain: &DomainSpec) -> Result<GaugeData> {
    if !field.is_radial() {
        return Err(Error::NonRadial);
    }
    let (r0, r1) = match *domain {
        DomainSpec::Disc { radius } => (0.0, radius),
        DomainSpec::Annulus { inner, outer } => {
            if !(inner > 0.0 && inner < outer) {
                return Err(Error::BadAnnulus { inner, outer });
            }
            (inner, outer)
        }
        DomainSpec::MappedDisc(_) => return Err(Error::NonRadial),
    };
    let g = RadialGauge::build(field, r0, r1);
    let flux_total = g.f[TABLE_INTERVALS];
    let fluxes = if r0 == 0.0 { vec![r1 * g.a(r1)] } else { vec![r1 * g.a(r1), -r0 * g.a(r0)] };
    let k = fluxes.len();
    Ok(GaugeData {
        potential: Potential::Radial(g),
        flux_total,
        fluxes,
        robin_fluxes: vec![0.0; k],
        robin_flux_total: 0.0,
    })
}

pub(crate) fn gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.triangles[t];
    let (p, q, r) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let area = crate::mesh::signed_area(p, q, r);
    let g = |u: [f64; 2], v: [f64; 2]| [(u[1] - v[1]) / (2.0 * area), (v[0] - u[0]) / (2.0 * area)];
    ([g(q, r), g(r, p), g(p, q)], area)
}

/// `B` at the three edge midpoints `(01, 12, 20)` of a triangle.
pub(crate) fn midpoint_field(field: &FieldSpec, nodal: Option<&[f64]>, mesh: &Mesh, t: usize) -> [f64; 3] {
    let tri = mesh.triangles[t];
    let mut out = [0.0; 3];
    for e in 0..3 {
        let (i, j) = (tri[e], tri[(e + 1) % 3]);
        out[e] = match nodal {
            Some(v) => 0.5 * (v[i] + v[j]),
            None => {
                let (p, q) = (mesh.nodes[i], mesh.nodes[j]);
                field.value(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])).unwrap_or(f64::NAN)
            }
        };
    }
    out
}

/// Finite-element gauge on `domain.mesh(level)`.
pub fn solve_potential_2d(field: &FieldSpec, domain: &DomainSpec, level: usize) -> Result<GaugeData> {
    let mesh = domain.mesh(level)?;
    solve_potential_on_mesh(field, &mesh)
}

/// Dirichlet Poisson solve on a given mesh. Fluxes are the boundary
/// residuals `int grad phi_h . grad psi_i + int B psi_i` summed over each
/// component, so that they add up to the discrete total flux exactly.
pub fn solve_potential_on_mesh(field: &FieldSpec, mesh: &Mesh) -> Result<GaugeData> {
    mesh.check()?;
    let n = mesh.num_nodes();
    let nodal = match field.kind {
        crate::field::FieldKind::Nodal(_) => Some(field.nodal_values(&mesh.nodes)?),
        _ => None,
    };
    let is_b = mesh.boundary_nodes();
    let order = mesh.rcm_order();
    let mut pos = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let bw = mesh.bandwidth(&pos);
    let mut k = BandedHermitian::zeros(n, bw);
    let mut load = vec![0.0; n];
    let mut elem_k = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let (g, area) = gradients(mesh, t);
        let bm = midpoint_field(field, nodal.as_deref(), mesh, t);
        let tri = mesh.triangles[t];
        let mut ke = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                ke[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
            // psi_a = 1/2 on the two edges touching vertex a
            let prev = (a + 2) % 3;
            load[tri[a]] += area / 3.0 * 0.5 * (bm[a] + bm[prev]);
        }
        for a in 0..3 {
            for b in 0..=a {
                let (i, j) = (tri[a], tri[b]);
                if is_b[i] || is_b[j] {
                    continue;
                }
                let (pi, pj) = (pos[i], pos[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                let v = if a == b { ke[a][a] } else { ke[a][b] };
                k.add(r, c, C64::new(v, 0.0));
            }
        }
        elem_k.push(ke);
    }
    for i in 0..n {
        if is_b[i] {
            k.add(pos[i], pos[i], C64::new(1.0, 0.0));
        }
    }
    let ldl = k.ldl().map_err(|e| match e {
        Error::Breakdown(p) => {
            let node = order[p];
            let (t, area) = (0..mesh.triangles.len())
                .filter(|&t| mesh.triangles[t].contains(&node))
                .map(|t| (t, mesh.area(t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, 0.0));
            Error::DegenerateElement { index: t, area }
        }
        other => other,
    })?;
    let rhs: Vec<C64> = (0..n).map(|p| {
        let i = order[p];
        C64::new(if is_b[i] { 0.0 } else { -load[i] }, 0.0)
    }).collect();
    let sol = ldl.solve(&rhs);
    let phi: Vec<f64> = (0..n).map(|i| if is_b[i] { 0.0 } else { sol[pos[i]].re }).collect();

    let mut residual = load.clone();
    let mut a_elem = Vec::with_capacity(mesh.triangles.len());
    let mut a_nodal = vec![[0.0; 2]; n];
    let mut weight = vec![0.0; n];
    for (t, ke) in elem_k.iter().enumerate() {
        let tri = mesh.triangles[t];
        for a in 0..3 {
            residual[tri[a]] += (0..3).map(|b| ke[a][b] * phi[tri[b]]).sum::<f64>();
        }
        let (g, area) = gradients(mesh, t);
        let gp = [0, 1].map(|d| (0..3).map(|a| g[a][d] * phi[tri[a]]).sum::<f64>());
        let at = [-gp[1], gp[0]];
        a_elem.push(at);
        for &i in &tri {
            a_nodal[i][0] += area * at[0];
            a_nodal[i][1] += area * at[1];
            weight[i] += area;
        }
    }
    for (a, w) in a_nodal.iter_mut().zip(&weight) {
        a[0] /= w;
        a[1] /= w;
    }

    let mut edge_elem = std::collections::HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            edge_elem.insert((tri[e], tri[(e + 1) % 3]), t);
            edge_elem.insert((tri[(e + 1) % 3], tri[e]), t);
        }
    }
    let mut a_tau = Vec::new();
    let mut circulation_fluxes = Vec::new();
    let mut fluxes = Vec::new();
    for j in 0..mesh.boundary.len() {
        let mut row = Vec::new();
        let mut circ = 0.0;
        for (a, b) in mesh.boundary_edges(j) {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let tau = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
            let t = *edge_elem.get(&(a, b)).ok_or_else(|| Error::InvalidInput(format!("boundary edge ({a}, {b}) is not a mesh edge")))?;
            let v = a_elem[t][0] * tau[0] + a_elem[t][1] * tau[1];
            circ += v * len;
            row.push(v);
        }
        a_tau.push(row);
        circulation_fluxes.push(circ / (2.0 * PI));
        fluxes.push(mesh.boundary[j].iter().map(|&i| residual[i]).sum::<f64>() / (2.0 * PI));
    }
    let flux_total = load.iter().sum::<f64>() / (2.0 * PI);
    let k = fluxes.len();
    Ok(GaugeData {
        potential: Potential::Fem(FemGauge { level: mesh.level, phi, a_elem, a_nodal, a_tau, circulation_fluxes }),
        flux_total,
        fluxes,
        robin_fluxes: vec![0.0; k],
        robin_flux_total: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_on_disc() {
        let beta = 3.0;
        let g = solve_radial_potential(&FieldSpec::constant(beta), &DomainSpec::unit_disc()).unwrap();
        let rg = g.radial().unwrap();
        for r in [0.0, 0.13, 0.5, 0.99, 1.0] {
            assert!((rg.phi(r) - beta * (r * r - 1.0) / 4.0).abs() < 1e-13);
            assert!((rg.a(r) - beta * r / 2.0).abs() < 1e-13);
        }
        assert!((g.fluxes[0] - 1.5).abs() < 1e-13);
    }

    #[test]
    fn zero_field_gives_zero_gauge() {
        let g = solve_radial_potential(&FieldSpec::constant(0.0), &DomainSpec::unit_disc()).unwrap();
        assert_eq!(g.fluxes[0], 0.0);
        assert_eq!(g.radial().unwrap().phi(0.3), 0.0);
    }

    #[test]
    fn annulus_matches_quadratic_plus_log() {
        // (1/r)(r phi')' = 2 with phi(1/2) = phi(1) = 0: phi = r^2/2 + k ln r - 1/2
        let k = -0.375 / 2f64.ln();
        let g = solve_radial_potential(&FieldSpec::constant(2.0), &DomainSpec::annulus(0.5, 1.0).unwrap()).unwrap();
        let rg = g.radial().unwrap();
        for r in [0.5f64, 0.61, 0.77, 1.0] {
            let exact = r * r / 2.0 + k * r.ln() - 0.5;
            assert!((rg.phi(r) - exact).abs() < 1e-12, "r = {r}");
        }
        assert!((g.fluxes[0] - (1.0 + k)).abs() < 1e-12);
        assert!((g.fluxes[1] + 0.5 * (0.5 + 2.0 * k)).abs() < 1e-12);
        assert!((g.fluxes[0] + g.fluxes[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn radial_rejects_nonradial() {
        let f = FieldSpec::affine(0.0, 0.0, -4.0);
        assert!(matches!(solve_radial_potential(&f, &DomainSpec::unit_disc()), Err(Error::NonRadial)));
        assert!(matches!(DomainSpec::annulus(1.0, 1.0), Err(Error::BadAnnulus { .. })));
    }

    #[test]
    fn fem_gauge_constant_field() {
        let beta = 3.0;
        let g = solve_potential_2d(&FieldSpec::constant(beta), &DomainSpec::unit_disc(), 5).unwrap();
        assert!((g.fluxes[0] - beta / 2.0).abs() < 1e-3 * beta);
        assert!(g.stokes_defect() < 1e-12);
        let fem = g.fem().unwrap();
        let mesh = Mesh::disc(1.0, 5);
        let err = mesh
            .nodes
            .iter()
            .zip(&fem.phi)
            .map(|(p, v)| (v - beta * (p[0] * p[0] + p[1] * p[1] - 1.0) / 4.0).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "max phi error {err}");
    }

    #[test]
    fn fem_gauge_zero_field() {
        let g = solve_potential_2d(&FieldSpec::constant(0.0), &DomainSpec::unit_disc(), 3).unwrap();
        assert!(g.fem().unwrap().phi.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn fem_gauge_linear_field() {
        // B = -4 x2: phi = (x2 / 2)(1 - |x|^2), A_tau = -sin s, flux 0
        let g = solve_potential_2d(&FieldSpec::affine(0.0, 0.0, -4.0), &DomainSpec::unit_disc(), 5).unwrap();
        let fem = g.fem().unwrap();
        let mesh = Mesh::disc(1.0, 5);
        let err = mesh
            .nodes
            .iter()
            .zip(&fem.phi)
            .map(|(p, v)| (v - 0.5 * p[1] * (1.0 - p[0] * p[0] - p[1] * p[1])).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        assert!(g.fluxes[0].abs() < 1e-12);
        let worst = mesh
            .boundary_edges(0)
            .iter()
            .zip(&fem.a_tau[0])
            .map(|(&(a, b), v)| {
                let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
                let s = (0.5 * (p[1] + q[1])).atan2(0.5 * (p[0] + q[0]));
                (v + s.sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.1, "{worst}");
    }
}
