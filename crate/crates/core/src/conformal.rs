//! Polynomial conformal maps of the unit disc and pullback of magnetic and
//! Robin data.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{FieldSpec, RobinData, RobinSpec};
use crate::planar::{fem_count, Spin};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// `F(z) = z + sum_{k >= 2} c_k z^k` with `sum k |c_k| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMap {
    /// `coeffs[i]` multiplies `z^(i + 2)`.
    coeffs: Vec<C64>,
}

impl ConformalMap {
    pub fn identity() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Accepts `(k, c_k)` pairs with `k >= 2`.
    pub fn new(terms: &[(usize, C64)]) -> Result<Self> {
        let kmax = terms.iter().map(|t| t.0).max().unwrap_or(1);
        let mut coeffs = vec![C64::new(0.0, 0.0); kmax.saturating_sub(1)];
        for &(k, c) in terms {
            if k < 2 {
                return Err(Error::InvalidInput(format!("map coefficients start at z^2 (got k = {k})")));
            }
            coeffs[k - 2] += c;
        }
        let map = Self { coeffs };
        let s = map.univalence_sum();
        if !(s < 1.0) {
            return Err(Error::NotUnivalent(s));
        }
        Ok(map)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, &c)| (i + 2, c))
    }

    pub fn univalence_sum(&self) -> f64 {
        self.terms().map(|(k, c)| k as f64 * c.norm()).sum()
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = (acc + c) * z;
        }
        (acc + 1.0) * z
    }

    pub fn deriv(&self, z: C64) -> C64 {
        let mut d = C64::new(1.0, 0.0);
        for (k, c) in self.terms() {
            d += c * k as f64 * z.powu(k as u32 - 1);
        }
        d
    }

    pub fn deriv2(&self, z: C64) -> C64 {
        let mut d = C64::new(0.0, 0.0);
        for (k, c) in self.terms() {
            d += c * (k * (k - 1)) as f64 * z.powu(k as u32 - 2);
        }
        d
    }

    pub fn map_point(&self, p: [f64; 2]) -> [f64; 2] {
        let w = self.eval(C64::new(p[0], p[1]));
        [w.re, w.im]
    }

    /// `pi * sum k |a_k|^2` with `a_1 = 1`.
    pub fn area(&self) -> f64 {
        PI * (1.0 + self.terms().map(|(k, c)| k as f64 * c.norm_sqr()).sum::<f64>())
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.deriv(C64::from_polar(1.0, t)).norm()
    }

    pub fn boundary_length(&self) -> f64 {
        let n = 4096;
        (0..n).map(|k| self.speed(2.0 * PI * k as f64 / n as f64)).sum::<f64>() * 2.0 * PI / n as f64
    }

    /// Signed curvature of the image boundary at `F(e^{it})`.
    pub fn curvature(&self, t: f64) -> f64 {
        let z = C64::from_polar(1.0, t);
        let d1 = self.deriv(z);
        (1.0 + (z * self.deriv2(z) / d1).re) / d1.norm()
    }

    pub fn total_curvature(&self, n: usize) -> f64 {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                self.curvature(t) * self.speed(t)
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64
    }

    /// `2 pi s(t) / L` where `s(t)` is the arclength from `F(1)` to
    /// `F(e^{it})`.
    pub fn normalized_arclength(&self, t: f64) -> f64 {
        let t = t.rem_euclid(2.0 * PI);
        let (x, w) = gauss_legendre(8);
        let panels = ((t / 0.05).ceil() as usize).max(1);
        let h = t / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                s += 0.5 * h * wi * self.speed(a + 0.5 * h * (xi + 1.0));
            }
        }
        2.0 * PI * s / self.boundary_length()
    }

    /// Angle `t` with `F(e^{it}) = p` for a boundary point `p`.
    pub fn boundary_angle_of(&self, p: [f64; 2]) -> f64 {
        let target = C64::new(p[0], p[1]);
        let n = 720;
        let mut t = (0..n)
            .map(|k| 2.0 * PI * k as f64 / n as f64)
            .min_by(|a, b| {
                let da = (self.eval(C64::from_polar(1.0, *a)) - target).norm();
                let db = (self.eval(C64::from_polar(1.0, *b)) - target).norm();
                da.total_cmp(&db)
            })
            .unwrap_or(0.0);
        for _ in 0..50 {
            let z = C64::from_polar(1.0, t);
            let r = self.eval(z) - target;
            let dt = C64::i() * z * self.deriv(z);
            let step = (r.conj() * dt).re / dt.norm_sqr();
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t.rem_euclid(2.0 * PI)
    }

    /// Smallest `|F'|` over a polar sample of the closed disc.
    pub fn min_derivative(&self, nr: usize, nt: usize) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..=nr {
            let r = i as f64 / nr as f64;
            for k in 0..nt {
                m = m.min(self.deriv(C64::from_polar(r, 2.0 * PI * k as f64 / nt as f64)).norm());
            }
        }
        m
    }

    /// Winding number of the sampled boundary curve around `F(0) = 0` and
    /// whether the polygon is free of self-intersections.
    pub fn boundary_is_simple(&self, n: usize) -> (i64, bool) {
        let pts: Vec<C64> = (0..n).map(|k| self.eval(C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))).collect();
        let mut turn = 0.0;
        for k in 0..n {
            turn += (pts[(k + 1) % n] / pts[k]).arg();
        }
        let winding = (turn / (2.0 * PI)).round() as i64;
        let cross = |a: C64, b: C64| a.re * b.im - a.im * b.re;
        let mut simple = true;
        'outer: for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                let d1 = cross(b - a, c - a);
                let d2 = cross(b - a, d - a);
                let d3 = cross(d - c, a - c);
                let d4 = cross(d - c, b - c);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    simple = false;
                    break 'outer;
                }
            }
        }
        (winding, simple)
    }

    /// Sufficient coefficient test plus the sampled derivative and boundary
    /// checks.
    pub fn check_univalent(&self) -> Result<()> {
        let s = self.univalence_sum();
        if !(s < 1.0) {
            return Err(Error::NotUnivalent(s));
        }
        let (winding, simple) = self.boundary_is_simple(512);
        if self.min_derivative(64, 256) <= 0.0 || winding != 1 || !simple {
            return Err(Error::NotUnivalent(s));
        }
        Ok(())
    }
}

/// Data transported to the unit disc.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub field: FieldSpec,
    pub robin: RobinSpec,
    /// `(1/2pi) int_Omega B` by a boundary (Green) integral on the image.
    pub flux_image: f64,
    /// `(1/2pi) int_D B~` by polar quadrature on the disc.
    pub flux_disc: f64,
    pub robin_flux_image: f64,
    pub robin_flux_disc: f64,
}

impl Pullback {
    pub fn flux_defect(&self) -> f64 {
        (self.flux_image - self.flux_disc).abs()
    }

    pub fn robin_flux_defect(&self) -> f64 {
        (self.robin_flux_image - self.robin_flux_disc).abs()
    }
}

/// `B~ = |F'|^2 (B o F)` and `g~ = |f'| (g o f)`.
pub fn pullback(map: &ConformalMap, field: &FieldSpec, robin: &RobinSpec) -> Result<Pullback> {
    map.check_univalent()?;
    if field.value(0.0, 0.0).is_none() {
        return Err(Error::InvalidInput("pullback needs a pointwise field".into()));
    }
    if robin.components.len() != 1 {
        return Err(Error::InvalidInput("pullback expects Robin data on one boundary component".into()));
    }
    let m = map.clone();
    let f = field.clone();
    let pulled = FieldSpec::function(move |x, y| {
        let z = C64::new(x, y);
        let w = m.eval(z);
        m.deriv(z).norm_sqr() * f.value(w.re, w.im).unwrap_or(f64::NAN)
    })
    .with_flags(field.nonnegative, false);

    let g = robin.components[0].clone();
    let length = map.boundary_length();
    let gt = match g.as_constant() {
        Some(c) => {
            let m = map.clone();
            RobinData::Function(Arc::new(move |t| c * m.speed(t)))
        }
        None => {
            // tabulate the arclength reparametrization once
            let n = 512;
            let table: Vec<f64> = (0..=n).map(|k| map.normalized_arclength(2.0 * PI * k as f64 / n as f64)).collect();
            let m = map.clone();
            let g = g.clone();
            RobinData::Function(Arc::new(move |t: f64| {
                let t = t.rem_euclid(2.0 * PI);
                let x = t / (2.0 * PI) * n as f64;
                let i = (x.floor() as usize).min(n - 1);
                let fr = x - i as f64;
                let sigma = table[i] + fr * (table[i + 1] - table[i]);
                m.speed(t) * g.eval(sigma)
            }))
        }
    };

    let flux_image = green_flux(map, field);
    let flux_disc = polar_flux(&pulled);
    let robin_flux_image = g.flux(length);
    let robin_flux_disc = gt.flux(2.0 * PI);
    Ok(Pullback {
        field: pulled,
        robin: RobinSpec { components: vec![gt] },
        flux_image,
        flux_disc,
        robin_flux_image,
        robin_flux_disc,
    })
}

/// FEM counts on the image domain and on the disc after pullback.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub count_on_image: usize,
    pub count_on_disc: usize,
    /// Negative eigenvalue closest to zero on each side.
    pub margins: (Option<f64>, Option<f64>),
    pub flux_defect: f64,
    pub robin_flux_defect: f64,
    pub level: usize,
}

impl InvarianceReport {
    pub fn agrees(&self) -> bool {
        self.count_on_image == self.count_on_disc
    }
}

pub fn invariance_check(map: &ConformalMap, field: &FieldSpec, robin: &RobinSpec, level: usize) -> Result<InvarianceReport> {
    let pb = pullback(map, field, robin)?;
    let image = DomainSpec::MappedDisc(map.clone());
    let (on_image, _) = fem_count(&image, field, robin, level, Spin::Up, 8, 0)?;
    let (on_disc, _) = fem_count(&DomainSpec::unit_disc(), &pb.field, &pb.robin, level, Spin::Up, 8, 0)?;
    let margin = |c: &crate::planar::FemCount| c.count.eigenvalues_below.last().copied();
    Ok(InvarianceReport {
        count_on_image: on_image.count.count_negative,
        count_on_disc: on_disc.count.count_negative,
        margins: (margin(&on_image), margin(&on_disc)),
        flux_defect: pb.flux_defect(),
        robin_flux_defect: pb.robin_flux_defect(),
        level,
    })
}

/// `(1/2pi) oint P dy` with `P(x, y) = int_0^x B(xi, y) dxi`.
fn green_flux(map: &ConformalMap, field: &FieldSpec) -> f64 {
    let (gx, gw) = gauss_legendre(24);
    let primitive = |x: f64, y: f64| -> f64 {
        gx.iter().zip(&gw).map(|(xi, wi)| 0.5 * x * wi * field.value(0.5 * x * (xi + 1.0), y).unwrap_or(f64::NAN)).sum()
    };
    let n = 2048;
    let mut s = 0.0;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        let z = C64::from_polar(1.0, t);
        let w = map.eval(z);
        let dw = C64::i() * z * map.deriv(z);
        s += primitive(w.re, w.im) * dw.im;
    }
    s * (2.0 * PI / n as f64) / (2.0 * PI)
}

fn polar_flux(field: &FieldSpec) -> f64 {
    let (gx, gw) = gauss_legendre(32);
    let nt = 256;
    let mut s = 0.0;
    for (xi, wi) in gx.iter().zip(&gw) {
        let r = 0.5 * (xi + 1.0);
        for k in 0..nt {
            let t = 2.0 * PI * k as f64 / nt as f64;
            s += 0.5 * wi * r * field.value(r * t.cos(), r * t.sin()).unwrap_or(f64::NAN);
        }
    }
    s * (2.0 * PI / nt as f64) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_map() -> ConformalMap {
        ConformalMap::new(&[(2, C64::new(0.2, 0.0))]).unwrap()
    }

    #[test]
    fn rejects_non_univalent_coefficients() {
        assert!(matches!(ConformalMap::new(&[(2, C64::new(0.6, 0.0))]), Err(Error::NotUnivalent(_))));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = ConformalMap::new(&[(2, C64::new(0.1, 0.05)), (3, C64::new(0.0, 0.1))]).unwrap();
        let z = C64::new(0.3, -0.4);
        let h = 1e-6;
        let fd = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
        assert!((fd - f.deriv(z)).norm() < 1e-8);
        let fd2 = (f.deriv(z + h) - f.deriv(z - h)) / (2.0 * h);
        assert!((fd2 - f.deriv2(z)).norm() < 1e-8);
    }

    #[test]
    fn image_curvature_integrates_to_two_pi() {
        assert!((quad_map().total_curvature(1024) - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn identity_pullback_is_trivial() {
        let f = FieldSpec::constant(3.0);
        let p = pullback(&ConformalMap::identity(), &f, &RobinSpec::constant(&[0.4])).unwrap();
        assert!((p.field.value(0.3, 0.2).unwrap() - 3.0).abs() < 1e-15);
        assert!((p.robin.components[0].eval(1.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn quadratic_map_pullback_preserves_fluxes() {
        let beta = 3.0;
        let map = quad_map();
        let p = pullback(&map, &FieldSpec::constant(beta), &RobinSpec::constant(&[0.7])).unwrap();
        let z = C64::new(0.2, 0.5);
        let expected = beta * (C64::new(1.0, 0.0) + 0.4 * z).norm_sqr();
        assert!((p.field.value(z.re, z.im).unwrap() - expected).abs() < 1e-12);
        let exact = beta * map.area() / (2.0 * PI);
        assert!((p.flux_image - exact).abs() < 1e-10, "{} {}", p.flux_image, exact);
        assert!((p.flux_disc - exact).abs() < 1e-10);
        assert!(p.robin_flux_defect() < 1e-8 / (2.0 * PI));
    }

    #[test]
    fn boundary_angle_inverts_the_map() {
        let map = ConformalMap::new(&[(3, C64::new(0.15, 0.0))]).unwrap();
        for t in [0.0, 0.7, 2.0, 4.5, 6.0] {
            let w = map.eval(C64::from_polar(1.0, t));
            let back = map.boundary_angle_of([w.re, w.im]);
            assert!((back - t).abs() < 1e-12 || (back - t).abs() > 2.0 * PI - 1e-12);
        }
    }

    #[test]
    fn counts_agree_across_maps() {
        let id = invariance_check(&ConformalMap::identity(), &FieldSpec::constant(3.0), &RobinSpec::neumann(1), 4).unwrap();
        assert_eq!((id.count_on_image, id.count_on_disc), (2, 2));
        let q = invariance_check(&quad_map(), &FieldSpec::constant(3.0), &RobinSpec::neumann(1), 4).unwrap();
        assert!(q.agrees(), "{q:?}");
        let c = ConformalMap::new(&[(3, C64::new(0.15, 0.0))]).unwrap();
        let r = invariance_check(&c, &FieldSpec::constant(5.0), &RobinSpec::constant(&[0.3]), 4).unwrap();
        assert!(r.agrees(), "{r:?}");
    }
}
