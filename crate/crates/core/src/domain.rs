//! Discs, annuli and polynomial images of the unit disc.

use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub enum DomainSpec {
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// `F(D(0, 1))`.
    MappedDisc(ConformalMap),
}

impl DomainSpec {
    pub fn disc(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("disc radius must be positive (got {radius})")));
        }
        Ok(Self::Disc { radius })
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::BadAnnulus { inner, outer });
        }
        Ok(Self::Annulus { inner, outer })
    }

    pub fn unit_disc() -> Self {
        Self::Disc { radius: 1.0 }
    }

    /// Number of boundary components.
    pub fn components(&self) -> usize {
        match self {
            Self::Annulus { .. } => 2,
            _ => 1,
        }
    }

    /// Number of holes.
    pub fn d(&self) -> usize {
        self.components() - 1
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, Self::MappedDisc(_))
    }

    pub fn area(&self) -> f64 {
        match self {
            Self::Disc { radius } => PI * radius * radius,
            Self::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            Self::MappedDisc(f) => f.area(),
        }
    }

    /// Boundary lengths, outer component first.
    pub fn lengths(&self) -> Vec<f64> {
        match self {
            Self::Disc { radius } => vec![2.0 * PI * radius],
            Self::Annulus { inner, outer } => vec![2.0 * PI * outer, 2.0 * PI * inner],
            Self::MappedDisc(f) => vec![f.boundary_length()],
        }
    }

    /// `integral of kappa ds` over component `j`, with the curvature signed
    /// so that it is positive when the curve turns towards the domain.
    pub fn total_curvature(&self, j: usize) -> f64 {
        match self {
            Self::Disc { .. } | Self::Annulus { .. } => {
                let n = 256;
                let ds = self.lengths()[j] / n as f64;
                self.curvature_samples(j, n).iter().map(|k| k * ds).sum()
            }
            Self::MappedDisc(f) => f.total_curvature(1024),
        }
    }

    /// Curvature at `n` points equally spaced in the boundary parameter.
    pub fn curvature_samples(&self, j: usize, n: usize) -> Vec<f64> {
        match self {
            Self::Disc { radius } => vec![1.0 / radius; n],
            Self::Annulus { inner, outer } => vec![if j == 0 { 1.0 / outer } else { -1.0 / inner }; n],
            Self::MappedDisc(f) => (0..n).map(|k| f.curvature(2.0 * PI * k as f64 / n as f64)).collect(),
        }
    }

    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        let mesh = match self {
            Self::Disc { radius } => Mesh::disc(*radius, level),
            Self::Annulus { inner, outer } => Mesh::annulus(*inner, *outer, level),
            Self::MappedDisc(f) => Mesh::disc(1.0, level).mapped(|p| f.map_point(p)),
        };
        mesh.check()?;
        Ok(mesh)
    }

    /// Normalized arclength parameter `2 pi s / L` of a boundary point of
    /// component `j`, measured from the image of the point `(1, 0)` along
    /// the boundary orientation.
    pub fn boundary_parameter(&self, j: usize, p: [f64; 2]) -> f64 {
        let th = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
        match self {
            Self::Disc { .. } => th,
            Self::Annulus { .. } => {
                if j == 0 {
                    th
                } else {
                    (2.0 * PI - th).rem_euclid(2.0 * PI)
                }
            }
            Self::MappedDisc(f) => f.normalized_arclength(f.boundary_angle_of(p)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_bonnet_per_domain() {
        for dom in [DomainSpec::unit_disc(), DomainSpec::annulus(0.5, 1.0).unwrap()] {
            let total: f64 = (0..dom.components()).map(|j| dom.total_curvature(j)).sum();
            assert!((total - 2.0 * PI * (1.0 - dom.d() as f64)).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_annulus_rejected() {
        assert!(matches!(DomainSpec::annulus(1.0, 0.5), Err(Error::BadAnnulus { .. })));
    }
}
