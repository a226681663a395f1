//! Flux bookkeeping: the ceiling bound, the index sum and the eta term.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::gauge::GaugeData;
use num_rational::Ratio;
use serde::Serialize;
use std::f64::consts::PI;

/// Values within this distance of an integer are snapped to it and flagged.
pub const CEIL_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ceil {
    pub value: i64,
    pub critical: bool,
}

/// `min { z in Z : z >= x }`, with `x` snapped to a nearby integer.
pub fn ceil_ac(x: f64) -> Ceil {
    let r = x.round();
    if (x - r).abs() <= CEIL_GUARD {
        Ceil { value: r as i64, critical: true }
    } else {
        Ceil { value: x.ceil() as i64, critical: false }
    }
}

/// Floor with the same snapping.
fn floor_ac(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= CEIL_GUARD {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Per-component magnetic and Robin fluxes of a domain with `d + 1`
/// boundary components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxLedger {
    pub d: usize,
    pub fluxes: Vec<f64>,
    pub robin_fluxes: Vec<f64>,
}

impl FluxLedger {
    pub fn new(d: usize, fluxes: Vec<f64>, robin_fluxes: Vec<f64>) -> Result<Self> {
        if fluxes.len() != d + 1 || robin_fluxes.len() != d + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} fluxes and Robin fluxes, got {} and {}",
                d + 1,
                fluxes.len(),
                robin_fluxes.len()
            )));
        }
        if fluxes.iter().chain(&robin_fluxes).any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput("fluxes must be finite".into()));
        }
        Ok(Self { d, fluxes, robin_fluxes })
    }

    pub fn from_gauge(gauge: &GaugeData) -> Result<Self> {
        let d = gauge.fluxes.len().saturating_sub(1);
        Self::new(d, gauge.fluxes.clone(), gauge.robin_fluxes.clone())
    }

    pub fn total(&self) -> f64 {
        self.fluxes.iter().sum()
    }

    pub fn robin_total(&self) -> f64 {
        self.robin_fluxes.iter().sum()
    }

    /// `Phi_j - Phi_{g,j}` per component.
    pub fn effective(&self) -> impl Iterator<Item = f64> + '_ {
        self.fluxes.iter().zip(&self.robin_fluxes).map(|(f, g)| f - g)
    }

    pub fn threshold_critical(&self) -> bool {
        self.effective().any(|x| ceil_ac(x).critical)
    }
}

/// `-d + sum_j ceil(Phi_j - Phi_{g,j})`. May be negative.
pub fn lower_bound(ledger: &FluxLedger) -> i64 {
    -(ledger.d as i64) + ledger.effective().map(|x| ceil_ac(x).value).sum::<i64>()
}

/// Index of the zero-potential problem plus the spectral-flow term
/// `ceil(-Phi_V)` of each boundary potential `V_j = g_j - A_tau`, whose flux
/// is `Phi_V = Phi_g - Phi`.
pub fn aps_index(ledger: &FluxLedger) -> i64 {
    let base = -(ledger.d as i64);
    let flow: i64 = ledger
        .robin_fluxes
        .iter()
        .zip(&ledger.fluxes)
        .map(|(g, f)| {
            let phi_v = g - f;
            -floor_ac(phi_v)
        })
        .sum();
    base + flow
}

/// `(1 + d)/2 + sum_j (Phi_j - ceil Phi_j)`; Neumann ledgers only.
pub fn eta_term(ledger: &FluxLedger) -> Result<f64> {
    if ledger.robin_fluxes.iter().any(|&g| g != 0.0) {
        return Err(Error::InvalidInput("the eta term is defined for g = 0".into()));
    }
    Ok((1.0 + ledger.d as f64) / 2.0 + ledger.fluxes.iter().map(|&f| f - ceil_ac(f).value as f64).sum::<f64>())
}

/// `Phi_total + (1 - d)/2 - eta`.
pub fn grubb_index(ledger: &FluxLedger) -> Result<f64> {
    Ok(ledger.total() + (1.0 - ledger.d as f64) / 2.0 - eta_term(ledger)?)
}

pub type Rational = Ratio<i64>;

/// A ledger with exact rational fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLedger {
    pub d: usize,
    pub fluxes: Vec<Rational>,
    pub robin_fluxes: Vec<Rational>,
}

impl RationalLedger {
    pub fn new(d: usize, fluxes: Vec<Rational>, robin_fluxes: Vec<Rational>) -> Result<Self> {
        if fluxes.len() != d + 1 || robin_fluxes.len() != d + 1 {
            return Err(Error::InvalidInput(format!("expected {} fluxes and Robin fluxes", d + 1)));
        }
        Ok(Self { d, fluxes, robin_fluxes })
    }

    pub fn to_float(&self) -> FluxLedger {
        let f = |v: &Vec<Rational>| v.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
        FluxLedger { d: self.d, fluxes: f(&self.fluxes), robin_fluxes: f(&self.robin_fluxes) }
    }

    pub fn total(&self) -> Rational {
        self.fluxes.iter().sum()
    }

    pub fn lower_bound(&self) -> i64 {
        -(self.d as i64) + self.fluxes.iter().zip(&self.robin_fluxes).map(|(f, g)| (f - g).ceil().to_integer()).sum::<i64>()
    }

    pub fn aps_index(&self) -> i64 {
        -(self.d as i64) + self.robin_fluxes.iter().zip(&self.fluxes).map(|(g, f)| -(g - f).floor().to_integer()).sum::<i64>()
    }

    pub fn eta_term(&self) -> Result<Rational> {
        if self.robin_fluxes.iter().any(|g| *g != Rational::from_integer(0)) {
            return Err(Error::InvalidInput("the eta term is defined for g = 0".into()));
        }
        let half = Rational::new(1 + self.d as i64, 2);
        Ok(half + self.fluxes.iter().map(|f| f - f.ceil()).sum::<Rational>())
    }

    pub fn grubb_index(&self) -> Result<Rational> {
        Ok(self.total() + Rational::new(1 - self.d as i64, 2) - self.eta_term()?)
    }
}

/// `sum_j int kappa / 4 pi`, which should equal `(1 - d)/2`.
pub fn boundary_term_from_curvature(domain: &DomainSpec) -> f64 {
    (0..domain.components()).map(|j| domain.total_curvature(j)).sum::<f64>() / (4.0 * PI)
}

pub fn gauss_bonnet_defect(domain: &DomainSpec) -> f64 {
    (boundary_term_from_curvature(domain) - (1.0 - domain.d() as f64) / 2.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalMap;
    use num_complex::Complex64;

    fn ledger(d: usize, f: &[f64], g: &[f64]) -> FluxLedger {
        FluxLedger::new(d, f.to_vec(), g.to_vec()).unwrap()
    }

    #[test]
    fn ceilings() {
        assert_eq!(ceil_ac(1.5).value, 2);
        assert_eq!(ceil_ac(0.0), Ceil { value: 0, critical: true });
        assert_eq!(ceil_ac(-0.3).value, 0);
        assert_eq!(ceil_ac(2.0 + 1e-12), Ceil { value: 2, critical: true });
        assert_eq!(ceil_ac(2.0 + 1e-6).value, 3);
    }

    #[test]
    fn bounds_and_index() {
        assert_eq!(lower_bound(&ledger(0, &[1.5], &[0.0])), 2);
        assert_eq!(lower_bound(&ledger(1, &[2.3, 0.4], &[0.0, 0.0])), 3);
        assert_eq!(lower_bound(&ledger(0, &[-1.0], &[0.0])), -1);
        assert_eq!(aps_index(&ledger(0, &[0.0], &[0.0])), 0);
        assert_eq!(aps_index(&ledger(1, &[2.3, 0.4], &[0.0, 0.0])), 3);
        // Phi_V = -1.5
        assert_eq!(aps_index(&ledger(0, &[1.5], &[0.0])), 2);
    }

    #[test]
    fn eta_examples() {
        let l = ledger(0, &[1.5], &[0.0]);
        assert!(eta_term(&l).unwrap().abs() < 1e-15);
        assert!((grubb_index(&l).unwrap() - 2.0).abs() < 1e-15);
        let l = ledger(0, &[2.0], &[0.0]);
        assert!((eta_term(&l).unwrap() - 0.5).abs() < 1e-15);
        assert!((grubb_index(&l).unwrap() - 2.0).abs() < 1e-15);
        let l = ledger(1, &[1.2, 0.3], &[0.0, 0.0]);
        assert!((eta_term(&l).unwrap() + 0.5).abs() < 1e-12);
        assert!((grubb_index(&l).unwrap() - 2.0).abs() < 1e-12);
        assert!(eta_term(&ledger(0, &[1.0], &[0.5])).is_err());
    }

    #[test]
    fn rational_mode_is_exact() {
        let r = |n, d| Rational::new(n, d);
        let l = RationalLedger::new(1, vec![r(6, 5), r(3, 10)], vec![r(0, 1), r(0, 1)]).unwrap();
        assert_eq!(l.eta_term().unwrap(), r(-1, 2));
        assert_eq!(l.grubb_index().unwrap(), Rational::from_integer(l.aps_index()));
        assert_eq!(l.lower_bound(), 2);
    }

    #[test]
    fn rejects_wrong_lengths() {
        assert!(FluxLedger::new(1, vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn gauss_bonnet_boundary_term() {
        assert!(gauss_bonnet_defect(&DomainSpec::unit_disc()) < 1e-10);
        assert!(gauss_bonnet_defect(&DomainSpec::annulus(0.5, 1.0).unwrap()) < 1e-10);
        let map = ConformalMap::new(&[(2, Complex64::new(0.2, 0.0))]).unwrap();
        assert!(gauss_bonnet_defect(&DomainSpec::MappedDisc(map)) < 1e-8);
    }
}
