use super::{FiberCounter, FiberOperator, FiberResult};
use crate::error::Result;
use crate::quadrature::gauss_legendre;

/// Oscillation count at energy zero: the solution regular at the left end
/// is known in closed form up to one integral, and the number of negative
/// eigenvalues is its number of interior zeros plus one if
/// `u'/u + g < 0` at the outer end.
#[derive(Debug, Clone)]
pub struct ZeroEnergy {
    /// Quadrature panels for `int rho^{-1-2m} e^{2 phi}`.
    pub panels: usize,
    /// Relative guard for boundary values that vanish (zero modes).
    pub rel_tol: f64,
}

impl Default for ZeroEnergy {
    fn default() -> Self {
        Self { panels: 400, rel_tol: 1e-9 }
    }
}

/// Outcome of the oscillation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillation {
    pub interior_zeros: usize,
    /// `u'/u + g` at the outer end.
    pub boundary_value: f64,
    pub guard: f64,
}

impl Oscillation {
    pub fn count(&self) -> usize {
        self.interior_zeros + usize::from(self.boundary_value < -self.guard)
    }
}

impl ZeroEnergy {
    /// `ln int_lo^hi rho^{-1-2m} e^{2 phi(rho)} d rho`.
    fn log_weight_integral(&self, fiber: &FiberOperator, lo: f64, hi: f64) -> f64 {
        let g = fiber.gauge;
        let p = (-1 - 2 * fiber.m) as f64;
        let (x, w) = gauss_legendre(8);
        let h = (hi - lo) / self.panels as f64;
        let mut terms = Vec::with_capacity(self.panels * x.len());
        for k in 0..self.panels {
            let a = lo + h * k as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let r = a + 0.5 * h * (xi + 1.0);
                terms.push(((0.5 * h * wi).ln()) + p * r.ln() + 2.0 * g.phi(r));
            }
        }
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    pub fn oscillation(&self, fiber: &FiberOperator) -> Oscillation {
        let g = fiber.gauge;
        let m = fiber.m as f64;
        let (r0, r1) = (g.r0, g.r1);
        let guard = self.rel_tol * (1.0 + m.abs() / r1 + g.a(r1).abs() + fiber.g_outer.abs());
        let base = m / r1 - g.a(r1) + fiber.g_outer;
        let p = -1.0 - 2.0 * m;
        if r0 == 0.0 {
            if fiber.m >= 0 {
                return Oscillation { interior_zeros: 0, boundary_value: base, guard };
            }
            // u = r^m e^{-phi} J(r), J = int_0^r: positive on (0, R]
            let log_j = self.log_weight_integral(fiber, 0.0, r1);
            let extra = (p * r1.ln() - log_j).exp();
            return Oscillation { interior_zeros: 0, boundary_value: base + extra, guard };
        }
        // u = r^m e^{-phi} (1 + kappa J(r)), J = int_{r0}^r, matching
        // u'(r0) = g_inner u(r0)
        let kappa_lead = fiber.g_inner - m / r0 + g.a(r0);
        if kappa_lead == 0.0 {
            return Oscillation { interior_zeros: 0, boundary_value: base, guard };
        }
        let log_kappa = kappa_lead.abs().ln() + (1.0 + 2.0 * m) * r0.ln();
        let log_j = self.log_weight_integral(fiber, r0, r1);
        let kj = kappa_lead.signum() * (log_kappa + log_j).exp();
        let factor = 1.0 + kj;
        let interior_zeros = usize::from(factor < 0.0);
        let extra = kappa_lead.signum() * (log_kappa + p * r1.ln()).exp() / factor;
        Oscillation { interior_zeros, boundary_value: base + extra, guard }
    }
}

impl FiberCounter for ZeroEnergy {
    fn name(&self) -> &'static str {
        "zero-energy"
    }

    fn count(&self, fiber: &FiberOperator) -> Result<FiberResult> {
        let osc = self.oscillation(fiber);
        Ok(FiberResult { m: fiber.m, count: osc.count(), lowest: Vec::new(), negative: Vec::new(), eps_neg: osc.guard })
    }
}
