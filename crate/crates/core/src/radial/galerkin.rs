use super::{FiberCounter, FiberOperator, FiberResult};
use crate::error::Result;

/// Inertia of the P1 pencil at `-eps_neg`. A Galerkin count never exceeds
/// the true count.
#[derive(Debug, Clone)]
pub struct Galerkin {
    /// How many of the lowest eigenvalues to resolve for reporting.
    pub report: usize,
}

impl Default for Galerkin {
    fn default() -> Self {
        Self { report: 3 }
    }
}

impl FiberCounter for Galerkin {
    fn name(&self) -> &'static str {
        "galerkin"
    }

    fn count(&self, fiber: &FiberOperator) -> Result<FiberResult> {
        let pencil = fiber.assemble()?;
        let eps = fiber.eps_neg();
        let count = pencil.count_below(-eps);
        let k = self.report.max(count).min(pencil.len());
        let lowest: Vec<f64> = (0..k).map(|i| pencil.eigenvalue(i, 1e-13)).collect();
        let negative = lowest.iter().take(count).copied().collect();
        Ok(FiberResult { m: fiber.m, count, lowest, negative, eps_neg: eps })
    }
}
