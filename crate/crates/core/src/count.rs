use serde::{Deserialize, Serialize};

/// How a count was obtained and how far it can be trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Name of the method that produced the count.
    pub method: String,
    /// Grid size, mesh level or Fourier truncation, depending on the method.
    pub resolution: usize,
    /// Zero guard: eigenvalues in `[-tolerance, 0)` are not counted.
    pub tolerance: f64,
    /// Angular momenta that were summed, when the count is a fiber sum.
    pub fiber_range: Option<(i64, i64)>,
}

/// Number of eigenvalues strictly below `threshold` together with the values
/// that were resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCount {
    pub count_negative: usize,
    /// Sorted ascending; may be shorter than `count_negative` when only the
    /// inertia was computed.
    pub eigenvalues_below: Vec<f64>,
    pub threshold: f64,
    pub certificate: Certificate,
}

impl SpectralCount {
    pub fn new(count_negative: usize, mut eigenvalues_below: Vec<f64>, threshold: f64, certificate: Certificate) -> Self {
        eigenvalues_below.sort_by(f64::total_cmp);
        Self { count_negative, eigenvalues_below, threshold, certificate }
    }
}
