//! Dense, banded and tridiagonal Hermitian eigen-tools.

mod banded;
mod dense;
mod subspace;
mod tridiag;

pub use banded::{BandedHermitian, BandedLdl, Inertia};
pub use dense::{generalized_hermitian_eigen, hermitian_eigen};
pub use subspace::{lowest_eigenpairs, shift_below};
pub use tridiag::{dot, TridiagPencil};

pub type C64 = num_complex::Complex64;
