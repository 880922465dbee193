//! Sparse matrices, bandwidth-reducing orderings and banded LU.

mod banded;
mod ordering;
mod sparse;

pub use banded::BandedLu;
pub use ordering::reverse_cuthill_mckee;
pub use sparse::{CsrMatrix, Scalar};
