//! Containers for dense, irregular and multivariate functional data.
//!
//! All containers are immutable after construction and can be shared freely
//! across threads; subsetting and conversion return fresh values.

mod dense;
mod grid;
mod irregular;
mod multivariate;
mod summary;

pub use dense::{is_missing, DenseFD, MISSING};
pub use grid::Grid1D;
pub use irregular::IrregularFD;
pub use multivariate::{FunctionalData, MultivariateFD};
pub use summary::FdSummary;
