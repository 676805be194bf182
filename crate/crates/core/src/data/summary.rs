//! Descriptive statistics of a functional data object.

use serde::{Deserialize, Serialize};

/// Basic facts about one functional data object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSummary {
    pub n_obs: usize,
    /// Number of sampling points per input dimension; for irregular data this
    /// is the mean count per observation (see `n_points_is_mean`).
    pub n_points: Vec<f64>,
    pub n_points_is_mean: bool,
    /// Input-domain dimension (1 for curves, 2 for images).
    pub n_dim: usize,
    /// `(min, max)` over all non-missing values.
    pub range_obs: (f64, f64),
    /// `(min, max)` of the sampling points, per input dimension.
    pub range_points: Vec<(f64, f64)>,
}
