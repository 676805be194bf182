//! Functional data analysis toolkit.
//!
//! Provides containers for dense, irregularly sampled and multivariate
//! functional data, a simulation toolbox (Karhunen-Loeve expansions,
//! Brownian motions, cluster mixtures, noise, sparsification), local
//! polynomial smoothing, mean/covariance estimation, univariate and
//! multivariate functional PCA (including a tensor power algorithm for
//! image data), Gaussian mixture models with BIC selection, and a
//! binary-tree clustering procedure built on top of them.

pub mod data;
pub mod error;
pub mod fcubt;
pub mod gmm;
pub mod io;
pub mod moments;
pub mod numeric;
pub mod pca;
pub mod sim;
pub mod smooth;

pub use data::{DenseFD, FdSummary, FunctionalData, Grid1D, IrregularFD, MultivariateFD};
pub use error::{FdError, Result};
