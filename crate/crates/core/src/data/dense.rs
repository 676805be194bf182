//! Dense functional data: observations sharing one rectangular grid.

use indexmap::IndexMap;
use ndarray::{ArrayD, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use super::irregular::IrregularFD;
use super::summary::FdSummary;
use crate::error::{FdError, Result};

/// Marker stored in `values` cells that carry no measurement.
///
/// NaN compares unequal to everything, including itself, which is exactly the
/// sentinel semantics required here; use [`is_missing`] rather than `==`.
pub const MISSING: f64 = f64::NAN;

/// True when a cell holds the missing-value marker.
#[inline]
pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

/// Functional data observed on a common rectangular grid (1-D or 2-D domain).
///
/// `values` has shape `(N, M1)` or `(N, M1, M2)`; cells may hold [`MISSING`],
/// but every observation keeps at least one measured cell. Immutable after
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseFD {
    argvals: IndexMap<String, Grid1D>,
    values: ArrayD<f64>,
}

impl DenseFD {
    /// Validating constructor; grids are copied, never aliased.
    pub fn new(argvals: IndexMap<String, Grid1D>, values: ArrayD<f64>) -> Result<Self> {
        let n_dim = argvals.len();
        if n_dim == 0 || n_dim > 2 {
            return Err(FdError::InvalidParameter(format!(
                "expected 1 or 2 input dimensions, got {n_dim}"
            )));
        }
        if values.ndim() != n_dim + 1 {
            return Err(FdError::ShapeMismatch(format!(
                "values tensor has {} axes, expected {}",
                values.ndim(),
                n_dim + 1
            )));
        }
        let n = values.shape()[0];
        if n == 0 {
            return Err(FdError::EmptyData("no observations".into()));
        }
        for (axis, (name, grid)) in argvals.iter().enumerate() {
            if values.shape()[axis + 1] != grid.len() {
                return Err(FdError::ShapeMismatch(format!(
                    "axis {} has length {} but grid '{}' has {} points",
                    axis + 1,
                    values.shape()[axis + 1],
                    name,
                    grid.len()
                )));
            }
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(FdError::InvalidParameter(
                "values must be finite or the missing marker".into(),
            ));
        }
        for (i, obs) in values.axis_iter(Axis(0)).enumerate() {
            if obs.iter().all(|v| is_missing(*v)) {
                return Err(FdError::EmptyData(format!(
                    "observation {i} has no non-missing cell"
                )));
            }
        }
        Ok(DenseFD { argvals, values })
    }

    /// Convenience constructor for curves: one grid, values `(N, M)`.
    pub fn from_matrix(grid: Grid1D, values: ndarray::Array2<f64>) -> Result<Self> {
        let mut argvals = IndexMap::new();
        argvals.insert("input_dim_0".to_string(), grid);
        DenseFD::new(argvals, values.into_dyn())
    }

    pub fn n_obs(&self) -> usize {
        self.values.shape()[0]
    }

    /// Dimension of the input domain (1 for curves, 2 for images).
    pub fn n_dim(&self) -> usize {
        self.argvals.len()
    }

    pub fn argvals(&self) -> &IndexMap<String, Grid1D> {
        &self.argvals
    }

    /// Grid of the `dim`-th input dimension.
    pub fn grid(&self, dim: usize) -> &Grid1D {
        self.argvals.get_index(dim).expect("dimension in range").1
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    /// Sampling grids affinely mapped onto [0, 1].
    pub fn argvals_stand(&self) -> IndexMap<String, Grid1D> {
        self.argvals
            .iter()
            .map(|(k, g)| (k.clone(), g.standardized()))
            .collect()
    }

    /// Observations-by-points view for 1-D domains.
    pub fn obs_matrix(&self) -> ArrayView2<'_, f64> {
        self.values
            .view()
            .into_dimensionality()
            .expect("1-D domain data")
    }

    /// Row view of one observation on a 1-D domain.
    pub fn obs_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values
            .index_axis(Axis(0), i)
            .into_dimensionality()
            .expect("1-D domain data")
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| is_missing(*v))
    }

    pub fn summary(&self) -> FdSummary {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in self.values.iter().filter(|v| !is_missing(**v)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        FdSummary {
            n_obs: self.n_obs(),
            n_points: self.argvals.values().map(|g| g.len() as f64).collect(),
            n_points_is_mean: false,
            n_dim: self.n_dim(),
            range_obs: (lo, hi),
            range_points: self.argvals.values().map(|g| (g.min(), g.max())).collect(),
        }
    }

    /// Observations in the half-open index range `[lo, hi)`.
    pub fn subset(&self, lo: usize, hi: usize) -> Result<DenseFD> {
        check_subset_range(lo, hi, self.n_obs())?;
        let values = self
            .values
            .slice_axis(Axis(0), ndarray::Slice::from(lo..hi))
            .to_owned();
        DenseFD::new(self.argvals.clone(), values)
    }

    /// New object holding the observations listed in `idx`, in that order.
    pub fn select_obs(&self, idx: &[usize]) -> Result<DenseFD> {
        if idx.is_empty() {
            return Err(FdError::EmptyData("empty observation selection".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_obs()) {
            return Err(FdError::IndexOutOfRange(format!(
                "observation {bad} out of 0..{}",
                self.n_obs()
            )));
        }
        let values = self.values.select(Axis(0), idx);
        DenseFD::new(self.argvals.clone(), values)
    }

    /// Convert to the irregular representation, dropping missing cells.
    ///
    /// Fails if some observation has zero non-missing cells on a 2-D domain
    /// row/column pattern that cannot be represented; for 1-D domains the
    /// construction always succeeds because every observation keeps at least
    /// one measured cell.
    pub fn to_irregular(&self) -> Result<IrregularFD> {
        match self.n_dim() {
            1 => {
                let grid = self.grid(0).points();
                let mat = self.obs_matrix();
                let mut obs = Vec::with_capacity(self.n_obs());
                for row in mat.rows() {
                    let mut pts = Vec::new();
                    let mut vals = Vec::new();
                    for (j, &v) in row.iter().enumerate() {
                        if !is_missing(v) {
                            pts.push(grid[j]);
                            vals.push(v);
                        }
                    }
                    obs.push((pts, vals));
                }
                IrregularFD::from_curves(self.dim_name(0), obs)
            }
            _ => {
                // 2-D: only complete rectangles can drop to per-observation
                // product grids; keep rows/columns that contain any data and
                // require the non-missing set to be exactly their product.
                let mut argvals: IndexMap<String, Vec<Grid1D>> = IndexMap::new();
                argvals.insert(self.dim_name(0), Vec::new());
                argvals.insert(self.dim_name(1), Vec::new());
                let mut values: Vec<ArrayD<f64>> = Vec::new();
                let gx = self.grid(0).points().to_vec();
                let gy = self.grid(1).points().to_vec();
                for (i, obs) in self.values.axis_iter(Axis(0)).enumerate() {
                    let obs2 = obs.into_dimensionality::<ndarray::Ix2>().unwrap();
                    let keep_x: Vec<usize> = (0..gx.len())
                        .filter(|&r| obs2.row(r).iter().any(|v| !is_missing(*v)))
                        .collect();
                    let keep_y: Vec<usize> = (0..gy.len())
                        .filter(|&c| obs2.column(c).iter().any(|v| !is_missing(*v)))
                        .collect();
                    let mut sub = ndarray::Array2::zeros((keep_x.len(), keep_y.len()));
                    for (a, &r) in keep_x.iter().enumerate() {
                        for (b, &c) in keep_y.iter().enumerate() {
                            let v = obs2[(r, c)];
                            if is_missing(v) {
                                return Err(FdError::MissingValues(format!(
                                    "observation {i} is not rectangular after dropping missing cells"
                                )));
                            }
                            sub[(a, b)] = v;
                        }
                    }
                    argvals[0].push(Grid1D::new(keep_x.iter().map(|&r| gx[r]).collect())?);
                    argvals[1].push(Grid1D::new(keep_y.iter().map(|&c| gy[c]).collect())?);
                    values.push(sub.into_dyn());
                }
                IrregularFD::from_parts(argvals, values)
            }
        }
    }

    pub fn dim_name(&self, dim: usize) -> String {
        self.argvals.get_index(dim).expect("dimension in range").0.clone()
    }

    /// Value-level equality treating the missing marker as equal to itself.
    pub fn content_eq(&self, other: &DenseFD) -> bool {
        self.argvals == other.argvals
            && self.values.shape() == other.values.shape()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| (is_missing(*a) && is_missing(*b)) || a == b)
    }
}

pub(crate) fn check_subset_range(lo: usize, hi: usize, n: usize) -> Result<()> {
    if lo >= hi {
        return Err(FdError::EmptyData(format!("subset [{lo}, {hi}) is empty")));
    }
    if hi > n {
        return Err(FdError::IndexOutOfRange(format!(
            "subset [{lo}, {hi}) exceeds {n} observations"
        )));
    }
    Ok(())
}
