//! Irregularly sampled functional data: one grid per observation.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use super::dense::{check_subset_range, is_missing, DenseFD, MISSING};
use super::grid::Grid1D;
use super::summary::FdSummary;
use crate::error::{FdError, Result};

/// Functional data where every observation carries its own sampling grid.
///
/// Observation keys are renumbered to `0..N-1` on construction, so positional
/// subsetting is well defined. No missing markers are allowed: a point either
/// exists with a value or is absent from the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrregularFD {
    /// Dimension name -> per-observation grids (indexed by observation).
    argvals: IndexMap<String, Vec<Grid1D>>,
    values: Vec<ArrayD<f64>>,
}

impl IrregularFD {
    /// Validating constructor with explicit observation keys; matching key
    /// sets are required across `argvals` and `values`, and observations are
    /// renumbered to `0..N-1` in ascending key order.
    pub fn new(
        argvals: IndexMap<String, BTreeMap<usize, Grid1D>>,
        values: BTreeMap<usize, ArrayD<f64>>,
    ) -> Result<Self> {
        let keys: Vec<usize> = values.keys().copied().collect();
        for (name, per_obs) in &argvals {
            let dim_keys: Vec<usize> = per_obs.keys().copied().collect();
            if dim_keys != keys {
                return Err(FdError::KeyMismatch(format!(
                    "observation keys of argvals '{name}' and values differ"
                )));
            }
        }
        let ordered_argvals: IndexMap<String, Vec<Grid1D>> = argvals
            .into_iter()
            .map(|(name, per_obs)| (name, per_obs.into_values().collect()))
            .collect();
        let ordered_values: Vec<ArrayD<f64>> = values.into_values().collect();
        Self::from_parts(ordered_argvals, ordered_values)
    }

    /// Constructor over observation-ordered parts (keys already 0..N-1).
    pub fn from_parts(
        argvals: IndexMap<String, Vec<Grid1D>>,
        values: Vec<ArrayD<f64>>,
    ) -> Result<Self> {
        let n_dim = argvals.len();
        if n_dim == 0 || n_dim > 2 {
            return Err(FdError::InvalidParameter(format!(
                "expected 1 or 2 input dimensions, got {n_dim}"
            )));
        }
        let n = values.len();
        if n == 0 {
            return Err(FdError::EmptyData("no observations".into()));
        }
        for grids in argvals.values() {
            if grids.len() != n {
                return Err(FdError::KeyMismatch(
                    "argvals and values disagree on the number of observations".into(),
                ));
            }
        }
        for (i, tensor) in values.iter().enumerate() {
            if tensor.ndim() != n_dim {
                return Err(FdError::ShapeMismatch(format!(
                    "observation {i} tensor has {} axes, expected {n_dim}",
                    tensor.ndim()
                )));
            }
            for (axis, grids) in argvals.values().enumerate() {
                if tensor.shape()[axis] != grids[i].len() {
                    return Err(FdError::ShapeMismatch(format!(
                        "observation {i}, axis {axis}: {} values vs {} grid points",
                        tensor.shape()[axis],
                        grids[i].len()
                    )));
                }
            }
            if tensor.iter().any(|v| is_missing(*v)) {
                return Err(FdError::MissingValues(format!(
                    "observation {i} contains the missing marker"
                )));
            }
            if tensor.iter().any(|v| v.is_infinite()) {
                return Err(FdError::InvalidParameter(format!(
                    "observation {i} contains non-finite values"
                )));
            }
        }
        Ok(IrregularFD { argvals, values })
    }

    /// 1-D convenience constructor from `(points, values)` pairs.
    pub fn from_curves(dim_name: String, obs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let mut grids = Vec::with_capacity(obs.len());
        let mut values = Vec::with_capacity(obs.len());
        for (pts, vals) in obs {
            if pts.len() != vals.len() {
                return Err(FdError::ShapeMismatch(
                    "points and values differ in length".into(),
                ));
            }
            grids.push(Grid1D::new(pts)?);
            values.push(ArrayD::from_shape_vec(IxDyn(&[vals.len()]), vals).unwrap());
        }
        let mut argvals = IndexMap::new();
        argvals.insert(dim_name, grids);
        Self::from_parts(argvals, values)
    }

    pub fn n_obs(&self) -> usize {
        self.values.len()
    }

    pub fn n_dim(&self) -> usize {
        self.argvals.len()
    }

    pub fn argvals(&self) -> &IndexMap<String, Vec<Grid1D>> {
        &self.argvals
    }

    /// Grid of observation `i` along input dimension `dim`.
    pub fn obs_grid(&self, dim: usize, i: usize) -> &Grid1D {
        &self.argvals.get_index(dim).expect("dimension in range").1[i]
    }

    pub fn obs_values(&self, i: usize) -> &ArrayD<f64> {
        &self.values[i]
    }

    /// `(points, values)` slices of a 1-D observation.
    pub fn curve(&self, i: usize) -> (&[f64], &[f64]) {
        debug_assert_eq!(self.n_dim(), 1);
        (
            self.obs_grid(0, i).points(),
            self.values[i].as_slice().expect("contiguous"),
        )
    }

    pub fn dim_name(&self, dim: usize) -> String {
        self.argvals.get_index(dim).expect("dimension in range").0.clone()
    }

    /// Sampling grids affinely mapped onto [0, 1], per observation.
    pub fn argvals_stand(&self) -> IndexMap<String, Vec<Grid1D>> {
        self.argvals
            .iter()
            .map(|(k, grids)| (k.clone(), grids.iter().map(Grid1D::standardized).collect()))
            .collect()
    }

    pub fn summary(&self) -> FdSummary {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in &self.values {
            for &v in t.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let n = self.n_obs() as f64;
        FdSummary {
            n_obs: self.n_obs(),
            n_points: self
                .argvals
                .values()
                .map(|grids| grids.iter().map(|g| g.len() as f64).sum::<f64>() / n)
                .collect(),
            n_points_is_mean: true,
            n_dim: self.n_dim(),
            range_obs: (lo, hi),
            // aggregated over the union of all per-observation grids
            range_points: self
                .argvals
                .values()
                .map(|grids| {
                    let lo = grids.iter().map(Grid1D::min).fold(f64::INFINITY, f64::min);
                    let hi = grids.iter().map(Grid1D::max).fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect(),
        }
    }

    /// Observations in the half-open index range `[lo, hi)`; grids are
    /// filtered by key and renumbered from 0.
    pub fn subset(&self, lo: usize, hi: usize) -> Result<IrregularFD> {
        check_subset_range(lo, hi, self.n_obs())?;
        self.select_obs(&(lo..hi).collect::<Vec<_>>())
    }

    /// New object holding the observations listed in `idx`, in that order.
    pub fn select_obs(&self, idx: &[usize]) -> Result<IrregularFD> {
        if idx.is_empty() {
            return Err(FdError::EmptyData("empty observation selection".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_obs()) {
            return Err(FdError::IndexOutOfRange(format!(
                "observation {bad} out of 0..{}",
                self.n_obs()
            )));
        }
        let argvals = self
            .argvals
            .iter()
            .map(|(k, grids)| (k.clone(), idx.iter().map(|&i| grids[i].clone()).collect()))
            .collect();
        let values = idx.iter().map(|&i| self.values[i].clone()).collect();
        Self::from_parts(argvals, values)
    }

    /// Union grid along one dimension: sorted union of every observation's
    /// grid points (exact comparison, no tolerance).
    pub fn union_grid(&self, dim: usize) -> Grid1D {
        let mut pts: Vec<f64> = self
            .argvals
            .get_index(dim)
            .expect("dimension in range")
            .1
            .iter()
            .flat_map(|g| g.points().iter().copied())
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        Grid1D::new(pts).expect("non-empty sorted union")
    }

    /// Convert to the dense representation on the union grid, with absent
    /// cells set to the missing marker.
    pub fn to_dense(&self) -> DenseFD {
        let n = self.n_obs();
        match self.n_dim() {
            1 => {
                let union = self.union_grid(0);
                let m = union.len();
                let mut values = ndarray::Array2::from_elem((n, m), MISSING);
                for i in 0..n {
                    let (pts, vals) = self.curve(i);
                    for (p, v) in pts.iter().zip(vals) {
                        let j = union.position(*p).expect("union contains point");
                        values[(i, j)] = *v;
                    }
                }
                let mut argvals = IndexMap::new();
                argvals.insert(self.dim_name(0), union);
                DenseFD::new(argvals, values.into_dyn()).expect("valid by construction")
            }
            _ => {
                let ux = self.union_grid(0);
                let uy = self.union_grid(1);
                let mut values =
                    ndarray::Array3::from_elem((n, ux.len(), uy.len()), MISSING);
                for i in 0..n {
                    let gx = self.obs_grid(0, i).points();
                    let gy = self.obs_grid(1, i).points();
                    let t = self.values[i]
                        .view()
                        .into_dimensionality::<ndarray::Ix2>()
                        .unwrap();
                    for (a, &x) in gx.iter().enumerate() {
                        let r = ux.position(x).unwrap();
                        for (b, &y) in gy.iter().enumerate() {
                            let c = uy.position(y).unwrap();
                            values[(i, r, c)] = t[(a, b)];
                        }
                    }
                }
                let mut argvals = IndexMap::new();
                argvals.insert(self.dim_name(0), ux);
                argvals.insert(self.dim_name(1), uy);
                DenseFD::new(argvals, values.into_dyn()).expect("valid by construction")
            }
        }
    }

    /// Value-level equality (exact; irregular data carry no missing cells).
    pub fn content_eq(&self, other: &IrregularFD) -> bool {
        self.argvals == other.argvals
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| x == y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> IrregularFD {
        IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![
                (vec![0.0, 1.0], vec![1.0, 2.0]),
                (vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0, 6.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn construct_single_observation() {
        let fd = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![(vec![0.5], vec![2.0])],
        )
        .unwrap();
        assert_eq!(fd.n_obs(), 1);
    }

    #[test]
    fn key_mismatch_rejected() {
        let mut per_obs = BTreeMap::new();
        per_obs.insert(0usize, Grid1D::new(vec![0.0]).unwrap());
        let mut argvals = IndexMap::new();
        argvals.insert("input_dim_0".to_string(), per_obs);
        let mut values = BTreeMap::new();
        values.insert(0usize, ArrayD::from_shape_vec(IxDyn(&[1]), vec![1.0]).unwrap());
        values.insert(1usize, ArrayD::from_shape_vec(IxDyn(&[1]), vec![2.0]).unwrap());
        assert!(matches!(
            IrregularFD::new(argvals, values),
            Err(FdError::KeyMismatch(_))
        ));
    }

    #[test]
    fn missing_marker_rejected() {
        let err = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![(vec![0.0, 1.0], vec![1.0, MISSING])],
        );
        assert!(matches!(err, Err(FdError::MissingValues(_))));
    }

    #[test]
    fn keys_renumber_in_ascending_order() {
        let mut per_obs = BTreeMap::new();
        per_obs.insert(7usize, Grid1D::new(vec![0.0]).unwrap());
        per_obs.insert(3usize, Grid1D::new(vec![1.0]).unwrap());
        let mut argvals = IndexMap::new();
        argvals.insert("input_dim_0".to_string(), per_obs);
        let mut values = BTreeMap::new();
        values.insert(7usize, ArrayD::from_shape_vec(IxDyn(&[1]), vec![70.0]).unwrap());
        values.insert(3usize, ArrayD::from_shape_vec(IxDyn(&[1]), vec![30.0]).unwrap());
        let fd = IrregularFD::new(argvals, values).unwrap();
        // key 3 becomes observation 0
        assert_eq!(fd.curve(0).1, &[30.0]);
        assert_eq!(fd.curve(1).1, &[70.0]);
    }

    #[test]
    fn summary_mean_points() {
        let s = toy().summary();
        assert_eq!(s.n_points, vec![3.0]); // mean of {2, 4}
        assert!(s.n_points_is_mean);
        assert_eq!(s.range_points, vec![(0.0, 4.0)]);
    }

    #[test]
    fn to_dense_builds_union_grid() {
        let fd = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![
                (vec![0.0, 1.0], vec![1.0, 2.0]),
                (vec![1.0, 2.0], vec![3.0, 4.0]),
            ],
        )
        .unwrap();
        let dense = fd.to_dense();
        assert_eq!(dense.grid(0).points(), &[0.0, 1.0, 2.0]);
        let m = dense.obs_matrix();
        assert!(is_missing(m[(0, 2)]));
        assert!(is_missing(m[(1, 0)]));
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 2)], 4.0);
    }

    #[test]
    fn shared_grid_to_dense_has_no_missing() {
        let fd = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![
                (vec![0.0, 1.0], vec![1.0, 2.0]),
                (vec![0.0, 1.0], vec![3.0, 4.0]),
            ],
        )
        .unwrap();
        assert!(!fd.to_dense().has_missing());
    }

    #[test]
    fn dense_irregular_round_trip() {
        let fd = toy();
        let back = fd.to_dense().to_irregular().unwrap();
        assert!(back.content_eq(&fd));
    }
}
