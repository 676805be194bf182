//! One-dimensional sampling grids.

use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};

/// An ordered set of sampling locations along one input dimension.
///
/// Points are strictly increasing and finite; duplicates are rejected rather
/// than deduplicated, since silently dropping a point would desynchronize the
/// associated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D(Vec<f64>);

impl Grid1D {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(FdError::InvalidGrid("grid has no points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(FdError::InvalidGrid("grid contains non-finite points".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FdError::InvalidGrid(
                "grid points must be strictly increasing (duplicates rejected)".into(),
            ));
        }
        Ok(Grid1D(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        *self.0.last().unwrap()
    }

    /// Affine image of the grid on [0, 1]; a single-point grid maps to 0.
    pub fn standardized(&self) -> Grid1D {
        let (lo, hi) = (self.min(), self.max());
        if self.len() == 1 {
            return Grid1D(vec![0.0]);
        }
        let span = hi - lo;
        let mut pts: Vec<f64> = self.0.iter().map(|p| (p - lo) / span).collect();
        // endpoints exactly 0 and 1
        pts[0] = 0.0;
        *pts.last_mut().unwrap() = 1.0;
        Grid1D(pts)
    }

    /// Position of `x` in the grid if it is an exact member.
    pub fn position(&self, x: f64) -> Option<usize> {
        self.0
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
            .ok()
    }
}

impl AsRef<[f64]> for Grid1D {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_unsorted_and_duplicates() {
        assert!(Grid1D::new(vec![]).is_err());
        assert!(Grid1D::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(Grid1D::new(vec![1.0, 0.5]).is_err());
        assert!(Grid1D::new(vec![0.0, f64::NAN]).is_err());
        assert!(Grid1D::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn standardized_hits_unit_interval() {
        let g = Grid1D::new(vec![2.0, 3.0, 5.0]).unwrap();
        let s = g.standardized();
        assert_eq!(s.points()[0], 0.0);
        assert_eq!(s.points()[2], 1.0);
        assert!((s.points()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_standardizes_to_zero() {
        let g = Grid1D::new(vec![7.5]).unwrap();
        assert_eq!(g.standardized().points(), &[0.0]);
    }
}
