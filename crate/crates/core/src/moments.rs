//! Mean and covariance function estimation.
//!
//! The covariance surface is the cross-product estimator with divisor N on
//! the off-diagonal; the diagonal, which raw products contaminate with the
//! measurement-error variance, is replaced by a 2-D local-linear smooth of
//! the off-diagonal entries. The gap between raw and smoothed diagonals over
//! the central half of the domain yields the noise variance estimate.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::data::{is_missing, DenseFD, FunctionalData, Grid1D, MISSING};
use crate::error::{FdError, Result};
use crate::numeric::{symmetric_eigen_desc, trapezoid_weights};
use crate::smooth::{smooth_curves, SmoothParams};

/// Tuning of the moment estimators.
#[derive(Debug, Clone, Default)]
pub struct MomentOptions {
    /// Per-curve pre-smoothing when estimating the mean. `None` takes dense
    /// observations as-is; irregular data fall back to the default smoother.
    pub mean_smooth: Option<SmoothParams>,
    /// Per-curve pre-smoothing for the covariance path; defaults to the mean
    /// smoother's behavior.
    pub cov_smooth: Option<SmoothParams>,
    /// Keep the raw covariance diagonal instead of replacing it by the
    /// off-diagonal smooth (which also skips the noise variance estimate).
    pub skip_diagonal_correction: bool,
    /// Fixed relative bandwidth for the 2-D surface smoother (fraction of the
    /// domain span); `None` selects it by cross validation on a coarse grid.
    pub surface_bandwidth: Option<f64>,
}

impl MomentOptions {
    /// Raw moments: no curve smoothing, no diagonal correction.
    pub fn raw() -> Self {
        MomentOptions {
            skip_diagonal_correction: true,
            ..Default::default()
        }
    }
}

/// An estimated covariance surface on a pair of grids.
#[derive(Debug, Clone)]
pub struct CovSurface {
    pub grid_s: Grid1D,
    pub grid_t: Grid1D,
    /// `(M_s, M_t)` surface values.
    pub values: Array2<f64>,
    pub diagonal_corrected: bool,
    /// Measurement-error variance estimate; present only after diagonal
    /// correction on a square surface.
    pub noise_variance: Option<f64>,
}

impl CovSurface {
    /// Quadrature-weighted eigenvalues in non-increasing order, negatives
    /// clipped to zero; the second element counts the clipped values.
    pub fn eigenvalues(&self) -> (Vec<f64>, usize) {
        let (vals, _) = quadrature_eigen(self.grid_s.points(), &self.values);
        let clipped = vals.iter().filter(|v| **v < 0.0).count();
        (vals.into_iter().map(|v| v.max(0.0)).collect(), clipped)
    }
}

/// Eigendecomposition of a covariance surface under trapezoid quadrature:
/// solves the symmetrized problem W^(1/2) C W^(1/2) and back-transforms the
/// vectors, so the returned rows are orthonormal in L2 at grid resolution.
/// Rows of the second element are eigenfunctions, sign-fixed so the largest
/// absolute entry is positive.
pub fn quadrature_eigen(grid: &[f64], surface: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let m = grid.len();
    debug_assert_eq!(surface.dim(), (m, m));
    let w = trapezoid_weights(grid);
    let w_sqrt: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut b = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = w_sqrt[i] * surface[(i, j)] * w_sqrt[j];
        }
    }
    // enforce exact symmetry before the eigensolver
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    let (vals, vecs) = symmetric_eigen_desc(b);
    let mut funcs = Array2::zeros((m, m));
    for k in 0..m {
        let mut row: Vec<f64> = (0..m).map(|i| vecs[(i, k)] / w_sqrt[i]).collect();
        crate::numeric::fix_sign(&mut row);
        for (i, v) in row.into_iter().enumerate() {
            funcs[(k, i)] = v;
        }
    }
    (vals, funcs)
}

/// Curve estimates on a common grid: raw dense rows (missing kept) or
/// per-curve local polynomial fits evaluated on the grid, restricted to each
/// observation's own sampling range.
pub(crate) fn curve_estimates(
    fd: &FunctionalData,
    smooth: Option<&SmoothParams>,
) -> Result<(Grid1D, Array2<f64>)> {
    match fd {
        FunctionalData::Dense(d) => {
            if d.n_dim() != 1 {
                return Err(FdError::InvalidParameter(
                    "moment estimation handles 1-D domains only".into(),
                ));
            }
            let grid = d.grid(0).clone();
            match smooth {
                None => Ok((grid, d.obs_matrix().to_owned())),
                Some(params) => {
                    let curves = crate::smooth::extract_curves(fd)?;
                    let xhat = smooth_curves(&curves, params, grid.points(), true)?;
                    Ok((grid, xhat))
                }
            }
        }
        FunctionalData::Irregular(ir) => {
            if ir.n_dim() != 1 {
                return Err(FdError::InvalidParameter(
                    "moment estimation handles 1-D domains only".into(),
                ));
            }
            let grid = ir.union_grid(0);
            let params = smooth.cloned().unwrap_or_default();
            let curves = crate::smooth::extract_curves(fd)?;
            let xhat = smooth_curves(&curves, &params, grid.points(), true)?;
            Ok((grid, xhat))
        }
    }
}

fn pointwise_mean(xhat: &Array2<f64>, grid: &Grid1D) -> Result<Vec<f64>> {
    let (n, m) = xhat.dim();
    let mut mean = vec![0.0; m];
    for j in 0..m {
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            let v = xhat[(i, j)];
            if !is_missing(v) {
                acc += v;
                count += 1;
            }
        }
        if count == 0 {
            return Err(FdError::EmptyData(format!(
                "no observation contributes at grid point t={}",
                grid.points()[j]
            )));
        }
        mean[j] = acc / count as f64;
    }
    Ok(mean)
}

/// Pointwise average of the per-curve estimates (missing cells excluded with
/// a per-point divisor). Returns a one-observation dense object.
pub fn estimate_mean(fd: &FunctionalData, opts: &MomentOptions) -> Result<DenseFD> {
    let (grid, xhat) = curve_estimates(fd, opts.mean_smooth.as_ref())?;
    let mean = pointwise_mean(&xhat, &grid)?;
    let m = mean.len();
    DenseFD::from_matrix(grid, Array2::from_shape_vec((1, m), mean).unwrap())
}

/// Covariance surface estimate; requires at least two observations.
///
/// The raw surface uses, per cell, only the observations contributing at
/// both grid points (equal to the plain divisor-N estimator when nothing is
/// missing); cells with fewer than two contributors are handed to the 2-D
/// smoother.
pub fn estimate_covariance(fd: &FunctionalData, opts: &MomentOptions) -> Result<CovSurface> {
    if fd.n_obs() < 2 {
        return Err(FdError::InvalidParameter(
            "covariance estimation needs at least two observations".into(),
        ));
    }
    let cov_smooth = opts.cov_smooth.as_ref().or(opts.mean_smooth.as_ref());
    let (grid, xhat) = curve_estimates(fd, cov_smooth)?;
    let mu = pointwise_mean(&xhat, &grid)?;
    let (n, m) = xhat.dim();

    let complete = !xhat.iter().any(|v| is_missing(*v));
    let mut raw = Array2::from_elem((m, m), MISSING);
    if complete {
        // centered Gram product, divisor N
        let mut centered = xhat.clone();
        for i in 0..n {
            for j in 0..m {
                centered[(i, j)] -= mu[j];
            }
        }
        let gram = centered.t().dot(&centered);
        raw.assign(&gram);
        raw.mapv_inplace(|v| v / n as f64);
    } else {
        for a in 0..m {
            for b in a..m {
                let mut acc = 0.0;
                let mut count = 0usize;
                for i in 0..n {
                    let (x, y) = (xhat[(i, a)], xhat[(i, b)]);
                    if !is_missing(x) && !is_missing(y) {
                        acc += x * y;
                        count += 1;
                    }
                }
                if count >= 2 {
                    let v = acc / count as f64 - mu[a] * mu[b];
                    raw[(a, b)] = v;
                    raw[(b, a)] = v;
                }
            }
        }
    }

    let needs_fill = raw
        .indexed_iter()
        .any(|((a, b), v)| a != b && is_missing(*v));
    let correct = !opts.skip_diagonal_correction;

    let mut noise = None;
    let mut values = raw.clone();
    if correct || needs_fill {
        let smoother = SurfaceSmoother::build(&grid, &raw, opts.surface_bandwidth)?;
        if correct {
            let mut smooth_diag = vec![0.0; m];
            for (a, sd) in smooth_diag.iter_mut().enumerate() {
                *sd = smoother.eval(a, a)?;
            }
            // noise variance: central 50% of the domain, negative gaps clipped
            let (lo, hi) = (grid.min(), grid.max());
            let (qa, qb) = (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo));
            let mut acc = 0.0;
            let mut count = 0usize;
            for a in 0..m {
                let t = grid.points()[a];
                if t >= qa && t <= qb && !is_missing(raw[(a, a)]) {
                    acc += (raw[(a, a)] - smooth_diag[a]).max(0.0);
                    count += 1;
                }
            }
            if count > 0 {
                noise = Some(acc / count as f64);
            }
            for a in 0..m {
                values[(a, a)] = smooth_diag[a];
            }
        }
        for a in 0..m {
            for b in a + 1..m {
                if is_missing(values[(a, b)]) {
                    let v = smoother.eval(a, b)?;
                    values[(a, b)] = v;
                    values[(b, a)] = v;
                }
            }
        }
    } else {
        // raw diagonal may still be unset when a point has < 2 contributors
        if (0..m).any(|a| is_missing(values[(a, a)])) {
            return Err(FdError::EmptyData(
                "a diagonal cell has fewer than two contributing observations".into(),
            ));
        }
    }

    Ok(CovSurface {
        grid_s: grid.clone(),
        grid_t: grid,
        values,
        diagonal_corrected: correct,
        noise_variance: noise,
    })
}

/// Cross-covariance surface between two components of equal observation
/// count: C(s, t) = mean X^(p)(s) X^(q)(t) - mu^(p)(s) mu^(q)(t). Cells with
/// fewer than two joint contributors hold the missing marker; no diagonal
/// treatment applies.
pub fn cross_covariance(
    fd_p: &FunctionalData,
    fd_q: &FunctionalData,
    opts: &MomentOptions,
) -> Result<CovSurface> {
    if fd_p.n_obs() != fd_q.n_obs() {
        return Err(FdError::ShapeMismatch(format!(
            "components have {} and {} observations",
            fd_p.n_obs(),
            fd_q.n_obs()
        )));
    }
    let cov_smooth = opts.cov_smooth.as_ref().or(opts.mean_smooth.as_ref());
    let (grid_p, xp) = curve_estimates(fd_p, cov_smooth)?;
    let (grid_q, xq) = curve_estimates(fd_q, cov_smooth)?;
    let mup = pointwise_mean(&xp, &grid_p)?;
    let muq = pointwise_mean(&xq, &grid_q)?;
    let n = xp.nrows();
    let (mp, mq) = (grid_p.len(), grid_q.len());
    let mut values = Array2::from_elem((mp, mq), MISSING);
    for a in 0..mp {
        for b in 0..mq {
            let mut acc = 0.0;
            let mut count = 0usize;
            for i in 0..n {
                let (x, y) = (xp[(i, a)], xq[(i, b)]);
                if !is_missing(x) && !is_missing(y) {
                    acc += x * y;
                    count += 1;
                }
            }
            if count >= 2 {
                values[(a, b)] = acc / count as f64 - mup[a] * muq[b];
            }
        }
    }
    Ok(CovSurface {
        grid_s: grid_p,
        grid_t: grid_q,
        values,
        diagonal_corrected: false,
        noise_variance: None,
    })
}

// ---------------------------------------------------------------------------
// 2-D local-linear surface smoother (product Epanechnikov kernel)
// ---------------------------------------------------------------------------

struct SurfaceSmoother<'a> {
    grid: &'a Grid1D,
    /// Non-missing off-diagonal cells, row-indexed: rows[a] = (b, value).
    rows: Vec<Vec<(usize, f64)>>,
    /// Bandwidth in domain units.
    h: f64,
}

impl<'a> SurfaceSmoother<'a> {
    fn build(grid: &'a Grid1D, raw: &Array2<f64>, rel_bandwidth: Option<f64>) -> Result<Self> {
        let m = grid.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut n_cells = 0usize;
        for a in 0..m {
            for b in 0..m {
                if a != b && !is_missing(raw[(a, b)]) {
                    rows[a].push((b, raw[(a, b)]));
                    n_cells += 1;
                }
            }
        }
        if n_cells < 3 {
            return Err(FdError::EmptyData(
                "not enough off-diagonal cells to smooth the covariance surface".into(),
            ));
        }
        let span = grid.max() - grid.min();
        let h = match rel_bandwidth {
            Some(rel) => {
                if !(rel > 0.0) {
                    return Err(FdError::InvalidParameter(
                        "surface bandwidth must be positive".into(),
                    ));
                }
                rel * span
            }
            None => Self::cv_bandwidth(grid, &rows, n_cells, span)?,
        };
        Ok(SurfaceSmoother { grid, rows, h })
    }

    /// Coarse-grid cross validation: leave-one-cell-out squared error on a
    /// deterministic stride subsample, ties toward the larger bandwidth.
    fn cv_bandwidth(
        grid: &Grid1D,
        rows: &[Vec<(usize, f64)>],
        n_cells: usize,
        span: f64,
    ) -> Result<f64> {
        let m = grid.len();
        let mean_step = span / (m - 1).max(1) as f64;
        let h_min = 2.0 * mean_step;
        let h_max = 0.25 * span;
        let candidates: Vec<f64> = if h_min >= h_max {
            vec![h_max.max(h_min)]
        } else {
            (0..6)
                .map(|i| h_min * (h_max / h_min).powf(i as f64 / 5.0))
                .collect()
        };
        let all_cells: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().map(move |&(b, v)| (a, b, v)))
            .collect();
        let stride = (n_cells / 200).max(1);
        let holdout: Vec<(usize, usize, f64)> =
            all_cells.iter().step_by(stride).copied().collect();

        let mut best: Option<(f64, f64)> = None;
        let scale = 1e-12
            * (1.0 + all_cells.iter().map(|c| c.2 * c.2).sum::<f64>() / n_cells as f64)
            * holdout.len() as f64;
        for &h in &candidates {
            let tmp = SurfaceSmoother {
                grid,
                rows: rows.to_vec(),
                h,
            };
            let mut err = 0.0;
            let mut ok = true;
            for &(a, b, v) in &holdout {
                match tmp.eval_excluding(a, b, Some((a, b))) {
                    Some(pred) => err += (pred - v).powi(2),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            best = match best {
                None => Some((err, h)),
                Some((be, bh)) => {
                    if err < be - scale {
                        Some((err, h))
                    } else if err <= be + scale && h > bh {
                        Some((err.min(be), h))
                    } else {
                        Some((be, bh))
                    }
                }
            };
        }
        best.map(|(_, h)| h).ok_or_else(|| {
            FdError::Numerical("surface bandwidth selection failed at every candidate".into())
        })
    }

    /// Smoothed value at grid cell (a, b); widens the bandwidth on rank
    /// failure before giving up.
    fn eval(&self, a: usize, b: usize) -> Result<f64> {
        let span = self.grid.max() - self.grid.min();
        let mut h = self.h;
        loop {
            let tmp = SurfaceSmoother {
                grid: self.grid,
                rows: self.rows.clone(),
                h,
            };
            if let Some(v) = tmp.eval_excluding(a, b, None) {
                return Ok(v);
            }
            h *= 2.0;
            if h > 2.0 * span {
                return Err(FdError::RankDeficient {
                    t0: self.grid.points()[a],
                    obs: None,
                });
            }
        }
    }

    fn eval_excluding(&self, a: usize, b: usize, exclude: Option<(usize, usize)>) -> Option<f64> {
        let pts = self.grid.points();
        let (s0, t0) = (pts[a], pts[b]);
        let h = self.h;
        // local-linear normal equations over the kernel window
        let mut xtx = [[0.0f64; 3]; 3];
        let mut xty = [0.0f64; 3];
        let lo_a = pts.partition_point(|&p| p <= s0 - h);
        let hi_a = pts.partition_point(|&p| p < s0 + h);
        for ia in lo_a..hi_a {
            let ds = pts[ia] - s0;
            let ws = epan(ds / h);
            if ws == 0.0 {
                continue;
            }
            for &(jb, v) in &self.rows[ia] {
                if exclude == Some((ia, jb)) || exclude == Some((jb, ia)) {
                    continue;
                }
                let dt = pts[jb] - t0;
                if dt.abs() >= h {
                    continue;
                }
                let w = ws * epan(dt / h);
                if w == 0.0 {
                    continue;
                }
                let row = [1.0, ds, dt];
                for i in 0..3 {
                    for j in i..3 {
                        xtx[i][j] += w * row[i] * row[j];
                    }
                    xty[i] += w * row[i] * v;
                }
            }
        }
        for i in 0..3 {
            for j in 0..i {
                xtx[i][j] = xtx[j][i];
            }
        }
        let mat = DMatrix::from_fn(3, 3, |i, j| xtx[i][j]);
        let trace = mat.trace();
        let eig = nalgebra::SymmetricEigen::new(mat);
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lambda_min > 1e-10 * trace / 3.0) {
            return None;
        }
        let rhs = DVector::from_row_slice(&xty);
        let proj = eig.eigenvectors.transpose() * rhs;
        let scaled = DVector::from_iterator(
            3,
            proj.iter().zip(eig.eigenvalues.iter()).map(|(p, l)| p / l),
        );
        let sol = eig.eigenvectors * scaled;
        Some(sol[0])
    }
}

#[inline]
fn epan(u: f64) -> f64 {
    if u.abs() < 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}
