//! Kernel functions and local polynomial regression for curve denoising.
//!
//! The degree-d estimator at a point t0 solves the kernel-weighted normal
//! equations A theta = a with design vector U(u) = (1, u, ..., u^d/d!) and
//! scaled kernel K_h(u) = K(u/h)/h, returning the fitted value theta_0.
//! Degree 0 reduces to the Nadaraya-Watson weighted mean.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::data::{is_missing, DenseFD, FunctionalData, Grid1D, MISSING};
use crate::error::{FdError, Result};
use crate::numeric::linspace;

/// Kernel families; all are even, non-negative and integrate to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
    Tricube,
    Bisquare,
}

impl Kernel {
    /// Density value at `u`.
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Kernel::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Tricube => {
                if u.abs() < 1.0 {
                    let t = 1.0 - u.abs().powi(3);
                    (70.0 / 81.0) * t * t * t
                } else {
                    0.0
                }
            }
            Kernel::Bisquare => {
                if u.abs() < 1.0 {
                    let t = 1.0 - u * u;
                    (15.0 / 16.0) * t * t
                } else {
                    0.0
                }
            }
        }
    }

    /// True for kernels supported on [-1, 1].
    pub fn compact(self) -> bool {
        !matches!(self, Kernel::Gaussian)
    }

    pub fn parse(name: &str) -> Result<Kernel> {
        match name {
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "tricube" => Ok(Kernel::Tricube),
            "bisquare" => Ok(Kernel::Bisquare),
            other => Err(FdError::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Result of one local polynomial fit.
#[derive(Debug, Clone)]
pub struct LocalPolyFit {
    /// Fitted value at the evaluation point (first coefficient).
    pub estimate: f64,
    /// Solution of the normal equations, length `degree + 1`.
    pub coefficients: Vec<f64>,
}

/// Fit a degree-`degree` local polynomial to `(points, values)` at `t0`.
pub fn local_poly_fit(
    points: &[f64],
    values: &[f64],
    t0: f64,
    degree: usize,
    bandwidth: f64,
    kernel: Kernel,
) -> Result<LocalPolyFit> {
    debug_assert_eq!(points.len(), values.len());
    if points.is_empty() {
        return Err(FdError::EmptyData("no points to fit".into()));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(FdError::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {bandwidth}"
        )));
    }
    let p = degree + 1;
    let m = points.len() as f64;
    let inv_fact: Vec<f64> = {
        let mut f = vec![1.0; p];
        for k in 1..p {
            f[k] = f[k - 1] / k as f64;
        }
        f
    };
    let mut a_mat = DMatrix::<f64>::zeros(p, p);
    let mut a_vec = DVector::<f64>::zeros(p);
    let mut design = vec![0.0; p];
    for (&t, &y) in points.iter().zip(values) {
        let u = (t - t0) / bandwidth;
        let w = kernel.eval(u) / bandwidth;
        if w == 0.0 {
            continue;
        }
        let mut pow = 1.0;
        for k in 0..p {
            design[k] = pow * inv_fact[k];
            pow *= u;
        }
        for i in 0..p {
            let wi = w * design[i] / m;
            for j in i..p {
                a_mat[(i, j)] += wi * design[j];
            }
            a_vec[i] += wi * y;
        }
    }
    for i in 0..p {
        for j in 0..i {
            a_mat[(i, j)] = a_mat[(j, i)];
        }
    }

    // rank check on the smallest eigenvalue relative to the trace
    let threshold = 1e-10 * a_mat.trace() / p as f64;
    let eig = nalgebra::SymmetricEigen::new(a_mat);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_min > threshold) || !lambda_min.is_finite() {
        return Err(FdError::RankDeficient { t0, obs: None });
    }
    let proj = eig.eigenvectors.transpose() * &a_vec;
    let mut theta = DVector::<f64>::zeros(p);
    for k in 0..p {
        theta += eig.eigenvectors.column(k) * (proj[k] / eig.eigenvalues[k]);
    }
    Ok(LocalPolyFit {
        estimate: theta[0],
        coefficients: theta.iter().copied().collect(),
    })
}

/// Bandwidth selection strategy.
#[derive(Debug, Clone)]
pub enum BandwidthSpec {
    Fixed(f64),
    /// Leave-one-out cross validation on a log-spaced candidate set;
    /// ties resolve to the largest bandwidth.
    Cv,
    /// Distance from `anchor` to its `neighborhood`-th nearest distinct
    /// sampling distance (one global bandwidth per curve).
    Knn { anchor: f64, neighborhood: usize },
}

/// Leave-one-out CV bandwidth over log-spaced candidates.
pub fn estimate_bandwidth_cv(
    points: &[f64],
    values: &[f64],
    degree: usize,
    kernel: Kernel,
) -> Result<f64> {
    let m = points.len();
    if m < degree + 2 {
        return Err(FdError::InvalidParameter(format!(
            "need at least {} points for degree {degree}, got {m}",
            degree + 2
        )));
    }
    let span = points[m - 1] - points[0];
    if span <= 0.0 {
        return Err(FdError::InvalidGrid("degenerate point range".into()));
    }
    let mean_step = span / (m - 1) as f64;
    let h_min = mean_step * (degree + 2) as f64 * 0.5;
    let h_max = span;
    let n_cand = 20;
    let candidates: Vec<f64> = (0..n_cand)
        .map(|i| h_min * (h_max / h_min).powf(i as f64 / (n_cand - 1) as f64))
        .collect();

    let mut best: Option<(f64, f64)> = None; // (err, h)
    let scale = 1e-9 * (1.0 + values.iter().map(|v| v * v).sum::<f64>());
    for &h in &candidates {
        let mut err = 0.0;
        let mut ok = true;
        for leave in 0..m {
            let pts: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != leave)
                .map(|(_, &t)| t)
                .collect();
            let vals: Vec<f64> = values
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != leave)
                .map(|(_, &v)| v)
                .collect();
            match local_poly_fit(&pts, &vals, points[leave], degree, h, kernel) {
                Ok(fit) => err += (fit.estimate - values[leave]).powi(2),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // prefer the largest bandwidth among near-ties
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
    best.map(|(_, h)| h).ok_or(FdError::RankDeficient {
        t0: f64::NAN,
        obs: None,
    })
}

/// Bandwidth from the `neighborhood`-th nearest distinct sampling distance
/// to `anchor` (distances within relative 1e-9 collapse to one).
pub fn estimate_bandwidth_knn(points: &[f64], anchor: f64, neighborhood: usize) -> Result<f64> {
    if neighborhood == 0 {
        return Err(FdError::InvalidParameter("neighborhood must be >= 1".into()));
    }
    let span = points.last().unwrap_or(&0.0) - points.first().unwrap_or(&0.0);
    let zero_tol = 1e-12 * span.max(1.0);
    let mut dists: Vec<f64> = points
        .iter()
        .map(|&t| (t - anchor).abs())
        .filter(|d| *d > zero_tol)
        .collect();
    if dists.is_empty() {
        return Err(FdError::EmptyData("no points away from the anchor".into()));
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups: Vec<f64> = vec![dists[0]];
    for &d in &dists[1..] {
        let last = *groups.last().unwrap();
        if d - last > 1e-9 * d.max(1.0) {
            groups.push(d);
        }
    }
    Ok(groups[(neighborhood - 1).min(groups.len() - 1)])
}

/// Per-curve smoothing parameters.
#[derive(Debug, Clone)]
pub struct SmoothParams {
    pub degree: usize,
    pub kernel: Kernel,
    pub bandwidth: BandwidthSpec,
}

impl Default for SmoothParams {
    /// Local linear fit with an Epanechnikov kernel and a two-point
    /// neighborhood bandwidth anchored mid-domain.
    fn default() -> Self {
        SmoothParams {
            degree: 1,
            kernel: Kernel::Epanechnikov,
            bandwidth: BandwidthSpec::Knn {
                anchor: f64::NAN, // resolved to the domain midpoint per curve
                neighborhood: 2,
            },
        }
    }
}

fn resolve_bandwidth(
    params: &SmoothParams,
    points: &[f64],
    values: &[f64],
) -> Result<f64> {
    match &params.bandwidth {
        BandwidthSpec::Fixed(h) => Ok(*h),
        BandwidthSpec::Cv => estimate_bandwidth_cv(points, values, params.degree, params.kernel),
        BandwidthSpec::Knn { anchor, neighborhood } => {
            let anchor = if anchor.is_nan() {
                0.5 * (points[0] + points[points.len() - 1])
            } else {
                *anchor
            };
            estimate_bandwidth_knn(points, anchor, *neighborhood)
        }
    }
}

/// Smooth every observation of `fd` onto `output_grid` (defaults to the
/// common grid for dense input, the union grid for irregular input).
pub fn smooth_fd(
    fd: &FunctionalData,
    params: &SmoothParams,
    output_grid: Option<&Grid1D>,
) -> Result<DenseFD> {
    let curves = extract_curves(fd)?;
    let default_grid = match fd {
        FunctionalData::Dense(d) => d.grid(0).clone(),
        FunctionalData::Irregular(ir) => ir.union_grid(0),
    };
    let grid = output_grid.cloned().unwrap_or(default_grid);
    let out = smooth_curves(&curves, params, grid.points(), false)?;
    DenseFD::from_matrix(grid, out)
}

/// Observation list as `(points, values)` pairs, missing cells dropped.
pub(crate) fn extract_curves(fd: &FunctionalData) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    match fd {
        FunctionalData::Dense(d) => {
            if d.n_dim() != 1 {
                return Err(FdError::InvalidParameter(
                    "smoothing handles 1-D domains only".into(),
                ));
            }
            let grid = d.grid(0).points();
            Ok(d.obs_matrix()
                .rows()
                .into_iter()
                .map(|row| {
                    let mut pts = Vec::new();
                    let mut vals = Vec::new();
                    for (j, &v) in row.iter().enumerate() {
                        if !is_missing(v) {
                            pts.push(grid[j]);
                            vals.push(v);
                        }
                    }
                    (pts, vals)
                })
                .collect())
        }
        FunctionalData::Irregular(ir) => {
            if ir.n_dim() != 1 {
                return Err(FdError::InvalidParameter(
                    "smoothing handles 1-D domains only".into(),
                ));
            }
            Ok((0..ir.n_obs())
                .map(|i| {
                    let (p, v) = ir.curve(i);
                    (p.to_vec(), v.to_vec())
                })
                .collect())
        }
    }
}

/// Smooth a list of curves onto `out_grid`. With `restrict_support` the
/// output is the missing marker outside a curve's own sampling range
/// (no extrapolation); otherwise a failed fit is a hard error carrying the
/// observation index.
pub(crate) fn smooth_curves(
    curves: &[(Vec<f64>, Vec<f64>)],
    params: &SmoothParams,
    out_grid: &[f64],
    restrict_support: bool,
) -> Result<Array2<f64>> {
    let mut out = Array2::from_elem((curves.len(), out_grid.len()), MISSING);
    for (i, (pts, vals)) in curves.iter().enumerate() {
        if pts.len() < params.degree + 2 {
            return Err(FdError::InvalidParameter(format!(
                "observation {i} has {} points, need at least {} for degree {}",
                pts.len(),
                params.degree + 2,
                params.degree
            )));
        }
        let h = resolve_bandwidth(params, pts, vals)?;
        let (lo, hi) = (pts[0], pts[pts.len() - 1]);
        for (j, &t0) in out_grid.iter().enumerate() {
            if restrict_support && (t0 < lo || t0 > hi) {
                continue;
            }
            match local_poly_fit(pts, vals, t0, params.degree, h, params.kernel) {
                Ok(fit) => out[(i, j)] = fit.estimate,
                Err(FdError::RankDeficient { t0, .. }) => {
                    if restrict_support {
                        continue;
                    }
                    return Err(FdError::RankDeficient { t0, obs: Some(i) });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Evaluation grid helper used by callers that take `start:stop:count` specs.
pub fn grid_from_spec(start: f64, stop: f64, count: usize) -> Result<Grid1D> {
    Grid1D::new(linspace(start, stop, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IrregularFD;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kernel_values_at_zero() {
        assert_abs_diff_eq!(Kernel::Epanechnikov.eval(0.0), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(
            Kernel::Gaussian.eval(0.0),
            0.3989422804014327,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(Kernel::Tricube.eval(0.0), 70.0 / 81.0, epsilon = 1e-15);
        assert_abs_diff_eq!(Kernel::Bisquare.eval(0.0), 15.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn compact_kernels_vanish_outside_support() {
        for k in [Kernel::Epanechnikov, Kernel::Tricube, Kernel::Bisquare] {
            assert_eq!(k.eval(1.0), 0.0);
            assert_eq!(k.eval(-1.3), 0.0);
        }
    }

    #[test]
    fn kernels_integrate_to_one() {
        // quadrature oracle on a fine grid
        for k in [
            Kernel::Gaussian,
            Kernel::Epanechnikov,
            Kernel::Tricube,
            Kernel::Bisquare,
        ] {
            let lim = if k.compact() { 1.0 } else { 8.0 };
            let grid = linspace(-lim, lim, 200_001);
            let vals: Vec<f64> = grid.iter().map(|&u| k.eval(u)).collect();
            let integral = crate::numeric::trapezoid_integral(&grid, &vals);
            let tol = if k.compact() { 1e-6 } else { 1e-4 };
            assert!((integral - 1.0).abs() < tol, "{k:?}: {integral}");
        }
    }

    #[test]
    fn degree_zero_equals_nadaraya_watson() {
        let pts: Vec<f64> = linspace(0.0, 1.0, 23);
        let vals: Vec<f64> = pts.iter().map(|t| (3.0 * t).sin() + t).collect();
        for &t0 in &[0.1, 0.47, 0.9] {
            let h = 0.2;
            let fit = local_poly_fit(&pts, &vals, t0, 0, h, Kernel::Epanechnikov).unwrap();
            // independent weighted-mean oracle
            let mut num = 0.0;
            let mut den = 0.0;
            for (&t, &y) in pts.iter().zip(&vals) {
                let w = Kernel::Epanechnikov.eval((t - t0) / h) / h;
                num += w * y;
                den += w;
            }
            assert_abs_diff_eq!(fit.estimate, num / den, epsilon = 1e-12);
        }
    }

    #[test]
    fn constants_reproduced_for_any_degree() {
        let pts: Vec<f64> = linspace(0.0, 2.0, 15);
        let vals = vec![4.2; 15];
        for d in 0..4 {
            let fit = local_poly_fit(&pts, &vals, 0.73, d, 0.5, Kernel::Bisquare).unwrap();
            assert_abs_diff_eq!(fit.estimate, 4.2, epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_data_exact_at_degree_one() {
        let pts: Vec<f64> = linspace(0.0, 1.0, 31);
        let vals: Vec<f64> = pts.iter().map(|t| 2.0 + 3.0 * t).collect();
        for &t0 in &[0.0, 0.33, 1.0] {
            let fit = local_poly_fit(&pts, &vals, t0, 1, 0.15, Kernel::Epanechnikov).unwrap();
            assert_abs_diff_eq!(fit.estimate, 2.0 + 3.0 * t0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_reported_when_window_is_empty() {
        let pts = vec![0.0, 0.1, 0.2];
        let vals = vec![1.0, 2.0, 3.0];
        let err = local_poly_fit(&pts, &vals, 5.0, 1, 0.05, Kernel::Epanechnikov);
        assert!(matches!(err, Err(FdError::RankDeficient { .. })));
    }

    #[test]
    fn knn_bandwidth_is_kth_distinct_distance() {
        let pts: Vec<f64> = linspace(0.0, 1.0, 101); // step 0.01
        let h = estimate_bandwidth_knn(&pts, 0.5, 2).unwrap();
        assert_abs_diff_eq!(h, 0.02, epsilon = 1e-9);
        let h1 = estimate_bandwidth_knn(&pts, 0.5, 1).unwrap();
        assert_abs_diff_eq!(h1, 0.01, epsilon = 1e-9);
    }

    #[test]
    fn cv_on_line_prefers_largest_bandwidth() {
        let pts: Vec<f64> = linspace(0.0, 1.0, 21);
        let vals: Vec<f64> = pts.iter().map(|t| 1.0 - 2.0 * t).collect();
        let h = estimate_bandwidth_cv(&pts, &vals, 1, Kernel::Gaussian).unwrap();
        assert_abs_diff_eq!(h, 1.0, epsilon = 1e-12); // grid maximum = span
    }

    #[test]
    fn smooth_fd_reproduces_polynomials_on_grid() {
        let grid = Grid1D::new(linspace(0.0, 1.0, 41)).unwrap();
        let vals = ndarray::Array2::from_shape_fn((3, 41), |(i, j)| {
            let t = j as f64 / 40.0;
            (i + 1) as f64 * (0.5 + t - 0.3 * t * t)
        });
        let fd = DenseFD::from_matrix(grid.clone(), vals.clone()).unwrap();
        let params = SmoothParams {
            degree: 2,
            kernel: Kernel::Epanechnikov,
            bandwidth: BandwidthSpec::Fixed(0.2),
        };
        let sm = smooth_fd(&FunctionalData::Dense(fd), &params, None).unwrap();
        for i in 0..3 {
            for j in 0..41 {
                assert_abs_diff_eq!(sm.obs_matrix()[(i, j)], vals[(i, j)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn compact_kernels_ignore_points_outside_the_window() {
        let pts: Vec<f64> = linspace(0.0, 1.0, 21);
        let vals: Vec<f64> = pts.iter().map(|t| t.sin()).collect();
        let t0 = 0.5;
        let h = 0.12;
        let base = local_poly_fit(&pts, &vals, t0, 1, h, Kernel::Tricube).unwrap();
        // wreck every value outside the kernel window
        let wrecked: Vec<f64> = pts
            .iter()
            .zip(&vals)
            .map(|(&t, &y)| if (t - t0).abs() >= h { 1e6 } else { y })
            .collect();
        let same = local_poly_fit(&pts, &wrecked, t0, 1, h, Kernel::Tricube).unwrap();
        assert_abs_diff_eq!(base.estimate, same.estimate, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        let fd = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![(vec![0.0, 1.0], vec![1.0, 2.0])],
        )
        .unwrap();
        let params = SmoothParams {
            degree: 1,
            kernel: Kernel::Gaussian,
            bandwidth: BandwidthSpec::Fixed(0.5),
        };
        assert!(smooth_fd(&FunctionalData::Irregular(fd), &params, None).is_err());
    }

    proptest! {
        // degree-0 fits equal the Nadaraya-Watson oracle on random instances
        #[test]
        fn nw_identity_random(seedvals in proptest::collection::vec(-5.0f64..5.0, 8..20), t0 in 0.05f64..0.95) {
            let m = seedvals.len();
            let pts: Vec<f64> = linspace(0.0, 1.0, m);
            let h = 0.4;
            let fit = local_poly_fit(&pts, &seedvals, t0, 0, h, Kernel::Gaussian).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (&t, &y) in pts.iter().zip(&seedvals) {
                let w = Kernel::Gaussian.eval((t - t0) / h);
                num += w * y;
                den += w;
            }
            prop_assert!((fit.estimate - num / den).abs() <= 1e-12 * (1.0 + (num/den).abs()));
        }

        // estimates are invariant to uniform kernel-weight rescaling (bandwidth
        // enters both sides of the normal equations)
        #[test]
        fn observation_order_invariance(perm_seed in 0u64..u64::MAX) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let pts: Vec<f64> = linspace(0.0, 1.0, 12);
            let vals: Vec<f64> = pts.iter().map(|t| t.cos()).collect();
            let mut idx: Vec<usize> = (0..12).collect();
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(perm_seed);
            idx.shuffle(&mut rng);
            let pts_p: Vec<f64> = idx.iter().map(|&i| pts[i]).collect();
            let vals_p: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
            let a = local_poly_fit(&pts, &vals, 0.4, 1, 0.3, Kernel::Bisquare).unwrap();
            let b = local_poly_fit(&pts_p, &vals_p, 0.4, 1, 0.3, Kernel::Bisquare).unwrap();
            prop_assert!((a.estimate - b.estimate).abs() < 1e-10);
        }
    }
}
