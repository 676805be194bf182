//! Gaussian mixture models fitted by EM, with BIC-based selection of the
//! number of components.
//!
//! BIC is defined as 2 loglik - nu log(n) and maximized, with
//! nu = K - 1 + K d + K d(d+1)/2 for full covariances. Fits are
//! deterministic given (points, K, seed): initialization draws come from a
//! ChaCha20 stream, one derived sub-seed per restart.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{FdError, Result};
use crate::numeric::log_sum_exp;

const EM_TOL: f64 = 1e-6;
const EM_MAX_ITER: usize = 300;
const COV_FLOOR_FACTOR: f64 = 1e-6;

/// A fitted Gaussian mixture with full covariances.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    /// `(K, d)` component means.
    pub means: Array2<f64>,
    /// One `(d, d)` SPD covariance per component.
    pub covariances: Vec<Array2<f64>>,
    pub loglik: f64,
    pub n_params: usize,
    /// 2 loglik - n_params log(n); larger is better.
    pub bic: f64,
}

impl GmmModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// Posterior responsibilities, one row per point, rows summing to one.
    pub fn posterior(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if points.ncols() != self.dim() {
            return Err(FdError::ShapeMismatch(format!(
                "points have dimension {}, model has {}",
                points.ncols(),
                self.dim()
            )));
        }
        let comps = self.prepared_components()?;
        let n = points.nrows();
        let k = self.n_components();
        let d = self.dim();
        let mut resp = Array2::zeros((n, k));
        let mut logs = vec![0.0; k];
        let mut row = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        for i in 0..n {
            for (j, v) in points.row(i).iter().enumerate() {
                row[j] = *v;
            }
            for (c, comp) in comps.iter().enumerate() {
                logs[c] = self.weights[c].ln() + comp.log_density(&row, &mut scratch);
            }
            let total = log_sum_exp(&logs);
            for c in 0..k {
                resp[(i, c)] = (logs[c] - total).exp();
            }
        }
        Ok(resp)
    }

    fn prepared_components(&self) -> Result<Vec<PreparedComponent>> {
        (0..self.n_components())
            .map(|c| PreparedComponent::new(self.means.row(c).to_vec(), &self.covariances[c]))
            .collect()
    }
}

/// A component with its Cholesky factor cached for density evaluation.
struct PreparedComponent {
    mean: Vec<f64>,
    /// Lower-triangular factor of the covariance, row-major.
    l: Vec<f64>,
    log_norm: f64,
}

impl PreparedComponent {
    fn new(mean: Vec<f64>, cov: &Array2<f64>) -> Result<Self> {
        let d = mean.len();
        let mat = DMatrix::from_fn(d, d, |i, j| cov[(i, j)]);
        let chol = nalgebra::Cholesky::new(mat).ok_or_else(|| {
            FdError::Numerical("component covariance is not positive definite".into())
        })?;
        let lower = chol.l();
        let log_det: f64 = lower.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                l[i * d + j] = lower[(i, j)];
            }
        }
        Ok(PreparedComponent { mean, l, log_norm })
    }

    /// Log density at `x`, using `scratch` (length d) as work space:
    /// the quadratic form is the squared norm of the forward solve L y = x - m.
    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        let mut quad = 0.0;
        for i in 0..d {
            let mut acc = x[i] - self.mean[i];
            for j in 0..i {
                acc -= self.l[i * d + j] * scratch[j];
            }
            let y = acc / self.l[i * d + i];
            scratch[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }
}

fn sample_covariance(points: ArrayView2<'_, f64>) -> (Vec<f64>, Array2<f64>) {
    let (n, d) = points.dim();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            mean[j] += points[(i, j)];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Array2::zeros((d, d));
    for i in 0..n {
        for a in 0..d {
            let da = points[(i, a)] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (points[(i, b)] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[(a, b)] /= n as f64;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    (mean, cov)
}

/// Raise eigenvalues of a symmetric matrix to at least `floor`; true when
/// anything was clipped.
fn clip_to_floor(cov: &mut Array2<f64>, floor: f64) -> bool {
    let d = cov.nrows();
    let mat = DMatrix::from_fn(d, d, |i, j| cov[(i, j)]);
    let eig = nalgebra::SymmetricEigen::new(mat);
    if eig.eigenvalues.iter().all(|l| *l >= floor) {
        return false;
    }
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(floor)).collect();
    for a in 0..d {
        for b in 0..d {
            let mut v = 0.0;
            for k in 0..d {
                v += eig.eigenvectors[(a, k)] * clipped[k] * eig.eigenvectors[(b, k)];
            }
            cov[(a, b)] = v;
        }
    }
    true
}

fn kmeanspp_means(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let (n, d) = points.dim();
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    centers.push(rng.random_range(0..n));
    let mut dist2 = vec![0.0f64; n];
    while centers.len() < k {
        let mut total = 0.0;
        for i in 0..n {
            let mut best = f64::INFINITY;
            for &c in &centers {
                let mut acc = 0.0;
                for j in 0..d {
                    let diff = points[(i, j)] - points[(c, j)];
                    acc += diff * diff;
                }
                best = best.min(acc);
            }
            dist2[i] = best;
            total += best;
        }
        let next = if total > 0.0 {
            let target: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d2) in dist2.iter().enumerate() {
                acc += d2;
                if acc >= target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
    }
    Array2::from_shape_fn((k, d), |(c, j)| points[(centers[c], j)])
}

/// Fit a `k`-component mixture by EM with k-means++ initialization and the
/// best of `restarts` independent starts.
pub fn gmm_fit(
    points: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<GmmModel> {
    let (n, d) = points.dim();
    if k == 0 {
        return Err(FdError::InvalidParameter("need at least one component".into()));
    }
    if n < k {
        return Err(FdError::InvalidParameter(format!(
            "{n} points cannot support {k} components"
        )));
    }
    if d == 0 {
        return Err(FdError::InvalidParameter("points have no coordinates".into()));
    }
    let (global_mean, global_cov) = sample_covariance(points);
    let mean_var = (0..d).map(|j| global_cov[(j, j)]).sum::<f64>() / d as f64;
    let scale = global_mean.iter().map(|m| m * m).sum::<f64>() / d as f64;
    let zero_variance = mean_var <= 1e-20 * (1.0 + scale);
    if zero_variance && k > 1 {
        return Err(FdError::InvalidParameter(
            "zero-variance data cannot support more than one component".into(),
        ));
    }
    let floor = if zero_variance {
        1e-12
    } else {
        COV_FLOOR_FACTOR * mean_var
    };

    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let mut best: Option<GmmModel> = None;
    for _ in 0..restarts.max(1) {
        let sub_seed: u64 = master.random();
        let mut rng = ChaCha20Rng::seed_from_u64(sub_seed);
        let model = em_single_start(points, k, floor, &global_cov, &mut rng)?;
        best = match best {
            None => Some(model),
            Some(b) if model.loglik > b.loglik => Some(model),
            Some(b) => Some(b),
        };
    }
    Ok(best.expect("at least one restart"))
}

fn em_single_start(
    points: ArrayView2<'_, f64>,
    k: usize,
    floor: f64,
    global_cov: &Array2<f64>,
    rng: &mut ChaCha20Rng,
) -> Result<GmmModel> {
    let (n, d) = points.dim();
    let mut means = kmeanspp_means(points, k, rng);
    let mut init_cov = global_cov.clone();
    clip_to_floor(&mut init_cov, floor.max(1e-12));
    let mut covariances: Vec<Array2<f64>> = vec![init_cov; k];
    let mut weights = vec![1.0 / k as f64; k];

    let mut resp = Array2::zeros((n, k));
    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    let mut clean_step = true;
    for iter in 0..EM_MAX_ITER {
        // E step
        let comps: Vec<PreparedComponent> = (0..k)
            .map(|c| PreparedComponent::new(means.row(c).to_vec(), &covariances[c]))
            .collect::<Result<_>>()?;
        ll = 0.0;
        let mut per_point_ll = vec![0.0; n];
        let mut logs = vec![0.0; k];
        let mut row = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        for i in 0..n {
            for (j, v) in points.row(i).iter().enumerate() {
                row[j] = *v;
            }
            for c in 0..k {
                logs[c] = weights[c].ln() + comps[c].log_density(&row, &mut scratch);
            }
            let total = log_sum_exp(&logs);
            per_point_ll[i] = total;
            ll += total;
            for c in 0..k {
                resp[(i, c)] = (logs[c] - total).exp();
            }
        }
        // EM monotonicity holds whenever no covariance clipping or
        // component rescue interfered with the previous M step
        if clean_step && iter > 0 {
            assert!(
                ll >= prev_ll - 1e-8 * (1.0 + prev_ll.abs()),
                "EM log-likelihood decreased: {prev_ll} -> {ll}"
            );
        }
        let converged = (ll - prev_ll).abs() <= EM_TOL;
        prev_ll = ll;
        if converged {
            break;
        }

        // M step
        clean_step = true;
        for c in 0..k {
            let nk: f64 = (0..n).map(|i| resp[(i, c)]).sum();
            if nk < 1e-6 {
                // empty-cluster rescue: restart the component at the
                // point the current model explains worst
                let worst = (0..n)
                    .min_by(|&a, &b| per_point_ll[a].partial_cmp(&per_point_ll[b]).unwrap())
                    .unwrap();
                for j in 0..d {
                    means[(c, j)] = points[(worst, j)];
                }
                covariances[c] = global_cov.clone();
                clip_to_floor(&mut covariances[c], floor.max(1e-12));
                weights[c] = 1.0 / n as f64;
                clean_step = false;
                continue;
            }
            weights[c] = nk / n as f64;
            for j in 0..d {
                let mut m = 0.0;
                for i in 0..n {
                    m += resp[(i, c)] * points[(i, j)];
                }
                means[(c, j)] = m / nk;
            }
            let mut cov = Array2::zeros((d, d));
            for i in 0..n {
                let r = resp[(i, c)];
                if r == 0.0 {
                    continue;
                }
                for a in 0..d {
                    let da = points[(i, a)] - means[(c, a)];
                    for b in a..d {
                        cov[(a, b)] += r * da * (points[(i, b)] - means[(c, b)]);
                    }
                }
            }
            for a in 0..d {
                for b in a..d {
                    cov[(a, b)] /= nk;
                    cov[(b, a)] = cov[(a, b)];
                }
            }
            if clip_to_floor(&mut cov, floor) {
                clean_step = false;
            }
            covariances[c] = cov;
        }
        let total_w: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total_w;
        }
    }

    let n_params = (k - 1) + k * d + k * d * (d + 1) / 2;
    let bic = 2.0 * ll - n_params as f64 * (n as f64).ln();
    Ok(GmmModel {
        weights,
        means,
        covariances,
        loglik: ll,
        n_params,
        bic,
    })
}

/// Fit mixtures for K = 1..K_max (capped at the sample size) and return the
/// BIC-argmax K together with every fitted model; BIC ties resolve toward
/// the smaller K.
pub fn gmm_select_k(
    points: ArrayView2<'_, f64>,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<(usize, Vec<GmmModel>)> {
    if k_max == 0 {
        return Err(FdError::InvalidParameter("K_max must be at least 1".into()));
    }
    let cap = k_max.min(points.nrows());
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let mut models = Vec::with_capacity(cap);
    for _k in 1..=cap {
        let sub_seed: u64 = master.random();
        models.push(gmm_fit(points, _k, sub_seed, restarts)?);
    }
    let mut best_k = 1;
    for (idx, model) in models.iter().enumerate() {
        if model.bic > models[best_k - 1].bic {
            best_k = idx + 1;
        }
    }
    Ok((best_k, models))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_blob(n: usize, center: &[f64], sd: f64, seed: u64) -> Array2<f64> {
        let d = center.len();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |(_, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            center[j] + sd * z
        })
    }

    fn two_blobs(n: usize, sep: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let half = n / 2;
        let a = gaussian_blob(half, &[sep / 2.0, 0.0], 1.0, seed);
        let b = gaussian_blob(n - half, &[-sep / 2.0, 0.0], 1.0, seed.wrapping_add(1));
        let mut out = Array2::zeros((n, 2));
        let mut labels = vec![0usize; n];
        for i in 0..half {
            out.row_mut(i).assign(&a.row(i));
        }
        for i in half..n {
            out.row_mut(i).assign(&b.row(i - half));
            labels[i] = 1;
        }
        (out, labels)
    }

    #[test]
    fn single_component_closed_form() {
        let pts = gaussian_blob(200, &[1.0, -2.0], 1.5, 3);
        let model = gmm_fit(pts.view(), 1, 0, 1).unwrap();
        let (mean, cov) = sample_covariance(pts.view());
        for j in 0..2 {
            assert_abs_diff_eq!(model.means[(0, j)], mean[j], epsilon = 1e-10);
        }
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(model.covariances[0][(a, b)], cov[(a, b)], epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(model.weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_spherical_clusters_recovered() {
        let (pts, _) = two_blobs(500, 10.0, 7);
        let model = gmm_fit(pts.view(), 2, 11, 3).unwrap();
        let mut centers: Vec<Vec<f64>> = (0..2).map(|c| model.means.row(c).to_vec()).collect();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((centers[0][0] + 5.0).abs() < 0.2, "{centers:?}");
        assert!((centers[1][0] - 5.0).abs() < 0.2, "{centers:?}");
        for w in &model.weights {
            assert!((w - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn duplicated_data_doubles_loglik_keeps_parameters() {
        // likelihood-identity oracle at the K = 1 fixed point
        let pts = gaussian_blob(150, &[0.5, 1.5], 0.8, 21);
        let doubled = ndarray::concatenate![ndarray::Axis(0), pts.clone(), pts.clone()];
        let single = gmm_fit(pts.view(), 1, 5, 1).unwrap();
        let twice = gmm_fit(doubled.view(), 1, 5, 1).unwrap();
        assert_abs_diff_eq!(2.0 * single.loglik, twice.loglik, epsilon = 1e-8);
        for j in 0..2 {
            assert_abs_diff_eq!(single.means[(0, j)], twice.means[(0, j)], epsilon = 1e-8);
        }
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(
                    single.covariances[0][(a, b)],
                    twice.covariances[0][(a, b)],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn selection_prefers_one_component_on_single_gaussian() {
        let pts = gaussian_blob(500, &[0.0, 0.0], 1.0, 13);
        let (khat, models) = gmm_select_k(pts.view(), 5, 17, 2).unwrap();
        assert_eq!(models.len(), 5);
        assert_eq!(khat, 1);
    }

    #[test]
    fn selection_finds_two_separated_clusters() {
        let (pts, _) = two_blobs(500, 10.0, 29);
        let (khat, _) = gmm_select_k(pts.view(), 5, 31, 2).unwrap();
        assert_eq!(khat, 2);
    }

    #[test]
    fn single_point_single_component() {
        let pts = Array2::from_shape_vec((1, 2), vec![1.0, 2.0]).unwrap();
        let (khat, models) = gmm_select_k(pts.view(), 1, 0, 1).unwrap();
        assert_eq!(khat, 1);
        assert_eq!(models.len(), 1);
    }

    #[test]
    fn errors_on_too_few_points_or_zero_variance() {
        let pts = Array2::from_shape_vec((2, 1), vec![1.0, 2.0]).unwrap();
        assert!(gmm_fit(pts.view(), 3, 0, 1).is_err());
        let constant = Array2::from_elem((10, 2), 4.2);
        assert!(gmm_fit(constant.view(), 2, 0, 1).is_err());
    }

    #[test]
    fn posterior_is_one_for_single_component() {
        let pts = gaussian_blob(50, &[0.0], 1.0, 2);
        let model = gmm_fit(pts.view(), 1, 0, 1).unwrap();
        let resp = model.posterior(pts.view()).unwrap();
        assert!(resp.iter().all(|r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn posterior_concentrates_on_the_near_component() {
        // density-ratio oracle: a point at one center, far from the other
        let model = GmmModel {
            weights: vec![0.5, 0.5],
            means: Array2::from_shape_vec((2, 2), vec![0.0, 0.0, 10.0, 0.0]).unwrap(),
            covariances: vec![Array2::eye(2), Array2::eye(2)],
            loglik: 0.0,
            n_params: 0,
            bic: 0.0,
        };
        let pts = Array2::from_shape_vec((1, 2), vec![0.0, 0.0]).unwrap();
        let resp = model.posterior(pts.view()).unwrap();
        assert!(resp[(0, 0)] >= 0.999);
    }

    #[test]
    fn bic_penalizes_useless_parameters() {
        let pts = gaussian_blob(300, &[0.0, 0.0], 1.0, 41);
        let m1 = gmm_fit(pts.view(), 1, 1, 2).unwrap();
        let m2 = gmm_fit(pts.view(), 2, 1, 2).unwrap();
        // K=2 barely improves loglik on one Gaussian, so its BIC is lower
        assert!(m2.bic < m1.bic);
    }

    #[test]
    fn identical_seed_identical_model() {
        let (pts, _) = two_blobs(120, 6.0, 51);
        let a = gmm_fit(pts.view(), 2, 9, 3).unwrap();
        let b = gmm_fit(pts.view(), 2, 9, 3).unwrap();
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
        assert_eq!(a.bic.to_bits(), b.bic.to_bits());
        for (x, y) in a.means.iter().zip(b.means.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    proptest! {
        #[test]
        fn posterior_rows_sum_to_one(seed in 0u64..1000, k in 1usize..4) {
            let (pts, _) = two_blobs(60, 4.0, seed);
            let model = gmm_fit(pts.view(), k, seed, 2).unwrap();
            let resp = model.posterior(pts.view()).unwrap();
            for i in 0..resp.nrows() {
                let s: f64 = resp.row(i).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }
}
