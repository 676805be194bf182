//! Tensor power algorithm for image-valued functional data.
//!
//! Finds a rank-J Candecomp/Parafac representation of the centered data
//! tensor X in R^(N x Sx x Sy): X ~ sum_j lambda_j u_j (x) v_j (x) w_j with
//! unit-norm factors. Components come out one at a time by alternating
//! power iteration with optional second-difference roughness smoothing of
//! the axis vectors (penalty strength picked by GCV on a log grid each
//! iteration), followed by rank-one deflation. The j-th eigenimage is
//! v_j (x) w_j, and the training score vector is lambda_j u_j.

use ndarray::{Array2, Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DenseFD, Grid1D};
use crate::error::{FdError, Result};

#[derive(Debug, Clone)]
pub struct FcptpaConfig {
    pub n_components: usize,
    /// Smoothing-strength search range for the first axis; (0, 0) disables
    /// smoothing on that axis.
    pub alpha_v: (f64, f64),
    pub alpha_w: (f64, f64),
    pub max_iter: usize,
    /// Convergence threshold on the relative change of lambda.
    pub tol: f64,
    /// Number of log-spaced GCV candidates.
    pub n_alpha: usize,
    pub seed: u64,
}

impl Default for FcptpaConfig {
    fn default() -> Self {
        FcptpaConfig {
            n_components: 1,
            alpha_v: (1e-4, 1e4),
            alpha_w: (1e-4, 1e4),
            max_iter: 500,
            tol: 1e-8,
            n_alpha: 10,
            seed: 0,
        }
    }
}

/// Fitted rank-J tensor decomposition of an image sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FcptpaModel {
    pub grid_x: Grid1D,
    pub grid_y: Grid1D,
    /// Pointwise mean image removed before fitting.
    pub mean: Array2<f64>,
    /// Component weights lambda_j, ordered by fit sequence.
    pub weights: Vec<f64>,
    /// `(J, N)` observation vectors, unit Euclidean norm.
    pub u: Array2<f64>,
    /// `(J, Sx)` first-axis vectors, unit Euclidean norm.
    pub v: Array2<f64>,
    /// `(J, Sy)` second-axis vectors, unit Euclidean norm.
    pub w: Array2<f64>,
    /// Smoothing strengths selected at convergence, per component.
    pub alpha_v: Vec<f64>,
    pub alpha_w: Vec<f64>,
    /// Components where the deflated tensor had (numerically) vanished;
    /// their weight is zero and the factors are arbitrary unit vectors.
    pub degenerate: Vec<bool>,
}

impl FcptpaModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// The j-th eigenimage v_j (x) w_j as an `(Sx, Sy)` matrix.
    pub fn eigenimage(&self, j: usize) -> Array2<f64> {
        let (sx, sy) = (self.grid_x.len(), self.grid_y.len());
        Array2::from_shape_fn((sx, sy), |(a, b)| self.v[(j, a)] * self.w[(j, b)])
    }

    /// Training scores `(N, J)`: column j is lambda_j u_j.
    pub fn training_scores(&self) -> Array2<f64> {
        let n = self.u.ncols();
        let j = self.n_components();
        Array2::from_shape_fn((n, j), |(i, k)| self.weights[k] * self.u[(k, i)])
    }

    /// Scores of new images: Frobenius projections of the centered data
    /// onto each eigenimage.
    pub fn transform(&self, fd: &DenseFD) -> Result<Array2<f64>> {
        let tensor = image_tensor(fd)?;
        let (n, sx, sy) = tensor.dim();
        if sx != self.grid_x.len() || sy != self.grid_y.len() {
            return Err(FdError::ShapeMismatch(format!(
                "images are {sx}x{sy}, model expects {}x{}",
                self.grid_x.len(),
                self.grid_y.len()
            )));
        }
        let j = self.n_components();
        let mut scores = Array2::zeros((n, j));
        for i in 0..n {
            for k in 0..j {
                let mut acc = 0.0;
                for a in 0..sx {
                    for b in 0..sy {
                        acc += (tensor[(i, a, b)] - self.mean[(a, b)])
                            * self.v[(k, a)]
                            * self.w[(k, b)];
                    }
                }
                scores[(i, k)] = acc;
            }
        }
        Ok(scores)
    }
}

fn image_tensor(fd: &DenseFD) -> Result<Array3<f64>> {
    if fd.n_dim() != 2 {
        return Err(FdError::InvalidParameter(
            "tensor decomposition expects a 2-D domain".into(),
        ));
    }
    if fd.has_missing() {
        return Err(FdError::MissingValues(
            "tensor decomposition requires complete images".into(),
        ));
    }
    fd.values()
        .view()
        .into_dimensionality::<ndarray::Ix3>()
        .map(|v| v.to_owned())
        .map_err(|e| FdError::ShapeMismatch(e.to_string()))
}

/// Second-difference roughness matrix D2^T D2 for a vector of length `s`.
fn roughness(s: usize) -> Array2<f64> {
    let mut omega = Array2::zeros((s, s));
    if s < 3 {
        return omega;
    }
    for r in 0..s - 2 {
        let row = [(r, 1.0), (r + 1, -2.0), (r + 2, 1.0)];
        for &(i, ci) in &row {
            for &(j, cj) in &row {
                omega[(i, j)] += ci * cj;
            }
        }
    }
    omega
}

/// Eigendecomposition of a roughness matrix, reused across iterations.
struct SmoothOperator {
    /// Eigenvector columns.
    q: Array2<f64>,
    delta: Vec<f64>,
    grid: Vec<f64>,
}

impl SmoothOperator {
    fn new(s: usize, range: (f64, f64), n_alpha: usize) -> Self {
        let omega = roughness(s);
        let mat = nalgebra::DMatrix::from_fn(s, s, |i, j| omega[(i, j)]);
        let eig = nalgebra::SymmetricEigen::new(mat);
        let q = Array2::from_shape_fn((s, s), |(i, j)| eig.eigenvectors[(i, j)]);
        let delta: Vec<f64> = eig.eigenvalues.iter().map(|d| d.max(0.0)).collect();
        let grid = if range.0 == 0.0 && range.1 == 0.0 {
            vec![0.0]
        } else {
            let lo = range.0.max(1e-8);
            let hi = range.1.max(lo);
            (0..n_alpha.max(1))
                .map(|i| lo * (hi / lo).powf(i as f64 / (n_alpha.max(2) - 1) as f64))
                .collect()
        };
        SmoothOperator { q, delta, grid }
    }

    /// Apply (I + alpha Omega)^(-1) and pick alpha by GCV; returns the
    /// smoothed vector and the chosen alpha.
    fn smooth(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let s = z.len();
        let proj: Vec<f64> = (0..s)
            .map(|k| (0..s).map(|i| self.q[(i, k)] * z[i]).sum())
            .collect();
        let mut best_alpha = self.grid[0];
        let mut best_gcv = f64::INFINITY;
        for &alpha in &self.grid {
            if alpha == 0.0 {
                best_alpha = 0.0;
                break;
            }
            let mut rss = 0.0;
            let mut tr = 0.0;
            for k in 0..s {
                let shrink = alpha * self.delta[k] / (1.0 + alpha * self.delta[k]);
                rss += (shrink * proj[k]).powi(2);
                tr += shrink;
            }
            let gcv = if tr > 0.0 {
                s as f64 * rss / (tr * tr)
            } else {
                f64::INFINITY
            };
            if gcv < best_gcv {
                best_gcv = gcv;
                best_alpha = alpha;
            }
        }
        if best_alpha == 0.0 {
            return (z.to_vec(), 0.0);
        }
        let mut out = vec![0.0; s];
        for k in 0..s {
            let f = 1.0 / (1.0 + best_alpha * self.delta[k]);
            let c = f * proj[k];
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.q[(i, k)] * c;
            }
        }
        (out, best_alpha)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fit a rank-`config.n_components` decomposition of a 2-D dense sample.
pub fn fcptpa_fit(fd: &DenseFD, config: &FcptpaConfig) -> Result<FcptpaModel> {
    let tensor = image_tensor(fd)?;
    let (n, sx, sy) = tensor.dim();
    if fd.n_obs() < 2 {
        return Err(FdError::InvalidParameter(
            "tensor decomposition needs at least two observations".into(),
        ));
    }
    let j_max = config.n_components;
    if j_max == 0 || j_max > n.min(sx).min(sy) {
        return Err(FdError::InvalidParameter(format!(
            "rank {j_max} is outside 1..={}",
            n.min(sx).min(sy)
        )));
    }

    // center by the pointwise mean image
    let mean = tensor.mean_axis(Axis(0)).expect("n >= 1");
    let mut x = tensor;
    for i in 0..n {
        x.index_axis_mut(Axis(0), i).zip_mut_with(&mean, |c, m| *c -= m);
    }
    let total_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();

    let smoother_v = SmoothOperator::new(sx, config.alpha_v, config.n_alpha);
    let smoother_w = SmoothOperator::new(sy, config.alpha_w, config.n_alpha);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let mut weights = Vec::with_capacity(j_max);
    let mut us = Array2::zeros((j_max, n));
    let mut vs = Array2::zeros((j_max, sx));
    let mut ws = Array2::zeros((j_max, sy));
    let mut alphas_v = Vec::with_capacity(j_max);
    let mut alphas_w = Vec::with_capacity(j_max);
    let mut degenerate = Vec::with_capacity(j_max);

    for comp in 0..j_max {
        let mut u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut v: Vec<f64> = (0..sx).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut w: Vec<f64> = (0..sy).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut u);
        normalize(&mut v);
        normalize(&mut w);

        let residual_norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if residual_norm <= 1e-12 * (1.0 + total_norm) {
            // nothing left: record a zero component with arbitrary unit factors
            weights.push(0.0);
            set_row(&mut us, comp, &u);
            set_row(&mut vs, comp, &v);
            set_row(&mut ws, comp, &w);
            alphas_v.push(0.0);
            alphas_w.push(0.0);
            degenerate.push(true);
            continue;
        }

        let mut lambda = 0.0;
        let mut alpha_v = 0.0;
        let mut alpha_w = 0.0;
        let mut converged = false;
        for _iter in 0..config.max_iter {
            // u <- X x_(v,w), normalized (no smoothing on the sample mode)
            for (i, ui) in u.iter_mut().enumerate() {
                let mut acc = 0.0;
                for a in 0..sx {
                    for b in 0..sy {
                        acc += x[(i, a, b)] * v[a] * w[b];
                    }
                }
                *ui = acc;
            }
            if norm(&u) == 0.0 {
                break;
            }
            normalize(&mut u);

            // v <- (I + alpha_v Omega_v)^(-1) X x_(u,w)
            let mut v_raw = vec![0.0; sx];
            for (a, vr) in v_raw.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..n {
                    for b in 0..sy {
                        acc += x[(i, a, b)] * u[i] * w[b];
                    }
                }
                *vr = acc;
            }
            let (mut v_new, av) = smoother_v.smooth(&v_raw);
            if norm(&v_new) == 0.0 {
                break;
            }
            normalize(&mut v_new);
            v = v_new;
            alpha_v = av;

            // w <- (I + alpha_w Omega_w)^(-1) X x_(u,v)
            let mut w_raw = vec![0.0; sy];
            for (b, wr) in w_raw.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..n {
                    for a in 0..sx {
                        acc += x[(i, a, b)] * u[i] * v[a];
                    }
                }
                *wr = acc;
            }
            let (mut w_new, aw) = smoother_w.smooth(&w_raw);
            if norm(&w_new) == 0.0 {
                break;
            }
            normalize(&mut w_new);
            w = w_new;
            alpha_w = aw;

            let mut lambda_new = 0.0;
            for i in 0..n {
                for a in 0..sx {
                    for b in 0..sy {
                        lambda_new += x[(i, a, b)] * u[i] * v[a] * w[b];
                    }
                }
            }
            let change = (lambda_new - lambda).abs() / lambda.abs().max(1e-12);
            lambda = lambda_new;
            if change <= config.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(FdError::NoConvergence(format!(
                "tensor component {comp} did not converge within {} iterations",
                config.max_iter
            )));
        }

        // deflate
        for i in 0..n {
            for a in 0..sx {
                for b in 0..sy {
                    x[(i, a, b)] -= lambda * u[i] * v[a] * w[b];
                }
            }
        }
        weights.push(lambda);
        set_row(&mut us, comp, &u);
        set_row(&mut vs, comp, &v);
        set_row(&mut ws, comp, &w);
        alphas_v.push(alpha_v);
        alphas_w.push(alpha_w);
        degenerate.push(false);
    }

    Ok(FcptpaModel {
        grid_x: fd.grid(0).clone(),
        grid_y: fd.grid(1).clone(),
        mean,
        weights,
        u: us,
        v: vs,
        w: ws,
        alpha_v: alphas_v,
        alpha_w: alphas_w,
        degenerate,
    })
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn set_row(mat: &mut Array2<f64>, row: usize, values: &[f64]) {
    for (j, v) in values.iter().enumerate() {
        mat[(row, j)] = *v;
    }
}
