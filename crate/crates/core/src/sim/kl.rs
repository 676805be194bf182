//! Truncated Karhunen-Loeve simulation, optionally with cluster structure.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DenseFD;
use crate::error::{FdError, Result};
use crate::sim::basis::{Basis, TensorBasis2D};
use crate::sim::decay::EigenDecay;
use crate::sim::{SimBasis, SimOutput};

/// Mixture specification for clustered simulation: K clusters with mixing
/// probabilities, per-cluster mean coefficients and per-cluster score
/// standard deviations, both as `(J, K)` matrices (rows index basis
/// functions, columns clusters).
#[derive(Debug, Clone)]
pub struct ClusterSpec {
    pub mixing: Vec<f64>,
    pub centers: Array2<f64>,
    pub cluster_std: Array2<f64>,
}

impl ClusterSpec {
    pub fn new(mixing: Vec<f64>, centers: Array2<f64>, cluster_std: Array2<f64>) -> Result<Self> {
        let k = mixing.len();
        if k == 0 {
            return Err(FdError::EmptyData("no clusters".into()));
        }
        if mixing.iter().any(|p| !(*p > 0.0)) {
            return Err(FdError::InvalidParameter(
                "mixing probabilities must be positive".into(),
            ));
        }
        let total: f64 = mixing.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(FdError::InvalidParameter(format!(
                "mixing probabilities sum to {total}, expected 1"
            )));
        }
        if centers.ncols() != k || cluster_std.ncols() != k || centers.nrows() != cluster_std.nrows()
        {
            return Err(FdError::ShapeMismatch(format!(
                "centers {:?} and cluster_std {:?} must both be (J, {k})",
                centers.dim(),
                cluster_std.dim()
            )));
        }
        if cluster_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(FdError::InvalidParameter(
                "cluster standard deviations must be non-negative".into(),
            ));
        }
        Ok(ClusterSpec {
            mixing,
            centers,
            cluster_std,
        })
    }

    pub fn with_uniform_mixing(centers: Array2<f64>, cluster_std: Array2<f64>) -> Result<Self> {
        let k = centers.ncols();
        Self::new(vec![1.0 / k as f64; k], centers, cluster_std)
    }

    /// The `cluster_std = "<decay>"` shorthand: zero centers and the decay
    /// values replicated across `k` clusters as standard deviations.
    pub fn from_decay_shorthand(k: usize, decay: &EigenDecay) -> Result<Self> {
        let j = decay.len();
        let centers = Array2::zeros((j, k));
        let std = Array2::from_shape_fn((j, k), |(row, _)| decay.values()[row]);
        Self::with_uniform_mixing(centers, std)
    }

    pub fn n_clusters(&self) -> usize {
        self.mixing.len()
    }

    pub fn n_functions(&self) -> usize {
        self.centers.nrows()
    }
}

fn draw_label(rng: &mut ChaCha20Rng, mixing: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in mixing.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    mixing.len() - 1
}

/// Coefficient matrix `(N, J)` plus labels. Draw order per observation:
/// label first (clustered case), then the J scores.
fn draw_coefficients(
    n_obs: usize,
    decay: Option<&EigenDecay>,
    clusters: Option<&ClusterSpec>,
    seed: u64,
) -> (Array2<f64>, Option<Vec<usize>>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match (decay, clusters) {
        (Some(decay), None) => {
            let j = decay.len();
            let sd: Vec<f64> = decay.values().iter().map(|l| l.sqrt()).collect();
            let mut coeffs = Array2::zeros((n_obs, j));
            for n in 0..n_obs {
                for jj in 0..j {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    coeffs[(n, jj)] = sd[jj] * z;
                }
            }
            (coeffs, None)
        }
        (None, Some(spec)) => {
            let j = spec.n_functions();
            let mut coeffs = Array2::zeros((n_obs, j));
            let mut labels = Vec::with_capacity(n_obs);
            for n in 0..n_obs {
                let z = draw_label(&mut rng, &spec.mixing);
                labels.push(z);
                for jj in 0..j {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    coeffs[(n, jj)] = spec.centers[(jj, z)] + spec.cluster_std[(jj, z)] * e;
                }
            }
            (coeffs, Some(labels))
        }
        _ => unreachable!("exactly one coefficient source"),
    }
}

/// Simulate `n_obs` curves X_n = sum_j xi_jn phi_j with xi_j ~ N(0, lambda_j).
pub fn simulate_kl(basis: &Basis, decay: &EigenDecay, n_obs: usize, seed: u64) -> Result<SimOutput> {
    if n_obs == 0 {
        return Err(FdError::EmptyData("need at least one observation".into()));
    }
    if decay.len() != basis.n_functions() {
        return Err(FdError::ShapeMismatch(format!(
            "{} eigenvalues for {} basis functions",
            decay.len(),
            basis.n_functions()
        )));
    }
    let (coeffs, _) = draw_coefficients(n_obs, Some(decay), None, seed);
    let values = coeffs.dot(&basis.matrix);
    let data = DenseFD::from_matrix(basis.grid.clone(), values)?;
    Ok(SimOutput::new(data, None, Some(SimBasis::OneD(basis.clone()))))
}

/// Simulate from the functional mixture model: X_n = mu_{Z_n} + sum_j xi_jn phi_j
/// with xi_j | Z = k ~ N(0, sigma_kj^2) and mu_k = sum_j centers[j, k] phi_j.
pub fn simulate_kl_clusters(
    basis: &Basis,
    spec: &ClusterSpec,
    n_obs: usize,
    seed: u64,
) -> Result<SimOutput> {
    if n_obs == 0 {
        return Err(FdError::EmptyData("need at least one observation".into()));
    }
    if spec.n_functions() != basis.n_functions() {
        return Err(FdError::ShapeMismatch(format!(
            "cluster spec has {} rows for {} basis functions",
            spec.n_functions(),
            basis.n_functions()
        )));
    }
    let (coeffs, labels) = draw_coefficients(n_obs, None, Some(spec), seed);
    let values = coeffs.dot(&basis.matrix);
    let data = DenseFD::from_matrix(basis.grid.clone(), values)?;
    Ok(SimOutput::new(data, labels, Some(SimBasis::OneD(basis.clone()))))
}

/// 2-D Karhunen-Loeve simulation on a tensor-product basis.
pub fn simulate_kl_2d(
    basis: &TensorBasis2D,
    decay: &EigenDecay,
    n_obs: usize,
    seed: u64,
) -> Result<SimOutput> {
    if n_obs == 0 {
        return Err(FdError::EmptyData("need at least one observation".into()));
    }
    let j = basis.n_functions();
    if decay.len() != j {
        return Err(FdError::ShapeMismatch(format!(
            "{} eigenvalues for {} tensor functions",
            decay.len(),
            j
        )));
    }
    let (coeffs, _) = draw_coefficients(n_obs, Some(decay), None, seed);
    let surfaces = basis.surfaces();
    let (mx, my) = (basis.x.grid.len(), basis.y.grid.len());
    let mut values = Array3::zeros((n_obs, mx, my));
    for n in 0..n_obs {
        for k in 0..j {
            let c = coeffs[(n, k)];
            let surf = surfaces.index_axis(ndarray::Axis(0), k);
            values
                .index_axis_mut(ndarray::Axis(0), n)
                .zip_mut_with(&surf, |v, s| *v += c * s);
        }
    }
    let mut argvals = indexmap::IndexMap::new();
    argvals.insert("input_dim_0".to_string(), basis.x.grid.clone());
    argvals.insert("input_dim_1".to_string(), basis.y.grid.clone());
    let data = DenseFD::new(argvals, values.into_dyn())?;
    Ok(SimOutput::new(data, None, Some(SimBasis::TwoD(basis.clone()))))
}

/// Evaluate the grid covariance sum_j lambda_j phi_j phi_j^T of a 1-D basis.
pub fn kl_covariance_matrix(basis: &Basis, decay: &EigenDecay) -> Array2<f64> {
    let m = basis.grid.len();
    let mut cov = Array2::zeros((m, m));
    for (j, &l) in decay.values().iter().enumerate() {
        for a in 0..m {
            for b in 0..m {
                cov[(a, b)] += l * basis.matrix[(j, a)] * basis.matrix[(j, b)];
            }
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid1D;
    use crate::numeric::{linspace, trapezoid_weights, weighted_dot};
    use crate::sim::basis::{make_basis, BasisName};
    use crate::sim::decay::{decay_values, DecayKind};

    fn wiener_basis(j: usize) -> Basis {
        let grid = Grid1D::new(linspace(0.0, 1.0, 101)).unwrap();
        make_basis(BasisName::Wiener, j, &grid).unwrap()
    }

    #[test]
    fn paper_style_two_cluster_listing() {
        let basis = wiener_basis(3);
        let centers =
            Array2::from_shape_vec((3, 2), vec![2.0, -1.0, -0.5, 1.5, 0.0, 0.0]).unwrap();
        let std = Array2::from_shape_vec((3, 2), vec![2.0, 1.0, 0.5, 1.0, 1.0, 1.0]).unwrap();
        let spec = ClusterSpec::with_uniform_mixing(centers, std).unwrap();
        let out = simulate_kl_clusters(&basis, &spec, 10, 7).unwrap();
        assert_eq!(out.data.n_obs(), 10);
        let labels = out.labels.as_ref().unwrap();
        assert_eq!(labels.len(), 10);
        assert!(labels.iter().all(|&z| z < 2));
    }

    #[test]
    fn degenerate_cluster_gives_constant_curves() {
        let basis = wiener_basis(2);
        let spec = ClusterSpec::with_uniform_mixing(
            Array2::zeros((2, 1)),
            Array2::zeros((2, 1)),
        )
        .unwrap();
        let out = simulate_kl_clusters(&basis, &spec, 5, 0).unwrap();
        assert!(out.data.obs_matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empirical_score_variances_match_decay() {
        // Monte-Carlo oracle: Var <X, phi_j> -> lambda_j
        let basis = wiener_basis(4);
        let decay = decay_values(DecayKind::Exponential, 4).unwrap();
        let out = simulate_kl(&basis, &decay, 20_000, 123).unwrap();
        let w = trapezoid_weights(basis.grid.points());
        for j in 0..4 {
            let phi: Vec<f64> = basis.matrix.row(j).to_vec();
            let scores: Vec<f64> = (0..20_000)
                .map(|n| weighted_dot(&w, &out.data.obs_matrix().row(n).to_vec(), &phi))
                .collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                / scores.len() as f64;
            let lambda = decay.values()[j];
            assert!(
                (var - lambda).abs() / lambda < 0.05,
                "score {j}: var {var} vs lambda {lambda}"
            );
        }
    }

    #[test]
    fn cluster_frequencies_follow_mixing() {
        let basis = wiener_basis(2);
        let spec = ClusterSpec::new(
            vec![0.3, 0.7],
            Array2::zeros((2, 2)),
            Array2::from_elem((2, 2), 1.0),
        )
        .unwrap();
        let n = 20_000;
        let out = simulate_kl_clusters(&basis, &spec, n, 5).unwrap();
        let labels = out.labels.unwrap();
        let f0 = labels.iter().filter(|&&z| z == 0).count() as f64 / n as f64;
        // 3-sigma multinomial band
        let sigma = (0.3 * 0.7 / n as f64).sqrt();
        assert!((f0 - 0.3).abs() < 3.0 * sigma, "freq {f0}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let basis = wiener_basis(3);
        let decay = decay_values(DecayKind::Linear, 2).unwrap();
        assert!(simulate_kl(&basis, &decay, 5, 0).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let basis = wiener_basis(3);
        let decay = decay_values(DecayKind::Wiener, 3).unwrap();
        let a = simulate_kl(&basis, &decay, 7, 99).unwrap();
        let b = simulate_kl(&basis, &decay, 7, 99).unwrap();
        assert!(a.data.content_eq(&b.data));
    }

    #[test]
    fn two_dimensional_simulation() {
        let grid = Grid1D::new(linspace(0.0, 1.0, 21)).unwrap();
        let bx = make_basis(BasisName::Wiener, 2, &grid).unwrap();
        let by = make_basis(BasisName::Fourier, 2, &grid).unwrap();
        let tb = crate::sim::basis::tensor_basis_2d(bx, by);
        let decay = decay_values(DecayKind::Linear, 4).unwrap();
        let out = simulate_kl_2d(&tb, &decay, 3, 1).unwrap();
        assert_eq!(out.data.n_dim(), 2);
        assert_eq!(out.data.values().shape(), &[3, 21, 21]);
    }
}
