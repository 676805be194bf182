//! Simulation toolbox: orthonormal bases, Karhunen-Loeve sampling, Brownian
//! motions, cluster mixtures, pointwise noise and sparsification.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.
//! The PRNG is ChaCha20 seeded via `seed_from_u64`; draws are consumed in
//! observation-major order (and are documented per generator), so equal
//! seeds give bit-identical output on every platform.

mod basis;
mod brownian;
mod decay;
mod kl;

pub use basis::{make_basis, tensor_basis_2d, Basis, BasisName, TensorBasis2D};
pub use brownian::{simulate_brownian, BrownianKind, BrownianParams};
pub use decay::{decay_values, DecayKind, EigenDecay};
pub use kl::{kl_covariance_matrix, simulate_kl, simulate_kl_2d, simulate_kl_clusters, ClusterSpec};

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::data::{DenseFD, IrregularFD};
use crate::error::{FdError, Result};

/// Basis attached to a simulation run.
#[derive(Debug, Clone)]
pub enum SimBasis {
    OneD(Basis),
    TwoD(TensorBasis2D),
}

/// Result of one simulation run. `noisy_data` and `sparse_data` stay empty
/// until [`SimOutput::add_noise`] / [`SimOutput::sparsify`] fill them; the
/// original `data` is never touched.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub data: DenseFD,
    /// Cluster id per observation for mixture simulations.
    pub labels: Option<Vec<usize>>,
    pub noisy_data: Option<DenseFD>,
    pub sparse_data: Option<IrregularFD>,
    pub basis: Option<SimBasis>,
}

/// Pointwise noise variance: a constant, one value per grid point, or a
/// function of the sampling location (1-D domains).
pub enum VarNoise<'a> {
    Scalar(f64),
    PerPoint(&'a [f64]),
    Func(&'a dyn Fn(f64) -> f64),
}

impl SimOutput {
    pub(crate) fn new(data: DenseFD, labels: Option<Vec<usize>>, basis: Option<SimBasis>) -> Self {
        SimOutput {
            data,
            labels,
            noisy_data: None,
            sparse_data: None,
            basis,
        }
    }

    /// Fill `noisy_data` with Y = X(t) + eps, eps ~ N(0, sigma^2(t)) drawn
    /// independently across observations and points (observation-major,
    /// point-major order).
    pub fn add_noise(&mut self, var_noise: &VarNoise<'_>, seed: u64) -> Result<()> {
        let shape = self.data.values().shape().to_vec();
        let n_cells: usize = shape[1..].iter().product();
        let variances: Vec<f64> = match var_noise {
            VarNoise::Scalar(v) => vec![*v; n_cells],
            VarNoise::PerPoint(v) => {
                if v.len() != n_cells {
                    return Err(FdError::ShapeMismatch(format!(
                        "{} variances for {} grid cells",
                        v.len(),
                        n_cells
                    )));
                }
                v.to_vec()
            }
            VarNoise::Func(f) => {
                if self.data.n_dim() != 1 {
                    return Err(FdError::InvalidParameter(
                        "variance functions apply to 1-D domains only".into(),
                    ));
                }
                self.data.grid(0).points().iter().map(|&t| f(t)).collect()
            }
        };
        if variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(FdError::InvalidParameter(
                "noise variances must be finite and non-negative".into(),
            ));
        }
        let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();

        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut noisy = self.data.values().clone();
        for mut obs in noisy.axis_iter_mut(Axis(0)) {
            for (cell, s) in obs.iter_mut().zip(&sd) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *cell += s * z;
            }
        }
        self.noisy_data = Some(DenseFD::new(self.data.argvals().clone(), noisy)?);
        Ok(())
    }

    /// Fill `sparse_data` by removing a random fraction of each observation's
    /// sampling points: per observation draw q ~ Uniform(p - e, p + e) and
    /// drop floor(q M) uniformly chosen points. Retained points keep their
    /// exact grid locations and values.
    pub fn sparsify(&mut self, percentage: f64, epsilon: f64, seed: u64) -> Result<()> {
        if self.data.n_dim() != 1 {
            return Err(FdError::InvalidParameter(
                "sparsify is undefined on 2-D domains".into(),
            ));
        }
        let (p, e) = (percentage, epsilon);
        if !(0.0..=1.0).contains(&p) || e < 0.0 || p - e < 0.0 || p + e > 1.0 {
            return Err(FdError::InvalidParameter(format!(
                "need 0 <= p - e and p + e <= 1, got p={p}, e={e}"
            )));
        }
        let grid = self.data.grid(0).points();
        let m = grid.len();
        let n = self.data.n_obs();
        let uniform = Uniform::new_inclusive(p - e, p + e)
            .map_err(|err| FdError::InvalidParameter(err.to_string()))?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mat = self.data.obs_matrix();

        let mut curves = Vec::with_capacity(n);
        for i in 0..n {
            let q: f64 = uniform.sample(&mut rng);
            let n_remove = (q * m as f64).floor() as usize;
            if n_remove >= m {
                return Err(FdError::InvalidParameter(format!(
                    "observation {i}: removing {n_remove} of {m} points leaves no data"
                )));
            }
            let mut removed: Vec<usize> =
                rand::seq::index::sample(&mut rng, m, n_remove).into_vec();
            removed.sort_unstable();
            let mut pts = Vec::with_capacity(m - n_remove);
            let mut vals = Vec::with_capacity(m - n_remove);
            let mut r = removed.iter().peekable();
            for j in 0..m {
                if r.peek() == Some(&&j) {
                    r.next();
                    continue;
                }
                pts.push(grid[j]);
                vals.push(mat[(i, j)]);
            }
            curves.push((pts, vals));
        }
        self.sparse_data = Some(IrregularFD::from_curves(self.data.dim_name(0), curves)?);
        Ok(())
    }
}
