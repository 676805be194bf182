//! Brownian path simulation: standard, fractional and geometric.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DenseFD, Grid1D};
use crate::error::{FdError, Result};
use crate::sim::SimOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrownianKind {
    Standard,
    Fractional,
    Geometric,
}

impl BrownianKind {
    pub fn parse(name: &str) -> Result<BrownianKind> {
        match name {
            "standard" => Ok(BrownianKind::Standard),
            "fractional" => Ok(BrownianKind::Fractional),
            "geometric" => Ok(BrownianKind::Geometric),
            other => Err(FdError::InvalidParameter(format!(
                "unknown brownian kind '{other}'"
            ))),
        }
    }
}

/// Parameters of the three Brownian variants; unused fields are ignored.
#[derive(Debug, Clone, Copy)]
pub struct BrownianParams {
    /// Hurst exponent of fractional Brownian motion, in (0, 1).
    pub hurst: f64,
    pub drift: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl Default for BrownianParams {
    fn default() -> Self {
        BrownianParams {
            hurst: 0.5,
            drift: 0.0,
            sigma: 1.0,
            x0: 1.0,
        }
    }
}

/// Simulate `n_obs` paths on `grid`.
///
/// Standard and fractional motions require a grid starting at 0 and are
/// pinned there; the geometric variant starts at `x0` on the first grid
/// point. Fractional paths are drawn by Cholesky factorization of the exact
/// covariance 0.5 (s^2H + t^2H - |t - s|^2H). Draws are consumed path by
/// path from a ChaCha20 stream seeded with `seed`.
pub fn simulate_brownian(
    kind: BrownianKind,
    n_obs: usize,
    grid: &Grid1D,
    params: &BrownianParams,
    seed: u64,
) -> Result<SimOutput> {
    if n_obs == 0 {
        return Err(FdError::EmptyData("need at least one path".into()));
    }
    let t = grid.points();
    let m = t.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let values = match kind {
        BrownianKind::Standard => {
            require_zero_start(t)?;
            standard_paths(t, n_obs, &mut rng)
        }
        BrownianKind::Fractional => {
            require_zero_start(t)?;
            if !(params.hurst > 0.0 && params.hurst < 1.0) {
                return Err(FdError::InvalidParameter(format!(
                    "hurst must lie in (0, 1), got {}",
                    params.hurst
                )));
            }
            fractional_paths(t, n_obs, params.hurst, &mut rng)?
        }
        BrownianKind::Geometric => {
            let w = relative_standard_paths(t, n_obs, &mut rng);
            let mut values = Array2::zeros((n_obs, m));
            let trend = params.drift - 0.5 * params.sigma * params.sigma;
            for n in 0..n_obs {
                for k in 0..m {
                    values[(n, k)] =
                        params.x0 * (trend * (t[k] - t[0]) + params.sigma * w[(n, k)]).exp();
                }
            }
            values
        }
    };

    let data = DenseFD::from_matrix(grid.clone(), values)?;
    Ok(SimOutput::new(data, None, None))
}

fn require_zero_start(t: &[f64]) -> Result<()> {
    if t[0] != 0.0 {
        return Err(FdError::InvalidParameter(
            "standard/fractional grids must start at 0".into(),
        ));
    }
    Ok(())
}

fn standard_paths(t: &[f64], n_obs: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let m = t.len();
    let mut values = Array2::zeros((n_obs, m));
    for n in 0..n_obs {
        let mut w = 0.0;
        for k in 1..m {
            let z: f64 = StandardNormal.sample(rng);
            w += z * (t[k] - t[k - 1]).sqrt();
            values[(n, k)] = w;
        }
    }
    values
}

/// Standard Brownian increments accumulated from the first grid point.
fn relative_standard_paths(t: &[f64], n_obs: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let shifted: Vec<f64> = t.iter().map(|x| x - t[0]).collect();
    standard_paths(&shifted, n_obs, rng)
}

fn fractional_paths(
    t: &[f64],
    n_obs: usize,
    hurst: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Array2<f64>> {
    let m = t.len();
    let mut values = Array2::zeros((n_obs, m));
    if m == 1 {
        return Ok(values); // pinned at the origin
    }
    let inner = &t[1..];
    let k = inner.len();
    let h2 = 2.0 * hurst;
    let cov = DMatrix::from_fn(k, k, |i, j| {
        let (s, u) = (inner[i], inner[j]);
        0.5 * (s.powf(h2) + u.powf(h2) - (s - u).abs().powf(h2))
    });
    let chol = nalgebra::Cholesky::new(cov).ok_or_else(|| {
        FdError::Numerical("fractional covariance is not positive definite (degenerate grid)".into())
    })?;
    let l = chol.l();
    let mut z = vec![0.0; k];
    for n in 0..n_obs {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(rng);
        }
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            values[(n, i + 1)] = acc;
        }
    }
    Ok(values)
}
