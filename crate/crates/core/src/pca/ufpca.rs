//! Univariate FPCA on one-dimensional domains.
//!
//! The covariance surface is eigendecomposed in the quadrature-symmetrized
//! form W^(1/2) C W^(1/2), so the back-transformed eigenfunctions are
//! orthonormal in L2 at grid resolution and the eigenvalues carry the
//! integral scaling.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{is_missing, FunctionalData, Grid1D};
use crate::error::{FdError, Result};
use crate::moments::{estimate_covariance, estimate_mean, quadrature_eigen, MomentOptions};
use crate::numeric::{linear_interp, trapezoid_weights};
use crate::pca::{NComp, ScoreMethod};

#[derive(Debug, Clone)]
pub struct UfpcaOptions {
    pub n_comp: NComp,
    pub moments: MomentOptions,
}

impl Default for UfpcaOptions {
    fn default() -> Self {
        UfpcaOptions {
            n_comp: NComp::Frac(0.99),
            moments: MomentOptions::default(),
        }
    }
}

/// Fitted univariate eigenstructure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UfpcaModel {
    pub grid: Grid1D,
    pub mean: Vec<f64>,
    /// Kept eigenvalues, positive and non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `(J, M)` eigenfunction values, quadrature-orthonormal, sign-fixed so
    /// the largest absolute entry of each row is positive.
    pub eigenfunctions: Array2<f64>,
    pub noise_variance: f64,
    /// Negative covariance eigenvalues dropped before component selection.
    pub n_dropped_negative: usize,
    /// Sum of all positive eigenvalues (the explained-variance denominator).
    pub total_variance: f64,
}

impl UfpcaModel {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Proportion of variance captured by the kept components.
    pub fn explained_variance(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }
}

/// Fit the univariate eigenstructure of a 1-D functional data set.
pub fn ufpca_fit(fd: &FunctionalData, opts: &UfpcaOptions) -> Result<UfpcaModel> {
    if fd.n_obs() < 2 {
        return Err(FdError::InvalidParameter(
            "UFPCA needs at least two observations".into(),
        ));
    }
    let mean_fd = estimate_mean(fd, &opts.moments)?;
    let cov = estimate_covariance(fd, &opts.moments)?;
    let grid = cov.grid_s.clone();
    let (all_vals, all_funcs) = quadrature_eigen(grid.points(), &cov.values);

    let n_dropped_negative = all_vals.iter().filter(|v| **v < 0.0).count();
    let positive: Vec<f64> = all_vals.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Err(FdError::Numerical(
            "covariance has no positive eigenvalue".into(),
        ));
    }
    let keep = opts.n_comp.resolve(&positive)?;
    let total_variance: f64 = positive.iter().sum();

    let m = grid.len();
    let mut eigenfunctions = Array2::zeros((keep, m));
    let w = trapezoid_weights(grid.points());
    for j in 0..keep {
        // renormalize under quadrature to pin the Gram at identity
        let row = all_funcs.row(j);
        let norm2: f64 = (0..m).map(|i| w[i] * row[i] * row[i]).sum();
        let inv = 1.0 / norm2.sqrt();
        for i in 0..m {
            eigenfunctions[(j, i)] = row[i] * inv;
        }
    }

    Ok(UfpcaModel {
        grid,
        mean: mean_fd.obs_matrix().row(0).to_vec(),
        eigenvalues: positive[..keep].to_vec(),
        eigenfunctions,
        noise_variance: cov.noise_variance.unwrap_or(0.0),
        n_dropped_negative,
        total_variance,
    })
}

/// Per-observation points and values (dense rows drop missing cells).
fn observation_pairs(fd: &FunctionalData) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    match fd {
        FunctionalData::Dense(d) => {
            if d.n_dim() != 1 {
                return Err(FdError::InvalidParameter("scores need a 1-D domain".into()));
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
        FunctionalData::Irregular(ir) => Ok((0..ir.n_obs())
            .map(|i| {
                let (p, v) = ir.curve(i);
                (p.to_vec(), v.to_vec())
            })
            .collect()),
    }
}

/// Scores of `fd` under a fitted model, `(N, J)`.
pub fn ufpca_scores(
    model: &UfpcaModel,
    fd: &FunctionalData,
    method: ScoreMethod,
) -> Result<Array2<f64>> {
    let pairs = observation_pairs(fd)?;
    let j = model.n_components();
    let mut scores = Array2::zeros((pairs.len(), j));
    for (n, (pts, vals)) in pairs.iter().enumerate() {
        let row = match method {
            ScoreMethod::NumInt => numint_scores(model, pts, vals)?,
            ScoreMethod::Pace => pace_scores(model, pts, vals)?,
        };
        for (k, s) in row.into_iter().enumerate() {
            scores[(n, k)] = s;
        }
    }
    Ok(scores)
}

fn interp_onto(model_grid: &[f64], values: &[f64], pts: &[f64]) -> Vec<f64> {
    pts.iter()
        .map(|&t| linear_interp(model_grid, values, t))
        .collect()
}

fn numint_scores(model: &UfpcaModel, pts: &[f64], vals: &[f64]) -> Result<Vec<f64>> {
    if pts.len() < 2 {
        return Err(FdError::InvalidParameter(
            "numerical integration needs at least two points per observation".into(),
        ));
    }
    let grid = model.grid.points();
    let mu = interp_onto(grid, &model.mean, pts);
    let w = trapezoid_weights(pts);
    let centered: Vec<f64> = vals.iter().zip(&mu).map(|(v, m)| v - m).collect();
    Ok((0..model.n_components())
        .map(|k| {
            let phi = interp_onto(grid, &model.eigenfunctions.row(k).to_vec(), pts);
            crate::numeric::weighted_dot(&w, &centered, &phi)
        })
        .collect())
}

fn pace_scores(model: &UfpcaModel, pts: &[f64], vals: &[f64]) -> Result<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let m = pts.len();
    let j = model.n_components();
    if m == 0 {
        return Err(FdError::EmptyData("observation has no points".into()));
    }
    let grid = model.grid.points();
    let mu = interp_onto(grid, &model.mean, pts);
    // eigenfunctions on the observation's own grid
    let mut phi = Array2::zeros((j, m));
    for k in 0..j {
        let row = interp_onto(grid, &model.eigenfunctions.row(k).to_vec(), pts);
        for (i, v) in row.into_iter().enumerate() {
            phi[(k, i)] = v;
        }
    }
    // Sigma_Y = Phi^T Lambda Phi + sigma^2 I (+ relative ridge)
    let mut sigma = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0;
            for k in 0..j {
                acc += model.eigenvalues[k] * phi[(k, a)] * phi[(k, b)];
            }
            sigma[(a, b)] = acc;
            sigma[(b, a)] = acc;
        }
    }
    for a in 0..m {
        sigma[(a, a)] += model.noise_variance;
    }
    let ridge = 1e-10 * sigma.trace().max(1e-300);
    for a in 0..m {
        sigma[(a, a)] += ridge;
    }
    let rhs = DVector::from_iterator(m, vals.iter().zip(&mu).map(|(v, m)| v - m));
    let solved = nalgebra::Cholesky::new(sigma)
        .ok_or_else(|| FdError::Numerical("observation covariance is singular".into()))?
        .solve(&rhs);
    Ok((0..j)
        .map(|k| {
            let mut acc = 0.0;
            for a in 0..m {
                acc += phi[(k, a)] * solved[a];
            }
            model.eigenvalues[k] * acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DenseFD;
    use crate::numeric::{linspace, weighted_dot};
    use crate::sim::{decay_values, make_basis, simulate_kl, BasisName, DecayKind};
    use approx::assert_abs_diff_eq;

    fn sim_fd(n: usize, j: usize, seed: u64) -> (FunctionalData, crate::sim::Basis, crate::sim::EigenDecay) {
        let grid = Grid1D::new(linspace(0.0, 1.0, 101)).unwrap();
        let basis = make_basis(BasisName::Wiener, j, &grid).unwrap();
        let decay = decay_values(DecayKind::Exponential, j).unwrap();
        let out = simulate_kl(&basis, &decay, n, seed).unwrap();
        (FunctionalData::Dense(out.data), basis, decay)
    }

    #[test]
    fn recovers_simulated_eigenstructure() {
        // simulation-truth oracle
        let (fd, basis, decay) = sim_fd(2000, 5, 404);
        let model = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Count(5),
                moments: MomentOptions::default(),
            },
        )
        .unwrap();
        let w = trapezoid_weights(model.grid.points());
        for k in 0..3 {
            let rel = (model.eigenvalues[k] - decay.values()[k]).abs() / decay.values()[k];
            assert!(rel < 0.10, "eigenvalue {k}: rel error {rel}");
            let align = weighted_dot(
                &w,
                &model.eigenfunctions.row(k).to_vec(),
                &basis.matrix.row(k).to_vec(),
            )
            .abs();
            assert!(align >= 0.95, "eigenfunction {k}: alignment {align}");
        }
    }

    #[test]
    fn single_component_data_explains_everything() {
        let grid = Grid1D::new(linspace(0.0, 1.0, 51)).unwrap();
        let basis = make_basis(BasisName::Wiener, 1, &grid).unwrap();
        let coeffs: Vec<f64> = (0..40).map(|i| (i as f64 - 20.0) / 5.0).collect();
        let vals = Array2::from_shape_fn((40, 51), |(i, k)| coeffs[i] * basis.matrix[(0, k)]);
        let fd = FunctionalData::Dense(DenseFD::from_matrix(grid, vals).unwrap());
        let model = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Frac(0.5),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        assert_eq!(model.n_components(), 1);
        assert!(model.explained_variance() > 1.0 - 1e-10);
    }

    #[test]
    fn fractional_selection_is_minimal_prefix() {
        // spectrum partial-sum oracle computed from the full eigenvalue list
        let (fd, _, _) = sim_fd(500, 5, 11);
        let full = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Frac(0.999999),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        let total: f64 = full.total_variance;
        let q = 0.99;
        let mut acc = 0.0;
        let mut expected = 0;
        // the full model keeps nearly everything, so its eigenvalues cover
        // the prefix we need for the oracle
        for l in &full.eigenvalues {
            acc += l;
            expected += 1;
            if acc >= q * total {
                break;
            }
        }
        let partial = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Frac(q),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        assert_eq!(partial.n_components(), expected);
    }

    #[test]
    fn eigenfunctions_quadrature_orthonormal() {
        let (fd, _, _) = sim_fd(300, 4, 7);
        let model = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Count(4),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        let w = trapezoid_weights(model.grid.points());
        for a in 0..4 {
            for b in 0..4 {
                let dot = weighted_dot(
                    &w,
                    &model.eigenfunctions.row(a).to_vec(),
                    &model.eigenfunctions.row(b).to_vec(),
                );
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-6, "gram[{a},{b}] = {dot}");
            }
        }
    }

    #[test]
    fn scores_of_the_mean_curve_are_zero() {
        let (fd, _, _) = sim_fd(100, 3, 5);
        let model = ufpca_fit(&fd, &UfpcaOptions::default()).unwrap();
        let grid = model.grid.clone();
        let m = grid.len();
        let mean_fd = FunctionalData::Dense(
            DenseFD::from_matrix(
                grid,
                Array2::from_shape_fn((1, m), |(_, j)| model.mean[j]),
            )
            .unwrap(),
        );
        let scores = ufpca_scores(&model, &mean_fd, ScoreMethod::NumInt).unwrap();
        for s in scores.iter() {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn numint_scores_recover_true_coefficients() {
        // simulation-truth oracle against the generating coefficients: with
        // the eigenstructure known, the only error left is the M = 101
        // trapezoid quadrature
        let grid = Grid1D::new(linspace(0.0, 1.0, 101)).unwrap();
        let basis = make_basis(BasisName::Wiener, 3, &grid).unwrap();
        let decay = decay_values(DecayKind::Exponential, 3).unwrap();
        let out = simulate_kl(&basis, &decay, 400, 21).unwrap();
        let fd = FunctionalData::Dense(out.data.clone());
        let model = UfpcaModel {
            grid: grid.clone(),
            mean: vec![0.0; 101],
            eigenvalues: decay.values().to_vec(),
            eigenfunctions: basis.matrix.clone(),
            noise_variance: 0.0,
            n_dropped_negative: 0,
            total_variance: decay.values().iter().sum(),
        };
        let scores = ufpca_scores(&model, &fd, ScoreMethod::NumInt).unwrap();
        // true coefficients via quadrature against the generating basis
        let w = trapezoid_weights(grid.points());
        for k in 0..3 {
            let mut sq = 0.0;
            for n in 0..400 {
                let xs: Vec<f64> = out.data.obs_row(n).to_vec();
                let truth = weighted_dot(&w, &xs, &basis.matrix.row(k).to_vec());
                sq += (scores[(n, k)] - truth).powi(2);
            }
            let rmse = (sq / 400.0).sqrt();
            assert!(
                rmse <= 0.05 * decay.values()[k].sqrt(),
                "score {k}: rmse {rmse}"
            );
        }
    }

    #[test]
    fn pace_converges_to_numint_on_full_grid() {
        // limit-agreement oracle: sigma^2 -> 0 and complete sampling
        let (fd, _, _) = sim_fd(200, 3, 33);
        let model = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Count(3),
                moments: MomentOptions::raw(), // noise variance 0
            },
        )
        .unwrap();
        let numint = ufpca_scores(&model, &fd, ScoreMethod::NumInt).unwrap();
        let pace = ufpca_scores(&model, &fd, ScoreMethod::Pace).unwrap();
        for k in 0..3 {
            let scale: f64 = (0..200).map(|n| numint[(n, k)].powi(2)).sum::<f64>().sqrt();
            let diff: f64 = (0..200)
                .map(|n| (numint[(n, k)] - pace[(n, k)]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(diff / scale <= 0.01, "component {k}: rel diff {}", diff / scale);
        }
    }

    #[test]
    fn pace_handles_irregular_observations() {
        let (fd, basis, decay) = sim_fd(300, 2, 55);
        let model = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Count(2),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        // sparse new observation along the first eigenfunction
        let pts: Vec<f64> = linspace(0.05, 0.95, 19);
        let c = 1.3;
        let vals: Vec<f64> = pts
            .iter()
            .map(|&t| {
                let phi = interp_onto(basis.grid.points(), &basis.matrix.row(0).to_vec(), &[t]);
                model_mean_at(&model, t) + c * phi[0]
            })
            .collect();
        let ir = crate::data::IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![(pts, vals)],
        )
        .unwrap();
        let scores = ufpca_scores(&model, &FunctionalData::Irregular(ir), ScoreMethod::Pace)
            .unwrap();
        let _ = decay;
        assert!(
            (scores[(0, 0)].abs() - c).abs() < 0.1,
            "pace score {} vs {c}",
            scores[(0, 0)]
        );
    }

    fn model_mean_at(model: &UfpcaModel, t: f64) -> f64 {
        linear_interp(model.grid.points(), &model.mean, t)
    }

    #[test]
    fn count_beyond_positive_spectrum_rejected() {
        let (fd, _, _) = sim_fd(20, 2, 1);
        let err = ufpca_fit(
            &fd,
            &UfpcaOptions {
                n_comp: NComp::Count(80),
                moments: MomentOptions::raw(),
            },
        );
        assert!(err.is_err());
    }
}
