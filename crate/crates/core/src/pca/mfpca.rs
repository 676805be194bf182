//! Multivariate FPCA by score stacking.
//!
//! Each component is expanded with its own univariate basis (curve FPCA for
//! 1-D domains, the tensor power algorithm for images). The per-observation
//! univariate scores are stacked into a matrix Z of width J+ = sum_p J^(p),
//! the eigenvectors of Z^T Z / (N - 1) rotate the stacked univariate bases
//! into multivariate eigenfunctions, and multivariate scores are the
//! projections of the stacked scores onto those eigenvectors.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{DenseFD, FunctionalData, MultivariateFD};
use crate::error::{FdError, Result};
use crate::moments::MomentOptions;
use crate::numeric::symmetric_eigen_desc;
use crate::pca::fcptpa::{fcptpa_fit, FcptpaConfig, FcptpaModel};
use crate::pca::ufpca::{ufpca_fit, ufpca_scores, UfpcaModel, UfpcaOptions};
use crate::pca::{NComp, ScoreMethod};

pub const MODEL_FORMAT: &str = "fundata-mfpca";
pub const MODEL_VERSION: u32 = 1;

/// Univariate expansion backing one component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum UniBasis {
    Ufpca(UfpcaModel),
    Fcptpa(FcptpaModel),
}

impl UniBasis {
    /// Number of univariate basis functions this component contributes.
    pub fn n_functions(&self) -> usize {
        match self {
            UniBasis::Ufpca(m) => m.n_components(),
            UniBasis::Fcptpa(m) => m.n_components(),
        }
    }

    /// Univariate basis functions flattened to rows (images row-major).
    fn basis_rows(&self) -> Array2<f64> {
        match self {
            UniBasis::Ufpca(m) => m.eigenfunctions.clone(),
            UniBasis::Fcptpa(m) => {
                let j = m.n_components();
                let (sx, sy) = (m.grid_x.len(), m.grid_y.len());
                let mut rows = Array2::zeros((j, sx * sy));
                for k in 0..j {
                    let img = m.eigenimage(k);
                    for a in 0..sx {
                        for b in 0..sy {
                            rows[(k, a * sy + b)] = img[(a, b)];
                        }
                    }
                }
                rows
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MfpcaOptions {
    /// Per-component retention; images require an explicit count.
    pub n_comp: Vec<NComp>,
    pub method: ScoreMethod,
    pub moments: MomentOptions,
    /// Template for image components (its `n_components` is overridden).
    pub fcptpa: FcptpaConfig,
}

impl MfpcaOptions {
    pub fn new(n_comp: Vec<NComp>) -> Self {
        MfpcaOptions {
            n_comp,
            method: ScoreMethod::NumInt,
            moments: MomentOptions::default(),
            fcptpa: FcptpaConfig::default(),
        }
    }
}

/// Fitted multivariate eigenstructure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfpcaModel {
    pub bases: Vec<UniBasis>,
    /// Eigenvalues of the stacked-score covariance, non-increasing,
    /// negatives clipped to zero.
    pub eigenvalues: Vec<f64>,
    /// `(J+, J+)` eigenvector columns of the stacked-score covariance.
    pub eigenvectors: Array2<f64>,
    /// Per component: `(J+, M_p)` multivariate eigenfunction values
    /// (images flattened row-major).
    pub eigenfunctions: Vec<Array2<f64>>,
    /// Multivariate scores of the training sample, `(N0, J+)`.
    pub training_scores: Array2<f64>,
    pub method: ScoreMethod,
    /// Number of negative stacked-covariance eigenvalues clipped to zero.
    pub n_clipped: usize,
}

impl MfpcaModel {
    /// Total stacked dimension J+.
    pub fn n_functions(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_components(&self) -> usize {
        self.bases.len()
    }
}

fn stacked_univariate_scores(
    bases: &[UniBasis],
    fd: &MultivariateFD,
    method: ScoreMethod,
) -> Result<Array2<f64>> {
    if fd.len() != bases.len() {
        return Err(FdError::ShapeMismatch(format!(
            "{} components for a model with {}",
            fd.len(),
            bases.len()
        )));
    }
    let n = fd.n_obs();
    let blocks: Vec<Array2<f64>> = fd
        .iter()
        .zip(bases)
        .map(|(comp, basis)| match basis {
            UniBasis::Ufpca(m) => ufpca_scores(m, comp, method),
            UniBasis::Fcptpa(m) => {
                let dense = comp.as_dense().ok_or_else(|| {
                    FdError::InvalidParameter("image components must be dense".into())
                })?;
                m.transform(dense)
            }
        })
        .collect::<Result<_>>()?;
    let j_plus: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut stacked = Array2::zeros((n, j_plus));
    let mut offset = 0;
    for block in blocks {
        stacked
            .slice_mut(ndarray::s![.., offset..offset + block.ncols()])
            .assign(&block);
        offset += block.ncols();
    }
    Ok(stacked)
}

/// Fit the multivariate eigenstructure of `fd`.
pub fn mfpca_fit(fd: &MultivariateFD, opts: &MfpcaOptions) -> Result<MfpcaModel> {
    let p = fd.len();
    if opts.n_comp.len() != p {
        return Err(FdError::ShapeMismatch(format!(
            "{} retention entries for {p} components",
            opts.n_comp.len()
        )));
    }
    let n = fd.n_obs();
    if n < 2 {
        return Err(FdError::InvalidParameter(
            "multivariate FPCA needs at least two observations".into(),
        ));
    }

    // step 1: univariate expansion per component
    let mut bases = Vec::with_capacity(p);
    for (comp, &n_comp) in fd.iter().zip(&opts.n_comp) {
        let basis = match comp {
            FunctionalData::Dense(d) if d.n_dim() == 2 => {
                let count = match n_comp {
                    NComp::Count(c) => c,
                    NComp::Frac(_) => {
                        return Err(FdError::InvalidParameter(
                            "image components need an explicit component count".into(),
                        ))
                    }
                };
                let config = FcptpaConfig {
                    n_components: count,
                    ..opts.fcptpa.clone()
                };
                UniBasis::Fcptpa(fcptpa_fit(d, &config)?)
            }
            FunctionalData::Irregular(ir) if ir.n_dim() == 2 => {
                return Err(FdError::InvalidParameter(
                    "irregular 2-D components are not supported".into(),
                ))
            }
            _ => UniBasis::Ufpca(ufpca_fit(
                comp,
                &UfpcaOptions {
                    n_comp,
                    moments: opts.moments.clone(),
                },
            )?),
        };
        bases.push(basis);
    }
    let j_plus: usize = bases.iter().map(|b| b.n_functions()).sum();
    if j_plus == 0 {
        return Err(FdError::EmptyData("no univariate components retained".into()));
    }

    // step 2: stack the scores and form Z = Zc^T Zc / (N - 1)
    let stacked = stacked_univariate_scores(&bases, fd, opts.method)?;
    let gram = stacked.t().dot(&stacked);
    let z = nalgebra::DMatrix::from_fn(j_plus, j_plus, |i, j| gram[(i, j)] / (n as f64 - 1.0));

    // step 3: eigenanalysis
    let (raw_vals, vecs) = symmetric_eigen_desc(z);
    let n_clipped = raw_vals.iter().filter(|v| **v < 0.0).count();
    let eigenvalues: Vec<f64> = raw_vals.into_iter().map(|v| v.max(0.0)).collect();
    let mut eigenvectors = Array2::from_shape_fn((j_plus, j_plus), |(i, j)| vecs[(i, j)]);

    // step 4: multivariate eigenfunctions, sign linked to the eigenvectors
    let block_rows: Vec<Array2<f64>> = bases.iter().map(|b| b.basis_rows()).collect();
    let offsets: Vec<usize> = bases
        .iter()
        .scan(0usize, |acc, b| {
            let start = *acc;
            *acc += b.n_functions();
            Some(start)
        })
        .collect();
    let mut eigenfunctions: Vec<Array2<f64>> = block_rows
        .iter()
        .map(|rows| Array2::zeros((j_plus, rows.ncols())))
        .collect();
    for j in 0..j_plus {
        // global sign: the largest absolute value across the concatenated
        // component functions must be positive
        let mut peak = 0.0f64;
        let mut peak_abs = -1.0f64;
        for (pi, rows) in block_rows.iter().enumerate() {
            let offset = offsets[pi];
            for m in 0..rows.ncols() {
                let mut acc = 0.0;
                for jp in 0..rows.nrows() {
                    acc += eigenvectors[(offset + jp, j)] * rows[(jp, m)];
                }
                eigenfunctions[pi][(j, m)] = acc;
                if acc.abs() > peak_abs {
                    peak_abs = acc.abs();
                    peak = acc;
                }
            }
        }
        if peak < 0.0 {
            for (pi, funcs) in eigenfunctions.iter_mut().enumerate() {
                let _ = pi;
                for m in 0..funcs.ncols() {
                    funcs[(j, m)] = -funcs[(j, m)];
                }
            }
            for i in 0..j_plus {
                eigenvectors[(i, j)] = -eigenvectors[(i, j)];
            }
        }
    }

    let training_scores = stacked.dot(&eigenvectors);
    Ok(MfpcaModel {
        bases,
        eigenvalues,
        eigenvectors,
        eigenfunctions,
        training_scores,
        method: opts.method,
        n_clipped,
    })
}

/// Multivariate scores of (possibly new) observations, `(N, J+)`.
pub fn mfpca_transform(model: &MfpcaModel, fd: &MultivariateFD) -> Result<Array2<f64>> {
    let stacked = stacked_univariate_scores(&model.bases, fd, model.method)?;
    Ok(stacked.dot(&model.eigenvectors))
}

/// Rebuild curves/images from multivariate scores (width at most J+):
/// X_n = mu + sum_j score_nj phi_j, per component.
pub fn mfpca_inverse_transform(
    model: &MfpcaModel,
    scores: ArrayView2<'_, f64>,
) -> Result<MultivariateFD> {
    let k = scores.ncols();
    if k > model.n_functions() {
        return Err(FdError::ShapeMismatch(format!(
            "{k} score columns exceed the model's {}",
            model.n_functions()
        )));
    }
    let n = scores.nrows();
    let mut comps: Vec<FunctionalData> = Vec::with_capacity(model.bases.len());
    for (pi, basis) in model.bases.iter().enumerate() {
        let funcs = &model.eigenfunctions[pi];
        let m = funcs.ncols();
        let mut flat = Array2::zeros((n, m));
        for i in 0..n {
            for c in 0..m {
                let mut acc = 0.0;
                for j in 0..k {
                    acc += scores[(i, j)] * funcs[(j, c)];
                }
                flat[(i, c)] = acc;
            }
        }
        let comp = match basis {
            UniBasis::Ufpca(u) => {
                for i in 0..n {
                    for c in 0..m {
                        flat[(i, c)] += u.mean[c];
                    }
                }
                FunctionalData::Dense(DenseFD::from_matrix(u.grid.clone(), flat)?)
            }
            UniBasis::Fcptpa(f) => {
                let (sx, sy) = (f.grid_x.len(), f.grid_y.len());
                let mut tensor = ndarray::Array3::zeros((n, sx, sy));
                for i in 0..n {
                    for a in 0..sx {
                        for b in 0..sy {
                            tensor[(i, a, b)] = flat[(i, a * sy + b)] + f.mean[(a, b)];
                        }
                    }
                }
                let mut argvals = indexmap::IndexMap::new();
                argvals.insert("input_dim_0".to_string(), f.grid_x.clone());
                argvals.insert("input_dim_1".to_string(), f.grid_y.clone());
                FunctionalData::Dense(DenseFD::new(argvals, tensor.into_dyn())?)
            }
        };
        comps.push(comp);
    }
    MultivariateFD::new(comps)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: MfpcaModel,
}

/// Persist a fitted model as version-tagged JSON.
pub fn write_model(model: &MfpcaModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&file)
        .map_err(|e| FdError::Parse(format!("model encoding: {e}")))?;
    let tmp = path.as_ref().with_extension("tmp~");
    fs::write(&tmp, json)?;
    fs::rename(&tmp, path.as_ref())?;
    Ok(())
}

/// Load a model written by [`write_model`], checking the format tag.
pub fn read_model(path: impl AsRef<Path>) -> Result<MfpcaModel> {
    let text = fs::read_to_string(path.as_ref())
        .map_err(|e| FdError::Parse(format!("{}: {e}", path.as_ref().display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| FdError::Parse(format!("model: {e}")))?;
    if file.format != MODEL_FORMAT {
        return Err(FdError::Parse(format!(
            "unexpected model format '{}'",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(FdError::Parse(format!(
            "unsupported model version {}",
            file.version
        )));
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid1D;
    use crate::numeric::{linspace, trapezoid_weights, weighted_dot};
    use crate::sim::{decay_values, make_basis, simulate_kl, BasisName, DecayKind};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sim_univariate(n: usize, j: usize, seed: u64) -> MultivariateFD {
        let grid = Grid1D::new(linspace(0.0, 1.0, 101)).unwrap();
        let basis = make_basis(BasisName::Wiener, j, &grid).unwrap();
        let decay = decay_values(DecayKind::Exponential, j).unwrap();
        let out = simulate_kl(&basis, &decay, n, seed).unwrap();
        MultivariateFD::new(vec![FunctionalData::Dense(out.data)]).unwrap()
    }

    fn raw_opts(n_comp: Vec<NComp>) -> MfpcaOptions {
        MfpcaOptions {
            n_comp,
            method: ScoreMethod::NumInt,
            moments: MomentOptions::raw(),
            fcptpa: FcptpaConfig::default(),
        }
    }

    #[test]
    fn single_component_case_degenerates_to_univariate_fpca() {
        let mfd = sim_univariate(300, 3, 71);
        let n = mfd.n_obs() as f64;
        let opts = raw_opts(vec![NComp::Count(3)]);
        let model = mfpca_fit(&mfd, &opts).unwrap();
        let uni = ufpca_fit(
            mfd.component(0),
            &UfpcaOptions {
                n_comp: NComp::Count(3),
                moments: MomentOptions::raw(),
            },
        )
        .unwrap();
        // the stacked-score covariance uses divisor N - 1 while the
        // covariance surface uses divisor N, so the algorithm forces the
        // eigenvalue ratio N / (N - 1)
        for j in 0..3 {
            assert_abs_diff_eq!(
                model.eigenvalues[j] * (n - 1.0) / n,
                uni.eigenvalues[j],
                epsilon = 1e-8
            );
        }
        // eigenfunctions agree after the shared sign convention
        for j in 0..3 {
            for m in 0..101 {
                assert_abs_diff_eq!(
                    model.eigenfunctions[0][(j, m)],
                    uni.eigenfunctions[(j, m)],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn transform_of_training_data_reproduces_stored_scores() {
        let mfd = sim_univariate(120, 3, 5);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(3)])).unwrap();
        let again = mfpca_transform(&model, &mfd).unwrap();
        for (a, b) in again.iter().zip(model.training_scores.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn mean_observation_has_zero_scores() {
        let mfd = sim_univariate(100, 2, 9);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(2)])).unwrap();
        let UniBasis::Ufpca(u) = &model.bases[0] else {
            panic!("curve basis expected")
        };
        let mean_fd = MultivariateFD::new(vec![FunctionalData::Dense(
            DenseFD::from_matrix(
                u.grid.clone(),
                Array2::from_shape_fn((1, u.mean.len()), |(_, j)| u.mean[j]),
            )
            .unwrap(),
        )])
        .unwrap();
        let scores = mfpca_transform(&model, &mean_fd).unwrap();
        for s in scores.iter() {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn training_score_gram_is_diagonal_with_eigenvalues() {
        let mfd = sim_univariate(150, 3, 13);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(3)])).unwrap();
        let n = mfd.n_obs() as f64;
        let gram = model.training_scores.t().dot(&model.training_scores) / (n - 1.0);
        let j = model.n_functions();
        for a in 0..j {
            for b in 0..j {
                if a == b {
                    assert_abs_diff_eq!(gram[(a, a)], model.eigenvalues[a], epsilon = 1e-8);
                } else {
                    assert!(
                        gram[(a, b)].abs() <= 1e-6 * model.eigenvalues[0],
                        "gram[{a},{b}] = {}",
                        gram[(a, b)]
                    );
                }
            }
        }
    }

    #[test]
    fn zero_scores_invert_to_the_means() {
        let mfd = sim_univariate(80, 2, 3);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(2)])).unwrap();
        let zeros = Array2::zeros((1, model.n_functions()));
        let rebuilt = mfpca_inverse_transform(&model, zeros.view()).unwrap();
        let UniBasis::Ufpca(u) = &model.bases[0] else {
            panic!("curve basis expected")
        };
        let got = rebuilt.component(0).as_dense().unwrap();
        for (a, b) in got.obs_matrix().iter().zip(&u.mean) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_score_adds_one_eigenfunction() {
        let mfd = sim_univariate(80, 2, 3);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(2)])).unwrap();
        let mut scores = Array2::zeros((1, 2));
        scores[(0, 1)] = 1.0;
        let rebuilt = mfpca_inverse_transform(&model, scores.view()).unwrap();
        let UniBasis::Ufpca(u) = &model.bases[0] else {
            panic!("curve basis expected")
        };
        let got = rebuilt.component(0).as_dense().unwrap();
        for (m, v) in got.obs_matrix().row(0).iter().enumerate() {
            assert_abs_diff_eq!(
                *v,
                u.mean[m] + model.eigenfunctions[0][(1, m)],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn transform_inverts_inverse_transform() {
        let mfd = sim_univariate(90, 3, 41);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(3)])).unwrap();
        let j = model.n_functions();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let scores = Array2::from_shape_fn((7, j), |_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        let rebuilt = mfpca_inverse_transform(&model, scores.view()).unwrap();
        let back = mfpca_transform(&model, &rebuilt).unwrap();
        for (a, b) in back.iter().zip(scores.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn reconstruction_error_bounded_by_unexplained_variance() {
        let mfd = sim_univariate(400, 5, 99);
        // drop to two components
        let opts = MfpcaOptions {
            n_comp: vec![NComp::Count(2)],
            ..raw_opts(vec![NComp::Count(2)])
        };
        let model = mfpca_fit(&mfd, &opts).unwrap();
        let UniBasis::Ufpca(u) = &model.bases[0] else {
            panic!("curve basis expected")
        };
        let explained = u.eigenvalues.iter().sum::<f64>() / u.total_variance;
        let scores = mfpca_transform(&model, &mfd).unwrap();
        let rebuilt = mfpca_inverse_transform(&model, scores.view()).unwrap();
        let orig = mfd.component(0).as_dense().unwrap().obs_matrix();
        let got = rebuilt.component(0).as_dense().unwrap();
        let w = trapezoid_weights(u.grid.points());
        let mut err2 = 0.0;
        let mut tot2 = 0.0;
        for i in 0..mfd.n_obs() {
            for (m, wm) in w.iter().enumerate() {
                let centered = orig[(i, m)] - u.mean[m];
                let diff = got.obs_matrix()[(i, m)] - orig[(i, m)];
                err2 += wm * diff * diff;
                tot2 += wm * centered * centered;
            }
        }
        let rel = err2 / tot2;
        assert!(
            rel <= (1.0 - explained) + 0.05,
            "relative L2 error {rel}, unexplained {}",
            1.0 - explained
        );
    }

    #[test]
    fn known_two_component_structure_recovered() {
        // simulation-truth oracle: shared scores split across components
        let grid = Grid1D::new(linspace(0.0, 1.0, 101)).unwrap();
        let f = make_basis(BasisName::Wiener, 3, &grid).unwrap();
        let g = make_basis(BasisName::Fourier, 3, &grid).unwrap();
        let lambdas = [1.0f64, 0.5, 0.25];
        let alphas = [0.8f64, 0.6, 0.5];
        let n = 2000;
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let mut xs = Array2::zeros((n, 101));
        let mut ys = Array2::zeros((n, 101));
        for i in 0..n {
            for j in 0..3 {
                let z: f64 = StandardNormal.sample(&mut rng);
                let xi = lambdas[j].sqrt() * z;
                let (a, b) = (alphas[j], (1.0 - alphas[j] * alphas[j]).sqrt());
                for m in 0..101 {
                    xs[(i, m)] += xi * a * f.matrix[(j, m)];
                    ys[(i, m)] += xi * b * g.matrix[(j, m)];
                }
            }
        }
        let mfd = MultivariateFD::new(vec![
            FunctionalData::Dense(DenseFD::from_matrix(grid.clone(), xs).unwrap()),
            FunctionalData::Dense(DenseFD::from_matrix(grid.clone(), ys).unwrap()),
        ])
        .unwrap();
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(3), NComp::Count(3)])).unwrap();
        for j in 0..3 {
            let rel = (model.eigenvalues[j] - lambdas[j]).abs() / lambdas[j];
            assert!(rel < 0.10, "eigenvalue {j}: {} vs {}", model.eigenvalues[j], lambdas[j]);
        }
        // the estimated multivariate eigenfunction splits with weights (a, b)
        let w = trapezoid_weights(grid.points());
        let a0 = weighted_dot(
            &w,
            &model.eigenfunctions[0].row(0).to_vec(),
            &f.matrix.row(0).to_vec(),
        );
        let b0 = weighted_dot(
            &w,
            &model.eigenfunctions[1].row(0).to_vec(),
            &g.matrix.row(0).to_vec(),
        );
        assert!((a0.abs() - 0.8).abs() < 0.05, "alpha weight {a0}");
        assert!((b0.abs() - 0.6).abs() < 0.05, "beta weight {b0}");
    }

    #[test]
    fn eigenvalues_are_non_increasing_and_clipped() {
        let mfd = sim_univariate(60, 4, 17);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(4)])).unwrap();
        for pair in model.eigenvalues.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        assert!(model.eigenvalues.iter().all(|l| *l >= 0.0));
    }

    #[test]
    fn model_serialization_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mfd = sim_univariate(50, 2, 23);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(2)])).unwrap();
        write_model(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.eigenvalues, model.eigenvalues);
        assert_eq!(back.n_functions(), model.n_functions());
        let scores_a = mfpca_transform(&model, &mfd).unwrap();
        let scores_b = mfpca_transform(&back, &mfd).unwrap();
        for (a, b) in scores_a.iter().zip(scores_b.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let mfd = sim_univariate(40, 2, 2);
        let model = mfpca_fit(&mfd, &raw_opts(vec![NComp::Count(2)])).unwrap();
        let wide = Array2::zeros((1, model.n_functions() + 1));
        assert!(mfpca_inverse_transform(&model, wide.view()).is_err());
    }

    #[test]
    fn image_component_round_trip() {
        // mixed curve + image object
        let grid = Grid1D::new(linspace(0.0, 1.0, 41)).unwrap();
        let basis = make_basis(BasisName::Wiener, 2, &grid).unwrap();
        let decay = decay_values(DecayKind::Linear, 2).unwrap();
        let curves = simulate_kl(&basis, &decay, 30, 7).unwrap().data;

        let igrid = Grid1D::new(linspace(0.0, 1.0, 12)).unwrap();
        let bx = make_basis(BasisName::Wiener, 2, &igrid).unwrap();
        let by = make_basis(BasisName::Fourier, 2, &igrid).unwrap();
        let tb = crate::sim::tensor_basis_2d(bx, by);
        let idecay = decay_values(DecayKind::Exponential, 4).unwrap();
        let images = crate::sim::simulate_kl_2d(&tb, &idecay, 30, 8).unwrap().data;

        let mfd = MultivariateFD::new(vec![
            FunctionalData::Dense(curves),
            FunctionalData::Dense(images),
        ])
        .unwrap();
        let opts = MfpcaOptions {
            n_comp: vec![NComp::Count(2), NComp::Count(2)],
            method: ScoreMethod::NumInt,
            moments: MomentOptions::raw(),
            fcptpa: FcptpaConfig {
                alpha_v: (0.0, 0.0),
                alpha_w: (0.0, 0.0),
                seed: 4,
                ..Default::default()
            },
        };
        let model = mfpca_fit(&mfd, &opts).unwrap();
        assert_eq!(model.n_functions(), 4);
        let scores = mfpca_transform(&model, &mfd).unwrap();
        assert_eq!(scores.dim(), (30, 4));
        let rebuilt = mfpca_inverse_transform(&model, scores.view()).unwrap();
        assert_eq!(rebuilt.len(), 2);
        assert_eq!(rebuilt.component(1).as_dense().unwrap().n_dim(), 2);
    }
}
