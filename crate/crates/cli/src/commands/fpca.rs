//! `fundata fpca` - multivariate FPCA fit, transform and inverse transform.

use std::path::{Path, PathBuf};

use clap::Args;
use ndarray::Array2;

use fundata_core::data::{FunctionalData, MultivariateFD};
use fundata_core::error::{FdError, Result};
use fundata_core::io::{fmt_float, read_matrix, write_csv_dense, write_matrix, write_multivariate};
use fundata_core::moments::MomentOptions;
use fundata_core::pca::{
    mfpca_fit, mfpca_inverse_transform, mfpca_transform, read_model, write_model, MfpcaOptions,
    NComp, ScoreMethod,
};

use super::read_data;

#[derive(Args)]
pub struct FpcaArgs {
    /// Single-component CSV input
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Multivariate input via a component manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    irregular: bool,
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    /// Components per input component: counts or variance proportions,
    /// comma separated (e.g. "0.99,0.99" or "3")
    #[arg(long = "n-comp", default_value = "0.99")]
    n_comp: String,
    /// numint|pace
    #[arg(long, default_value = "numint")]
    method: String,
    /// Skip the covariance diagonal correction in the univariate fits
    #[arg(long = "no-diagonal-correction")]
    no_diagonal_correction: bool,
    /// Apply a stored model to new data, writing scores
    #[arg(long)]
    transform: bool,
    /// Rebuild curves from scores with a stored model
    #[arg(long)]
    inverse: bool,
    /// Stored model path (required by --transform / --inverse)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Scores CSV consumed by --inverse
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Output prefix (fit/inverse) or scores path (transform)
    #[arg(short, long)]
    output: PathBuf,
}

pub fn run(args: FpcaArgs) -> Result<()> {
    match (args.transform, args.inverse) {
        (false, false) => fit(&args),
        (true, false) => transform(&args),
        (false, true) => inverse(&args),
        (true, true) => Err(FdError::InvalidParameter(
            "--transform and --inverse are mutually exclusive".into(),
        )),
    }
}

fn score_header(width: usize) -> Vec<String> {
    (0..width).map(|j| format!("score_{j}")).collect()
}

fn write_outputs(prefix: &Path, model: &fundata_core::pca::MfpcaModel) -> Result<()> {
    let evals = Array2::from_shape_fn((model.eigenvalues.len(), 1), |(i, _)| model.eigenvalues[i]);
    write_matrix(
        &prefixed(prefix, "eigenvalues.csv"),
        &["eigenvalue".to_string()],
        &evals,
    )?;
    for (p, funcs) in model.eigenfunctions.iter().enumerate() {
        let header: Vec<String> = match &model.bases[p] {
            fundata_core::pca::UniBasis::Ufpca(u) => {
                u.grid.points().iter().map(|t| fmt_float(*t)).collect()
            }
            fundata_core::pca::UniBasis::Fcptpa(_) => {
                (0..funcs.ncols()).map(|i| i.to_string()).collect()
            }
        };
        write_matrix(&prefixed(prefix, &format!("eigenfunctions.{p}.csv")), &header, funcs)?;
    }
    write_matrix(
        &prefixed(prefix, "scores.csv"),
        &score_header(model.training_scores.ncols()),
        &model.training_scores,
    )?;
    write_model(model, prefixed(prefix, "model.json"))?;
    Ok(())
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "fpca".to_string());
    name.push('.');
    name.push_str(suffix);
    prefix.with_file_name(name)
}

fn fit(args: &FpcaArgs) -> Result<()> {
    let data = read_data(
        args.input.as_deref(),
        args.manifest.as_deref(),
        args.irregular,
        args.index_col,
    )?;
    let n_comp: Vec<NComp> = args
        .n_comp
        .split(',')
        .map(NComp::parse)
        .collect::<Result<_>>()?;
    let n_comp = if n_comp.len() == 1 && data.len() > 1 {
        vec![n_comp[0]; data.len()]
    } else {
        n_comp
    };
    let opts = MfpcaOptions {
        n_comp,
        method: ScoreMethod::parse(&args.method)?,
        moments: MomentOptions {
            skip_diagonal_correction: args.no_diagonal_correction,
            ..Default::default()
        },
        ..MfpcaOptions::new(vec![])
    };
    let model = mfpca_fit(&data, &opts)?;
    write_outputs(&args.output, &model)
}

fn transform(args: &FpcaArgs) -> Result<()> {
    let model_path = args
        .model
        .as_ref()
        .ok_or_else(|| FdError::InvalidParameter("--transform requires --model".into()))?;
    let model = read_model(model_path)?;
    let data = read_data(
        args.input.as_deref(),
        args.manifest.as_deref(),
        args.irregular,
        args.index_col,
    )?;
    let scores = mfpca_transform(&model, &data)?;
    write_matrix(&args.output, &score_header(scores.ncols()), &scores)
}

fn inverse(args: &FpcaArgs) -> Result<()> {
    let model_path = args
        .model
        .as_ref()
        .ok_or_else(|| FdError::InvalidParameter("--inverse requires --model".into()))?;
    let scores_path = args
        .scores
        .as_ref()
        .ok_or_else(|| FdError::InvalidParameter("--inverse requires --scores".into()))?;
    let model = read_model(model_path)?;
    let (_, scores) = read_matrix(scores_path)?;
    let rebuilt = mfpca_inverse_transform(&model, scores.view())?;
    if rebuilt.len() == 1 {
        if let FunctionalData::Dense(fd) = rebuilt.component(0) {
            if fd.n_dim() == 1 {
                let path = prefixed(&args.output, "reconstructed.csv");
                return write_csv_dense(fd, &path, "NA");
            }
        }
    }
    write_reconstructed_multivariate(&args.output, &rebuilt)
}

fn write_reconstructed_multivariate(prefix: &Path, mfd: &MultivariateFD) -> Result<()> {
    let dir = prefix.parent().unwrap_or(Path::new("."));
    let stem = format!(
        "{}.reconstructed",
        prefix
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "fpca".to_string())
    );
    write_multivariate(mfd, dir, &stem)?;
    Ok(())
}
