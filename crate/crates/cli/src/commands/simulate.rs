//! `fundata simulate` - data generation.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use ndarray::Array2;

use fundata_core::data::{FunctionalData, MultivariateFD};
use fundata_core::error::{FdError, Result};
use fundata_core::io::{write_csv_dense, write_csv_irregular, write_multivariate};
use fundata_core::sim::{
    decay_values, make_basis, simulate_brownian, simulate_kl, simulate_kl_2d,
    simulate_kl_clusters, tensor_basis_2d, BasisName, BrownianKind, BrownianParams, ClusterSpec,
    DecayKind, SimOutput, VarNoise,
};

use super::{parse_grid_spec, parse_pair, write_labels};

#[derive(Args)]
pub struct SimulateArgs {
    #[command(subcommand)]
    kind: SimulateKind,
}

#[derive(Subcommand)]
enum SimulateKind {
    /// Truncated Karhunen-Loeve expansion, optionally clustered
    Kl(KlArgs),
    /// Standard, fractional or geometric Brownian paths
    Brownian(BrownianArgs),
}

#[derive(Args)]
struct KlArgs {
    /// Basis family: legendre|wiener|fourier|bsplines
    #[arg(long, default_value = "wiener")]
    basis: String,
    #[arg(long = "n-functions", default_value_t = 5)]
    n_functions: usize,
    #[arg(long = "n-obs")]
    n_obs: usize,
    /// Eigenvalue decay: linear|exponential|wiener
    #[arg(long, default_value = "exponential")]
    decay: String,
    /// Sampling grid as start:stop:count
    #[arg(long, default_value = "0:1:101")]
    grid: String,
    #[arg(long, env = "FUNDATA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    /// Number of clusters; mean coefficients default to zero and score
    /// standard deviations replicate the decay across clusters
    #[arg(long)]
    clusters: Option<usize>,
    /// Cluster mean coefficients, rows by basis function: "2,-1;-0.5,1.5;0,0"
    #[arg(long)]
    centers: Option<String>,
    /// Per-cluster score standard deviations, same layout as --centers
    #[arg(long = "cluster-std")]
    cluster_std: Option<String>,
    #[arg(long = "labels-out")]
    labels_out: Option<PathBuf>,
    /// Homoscedastic noise variance; writes --noisy-out
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long = "noisy-out")]
    noisy_out: Option<PathBuf>,
    /// Remove a fraction p (within p-e..p+e) of points per curve, as p:e
    #[arg(long)]
    sparsify: Option<String>,
    #[arg(long = "sparse-out")]
    sparse_out: Option<PathBuf>,
    /// Second-axis basis for 2-D simulation (tensor product)
    #[arg(long = "basis-y")]
    basis_y: Option<String>,
    #[arg(long = "n-functions-y", default_value_t = 2)]
    n_functions_y: usize,
    #[arg(long = "grid-y", default_value = "0:1:21")]
    grid_y: String,
}

#[derive(Args)]
struct BrownianArgs {
    /// standard|fractional|geometric
    #[arg(long, default_value = "standard")]
    kind: String,
    #[arg(long = "n-obs")]
    n_obs: usize,
    #[arg(long, default_value = "0:1:101")]
    grid: String,
    #[arg(long, default_value_t = 0.5)]
    hurst: f64,
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, env = "FUNDATA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long = "noisy-out")]
    noisy_out: Option<PathBuf>,
    #[arg(long)]
    sparsify: Option<String>,
    #[arg(long = "sparse-out")]
    sparse_out: Option<PathBuf>,
}

fn parse_matrix(text: &str, flag: &str) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| FdError::InvalidParameter(format!("{flag}: bad cell '{c}'")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let j = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    if j == 0 || k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(FdError::InvalidParameter(format!(
            "{flag}: expected a rectangular ;-separated matrix"
        )));
    }
    Ok(Array2::from_shape_fn((j, k), |(a, b)| rows[a][b]))
}

fn finalize(mut sim: SimOutput, args_noise: Option<f64>, noisy_out: Option<&PathBuf>,
            sparsify: Option<&String>, sparse_out: Option<&PathBuf>, seed: u64) -> Result<SimOutput> {
    if let Some(var) = args_noise {
        sim.add_noise(&VarNoise::Scalar(var), seed.wrapping_add(1))?;
    }
    if let Some(spec) = sparsify {
        let (p, e) = parse_pair(spec, "--sparsify")?;
        sim.sparsify(p, e, seed.wrapping_add(2))?;
    }
    if let (Some(noisy), Some(path)) = (&sim.noisy_data, noisy_out) {
        write_csv_dense(noisy, path, "NA")?;
    }
    if let (Some(sparse), Some(path)) = (&sim.sparse_data, sparse_out) {
        write_csv_irregular(sparse, path, "NA")?;
    }
    Ok(sim)
}

pub fn run(args: SimulateArgs) -> Result<()> {
    match args.kind {
        SimulateKind::Kl(kl) => run_kl(kl),
        SimulateKind::Brownian(b) => run_brownian(b),
    }
}

fn run_kl(args: KlArgs) -> Result<()> {
    let name = BasisName::parse(&args.basis)?;
    let grid = parse_grid_spec(&args.grid)?;
    let basis = make_basis(name, args.n_functions, &grid)?;

    if let Some(basis_y) = &args.basis_y {
        // 2-D tensor-product simulation, written through a manifest
        let name_y = BasisName::parse(basis_y)?;
        let grid_y = parse_grid_spec(&args.grid_y)?;
        let by = make_basis(name_y, args.n_functions_y, &grid_y)?;
        let tb = tensor_basis_2d(basis, by);
        let kind = DecayKind::parse(&args.decay)?;
        let decay = decay_values(kind, tb.n_functions())?;
        let mut sim = simulate_kl_2d(&tb, &decay, args.n_obs, args.seed)?;
        if let Some(var) = args.noise {
            sim.add_noise(&VarNoise::Scalar(var), args.seed.wrapping_add(1))?;
        }
        let dir = args.output.parent().unwrap_or(std::path::Path::new("."));
        let stem = args
            .output
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("simulated");
        let data = sim.noisy_data.clone().unwrap_or_else(|| sim.data.clone());
        let mfd = MultivariateFD::new(vec![FunctionalData::Dense(data)])?;
        write_multivariate(&mfd, dir, stem)?;
        return Ok(());
    }

    let sim = match (args.clusters, &args.centers) {
        (None, None) => {
            let kind = DecayKind::parse(&args.decay)?;
            let decay = decay_values(kind, args.n_functions)?;
            simulate_kl(&basis, &decay, args.n_obs, args.seed)?
        }
        (k, centers) => {
            let k = k.unwrap_or_else(|| {
                centers
                    .as_ref()
                    .map(|c| c.split(';').next().unwrap_or("").split(',').count())
                    .unwrap_or(1)
            });
            let spec = match (centers, &args.cluster_std) {
                (Some(c), Some(s)) => ClusterSpec::with_uniform_mixing(
                    parse_matrix(c, "--centers")?,
                    parse_matrix(s, "--cluster-std")?,
                )?,
                (Some(c), None) => {
                    let centers = parse_matrix(c, "--centers")?;
                    let std = Array2::from_elem(centers.dim(), 1.0);
                    ClusterSpec::with_uniform_mixing(centers, std)?
                }
                (None, _) => {
                    let kind = DecayKind::parse(&args.decay)?;
                    let decay = decay_values(kind, args.n_functions)?;
                    ClusterSpec::from_decay_shorthand(k, &decay)?
                }
            };
            simulate_kl_clusters(&basis, &spec, args.n_obs, args.seed)?
        }
    };
    let sim = finalize(
        sim,
        args.noise,
        args.noisy_out.as_ref(),
        args.sparsify.as_ref(),
        args.sparse_out.as_ref(),
        args.seed,
    )?;
    write_csv_dense(&sim.data, &args.output, "NA")?;
    if let (Some(labels), Some(path)) = (&sim.labels, &args.labels_out) {
        write_labels(path, labels)?;
    }
    Ok(())
}

fn run_brownian(args: BrownianArgs) -> Result<()> {
    let kind = BrownianKind::parse(&args.kind)?;
    let grid = parse_grid_spec(&args.grid)?;
    let params = BrownianParams {
        hurst: args.hurst,
        drift: args.drift,
        sigma: args.sigma,
        x0: args.x0,
    };
    let sim = simulate_brownian(kind, args.n_obs, &grid, &params, args.seed)?;
    let sim = finalize(
        sim,
        args.noise,
        args.noisy_out.as_ref(),
        args.sparsify.as_ref(),
        args.sparse_out.as_ref(),
        args.seed,
    )?;
    write_csv_dense(&sim.data, &args.output, "NA")?;
    Ok(())
}
