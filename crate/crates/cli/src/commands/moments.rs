//! `fundata moments` - mean and covariance estimation.

use std::path::PathBuf;

use clap::Args;

use fundata_core::error::Result;
use fundata_core::io::{fmt_float, write_csv_dense, write_matrix};
use fundata_core::moments::{estimate_covariance, estimate_mean, MomentOptions};
use fundata_core::smooth::{BandwidthSpec, Kernel, SmoothParams};

use super::read_univariate;

#[derive(Args)]
pub struct MomentsArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    irregular: bool,
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    /// Where to write the mean curve CSV
    #[arg(long = "mean-out")]
    mean_out: Option<PathBuf>,
    /// Where to write the covariance surface CSV (rows = s grid)
    #[arg(long = "cov-out")]
    cov_out: Option<PathBuf>,
    /// Pre-smooth curves (local linear, two-point neighborhood bandwidth)
    #[arg(long = "smooth-curves")]
    smooth_curves: bool,
    /// Keep the raw covariance diagonal (skips the noise-variance estimate)
    #[arg(long = "no-diagonal-correction")]
    no_diagonal_correction: bool,
    /// Fixed relative bandwidth of the 2-D surface smoother
    #[arg(long = "surface-bandwidth")]
    surface_bandwidth: Option<f64>,
}

pub fn run(args: MomentsArgs) -> Result<()> {
    let fd = read_univariate(&args.input, args.irregular, args.index_col)?;
    let opts = MomentOptions {
        mean_smooth: args.smooth_curves.then(|| SmoothParams {
            degree: 1,
            kernel: Kernel::Epanechnikov,
            bandwidth: BandwidthSpec::Knn {
                anchor: f64::NAN,
                neighborhood: 2,
            },
        }),
        cov_smooth: None,
        skip_diagonal_correction: args.no_diagonal_correction,
        surface_bandwidth: args.surface_bandwidth,
    };
    if let Some(path) = &args.mean_out {
        let mean = estimate_mean(&fd, &opts)?;
        write_csv_dense(&mean, path, "NA")?;
    }
    if let Some(path) = &args.cov_out {
        let cov = estimate_covariance(&fd, &opts)?;
        let header: Vec<String> = cov.grid_t.points().iter().map(|p| fmt_float(*p)).collect();
        write_matrix(path, &header, &cov.values)?;
        if let Some(sigma2) = cov.noise_variance {
            println!("noise_variance={}", fmt_float(sigma2));
        }
    }
    Ok(())
}
