//! `fundata smooth` - local polynomial curve denoising.

use std::path::PathBuf;

use clap::Args;

use fundata_core::error::{FdError, Result};
use fundata_core::io::write_csv_dense;
use fundata_core::smooth::{smooth_fd, BandwidthSpec, Kernel, SmoothParams};

use super::{parse_grid_spec, read_univariate};

#[derive(Args)]
pub struct SmoothArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Parse the input as irregular (NA-coded) data
    #[arg(long)]
    irregular: bool,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// gaussian|epanechnikov|tricube|bisquare
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Fixed bandwidth in domain units
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Nearest-distance bandwidth as anchor:neighborhood
    #[arg(long)]
    knn: Option<String>,
    /// Leave-one-out cross-validated bandwidth
    #[arg(long)]
    cv: bool,
    /// Evaluation grid start:stop:count (defaults to the input grid)
    #[arg(long = "out-grid")]
    out_grid: Option<String>,
    /// First input column is a row index
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn run(args: SmoothArgs) -> Result<()> {
    let fd = read_univariate(&args.input, args.irregular, args.index_col)?;
    let kernel = Kernel::parse(&args.kernel)?;
    let bandwidth = match (&args.bandwidth, &args.knn, args.cv) {
        (Some(h), None, false) => BandwidthSpec::Fixed(*h),
        (None, Some(spec), false) => {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 2 {
                return Err(FdError::InvalidParameter(
                    "--knn expects anchor:neighborhood".into(),
                ));
            }
            BandwidthSpec::Knn {
                anchor: parts[0].parse().map_err(|_| {
                    FdError::InvalidParameter(format!("--knn anchor '{}'", parts[0]))
                })?,
                neighborhood: parts[1].parse().map_err(|_| {
                    FdError::InvalidParameter(format!("--knn neighborhood '{}'", parts[1]))
                })?,
            }
        }
        (None, None, true) => BandwidthSpec::Cv,
        (None, None, false) => BandwidthSpec::Knn {
            anchor: f64::NAN, // domain midpoint
            neighborhood: 2,
        },
        _ => {
            return Err(FdError::InvalidParameter(
                "--bandwidth, --knn and --cv are mutually exclusive".into(),
            ))
        }
    };
    let params = SmoothParams {
        degree: args.degree,
        kernel,
        bandwidth,
    };
    let out_grid = args.out_grid.as_deref().map(parse_grid_spec).transpose()?;
    let smoothed = smooth_fd(&fd, &params, out_grid.as_ref())?;
    write_csv_dense(&smoothed, &args.output, "NA")
}
