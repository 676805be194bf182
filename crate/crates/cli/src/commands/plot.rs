//! `fundata plot` - SVG rendering of curves.

use std::path::PathBuf;

use clap::Args;

use fundata_core::error::{FdError, Result};

use super::{read_labels, read_univariate, write_text};
use crate::svg::{render, PlotSpec};

#[derive(Args)]
pub struct PlotArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    irregular: bool,
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    /// Class labels coloring the curves
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long, default_value = "")]
    xlabel: String,
    #[arg(long, default_value = "")]
    ylabel: String,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn run(args: PlotArgs) -> Result<()> {
    let fd = read_univariate(&args.input, args.irregular, args.index_col)?;
    let labels = args.labels.as_deref().map(read_labels).transpose()?;
    if let Some(l) = &labels {
        if l.len() != fd.n_obs() {
            return Err(FdError::ShapeMismatch(format!(
                "{} labels for {} observations",
                l.len(),
                fd.n_obs()
            )));
        }
    }
    let svg = render(
        &fd,
        labels.as_deref(),
        &PlotSpec {
            title: &args.title,
            xlabel: &args.xlabel,
            ylabel: &args.ylabel,
        },
    );
    write_text(&args.output, &svg)
}
