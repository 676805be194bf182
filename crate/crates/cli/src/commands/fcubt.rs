//! `fundata fcubt` - grow, join, and predict with a clustering tree.

use std::path::PathBuf;

use clap::Args;

use fundata_core::error::Result;
use fundata_core::fcubt::{grow, FcubtConfig};
use fundata_core::pca::NComp;

use super::{read_data, write_labels, write_text};

#[derive(Args)]
pub struct FcubtArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    irregular: bool,
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    /// Univariate retention per node (count or variance proportion)
    #[arg(long = "n-comp", default_value = "0.95")]
    n_comp: String,
    #[arg(long = "min-size", default_value_t = 5)]
    min_size: usize,
    #[arg(long = "k-max", default_value_t = 5)]
    k_max: usize,
    #[arg(long, env = "FUNDATA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long = "labels-out")]
    labels_out: Option<PathBuf>,
    #[arg(long = "tree-json")]
    tree_json: Option<PathBuf>,
    #[arg(long = "tree-dot")]
    tree_dot: Option<PathBuf>,
    /// Run the joining pass with this retention
    #[arg(long)]
    join: Option<String>,
    /// Classify the observations of another file with the grown tree
    #[arg(long)]
    predict: Option<PathBuf>,
    #[arg(long = "predict-out")]
    predict_out: Option<PathBuf>,
}

pub fn run(args: FcubtArgs) -> Result<()> {
    let sample = read_data(
        args.input.as_deref(),
        args.manifest.as_deref(),
        args.irregular,
        args.index_col,
    )?;
    let config = FcubtConfig {
        n_comp: NComp::parse(&args.n_comp)?,
        min_size: args.min_size,
        k_max: args.k_max,
        seed: args.seed,
        ..Default::default()
    };
    let mut tree = grow(&sample, config)?;
    if let Some(spec) = &args.join {
        tree.join(&sample, NComp::parse(spec)?)?;
    }
    for w in &tree.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.labels_out {
        write_labels(path, &tree.labels())?;
    }
    if let Some(path) = &args.tree_json {
        write_text(path, &tree.to_json())?;
    }
    if let Some(path) = &args.tree_dot {
        write_text(path, &tree.to_dot())?;
    }
    if let Some(new_path) = &args.predict {
        let new_data = read_data(Some(new_path), None, args.irregular, args.index_col)?;
        let predicted = tree.predict(&new_data)?;
        let out = args
            .predict_out
            .clone()
            .unwrap_or_else(|| new_path.with_extension("labels.csv"));
        write_labels(&out, &predicted)?;
    }
    Ok(())
}
