//! `fundata convert` - dense/irregular CSV and ts format conversions.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use fundata_core::error::{FdError, Result};
use fundata_core::io::{
    read_csv_dense, read_csv_irregular, read_ts, write_csv_dense, write_csv_irregular, write_ts,
    CsvOptions,
};

use super::write_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Common-grid CSV (missing cells as NA)
    DenseCsv,
    /// Union-grid CSV interpreted per-observation (no missing values kept)
    IrregularCsv,
    /// UEA/UCR ts text format
    Ts,
}

#[derive(Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    from: Format,
    #[arg(long, value_enum)]
    to: Format,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long = "index-col")]
    index_col: Option<usize>,
    /// ts class labels to attach when writing ts output (one per line)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Where to keep labels read from a ts input
    #[arg(long = "labels-out")]
    labels_out: Option<PathBuf>,
    /// Problem name stamped into ts output
    #[arg(long = "problem-name", default_value = "fundata")]
    problem_name: String,
}

pub fn run(args: ConvertArgs) -> Result<()> {
    let opts = CsvOptions {
        index_col: args.index_col,
        ..Default::default()
    };
    // normalize to a dense object plus optional labels
    let (dense, labels) = match args.from {
        Format::DenseCsv => (read_csv_dense(&args.input, &opts)?, None),
        Format::IrregularCsv => (read_csv_irregular(&args.input, &opts)?.to_dense(), None),
        Format::Ts => {
            let (fd, labels) = read_ts(&args.input)?;
            (fd, labels)
        }
    };
    if let (Some(labels), Some(path)) = (&labels, &args.labels_out) {
        write_text(path, &format!("label\n{}\n", labels.join("\n")))?;
    }
    match args.to {
        Format::DenseCsv => write_csv_dense(&dense, &args.output, "NA"),
        Format::IrregularCsv => {
            let ir = dense.to_irregular()?;
            write_csv_irregular(&ir, &args.output, "NA")
        }
        Format::Ts => {
            let labels_owned: Option<Vec<String>> = match &args.labels {
                Some(path) => Some(
                    std::fs::read_to_string(path)?
                        .lines()
                        .map(|l| l.trim().to_string())
                        .filter(|l| !l.is_empty() && l != "label")
                        .collect(),
                ),
                None => labels,
            };
            if dense.has_missing() {
                return Err(FdError::MissingValues(
                    "ts output cannot represent missing cells".into(),
                ));
            }
            write_ts(&dense, &args.output, &args.problem_name, labels_owned.as_deref())
        }
    }
}
