//! Subcommand implementations and shared file helpers.

pub mod convert;
pub mod fcubt;
pub mod fpca;
pub mod moments;
pub mod plot;
pub mod simulate;
pub mod smooth;

use std::path::Path;

use fundata_core::data::{FunctionalData, Grid1D, MultivariateFD};
use fundata_core::error::{FdError, Result};
use fundata_core::io::{read_csv_dense, read_csv_irregular, read_multivariate, CsvOptions};
use fundata_core::numeric::linspace;

/// Parse a `start:stop:count` grid specification (inclusive endpoints).
pub fn parse_grid_spec(spec: &str) -> Result<Grid1D> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(FdError::InvalidParameter(format!(
            "--grid expects start:stop:count, got '{spec}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| FdError::InvalidParameter(format!("--grid start '{}'", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| FdError::InvalidParameter(format!("--grid stop '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| FdError::InvalidParameter(format!("--grid count '{}'", parts[2])))?;
    if count == 0 {
        return Err(FdError::InvalidParameter("--grid count must be positive".into()));
    }
    Grid1D::new(linspace(start, stop, count))
}

/// Parse a `a:b` pair of floats.
pub fn parse_pair(spec: &str, flag: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(FdError::InvalidParameter(format!(
            "{flag} expects a:b, got '{spec}'"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| FdError::InvalidParameter(format!("{flag}: '{}'", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| FdError::InvalidParameter(format!("{flag}: '{}'", parts[1])))?;
    Ok((a, b))
}

/// Load one univariate input per the `--irregular` switch.
pub fn read_univariate(path: &Path, irregular: bool, index_col: Option<usize>) -> Result<FunctionalData> {
    let opts = CsvOptions {
        index_col,
        ..Default::default()
    };
    Ok(if irregular {
        FunctionalData::Irregular(read_csv_irregular(path, &opts)?)
    } else {
        FunctionalData::Dense(read_csv_dense(path, &opts)?)
    })
}

/// Load either a single CSV or a manifest-described multivariate object.
pub fn read_data(
    input: Option<&Path>,
    manifest: Option<&Path>,
    irregular: bool,
    index_col: Option<usize>,
) -> Result<MultivariateFD> {
    match (input, manifest) {
        (Some(path), None) => {
            MultivariateFD::new(vec![read_univariate(path, irregular, index_col)?])
        }
        (None, Some(path)) => read_multivariate(path),
        _ => Err(FdError::InvalidParameter(
            "exactly one of --input and --manifest is required".into(),
        )),
    }
}

/// Write text through a temporary file and an atomic rename.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Integer labels, one per line under a `label` header.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::from("label\n");
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    write_text(path, &out)
}

/// Read a labels file written by [`write_labels`] (a bare list also works).
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.parse::<usize>().is_err()) {
            continue; // header or blank
        }
        labels.push(line.parse::<usize>().map_err(|_| {
            FdError::Parse(format!("labels file: line {} is not an integer", i + 1))
        })?);
    }
    Ok(labels)
}
