//! Reader and writer for the ts text format used by the UEA & UCR time
//! series classification repository.
//!
//! Only equal-length univariate files are supported, matching the dense
//! container semantics. Directives start with `@`; the `@data` section holds
//! one series per line, with an optional `:`-separated class label suffix
//! when `@classLabel true` was declared.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::data::{DenseFD, Grid1D};
use crate::error::{FdError, Result};
use crate::io::csv::fmt_float;

/// Parse a ts file into a dense object on the implicit grid `0..M-1`,
/// plus class labels when the file declares them.
pub fn read_ts(path: impl AsRef<Path>) -> Result<(DenseFD, Option<Vec<String>>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| FdError::Parse(format!("{}: {e}", path.display())))?;
    let mut has_labels = false;
    let mut in_data = false;
    let mut series: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_data {
            if let Some(rest) = line.strip_prefix('@') {
                let lower = rest.to_ascii_lowercase();
                if lower == "data" {
                    in_data = true;
                } else if let Some(v) = lower.strip_prefix("classlabel") {
                    has_labels = v.trim_start().starts_with("true");
                } else if let Some(v) = lower.strip_prefix("univariate") {
                    if v.trim() == "false" {
                        return Err(FdError::Parse(format!(
                            "{}: multivariate ts files are not supported",
                            path.display()
                        )));
                    }
                }
                // other directives (@problemName, @timeStamps, ...) are informational
            } else {
                return Err(FdError::Parse(format!(
                    "{}: expected '@' directive before @data, got '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        let (values_part, label) = if has_labels {
            match line.rsplit_once(':') {
                Some((v, l)) => (v, Some(l.trim().to_string())),
                None => {
                    return Err(FdError::Parse(format!(
                        "{}: missing class label in '{line}'",
                        path.display()
                    )))
                }
            }
        } else {
            (line, None)
        };
        if values_part.contains(':') {
            return Err(FdError::Parse(format!(
                "{}: multi-dimensional series are not supported",
                path.display()
            )));
        }
        let vals = values_part
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    FdError::Parse(format!("{}: bad value '{}'", path.display(), c.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        series.push(vals);
        if let Some(l) = label {
            labels.push(l);
        }
    }

    if !in_data {
        return Err(FdError::Parse(format!(
            "{}: no @data section",
            path.display()
        )));
    }
    if series.is_empty() {
        return Err(FdError::EmptyData(format!(
            "{}: no series in @data",
            path.display()
        )));
    }
    let m = series[0].len();
    if let Some(i) = series.iter().position(|s| s.len() != m) {
        return Err(FdError::Parse(format!(
            "{}: series {} has {} values, expected {m} (variable-length files are unsupported)",
            path.display(),
            i,
            series[i].len()
        )));
    }
    let n = series.len();
    let flat: Vec<f64> = series.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((n, m), flat).expect("consistent shape");
    let grid = Grid1D::new((0..m).map(|i| i as f64).collect())?;
    let fd = DenseFD::from_matrix(grid, values)?;
    Ok((fd, if has_labels { Some(labels) } else { None }))
}

/// Write a dense 1-D object as a ts file; labels, when given, must have one
/// entry per observation.
pub fn write_ts(
    fd: &DenseFD,
    path: impl AsRef<Path>,
    problem_name: &str,
    labels: Option<&[String]>,
) -> Result<()> {
    if fd.n_dim() != 1 {
        return Err(FdError::InvalidParameter(
            "ts output supports 1-D domains only".into(),
        ));
    }
    if fd.has_missing() {
        return Err(FdError::MissingValues(
            "ts files cannot represent missing cells".into(),
        ));
    }
    if let Some(l) = labels {
        if l.len() != fd.n_obs() {
            return Err(FdError::ShapeMismatch(format!(
                "{} labels for {} observations",
                l.len(),
                fd.n_obs()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(&format!("@problemName {problem_name}\n"));
    out.push_str("@timeStamps false\n@univariate true\n");
    match labels {
        Some(l) => {
            let mut classes: Vec<&String> = l.iter().collect();
            classes.sort();
            classes.dedup();
            out.push_str("@classLabel true");
            for c in classes {
                out.push(' ');
                out.push_str(c);
            }
            out.push('\n');
        }
        None => out.push_str("@classLabel false\n"),
    }
    out.push_str("@data\n");
    for (i, row) in fd.obs_matrix().rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        if let Some(l) = labels {
            out.push(':');
            out.push_str(&l[i]);
        }
        out.push('\n');
    }
    let tmp = path.as_ref().with_extension("tmp~");
    fs::write(&tmp, out)?;
    fs::rename(&tmp, path.as_ref())?;
    Ok(())
}
