//! CSV reading and writing for dense and irregular functional data.
//!
//! The format is plain comma-separated UTF-8: a header row of sampling
//! points, one data row per observation, missing cells written as the
//! `na_token`. Values are printed with 17 significant digits so a
//! write/read round trip reproduces every f64 bit pattern.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::data::{DenseFD, Grid1D, IrregularFD, MISSING};
use crate::error::{FdError, Result};

/// Options controlling CSV parsing.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Column holding a row index to skip (`Some(0)` for a leading index).
    pub index_col: Option<usize>,
    /// Token marking a missing cell; matched case-sensitively.
    pub na_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            index_col: None,
            na_token: "NA".to_string(),
        }
    }
}

/// Format a float with 17 significant digits (always round-trip exact).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn split_row(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn drop_index(cells: Vec<&str>, index_col: Option<usize>) -> Vec<&str> {
    match index_col {
        Some(c) if c < cells.len() => {
            let mut cells = cells;
            cells.remove(c);
            cells
        }
        _ => cells,
    }
}

/// Parse the header either as numeric sampling points or, when any cell is
/// non-numeric, by factorizing labels to consecutive integers 0..M-1 in
/// order of appearance.
fn parse_header(cells: &[&str]) -> Result<Vec<f64>> {
    let numeric: Option<Vec<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
    match numeric {
        Some(points) => Ok(points),
        None => Ok((0..cells.len()).map(|i| i as f64).collect()),
    }
}

fn read_table(path: &Path, opts: &CsvOptions, numeric_header: bool) -> Result<(Vec<f64>, Array2<f64>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| FdError::Parse(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| FdError::Parse(format!("{}: empty file", path.display())))?;
    let header = drop_index(split_row(header_line), opts.index_col);
    if header.is_empty() {
        return Err(FdError::Parse(format!(
            "{}: zero data columns",
            path.display()
        )));
    }
    let grid = if numeric_header {
        header
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    FdError::Parse(format!(
                        "{}: header cell '{c}' is not numeric",
                        path.display()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?
    } else {
        parse_header(&header)?
    };
    let m = grid.len();

    let mut rows: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in lines.enumerate() {
        let cells = drop_index(split_row(line), opts.index_col);
        if cells.len() != m {
            return Err(FdError::Parse(format!(
                "{}: row {} has {} cells, expected {} (ragged row)",
                path.display(),
                lineno + 2,
                cells.len(),
                m
            )));
        }
        for c in cells {
            if c == opts.na_token {
                rows.push(MISSING);
            } else {
                rows.push(c.parse::<f64>().map_err(|_| {
                    FdError::Parse(format!(
                        "{}: row {}: cell '{c}' is not numeric",
                        path.display(),
                        lineno + 2
                    ))
                })?);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(FdError::EmptyData(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let values = Array2::from_shape_vec((n, m), rows).expect("consistent shape");
    Ok((grid, values))
}

/// Load a dense 1-D functional data set: rows are observations, header cells
/// are the sampling points (factorized to 0..M-1 when non-numeric).
pub fn read_csv_dense(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<DenseFD> {
    let (grid, values) = read_table(path.as_ref(), opts, false)?;
    DenseFD::from_matrix(Grid1D::new(grid)?, values)
}

/// Load an irregular data set from a dense CSV with NA-coded absent cells.
/// The header must be numeric since it carries the actual grid values.
pub fn read_csv_irregular(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<IrregularFD> {
    let (grid, values) = read_table(path.as_ref(), opts, true)?;
    DenseFD::from_matrix(Grid1D::new(grid)?, values)?.to_irregular()
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn render_dense(fd: &DenseFD, na_token: &str) -> Result<String> {
    if fd.n_dim() != 1 {
        return Err(FdError::InvalidParameter(
            "CSV output without a manifest supports 1-D domains only".into(),
        ));
    }
    let mut out = String::new();
    let header: Vec<String> = fd.grid(0).points().iter().map(|p| fmt_float(*p)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in fd.obs_matrix().rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| {
                if crate::data::is_missing(v) {
                    na_token.to_string()
                } else {
                    fmt_float(v)
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Write a dense object as CSV (header = grid, missing cells as `na_token`).
pub fn write_csv_dense(fd: &DenseFD, path: impl AsRef<Path>, na_token: &str) -> Result<()> {
    write_atomic(path.as_ref(), &render_dense(fd, na_token)?)
}

/// Write an irregular object as CSV on its union grid with NA fill.
pub fn write_csv_irregular(fd: &IrregularFD, path: impl AsRef<Path>, na_token: &str) -> Result<()> {
    write_atomic(path.as_ref(), &render_dense(&fd.to_dense(), na_token)?)
}

/// Render a plain numeric matrix (no missing handling) with a given header.
pub fn render_matrix(header: &[String], rows: &Array2<f64>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows.rows() {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write a plain numeric matrix as CSV.
pub fn write_matrix(
    path: impl AsRef<Path>,
    header: &[String],
    rows: &Array2<f64>,
) -> Result<()> {
    write_atomic(path.as_ref(), &render_matrix(header, rows))
}

/// Read a plain numeric matrix written by [`write_matrix`].
pub fn read_matrix(path: impl AsRef<Path>) -> Result<(Vec<String>, Array2<f64>)> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = split_row(
        lines
            .next()
            .ok_or_else(|| FdError::Parse("empty file".into()))?,
    )
    .into_iter()
    .map(str::to_string)
    .collect();
    let m = header.len();
    let mut data = Vec::new();
    let mut n = 0;
    for line in lines {
        let cells = split_row(line);
        if cells.len() != m {
            return Err(FdError::Parse("ragged row".into()));
        }
        for c in cells {
            data.push(
                c.parse::<f64>()
                    .map_err(|_| FdError::Parse(format!("cell '{c}' is not numeric")))?,
            );
        }
        n += 1;
    }
    Ok((
        header,
        Array2::from_shape_vec((n, m), data).expect("consistent shape"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tmpfile(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // keep the dir alive by leaking: test-scoped, negligible
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn single_cell_file_with_index() {
        let path = tmpfile("one.csv");
        fs::write(&path, "id,0\na,5.0\n").unwrap();
        let opts = CsvOptions {
            index_col: Some(0),
            ..Default::default()
        };
        let fd = read_csv_dense(&path, &opts).unwrap();
        assert_eq!(fd.n_obs(), 1);
        assert_eq!(fd.obs_matrix()[(0, 0)], 5.0);
    }

    #[test]
    fn ragged_row_rejected() {
        let path = tmpfile("ragged.csv");
        fs::write(&path, "0,1,2\n1.0,2.0\n").unwrap();
        assert!(matches!(
            read_csv_dense(&path, &CsvOptions::default()),
            Err(FdError::Parse(_))
        ));
    }

    #[test]
    fn non_numeric_header_is_factorized() {
        let path = tmpfile("days.csv");
        fs::write(&path, "mon,tue,wed\n1.0,2.0,3.0\n").unwrap();
        let fd = read_csv_dense(&path, &CsvOptions::default()).unwrap();
        assert_eq!(fd.grid(0).points(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn dense_round_trip_exact() {
        let grid = Grid1D::new(vec![0.0, 0.1, 0.2]).unwrap();
        let fd = DenseFD::from_matrix(
            grid,
            array![[1.0 / 3.0, MISSING, 2.0f64.sqrt()], [-0.0, 1e-300, 3.0]],
        )
        .unwrap();
        let path = tmpfile("rt.csv");
        write_csv_dense(&fd, &path, "NA").unwrap();
        let back = read_csv_dense(&path, &CsvOptions::default()).unwrap();
        assert!(back.content_eq(&fd));
    }

    #[test]
    fn irregular_round_trip_exact() {
        let fd = IrregularFD::from_curves(
            "input_dim_0".into(),
            vec![
                (vec![0.0, 0.5], vec![1.0, 1.0 / 7.0]),
                (vec![0.5, 1.0], vec![2.0, 3.0]),
            ],
        )
        .unwrap();
        let path = tmpfile("irr.csv");
        write_csv_irregular(&fd, &path, "NA").unwrap();
        let back = read_csv_irregular(&path, &CsvOptions::default()).unwrap();
        assert!(back.content_eq(&fd));
    }

    #[test]
    fn all_na_observation_rejected_for_irregular() {
        let path = tmpfile("allna.csv");
        fs::write(&path, "0,1\nNA,NA\n1.0,2.0\n").unwrap();
        assert!(read_csv_irregular(&path, &CsvOptions::default()).is_err());
    }

    #[test]
    fn sparse_count_matrix_loads_with_per_observation_grids() {
        // a cohort-style file: wide month grid, 1 to 11 measurements per row
        use rand::{Rng, SeedableRng};
        let months: Vec<i64> = (-18..=42).collect();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(366);
        let n = 40;
        let mut text = months
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",");
        text.push('\n');
        let mut expected_counts = Vec::new();
        let mut used: std::collections::BTreeSet<i64> = std::collections::BTreeSet::new();
        for _ in 0..n {
            let count = rng.random_range(1..=11usize);
            expected_counts.push(count);
            let mut keep: Vec<usize> =
                rand::seq::index::sample(&mut rng, months.len(), count).into_vec();
            keep.sort_unstable();
            let cells: Vec<String> = (0..months.len())
                .map(|j| {
                    if keep.contains(&j) {
                        used.insert(months[j]);
                        format!("{}.5", j)
                    } else {
                        "NA".to_string()
                    }
                })
                .collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let path = tmpfile("cohort.csv");
        fs::write(&path, text).unwrap();
        let fd = read_csv_irregular(&path, &CsvOptions::default()).unwrap();
        assert_eq!(fd.n_obs(), n);
        for (i, &count) in expected_counts.iter().enumerate() {
            assert_eq!(fd.curve(i).0.len(), count, "observation {i}");
        }
        // dense width equals the number of distinct sampling months actually
        // used (set-union oracle computed independently above)
        assert_eq!(fd.to_dense().grid(0).len(), used.len());
    }
}
