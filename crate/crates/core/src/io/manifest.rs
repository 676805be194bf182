//! Manifest-based persistence for multivariate and 2-D functional data.
//!
//! Since a single CSV cannot carry several components, a multivariate object
//! is stored as one CSV per component plus a small JSON manifest listing the
//! component order. 2-D domains are flattened row-major into the CSV; both
//! grids then live in the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::data::{DenseFD, FunctionalData, Grid1D, MultivariateFD};
use crate::error::{FdError, Result};
use crate::io::csv::{read_csv_dense, read_csv_irregular, write_csv_dense, write_csv_irregular, CsvOptions};

pub const MANIFEST_FORMAT: &str = "fundata-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub components: Vec<ComponentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub path: String,
    pub kind: ComponentKind,
    pub dims: Vec<String>,
    /// Grids for 2-D components (the flat CSV header cannot carry them).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Dense,
    Irregular,
}

/// Write every component of `mfd` next to `<stem>.manifest.json` inside `dir`.
pub fn write_multivariate(mfd: &MultivariateFD, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for (p, comp) in mfd.iter().enumerate() {
        let file = format!("{stem}_{p}.csv");
        let path = dir.join(&file);
        match comp {
            FunctionalData::Dense(fd) => {
                let dims: Vec<String> = (0..fd.n_dim()).map(|d| fd.dim_name(d)).collect();
                let grids = match fd.n_dim() {
                    1 => {
                        write_csv_dense(fd, &path, "NA")?;
                        None
                    }
                    _ => {
                        write_flat_2d(fd, &path)?;
                        Some(
                            (0..fd.n_dim())
                                .map(|d| fd.grid(d).points().to_vec())
                                .collect(),
                        )
                    }
                };
                entries.push(ComponentEntry {
                    path: file,
                    kind: ComponentKind::Dense,
                    dims,
                    grids,
                });
            }
            FunctionalData::Irregular(fd) => {
                if fd.n_dim() != 1 {
                    return Err(FdError::InvalidParameter(
                        "no on-disk format for 2-D irregular components".into(),
                    ));
                }
                write_csv_irregular(fd, &path, "NA")?;
                entries.push(ComponentEntry {
                    path: file,
                    kind: ComponentKind::Irregular,
                    dims: vec![fd.dim_name(0)],
                    grids: None,
                });
            }
        }
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        version: MANIFEST_VERSION,
        components: entries,
    };
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| FdError::Parse(format!("manifest encoding: {e}")))?;
    let tmp = manifest_path.with_extension("tmp~");
    fs::write(&tmp, json)?;
    fs::rename(&tmp, &manifest_path)?;
    Ok(manifest_path)
}

/// Read a multivariate object back from its manifest; component paths are
/// resolved relative to the manifest location.
pub fn read_multivariate(manifest_path: impl AsRef<Path>) -> Result<MultivariateFD> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| FdError::Parse(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| FdError::Parse(format!("manifest: {e}")))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(FdError::Parse(format!(
            "unexpected manifest format '{}'",
            manifest.format
        )));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let opts = CsvOptions::default();
    let mut comps: Vec<FunctionalData> = Vec::new();
    for entry in &manifest.components {
        let path = base.join(&entry.path);
        let comp = match (entry.kind, &entry.grids) {
            (ComponentKind::Dense, None) => FunctionalData::Dense(read_csv_dense(&path, &opts)?),
            (ComponentKind::Dense, Some(grids)) => {
                FunctionalData::Dense(read_flat_2d(&path, &entry.dims, grids)?)
            }
            (ComponentKind::Irregular, _) => {
                FunctionalData::Irregular(read_csv_irregular(&path, &opts)?)
            }
        };
        comps.push(comp);
    }
    MultivariateFD::new(comps)
}

fn write_flat_2d(fd: &DenseFD, path: &Path) -> Result<()> {
    let (n, m1, m2) = {
        let s = fd.values().shape();
        (s[0], s[1], s[2])
    };
    let flat = fd
        .values()
        .view()
        .into_shape_with_order((n, m1 * m2))
        .map_err(|e| FdError::ShapeMismatch(e.to_string()))?
        .to_owned();
    let header: Vec<String> = (0..m1 * m2).map(|i| i.to_string()).collect();
    crate::io::csv::write_matrix(path, &header, &flat)
}

fn read_flat_2d(path: &Path, dims: &[String], grids: &[Vec<f64>]) -> Result<DenseFD> {
    if grids.len() != 2 || dims.len() != 2 {
        return Err(FdError::Parse("2-D component needs two grids".into()));
    }
    let (_, flat) = crate::io::csv::read_matrix(path)?;
    let (m1, m2) = (grids[0].len(), grids[1].len());
    if flat.ncols() != m1 * m2 {
        return Err(FdError::ShapeMismatch(format!(
            "{} columns vs {}x{} grid",
            flat.ncols(),
            m1,
            m2
        )));
    }
    let n = flat.nrows();
    let values = Array3::from_shape_vec((n, m1, m2), flat.into_raw_vec_and_offset().0)
        .map_err(|e| FdError::ShapeMismatch(e.to_string()))?;
    let mut argvals = IndexMap::new();
    argvals.insert(dims[0].clone(), Grid1D::new(grids[0].clone())?);
    argvals.insert(dims[1].clone(), Grid1D::new(grids[1].clone())?);
    DenseFD::new(argvals, values.into_dyn())
}
