//! On-disk formats: CSV, the UCR/UEA ts format, and the component manifest
//! for multivariate objects. Loaders never infer data that is not in the
//! file; writers are the exact inverses of the loaders.

mod csv;
mod manifest;
mod ts;

pub use csv::{
    fmt_float, read_csv_dense, read_csv_irregular, read_matrix, render_matrix, write_csv_dense,
    write_csv_irregular, write_matrix, CsvOptions,
};
pub use manifest::{
    read_multivariate, write_multivariate, ComponentEntry, ComponentKind, Manifest,
    MANIFEST_FORMAT, MANIFEST_VERSION,
};
pub use ts::{read_ts, write_ts};
