//! Configuration, CSV, SVG and manifest plumbing for the command-line tool.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod svg;

use std::path::Path;

use crate::error::{Error, Result};

pub use config::RunConfig;
pub use csv::CsvTable;
pub use manifest::Manifest;
pub use svg::Chart;

/// Twelve significant digits in scientific notation, e.g. `2.50000000000e-2`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.025), "2.50000000000e-2");
        assert_eq!(fmt_num(-13.09), "-1.30900000000e1");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }
}
