//! Writers for the LP and MPS file formats, plus an LP reader.
//!
//! Both writers produce byte-identical output for identical models: every
//! section is emitted in model order and numbers use the shortest
//! representation that parses back to the same `f64`.
//!
//! Variable and row names are taken from the model. Characters outside
//! `[A-Za-z0-9_.]` become `_`, a leading digit or dot gets an `x` prefix, and
//! clashes are resolved with a `_<n>` suffix, so the names in a file are
//! stable but may differ from the model's for unusual names.
//!
//! Complementarity hints and binary-level groups used by the internal solver
//! have no file representation and are not written.

mod lp;
mod mps;

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

use crate::model::SingleLevelModel;

pub use lp::{read_lp, write_lp};
pub use mps::write_mps;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Lp,
    Mps,
}

impl ExportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lp" => Some(ExportFormat::Lp),
            "mps" => Some(ExportFormat::Mps),
            _ => None,
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ExportFormat::Lp => "lp",
            ExportFormat::Mps => "mps",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("QuadraticUnsupported: quadratic constraint `{0}` cannot be written in MPS")]
    QuadraticUnsupported(String),
    #[error("LP parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Renders `slm` in the requested format.
pub fn render(slm: &SingleLevelModel, format: ExportFormat) -> Result<String, ExportError> {
    match format {
        ExportFormat::Lp => Ok(write_lp(slm)),
        ExportFormat::Mps => write_mps(slm),
    }
}

pub fn export_model(
    slm: &SingleLevelModel,
    format: ExportFormat,
    path: &Path,
) -> Result<(), ExportError> {
    let text = render(slm, format)?;
    std::fs::write(path, text).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Assigns file-safe unique names, in order.
pub(crate) fn unique_names<'a>(
    names: impl Iterator<Item = &'a str>,
    fallback: &str,
) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in names.enumerate() {
        let mut base: String = raw
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        if base.is_empty() {
            base = format!("{fallback}{i}");
        }
        if base.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            base.insert(0, 'x');
        }
        let mut name = base.clone();
        let mut k = 1;
        while !seen.insert(name.to_ascii_lowercase()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        out.push(name);
    }
    out
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        // no negative zero in files
        "0".into()
    } else {
        // shortest round-trip form, exponent for very large or small values
        let s = format!("{v:?}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sanitized_and_unique() {
        let names = unique_names(["a b", "a_b", "1x", "", "w[1]"].into_iter(), "v");
        assert_eq!(names, vec!["a_b", "a_b_1", "x1x", "v3", "w_1_"]);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(100.0), "100");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }
}
