//! Plain-text samples files: one sample per line, `y x_1 ... x_n`,
//! whitespace separated. Blank lines and `#` comment lines are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cbfl_core::domain::DomainError;
use cbfl_core::Sample;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: cannot parse `{token}` as a number")]
    Number { line: usize, token: String },
    #[error("line {line}: {source}")]
    Sample { line: usize, source: DomainError },
    #[error("line {line}: expected {expected} features, got {got}")]
    Dimension { line: usize, expected: usize, got: usize },
    #[error("no samples")]
    Empty,
}

pub fn parse_samples(text: &str) -> Result<Vec<Sample>, DataError> {
    let mut out: Vec<Sample> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let values = trimmed
            .split_whitespace()
            .map(|token| {
                token.parse::<f64>().map_err(|_| DataError::Number {
                    line,
                    token: token.to_owned(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (y, x) = values.split_first().expect("nonblank line has a token");
        if let Some(first) = out.first() {
            if first.dim() != x.len() {
                return Err(DataError::Dimension {
                    line,
                    expected: first.dim(),
                    got: x.len(),
                });
            }
        }
        out.push(Sample::new(x.to_vec(), *y).map_err(|source| DataError::Sample { line, source })?);
    }
    if out.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_samples(&text)
}

/// Lossless text form: reals are written in their shortest round-trip form.
pub fn format_samples(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        write!(out, "{}", s.y).unwrap();
        for x in &s.x {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}
