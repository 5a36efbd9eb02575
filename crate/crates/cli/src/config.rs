//! Flat `key=value` parameter files.
//!
//! One key per line, keys named exactly as the [`SystemParams`] fields.
//! Lines starting with `#` and blank lines are ignored. Missing keys keep
//! their defaults. `tau=inf` disables the block timer and `t_max=auto` runs
//! one epoch per cycle.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use cbfl_core::{ParamError, SystemParams};

pub const KEYS: [&str; 18] = [
    "lambda", "mu", "n_peers", "f", "n_block", "tau", "delta_m", "delta_d", "h", "f_c", "w_up", "w_dn",
    "gamma_up", "gamma_dn", "beta", "epsilon", "e0", "t_max",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot parse `{value}` as {key}")]
    Parse { line: usize, key: String, value: String },
    #[error("invalid {}: {}", .0.key, .0)]
    Invalid(#[from] ParamError),
}

fn real(value: &str) -> Option<f64> {
    value.parse().ok()
}

fn count(value: &str) -> Option<usize> {
    value.parse().ok()
}

fn assign(p: &mut SystemParams, key: &str, value: &str) -> Option<()> {
    match key {
        "lambda" => p.lambda = real(value)?,
        "mu" => p.mu = real(value)?,
        "n_peers" => p.n_peers = count(value)?,
        "f" => p.f = count(value)?,
        "n_block" => p.n_block = count(value)?,
        "tau" => p.tau = real(value)?,
        "delta_m" => p.delta_m = real(value)?,
        "delta_d" => p.delta_d = real(value)?,
        "h" => p.h = real(value)?,
        "f_c" => p.f_c = real(value)?,
        "w_up" => p.w_up = real(value)?,
        "w_dn" => p.w_dn = real(value)?,
        "gamma_up" => p.gamma_up = real(value)?,
        "gamma_dn" => p.gamma_dn = real(value)?,
        "beta" => p.beta = real(value)?,
        "epsilon" => p.epsilon = real(value)?,
        "e0" => p.e0 = real(value)?,
        "t_max" => {
            p.t_max = match value {
                "auto" => None,
                v => Some(count(v)?),
            }
        }
        _ => unreachable!("key checked against KEYS"),
    }
    Some(())
}

/// Parses without validating.
pub fn parse_unchecked(text: &str) -> Result<SystemParams, ConfigError> {
    let mut p = SystemParams::default();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_owned(),
            });
        }
        if !seen.insert(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_owned(),
            });
        }
        assign(&mut p, key, value).ok_or_else(|| ConfigError::Parse {
            line,
            key: key.to_owned(),
            value: value.to_owned(),
        })?;
    }
    Ok(p)
}

pub fn parse_config_str(text: &str) -> Result<SystemParams, ConfigError> {
    Ok(parse_unchecked(text)?.validate()?)
}

pub fn parse_config(path: &Path) -> Result<SystemParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text)
}

/// Writes every key. Reals use the shortest representation that parses
/// back to the same value.
pub fn to_config_string(p: &SystemParams) -> String {
    let t_max = p.t_max.map_or_else(|| "auto".to_owned(), |t| t.to_string());
    let values = [
        p.lambda.to_string(),
        p.mu.to_string(),
        p.n_peers.to_string(),
        p.f.to_string(),
        p.n_block.to_string(),
        p.tau.to_string(),
        p.delta_m.to_string(),
        p.delta_d.to_string(),
        p.h.to_string(),
        p.f_c.to_string(),
        p.w_up.to_string(),
        p.w_dn.to_string(),
        p.gamma_up.to_string(),
        p.gamma_dn.to_string(),
        p.beta.to_string(),
        p.epsilon.to_string(),
        p.e0.to_string(),
        t_max,
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k}={v}\n")).collect()
}
