//! Command-line front end: configuration files, experiment commands and
//! the on-disk formats they emit.

use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod formats;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BLOWUP_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "blowup-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] blowup::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{file}, line {line}: {message}")]
    Csv { file: String, line: u64, message: String },

    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input (configuration, arguments), 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Argument(_) | CliError::Core(blowup::Error::Config { .. }) => 2,
            _ => 1,
        }
    }
}

/// `a,b,c` as a list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Argument(format!("`{t}` is not a number")))
        })
        .collect()
}

/// `lo,hi` with `lo < hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    match parse_list(s)?.as_slice() {
        &[lo, hi] if lo < hi => Ok((lo, hi)),
        _ => Err(CliError::Argument(format!("`{s}` is not a window `lo,hi` with lo < hi"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_parsers() {
        assert_eq!(parse_list("1e-6, 1e-8").unwrap(), vec![1e-6, 1e-8]);
        assert!(parse_list("1e-6,x").is_err());
        assert_eq!(parse_window("0.9,1.4").unwrap(), (0.9, 1.4));
        assert!(parse_window("1.4,0.9").is_err());
        assert!(parse_window("1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(blowup::Error::config("a", "b")).exit_code(), 2);
        assert_eq!(CliError::Core(blowup::Error::Calibration { target_digits: 5 }).exit_code(), 1);
    }
}
