use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

/// Values read from `--config`. Keys mirror the long flag names with
/// underscores; a flag given on the command line always wins.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub labels: Option<Vec<String>>,
    pub features: Option<Vec<String>>,
    pub delimiter: Option<char>,
    pub no_header: Option<bool>,
    pub separator: Option<String>,

    pub strategy: Option<String>,
    pub kind: Option<String>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub l2_penalty: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,

    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,

    pub truth: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub pred_labels: Option<Vec<String>>,
    pub json: Option<PathBuf>,

    pub depth: Option<usize>,
    pub branching: Option<usize>,
    pub samples_per_leaf: Option<usize>,
    pub n_features: Option<usize>,
    pub leaf_separation: Option<f64>,
    pub level_scale: Option<f64>,
    pub overlap: Option<f64>,
    pub test_fraction: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

pub const WORKERS_ENV: &str = "HIERCLASS_WORKERS";

/// Flag, then config file, then `HIERCLASS_WORKERS`, then 1.
pub fn workers(flag: Option<usize>, file: Option<usize>) -> Result<usize, Failure> {
    let n = match flag.or(file) {
        Some(n) => n,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(Failure::Usage("workers must be at least 1".into()));
    }
    Ok(n)
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required option --{name}")))
}

pub fn delimiter(c: Option<char>) -> Result<u8, Failure> {
    match c.unwrap_or(',') {
        c if c.is_ascii() => Ok(c as u8),
        c => Err(Failure::Usage(format!("delimiter {c:?} is not a single ASCII character"))),
    }
}
