//! Locating seed directories under the paths given to `plot` and `compare`.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{IoContext, Result};

pub const TRAIN_CSV: &str = "train.csv";
pub const EVAL_JSON: &str = "eval.json";
pub const CONFIG_TOML: &str = "config.toml";
pub const CHECKPOINT: &str = "checkpoint.bin";

/// One seed directory and what its config snapshot says about it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSource {
    pub dir: PathBuf,
    pub train_csv: PathBuf,
    pub eval_json: PathBuf,
    pub env: String,
    pub mode: String,
    pub label: String,
    pub seed: Option<u64>,
}

impl RunSource {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let config = dir.join(CONFIG_TOML);
        let (env, mode, label) = if config.is_file() {
            let c = ExperimentConfig::load(&config)?.resolved()?;
            (c.env.name.to_string(), c.agent.mode, c.run.label)
        } else {
            let label = dir
                .parent()
                .and_then(Path::file_name)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            ("unknown".to_owned(), "unknown".to_owned(), label)
        };
        let seed = dir
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("seed_"))
            .and_then(|k| k.parse().ok());
        Ok(RunSource {
            dir: dir.to_owned(),
            train_csv: dir.join(TRAIN_CSV),
            eval_json: dir.join(EVAL_JSON),
            env,
            mode,
            label,
            seed,
        })
    }
}

fn is_seed_dir(dir: &Path) -> bool {
    [TRAIN_CSV, EVAL_JSON, CONFIG_TOML].iter().any(|f| dir.join(f).is_file())
}

/// Expands each path into the seed directories beneath it, in sorted order.
/// A path may be a seed directory, any ancestor of seed directories, or a
/// `train.csv` file.
pub fn find_runs(paths: &[PathBuf]) -> Result<Vec<RunSource>> {
    let mut dirs = Vec::new();
    for p in paths {
        if p.is_file() {
            dirs.push(p.parent().unwrap_or(Path::new(".")).to_owned());
        } else {
            collect(p, &mut dirs, 0)?;
        }
    }
    dirs.dedup();
    dirs.iter().map(|d| RunSource::from_dir(d)).collect()
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>, depth: usize) -> Result<()> {
    if is_seed_dir(dir) {
        out.push(dir.to_owned());
        return Ok(());
    }
    if depth > 4 {
        return Ok(());
    }
    let mut children: Vec<PathBuf> = std::fs::read_dir(dir)
        .at(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    children.sort();
    for c in children {
        collect(&c, out, depth + 1)?;
    }
    Ok(())
}
