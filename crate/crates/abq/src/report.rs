//! `eval.json`: greedy-evaluation statistics for one seed.

use std::path::Path;

use abq_core::agent::PolicyStats;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub episodes: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub per_episode: Vec<f64>,
}

impl From<PolicyStats> for EvalReport {
    fn from(s: PolicyStats) -> Self {
        EvalReport {
            episodes: s.episodes,
            mean: s.mean,
            median: s.median,
            min: s.min,
            max: s.max,
            per_episode: s.per_episode,
        }
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.to_owned(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let r: EvalReport = PolicyStats::from_returns(vec![-3.5, 1.0 / 3.0, 2.0]).unwrap().into();
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.episodes, 3);
        assert_eq!(back.median, 1.0 / 3.0);
    }
}
