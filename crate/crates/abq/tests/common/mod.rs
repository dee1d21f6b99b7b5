#![allow(dead_code)]

use std::path::Path;

use abq::config::{EnvName, ExperimentConfig};

/// A run small enough for debug-free test builds: short pendulum episodes,
/// small layers and early learning.
pub fn tiny_config(output: &Path, label: &str, seeds: &[u64]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.run.label = label.into();
    c.run.output = output.to_owned();
    c.run.seeds = seeds.to_vec();
    c.run.eval_episodes = 3;
    c.env.name = EnvName::Pendulum;
    c.env.bins = 5;
    c.env.horizon = Some(20);
    c.agent.episodes = 6;
    c.agent.batch_size = 8;
    c.agent.train_threshold = 30;
    c.agent.target_period = 3;
    c.agent.trunk_hidden = 12;
    c.agent.features = 8;
    c.agent.head_hidden = 6;
    c
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Reference per-task greedy means, abq_max_mean then bdq_branch_mean.
pub const REFERENCE_MEANS: [(&str, f64, f64); 3] = [
    ("task_a", 7476.495, 7225.685),
    ("task_b", 2616.607, 964.881),
    ("task_c", 415.080, 225.523),
];

/// Writes a seed directory holding only config.toml and eval.json.
pub fn write_eval_fixture(dir: &Path, env: EnvName, mode: &str, mean: f64) {
    let mut c = ExperimentConfig::default();
    c.env.name = env;
    c.agent.mode = mode.into();
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("config.toml"), c.to_toml()).unwrap();
    let report = abq::report::EvalReport {
        episodes: 1,
        mean,
        median: mean,
        min: mean,
        max: mean,
        per_episode: vec![mean],
    };
    report.save(&dir.join("eval.json")).unwrap();
}
