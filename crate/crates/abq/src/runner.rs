//! Seeded experiment runs.
//!
//! `run_experiment` produces
//!
//! ```text
//! <output>/<label>/summary.json
//! <output>/<label>/seed_<k>/{train.csv, eval.json, checkpoint.bin, config.toml}
//! ```
//!
//! Seeds are independent jobs (own environment, network, buffer, generator
//! and directory) and may run on several threads.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use abq_core::agent::{evaluate_policy, EpisodeRecord, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::{self, CheckpointMeta};
use crate::config::ExperimentConfig;
use crate::csvlog;
use crate::curves::final_window_mean;
use crate::discover::{CHECKPOINT, CONFIG_TOML, EVAL_JSON, TRAIN_CSV};
use crate::error::{HarnessError, IoContext, Result};
use crate::report::EvalReport;

/// Offset between a seed's training stream and its evaluation stream.
const EVAL_STREAM: u64 = 0x5eed_e7a1;

/// Per-episode callback, called from the seed's worker thread.
pub type Progress<'a> = &'a (dyn Fn(u64, &EpisodeRecord) + Sync);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub dir: PathBuf,
    pub episodes: usize,
    pub final_window_mean: Option<f64>,
    pub eval_mean: f64,
    pub eval_median: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub env: String,
    pub mode: String,
    pub seeds: Vec<SeedSummary>,
    /// Median over seeds of the final window-100 training return.
    pub median_final_window_mean: Option<f64>,
    pub median_eval_mean: Option<f64>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Fails with an I/O error unless `dir` can be created and written to.
pub fn probe_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).at(dir)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").at(&probe)?;
    std::fs::remove_file(&probe).at(&probe)
}

/// Trains, evaluates and writes every artifact for one seed of an already
/// resolved config.
pub fn run_seed(config: &ExperimentConfig, seed: u64, dir: &Path, progress: Option<Progress>) -> Result<SeedSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(dir).at(dir)?;

    let mut snapshot = config.clone();
    snapshot.run.seeds = vec![seed];
    let snap_path = dir.join(CONFIG_TOML);
    std::fs::write(&snap_path, snapshot.to_toml()).at(&snap_path)?;

    let agent = config.agent.to_agent_config(seed)?;
    let mode = agent.baseline_mode;
    let gamma = agent.gamma;
    let mut trainer = Trainer::new(agent, config.env.build(gamma)?)?;
    let mut records = Vec::with_capacity(config.agent.episodes);
    while !trainer.is_finished() {
        match trainer.run_episode() {
            Ok(r) => {
                if let Some(p) = progress {
                    p(seed, &r);
                }
                records.push(r);
            }
            Err(source) => {
                csvlog::save(&dir.join(TRAIN_CSV), &records)?;
                return Err(HarnessError::Run { seed, source });
            }
        }
    }
    csvlog::save(&dir.join(TRAIN_CSV), &records)?;

    let (online, _, _) = trainer.into_parts();
    let meta = CheckpointMeta::new(&online, mode, seed, records.len(), gamma, config.env.clone());
    checkpoint::save(&dir.join(CHECKPOINT), &online, &meta)?;

    let mut env = config.env.build(gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ EVAL_STREAM);
    let stats = evaluate_policy(&online, &mut env, config.run.eval_episodes, mode, &mut rng)
        .map_err(|a| HarnessError::Run { seed, source: a.error })?;
    let report = EvalReport::from(stats);
    report.save(&dir.join(EVAL_JSON))?;

    let returns: Vec<f64> = records.iter().map(|r| r.cumulative_reward).collect();
    Ok(SeedSummary {
        seed,
        dir: dir.to_owned(),
        episodes: records.len(),
        final_window_mean: final_window_mean(&returns, 100),
        eval_mean: report.mean,
        eval_median: report.median,
        wall_time: start.elapsed(),
    })
}

/// Greedy evaluation of a saved checkpoint on the environment recorded in it.
pub fn evaluate_checkpoint(path: &Path, episodes: usize, seed: Option<u64>) -> Result<EvalReport> {
    let (net, meta) = checkpoint::load(path)?;
    let mut env = meta.env.build(meta.gamma)?;
    meta.expect_shape(env.state_dim(), env.branches(), env.sub_actions())?;
    let seed = seed.unwrap_or(meta.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ EVAL_STREAM);
    let stats = evaluate_policy(&net, &mut env, episodes, meta.mode()?, &mut rng)
        .map_err(|a| HarnessError::Run { seed, source: a.error })?;
    Ok(stats.into())
}

/// Runs every seed of `config` using up to `jobs` threads.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize, progress: Option<Progress>) -> Result<RunSummary> {
    config.validate()?;
    let config = config.resolved()?;
    let root = config.run_dir();
    probe_writable(&root)?;

    let seeds = &config.run.seeds;
    let results: Vec<Mutex<Option<Result<SeedSummary>>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = seeds.get(i) else { break };
                let dir = root.join(format!("seed_{seed}"));
                let r = run_seed(&config, seed, &dir, progress);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });

    let mut summaries = Vec::with_capacity(seeds.len());
    for slot in results {
        summaries.push(slot.into_inner().unwrap().expect("every seed ran")?);
    }
    let finals: Vec<f64> = summaries.iter().filter_map(|s| s.final_window_mean).collect();
    let evals: Vec<f64> = summaries.iter().map(|s| s.eval_mean).collect();
    let summary = RunSummary {
        label: config.run.label.clone(),
        env: config.env.name.to_string(),
        mode: config.agent.mode.clone(),
        seeds: summaries,
        median_final_window_mean: crate::curves::median(&finals),
        median_eval_mean: crate::curves::median(&evals),
    };
    let path = root.join("summary.json");
    std::fs::write(&path, summary.to_json()).at(&path)?;
    Ok(summary)
}
