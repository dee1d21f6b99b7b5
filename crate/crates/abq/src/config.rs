//! Experiment configuration.
//!
//! Configs are TOML files with three sections:
//!
//! ```toml
//! [run]
//! label = "pendulum-abq"
//! output = "runs"
//! seeds = [1, 2, 3]
//!
//! [env]
//! name = "pendulum"
//! bins = 25
//!
//! [agent]
//! episodes = 500
//! mode = "abq_max_mean"
//! ```
//!
//! Every omitted key takes its default. [`ExperimentConfig::resolved`] fills
//! in derived values so the snapshot written next to the results is the
//! effective configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use abq_core::agent::AgentConfig;
use abq_core::env::{
    Environment, FactoredEnv, FactoredMdp, Pendulum, PendulumParams, Reacher, ReacherParams,
};
use abq_core::qnet::{BaselineMode, NetWidths};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Pendulum,
    Reacher,
    Factored,
}

impl EnvName {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::Pendulum => "pendulum",
            EnvName::Reacher => "reacher",
            EnvName::Factored => "factored",
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvName::Pendulum),
            "reacher" => Ok(EnvName::Reacher),
            "factored" => Ok(EnvName::Factored),
            other => Err(HarnessError::Config(format!(
                "unknown environment `{other}` (expected pendulum, reacher or factored)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub name: EnvName,
    /// Discrete values per action dimension (pendulum, reacher).
    pub bins: usize,
    /// Action dimensions (reacher, factored).
    pub dims: usize,
    /// Cells per dimension (factored).
    pub positions: usize,
    /// Joint-goal bonus (factored).
    pub coupling: f64,
    /// Seed for the factored MDP's cell rewards.
    pub mdp_seed: u64,
    /// Episode length; environment default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            name: EnvName::Pendulum,
            bins: 25,
            dims: 6,
            positions: 5,
            coupling: 0.0,
            mdp_seed: 0,
            horizon: None,
        }
    }
}

pub type BoxedEnv = Box<dyn Environment + Send>;

impl EnvConfig {
    /// `gamma` is only used by the factored MDP, whose discount is part of
    /// its definition.
    pub fn build(&self, gamma: f64) -> Result<BoxedEnv> {
        Ok(match self.name {
            EnvName::Pendulum => {
                let mut p = PendulumParams::default();
                if let Some(h) = self.horizon {
                    p.horizon = h;
                }
                Box::new(Pendulum::new(self.bins, p)?)
            }
            EnvName::Reacher => {
                let mut p = ReacherParams::default();
                if let Some(h) = self.horizon {
                    p.horizon = h;
                }
                Box::new(Reacher::new(self.dims, self.bins, p)?)
            }
            EnvName::Factored => Box::new(FactoredEnv::new(
                self.factored_mdp(gamma)?,
                self.horizon.unwrap_or(20),
            )),
        })
    }

    pub fn factored_mdp(&self, gamma: f64) -> Result<FactoredMdp> {
        Ok(FactoredMdp::random(
            self.dims,
            self.positions,
            self.coupling,
            gamma,
            self.mdp_seed,
        )?)
    }
}

/// The `[agent]` section; mirrors [`AgentConfig`] with serde defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub episodes: usize,
    pub gamma: f64,
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Defaults to a fifth of `episodes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay_episodes: Option<usize>,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub train_threshold: usize,
    pub target_period: usize,
    pub mode: String,
    pub trunk_hidden: usize,
    pub features: usize,
    pub head_hidden: usize,
}

impl Default for AgentSection {
    fn default() -> Self {
        let a = AgentConfig::default();
        AgentSection {
            episodes: a.episodes,
            gamma: a.gamma,
            lr: a.lr,
            epsilon_start: a.epsilon_start,
            epsilon_end: a.epsilon_end,
            epsilon_decay_episodes: None,
            batch_size: a.batch_size,
            buffer_capacity: a.buffer_capacity,
            train_threshold: a.train_threshold,
            target_period: a.target_period,
            mode: a.baseline_mode.as_str().to_owned(),
            trunk_hidden: a.widths.trunk_hidden,
            features: a.widths.features,
            head_hidden: a.widths.head_hidden,
        }
    }
}

impl AgentSection {
    pub fn mode(&self) -> Result<BaselineMode> {
        Ok(self.mode.parse::<BaselineMode>()?)
    }

    pub fn to_agent_config(&self, seed: u64) -> Result<AgentConfig> {
        let config = AgentConfig {
            gamma: self.gamma,
            lr: self.lr,
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            epsilon_decay_episodes: self.epsilon_decay_episodes.unwrap_or(self.episodes / 5),
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            train_threshold: self.train_threshold,
            target_period: self.target_period,
            episodes: self.episodes,
            baseline_mode: self.mode()?,
            seed,
            widths: NetWidths {
                trunk_hidden: self.trunk_hidden,
                features: self.features,
                head_hidden: self.head_hidden,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub label: String,
    pub output: PathBuf,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            label: "run".into(),
            output: PathBuf::from("runs"),
            seeds: vec![0],
            eval_episodes: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub env: EnvConfig,
    pub agent: AgentSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub episodes: Option<usize>,
    pub mode: Option<BaselineMode>,
    pub env: Option<EnvName>,
    pub output: Option<PathBuf>,
    pub label: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.to_owned(),
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
                .unwrap_or(0),
            message: e.message().to_owned(),
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = &o.seeds {
            self.run.seeds = s.clone();
        }
        if let Some(m) = o.episodes {
            self.agent.episodes = m;
        }
        if let Some(mode) = o.mode {
            self.agent.mode = mode.as_str().to_owned();
        }
        if let Some(e) = o.env {
            self.env.name = e;
        }
        if let Some(p) = &o.output {
            self.run.output = p.clone();
        }
        if let Some(l) = &o.label {
            self.run.label = l.clone();
        }
    }

    /// Derived defaults made explicit and the mode spelled canonically.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        c.agent.mode = c.agent.mode()?.as_str().to_owned();
        c.agent.epsilon_decay_episodes = Some(c.agent.epsilon_decay_episodes.unwrap_or(c.agent.episodes / 5));
        if c.env.horizon.is_none() && c.env.name == EnvName::Factored {
            c.env.horizon = Some(20);
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must not be empty".into()));
        }
        let mut sorted = self.run.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        if self.run.eval_episodes == 0 {
            return Err(HarnessError::Config("eval_episodes must be at least 1".into()));
        }
        if self.run.label.is_empty() || self.run.label.contains(['/', '\\']) {
            return Err(HarnessError::Config(format!("label `{}` is not a directory name", self.run.label)));
        }
        self.agent.to_agent_config(0)?;
        self.env.build(self.agent.gamma)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn run_dir(&self) -> PathBuf {
        self.run.output.join(&self.run.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.agent.to_agent_config(3).unwrap(), AgentConfig { seed: 3, ..AgentConfig::default() });
    }

    #[test]
    fn dotted_keys_and_sections_parse() {
        let c = ExperimentConfig::from_toml(
            "env.name = \"reacher\"\nenv.dims = 4\n[agent]\nmode = \"bdq\"\nepisodes = 10\n",
        )
        .unwrap();
        assert_eq!(c.env.name, EnvName::Reacher);
        assert_eq!(c.env.dims, 4);
        assert_eq!(c.agent.mode().unwrap(), BaselineMode::BdqBranchMean);
        let r = c.resolved().unwrap();
        assert_eq!(r.agent.mode, "bdq_branch_mean");
        assert_eq!(r.agent.epsilon_decay_episodes, Some(2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[agent]\nlearning_rate = 0.1\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            seeds: Some(vec![7]),
            episodes: Some(3),
            mode: Some(BaselineMode::None),
            env: Some(EnvName::Factored),
            ..Overrides::default()
        });
        assert_eq!(c.run.seeds, vec![7]);
        assert_eq!(c.agent.episodes, 3);
        assert_eq!(c.agent.mode, "none");
        assert_eq!(c.env.name, EnvName::Factored);
    }

    #[test]
    fn resolved_round_trips_through_toml() {
        let c = ExperimentConfig::default().resolved().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seeds_must_be_distinct_and_present() {
        let mut c = ExperimentConfig::default();
        c.run.seeds = vec![1, 1];
        assert!(c.validate().is_err());
        c.run.seeds = vec![];
        assert!(c.validate().is_err());
        c.run.seeds = vec![1, 2];
        assert!(c.validate().is_ok());
    }
}
