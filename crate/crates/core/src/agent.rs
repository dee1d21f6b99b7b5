//! The training loop: ε-greedy control, per-branch TD targets from a
//! periodically synchronized target network, and gradient steps on the
//! branch-averaged squared TD error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::nn::{adam_step, fingerprint, AdamState, Matrix};
use crate::qnet::{
    init_network, max_mean_branch, BaselineMode, BranchingGrads, BranchingNet,
    JointAction, NetWidths,
};
use crate::replay::{ReplayBuffer, Transition};

/// Every knob of the training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which ε decays linearly from start to end.
    pub epsilon_decay_episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Learning starts once the buffer holds more than this many transitions.
    pub train_threshold: usize,
    /// Episodes between hard target-network copies.
    pub target_period: usize,
    pub episodes: usize,
    pub baseline_mode: BaselineMode,
    pub seed: u64,
    pub widths: NetWidths,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::with_episodes(2000)
    }
}

impl AgentConfig {
    /// Defaults with ε decaying over the first fifth of `episodes`.
    pub fn with_episodes(episodes: usize) -> Self {
        AgentConfig {
            gamma: 0.99,
            lr: 1e-4,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: episodes / 5,
            batch_size: 64,
            buffer_capacity: 100_000,
            train_threshold: 1_000,
            target_period: 10,
            episodes,
            baseline_mode: BaselineMode::AbqMaxMean,
            seed: 0,
            widths: NetWidths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad(format!(
                "need 0 <= epsilon_end ({}) <= epsilon_start ({}) <= 1",
                self.epsilon_end, self.epsilon_start
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad(format!(
                "buffer_capacity {} smaller than batch_size {}",
                self.buffer_capacity, self.batch_size
            ));
        }
        if self.target_period == 0 {
            return bad("target_period must be at least 1".into());
        }
        let w = self.widths;
        if w.trunk_hidden == 0 || w.features == 0 || w.head_hidden == 0 {
            return bad("network widths must be positive".into());
        }
        Ok(())
    }

    /// Exploration rate for the 0-based `episode`.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.epsilon_decay_episodes == 0 || episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Telemetry for one completed training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode: usize,
    pub steps: usize,
    pub cumulative_reward: f64,
    pub epsilon: f64,
    /// Mean loss over this episode's gradient steps; 0 when none were taken.
    pub mean_loss: f64,
}

/// An error together with whatever was produced before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Aborted<T> {
    pub error: Error,
    pub partial: T,
}

impl<T> fmt::Display for Aborted<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted: {}", self.error)
    }
}

impl<T: fmt::Debug> core::error::Error for Aborted<T> {}

/// ε-greedy action. A uniform draw is always consumed so the random stream
/// does not depend on the branch taken.
pub fn select_action<R: Rng + ?Sized>(
    net: &BranchingNet,
    state: &[f64],
    epsilon: f64,
    mode: BaselineMode,
    rng: &mut R,
) -> Result<JointAction> {
    let explore: f64 = rng.gen();
    if explore < epsilon {
        let n = net.sub_actions();
        Ok(JointAction::new((0..net.branches()).map(|_| rng.gen_range(0..n)).collect()))
    } else {
        net.greedy(state, mode)
    }
}

fn stack<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>, cols: usize) -> Result<Matrix> {
    let count = rows.len();
    let mut data = Vec::with_capacity(count * cols);
    for r in rows {
        if r.len() != cols {
            return Err(Error::dim("batched state", cols, r.len()));
        }
        data.extend_from_slice(r);
    }
    Matrix::from_vec(count, cols, data)
}

/// Per-branch bootstrap targets, `batch × branches`:
/// `y_i = r + γ·max_j Q̂_i(s′, j)`, or `r` for terminal transitions, with
/// `Q̂` tuned by the target network's own baseline.
pub fn td_targets(target: &BranchingNet, batch: &[&Transition], gamma: f64, mode: BaselineMode) -> Result<Matrix> {
    if batch.is_empty() {
        return Err(Error::dim("transition batch", 1, 0));
    }
    let n = target.branches();
    let next = stack(batch.iter().map(|t| t.next_state.as_slice()), target.state_dim())?;
    let eval = target.evaluate(&next)?;
    let mut out = Matrix::zeros(batch.len(), n);
    let mut best = vec![0.0; n];
    for (b, t) in batch.iter().enumerate() {
        let row = out.row_mut(b);
        if t.done {
            row.fill(t.reward);
        } else {
            eval.branch_max_q(b, mode, &mut best);
            for (y, q) in row.iter_mut().zip(&best) {
                *y = t.reward + gamma * q;
            }
        }
    }
    Ok(out)
}

/// Mean over the batch and over branches of `(y_i − Q_i(s, a_i))²`.
pub fn td_loss(net: &BranchingNet, batch: &[&Transition], targets: &Matrix, mode: BaselineMode) -> Result<f64> {
    loss_impl(net, batch, targets, mode, false).map(|(l, _)| l)
}

/// [`td_loss`] and its gradient with respect to every network parameter,
/// including the path through the baseline.
pub fn loss_and_grads(
    net: &BranchingNet,
    batch: &[&Transition],
    targets: &Matrix,
    mode: BaselineMode,
) -> Result<(f64, BranchingGrads)> {
    loss_impl(net, batch, targets, mode, true).map(|(l, g)| (l, g.expect("gradients requested")))
}

fn loss_impl(
    net: &BranchingNet,
    batch: &[&Transition],
    targets: &Matrix,
    mode: BaselineMode,
    want_grads: bool,
) -> Result<(f64, Option<BranchingGrads>)> {
    let n = net.branches();
    let m = net.sub_actions();
    if batch.is_empty() {
        return Err(Error::dim("transition batch", 1, 0));
    }
    if targets.rows() != batch.len() || targets.cols() != n {
        return Err(Error::Protocol(format!(
            "targets are {}×{} for a batch of {} with {n} branches",
            targets.rows(),
            targets.cols(),
            batch.len()
        )));
    }
    for t in batch {
        t.action.validate(n, m)?;
    }
    let states = stack(batch.iter().map(|t| t.state.as_slice()), net.state_dim())?;
    let eval = net.evaluate(&states)?;

    let scale = 1.0 / (batch.len() * n) as f64;
    let mut loss = 0.0;
    let mut q = vec![0.0; n];
    let mut d_values = vec![0.0; batch.len()];
    let mut d_adv = Matrix::zeros(batch.len(), n * m);
    for (b, t) in batch.iter().enumerate() {
        eval.chosen_q(b, &t.action.indices, mode, &mut q);
        let y = targets.row(b);
        let mut g_sum = 0.0;
        let row = d_adv.row_mut(b);
        for i in 0..n {
            let delta = y[i] - q[i];
            if !delta.is_finite() {
                return Err(Error::Numeric {
                    context: "TD error".into(),
                    index: Some(b),
                });
            }
            loss += delta * delta;
            let g = -2.0 * delta * scale;
            g_sum += g;
            row[i * m + t.action.indices[i]] += g;
            if mode == BaselineMode::BdqBranchMean {
                let share = g / m as f64;
                for d in &mut row[i * m..(i + 1) * m] {
                    *d -= share;
                }
            }
        }
        d_values[b] = g_sum;
        if mode == BaselineMode::AbqMaxMean {
            // Subgradient of the max follows the winning branch.
            let (winner, _) = max_mean_branch(eval.advantages().row(b), m);
            let share = g_sum / m as f64;
            for d in &mut row[winner * m..(winner + 1) * m] {
                *d -= share;
            }
        }
    }
    let loss = loss * scale;
    if !want_grads {
        return Ok((loss, None));
    }
    let grads = net.backward(&eval, &d_values, &d_adv)?;
    Ok((loss, Some(grads)))
}

/// Summary of greedy evaluation returns.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStats {
    pub episodes: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub per_episode: Vec<f64>,
}

impl PolicyStats {
    pub fn from_returns(returns: Vec<f64>) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::Config("need at least one episode".into()));
        }
        let mut sorted = returns.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        Ok(PolicyStats {
            episodes: k,
            mean: returns.iter().sum::<f64>() / k as f64,
            median,
            min: sorted[0],
            max: sorted[k - 1],
            per_episode: returns,
        })
    }
}

fn rollout<E, R, F>(env: &mut E, rng: &mut R, mut policy: F) -> Result<f64>
where
    E: Environment + ?Sized,
    R: rand::RngCore,
    F: FnMut(&[f64], &mut R) -> Result<JointAction>,
{
    env.initialize(rng);
    let mut total = 0.0;
    while !env.is_terminated() {
        let s = env.state();
        let a = policy(&s, rng)?;
        total += env.execute(&a)?;
    }
    Ok(total)
}

/// Greedy rollouts (ε = 0) without any learning.
pub fn evaluate_policy<E, R>(
    net: &BranchingNet,
    env: &mut E,
    episodes: usize,
    mode: BaselineMode,
    rng: &mut R,
) -> Result<PolicyStats, Aborted<Vec<f64>>>
where
    E: Environment + ?Sized,
    R: rand::RngCore,
{
    run_episodes(env, episodes, rng, |s, _| net.greedy(s, mode))
}

/// Uniformly random joint actions; the reference point for "learned anything".
pub fn random_policy<E, R>(env: &mut E, episodes: usize, rng: &mut R) -> Result<PolicyStats, Aborted<Vec<f64>>>
where
    E: Environment + ?Sized,
    R: rand::RngCore,
{
    let (n, m) = (env.branches(), env.sub_actions());
    run_episodes(env, episodes, rng, |_, rng| {
        Ok(JointAction::new((0..n).map(|_| rng.gen_range(0..m)).collect()))
    })
}

fn run_episodes<E, R, F>(env: &mut E, episodes: usize, rng: &mut R, mut policy: F) -> Result<PolicyStats, Aborted<Vec<f64>>>
where
    E: Environment + ?Sized,
    R: rand::RngCore,
    F: FnMut(&[f64], &mut R) -> Result<JointAction>,
{
    let mut returns = Vec::with_capacity(episodes);
    if episodes == 0 {
        return Err(Aborted {
            error: Error::Config("evaluation needs at least one episode".into()),
            partial: returns,
        });
    }
    for _ in 0..episodes {
        match rollout(env, rng, &mut policy) {
            Ok(r) => returns.push(r),
            Err(error) => return Err(Aborted { error, partial: returns }),
        }
    }
    PolicyStats::from_returns(returns).map_err(|error| Aborted {
        error,
        partial: Vec::new(),
    })
}

/// Seed offset separating weight initialization from the run's own stream.
const INIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stateful training loop that advances one episode per call.
pub struct Trainer<E: Environment> {
    config: AgentConfig,
    env: E,
    online: BranchingNet,
    target: BranchingNet,
    optimizer: AdamState,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    episode: usize,
    gradient_steps: u64,
    target_syncs: usize,
}

impl<E: Environment> Trainer<E> {
    pub fn new(config: AgentConfig, env: E) -> Result<Self> {
        config.validate()?;
        let online = init_network(
            env.state_dim(),
            env.branches(),
            env.sub_actions(),
            config.widths,
            config.seed ^ INIT_STREAM,
        )?;
        Self::with_network(config, env, online)
    }

    /// Starts from an existing network (copied into the target).
    pub fn with_network(config: AgentConfig, env: E, online: BranchingNet) -> Result<Self> {
        config.validate()?;
        if online.state_dim() != env.state_dim()
            || online.branches() != env.branches()
            || online.sub_actions() != env.sub_actions()
        {
            return Err(Error::Config(format!(
                "network shape ({}, {}, {}) does not fit environment ({}, {}, {})",
                online.state_dim(),
                online.branches(),
                online.sub_actions(),
                env.state_dim(),
                env.branches(),
                env.sub_actions()
            )));
        }
        let buffer = ReplayBuffer::with_shape(
            config.buffer_capacity,
            env.state_dim(),
            env.branches(),
            env.sub_actions(),
        )?;
        Ok(Trainer {
            optimizer: AdamState::new(&online),
            target: online.clone(),
            online,
            buffer,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            episode: 0,
            gradient_steps: 0,
            target_syncs: 0,
            config,
            env,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn online(&self) -> &BranchingNet {
        &self.online
    }

    pub fn target(&self) -> &BranchingNet {
        &self.target
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Episodes completed so far.
    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    pub fn target_syncs(&self) -> usize {
        self.target_syncs
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.config.episodes
    }

    /// One full episode followed, every `target_period` episodes, by a hard
    /// copy of the online weights into the target network.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let epsilon = self.config.epsilon(self.episode);
        let mode = self.config.baseline_mode;
        self.env.initialize(&mut self.rng);
        let mut state = self.env.state();
        let mut steps = 0;
        let mut total = 0.0;
        let mut loss_sum = 0.0;
        let mut losses = 0usize;

        while !self.env.is_terminated() {
            let action = select_action(&self.online, &state, epsilon, mode, &mut self.rng)?;
            let reward = self.env.execute(&action)?;
            if !reward.is_finite() {
                return Err(Error::Environment(format!("non-finite reward at step {steps}")));
            }
            let next = self.env.state();
            self.buffer.store(Transition {
                state: core::mem::replace(&mut state, next.clone()),
                action,
                reward,
                next_state: next,
                done: self.env.is_terminal(),
            })?;
            if self.buffer.len() > self.config.train_threshold && self.buffer.len() >= self.config.batch_size {
                loss_sum += self.learn()?;
                losses += 1;
            }
            steps += 1;
            total += reward;
        }

        self.episode += 1;
        if self.episode.is_multiple_of(self.config.target_period) {
            self.target = self.online.clone();
            self.target_syncs += 1;
        }
        Ok(EpisodeRecord {
            episode: self.episode,
            steps,
            cumulative_reward: total,
            epsilon,
            mean_loss: if losses == 0 { 0.0 } else { loss_sum / losses as f64 },
        })
    }

    fn learn(&mut self) -> Result<f64> {
        let mode = self.config.baseline_mode;
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let targets = td_targets(&self.target, &batch, self.config.gamma, mode)?;
        let (loss, grads) = loss_and_grads(&self.online, &batch, &targets, mode)?;
        adam_step(&mut self.online, &grads, &mut self.optimizer, self.config.lr)?;
        self.gradient_steps += 1;
        Ok(loss)
    }

    pub fn online_fingerprint(&self) -> u64 {
        fingerprint(&self.online)
    }

    pub fn target_fingerprint(&self) -> u64 {
        fingerprint(&self.target)
    }

    pub fn into_parts(self) -> (BranchingNet, BranchingNet, E) {
        (self.online, self.target, self.env)
    }
}

/// Result of a completed [`train`] call.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub online: BranchingNet,
    pub target: BranchingNet,
    pub records: Vec<EpisodeRecord>,
}

/// Runs `config.episodes` episodes. On failure the records of every episode
/// that completed are returned with the error.
pub fn train<E: Environment>(config: AgentConfig, env: E) -> Result<TrainOutcome, Aborted<Vec<EpisodeRecord>>> {
    let mut trainer = Trainer::new(config, env).map_err(|error| Aborted {
        error,
        partial: Vec::new(),
    })?;
    let mut records = Vec::with_capacity(trainer.config.episodes);
    while !trainer.is_finished() {
        match trainer.run_episode() {
            Ok(r) => records.push(r),
            Err(error) => return Err(Aborted { error, partial: records }),
        }
    }
    let (online, target, _) = trainer.into_parts();
    Ok(TrainOutcome { online, target, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule_shape() {
        let c = AgentConfig::with_episodes(100);
        assert_eq!(c.epsilon_decay_episodes, 20);
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(10) - 0.525).abs() < 1e-12);
        assert_eq!(c.epsilon(20), 0.05);
        assert_eq!(c.epsilon(99), 0.05);
        let mut prev = c.epsilon(0);
        for e in 1..100 {
            assert!(c.epsilon(e) <= prev);
            prev = c.epsilon(e);
        }
    }

    #[test]
    fn config_validation() {
        let ok = AgentConfig::with_episodes(10);
        assert!(ok.validate().is_ok());
        for broken in [
            AgentConfig { gamma: 1.0, ..ok.clone() },
            AgentConfig { epsilon_end: 0.5, epsilon_start: 0.4, ..ok.clone() },
            AgentConfig { epsilon_start: 1.5, ..ok.clone() },
            AgentConfig { target_period: 0, ..ok.clone() },
            AgentConfig { lr: 0.0, ..ok.clone() },
            AgentConfig { batch_size: 0, ..ok.clone() },
        ] {
            assert!(matches!(broken.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn stats_of_a_single_episode() {
        let s = PolicyStats::from_returns(vec![-3.5]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (-3.5, -3.5, -3.5, -3.5));
        let s = PolicyStats::from_returns(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (2.5, 2.5, 1.0, 4.0));
        assert!(PolicyStats::from_returns(vec![]).is_err());
    }
}
