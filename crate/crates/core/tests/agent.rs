mod common;

use abq_core::agent::{
    evaluate_policy, loss_and_grads, random_policy, select_action, td_loss, td_targets, train, AgentConfig, Trainer,
};
use abq_core::env::{Environment, Pendulum, PendulumParams};
use abq_core::nn::{adam_step, finite_diff_check, fingerprint, AdamState, Coordinates, Matrix, ParamSet};
use abq_core::qnet::{init_network, BaselineMode, BranchingNet, JointAction};
use abq_core::replay::Transition;
use abq_core::{Error, Result};
use common::{small_widths, uniform_chi_square_p};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(net: &BranchingNet, size: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
    let d = net.state_dim();
    (0..size)
        .map(|_| Transition {
            state: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: JointAction::new((0..net.branches()).map(|_| rng.gen_range(0..net.sub_actions())).collect()),
            reward: rng.gen_range(-2.0..2.0),
            next_state: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            done: rng.gen_bool(0.2),
        })
        .collect()
}

fn chosen_q(net: &BranchingNet, batch: &[&Transition], mode: BaselineMode) -> Matrix {
    let n = net.branches();
    let mut out = Matrix::zeros(batch.len(), n);
    for (b, t) in batch.iter().enumerate() {
        let eval = net.evaluate(&Matrix::from_rows(&[t.state.as_slice()]).unwrap()).unwrap();
        let q = eval.q_table(0, mode).unwrap();
        for i in 0..n {
            out.set(b, i, q.get(i, t.action.indices[i]));
        }
    }
    out
}

#[test]
fn matching_targets_give_zero_loss_and_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = init_network(4, 3, 5, small_widths(), 2).unwrap();
    let batch = random_batch(&net, 6, &mut rng);
    let refs: Vec<&Transition> = batch.iter().collect();
    for mode in BaselineMode::ALL {
        let targets = chosen_q(&net, &refs, mode);
        let (loss, grads) = loss_and_grads(&net, &refs, &targets, mode).unwrap();
        assert!(loss < 1e-28, "{mode}: {loss}");
        assert!(grads.slices().concat().iter().all(|g| g.abs() < 1e-12));

        // One optimizer step from a zero gradient leaves the weights alone.
        let mut stepped = net.clone();
        let mut state = AdamState::new(&stepped);
        adam_step(&mut stepped, &grads, &mut state, 1e-4).unwrap();
        let drift = stepped
            .slices()
            .concat()
            .iter()
            .zip(net.slices().concat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-4 * 1e-2, "{mode}: {drift}");
    }
}

#[test]
fn error_of_two_gives_loss_four() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = init_network(2, 1, 3, small_widths(), 4).unwrap();
    let batch = random_batch(&net, 1, &mut rng);
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut targets = chosen_q(&net, &refs, BaselineMode::AbqMaxMean);
    targets.set(0, 0, targets.get(0, 0) + 2.0);
    let loss = td_loss(&net, &refs, &targets, BaselineMode::AbqMaxMean).unwrap();
    assert!((loss - 4.0).abs() < 1e-12, "{loss}");
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (k, mode) in BaselineMode::ALL.into_iter().enumerate() {
        let net = init_network(3, 3, 4, small_widths(), 30 + k as u64).unwrap();
        let target = init_network(3, 3, 4, small_widths(), 40 + k as u64).unwrap();
        let batch = random_batch(&net, 5, &mut rng);
        let refs: Vec<&Transition> = batch.iter().collect();
        let targets = td_targets(&target, &refs, 0.9, mode).unwrap();
        let (_, grads) = loss_and_grads(&net, &refs, &targets, mode).unwrap();
        let err = finite_diff_check(
            |p: &BranchingNet| td_loss(p, &refs, &targets, mode),
            &net,
            &grads,
            1e-5,
            Coordinates::All,
        )
        .unwrap();
        assert!(err < 1e-4, "{mode}: {err}");
    }
}

#[test]
fn non_finite_target_names_the_transition() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = init_network(2, 2, 3, small_widths(), 1).unwrap();
    let batch = random_batch(&net, 3, &mut rng);
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut targets = Matrix::zeros(3, 2);
    targets.set(2, 1, f64::NAN);
    let err = td_loss(&net, &refs, &targets, BaselineMode::AbqMaxMean).unwrap_err();
    assert!(matches!(err, Error::Numeric { index: Some(2), .. }), "{err}");
}

#[test]
fn terminal_targets_do_not_bootstrap() {
    let target = init_network(2, 3, 4, small_widths(), 9).unwrap();
    let t = Transition {
        state: vec![0.1, 0.2],
        action: JointAction::new(vec![0, 1, 2]),
        reward: -1.0,
        next_state: vec![0.5, -0.5],
        done: true,
    };
    for mode in BaselineMode::ALL {
        let y = td_targets(&target, &[&t], 0.99, mode).unwrap();
        assert_eq!(y.row(0), &[-1.0, -1.0, -1.0]);
    }
}

#[test]
fn myopic_and_zero_network_targets_are_the_reward() {
    let live = init_network(2, 2, 3, small_widths(), 9).unwrap();
    let zero = BranchingNet::zeros(2, 2, 3, small_widths()).unwrap();
    let t = Transition {
        state: vec![0.1, 0.2],
        action: JointAction::new(vec![0, 1]),
        reward: 0.75,
        next_state: vec![0.5, -0.5],
        done: false,
    };
    assert_eq!(td_targets(&live, &[&t], 0.0, BaselineMode::AbqMaxMean).unwrap().row(0), &[0.75, 0.75]);
    assert_eq!(td_targets(&zero, &[&t], 0.99, BaselineMode::BdqBranchMean).unwrap().row(0), &[0.75, 0.75]);
}

#[test]
fn bootstrap_uses_per_branch_max_of_target_q() {
    let target = init_network(2, 3, 4, small_widths(), 12).unwrap();
    let t = Transition {
        state: vec![0.0, 0.0],
        action: JointAction::new(vec![0, 0, 0]),
        reward: 0.5,
        next_state: vec![0.3, -0.8],
        done: false,
    };
    for mode in BaselineMode::ALL {
        let y = td_targets(&target, &[&t], 0.9, mode).unwrap();
        let eval = target.evaluate(&Matrix::from_rows(&[t.next_state.as_slice()]).unwrap()).unwrap();
        let q = eval.q_table(0, mode).unwrap();
        for i in 0..3 {
            let best = (0..4).map(|j| q.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
            assert!((y.get(0, i) - (0.5 + 0.9 * best)).abs() < 1e-12);
        }
    }
}

#[test]
fn greedy_choice_with_epsilon_zero() {
    let net = init_network(3, 4, 6, small_widths(), 3).unwrap();
    let state = [0.2, -0.4, 0.9];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let greedy = net.greedy(&state, BaselineMode::AbqMaxMean).unwrap();
    for _ in 0..50 {
        assert_eq!(select_action(&net, &state, 0.0, BaselineMode::AbqMaxMean, &mut rng).unwrap(), greedy);
    }
    // Argmax invariance: the baseline never changes the greedy choice.
    for mode in BaselineMode::ALL {
        assert_eq!(net.greedy(&state, mode).unwrap(), greedy);
    }
}

#[test]
fn hand_set_q_rows_pick_argmax() {
    // Zero trunk output, value 0, branch biases carry the advantages.
    let mut net = BranchingNet::zeros(1, 2, 2, small_widths()).unwrap();
    let mut slices = net.slices_mut();
    let count = slices.len();
    // The last layer of each branch head is weights then bias.
    let b1 = slices.len() - 1;
    slices[b1].copy_from_slice(&[0.0, 1.0]);
    let b0 = count - 5;
    slices[b0].copy_from_slice(&[1.0, 0.0]);
    drop(slices);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = select_action(&net, &[0.0], 0.0, BaselineMode::AbqMaxMean, &mut rng).unwrap();
    assert_eq!(a.indices, vec![0, 1]);
}

#[test]
fn full_exploration_is_uniform() {
    let net = init_network(2, 3, 5, small_widths(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut counts = vec![[0u64; 5]; 3];
    for _ in 0..10_000 {
        let a = select_action(&net, &[0.1, 0.2], 1.0, BaselineMode::AbqMaxMean, &mut rng).unwrap();
        for (i, &j) in a.indices.iter().enumerate() {
            counts[i][j] += 1;
        }
    }
    for c in &counts {
        let p = uniform_chi_square_p(c);
        assert!(p > 0.001, "{c:?}: p = {p}");
    }
}

fn tiny_config(episodes: usize, seed: u64) -> AgentConfig {
    AgentConfig {
        batch_size: 8,
        train_threshold: 30,
        target_period: 3,
        seed,
        widths: small_widths(),
        ..AgentConfig::with_episodes(episodes)
    }
}

fn short_pendulum() -> Pendulum {
    Pendulum::new(
        5,
        PendulumParams {
            horizon: 20,
            ..PendulumParams::default()
        },
    )
    .unwrap()
}

#[test]
fn identical_seeds_give_identical_records() {
    let a = train(tiny_config(6, 3), short_pendulum()).unwrap();
    let b = train(tiny_config(6, 3), short_pendulum()).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(fingerprint(&a.online), fingerprint(&b.online));
    let c = train(tiny_config(6, 4), short_pendulum()).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn zero_episodes_leave_the_network_untouched() {
    let config = tiny_config(0, 5);
    let env = short_pendulum();
    let init = Trainer::new(config.clone(), short_pendulum()).unwrap().online_fingerprint();
    let out = train(config, env).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(fingerprint(&out.online), init);
    assert_eq!(fingerprint(&out.target), init);
}

#[test]
fn threshold_above_total_steps_means_no_learning() {
    let mut config = tiny_config(4, 5);
    config.train_threshold = 4 * 20;
    let mut t = Trainer::new(config, short_pendulum()).unwrap();
    let init = t.online_fingerprint();
    while !t.is_finished() {
        let r = t.run_episode().unwrap();
        assert_eq!(r.mean_loss, 0.0);
    }
    assert_eq!(t.gradient_steps(), 0);
    assert_eq!(t.online_fingerprint(), init);
}

#[test]
fn one_gradient_step_per_step_past_threshold() {
    let mut t = Trainer::new(tiny_config(3, 5), short_pendulum()).unwrap();
    while !t.is_finished() {
        t.run_episode().unwrap();
    }
    // Buffer sizes 31..=60 pass the `> 30` guard.
    assert_eq!(t.gradient_steps(), 30);
}

#[test]
fn target_tracks_online_only_at_syncs() {
    let mut t = Trainer::new(tiny_config(10, 6), short_pendulum()).unwrap();
    let mut synced = t.online_fingerprint();
    while !t.is_finished() {
        let r = t.run_episode().unwrap();
        if r.episode % 3 == 0 {
            synced = t.online_fingerprint();
        }
        assert_eq!(t.target_fingerprint(), synced, "episode {}", r.episode);
        if r.episode % 3 != 0 && t.gradient_steps() > 0 {
            assert_ne!(t.online_fingerprint(), t.target_fingerprint());
        }
    }
    assert_eq!(t.target_syncs(), 3);
}

#[test]
fn epsilon_schedule_is_recorded() {
    let out = train(tiny_config(10, 1), short_pendulum()).unwrap();
    let eps: Vec<f64> = out.records.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps[0], 1.0);
    assert!((eps[1] - 0.525).abs() < 1e-12);
    assert!(eps[2..].iter().all(|&e| e == 0.05));
    assert!(out.records.iter().enumerate().all(|(k, r)| r.episode == k + 1 && r.steps == 20));
}

/// Counts steps and fails on a chosen one.
struct Faulty {
    steps: usize,
    fail_at: usize,
    t: usize,
}

impl Environment for Faulty {
    fn state_dim(&self) -> usize {
        1
    }
    fn branches(&self) -> usize {
        1
    }
    fn sub_actions(&self) -> usize {
        2
    }
    fn initialize(&mut self, _: &mut dyn RngCore) {
        self.t = 0;
    }
    fn state(&self) -> Vec<f64> {
        vec![self.t as f64]
    }
    fn execute(&mut self, a: &JointAction) -> Result<f64> {
        self.steps += 1;
        self.t += 1;
        if self.steps == self.fail_at {
            return Err(Error::Environment("sensor fault".into()));
        }
        Ok(a.indices[0] as f64)
    }
    fn is_terminated(&self) -> bool {
        self.t >= 5
    }
}

#[test]
fn environment_fault_returns_completed_records() {
    let env = Faulty {
        steps: 0,
        fail_at: 13,
        t: 0,
    };
    let err = train(tiny_config(5, 0), env).unwrap_err();
    assert_eq!(err.partial.len(), 2);
    assert!(matches!(err.error, Error::Environment(_)));
}

#[test]
fn evaluation_of_a_deterministic_task() {
    let net = init_network(1, 1, 2, small_widths(), 0).unwrap();
    let mut env = Faulty {
        steps: 0,
        fail_at: usize::MAX,
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let stats = evaluate_policy(&net, &mut env, 7, BaselineMode::AbqMaxMean, &mut rng).unwrap();
    assert_eq!(stats.episodes, 7);
    assert!(stats.per_episode.iter().all(|&r| r == stats.per_episode[0]));

    let one = evaluate_policy(&net, &mut env, 1, BaselineMode::AbqMaxMean, &mut rng).unwrap();
    assert_eq!(one.mean, one.min);
    assert_eq!(one.min, one.max);

    let before = fingerprint(&net);
    let _ = random_policy(&mut env, 3, &mut rng).unwrap();
    assert_eq!(fingerprint(&net), before);
}

#[test]
fn evaluation_fault_keeps_finished_returns() {
    let net = init_network(1, 1, 2, small_widths(), 0).unwrap();
    let mut env = Faulty {
        steps: 0,
        fail_at: 12,
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let err = evaluate_policy(&net, &mut env, 5, BaselineMode::None, &mut rng).unwrap_err();
    assert_eq!(err.partial.len(), 2);
    assert!(evaluate_policy(&net, &mut env, 0, BaselineMode::None, &mut rng).is_err());
}
