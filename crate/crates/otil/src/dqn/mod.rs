//! From-scratch deep Q-learning on the classic-control environments.
//!
//! The learner is a small dense network trained with bias-corrected Adam on
//! the mean squared temporal-difference error, a bounded replay buffer
//! sampled without replacement, an ε-greedy behavior policy with exponential
//! decay, and an optional target network synchronized every fixed number of
//! gradient steps.
//!
//! Rewards come from one of two sources. `RewardSource::True` feeds the
//! environment reward into the buffer step by step. `RewardSource::Imitation`
//! ignores the environment reward for learning: each finished episode is
//! relabeled as a whole with optimal-transport pseudo-rewards against a set
//! of expert trajectories, and only then are its transitions pushed. Learning
//! curves always record the true episode return so both modes can be compared
//! on the same scale.
//!
//! Every random choice (initialization, exploration, replay sampling, resets,
//! evaluation, relabeling) draws from its own deterministic stream derived
//! from `DqnConfig::seed`, so a fixed configuration reproduces bit-identical
//! runs.

mod mlp;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use mlp::{
    adam_step, load_params, loss_and_gradient, loss_only, params_from_str, params_to_string,
    save_params, AdamState, Layer, MlpParams, Transition,
};

use crate::demos::ExpertSet;
use crate::envs::{reset, state_vector, step, EnvParams};
use crate::error::{Error, Result};
use crate::reward::{relabel_episode, RewardConfig};
use crate::seeding::derive_seed;

/// Hyperparameters of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub discount: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Multiplicative ε decay applied after every episode.
    pub epsilon_decay: f64,
    /// Target-network refresh period in gradient steps; 0 disables the
    /// target network (targets then come from the online network).
    pub target_sync_interval: usize,
    pub hidden_sizes: Vec<usize>,
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub train_episodes: usize,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.995,
            target_sync_interval: 100,
            hidden_sizes: vec![64, 64],
            replay_capacity: 2000,
            learning_rate: 1e-3,
            train_episodes: 500,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "discount must lie in (0, 1), got {}",
                self.discount
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.replay_capacity < self.batch_size {
            return Err(Error::InvalidArgument(format!(
                "replay_capacity ({}) must be at least batch_size ({})",
                self.replay_capacity, self.batch_size
            )));
        }
        let eps_ok = (0.0..=1.0).contains(&self.epsilon_start)
            && (0.0..=1.0).contains(&self.epsilon_end)
            && self.epsilon_end <= self.epsilon_start;
        if !eps_ok {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= epsilon_end <= epsilon_start <= 1, got end {} start {}",
                self.epsilon_end, self.epsilon_start
            )));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_decay must lie in (0, 1], got {}",
                self.epsilon_decay
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::InvalidArgument(
                "hidden layer sizes must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Where the scalar training signal comes from.
#[derive(Clone, Copy)]
pub enum RewardSource<'a> {
    /// The environment's own reward, pushed transition by transition.
    True,
    /// Optimal-transport pseudo-rewards computed per finished episode from
    /// expert state trajectories.
    Imitation {
        experts: &'a ExpertSet,
        reward: &'a RewardConfig,
    },
}

/// Periodic greedy evaluation used for early stopping.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    /// Evaluate after every `every` training episodes.
    pub every: usize,
    /// Number of greedy episodes to average.
    pub episodes: usize,
    /// Stop training once the evaluation mean reaches this value.
    pub threshold: f64,
}

/// Optional knobs for [`train`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOptions {
    pub eval: Option<EvalSpec>,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    /// True episode returns, one entry per completed training episode.
    pub returns: Vec<f64>,
    pub params: MlpParams,
    /// Episode count (1-based) after which the evaluation threshold was met,
    /// if early stopping triggered.
    pub solved_at: Option<usize>,
    /// Mean return of the most recent evaluation, if any ran.
    pub final_eval: Option<f64>,
}

/// One greedy episode (no exploration) with its recorded pre-step states.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRollout {
    /// States s_0 … s_{L−1}, one per executed action.
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub true_return: f64,
}

/// Bounded FIFO transition store sampled without replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    transitions: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "replay capacity must be >= 1".into(),
            ));
        }
        Ok(Self {
            transitions: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    /// Appends a transition, evicting the oldest one when full.
    pub fn push(&mut self, transition: Transition) {
        if self.transitions.len() == self.capacity {
            self.transitions.pop_front();
        }
        self.transitions.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Draws `amount` distinct transitions uniformly at random.
    pub fn sample(&self, amount: usize, rng: &mut ChaCha8Rng) -> Result<Vec<&Transition>> {
        if amount == 0 || amount > self.transitions.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {amount} transitions from a buffer of {}",
                self.transitions.len()
            )));
        }
        Ok(rand::seq::index::sample(rng, self.transitions.len(), amount)
            .into_iter()
            .map(|i| &self.transitions[i])
            .collect())
    }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy action selection. With probability ε the action is uniform;
/// otherwise it is the greedy argmax with ties broken toward the lowest
/// index. When ε is exactly 0 no randomness is consumed at all.
pub fn act(params: &MlpParams, state: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let action_count = params.output_dim();
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..action_count));
    }
    let q = params.forward(state)?;
    Ok(argmax_lowest(&q))
}

fn check_network_matches_env(env_params: &EnvParams, params: &MlpParams) -> Result<()> {
    if params.input_dim() != env_params.state_dim()
        || params.output_dim() != env_params.action_count()
    {
        return Err(Error::InvalidArgument(format!(
            "network shape {}→{} does not match environment {} ({}→{})",
            params.input_dim(),
            params.output_dim(),
            env_params.env_name(),
            env_params.state_dim(),
            env_params.action_count()
        )));
    }
    Ok(())
}

/// Runs one fully greedy episode from a seeded reset and records the pre-step
/// states and the action taken in each.
pub fn rollout_greedy(
    env_params: &EnvParams,
    params: &MlpParams,
    reset_seed: u64,
) -> Result<GreedyRollout> {
    env_params.validate()?;
    check_network_matches_env(env_params, params)?;
    let mut state = reset(env_params, reset_seed)?;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut true_return = 0.0;
    loop {
        let obs = state_vector(&state);
        let action = argmax_lowest(&params.forward(&obs)?);
        let (next, reward, done) = step(&state, action, env_params)?;
        states.push(obs);
        actions.push(action);
        true_return += reward;
        state = next;
        if done {
            break;
        }
    }
    Ok(GreedyRollout {
        states,
        actions,
        true_return,
    })
}

/// Mean true return of `episodes` greedy episodes with resets seeded from
/// `seed`.
pub fn evaluate_greedy(
    env_params: &EnvParams,
    params: &MlpParams,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut total = 0.0;
    for j in 0..episodes {
        total += rollout_greedy(env_params, params, derive_seed(seed, j as u64))?.true_return;
    }
    Ok(total / episodes as f64)
}

// Per-purpose RNG streams below DqnConfig::seed. Keeping them separate means
// e.g. a different exploration draw cannot shift replay sampling.
const STREAM_INIT: u64 = 0;
const STREAM_ACTION: u64 = 1;
const STREAM_REPLAY: u64 = 2;
const STREAM_RESET: u64 = 3;
const STREAM_EVAL: u64 = 4;
const STREAM_RELABEL: u64 = 5;

/// Trains a Q-network on `env_params` with rewards from `source`.
///
/// One gradient step is taken per environment step once the buffer holds at
/// least one batch. With an imitation source, transitions of the running
/// episode are staged and only pushed after the episode finishes and its
/// pseudo-rewards are computed; with true rewards they are pushed
/// immediately. ε decays multiplicatively after each episode, never below
/// `epsilon_end`. If `options.eval` is set, a periodic greedy evaluation can
/// end training early once its mean return reaches the threshold.
pub fn train(
    env_params: &EnvParams,
    source: RewardSource,
    config: &DqnConfig,
    options: &TrainOptions,
) -> Result<TrainResult> {
    env_params.validate()?;
    config.validate()?;
    if let Some(spec) = &options.eval {
        if spec.every == 0 || spec.episodes == 0 {
            return Err(Error::InvalidArgument(
                "eval period and episode count must be >= 1".into(),
            ));
        }
    }
    if let RewardSource::Imitation { experts, reward } = source {
        reward.validate()?;
        if experts.dim() != env_params.state_dim() {
            return Err(Error::InvalidArgument(format!(
                "expert state dimension {} does not match environment {} (dimension {})",
                experts.dim(),
                env_params.env_name(),
                env_params.state_dim()
            )));
        }
    }

    let mut sizes = Vec::with_capacity(config.hidden_sizes.len() + 2);
    sizes.push(env_params.state_dim());
    sizes.extend_from_slice(&config.hidden_sizes);
    sizes.push(env_params.action_count());

    let mut params = MlpParams::init(&sizes, derive_seed(config.seed, STREAM_INIT))?;
    let mut target = params.clone();
    let mut adam = AdamState::new(&params, config.learning_rate);
    let mut buffer = ReplayBuffer::new(config.replay_capacity)?;
    let mut action_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_ACTION));
    let mut replay_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_REPLAY));
    let reset_stream = derive_seed(config.seed, STREAM_RESET);
    let eval_stream = derive_seed(config.seed, STREAM_EVAL);
    let relabel_stream = derive_seed(config.seed, STREAM_RELABEL);

    let use_target = config.target_sync_interval > 0;
    let mut epsilon = config.epsilon_start;
    let mut gradient_steps: u64 = 0;
    let mut returns = Vec::with_capacity(config.train_episodes);
    let mut solved_at = None;
    let mut final_eval = None;

    for episode in 0..config.train_episodes {
        let mut state = reset(env_params, derive_seed(reset_stream, episode as u64))?;
        let mut episode_return = 0.0;
        // Pre-step states of the running episode; in imitation mode these
        // feed the relabeler and the staged transitions.
        let mut episode_states: Vec<Vec<f64>> = Vec::new();
        let mut staged: Vec<(usize, Vec<f64>, bool)> = Vec::new();
        loop {
            let obs = state_vector(&state);
            let action = act(&params, &obs, epsilon, &mut action_rng)?;
            let (next, true_reward, done) = step(&state, action, env_params)?;
            episode_return += true_reward;
            let next_obs = state_vector(&next);
            match source {
                RewardSource::True => buffer.push(Transition {
                    state: obs,
                    action,
                    reward: true_reward,
                    next_state: next_obs,
                    done,
                }),
                RewardSource::Imitation { .. } => {
                    episode_states.push(obs);
                    staged.push((action, next_obs, done));
                }
            }
            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut replay_rng)?;
                let target_net = if use_target { &target } else { &params };
                let (_, gradient) =
                    loss_and_gradient(&params, target_net, &batch, config.discount)?;
                drop(batch);
                adam_step(&mut params, &mut adam, &gradient)?;
                gradient_steps += 1;
                if use_target && gradient_steps % config.target_sync_interval as u64 == 0 {
                    target = params.clone();
                }
            }
            state = next;
            if done {
                break;
            }
        }
        if let RewardSource::Imitation { experts, reward } = source {
            let relabeled = relabel_episode(
                &episode_states,
                experts,
                reward,
                derive_seed(relabel_stream, episode as u64),
            )?;
            for (i, (obs, (action, next_obs, done))) in episode_states
                .into_iter()
                .zip(staged.into_iter())
                .enumerate()
            {
                buffer.push(Transition {
                    state: obs,
                    action,
                    reward: relabeled.rewards[i],
                    next_state: next_obs,
                    done,
                });
            }
        }
        returns.push(episode_return);
        epsilon = (epsilon * config.epsilon_decay).max(config.epsilon_end);
        if let Some(spec) = &options.eval {
            if (episode + 1) % spec.every == 0 {
                let mean = evaluate_greedy(
                    env_params,
                    &params,
                    spec.episodes,
                    derive_seed(eval_stream, episode as u64),
                )?;
                final_eval = Some(mean);
                if mean >= spec.threshold {
                    solved_at = Some(episode + 1);
                    break;
                }
            }
        }
    }

    Ok(TrainResult {
        returns,
        params,
        solved_at,
        final_eval,
    })
}
