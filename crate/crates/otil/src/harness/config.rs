//! Experiment configuration: a line-oriented `key = value` format with
//! `[experiment]`, `[reward]`, and `[dqn]` sections.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! # comment                     (also allowed after nothing else on a line)
//! [section]                     (experiment | reward | dqn)
//! key = value                   (must appear under a section header)
//! ```
//!
//! Blank lines are ignored. Unknown sections, unknown keys, duplicate keys,
//! and values that fail to parse are hard errors with their line number -
//! a config either describes exactly one experiment or is rejected.
//!
//! `[experiment]` keys: `env` (cartpole | pendulum, required), `axis`
//! (length | mass), `expert_values` (comma-separated positive reals),
//! `agent_value` (positive real), `modes` (subset of scotil, smmotil),
//! `seeds` (comma-separated distinct integers), `train_episodes`,
//! `expert_train_episodes`, `moving_average_window`, `out_dir`.
//!
//! `[reward]` keys: `projection_count`, `projection_seed`,
//! `combine_strategy` (stratified | uniform_pool), `transform`
//! (negate | exp), `beta`, `absolute_cost`, `fresh_projections`,
//! `recombine_each_episode`, `weights` (comma-separated nonnegative reals
//! summing to 1).
//!
//! `[dqn]` keys: `discount`, `batch_size`, `epsilon_start`, `epsilon_end`,
//! `epsilon_decay`, `target_sync_interval`, `hidden_sizes`
//! (comma-separated), `replay_capacity`, `learning_rate`.
//!
//! Unset keys take the defaults of [`ExperimentConfig::defaults`]; the
//! expert parameter table and per-environment episode budgets follow the
//! diverse-expert experiment setups.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dqn::DqnConfig;
use crate::envs::{CartPoleParams, EnvParams, PendulumParams};
use crate::error::{Error, Result};
use crate::ot::BarycentricWeights;
use crate::reward::{CombineStrategy, RewardConfig, RewardMode, TransformKind};

/// Which classic-control environment the experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    CartPole,
    Pendulum,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Pendulum => "pendulum",
        }
    }
}

/// Which physical parameter varies across the expert set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationAxis {
    Length,
    Mass,
}

impl VariationAxis {
    pub fn name(&self) -> &'static str {
        match self {
            VariationAxis::Length => "length",
            VariationAxis::Mass => "mass",
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub environment: EnvKind,
    pub axis: VariationAxis,
    /// Values of the varied parameter, one expert per value; all positive.
    pub expert_param_values: Vec<f64>,
    /// Value of the varied parameter in the agent's own environment.
    pub agent_param_value: f64,
    /// Reward modes to run, nonempty and distinct.
    pub modes: Vec<RewardMode>,
    /// Training seeds, nonempty and distinct.
    pub seeds: Vec<u64>,
    /// Episode budget per imitation run.
    pub train_episodes: usize,
    /// Episode budget when training each expert on true rewards.
    pub expert_train_episodes: usize,
    pub moving_average_window: usize,
    /// Output directory; the `--out` flag overrides it.
    pub out_dir: String,
    /// Reward engine settings; `mode` is overwritten per run.
    pub reward: RewardConfig,
    /// Learner settings; `train_episodes` and `seed` are overwritten per run.
    pub dqn: DqnConfig,
}

impl ExperimentConfig {
    /// The diverse-expert defaults for one environment and axis: five expert
    /// parameter values bracketing the agent's own, ten seeds, a window of
    /// 50, and desk-scale episode budgets (500 for CartPole, 1000 for
    /// Pendulum).
    pub fn defaults(environment: EnvKind, axis: VariationAxis) -> Self {
        let expert_param_values = match (environment, axis) {
            (EnvKind::CartPole, VariationAxis::Length) => vec![0.1, 0.3, 1.2, 1.5, 2.0],
            (EnvKind::CartPole, VariationAxis::Mass) => vec![0.001, 0.5, 2.1, 5.0, 8.0],
            (EnvKind::Pendulum, VariationAxis::Length) => vec![0.3, 0.5, 1.2, 1.5, 1.7],
            (EnvKind::Pendulum, VariationAxis::Mass) => vec![0.1, 0.6, 1.2, 1.8, 2.0],
        };
        let agent_param_value = match (environment, axis) {
            (EnvKind::CartPole, VariationAxis::Length) => 0.5,
            (EnvKind::CartPole, VariationAxis::Mass) => 1.0,
            (EnvKind::Pendulum, _) => 1.0,
        };
        let train_episodes = match environment {
            EnvKind::CartPole => 500,
            EnvKind::Pendulum => 1000,
        };
        Self {
            environment,
            axis,
            expert_param_values,
            agent_param_value,
            modes: vec![RewardMode::Scotil, RewardMode::Smmotil],
            seeds: (0..10).collect(),
            train_episodes,
            expert_train_episodes: 2000,
            moving_average_window: 50,
            out_dir: "out".to_string(),
            reward: RewardConfig::new(RewardMode::Scotil),
            dqn: DqnConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.expert_param_values.is_empty() {
            return Err(Error::Validation(
                "expert_values must list at least one parameter value".into(),
            ));
        }
        if self
            .expert_param_values
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::Validation(format!(
                "expert parameter values must all be positive reals, got {:?}",
                self.expert_param_values
            )));
        }
        if !(self.agent_param_value.is_finite() && self.agent_param_value > 0.0) {
            return Err(Error::Validation(format!(
                "agent parameter value must be a positive real, got {}",
                self.agent_param_value
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Validation("seeds must be nonempty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Validation(format!(
                "seeds must be distinct, got {:?}",
                self.seeds
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Validation("modes must be nonempty".into()));
        }
        let mut names: Vec<&str> = self.modes.iter().map(|m| m.name()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.modes.len() {
            return Err(Error::Validation(format!(
                "modes must be distinct, got {names:?}"
            )));
        }
        if self.moving_average_window == 0 {
            return Err(Error::Validation(
                "moving_average_window must be >= 1".into(),
            ));
        }
        self.reward.validate()?;
        self.dqn.validate()?;
        self.agent_env().validate()?;
        for env in self.expert_envs() {
            env.validate()?;
        }
        Ok(())
    }

    /// Environment parameters with the varied axis set to `value`; all other
    /// constants stay canonical.
    pub fn env_for_value(&self, value: f64) -> EnvParams {
        match (self.environment, self.axis) {
            (EnvKind::CartPole, VariationAxis::Length) => EnvParams::CartPole(CartPoleParams {
                pole_half_length: value,
                ..CartPoleParams::default()
            }),
            (EnvKind::CartPole, VariationAxis::Mass) => EnvParams::CartPole(CartPoleParams {
                pole_mass: value,
                ..CartPoleParams::default()
            }),
            (EnvKind::Pendulum, VariationAxis::Length) => EnvParams::Pendulum(PendulumParams {
                length: value,
                ..PendulumParams::default()
            }),
            (EnvKind::Pendulum, VariationAxis::Mass) => EnvParams::Pendulum(PendulumParams {
                mass: value,
                ..PendulumParams::default()
            }),
        }
    }

    /// The environment the imitating agent trains in.
    pub fn agent_env(&self) -> EnvParams {
        self.env_for_value(self.agent_param_value)
    }

    /// One perturbed environment per expert parameter value, in order.
    pub fn expert_envs(&self) -> Vec<EnvParams> {
        self.expert_param_values
            .iter()
            .map(|&v| self.env_for_value(v))
            .collect()
    }

    /// Conventional name of the demo file `gen-experts` writes and `train`
    /// reads inside the output directory.
    pub fn demo_file_name(&self) -> String {
        format!(
            "experts_{}_{}.demos",
            self.environment.name(),
            self.axis.name()
        )
    }
}

/// One parsed `key = value` with its 1-based line number.
struct RawEntry {
    line: usize,
    value: String,
}

/// Sections split into key → entry maps; insertion order is irrelevant
/// because every key is namespaced by its section.
#[derive(Default)]
struct RawSections {
    experiment: BTreeMap<String, RawEntry>,
    reward: BTreeMap<String, RawEntry>,
    dqn: BTreeMap<String, RawEntry>,
}

fn split_sections(text: &str) -> Result<RawSections> {
    let mut raw = RawSections::default();
    let mut current: Option<&str> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unterminated section header '{line}'"),
            })?;
            current = match name.trim() {
                "experiment" => Some("experiment"),
                "reward" => Some("reward"),
                "dqn" => Some("dqn"),
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "unknown section '[{other}]' (expected experiment, reward, or dqn)"
                        ),
                    })
                }
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty key".into(),
            });
        }
        let section = match current {
            Some(s) => s,
            None => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("key '{key}' appears before any [section] header"),
                })
            }
        };
        let map = match section {
            "experiment" => &mut raw.experiment,
            "reward" => &mut raw.reward,
            _ => &mut raw.dqn,
        };
        if let Some(previous) = map.get(&key) {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "duplicate key '{key}' in [{section}] (first set on line {})",
                    previous.line
                ),
            });
        }
        map.insert(
            key,
            RawEntry {
                line: line_no,
                value,
            },
        );
    }
    Ok(raw)
}

fn parse_scalar<T: std::str::FromStr>(entry: &RawEntry, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    entry.value.parse::<T>().map_err(|e| Error::Parse {
        line: entry.line,
        message: format!("bad value for '{key}': {e}"),
    })
}

fn parse_bool(entry: &RawEntry, key: &str) -> Result<bool> {
    match entry.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Parse {
            line: entry.line,
            message: format!("bad value for '{key}': expected true or false, got '{other}'"),
        }),
    }
}

fn parse_list<T: std::str::FromStr>(entry: &RawEntry, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    entry
        .value
        .split(',')
        .map(|item| {
            item.trim().parse::<T>().map_err(|e| Error::Parse {
                line: entry.line,
                message: format!("bad list item '{}' for '{key}': {e}", item.trim()),
            })
        })
        .collect()
}

/// Consumes recognized keys from `map`, erroring on anything left over.
fn reject_unknown(map: &BTreeMap<String, RawEntry>, section: &str) -> Result<()> {
    if let Some((key, entry)) = map.iter().next() {
        return Err(Error::Parse {
            line: entry.line,
            message: format!("unknown key '{key}' in [{section}]"),
        });
    }
    Ok(())
}

/// Parses a config file's text. The `[experiment]` section must name the
/// environment; every other key falls back to [`ExperimentConfig::defaults`]
/// for that environment and axis.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw = split_sections(text)?;

    let env_entry = raw.experiment.remove("env").ok_or_else(|| {
        Error::Validation("config must set 'env' in [experiment] (cartpole or pendulum)".into())
    })?;
    let environment = match env_entry.value.as_str() {
        "cartpole" => EnvKind::CartPole,
        "pendulum" => EnvKind::Pendulum,
        other => {
            return Err(Error::Parse {
                line: env_entry.line,
                message: format!("unknown env '{other}' (expected cartpole or pendulum)"),
            })
        }
    };
    let axis = match raw.experiment.remove("axis") {
        None => VariationAxis::Length,
        Some(entry) => match entry.value.as_str() {
            "length" => VariationAxis::Length,
            "mass" => VariationAxis::Mass,
            other => {
                return Err(Error::Parse {
                    line: entry.line,
                    message: format!("unknown axis '{other}' (expected length or mass)"),
                })
            }
        },
    };

    let mut config = ExperimentConfig::defaults(environment, axis);

    if let Some(entry) = raw.experiment.remove("expert_values") {
        config.expert_param_values = parse_list(&entry, "expert_values")?;
    }
    if let Some(entry) = raw.experiment.remove("agent_value") {
        config.agent_param_value = parse_scalar(&entry, "agent_value")?;
    }
    if let Some(entry) = raw.experiment.remove("modes") {
        let names: Vec<String> = parse_list(&entry, "modes")?;
        config.modes = names
            .iter()
            .map(|name| match name.as_str() {
                "scotil" => Ok(RewardMode::Scotil),
                "smmotil" => Ok(RewardMode::Smmotil),
                other => Err(Error::Parse {
                    line: entry.line,
                    message: format!("unknown mode '{other}' (expected scotil or smmotil)"),
                }),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(entry) = raw.experiment.remove("seeds") {
        config.seeds = parse_list(&entry, "seeds")?;
    }
    if let Some(entry) = raw.experiment.remove("train_episodes") {
        config.train_episodes = parse_scalar(&entry, "train_episodes")?;
    }
    if let Some(entry) = raw.experiment.remove("expert_train_episodes") {
        config.expert_train_episodes = parse_scalar(&entry, "expert_train_episodes")?;
    }
    if let Some(entry) = raw.experiment.remove("moving_average_window") {
        config.moving_average_window = parse_scalar(&entry, "moving_average_window")?;
    }
    if let Some(entry) = raw.experiment.remove("out_dir") {
        config.out_dir = entry.value;
    }
    reject_unknown(&raw.experiment, "experiment")?;

    if let Some(entry) = raw.reward.remove("projection_count") {
        config.reward.projection_count = parse_scalar(&entry, "projection_count")?;
    }
    if let Some(entry) = raw.reward.remove("projection_seed") {
        config.reward.projection_seed = parse_scalar(&entry, "projection_seed")?;
    }
    if let Some(entry) = raw.reward.remove("combine_strategy") {
        config.reward.combine_strategy = match entry.value.as_str() {
            "stratified" => CombineStrategy::Stratified,
            "uniform_pool" => CombineStrategy::UniformPool,
            other => {
                return Err(Error::Parse {
                    line: entry.line,
                    message: format!(
                        "unknown combine_strategy '{other}' (expected stratified or uniform_pool)"
                    ),
                })
            }
        };
    }
    if let Some(entry) = raw.reward.remove("transform") {
        config.reward.transform = match entry.value.as_str() {
            "negate" => TransformKind::Negate,
            "exp" => TransformKind::Exp,
            other => {
                return Err(Error::Parse {
                    line: entry.line,
                    message: format!("unknown transform '{other}' (expected negate or exp)"),
                })
            }
        };
    }
    if let Some(entry) = raw.reward.remove("beta") {
        config.reward.beta = parse_scalar(&entry, "beta")?;
    }
    if let Some(entry) = raw.reward.remove("absolute_cost") {
        config.reward.absolute_cost = parse_bool(&entry, "absolute_cost")?;
    }
    if let Some(entry) = raw.reward.remove("fresh_projections") {
        config.reward.fresh_projections = parse_bool(&entry, "fresh_projections")?;
    }
    if let Some(entry) = raw.reward.remove("recombine_each_episode") {
        config.reward.recombine_each_episode = parse_bool(&entry, "recombine_each_episode")?;
    }
    if let Some(entry) = raw.reward.remove("weights") {
        let values: Vec<f64> = parse_list(&entry, "weights")?;
        let weights = BarycentricWeights::new(values).map_err(|e| Error::Parse {
            line: entry.line,
            message: format!("bad weights: {e}"),
        })?;
        config.reward.weights = Some(weights);
    }
    reject_unknown(&raw.reward, "reward")?;

    if let Some(entry) = raw.dqn.remove("discount") {
        config.dqn.discount = parse_scalar(&entry, "discount")?;
    }
    if let Some(entry) = raw.dqn.remove("batch_size") {
        config.dqn.batch_size = parse_scalar(&entry, "batch_size")?;
    }
    if let Some(entry) = raw.dqn.remove("epsilon_start") {
        config.dqn.epsilon_start = parse_scalar(&entry, "epsilon_start")?;
    }
    if let Some(entry) = raw.dqn.remove("epsilon_end") {
        config.dqn.epsilon_end = parse_scalar(&entry, "epsilon_end")?;
    }
    if let Some(entry) = raw.dqn.remove("epsilon_decay") {
        config.dqn.epsilon_decay = parse_scalar(&entry, "epsilon_decay")?;
    }
    if let Some(entry) = raw.dqn.remove("target_sync_interval") {
        config.dqn.target_sync_interval = parse_scalar(&entry, "target_sync_interval")?;
    }
    if let Some(entry) = raw.dqn.remove("hidden_sizes") {
        config.dqn.hidden_sizes = parse_list(&entry, "hidden_sizes")?;
    }
    if let Some(entry) = raw.dqn.remove("replay_capacity") {
        config.dqn.replay_capacity = parse_scalar(&entry, "replay_capacity")?;
    }
    if let Some(entry) = raw.dqn.remove("learning_rate") {
        config.dqn.learning_rate = parse_scalar(&entry, "learning_rate")?;
    }
    reject_unknown(&raw.dqn, "dqn")?;

    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
