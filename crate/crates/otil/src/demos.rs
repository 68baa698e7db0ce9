//! Expert demonstrations: recording, resampling, file format, generation.
//!
//! # Demo file format (version 1.0)
//!
//! Line-oriented text, one record per trajectory:
//!
//! ```text
//! {"version":"1.0","env":"cartpole","params":{...},"seed":7,"true_return":200.0,"dim":4,"len":200,"has_actions":true}
//! 3.1415926535897931e-2,...,<dim floats>...,1
//! ...one line per timestep...
//!
//! {"version":"1.0",...next trajectory...}
//! ```
//!
//! The header is a single JSON object; state lines are comma-separated
//! decimal floats printed with 17 significant digits (lossless for `f64`),
//! followed by the action index when `has_actions` is true. Records are
//! separated by blank lines. Trajectories store one action per state: states
//! are the pre-step observations `s_0..s_{L−1}`, the action at index `t` was
//! taken from `s_t`, and the terminal successor observation is not recorded.
//!
//! Parsers reject unknown major format versions, report malformed lines with
//! their 1-based line number, and treat an empty file as a validation error
//! rather than an empty set.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dqn::{self, DqnConfig, EvalSpec, MlpParams, RewardSource, TrainOptions};
use crate::envs::EnvParams;
use crate::error::{Error, Result};
use crate::ot::DiscreteMeasure;
use crate::seeding::derive_seed;

/// Number of fresh training attempts before expert generation gives up.
const GENERATION_ATTEMPTS: u64 = 3;
/// Greedy rollouts evaluated per attempt when picking a demonstration.
const ROLLOUTS_PER_ATTEMPT: u64 = 20;

/// A recorded episode: ordered states, optional per-state actions, and
/// provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<Vec<f64>>,
    actions: Option<Vec<usize>>,
    pub env_name: String,
    pub env_params: EnvParams,
    pub seed: u64,
    pub true_return: f64,
}

impl Trajectory {
    pub fn new(
        states: Vec<Vec<f64>>,
        actions: Option<Vec<usize>>,
        env_params: EnvParams,
        seed: u64,
        true_return: f64,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument(
                "a trajectory needs at least one state".into(),
            ));
        }
        let dim = states[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "trajectory states must have dimension >= 1".into(),
            ));
        }
        for (t, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::Validation(format!(
                    "state {t} has dimension {} but state 0 has {dim}",
                    s.len()
                )));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "state {t} has a non-finite component"
                )));
            }
        }
        if let Some(actions) = &actions {
            if actions.len() != states.len() {
                return Err(Error::Validation(format!(
                    "got {} actions for {} states (one action per state)",
                    actions.len(),
                    states.len()
                )));
            }
            let n_actions = env_params.action_count();
            if let Some(bad) = actions.iter().find(|&&a| a >= n_actions) {
                return Err(Error::Validation(format!(
                    "action index {bad} out of range for {} actions",
                    n_actions
                )));
            }
        }
        Ok(Self {
            states,
            actions,
            env_name: env_params.env_name().to_string(),
            env_params,
            seed,
            true_return,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn actions(&self) -> Option<&[usize]> {
        self.actions.as_deref()
    }

    /// The trajectory as a uniform discrete measure over its states.
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_states(&self.states)
    }
}

/// A set of P ≥ 1 expert trajectories sharing one state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSet {
    trajectories: Vec<Trajectory>,
}

impl ExpertSet {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InvalidArgument(
                "an expert set needs at least one trajectory".into(),
            ));
        }
        let dim = trajectories[0].dim();
        for (p, t) in trajectories.iter().enumerate() {
            if t.dim() != dim {
                return Err(Error::Validation(format!(
                    "expert {p} has state dimension {} but expert 0 has {dim}",
                    t.dim()
                )));
            }
        }
        Ok(Self { trajectories })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.trajectories[0].dim()
    }
}

/// Resamples a trajectory to exactly `target_length` states by evenly spaced
/// index selection: indices `round(j·(L−1)/(M−1))` for `j = 0..M−1` (index 0
/// when `M = 1`). Endpoints are always kept; order is preserved; metadata is
/// carried over unchanged.
pub fn evenly_resample(traj: &Trajectory, target_length: usize) -> Result<Trajectory> {
    if target_length == 0 {
        return Err(Error::InvalidArgument(
            "resample target length must be >= 1".into(),
        ));
    }
    let source_len = traj.len();
    if source_len == target_length {
        return Ok(traj.clone());
    }
    let indices: Vec<usize> = if target_length == 1 {
        vec![0]
    } else {
        (0..target_length)
            .map(|j| {
                let pos = j as f64 * (source_len - 1) as f64 / (target_length - 1) as f64;
                pos.round() as usize
            })
            .collect()
    };
    let states: Vec<Vec<f64>> = indices.iter().map(|&i| traj.states[i].clone()).collect();
    let actions = traj
        .actions
        .as_ref()
        .map(|acts| indices.iter().map(|&i| acts[i]).collect());
    Ok(Trajectory {
        states,
        actions,
        env_name: traj.env_name.clone(),
        env_params: traj.env_params.clone(),
        seed: traj.seed,
        true_return: traj.true_return,
    })
}

#[derive(Serialize, Deserialize)]
struct DemoHeader {
    version: String,
    env: String,
    params: EnvParams,
    seed: u64,
    true_return: f64,
    dim: usize,
    len: usize,
    has_actions: bool,
}

const FORMAT_VERSION: &str = "1.0";

/// Renders a demo set in the versioned line-oriented text format.
pub fn serialize_demo_set(experts: &ExpertSet) -> Result<String> {
    let mut out = String::new();
    for (i, traj) in experts.trajectories().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let header = DemoHeader {
            version: FORMAT_VERSION.to_string(),
            env: traj.env_name.clone(),
            params: traj.env_params.clone(),
            seed: traj.seed,
            true_return: traj.true_return,
            dim: traj.dim(),
            len: traj.len(),
            has_actions: traj.actions.is_some(),
        };
        let header_json = serde_json::to_string(&header)
            .map_err(|e| Error::Internal(format!("demo header serialization failed: {e}")))?;
        out.push_str(&header_json);
        out.push('\n');
        for (t, state) in traj.states.iter().enumerate() {
            for (j, value) in state.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // 17 significant digits round-trip any f64 exactly.
                write!(out, "{value:.16e}").expect("writing to String cannot fail");
            }
            if let Some(actions) = &traj.actions {
                write!(out, ",{}", actions[t]).expect("writing to String cannot fail");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Writes [`serialize_demo_set`] output to a file.
pub fn save_demo_set(experts: &ExpertSet, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_demo_set(experts)?)?;
    Ok(())
}

/// Parses demo-set text, rejecting unknown major versions and malformed
/// lines (reported with their 1-based line number). Empty text is a
/// validation error, not an empty set.
pub fn parse_demo_set(text: &str) -> Result<ExpertSet> {
    let lines: Vec<&str> = text.lines().collect();
    let mut trajectories = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let header_line_no = i + 1;
        let header: DemoHeader =
            serde_json::from_str(lines[i]).map_err(|e| Error::Parse {
                line: header_line_no,
                message: format!("bad trajectory header: {e}"),
            })?;
        let major = header.version.split('.').next().unwrap_or("");
        if major != "1" {
            return Err(Error::Validation(format!(
                "unsupported demo format version {} (this reader understands 1.x)",
                header.version
            )));
        }
        if header.env != header.params.env_name() {
            return Err(Error::Validation(format!(
                "header env '{}' does not match params env '{}'",
                header.env,
                header.params.env_name()
            )));
        }
        if header.len == 0 {
            return Err(Error::Validation(format!(
                "trajectory at line {header_line_no} declares zero states"
            )));
        }
        i += 1;
        let mut states = Vec::with_capacity(header.len);
        let mut actions = header.has_actions.then(Vec::new);
        for t in 0..header.len {
            let line_no = i + 1;
            let line = lines.get(i).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!(
                    "unexpected end of file: expected {} state lines, found {t}",
                    header.len
                ),
            })?;
            let fields: Vec<&str> = line.split(',').collect();
            let expected = header.dim + usize::from(header.has_actions);
            if fields.len() != expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {expected} fields, found {}", fields.len()),
                });
            }
            let mut state = Vec::with_capacity(header.dim);
            for field in &fields[..header.dim] {
                let value: f64 = field.trim().parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad float '{field}': {e}"),
                })?;
                state.push(value);
            }
            states.push(state);
            if let Some(actions) = &mut actions {
                let action: usize =
                    fields[header.dim].trim().parse().map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("bad action index '{}': {e}", fields[header.dim]),
                    })?;
                actions.push(action);
            }
            i += 1;
        }
        trajectories.push(Trajectory::new(
            states,
            actions,
            header.params,
            header.seed,
            header.true_return,
        )?);
    }
    if trajectories.is_empty() {
        return Err(Error::Validation(
            "demo file contains no trajectories".into(),
        ));
    }
    ExpertSet::new(trajectories)
}

/// Reads and parses a demo-set file.
pub fn load_demo_set(path: &Path) -> Result<ExpertSet> {
    let text = std::fs::read_to_string(path)?;
    parse_demo_set(&text)
}

/// Trains a DQN on true environment rewards under `env_params` and records
/// one greedy episode meeting the quality bar: CartPole demands a full
/// `max_steps` episode; Pendulum demands a return at or above the 75th
/// percentile of 20 greedy rollouts. Retries with fresh seeds before failing.
pub fn generate_expert(
    env_params: &EnvParams,
    dqn_config: &DqnConfig,
    demo_seed: u64,
) -> Result<Trajectory> {
    generate_expert_with_policy(env_params, dqn_config, demo_seed).map(|(traj, _)| traj)
}

/// [`generate_expert`], additionally returning the trained network.
pub fn generate_expert_with_policy(
    env_params: &EnvParams,
    dqn_config: &DqnConfig,
    demo_seed: u64,
) -> Result<(Trajectory, MlpParams)> {
    env_params.validate()?;
    dqn_config.validate()?;
    for attempt in 0..GENERATION_ATTEMPTS {
        let attempt_seed = derive_seed(demo_seed, 1000 + attempt);
        let mut config = dqn_config.clone();
        config.seed = derive_seed(attempt_seed, 0);
        // CartPole is solvable to the maximum return, so stop as soon as the
        // greedy policy evaluates at 195/200; Pendulum has no absolute bar.
        let options = match env_params {
            EnvParams::CartPole(p) => TrainOptions {
                eval: Some(EvalSpec {
                    every: 25,
                    episodes: 100,
                    threshold: 0.975 * p.max_steps as f64,
                }),
            },
            EnvParams::Pendulum(_) => TrainOptions { eval: None },
        };
        let trained = dqn::train(env_params, RewardSource::True, &config, &options)?;
        let mut rollouts = Vec::with_capacity(ROLLOUTS_PER_ATTEMPT as usize);
        for j in 0..ROLLOUTS_PER_ATTEMPT {
            let rollout_seed = derive_seed(attempt_seed, 100 + j);
            let rollout = dqn::rollout_greedy(env_params, &trained.params, rollout_seed)?;
            rollouts.push((rollout, rollout_seed));
        }
        let chosen = match env_params {
            EnvParams::CartPole(p) => {
                let full = p.max_steps as f64;
                rollouts
                    .iter()
                    .find(|(r, _)| (r.true_return - full).abs() < 1e-9)
            }
            EnvParams::Pendulum(_) => {
                let mut returns: Vec<f64> =
                    rollouts.iter().map(|(r, _)| r.true_return).collect();
                returns.sort_unstable_by(f64::total_cmp);
                // Nearest-rank 75th percentile.
                let idx = ((0.75 * returns.len() as f64).ceil() as usize)
                    .saturating_sub(1)
                    .min(returns.len() - 1);
                let bar = returns[idx];
                rollouts.iter().find(|(r, _)| r.true_return >= bar)
            }
        };
        if let Some((rollout, rollout_seed)) = chosen {
            let traj = Trajectory::new(
                rollout.states.clone(),
                Some(rollout.actions.clone()),
                env_params.clone(),
                *rollout_seed,
                rollout.true_return,
            )?;
            return Ok((traj, trained.params));
        }
    }
    Err(Error::GenerationFailure(format!(
        "no greedy rollout met the quality bar after {GENERATION_ATTEMPTS} training attempts \
         on {} with params {:?}",
        env_params.env_name(),
        env_params
    )))
}
