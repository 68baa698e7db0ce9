//! Imitation learning from multiple diverse experts via sliced
//! optimal-transport pseudo-rewards.
//!
//! The crate trains a from-scratch DQN agent without environment rewards:
//! after each episode, the agent's state trajectory is compared against a set
//! of expert state trajectories using sliced optimal-transport distances, and
//! the per-timestep transport costs are turned into rewards (relabeling).
//! Two pathways are implemented:
//!
//! * **SCOTIL**: the experts are first combined into a single trajectory by
//!   concatenation and sub-sampling, then the agent is compared pairwise via
//!   the sliced Wasserstein-2 distance.
//! * **SMMOTIL**: the agent and all experts are compared jointly via the
//!   sliced multi-marginal Monge-Wasserstein distance, which measures spread
//!   around the per-rank barycenter of all trajectories.
//!
//! In both pathways the per-step costs sum exactly to the corresponding
//! squared sliced distance, so minimizing episodic pseudo-cost minimizes the
//! transport distance to the experts.
//!
//! Module map:
//!
//! * [`ot`] - discrete measures, random projections, sliced W2 and
//!   multi-marginal Monge-Wasserstein distances, sorting alignments.
//! * [`reward`] - expert combination, per-step cost attribution, reward
//!   transforms, episode relabeling.
//! * [`envs`] - native CartPole and Pendulum dynamics with parameterizable
//!   length and mass.
//! * [`dqn`] - from-scratch MLP, backpropagation, Adam, replay buffer,
//!   ε-greedy training loop.
//! * [`demos`] - expert generation and the demonstration file format.
//! * [`harness`] - experiment configs, multi-seed runs, CSV/SVG emission,
//!   and the fast verification suite.

pub mod demos;
pub mod dqn;
pub mod envs;
pub mod error;
pub mod harness;
pub mod ot;
pub mod reward;
pub mod seeding;

pub use error::{Error, Result};
