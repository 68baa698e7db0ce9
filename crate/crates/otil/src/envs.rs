//! Native classic-control environments with parameterizable physics.
//!
//! Both environments follow the standard published dynamics so agents and
//! experts behave comparably to the usual reference implementations.
//!
//! **CartPole** (pole balancing, Barto-Sutton formulation). With force `F`,
//! pole angle `φ`, cart position `x`, masses `m_c`, `m_p`, and pole
//! half-length `l`:
//!
//! ```text
//! temp = (F + m_p·l·φ̇²·sin φ) / (m_c + m_p)
//! φ̈   = (g·sin φ − cos φ·temp) / (l·(4/3 − m_p·cos²φ/(m_c + m_p)))
//! ẍ   = temp − m_p·l·φ̈·cos φ / (m_c + m_p)
//! ```
//!
//! integrated with a semi-implicit Euler step (velocities first, then
//! positions). Reward is 1 per step; the episode terminates when the cart
//! leaves ±2.4 m, the pole exceeds the angle limit, or `max_steps` elapse.
//!
//! **Pendulum** (torque-controlled swing-up):
//!
//! ```text
//! φ̈ = (3g/(2l))·sin φ + 3u/(m·l²)
//! ```
//!
//! with the angular velocity updated first (and clipped to ±max_speed), then
//! the angle, which is wrapped to [−π, π]. Reward is
//! `−(φ² + 0.1·φ̇² + 0.001·u²)` evaluated on the pre-step state; the episode
//! terminates only at `max_steps`. The native continuous torque is
//! discretized into `torque_bins` evenly spaced values over ±max_torque so a
//! DQN can act in it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CartPole physics parameters. Defaults are the standard classic-control
/// constants; `pole_half_length` and `cart_mass` are the axes varied to
/// produce diverse experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub force_magnitude: f64,
    pub timestep: f64,
    pub position_limit: f64,
    pub angle_limit: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            force_magnitude: 10.0,
            timestep: 0.02,
            position_limit: 2.4,
            angle_limit: 12.0 * PI / 180.0,
            max_steps: 200,
        }
    }
}

/// Pendulum physics parameters. `mass` and `length` are the expert variation
/// axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub timestep: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub torque_bins: usize,
    pub max_steps: usize,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            timestep: 0.05,
            max_torque: 2.0,
            max_speed: 8.0,
            torque_bins: 5,
            max_steps: 200,
        }
    }
}

/// Environment parameters for either task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "lowercase")]
pub enum EnvParams {
    CartPole(CartPoleParams),
    Pendulum(PendulumParams),
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvParams::CartPole(p) => {
                if p.cart_mass <= 0.0 || p.pole_mass <= 0.0 || p.pole_half_length <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "cartpole masses and pole length must be strictly positive".into(),
                    ));
                }
                if p.timestep <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "cartpole timestep must be > 0".into(),
                    ));
                }
                if p.max_steps == 0 {
                    return Err(Error::InvalidArgument(
                        "cartpole max_steps must be >= 1".into(),
                    ));
                }
            }
            EnvParams::Pendulum(p) => {
                if p.mass <= 0.0 || p.length <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "pendulum mass and length must be strictly positive".into(),
                    ));
                }
                if p.timestep <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "pendulum timestep must be > 0".into(),
                    ));
                }
                if p.torque_bins < 2 {
                    return Err(Error::InvalidArgument(
                        "pendulum torque_bins must be >= 2".into(),
                    ));
                }
                if p.max_steps == 0 {
                    return Err(Error::InvalidArgument(
                        "pendulum max_steps must be >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stable lowercase environment name used in file metadata.
    pub fn env_name(&self) -> &'static str {
        match self {
            EnvParams::CartPole(_) => "cartpole",
            EnvParams::Pendulum(_) => "pendulum",
        }
    }

    /// Observation dimension: 4 for CartPole, 3 for Pendulum.
    pub fn state_dim(&self) -> usize {
        match self {
            EnvParams::CartPole(_) => 4,
            EnvParams::Pendulum(_) => 3,
        }
    }

    /// Number of discrete actions.
    pub fn action_count(&self) -> usize {
        match self {
            EnvParams::CartPole(_) => 2,
            EnvParams::Pendulum(p) => p.torque_bins,
        }
    }

    pub fn max_steps(&self) -> usize {
        match self {
            EnvParams::CartPole(p) => p.max_steps,
            EnvParams::Pendulum(p) => p.max_steps,
        }
    }
}

/// Environment state, including the step counter that drives `max_steps`
/// termination so `step` stays a pure function.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    CartPole {
        x: f64,
        x_dot: f64,
        theta: f64,
        theta_dot: f64,
        steps: usize,
    },
    Pendulum {
        theta: f64,
        theta_dot: f64,
        steps: usize,
    },
}

/// Wraps an angle into [−π, π].
fn wrap_angle(angle: f64) -> f64 {
    (angle + PI).rem_euclid(2.0 * PI) - PI
}

/// Samples an initial state. CartPole draws all four components uniformly in
/// [−0.05, 0.05]; Pendulum draws φ in [−π, π] and φ̇ in [−1, 1].
pub fn reset(params: &EnvParams, seed: u64) -> Result<EnvState> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match params {
        EnvParams::CartPole(_) => EnvState::CartPole {
            x: rng.gen_range(-0.05..0.05),
            x_dot: rng.gen_range(-0.05..0.05),
            theta: rng.gen_range(-0.05..0.05),
            theta_dot: rng.gen_range(-0.05..0.05),
            steps: 0,
        },
        EnvParams::Pendulum(_) => EnvState::Pendulum {
            theta: rng.gen_range(-PI..PI),
            theta_dot: rng.gen_range(-1.0..1.0),
            steps: 0,
        },
    })
}

/// Advances the environment one step. Returns the successor state, the true
/// environment reward, and whether the episode has terminated.
pub fn step(state: &EnvState, action: usize, params: &EnvParams) -> Result<(EnvState, f64, bool)> {
    match (state, params) {
        (
            EnvState::CartPole {
                x,
                x_dot,
                theta,
                theta_dot,
                steps,
            },
            EnvParams::CartPole(p),
        ) => {
            if action > 1 {
                return Err(Error::InvalidArgument(format!(
                    "cartpole action must be 0 (left) or 1 (right), got {action}"
                )));
            }
            let force = if action == 1 {
                p.force_magnitude
            } else {
                -p.force_magnitude
            };
            let total_mass = p.cart_mass + p.pole_mass;
            let pole_mass_length = p.pole_mass * p.pole_half_length;
            let cos_theta = theta.cos();
            let sin_theta = theta.sin();
            let temp = (force + pole_mass_length * theta_dot * theta_dot * sin_theta) / total_mass;
            let theta_acc = (p.gravity * sin_theta - cos_theta * temp)
                / (p.pole_half_length
                    * (4.0 / 3.0 - p.pole_mass * cos_theta * cos_theta / total_mass));
            let x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;
            // Semi-implicit Euler: velocities first, then positions.
            let new_x_dot = x_dot + p.timestep * x_acc;
            let new_x = x + p.timestep * new_x_dot;
            let new_theta_dot = theta_dot + p.timestep * theta_acc;
            let new_theta = theta + p.timestep * new_theta_dot;
            let new_steps = steps + 1;
            let terminated = new_x.abs() > p.position_limit
                || new_theta.abs() > p.angle_limit
                || new_steps >= p.max_steps;
            Ok((
                EnvState::CartPole {
                    x: new_x,
                    x_dot: new_x_dot,
                    theta: new_theta,
                    theta_dot: new_theta_dot,
                    steps: new_steps,
                },
                1.0,
                terminated,
            ))
        }
        (
            EnvState::Pendulum {
                theta,
                theta_dot,
                steps,
            },
            EnvParams::Pendulum(p),
        ) => {
            if action >= p.torque_bins {
                return Err(Error::InvalidArgument(format!(
                    "pendulum action must be < {} torque bins, got {action}",
                    p.torque_bins
                )));
            }
            let torque = torque_for_bin(action, p);
            // Cost is charged on the pre-step state, matching the reference
            // implementation.
            let cost = theta * theta + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque;
            let angular_acc = (3.0 * p.gravity / (2.0 * p.length)) * theta.sin()
                + 3.0 * torque / (p.mass * p.length * p.length);
            let new_theta_dot =
                (theta_dot + angular_acc * p.timestep).clamp(-p.max_speed, p.max_speed);
            let new_theta = wrap_angle(theta + new_theta_dot * p.timestep);
            let new_steps = steps + 1;
            Ok((
                EnvState::Pendulum {
                    theta: new_theta,
                    theta_dot: new_theta_dot,
                    steps: new_steps,
                },
                -cost,
                new_steps >= p.max_steps,
            ))
        }
        _ => Err(Error::InvalidArgument(
            "state and params belong to different environments".into(),
        )),
    }
}

/// The torque applied by a discrete action: `torque_bins` evenly spaced
/// values spanning [−max_torque, +max_torque].
pub fn torque_for_bin(bin: usize, params: &PendulumParams) -> f64 {
    let span = 2.0 * params.max_torque;
    -params.max_torque + span * bin as f64 / (params.torque_bins - 1) as f64
}

/// The observation vector used as a measure atom: CartPole `(x, ẋ, φ, φ̇)`,
/// Pendulum `(cos φ, sin φ, φ̇)`.
pub fn state_vector(state: &EnvState) -> Vec<f64> {
    match state {
        EnvState::CartPole {
            x,
            x_dot,
            theta,
            theta_dot,
            ..
        } => vec![*x, *x_dot, *theta, *theta_dot],
        EnvState::Pendulum {
            theta, theta_dot, ..
        } => vec![theta.cos(), theta.sin(), *theta_dot],
    }
}
