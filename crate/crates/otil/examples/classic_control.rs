//! Stepping the native CartPole and Pendulum dynamics directly.
//!
//! Both environments expose the same minimal surface: `reset` draws an
//! initial state from a seeded RNG, `step` advances the dynamics one control
//! interval and reports (next state, reward, done). All physical parameters
//! are plain struct fields, so perturbed variants (longer pole, heavier bob)
//! are ordinary values.
//!
//! Run with: cargo run --example classic_control

use otil::envs::{
    reset, state_vector, step, torque_for_bin, CartPoleParams, EnvParams, PendulumParams,
};
use otil::Result;

fn main() -> Result<()> {
    // CartPole: balance a pole by pushing the cart left (0) or right (1).
    // A simple lean-following controller keeps it up for the full episode.
    let cartpole = EnvParams::CartPole(CartPoleParams::default());
    let mut state = reset(&cartpole, 3)?;
    let mut ret = 0.0;
    let mut steps = 0;
    loop {
        let v = state_vector(&state);
        let (theta, theta_dot) = (v[2], v[3]);
        let action = usize::from(theta + 0.5 * theta_dot >= 0.0);
        let (next, reward, done) = step(&state, action, &cartpole)?;
        ret += reward;
        steps += 1;
        if steps <= 3 {
            println!(
                "cartpole step {steps}: x = {:+.4}, theta = {:+.4}, action = {action}",
                v[0], v[2]
            );
        }
        state = next;
        if done {
            break;
        }
    }
    println!("cartpole: {steps} steps, return {ret}\n");

    // A longer, heavier pole is just a different parameter value.
    let long = EnvParams::CartPole(CartPoleParams {
        pole_half_length: 2.0,
        ..CartPoleParams::default()
    });
    let s0 = reset(&long, 3)?;
    let (after_default, ..) = step(&reset(&cartpole, 3)?, 1, &cartpole)?;
    let (after_long, ..) = step(&s0, 1, &long)?;
    println!(
        "same push, default vs long pole: theta' = {:+.6} vs {:+.6}\n",
        state_vector(&after_default)[3],
        state_vector(&after_long)[3]
    );

    // Pendulum: swing up toward upright with 5 discrete torque bins. The
    // observation is (cos θ, sin θ, θ̇); rewards are −(θ² + 0.1·θ̇² + 0.001·u²),
    // so 0 is perfect and every step costs at least the squared angle.
    let pendulum = EnvParams::Pendulum(PendulumParams::default());
    if let EnvParams::Pendulum(p) = &pendulum {
        let torques: Vec<f64> = (0..pendulum.action_count())
            .map(|b| torque_for_bin(b, p))
            .collect();
        println!("pendulum torque bins: {torques:?}");
    }
    let mut state = reset(&pendulum, 0)?;
    let mut ret = 0.0;
    let mut steps = 0;
    loop {
        let v = state_vector(&state);
        let (theta, theta_dot) = (v[1].atan2(v[0]), v[2]);
        // Energy-based swing-up, then a PD hold near the top. For a rod of
        // inertia m*l^2/3 the upright-at-rest energy is m*g*l/2.
        let energy = theta_dot * theta_dot / 6.0 + 5.0 * theta.cos();
        let torque = if theta.abs() < 0.4 && theta_dot.abs() < 2.0 {
            (-10.0 * theta - 2.0 * theta_dot).clamp(-2.0, 2.0)
        } else if energy < 5.0 {
            if theta_dot >= 0.0 { 2.0 } else { -2.0 }
        } else {
            0.0
        };
        let action = ((torque.round() as i64) + 2).clamp(0, 4) as usize;
        let (next, reward, done) = step(&state, action, &pendulum)?;
        ret += reward;
        steps += 1;
        state = next;
        if done {
            break;
        }
    }
    println!("pendulum swing-up: {steps} steps, return {ret:.2} (0 is unreachable, closer is better)");
    Ok(())
}
