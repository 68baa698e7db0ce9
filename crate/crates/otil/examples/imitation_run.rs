//! End-to-end imitation: experts on perturbed dynamics, agent on pseudo-rewards.
//!
//! Two experts are trained on CartPole variants the agent will never see
//! (short and long poles). The agent then trains on the default dynamics
//! WITHOUT observing the true reward: after each episode its states are
//! relabeled with transport costs against the expert set, and the DQN learns
//! from those pseudo-rewards alone. True returns are only recorded for
//! reporting.
//!
//! Run with: cargo run --example imitation_run

use otil::demos::{generate_expert, ExpertSet};
use otil::dqn::{train, DqnConfig, RewardSource, TrainOptions};
use otil::envs::{CartPoleParams, EnvParams};
use otil::reward::{RewardConfig, RewardMode};
use otil::Result;

fn main() -> Result<()> {
    let expert_dqn = DqnConfig {
        train_episodes: 2_000,
        ..DqnConfig::default()
    };

    println!("training experts on perturbed dynamics...");
    let mut trajectories = Vec::new();
    for (i, half_length) in [0.3, 1.2].into_iter().enumerate() {
        let env = EnvParams::CartPole(CartPoleParams {
            pole_half_length: half_length,
            ..CartPoleParams::default()
        });
        let demo = generate_expert(&env, &expert_dqn, i as u64)?;
        println!(
            "  expert with half-length {half_length}: {} states, return {}",
            demo.states().len(),
            demo.true_return
        );
        trajectories.push(demo);
    }
    let experts = ExpertSet::new(trajectories)?;

    // The agent lives on the default dynamics and sees only pseudo-rewards.
    let agent_env = EnvParams::CartPole(CartPoleParams::default());
    let agent_dqn = DqnConfig {
        train_episodes: 200,
        seed: 1,
        ..DqnConfig::default()
    };

    for mode in [RewardMode::Scotil, RewardMode::Smmotil] {
        let reward = RewardConfig::new(mode);
        let result = train(
            &agent_env,
            RewardSource::Imitation {
                experts: &experts,
                reward: &reward,
            },
            &agent_dqn,
            &TrainOptions::default(),
        )?;
        let returns = &result.returns;
        let block = returns.len() / 4;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        println!(
            "{}: true return mean by quarter: {:.1} -> {:.1} -> {:.1} -> {:.1}",
            mode.name(),
            mean(&returns[..block]),
            mean(&returns[block..2 * block]),
            mean(&returns[2 * block..3 * block]),
            mean(&returns[3 * block..]),
        );
    }
    println!("(rising quarters mean the agent is imitating, not optimizing reward)");
    Ok(())
}
