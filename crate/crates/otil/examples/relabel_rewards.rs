//! Turning an episode's states into transport-based pseudo-rewards.
//!
//! After an episode finishes, the agent's state trajectory is compared
//! against the experts and each timestep is assigned the share of the total
//! squared sliced distance it is responsible for. The per-step costs sum
//! exactly to the corresponding squared distance, then a monotone transform
//! turns costs into rewards.
//!
//! Run with: cargo run --example relabel_rewards

use otil::demos::{ExpertSet, Trajectory};
use otil::envs::{CartPoleParams, EnvParams};
use otil::reward::{relabel_episode, RewardConfig, RewardMode, TransformKind};
use otil::Result;

fn main() -> Result<()> {
    let env = EnvParams::CartPole(CartPoleParams::default());

    // Two experts that trace a quarter circle at different speeds.
    let arc = |len: usize, radius: f64| -> Result<Trajectory> {
        let states = (0..len)
            .map(|t| {
                let angle = std::f64::consts::FRAC_PI_2 * t as f64 / (len - 1) as f64;
                vec![radius * angle.cos(), radius * angle.sin()]
            })
            .collect();
        Trajectory::new(states, None, env.clone(), 0, 0.0)
    };
    let experts = ExpertSet::new(vec![arc(20, 1.0)?, arc(35, 1.1)?])?;

    // An agent episode that starts on the arc and drifts off it.
    let episode: Vec<Vec<f64>> = (0..12)
        .map(|t| {
            let angle = std::f64::consts::FRAC_PI_2 * t as f64 / 11.0;
            let drift = 0.08 * t as f64;
            vec![angle.cos() + drift, angle.sin()]
        })
        .collect();

    for mode in [RewardMode::Scotil, RewardMode::Smmotil] {
        let config = RewardConfig::new(mode);
        let relabeled = relabel_episode(&episode, &experts, &config, 0)?;
        let total: f64 = relabeled.costs.iter().sum();
        println!("{}:", mode.name());
        println!("  per-step costs: {:?}", rounded(&relabeled.costs));
        println!("  cost total {total:.6} = squared sliced distance {:.6}", relabeled.total_cost);
        println!("  negate rewards: {:?}", rounded(&relabeled.rewards));
    }

    // The exponential transform maps costs into (0, 1]; low cost means a
    // reward near 1.
    let config = RewardConfig {
        transform: TransformKind::Exp,
        beta: 5.0,
        ..RewardConfig::new(RewardMode::Scotil)
    };
    let relabeled = relabel_episode(&episode, &experts, &config, 0)?;
    println!("scotil with exp transform (beta = 5):");
    println!("  rewards: {:?}", rounded(&relabeled.rewards));
    Ok(())
}

fn rounded(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| (v * 1e4).round() / 1e4).collect()
}
