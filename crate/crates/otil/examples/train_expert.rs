//! Training a DQN expert on true environment rewards, then saving both the
//! demonstration it produces and the network itself.
//!
//! `generate_expert` trains until a greedy rollout meets the environment's
//! quality bar (a full-length CartPole episode), records that rollout as a
//! demonstration, and returns it. Everything is seed-deterministic.
//!
//! Run with: cargo run --example train_expert

use otil::demos::{generate_expert_with_policy, load_demo_set, save_demo_set, ExpertSet};
use otil::dqn::{evaluate_greedy, load_params, save_params, DqnConfig};
use otil::envs::{CartPoleParams, EnvParams};
use otil::Result;

fn main() -> Result<()> {
    let env = EnvParams::CartPole(CartPoleParams::default());
    let config = DqnConfig {
        train_episodes: 2_000,
        seed: 0,
        ..DqnConfig::default()
    };

    println!("training an expert on default CartPole dynamics...");
    let (demo, policy) = generate_expert_with_policy(&env, &config, 0)?;
    println!(
        "expert ready: {} states, true return {}",
        demo.states().len(),
        demo.true_return
    );

    // The demonstration round-trips through the text format bit-exactly.
    let dir = std::env::temp_dir().join("otil_train_expert_example");
    std::fs::create_dir_all(&dir)?;
    let demo_path = dir.join("expert.demos");
    save_demo_set(&ExpertSet::new(vec![demo.clone()])?, &demo_path)?;
    let reloaded = load_demo_set(&demo_path)?;
    println!(
        "demo file {} round-trips exactly: {}",
        demo_path.display(),
        reloaded.trajectories()[0] == demo
    );

    // So does the network.
    let net_path = dir.join("expert.net");
    save_params(&policy, &net_path)?;
    let restored = load_params(&net_path)?;
    println!(
        "network file {} round-trips exactly: {}",
        net_path.display(),
        restored == policy
    );

    // The restored network really is the trained policy: evaluate it greedily
    // on fresh episodes.
    let mean = evaluate_greedy(&env, &restored, 20, 12_345)?;
    println!("restored policy over 20 fresh episodes: mean return {mean}");
    Ok(())
}
