//! Experiment harness: config-driven expert generation, multi-seed
//! imitation training with CSV learning curves, SVG plotting, and a fast
//! self-check suite.
//!
//! All outputs are deterministic functions of the config file (plus the
//! explicit seed offset), so rerunning a command reproduces its files byte
//! for byte. Runs fan out to a bounded worker pool; aggregation and file
//! writes happen on the calling thread in a fixed order.

pub mod config;
pub mod plot;
pub mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use config::{load_config, parse_config, EnvKind, ExperimentConfig, VariationAxis};
pub use plot::cmd_plot;
pub use verify::{cmd_verify, run_all, run_all_with, CheckReport};

use crate::demos::{generate_expert, load_demo_set, save_demo_set, ExpertSet, Trajectory};
use crate::dqn::{self, DqnConfig, RewardSource, TrainOptions};
use crate::error::{Error, Result};
use crate::reward::{RewardConfig, RewardMode};

/// Runs independent tasks on at most `parallelism` worker threads and
/// returns their outcomes in task order (the first error in task order wins).
pub fn run_parallel<T, F>(tasks: Vec<F>, parallelism: usize) -> Result<Vec<T>>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    let task_count = tasks.len();
    let worker_count = parallelism.max(1).min(task_count);
    if worker_count <= 1 {
        return tasks.into_iter().map(|task| task()).collect();
    }
    let queue: Vec<Mutex<Option<F>>> = tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..task_count).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= task_count {
                    break;
                }
                let task = queue[i]
                    .lock()
                    .expect("task mutex poisoned")
                    .take()
                    .expect("each task index is claimed once");
                let outcome = task();
                *slots[i].lock().expect("result mutex poisoned") = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result mutex poisoned")
                .expect("every claimed task stores a result")
        })
        .collect()
}

/// Moving average with a growing head: entry `e` (0-based) is the mean of
/// the last `min(e + 1, window)` raw values.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Vec::with_capacity(values.len());
    for e in 0..values.len() {
        let start = (e + 1).saturating_sub(window);
        let span = &values[start..=e];
        out.push(span.iter().sum::<f64>() / span.len() as f64);
    }
    out
}

/// Per-episode cross-run mean and population standard deviation. All runs
/// must have equal length.
pub fn summarize(curves: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let episodes = match curves.first() {
        Some(first) => first.len(),
        None => {
            return Err(Error::InvalidArgument(
                "cannot summarize zero curves".into(),
            ))
        }
    };
    if curves.iter().any(|c| c.len() != episodes) {
        return Err(Error::InvalidArgument(
            "all curves must cover the same number of episodes".into(),
        ));
    }
    let n = curves.len() as f64;
    let mut means = Vec::with_capacity(episodes);
    let mut stds = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mean = curves.iter().map(|c| c[e]).sum::<f64>() / n;
        let var = curves.iter().map(|c| (c[e] - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    Ok((means, stds))
}

/// One seed's training curve under one reward mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCurve {
    pub mode: RewardMode,
    pub seed: u64,
    /// True per-episode returns.
    pub returns: Vec<f64>,
    /// Windowed moving average of `returns`.
    pub moving_avg: Vec<f64>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn render_curve_csv(window: usize, curve: &RunCurve) -> String {
    let mut out = format!("# moving_average_window = {window}\n");
    out.push_str("episode,true_return,moving_avg\n");
    for (e, (ret, avg)) in curve.returns.iter().zip(&curve.moving_avg).enumerate() {
        writeln!(out, "{},{ret},{avg}", e + 1).expect("writing to String cannot fail");
    }
    out
}

fn render_summary_csv(window: usize, mean: &[f64], std: &[f64]) -> String {
    let mut out = format!("# moving_average_window = {window}\n");
    out.push_str("episode,mean,std\n");
    for (e, (m, s)) in mean.iter().zip(std).enumerate() {
        writeln!(out, "{},{m},{s}", e + 1).expect("writing to String cannot fail");
    }
    out
}

/// Trains one expert per configured parameter value on true rewards, writes
/// the demo-set file into `out_dir`, and prints each expert's true return.
/// Expert `j` derives its generation seed from `seed_offset + j`, so reruns
/// with the same config and offset reproduce the file byte for byte.
pub fn cmd_gen_experts(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_offset: u64,
    parallelism: usize,
) -> Result<PathBuf> {
    config.validate()?;
    let expert_dqn = DqnConfig {
        train_episodes: config.expert_train_episodes,
        ..config.dqn.clone()
    };
    let envs = config.expert_envs();
    let tasks: Vec<_> = envs
        .iter()
        .enumerate()
        .map(|(j, env)| {
            let expert_dqn = expert_dqn.clone();
            move || generate_expert(env, &expert_dqn, seed_offset.wrapping_add(j as u64))
        })
        .collect();
    let trajectories: Vec<Trajectory> = run_parallel(tasks, parallelism)?;
    for (value, traj) in config.expert_param_values.iter().zip(&trajectories) {
        println!(
            "expert {} {} = {value}: true return {} over {} states",
            config.environment.name(),
            config.axis.name(),
            traj.true_return,
            traj.len()
        );
    }
    let experts = ExpertSet::new(trajectories)?;
    let path = out_dir.join(config.demo_file_name());
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_demo_set(&experts, &path)?;
    Ok(path)
}

/// Checks a demo set against the experiment before any training run.
fn validate_demos_for(config: &ExperimentConfig, experts: &ExpertSet) -> Result<()> {
    let expected_env = config.environment.name();
    for traj in experts.trajectories() {
        if traj.env_name != expected_env {
            return Err(Error::Validation(format!(
                "demo trajectory env '{}' does not match configured env '{expected_env}'",
                traj.env_name
            )));
        }
    }
    let agent_dim = config.agent_env().state_dim();
    if experts.dim() != agent_dim {
        return Err(Error::Validation(format!(
            "demo state dimension {} does not match agent environment dimension {agent_dim}",
            experts.dim()
        )));
    }
    Ok(())
}

/// Runs imitation training for every configured (mode, seed) pair against
/// the demo set and writes `curve_<mode>_<seed>.csv` per run plus
/// `summary_<mode>.csv` per mode into `out_dir`. Returns the written paths,
/// curves first.
///
/// `seed_offset` shifts every configured seed; the shifted value appears in
/// file names, so offset runs land next to each other without clobbering.
pub fn cmd_train(
    config: &ExperimentConfig,
    demos_path: &Path,
    out_dir: &Path,
    seed_offset: u64,
    parallelism: usize,
) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let experts = load_demo_set(demos_path)?;
    validate_demos_for(config, &experts)?;
    let agent_env = config.agent_env();

    let mut specs = Vec::new();
    for &mode in &config.modes {
        for &seed in &config.seeds {
            specs.push((mode, seed.wrapping_add(seed_offset)));
        }
    }
    let tasks: Vec<_> = specs
        .iter()
        .map(|&(mode, seed)| {
            let experts = &experts;
            let agent_env = &agent_env;
            let dqn_config = DqnConfig {
                train_episodes: config.train_episodes,
                seed,
                ..config.dqn.clone()
            };
            let reward_config = RewardConfig {
                mode,
                ..config.reward.clone()
            };
            let window = config.moving_average_window;
            move || {
                let source = RewardSource::Imitation {
                    experts,
                    reward: &reward_config,
                };
                let result =
                    dqn::train(agent_env, source, &dqn_config, &TrainOptions::default())?;
                let moving_avg = moving_average(&result.returns, window);
                Ok(RunCurve {
                    mode,
                    seed,
                    returns: result.returns,
                    moving_avg,
                })
            }
        })
        .collect();
    let curves = run_parallel(tasks, parallelism)?;

    let mut written = Vec::new();
    for curve in &curves {
        let path = out_dir.join(format!("curve_{}_{}.csv", curve.mode.name(), curve.seed));
        write_file(&path, &render_curve_csv(config.moving_average_window, curve))?;
        written.push(path);
    }
    for &mode in &config.modes {
        let mode_curves: Vec<Vec<f64>> = curves
            .iter()
            .filter(|c| c.mode == mode)
            .map(|c| c.moving_avg.clone())
            .collect();
        let (mean, std) = if config.train_episodes == 0 {
            (Vec::new(), Vec::new())
        } else {
            summarize(&mode_curves)?
        };
        let path = out_dir.join(format!("summary_{}.csv", mode.name()));
        write_file(
            &path,
            &render_summary_csv(config.moving_average_window, &mean, &std),
        )?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_grows_then_slides() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0];
        let avg = moving_average(&values, 3);
        assert_eq!(avg, vec![1.0, 1.5, 2.0, 3.0, 4.0]);
        // Window 1 is the identity.
        assert_eq!(moving_average(&values, 1), values.to_vec());
        // Window beyond the length is the running mean.
        let wide = moving_average(&[2.0, 4.0], 10);
        assert_eq!(wide, vec![2.0, 3.0]);
        assert!(moving_average(&[], 5).is_empty());
    }

    #[test]
    fn summarize_uses_population_std() {
        let curves = vec![vec![1.0, 10.0], vec![3.0, 10.0]];
        let (mean, std) = summarize(&curves).unwrap();
        assert_eq!(mean, vec![2.0, 10.0]);
        // Population convention: divide by n, not n − 1.
        assert_eq!(std, vec![1.0, 0.0]);
        assert!(summarize(&[]).is_err());
        assert!(summarize(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn run_parallel_preserves_task_order() {
        let tasks: Vec<_> = (0..16)
            .map(|i| {
                move || {
                    // Stagger so completion order differs from task order.
                    std::thread::sleep(std::time::Duration::from_millis((16 - i) % 4));
                    Ok(i * i)
                }
            })
            .collect();
        let results = run_parallel(tasks, 4).unwrap();
        assert_eq!(results, (0..16).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn run_parallel_surfaces_the_first_error_in_task_order() {
        let tasks: Vec<Box<dyn FnOnce() -> Result<usize> + Send>> = vec![
            Box::new(|| Ok(1)),
            Box::new(|| Err(Error::Validation("second".into()))),
            Box::new(|| Err(Error::Validation("third".into()))),
            Box::new(|| Ok(4)),
        ];
        match run_parallel(tasks, 3) {
            Err(Error::Validation(msg)) => assert_eq!(msg, "second"),
            other => panic!("expected the first error, got {other:?}"),
        }
    }

    #[test]
    fn curve_csv_has_header_comment_and_one_based_episodes() {
        let curve = RunCurve {
            mode: RewardMode::Scotil,
            seed: 3,
            returns: vec![10.0, 20.0],
            moving_avg: vec![10.0, 15.0],
        };
        let text = render_curve_csv(50, &curve);
        assert_eq!(
            text,
            "# moving_average_window = 50\nepisode,true_return,moving_avg\n1,10,10\n2,20,15\n"
        );
        let summary = render_summary_csv(50, &[10.0, 17.5], &[0.0, 2.5]);
        assert_eq!(
            summary,
            "# moving_average_window = 50\nepisode,mean,std\n1,10,0\n2,17.5,2.5\n"
        );
    }

    #[test]
    fn demo_validation_catches_env_and_dimension_mismatches() {
        let config = ExperimentConfig::defaults(EnvKind::CartPole, VariationAxis::Length);
        let pendulum = ExperimentConfig::defaults(EnvKind::Pendulum, VariationAxis::Length);
        let traj = Trajectory::new(
            vec![vec![0.0, 0.0, 0.0]; 4],
            None,
            pendulum.agent_env(),
            0,
            0.0,
        )
        .unwrap();
        let experts = ExpertSet::new(vec![traj]).unwrap();
        assert!(validate_demos_for(&config, &experts).is_err());
        assert!(validate_demos_for(&pendulum, &experts).is_ok());
    }

    #[test]
    fn train_command_writes_deterministic_curves_and_summaries() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::defaults(EnvKind::CartPole, VariationAxis::Length);
        config.seeds = vec![0, 1];
        config.train_episodes = 3;
        config.expert_train_episodes = 2;
        config.moving_average_window = 2;
        config.dqn.hidden_sizes = vec![8];
        config.reward.projection_count = 4;

        // Synthetic experts: any valid cartpole-shaped trajectories work.
        let expert = Trajectory::new(
            (0..30)
                .map(|t| vec![t as f64 * 1e-3, 0.0, 0.0, 0.0])
                .collect(),
            None,
            config.agent_env(),
            0,
            30.0,
        )
        .unwrap();
        let demos = dir.path().join("demos.txt");
        save_demo_set(&ExpertSet::new(vec![expert]).unwrap(), &demos).unwrap();

        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let written_a = cmd_train(&config, &demos, &out_a, 0, 2).unwrap();
        let written_b = cmd_train(&config, &demos, &out_b, 0, 1).unwrap();
        // 2 modes × 2 seeds curves + 2 summaries.
        assert_eq!(written_a.len(), 6);
        for (a, b) in written_a.iter().zip(&written_b) {
            assert_eq!(a.file_name(), b.file_name());
            let bytes_a = std::fs::read(a).unwrap();
            let bytes_b = std::fs::read(b).unwrap();
            assert_eq!(bytes_a, bytes_b, "{a:?} differs between reruns");
            assert!(!bytes_a.is_empty());
        }
        let curve = std::fs::read_to_string(&written_a[0]).unwrap();
        assert!(curve.starts_with("# moving_average_window = 2\n"));
        assert_eq!(curve.lines().count(), 2 + config.train_episodes);

        // Summary means must be recomputable from the per-seed curves.
        let summary = std::fs::read_to_string(
            written_a
                .iter()
                .find(|p| p.file_name().unwrap() == "summary_scotil.csv")
                .unwrap(),
        )
        .unwrap();
        let scotil_avgs: Vec<Vec<f64>> = [0u64, 1]
            .iter()
            .map(|seed| {
                let path = out_a.join(format!("curve_scotil_{seed}.csv"));
                std::fs::read_to_string(path)
                    .unwrap()
                    .lines()
                    .skip(2)
                    .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
                    .collect()
            })
            .collect();
        for (e, line) in summary.lines().skip(2).enumerate() {
            let mean: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            let expected = (scotil_avgs[0][e] + scotil_avgs[1][e]) / 2.0;
            assert!((mean - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_episode_training_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::defaults(EnvKind::CartPole, VariationAxis::Length);
        config.seeds = vec![0];
        config.modes = vec![RewardMode::Scotil];
        config.train_episodes = 0;
        config.dqn.hidden_sizes = vec![4];

        let expert = Trajectory::new(
            vec![vec![0.0; 4]; 5],
            None,
            config.agent_env(),
            0,
            5.0,
        )
        .unwrap();
        let demos = dir.path().join("demos.txt");
        save_demo_set(&ExpertSet::new(vec![expert]).unwrap(), &demos).unwrap();

        let written = cmd_train(&config, &demos, dir.path(), 0, 1).unwrap();
        assert_eq!(written.len(), 2);
        let curve = std::fs::read_to_string(&written[0]).unwrap();
        assert_eq!(
            curve,
            "# moving_average_window = 50\nepisode,true_return,moving_avg\n"
        );
        let summary = std::fs::read_to_string(&written[1]).unwrap();
        assert_eq!(summary, "# moving_average_window = 50\nepisode,mean,std\n");
    }

    #[test]
    fn seed_offset_shifts_file_names_and_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::defaults(EnvKind::CartPole, VariationAxis::Length);
        config.seeds = vec![0];
        config.modes = vec![RewardMode::Scotil];
        config.train_episodes = 2;
        config.dqn.hidden_sizes = vec![4];
        config.reward.projection_count = 2;

        let expert = Trajectory::new(
            (0..20).map(|t| vec![t as f64 * 1e-3, 0.0, 0.0, 0.0]).collect(),
            None,
            config.agent_env(),
            0,
            20.0,
        )
        .unwrap();
        let demos = dir.path().join("demos.txt");
        save_demo_set(&ExpertSet::new(vec![expert]).unwrap(), &demos).unwrap();

        let written = cmd_train(&config, &demos, dir.path(), 7, 1).unwrap();
        assert!(written[0].file_name().unwrap() == "curve_scotil_7.csv");

        // The offset run must equal a plain run whose configured seed is 7.
        let mut shifted = config.clone();
        shifted.seeds = vec![7];
        let out2 = dir.path().join("plain");
        let written2 = cmd_train(&shifted, &demos, &out2, 0, 1).unwrap();
        assert_eq!(
            std::fs::read(&written[0]).unwrap(),
            std::fs::read(&written2[0]).unwrap()
        );
    }
}
