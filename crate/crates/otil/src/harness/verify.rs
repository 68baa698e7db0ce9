//! Fast self-check suite: re-validates the load-bearing identities of the
//! distance, reward, learner, and serialization code on fresh random
//! instances, and reports one timed pass/fail line per check.
//!
//! The 1D transport check takes the function under test as a parameter so a
//! deliberately broken implementation demonstrably turns the check red (a
//! mutation-sanity guard on the suite itself).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demos::{parse_demo_set, serialize_demo_set, ExpertSet, Trajectory};
use crate::dqn::{
    loss_and_gradient, loss_only, params_from_str, params_to_string, MlpParams, Transition,
};
use crate::envs::{CartPoleParams, EnvParams};
use crate::error::{Error, Result};
use crate::ot::{
    sample_projections, sliced_mw_squared, sliced_w2_squared, w2_squared_1d, BarycentricWeights,
    DiscreteMeasure,
};
use crate::reward::{
    combine_concat_sample, scotil_costs, smmotil_costs, CombineStrategy, RewardMode,
};

/// Outcome of one self-check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub millis: f64,
    /// One-line summary: worst deviation observed, or the failure reason.
    pub detail: String,
}

/// Signature of the 1D squared-transport function under test: both inputs
/// sorted ascending, equal length.
pub type W2Fn = fn(&[f64], &[f64]) -> Result<f64>;

/// Minimum assignment cost by exhaustive permutation search; only feasible
/// for tiny inputs, which is exactly what makes it a trustworthy oracle.
fn brute_force_w2(u: &[f64], v: &[f64]) -> f64 {
    fn recurse(u: &[f64], v: &[f64], used: &mut [bool], i: usize, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == u.len() {
            *best = acc;
            return;
        }
        for j in 0..v.len() {
            if !used[j] {
                used[j] = true;
                let gap = u[i] - v[j];
                recurse(u, v, used, i + 1, acc + gap * gap, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; v.len()];
    recurse(u, v, &mut used, 0, 0.0, &mut best);
    best / u.len() as f64
}

fn random_states(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect()
}

fn check_w2_oracle(w2: W2Fn) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11_000);
    let mut worst = 0.0f64;
    for instance in 0..100 {
        let t = rng.gen_range(1..=6);
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..t).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let oracle = brute_force_w2(&u, &v);
        let mut u_sorted = u;
        let mut v_sorted = v;
        u_sorted.sort_by(f64::total_cmp);
        v_sorted.sort_by(f64::total_cmp);
        let fast = w2(&u_sorted, &v_sorted)?;
        let gap = (fast - oracle).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(Error::Validation(format!(
                "instance {instance}: sorted pairing {fast} vs assignment oracle {oracle}"
            )));
        }
    }
    Ok(format!("100 instances, worst gap {worst:.2e}"))
}

fn check_two_marginal_reduction() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12_000);
    let mut worst = 0.0f64;
    for instance in 0..50 {
        let dim = rng.gen_range(1..=5);
        let len = rng.gen_range(1..=50);
        let k = rng.gen_range(1..=20);
        let mu = DiscreteMeasure::new(random_states(&mut rng, len, dim))?;
        let nu = DiscreteMeasure::new(random_states(&mut rng, len, dim))?;
        let projections = sample_projections(dim, k, rng.gen())?;
        let weights = BarycentricWeights::uniform(2)?;
        let smw = sliced_mw_squared(&[&mu, &nu], &weights, &projections)?;
        let sw = sliced_w2_squared(&mu, &nu, &projections)?;
        let gap = (smw - sw / 4.0).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(Error::Validation(format!(
                "instance {instance}: SMW {smw} vs SW/4 {}",
                sw / 4.0
            )));
        }
    }
    Ok(format!("50 instances, worst gap {worst:.2e}"))
}

fn check_reward_sum_identities() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13_000);
    let mut worst = 0.0f64;
    let env = EnvParams::CartPole(CartPoleParams::default());
    for instance in 0..30 {
        let dim = rng.gen_range(1..=4);
        let horizon = rng.gen_range(1..=40);
        let expert_count = rng.gen_range(1..=4);
        let agent = DiscreteMeasure::new(random_states(&mut rng, horizon, dim))?;
        let trajectories: Vec<Trajectory> = (0..expert_count)
            .map(|_| {
                let len = rng.gen_range(horizon..=horizon + 30);
                Trajectory::new(random_states(&mut rng, len, dim), None, env.clone(), 0, 0.0)
            })
            .collect::<Result<_>>()?;
        let experts = ExpertSet::new(trajectories)?;
        let projections = sample_projections(dim, rng.gen_range(1..=20), rng.gen())?;

        let combined = combine_concat_sample(
            &experts,
            horizon,
            CombineStrategy::Stratified,
            rng.gen(),
        )?;
        let combined_measure = combined.measure()?;
        let costs = scotil_costs(&agent, &combined_measure, &projections)?;
        let total: f64 = costs.iter().sum();
        let sw = sliced_w2_squared(&agent, &combined_measure, &projections)?;
        let gap = (total - sw).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(Error::Validation(format!(
                "instance {instance} ({}): cost sum {total} vs distance {sw}",
                RewardMode::Scotil.name()
            )));
        }

        let resampled: Vec<DiscreteMeasure> = experts
            .trajectories()
            .iter()
            .map(|t| crate::demos::evenly_resample(t, horizon).and_then(|t| t.measure()))
            .collect::<Result<_>>()?;
        let weights = BarycentricWeights::uniform(expert_count + 1)?;
        let costs = smmotil_costs(&agent, &resampled, &weights, &projections)?;
        let total: f64 = costs.iter().sum();
        let refs: Vec<&DiscreteMeasure> =
            std::iter::once(&agent).chain(resampled.iter()).collect();
        let smw = sliced_mw_squared(&refs, &weights, &projections)?;
        let gap = (total - smw).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(Error::Validation(format!(
                "instance {instance} ({}): cost sum {total} vs distance {smw}",
                RewardMode::Smmotil.name()
            )));
        }
    }
    Ok(format!("30 instances per mode, worst gap {worst:.2e}"))
}

fn check_point_mass_slicing() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14_000);
    let mut worst = 0.0f64;
    for pair in 0..3 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mu = DiscreteMeasure::new(vec![a.clone()])?;
        let nu = DiscreteMeasure::new(vec![b.clone()])?;
        let projections = sample_projections(3, 10_000, rng.gen())?;
        let sliced = sliced_w2_squared(&mu, &nu, &projections)?;
        let exact: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / 3.0;
        let rel = (sliced - exact).abs() / exact.max(1e-12);
        worst = worst.max(rel);
        if rel > 0.05 {
            return Err(Error::Validation(format!(
                "pair {pair}: sliced {sliced} vs ‖a−b‖²/3 = {exact} ({:.1}% off)",
                rel * 100.0
            )));
        }
    }
    Ok(format!("3 pairs at K=10000, worst relative error {worst:.2e}"))
}

fn check_gradients() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(15_000);
    let mut worst = 0.0f64;
    for instance in 0..10 {
        let inputs = rng.gen_range(1..=5);
        let hidden = rng.gen_range(1..=8);
        let outputs = rng.gen_range(1..=3);
        let net = MlpParams::init(&[inputs, hidden, outputs], rng.gen())?;
        let target = MlpParams::init(&[inputs, hidden, outputs], rng.gen())?;
        let batch: Vec<Transition> = (0..rng.gen_range(1..=4))
            .map(|_| Transition {
                state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                action: rng.gen_range(0..outputs),
                reward: rng.gen_range(-2.0..2.0),
                next_state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                done: rng.gen_bool(0.3),
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let (_, grad) = loss_and_gradient(&net, &target, &refs, 0.99)?;
        let h = 1e-5;
        for l in 0..net.layers.len() {
            for w_idx in 0..net.layers[l].weights.len() {
                let mut plus = net.clone();
                plus.layers[l].weights[w_idx] += h;
                let mut minus = net.clone();
                minus.layers[l].weights[w_idx] -= h;
                let fd = (loss_only(&plus, &target, &refs, 0.99)?
                    - loss_only(&minus, &target, &refs, 0.99)?)
                    / (2.0 * h);
                let analytic = grad.layers[l].weights[w_idx];
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
                if rel > 1e-4 {
                    return Err(Error::Validation(format!(
                        "instance {instance} layer {l} weight {w_idx}: analytic {analytic} vs \
                         finite difference {fd}"
                    )));
                }
            }
        }
    }
    Ok(format!("10 networks, worst relative error {worst:.2e}"))
}

fn check_serialization() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(16_000);
    let env = EnvParams::CartPole(CartPoleParams::default());
    for case in 0..10 {
        let trajectories: Vec<Trajectory> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let len = rng.gen_range(1..=30);
                let states = random_states(&mut rng, len, 4);
                let actions = (0..len).map(|_| rng.gen_range(0..2)).collect();
                Trajectory::new(
                    states,
                    Some(actions),
                    env.clone(),
                    rng.gen(),
                    rng.gen_range(-100.0..200.0),
                )
            })
            .collect::<Result<_>>()?;
        let experts = ExpertSet::new(trajectories)?;
        let text = serialize_demo_set(&experts)?;
        let loaded = parse_demo_set(&text)?;
        if loaded != experts {
            return Err(Error::Validation(format!(
                "demo set {case} changed across serialize/parse"
            )));
        }

        let sizes = vec![
            rng.gen_range(1..=6),
            rng.gen_range(1..=8),
            rng.gen_range(1..=4),
        ];
        let net = MlpParams::init(&sizes, rng.gen())?;
        let restored = params_from_str(&params_to_string(&net))?;
        if restored != net {
            return Err(Error::Validation(format!(
                "network {case} changed across serialize/parse"
            )));
        }
    }
    Ok("10 demo sets and 10 networks, all bit-identical".to_string())
}

fn check_projection_normalization() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17_000);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dim = rng.gen_range(1..=6);
        let count = rng.gen_range(1..=64);
        let projections = sample_projections(dim, count, rng.gen())?;
        for direction in projections.directions() {
            let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            let gap = (norm - 1.0).abs();
            worst = worst.max(gap);
            if gap > 1e-12 {
                return Err(Error::Validation(format!(
                    "direction has norm {norm}, expected 1"
                )));
            }
        }
    }
    Ok(format!("20 sets, worst norm deviation {worst:.2e}"))
}

fn run_check(
    name: &'static str,
    body: impl FnOnce() -> Result<String>,
) -> CheckReport {
    let start = Instant::now();
    let outcome = body();
    let millis = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(detail) => CheckReport {
            name,
            passed: true,
            millis,
            detail,
        },
        Err(e) => CheckReport {
            name,
            passed: false,
            millis,
            detail: e.to_string(),
        },
    }
}

/// Runs every self-check with `w2` as the 1D transport function under test.
pub fn run_all_with(w2: W2Fn) -> Vec<CheckReport> {
    vec![
        run_check("w2-oracle-equivalence", || check_w2_oracle(w2)),
        run_check("two-marginal-reduction", check_two_marginal_reduction),
        run_check("reward-sum-identity", check_reward_sum_identities),
        run_check("point-mass-slicing", check_point_mass_slicing),
        run_check("gradient-check", check_gradients),
        run_check("serialization-round-trip", check_serialization),
        run_check("projection-normalization", check_projection_normalization),
    ]
}

/// Runs every self-check against the production implementations.
pub fn run_all() -> Vec<CheckReport> {
    run_all_with(w2_squared_1d)
}

/// Prints the report table and errors if any check failed (so the process
/// exits nonzero).
pub fn cmd_verify() -> Result<()> {
    let reports = run_all();
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    println!("{:<width$}  {:<6}  {:>9}  detail", "check", "status", "time");
    for report in &reports {
        println!(
            "{:<width$}  {:<6}  {:>7.1} ms  {}",
            report.name,
            if report.passed { "PASS" } else { "FAIL" },
            report.millis,
            report.detail
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Error::Validation(format!(
            "{failed} of {} self-checks failed",
            reports.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_the_real_implementations() {
        let start = Instant::now();
        let reports = run_all();
        assert_eq!(reports.len(), 7);
        for report in &reports {
            assert!(
                report.passed,
                "{} failed: {}",
                report.name, report.detail
            );
            assert!(!report.detail.is_empty());
        }
        // CI contract: the whole suite stays fast.
        assert!(
            start.elapsed().as_secs() < 60,
            "self-checks took {:?}",
            start.elapsed()
        );
    }

    #[test]
    fn injected_sign_error_turns_the_oracle_check_red() {
        fn negated(u: &[f64], v: &[f64]) -> Result<f64> {
            w2_squared_1d(u, v).map(|x| -x)
        }
        let reports = run_all_with(negated);
        let oracle = reports
            .iter()
            .find(|r| r.name == "w2-oracle-equivalence")
            .unwrap();
        assert!(!oracle.passed, "mutated implementation must fail");
        // The mutation is confined to the injected function; independent
        // checks still pass.
        let reduction = reports
            .iter()
            .find(|r| r.name == "two-marginal-reduction")
            .unwrap();
        assert!(reduction.passed);
    }

    #[test]
    fn brute_force_oracle_handles_known_cases() {
        // Crossing pairs: {0, 2} vs {1, 3} pairs sorted, cost (1+1)/2.
        assert!((brute_force_w2(&[0.0, 2.0], &[3.0, 1.0]) - 1.0).abs() < 1e-12);
        // Identical singletons.
        assert_eq!(brute_force_w2(&[5.0], &[5.0]), 0.0);
        // The anti-sorted pairing would cost more; the oracle must find the
        // sorted one.
        let direct = brute_force_w2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(direct, 0.0);
    }
}
