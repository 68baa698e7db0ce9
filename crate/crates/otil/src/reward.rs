//! Pseudo-reward engine: turns expert demonstrations plus an agent rollout
//! into per-timestep rewards.
//!
//! Two pathways are provided. **SCOTIL** first combines the experts into one
//! trajectory (concatenate and sub-sample), then attributes to each agent
//! timestep its share of the squared sliced Wasserstein-2 distance to that
//! combined expert:
//!
//! ```text
//! c_t = (1/(K·T)) Σ_k |⟨s_t^a − s^e_{η_{k,t}}, θ_k⟩|²
//! ```
//!
//! where η aligns atoms by sorted rank under each projection. **SMMOTIL**
//! treats the agent as marginal 0 of P+1 marginals and attributes to each
//! agent timestep the full per-rank barycentric cost at its rank:
//!
//! ```text
//! c_t = (1/(K·T)) Σ_k Σ_j λ_j |x̃_{ρ_k(t)}^(j) − b_{k,ρ_k(t)}|².
//! ```
//!
//! In both pathways the per-step costs sum exactly to the corresponding
//! squared sliced distance; [`relabel_episode`] recomputes that distance
//! independently and fails if the identity drifts beyond 1e-9.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demos::{evenly_resample, ExpertSet, Trajectory};
use crate::error::{Error, Result};
use crate::ot::{
    project_and_sort, sample_projections, sliced_mw_squared, sliced_w2_squared,
    BarycentricWeights, DiscreteMeasure, ProjectionSet,
};
use crate::seeding::derive_seed;

/// Seed stream separating expert combination from projection sampling.
const COMBINE_STREAM: u64 = 0xC0;

/// Which pseudo-reward pathway to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Scotil,
    Smmotil,
}

impl RewardMode {
    /// Stable lowercase name used in filenames and config values.
    pub fn name(&self) -> &'static str {
        match self {
            RewardMode::Scotil => "scotil",
            RewardMode::Smmotil => "smmotil",
        }
    }
}

/// How SCOTIL combines multiple experts into a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineStrategy {
    /// One uniformly chosen expert state per time slot.
    Stratified,
    /// A uniform draw of distinct time indices from the pooled time axis,
    /// each filled by a uniformly chosen expert holding that index.
    UniformPool,
}

/// Monotone-decreasing map from costs to rewards (a DQN maximizes reward
/// while transport cost must be minimized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// `r = −c`; the episodic return is then minus the squared sliced distance.
    Negate,
    /// `r = exp(−β·c·L)` for an episode of length L, giving bounded rewards
    /// in (0, 1]; the exponent scales like a per-step distance.
    Exp,
}

/// Configuration of the reward engine.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    pub mode: RewardMode,
    /// Number of random projections K.
    pub projection_count: usize,
    pub projection_seed: u64,
    /// SCOTIL only: expert combination strategy.
    pub combine_strategy: CombineStrategy,
    /// SMMOTIL only: weights over the P+1 marginals (agent first). `None`
    /// means uniform 1/(P+1).
    pub weights: Option<BarycentricWeights>,
    pub transform: TransformKind,
    /// EXP transform scale; must be positive.
    pub beta: f64,
    /// SCOTIL ablation: per-step cost uses |⟨·,θ⟩| instead of its square.
    /// The sum identity does not hold in this mode and is not enforced.
    pub absolute_cost: bool,
    /// Draw a fresh projection set per episode (seeded by the episode seed)
    /// instead of one fixed set for the whole run.
    pub fresh_projections: bool,
    /// Redraw the SCOTIL combination per episode instead of reusing one
    /// run-level combination seed.
    pub recombine_each_episode: bool,
}

impl RewardConfig {
    pub fn new(mode: RewardMode) -> Self {
        Self {
            mode,
            projection_count: 50,
            projection_seed: 0,
            combine_strategy: CombineStrategy::Stratified,
            weights: None,
            transform: TransformKind::Negate,
            beta: 5.0,
            absolute_cost: false,
            fresh_projections: true,
            recombine_each_episode: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.projection_count == 0 {
            return Err(Error::InvalidArgument(
                "projection_count must be >= 1".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta must be a positive real (got {})",
                self.beta
            )));
        }
        Ok(())
    }
}

/// An agent episode with per-step transport costs and transformed rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardedEpisode {
    pub states: Vec<Vec<f64>>,
    pub actions: Option<Vec<usize>>,
    /// Per-step transport costs, all ≥ 0.
    pub costs: Vec<f64>,
    /// `rewards[t] = transform(costs[t])`.
    pub rewards: Vec<f64>,
    /// Σ costs, accumulated in step order; equals the squared sliced distance.
    pub total_cost: f64,
}

/// Combines P expert trajectories into a single `horizon`-state trajectory.
///
/// Experts shorter than `horizon` are first evenly resampled to `horizon`.
/// `Stratified` picks, for each time slot, one expert uniformly and takes its
/// state at that slot. `UniformPool` draws `horizon` distinct time indices
/// uniformly from the pooled time axis (up to the longest expert), orders
/// them, and fills each with a uniformly chosen expert that reaches that
/// index. Deterministic given `seed`; actions are carried along when every
/// expert has them. The result's metadata comes from the first expert, its
/// `seed` is the combination seed, and `true_return` is 0 (a combined
/// trajectory was never rolled out).
pub fn combine_concat_sample(
    experts: &ExpertSet,
    horizon: usize,
    strategy: CombineStrategy,
    seed: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "combination horizon must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prepared: Vec<Trajectory> = experts
        .trajectories()
        .iter()
        .map(|t| {
            if t.len() < horizon {
                evenly_resample(t, horizon)
            } else {
                Ok(t.clone())
            }
        })
        .collect::<Result<_>>()?;
    let expert_count = prepared.len();
    let picks: Vec<(usize, usize)> = match strategy {
        CombineStrategy::Stratified => (0..horizon)
            .map(|t| (t, rng.gen_range(0..expert_count)))
            .collect(),
        CombineStrategy::UniformPool => {
            let t_max = prepared.iter().map(Trajectory::len).max().expect("P >= 1");
            let mut times: Vec<usize> =
                rand::seq::index::sample(&mut rng, t_max, horizon).into_vec();
            times.sort_unstable();
            times
                .into_iter()
                .map(|t| {
                    let eligible: Vec<usize> =
                        (0..expert_count).filter(|&p| prepared[p].len() > t).collect();
                    (t, eligible[rng.gen_range(0..eligible.len())])
                })
                .collect()
        }
    };
    let states: Vec<Vec<f64>> = picks
        .iter()
        .map(|&(t, p)| prepared[p].states()[t].clone())
        .collect();
    let actions = prepared
        .iter()
        .all(|t| t.actions().is_some())
        .then(|| {
            picks
                .iter()
                .map(|&(t, p)| prepared[p].actions().expect("checked")[t])
                .collect()
        });
    Trajectory::new(
        states,
        actions,
        experts.trajectories()[0].env_params.clone(),
        seed,
        0.0,
    )
}

fn check_pairwise_shapes(
    agent: &DiscreteMeasure,
    expert: &DiscreteMeasure,
    projections: &ProjectionSet,
) -> Result<()> {
    if agent.dim() != expert.dim() {
        return Err(Error::InvalidArgument(format!(
            "agent dimension {} does not match expert dimension {}",
            agent.dim(),
            expert.dim()
        )));
    }
    if agent.len() != expert.len() {
        return Err(Error::InvalidArgument(format!(
            "agent has {} atoms but expert has {} (resample the expert first)",
            agent.len(),
            expert.len()
        )));
    }
    if agent.dim() != projections.dim() {
        return Err(Error::InvalidArgument(format!(
            "projection dimension {} does not match state dimension {}",
            projections.dim(),
            agent.dim()
        )));
    }
    Ok(())
}

/// Per-step SCOTIL costs. `costs[t]` is agent atom `t`'s share of the squared
/// sliced Wasserstein-2 distance to the combined expert; the costs sum to
/// `sliced_w2_squared(agent, expert, projections)`.
pub fn scotil_costs(
    agent: &DiscreteMeasure,
    expert: &DiscreteMeasure,
    projections: &ProjectionSet,
) -> Result<Vec<f64>> {
    scotil_costs_impl(agent, expert, projections, false)
}

/// Ablation variant of [`scotil_costs`] with per-step terms |⟨·,θ⟩| instead
/// of their squares. The sum identity does not hold for this variant.
pub fn scotil_costs_absolute(
    agent: &DiscreteMeasure,
    expert: &DiscreteMeasure,
    projections: &ProjectionSet,
) -> Result<Vec<f64>> {
    scotil_costs_impl(agent, expert, projections, true)
}

fn scotil_costs_impl(
    agent: &DiscreteMeasure,
    expert: &DiscreteMeasure,
    projections: &ProjectionSet,
    absolute: bool,
) -> Result<Vec<f64>> {
    check_pairwise_shapes(agent, expert, projections)?;
    let t_count = agent.len();
    let scale = 1.0 / (projections.count() as f64 * t_count as f64);
    let mut costs = vec![0.0; t_count];
    for direction in projections.directions() {
        let (agent_sorted, agent_ranks) = project_and_sort(agent, direction)?;
        let (expert_sorted, _) = project_and_sort(expert, direction)?;
        for t in 0..t_count {
            let rank = agent_ranks[t];
            // The aligned expert atom is the one sharing this sorted rank.
            let gap = agent_sorted[rank] - expert_sorted[rank];
            costs[t] += if absolute { gap.abs() } else { gap * gap } * scale;
        }
    }
    Ok(costs)
}

/// Per-step SMMOTIL costs. The agent is marginal 0 of P+1 marginals; the
/// entire multi-marginal cost of rank ρ under each projection is attributed
/// to the agent atom occupying that rank. The costs sum to
/// `sliced_mw_squared([agent, experts...], weights, projections)`.
pub fn smmotil_costs(
    agent: &DiscreteMeasure,
    experts: &[DiscreteMeasure],
    weights: &BarycentricWeights,
    projections: &ProjectionSet,
) -> Result<Vec<f64>> {
    if experts.is_empty() {
        return Err(Error::InvalidArgument(
            "smmotil needs at least one expert measure".into(),
        ));
    }
    for expert in experts {
        check_pairwise_shapes(agent, expert, projections)?;
    }
    if weights.len() != experts.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "got {} weights for {} marginals (agent + {} experts)",
            weights.len(),
            experts.len() + 1,
            experts.len()
        )));
    }
    let t_count = agent.len();
    let lambda = weights.as_slice();
    let scale = 1.0 / (projections.count() as f64 * t_count as f64);
    let mut costs = vec![0.0; t_count];
    let mut sorted: Vec<Vec<f64>> = Vec::with_capacity(experts.len() + 1);
    for direction in projections.directions() {
        let (agent_sorted, agent_ranks) = project_and_sort(agent, direction)?;
        sorted.clear();
        sorted.push(agent_sorted);
        for expert in experts {
            let (values, _) = project_and_sort(expert, direction)?;
            sorted.push(values);
        }
        for t in 0..t_count {
            let rank = agent_ranks[t];
            let barycenter: f64 = sorted
                .iter()
                .zip(lambda)
                .map(|(values, l)| l * values[rank])
                .sum();
            let mut rank_cost = 0.0;
            for (values, l) in sorted.iter().zip(lambda) {
                let gap = values[rank] - barycenter;
                rank_cost += l * gap * gap;
            }
            costs[t] += rank_cost * scale;
        }
    }
    Ok(costs)
}

/// Maps nonnegative costs to rewards, strictly decreasing in the cost.
/// NEGATE gives `−c`; EXP gives `exp(−β·c·L)` with L the episode length.
pub fn transform_costs(costs: &[f64], config: &RewardConfig) -> Vec<f64> {
    let episode_len = costs.len() as f64;
    match config.transform {
        TransformKind::Negate => costs.iter().map(|c| -c).collect(),
        TransformKind::Exp => costs
            .iter()
            .map(|c| (-config.beta * c * episode_len).exp())
            .collect(),
    }
}

/// Relabels a finished agent episode with pseudo-rewards.
///
/// Every expert is evenly resampled to the episode length, a fresh projection
/// set is drawn from `(projection_seed, episode_seed)` (or the fixed run-level
/// set when `fresh_projections` is off), per-step costs are computed by the
/// configured pathway, the sum identity is verified against an independent
/// distance computation, and costs are transformed into rewards.
pub fn relabel_episode(
    agent_states: &[Vec<f64>],
    experts: &ExpertSet,
    config: &RewardConfig,
    episode_seed: u64,
) -> Result<RewardedEpisode> {
    config.validate()?;
    if agent_states.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot relabel an empty episode".into(),
        ));
    }
    let agent = DiscreteMeasure::from_states(agent_states)?;
    if agent.dim() != experts.dim() {
        return Err(Error::InvalidArgument(format!(
            "agent state dimension {} does not match expert dimension {}",
            agent.dim(),
            experts.dim()
        )));
    }
    let episode_len = agent_states.len();
    let resampled: Vec<Trajectory> = experts
        .trajectories()
        .iter()
        .map(|t| evenly_resample(t, episode_len))
        .collect::<Result<_>>()?;
    let projection_seed = if config.fresh_projections {
        derive_seed(config.projection_seed, episode_seed)
    } else {
        config.projection_seed
    };
    let projections = sample_projections(agent.dim(), config.projection_count, projection_seed)?;

    let (costs, expected_total) = match config.mode {
        RewardMode::Scotil => {
            let run_combine_seed = derive_seed(config.projection_seed, COMBINE_STREAM);
            let combine_seed = if config.recombine_each_episode {
                derive_seed(run_combine_seed, episode_seed)
            } else {
                run_combine_seed
            };
            let resampled_set = ExpertSet::new(resampled)?;
            let combined = combine_concat_sample(
                &resampled_set,
                episode_len,
                config.combine_strategy,
                combine_seed,
            )?;
            let expert_measure = combined.measure()?;
            if config.absolute_cost {
                let costs = scotil_costs_absolute(&agent, &expert_measure, &projections)?;
                (costs, None)
            } else {
                let costs = scotil_costs(&agent, &expert_measure, &projections)?;
                let expected = sliced_w2_squared(&agent, &expert_measure, &projections)?;
                (costs, Some(expected))
            }
        }
        RewardMode::Smmotil => {
            let expert_measures: Vec<DiscreteMeasure> = resampled
                .iter()
                .map(Trajectory::measure)
                .collect::<Result<_>>()?;
            let marginal_count = expert_measures.len() + 1;
            let weights = match &config.weights {
                Some(w) => {
                    if w.len() != marginal_count {
                        return Err(Error::InvalidArgument(format!(
                            "configured weights cover {} marginals but this run has {} \
                             (agent + {} experts)",
                            w.len(),
                            marginal_count,
                            expert_measures.len()
                        )));
                    }
                    w.clone()
                }
                None => BarycentricWeights::uniform(marginal_count)?,
            };
            let costs = smmotil_costs(&agent, &expert_measures, &weights, &projections)?;
            let mut all: Vec<&DiscreteMeasure> = Vec::with_capacity(marginal_count);
            all.push(&agent);
            all.extend(expert_measures.iter());
            let expected = sliced_mw_squared(&all, &weights, &projections)?;
            (costs, Some(expected))
        }
    };

    let mut total_cost = 0.0;
    for c in &costs {
        total_cost += c;
    }
    if let Some(expected) = expected_total {
        if (total_cost - expected).abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "reward-sum identity violated: per-step costs sum to {total_cost} but the \
                 sliced distance is {expected}"
            )));
        }
    }
    let rewards = transform_costs(&costs, config);
    Ok(RewardedEpisode {
        states: agent_states.to_vec(),
        actions: None,
        costs,
        rewards,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{CartPoleParams, EnvParams, PendulumParams};
    use proptest::prelude::*;
    // Both globs above re-export an `Rng`; pin the one we mean.
    use rand::Rng;

    fn traj_1d(values: &[f64]) -> Trajectory {
        // Metadata env is irrelevant for distance math; any valid params do.
        Trajectory::new(
            values.iter().map(|&v| vec![v]).collect(),
            None,
            EnvParams::CartPole(CartPoleParams::default()),
            0,
            0.0,
        )
        .unwrap()
    }

    fn traj_nd(states: Vec<Vec<f64>>) -> Trajectory {
        Trajectory::new(
            states,
            None,
            EnvParams::Pendulum(PendulumParams::default()),
            0,
            0.0,
        )
        .unwrap()
    }

    fn measure_1d(values: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    /// Finds a 1D projection seed whose single direction is +1.
    fn positive_direction_seed() -> u64 {
        (0..100)
            .find(|&seed| {
                sample_projections(1, 1, seed).unwrap().directions()[0][0] == 1.0
            })
            .expect("half of all seeds give +1")
    }

    #[test]
    fn combine_single_expert_is_verbatim() {
        let expert = traj_1d(&[1.0, 2.0, 3.0, 4.0]);
        let set = ExpertSet::new(vec![expert.clone()]).unwrap();
        for strategy in [CombineStrategy::Stratified, CombineStrategy::UniformPool] {
            let combined = combine_concat_sample(&set, 4, strategy, 99).unwrap();
            assert_eq!(combined.states(), expert.states());
        }
    }

    #[test]
    fn combine_identical_experts_is_any_single_expert() {
        let expert = traj_1d(&[5.0, -1.0, 0.5]);
        let set = ExpertSet::new(vec![expert.clone(), expert.clone(), expert.clone()]).unwrap();
        for strategy in [CombineStrategy::Stratified, CombineStrategy::UniformPool] {
            for seed in 0..20 {
                let combined = combine_concat_sample(&set, 3, strategy, seed).unwrap();
                assert_eq!(combined.states(), expert.states());
            }
        }
    }

    #[test]
    fn combine_is_deterministic_given_seed() {
        let a = traj_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let b = traj_1d(&[9.0, 8.0, 7.0, 6.0, 5.0]);
        let set = ExpertSet::new(vec![a, b]).unwrap();
        for strategy in [CombineStrategy::Stratified, CombineStrategy::UniformPool] {
            let x = combine_concat_sample(&set, 5, strategy, 7).unwrap();
            let y = combine_concat_sample(&set, 5, strategy, 7).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn combine_stratified_slots_are_unbiased() {
        let zeros = traj_1d(&[0.0, 0.0, 0.0]);
        let tens = traj_1d(&[10.0, 10.0, 10.0]);
        let set = ExpertSet::new(vec![zeros, tens]).unwrap();
        let mut tens_per_slot = [0usize; 3];
        for seed in 0..1000 {
            let combined =
                combine_concat_sample(&set, 3, CombineStrategy::Stratified, seed).unwrap();
            for (slot, state) in combined.states().iter().enumerate() {
                assert!(state[0] == 0.0 || state[0] == 10.0);
                if state[0] == 10.0 {
                    tens_per_slot[slot] += 1;
                }
            }
        }
        for (slot, &count) in tens_per_slot.iter().enumerate() {
            let fraction = count as f64 / 1000.0;
            assert!(
                (fraction - 0.5).abs() <= 0.05,
                "slot {slot}: fraction {fraction}"
            );
        }
    }

    #[test]
    fn combine_uniform_pool_subsamples_the_long_axis() {
        let long = traj_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let set = ExpertSet::new(vec![long.clone()]).unwrap();
        let combined =
            combine_concat_sample(&set, 4, CombineStrategy::UniformPool, 3).unwrap();
        assert_eq!(combined.len(), 4);
        // Distinct times in ascending order, each present in the original.
        let values: Vec<f64> = combined.states().iter().map(|s| s[0]).collect();
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
        assert_eq!(values, sorted);
    }

    #[test]
    fn combine_carries_actions_when_all_experts_have_them() {
        let params = EnvParams::CartPole(CartPoleParams::default());
        let with_actions = |v: f64, a: usize| {
            Trajectory::new(vec![vec![v; 4]; 3], Some(vec![a; 3]), params.clone(), 0, 0.0).unwrap()
        };
        let set = ExpertSet::new(vec![with_actions(0.0, 0), with_actions(1.0, 1)]).unwrap();
        let combined =
            combine_concat_sample(&set, 3, CombineStrategy::Stratified, 1).unwrap();
        let actions = combined.actions().expect("all experts had actions");
        for (state, &action) in combined.states().iter().zip(actions) {
            assert_eq!(state[0] as usize, action, "action rides with its state");
        }
    }

    #[test]
    fn combine_rejects_zero_horizon() {
        let set = ExpertSet::new(vec![traj_1d(&[1.0])]).unwrap();
        assert!(
            combine_concat_sample(&set, 0, CombineStrategy::Stratified, 0).is_err()
        );
    }

    #[test]
    fn scotil_hand_example() {
        let agent = measure_1d(&[0.0, 2.0]);
        let expert = measure_1d(&[1.0, 3.0]);
        let projections = sample_projections(1, 1, positive_direction_seed()).unwrap();
        let costs = scotil_costs(&agent, &expert, &projections).unwrap();
        assert_eq!(costs, vec![0.5, 0.5]);
        let total: f64 = costs.iter().sum();
        let expected = sliced_w2_squared(&agent, &expert, &projections).unwrap();
        assert!((total - expected).abs() < 1e-12);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scotil_identical_measures_cost_nothing() {
        let m = measure_1d(&[3.0, -1.0, 0.0]);
        let projections = sample_projections(1, 8, 4).unwrap();
        let costs = scotil_costs(&m, &m, &projections).unwrap();
        assert_eq!(costs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn scotil_rejects_shape_mismatches() {
        let a = measure_1d(&[0.0]);
        let b = measure_1d(&[0.0, 1.0]);
        let p = sample_projections(1, 2, 0).unwrap();
        assert!(scotil_costs(&a, &b, &p).is_err());
        let c = DiscreteMeasure::new(vec![vec![0.0, 0.0]]).unwrap();
        assert!(scotil_costs(&a, &c, &p).is_err());
    }

    #[test]
    fn smmotil_hand_example_single_atoms() {
        let agent = measure_1d(&[0.0]);
        let experts = vec![measure_1d(&[4.0])];
        let weights = BarycentricWeights::new(vec![0.5, 0.5]).unwrap();
        let projections = sample_projections(1, 1, positive_direction_seed()).unwrap();
        let costs = smmotil_costs(&agent, &experts, &weights, &projections).unwrap();
        // Barycenter is 2; each side contributes 1/2 · 4.
        assert_eq!(costs, vec![4.0]);
    }

    #[test]
    fn smmotil_identical_marginals_cost_nothing() {
        let m = DiscreteMeasure::new(vec![vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let weights = BarycentricWeights::uniform(3).unwrap();
        let projections = sample_projections(2, 8, 5).unwrap();
        let costs = smmotil_costs(&m, &[m.clone(), m.clone()], &weights, &projections).unwrap();
        // Summing three thirds of a value rounds, so the barycenter gap is
        // not exactly zero, only a few ulp squared.
        assert_eq!(costs.len(), 2);
        for c in costs {
            assert!((0.0..1e-24).contains(&c), "cost {c} not negligible");
        }
    }

    #[test]
    fn smmotil_single_expert_reduces_to_quarter_scotil() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        for trial in 0..20 {
            let t = rng.gen_range(1..30);
            let states =
                |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                    (0..t)
                        .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
                        .collect()
                };
            let agent = DiscreteMeasure::new(states(&mut rng)).unwrap();
            let expert = DiscreteMeasure::new(states(&mut rng)).unwrap();
            let weights = BarycentricWeights::uniform(2).unwrap();
            let projections = sample_projections(3, 10, 600 + trial).unwrap();
            let mm: f64 = smmotil_costs(&agent, &[expert.clone()], &weights, &projections)
                .unwrap()
                .iter()
                .sum();
            let pairwise: f64 = scotil_costs(&agent, &expert, &projections)
                .unwrap()
                .iter()
                .sum();
            assert!(
                (mm - pairwise / 4.0).abs() <= 1e-9,
                "trial {trial}: {mm} vs {}",
                pairwise / 4.0
            );
        }
    }

    #[test]
    fn smmotil_rejects_weight_count_mismatch() {
        let m = measure_1d(&[0.0, 1.0]);
        let weights = BarycentricWeights::uniform(3).unwrap();
        let projections = sample_projections(1, 2, 0).unwrap();
        assert!(smmotil_costs(&m, &[m.clone()], &weights, &projections).is_err());
    }

    #[test]
    fn costs_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for trial in 0..20 {
            let t = rng.gen_range(1..40);
            let states = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..t)
                    .map(|_| (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect())
                    .collect()
            };
            let agent = DiscreteMeasure::new(states(&mut rng)).unwrap();
            let e1 = DiscreteMeasure::new(states(&mut rng)).unwrap();
            let e2 = DiscreteMeasure::new(states(&mut rng)).unwrap();
            let projections = sample_projections(4, 5, 700 + trial).unwrap();
            for c in scotil_costs(&agent, &e1, &projections).unwrap() {
                assert!(c >= 0.0);
            }
            let weights = BarycentricWeights::uniform(3).unwrap();
            for c in smmotil_costs(&agent, &[e1.clone(), e2.clone()], &weights, &projections)
                .unwrap()
            {
                assert!(c >= 0.0);
            }
        }
    }

    #[test]
    fn transform_hand_examples() {
        let negate = RewardConfig::new(RewardMode::Scotil);
        assert_eq!(transform_costs(&[0.0, 0.5], &negate), vec![0.0, -0.5]);

        let mut exp = RewardConfig::new(RewardMode::Scotil);
        exp.transform = TransformKind::Exp;
        exp.beta = 5.0;
        let rewards = transform_costs(&[0.0, 1.0, 2.0], &exp);
        assert_eq!(rewards[0], 1.0);
        for r in &rewards {
            assert!(*r > 0.0 && *r <= 1.0);
        }
        for pair in rewards.windows(2) {
            assert!(pair[0] > pair[1], "strictly decreasing in cost");
        }
    }

    #[test]
    fn relabel_identical_agent_and_expert_gives_zero_rewards() {
        let expert = traj_nd(vec![vec![0.1, 0.9, -0.5], vec![0.3, 0.5, 0.2]]);
        let experts = ExpertSet::new(vec![expert.clone()]).unwrap();
        for mode in [RewardMode::Scotil, RewardMode::Smmotil] {
            let config = RewardConfig::new(mode);
            let episode =
                relabel_episode(expert.states(), &experts, &config, 17).unwrap();
            assert_eq!(episode.total_cost, 0.0);
            for (c, r) in episode.costs.iter().zip(&episode.rewards) {
                assert_eq!(*c, 0.0);
                assert_eq!(*r, 0.0);
            }
        }
    }

    #[test]
    fn relabel_rejects_empty_episode_and_dimension_mismatch() {
        let experts = ExpertSet::new(vec![traj_nd(vec![vec![0.0, 0.0, 0.0]])]).unwrap();
        let config = RewardConfig::new(RewardMode::Scotil);
        assert!(relabel_episode(&[], &experts, &config, 0).is_err());
        assert!(relabel_episode(&[vec![0.0; 4]], &experts, &config, 0).is_err());
    }

    #[test]
    fn relabel_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let states: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let expert_states: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let experts = ExpertSet::new(vec![traj_nd(expert_states)]).unwrap();
        for mode in [RewardMode::Scotil, RewardMode::Smmotil] {
            let config = RewardConfig::new(mode);
            let a = relabel_episode(&states, &experts, &config, 21).unwrap();
            let b = relabel_episode(&states, &experts, &config, 21).unwrap();
            assert_eq!(a, b);
            // A different episode seed redraws projections, changing costs.
            let c = relabel_episode(&states, &experts, &config, 22).unwrap();
            assert_ne!(a.costs, c.costs);
        }
    }

    #[test]
    fn relabel_fixed_projections_ignore_episode_seed() {
        let states = vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.5]];
        let experts =
            ExpertSet::new(vec![traj_nd(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]])])
                .unwrap();
        let mut config = RewardConfig::new(RewardMode::Smmotil);
        config.fresh_projections = false;
        let a = relabel_episode(&states, &experts, &config, 1).unwrap();
        let b = relabel_episode(&states, &experts, &config, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relabel_resamples_experts_to_episode_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let expert_states: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let experts = ExpertSet::new(vec![traj_nd(expert_states)]).unwrap();
        let agent_states: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let config = RewardConfig::new(RewardMode::Smmotil);
        let episode = relabel_episode(&agent_states, &experts, &config, 0).unwrap();
        assert_eq!(episode.costs.len(), 50);
        assert_eq!(episode.rewards.len(), 50);
        assert_eq!(episode.states.len(), 50);
    }

    #[test]
    fn relabel_total_cost_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let shift = [0.7, -1.3, 2.1];
        let translate = |states: &[Vec<f64>]| -> Vec<Vec<f64>> {
            states
                .iter()
                .map(|s| s.iter().zip(&shift).map(|(x, d)| x + d).collect())
                .collect()
        };
        let agent: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let e1: Vec<Vec<f64>> = (0..35)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let e2: Vec<Vec<f64>> = (0..35)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for mode in [RewardMode::Scotil, RewardMode::Smmotil] {
            let config = RewardConfig::new(mode);
            let experts =
                ExpertSet::new(vec![traj_nd(e1.clone()), traj_nd(e2.clone())]).unwrap();
            let base = relabel_episode(&agent, &experts, &config, 3).unwrap();
            let experts_shifted =
                ExpertSet::new(vec![traj_nd(translate(&e1)), traj_nd(translate(&e2))]).unwrap();
            let shifted =
                relabel_episode(&translate(&agent), &experts_shifted, &config, 3).unwrap();
            assert!(
                (base.total_cost - shifted.total_cost).abs() <= 1e-9,
                "{mode:?}: {} vs {}",
                base.total_cost,
                shifted.total_cost
            );
        }
    }

    #[test]
    fn absolute_cost_ablation_changes_costs_and_skips_identity() {
        let agent = vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]];
        let experts =
            ExpertSet::new(vec![traj_nd(vec![vec![2.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]])])
                .unwrap();
        let mut config = RewardConfig::new(RewardMode::Scotil);
        config.absolute_cost = true;
        let episode = relabel_episode(&agent, &experts, &config, 5).unwrap();
        config.absolute_cost = false;
        let squared = relabel_episode(&agent, &experts, &config, 5).unwrap();
        assert_ne!(episode.costs, squared.costs);
        for c in &episode.costs {
            assert!(*c >= 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_reward_sum_identity_holds(
            agent_len in 1usize..25,
            expert_len in 1usize..40,
            expert_count in 1usize..4,
            k in prop::sample::select(vec![1usize, 5, 50]),
            seed in 0u64..1000,
            smm in proptest::bool::ANY,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mk = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
                (0..n).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect()
            };
            let agent = mk(&mut rng, agent_len);
            let experts = ExpertSet::new(
                (0..expert_count).map(|_| traj_nd(mk(&mut rng, expert_len))).collect()
            ).unwrap();
            let mut config = RewardConfig::new(
                if smm { RewardMode::Smmotil } else { RewardMode::Scotil }
            );
            config.projection_count = k;
            // relabel_episode verifies Σ costs against the independently
            // computed sliced distance and errors beyond 1e-9.
            let episode = relabel_episode(&agent, &experts, &config, seed).unwrap();
            prop_assert!(episode.costs.iter().all(|c| *c >= 0.0));
            prop_assert_eq!(episode.costs.len(), agent_len);
        }

        #[test]
        fn prop_exp_rewards_bounded(
            // Keep β·c·L below ~400 so exp() stays representable; beyond
            // roughly 745 the reward underflows to +0, which is outside the
            // scope of the (0, 1] bound.
            costs in proptest::collection::vec(0.0f64..4.0, 1..10),
            beta in 0.1f64..10.0,
        ) {
            let mut config = RewardConfig::new(RewardMode::Scotil);
            config.transform = TransformKind::Exp;
            config.beta = beta;
            for r in transform_costs(&costs, &config) {
                prop_assert!(r > 0.0 && r <= 1.0);
            }
        }

        #[test]
        fn prop_transforms_are_strictly_decreasing(
            a in 0.0f64..100.0,
            gap in 1e-6f64..50.0,
        ) {
            let b = a + gap;
            for transform in [TransformKind::Negate, TransformKind::Exp] {
                let mut config = RewardConfig::new(RewardMode::Scotil);
                config.transform = transform;
                config.beta = 0.01; // keep exp() away from underflow
                let r = transform_costs(&[a, b], &config);
                prop_assert!(r[0] > r[1], "{transform:?}: {} !> {}", r[0], r[1]);
            }
        }
    }
}
