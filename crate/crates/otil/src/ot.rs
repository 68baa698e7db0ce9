//! Sliced optimal-transport core.
//!
//! Trajectories are treated as uniform discrete measures (one Dirac atom per
//! state). The squared 1D Wasserstein-2 distance between two T-atom measures
//! has the closed form
//!
//! ```text
//! W2²(u, v) = (1/T) Σ_t |ũ_t − ṽ_t|²
//! ```
//!
//! over the sorted values ũ, ṽ. Sliced distances average that closed form
//! over `K` random unit projections. The multi-marginal Monge-Wasserstein
//! distance generalizes the pairing to P marginals: after sorting, the atoms
//! at each rank are compared against their weighted Euclidean barycenter,
//!
//! ```text
//! MW²(x¹..x^P; λ) = (1/N) Σ_t Σ_p λ_p |x̃_t^(p) − Σ_j λ_j x̃_t^(j)|².
//! ```
//!
//! All reductions are sequential in projection order, then rank order, so
//! results are bit-reproducible for fixed inputs regardless of caller
//! threading.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A uniform discrete measure: `len()` atoms in `dim()` dimensions, each with
/// mass `1/len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    dim: usize,
}

impl DiscreteMeasure {
    /// Builds a measure from atoms. Requires at least one atom, a consistent
    /// nonzero dimension, and finite coordinates.
    pub fn new(atoms: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument(
                "a discrete measure needs at least one atom".into(),
            ));
        }
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "measure atoms must have dimension >= 1".into(),
            ));
        }
        for (i, atom) in atoms.iter().enumerate() {
            if atom.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} has dimension {} but atom 0 has dimension {dim}",
                    atom.len()
                )));
            }
            if atom.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self { atoms, dim })
    }

    /// Convenience constructor from borrowed state vectors.
    pub fn from_states(states: &[Vec<f64>]) -> Result<Self> {
        Self::new(states.to_vec())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }
}

/// A set of unit-norm projection directions on the sphere S^(dim−1).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    directions: Vec<Vec<f64>>,
    dim: usize,
}

impl ProjectionSet {
    pub fn count(&self) -> usize {
        self.directions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }
}

/// Draws `count` directions uniformly on S^(dim−1), deterministically from
/// `seed`, by normalizing standard Gaussian vectors.
///
/// For `dim == 1` the sphere is the two-point set {−1, +1} and the sign of
/// the Gaussian draw is used directly, so each direction is exactly ±1.
pub fn sample_projections(dim: usize, count: usize, seed: u64) -> Result<ProjectionSet> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "projection dimension must be >= 1".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument(
            "projection count must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Vec::with_capacity(count);
    while directions.len() < count {
        let gauss: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        if dim == 1 {
            let g: f64 = gauss[0];
            if g == 0.0 {
                continue;
            }
            directions.push(vec![g.signum()]);
            continue;
        }
        let norm = gauss.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Resample the (measure-zero) degenerate draw instead of dividing by ~0.
        if norm < 1e-12 {
            continue;
        }
        directions.push(gauss.iter().map(|x| x / norm).collect());
    }
    Ok(ProjectionSet { directions, dim })
}

/// Barycentric weights λ on the simplex: nonnegative, summing to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricWeights {
    weights: Vec<f64>,
}

impl BarycentricWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "barycentric weights must be nonempty".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "barycentric weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "barycentric weights must sum to 1 (got {sum})"
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform weights 1/n over `n` marginals.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "cannot build uniform weights over zero marginals".into(),
            ));
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Per-projection, per-marginal sorting permutations.
///
/// `rank(k, p)[i]` is the sorted rank of marginal `p`'s atom `i` under
/// projection `k`; `inverse(k, p)[r]` is the original atom index occupying
/// rank `r`. Both are bijections on {0, …, T−1}; ties are broken by original
/// index (stable sort).
#[derive(Debug, Clone)]
pub struct SortedAlignment {
    ranks: Vec<Vec<Vec<usize>>>,
    inverses: Vec<Vec<Vec<usize>>>,
}

impl SortedAlignment {
    pub fn projection_count(&self) -> usize {
        self.ranks.len()
    }

    pub fn marginal_count(&self) -> usize {
        self.ranks.first().map_or(0, |m| m.len())
    }

    /// Original index → rank, for projection `k` and marginal `p`.
    pub fn rank(&self, k: usize, p: usize) -> &[usize] {
        &self.ranks[k][p]
    }

    /// Rank → original index, for projection `k` and marginal `p`.
    pub fn inverse(&self, k: usize, p: usize) -> &[usize] {
        &self.inverses[k][p]
    }
}

/// Projects every atom of `measure` onto `direction` and sorts ascending.
///
/// Returns the sorted values and the permutation mapping each original atom
/// index to its sorted rank. Ties are broken by original index.
pub fn project_and_sort(
    measure: &DiscreteMeasure,
    direction: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    if direction.len() != measure.dim() {
        return Err(Error::InvalidArgument(format!(
            "direction dimension {} does not match measure dimension {}",
            direction.len(),
            measure.dim()
        )));
    }
    let values = project(measure, direction);
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps tied atoms in original-index order.
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut ranks = vec![0usize; values.len()];
    for (rank, &orig) in order.iter().enumerate() {
        ranks[orig] = rank;
    }
    Ok((sorted, ranks))
}

/// Raw projections ⟨θ, x_t⟩ in atom order (no sorting).
pub fn project(measure: &DiscreteMeasure, direction: &[f64]) -> Vec<f64> {
    measure
        .atoms()
        .iter()
        .map(|atom| dot(atom, direction))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared 1D Wasserstein-2 distance between two sorted samples of equal
/// size: `(1/T) Σ_t |u_t − v_t|²`. Both inputs must be sorted ascending.
pub fn w2_squared_1d(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::InvalidArgument(
            "w2_squared_1d needs at least one value per side".into(),
        ));
    }
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "w2_squared_1d needs equal sample sizes (got {} and {})",
            u.len(),
            v.len()
        )));
    }
    debug_assert!(u.windows(2).all(|w| w[0] <= w[1]), "u must be sorted");
    debug_assert!(v.windows(2).all(|w| w[0] <= w[1]), "v must be sorted");
    let t = u.len() as f64;
    let mut total = 0.0;
    for (a, b) in u.iter().zip(v) {
        let d = a - b;
        total += d * d;
    }
    Ok(total / t)
}

/// Squared sliced Wasserstein-2 distance: the mean of the 1D closed form over
/// the projections. Measures must share dimension and atom count.
pub fn sliced_w2_squared(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    projections: &ProjectionSet,
) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidArgument(format!(
            "measure dimensions differ ({} vs {})",
            mu.dim(),
            nu.dim()
        )));
    }
    if mu.dim() != projections.dim() {
        return Err(Error::InvalidArgument(format!(
            "projection dimension {} does not match measure dimension {}",
            projections.dim(),
            mu.dim()
        )));
    }
    if mu.len() != nu.len() {
        return Err(Error::InvalidArgument(format!(
            "measures must have equal atom counts (got {} and {})",
            mu.len(),
            nu.len()
        )));
    }
    let mut total = 0.0;
    for direction in projections.directions() {
        let mut u = project(mu, direction);
        let mut v = project(nu, direction);
        u.sort_unstable_by(f64::total_cmp);
        v.sort_unstable_by(f64::total_cmp);
        total += w2_squared_1d(&u, &v)?;
    }
    Ok(total / projections.count() as f64)
}

/// Squared 1D multi-marginal Monge-Wasserstein distance over P sorted,
/// equally sized samples:
///
/// ```text
/// (1/N) Σ_t Σ_p λ_p |x̃_t^(p) − b_t|²,   b_t = Σ_j λ_j x̃_t^(j).
/// ```
pub fn mw_squared_1d(marginals: &[Vec<f64>], weights: &BarycentricWeights) -> Result<f64> {
    if marginals.is_empty() {
        return Err(Error::InvalidArgument(
            "mw_squared_1d needs at least one marginal".into(),
        ));
    }
    if weights.len() != marginals.len() {
        return Err(Error::InvalidArgument(format!(
            "got {} weights for {} marginals",
            weights.len(),
            marginals.len()
        )));
    }
    let n = marginals[0].len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "marginals must contain at least one value".into(),
        ));
    }
    for (p, m) in marginals.iter().enumerate() {
        if m.len() != n {
            return Err(Error::InvalidArgument(format!(
                "marginal {p} has {} values but marginal 0 has {n}",
                m.len()
            )));
        }
        debug_assert!(
            m.windows(2).all(|w| w[0] <= w[1]),
            "marginals must be sorted"
        );
    }
    let lambda = weights.as_slice();
    let mut total = 0.0;
    for t in 0..n {
        let barycenter: f64 = marginals
            .iter()
            .zip(lambda)
            .map(|(m, l)| l * m[t])
            .sum();
        for (m, l) in marginals.iter().zip(lambda) {
            let d = m[t] - barycenter;
            total += l * d * d;
        }
    }
    Ok(total / n as f64)
}

/// Squared sliced multi-marginal Monge-Wasserstein distance: the mean of
/// [`mw_squared_1d`] over the projections. Requires P ≥ 2 marginals of equal
/// dimension and atom count, and one weight per marginal.
pub fn sliced_mw_squared(
    measures: &[&DiscreteMeasure],
    weights: &BarycentricWeights,
    projections: &ProjectionSet,
) -> Result<f64> {
    if measures.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "sliced_mw_squared needs at least 2 marginals (got {})",
            measures.len()
        )));
    }
    if weights.len() != measures.len() {
        return Err(Error::InvalidArgument(format!(
            "got {} weights for {} marginals",
            weights.len(),
            measures.len()
        )));
    }
    let dim = measures[0].dim();
    let count = measures[0].len();
    for (p, m) in measures.iter().enumerate() {
        if m.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "marginal {p} has dimension {} but marginal 0 has {dim}",
                m.dim()
            )));
        }
        if m.len() != count {
            return Err(Error::InvalidArgument(format!(
                "marginal {p} has {} atoms but marginal 0 has {count}",
                m.len()
            )));
        }
    }
    if dim != projections.dim() {
        return Err(Error::InvalidArgument(format!(
            "projection dimension {} does not match measure dimension {dim}",
            projections.dim()
        )));
    }
    let mut total = 0.0;
    let mut sorted: Vec<Vec<f64>> = Vec::with_capacity(measures.len());
    for direction in projections.directions() {
        sorted.clear();
        for m in measures {
            let mut values = project(m, direction);
            values.sort_unstable_by(f64::total_cmp);
            sorted.push(values);
        }
        total += mw_squared_1d(&sorted, weights)?;
    }
    Ok(total / projections.count() as f64)
}

/// Builds the per-projection, per-marginal sorting permutations used to
/// attribute per-rank transport costs back to original time indices.
pub fn build_alignment(
    measures: &[&DiscreteMeasure],
    projections: &ProjectionSet,
) -> Result<SortedAlignment> {
    if measures.is_empty() {
        return Err(Error::InvalidArgument(
            "build_alignment needs at least one measure".into(),
        ));
    }
    let dim = measures[0].dim();
    let count = measures[0].len();
    for (p, m) in measures.iter().enumerate() {
        if m.dim() != dim || m.len() != count {
            return Err(Error::InvalidArgument(format!(
                "marginal {p} has shape ({}, {}) but marginal 0 has ({count}, {dim})",
                m.len(),
                m.dim()
            )));
        }
    }
    if dim != projections.dim() {
        return Err(Error::InvalidArgument(format!(
            "projection dimension {} does not match measure dimension {dim}",
            projections.dim()
        )));
    }
    let mut ranks = Vec::with_capacity(projections.count());
    let mut inverses = Vec::with_capacity(projections.count());
    for direction in projections.directions() {
        let mut per_marginal_ranks = Vec::with_capacity(measures.len());
        let mut per_marginal_inverses = Vec::with_capacity(measures.len());
        for m in measures {
            let (_, rank) = project_and_sort(m, direction)?;
            let mut inverse = vec![0usize; rank.len()];
            for (orig, &r) in rank.iter().enumerate() {
                inverse[r] = orig;
            }
            per_marginal_ranks.push(rank);
            per_marginal_inverses.push(inverse);
        }
        ranks.push(per_marginal_ranks);
        inverses.push(per_marginal_inverses);
    }
    Ok(SortedAlignment { ranks, inverses })
}
