//! Sliced optimal-transport distances between point clouds.
//!
//! Builds three small 2D point clouds, then:
//!   1. computes the exact 1D squared Wasserstein-2 distance on projections,
//!   2. averages over random directions to get the sliced W2 distance,
//!   3. computes the multi-marginal barycentric variant over all three clouds,
//!   4. demonstrates the two-marginal identity SMW = SW / 4.
//!
//! Run with: cargo run --example sliced_distances

use otil::ot::{
    mw_squared_1d, project, sample_projections, sliced_mw_squared, sliced_w2_squared,
    w2_squared_1d, BarycentricWeights, DiscreteMeasure,
};
use otil::Result;

fn grid_cloud(center: (f64, f64), spread: f64, n: usize) -> Vec<Vec<f64>> {
    // n points on a diagonal segment through the center.
    (0..n)
        .map(|i| {
            let t = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64 - 0.5
            };
            vec![center.0 + spread * t, center.1 + spread * t]
        })
        .collect()
}

fn main() -> Result<()> {
    let mu = DiscreteMeasure::new(grid_cloud((0.0, 0.0), 2.0, 8))?;
    let nu = DiscreteMeasure::new(grid_cloud((3.0, 1.0), 2.0, 8))?;
    let xi = DiscreteMeasure::new(grid_cloud((-1.0, 2.0), 1.0, 8))?;

    // One explicit projection: push both clouds onto a direction and compare
    // the sorted 1D values in closed form.
    let direction = [1.0, 0.0];
    let mut mu_proj = project(&mu, &direction);
    let mut nu_proj = project(&nu, &direction);
    mu_proj.sort_by(f64::total_cmp);
    nu_proj.sort_by(f64::total_cmp);
    let w2_1d = w2_squared_1d(&mu_proj, &nu_proj)?;
    println!("1D squared W2 along x-axis:        {w2_1d:.6}");

    // Sliced distance: average the 1D distance over K random unit directions.
    // These two clouds are translates of each other by delta = (3, 1), so the
    // 1D distance along any direction is exactly <delta, theta>^2 and the
    // K -> infinity limit is |delta|^2 / 2 = 5.
    for k in [10, 100, 10_000] {
        let projections = sample_projections(2, k, 7)?;
        let sliced = sliced_w2_squared(&mu, &nu, &projections)?;
        println!("sliced squared W2 with K = {k:>5}:  {sliced:.6}  (limit 5.0)");
    }

    // Multi-marginal: measures spread around the per-rank weighted barycenter
    // of all clouds at once instead of comparing one pair.
    let projections = sample_projections(2, 1_000, 7)?;
    let weights = BarycentricWeights::uniform(3)?;
    let smw = sliced_mw_squared(&[&mu, &nu, &xi], &weights, &projections)?;
    println!("three-marginal sliced distance:    {smw:.6}");

    // With exactly two marginals the barycentric form collapses to a quarter
    // of the pairwise distance.
    let two = BarycentricWeights::uniform(2)?;
    let smw2 = sliced_mw_squared(&[&mu, &nu], &two, &projections)?;
    let sw = sliced_w2_squared(&mu, &nu, &projections)?;
    println!("two-marginal identity: SMW = {smw2:.9}, SW/4 = {:.9}", sw / 4.0);

    // The same identity holds per projection in 1D.
    let m1d = mw_squared_1d(&[mu_proj.clone(), nu_proj.clone()], &two)?;
    println!("1D identity:           MW  = {m1d:.9}, W2/4 = {:.9}", w2_1d / 4.0);
    Ok(())
}
