//! Rendering learning-curve summaries to a self-contained SVG figure.
//!
//! The training harness writes one `summary_<mode>.csv` per reward mode with
//! the across-seed mean and standard deviation of the moving-average return.
//! `render_svg` draws each mode as a line with a +/- one-std band; `cmd_plot`
//! does the same from a directory of summary files.
//!
//! Run with: cargo run --example plot_svg

use otil::harness::plot::{render_svg, SummarySeries};
use otil::harness::{moving_average, summarize};
use otil::Result;

fn main() -> Result<()> {
    // Fake three seeds per mode: noisy logistic learning curves where the
    // "smmotil" mode learns faster and more consistently.
    let episodes: Vec<usize> = (1..=120).collect();
    let curve = |rate: f64, midpoint: f64, wobble: f64, phase: f64| -> Vec<f64> {
        episodes
            .iter()
            .map(|&e| {
                let x = e as f64;
                let base = 200.0 / (1.0 + f64::exp(-rate * (x - midpoint)));
                let noise = wobble * (0.37 * x + phase).sin();
                (base + noise).clamp(0.0, 200.0)
            })
            .collect()
    };

    let mut series = Vec::new();
    for (mode, rate, midpoint, wobble) in
        [("scotil", 0.06, 70.0, 28.0), ("smmotil", 0.09, 55.0, 12.0)]
    {
        let seeds: Vec<Vec<f64>> = (0..3)
            .map(|s| moving_average(&curve(rate, midpoint, wobble, s as f64), 10))
            .collect();
        let (mean, std) = summarize(&seeds)?;
        series.push(SummarySeries {
            mode: mode.to_string(),
            episodes: episodes.clone(),
            mean,
            std,
        });
    }

    let svg = render_svg(&series)?;
    let path = std::env::temp_dir().join("otil_plot_example.svg");
    std::fs::write(&path, &svg)?;
    println!("wrote {} ({} bytes)", path.display(), svg.len());
    println!("open it in any browser; no external resources are referenced.");
    Ok(())
}
