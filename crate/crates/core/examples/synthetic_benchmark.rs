//! Runs the synthetic benchmark: the full model against single-view models.
//!
//! ```text
//! cargo run --release -p menet-core --example synthetic_benchmark [seed]
//! cargo run --release -p menet-core --example synthetic_benchmark ablation [n_seeds]
//! ```
//!
//! The ablation mode removes one view's signal at a time by shuffling its
//! rows across users, and compares the full model with the best remaining
//! single view, averaged over seeds.

use std::time::Instant;

use menet::embed::ExecutionMode;
use menet::pipeline::ViewKind;
use menet::synthetic::{permute_rows, Benchmark};

fn single(seed: u64) -> menet::Result<()> {
    let bench = Benchmark::default();
    let t = Instant::now();
    let data = bench.prepare(seed, ExecutionMode::Deterministic)?;
    println!("featurized in {:.1?}", t.elapsed());
    let t = Instant::now();
    let full = bench.test_accuracy(&data.docs, &data.views, seed)?;
    println!("all views: test accuracy {full:.4} (trained in {:.1?})", t.elapsed());
    for (v, view) in ViewKind::ALL.iter().zip(&data.views) {
        let acc = bench.test_accuracy(&data.docs, std::slice::from_ref(view), seed)?;
        println!("{v:>9}: test accuracy {acc:.4}");
    }
    Ok(())
}

fn ablation(n_seeds: u64) -> menet::Result<()> {
    let bench = Benchmark::default();
    let mut full_sum = [0.0; 4];
    let mut best_sum = [0.0; 4];
    for seed in 0..n_seeds {
        let data = bench.prepare(seed, ExecutionMode::Deterministic)?;
        let singles: Vec<f64> = data
            .views
            .iter()
            .map(|v| bench.test_accuracy(&data.docs, std::slice::from_ref(v), seed))
            .collect::<menet::Result<_>>()?;
        for r in 0..4 {
            let mut views = data.views.clone();
            views[r] = permute_rows(&views[r], seed);
            let full = bench.test_accuracy(&data.docs, &views, seed)?;
            let best = (0..4).filter(|&i| i != r).map(|i| singles[i]).fold(0.0, f64::max);
            println!("seed {seed} without {:>9}: full {full:.4} best single {best:.4}", ViewKind::ALL[r]);
            full_sum[r] += full;
            best_sum[r] += best;
        }
    }
    for r in 0..4 {
        let n = n_seeds as f64;
        println!(
            "without {:>9}: mean full {:.4} mean best single {:.4}",
            ViewKind::ALL[r],
            full_sum[r] / n,
            best_sum[r] / n
        );
    }
    Ok(())
}

fn main() -> menet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("ablation") => ablation(args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10)),
        other => single(other.and_then(|s| s.parse().ok()).unwrap_or(0)),
    }
}
