//! Rough timing probe for the planted-data experiment path. Not part of the
//! test suite; run with `cargo run --release -p less-trees --example
//! probe_timing`.

use std::time::Instant;

use less_trees::data::{make_planted_dataset, train_test_split, PlantedConfig};
use less_trees::ensemble::{train_less_with_distribution, LessConfig};
use less_trees::scores::{leverage_distribution, uniform_distribution, SamplingScheme};

fn main() {
    let cfg = PlantedConfig {
        n_samples: 2000,
        n_features: 500,
        n_informative: 20,
        class_count: 2,
        noise_scale: 0.0,
        seed: 42,
    };
    let t0 = Instant::now();
    let ds = make_planted_dataset(&cfg).unwrap();
    println!("generate: {:?}", t0.elapsed());

    let (train, test) = train_test_split(&ds, 0.3, 7).unwrap();
    println!("train/test: {} / {}", train.n_samples(), test.n_samples());

    let t1 = Instant::now();
    let lev = leverage_distribution(train.matrix(), 50).unwrap();
    println!(
        "leverage svd (rank {:?}): {:?}",
        lev.effective_rank(),
        t1.elapsed()
    );
    let informative_mass: f64 = lev.probs()[..20].iter().sum();
    println!("leverage mass on informative @ rank 50: {informative_mass:.4}");

    let t1b = Instant::now();
    let lev20 = leverage_distribution(train.matrix(), 20).unwrap();
    let mass20: f64 = lev20.probs()[..20].iter().sum();
    println!(
        "leverage mass on informative @ rank 20: {mass20:.4} ({:?})",
        t1b.elapsed()
    );

    let norm = less_trees::scores::norm_distribution(train.matrix()).unwrap();
    let norm_mass: f64 = norm.probs()[..20].iter().sum();
    println!("norm mass on informative: {norm_mass:.4}");

    for (name, dist) in [
        ("leverage", lev),
        ("uniform", uniform_distribution(train.n_features())),
    ] {
        let t2 = Instant::now();
        let less = LessConfig {
            scheme: SamplingScheme::Leverage,
            k: 50,
            trees: 100,
            max_rank: 50,
            tree_params: Default::default(),
            seed: 11,
        };
        let model = train_less_with_distribution(
            train.matrix(),
            train.labels(),
            train.n_classes(),
            &dist,
            &less,
        )
        .unwrap();
        let train_time = t2.elapsed();
        let err = model.classification_error(test.matrix(), test.labels());
        let nodes = model.total_node_count();
        println!(
            "{name}: 100 trees in {train_time:?}, test error {err:.4}, nodes {nodes}, mean tree secs {:.4}",
            model.train_times_secs().iter().sum::<f64>() / 100.0
        );
    }
}
