//! Shared fixtures for the criterion benches.

use pathsel_core::dataset::{planted_dataset, PlantedSpec};
use pathsel_core::Dataset;

/// The planted dataset used across benches: target driven by f1, f2, f9.
pub fn bench_dataset() -> Dataset {
    planted_dataset(&PlantedSpec::new(vec![0, 1, 8]), 7).expect("planted dataset")
}
