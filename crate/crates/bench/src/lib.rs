//! Benchmark fixtures shared by the criterion targets.

use mpfair_core::scenario::random::{random_scenario, RandomShape};
use mpfair_core::{builtin_scenario, Network};

pub fn builtin(name: &str) -> Network {
    builtin_scenario(name)
        .expect("builtin scenario exists")
        .network()
        .expect("builtin scenario is valid")
}

/// `count` seeded multipoint networks, the same on every run.
pub fn random_multipoint(count: u64) -> Vec<Network> {
    (0..count)
        .map(|seed| {
            random_scenario(seed, RandomShape::MULTIPOINT)
                .network()
                .expect("generated scenarios are valid")
        })
        .collect()
}
