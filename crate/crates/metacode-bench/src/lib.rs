//! Shared fixtures for the engine benchmarks: deterministic synthetic
//! datasets and pre-built observations sized so a benchmark iteration stays
//! in the millisecond range.

use metacode_core::dataset::{Dataset, PlantedConfig};
use metacode_core::graph::{ObservedNetwork, QueryOracle};

/// A planted-community dataset of `n_nodes` nodes, deterministic in `seed`.
pub fn planted(n_nodes: usize, seed: u64) -> Dataset {
    let cfg = PlantedConfig { n_nodes, seed, ..PlantedConfig::default() };
    metacode_core::dataset::synth_planted(&cfg).expect("valid planted config")
}

/// The observation after querying the first `n_queries` nodes of `data`.
pub fn observed_prefix(data: &Dataset, n_queries: usize) -> ObservedNetwork {
    let mut oracle = QueryOracle::new(&data.hidden, n_queries);
    let mut g = ObservedNetwork::new(data.hidden.n_nodes());
    for u in 0..n_queries {
        let neighbors = oracle.query(u).expect("budget covers the prefix");
        g.integrate_query(u, &neighbors).expect("valid query");
    }
    g
}
