//! Shared fixtures for the criterion benchmarks: planted two-community
//! graphs and cascade sets of a controlled size.

pub use cascom;

use cascom::rng::unit_uniform;
use cascom::simulate::{generate_set, EpidemicParams, Model};
use cascom::{CascadeSet, Graph};

/// Two dense communities of `per_side` nodes with sparse cross links,
/// the planted instance used throughout the benchmarks.
pub fn planted_graph(per_side: usize, seed: u64) -> Graph {
    let n = 2 * per_side;
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in (a + 1)..n as u32 {
            let same = (a as usize) / per_side == (b as usize) / per_side;
            let p = if same { 0.3 } else { 0.01 };
            if unit_uniform(seed, &[0xBE7C, a as u64, b as u64]) < p {
                edges.push((a, b, 1.0));
            }
        }
    }
    Graph::new(n, edges).expect("valid planted graph")
}

/// Bounded-duration SI cascades over the planted graph.
pub fn planted_cascades(g: &Graph, count: usize, seed: u64) -> CascadeSet {
    let params = EpidemicParams::si_bd(1.0);
    generate_set(&Model::SiBd(g), &params, count, seed).expect("simulation succeeds")
}
