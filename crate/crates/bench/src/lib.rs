//! Shared fixtures for the benchmark suite.

use tile11_core::{run, Cluster};

/// Tile counts per iteration, for throughput labels.
pub const TILES: [u64; 7] = [1, 9, 71, 559, 4401, 34649, 272791];

/// Generates iteration `n` once, outside measured loops.
pub fn patch(n: u32) -> Cluster {
    run(n).expect("generation for a benchmark fixture")
}
