//! Shared fixtures for the benchmarks.

use losstree_core::{BranchingVector, LossRate};

/// Trees of increasing size used across the benchmarks.
pub const SHAPES: [&str; 4] = ["2,2,2", "4,5,6,1", "7,15,11,1", "15,28,36,2"];

pub fn shape(s: &str) -> BranchingVector {
    s.parse().expect("fixture shape")
}

pub fn rate(eps: f64) -> LossRate {
    LossRate::new(eps).expect("fixture loss rate")
}
