//! Loss tolerance of tree-encoded cluster states.
//!
//! A logical cluster qubit is replaced by a tree of physical qubits described
//! by a [`BranchingVector`]. When a physical qubit is lost, the Z measurement it
//! would have received can still be inferred from the stabilizer correlations
//! with qubits further down the tree. This crate provides:
//!
//! - [`analytics`]: closed-form success probabilities and qubit counts,
//! - [`optimizer`]: exact minimal-qubit search over branching vectors,
//! - [`simulator`]: explicit trees, loss patterns, exact enumeration and
//!   seeded Monte Carlo of the adaptive measurement strategy,
//! - [`stabilizer`]: a binary-symplectic tableau engine that checks the graph
//!   measurement rules the strategy relies on.
//!
//! ```
//! use losstree_core::{logical_success, qubit_count, BranchingVector, LossRate};
//!
//! let b: BranchingVector = "2,2,2".parse().unwrap();
//! let report = logical_success(&b, LossRate::new(0.2).unwrap());
//! assert_eq!(qubit_count(&b).unwrap(), 14);
//! assert!((report.p - 0.8697097800908837).abs() < 1e-12);
//! ```

pub mod analytics;
mod error;
pub mod optimizer;
pub mod simulator;
pub mod stabilizer;

pub use analytics::{
    indirect_z_success, logical_success, qubit_count, BranchingVector, LossRate, SuccessReport,
};
pub use error::{Error, Result};
pub use optimizer::{optimize_tree, sweep, threshold_probe, OptimizationResult, SearchBounds};
pub use simulator::{
    attempt_logical_measurement, build_tree, estimate_success, exact_success, LossPattern,
    TreeGraph, TrialOutcome,
};
pub use stabilizer::{
    run_suite, Basis, Graph, MeasurementRecord, RuleReport, Sign, StabilizerTableau, SuiteConfig,
};
