//! Closed-form success probabilities for tree-encoded logical measurements.
//!
//! Levels are numbered from the top: level 1 holds the `b₀` first-row qubits,
//! and every level-`k` qubit has `b_k` children, with `b_{m+1} = 0`. `R_k` is
//! the probability that a level-`k` qubit can be removed indirectly, i.e. that
//! some child survives and all of that child's children can be Z-measured
//! (directly, or indirectly in turn).
//!
//! All arithmetic is carried out on failure probabilities (`1 - R_k` and the
//! probability that some child of a vertex cannot be Z-removed) so that the
//! effective loss rate keeps full relative precision when it is far below
//! machine epsilon.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tree shape `(b₀, b₁, …, b_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct BranchingVector(Vec<u32>);

impl BranchingVector {
    pub fn new(branches: Vec<u32>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("branching vector must not be empty"));
        }
        if let Some(pos) = branches.iter().position(|&b| b == 0) {
            return Err(Error::invalid(format!(
                "branching parameter b{pos} must be at least 1"
            )));
        }
        Ok(Self(branches))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Depth index `m` (number of entries minus one).
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl FromStr for BranchingVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("branching vector must not be empty"));
        }
        let branches = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::invalid(format!("bad branching entry {part:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(branches)
    }
}

impl fmt::Display for BranchingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Independent per-qubit loss probability `ε₀`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct LossRate(f64);

impl LossRate {
    pub fn new(eps0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps0) {
            return Err(Error::invalid(format!(
                "loss rate must lie in [0, 1], got {eps0}"
            )));
        }
        Ok(Self(eps0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessReport {
    /// Probability that the logical measurement pattern succeeds.
    pub p: f64,
    /// Effective logical loss rate `1 - p`, evaluated in complement form.
    pub eps_eff: f64,
    /// `R_1 … R_{m+1}`; the last entry is always zero.
    pub r: Vec<f64>,
}

/// What a level-`k` vertex sees of the tree below it, in failure form.
///
/// `indirect_failure` is `1 - R_k`; `children_failure` is the probability that
/// at least one of the `b_k` children of a level-`k` vertex cannot be
/// Z-removed. Both only depend on `(b_k, …, b_m)`, and prepending a level is
/// monotone in both, which the optimizer exploits for dominance pruning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSummary {
    pub indirect_failure: f64,
    pub children_failure: f64,
}

impl LevelSummary {
    /// Summary of the (empty) level below the leaves: `R_{m+1} = 0`, `b_{m+1} = 0`.
    pub const BELOW_LEAVES: LevelSummary = LevelSummary {
        indirect_failure: 1.0,
        children_failure: 0.0,
    };

    /// Summary one level up, for a vertex with `branch` children described by `self`.
    pub fn prepend(self, branch: u32, eps0: f64) -> LevelSummary {
        let b = f64::from(branch);
        // a child fails to serve as the X-measured qubit: lost, or some grandchild not removable
        let child_unusable = eps0 + (1.0 - eps0) * self.children_failure;
        let indirect_failure = clamp01(child_unusable.powf(b));
        // a child fails Z-removal with probability eps0 * (1 - R)
        let child_z_failure = eps0 * self.indirect_failure;
        let children_failure = clamp01(-(b * (-child_z_failure).ln_1p()).exp_m1());
        LevelSummary {
            indirect_failure,
            children_failure,
        }
    }

    pub fn indirect_success(self) -> f64 {
        clamp01(1.0 - self.indirect_failure)
    }

    /// Effective loss rate of a tree whose first row has `first_row` qubits and
    /// whose level-1 vertices are described by `self`.
    ///
    /// `1 - P = (1 - z₁^{b₀}·W) + (ε₀R₁)^{b₀}·W`, with `z₁ = 1 - ε₀(1 - R₁)` and
    /// `W` the probability that all children of the A-measured vertex are removable.
    pub fn effective_loss(self, first_row: u32, eps0: f64) -> f64 {
        let b0 = f64::from(first_row);
        let log_all_ok =
            b0 * (-eps0 * self.indirect_failure).ln_1p() + (-self.children_failure).ln_1p();
        let not_all_ok = -log_all_ok.exp_m1();
        let none_present =
            (eps0 * self.indirect_success()).powf(b0) * (1.0 - self.children_failure);
        clamp01(not_all_ok + none_present)
    }

    /// Direct (non-complement) evaluation of `P`.
    pub fn success(self, first_row: u32, eps0: f64) -> f64 {
        let b0 = f64::from(first_row);
        let z1 = 1.0 - eps0 * self.indirect_failure;
        let y = eps0 * self.indirect_success();
        clamp01((z1.powf(b0) - y.powf(b0)) * (1.0 - self.children_failure))
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Summaries of every level from 1 down to `m + 1`, folded up from the leaves.
fn fold_levels(b: &BranchingVector, eps0: f64) -> Vec<LevelSummary> {
    let below_first_row = &b.as_slice()[1..];
    let mut out = Vec::with_capacity(below_first_row.len() + 1);
    let mut summary = LevelSummary::BELOW_LEAVES;
    out.push(summary);
    for &branch in below_first_row.iter().rev() {
        summary = summary.prepend(branch, eps0);
        out.push(summary);
    }
    out.reverse();
    out
}

/// Level-1 summary for the tree `b`.
pub fn first_level_summary(b: &BranchingVector, eps0: LossRate) -> LevelSummary {
    b.as_slice()[1..]
        .iter()
        .rev()
        .fold(LevelSummary::BELOW_LEAVES, |s, &branch| {
            s.prepend(branch, eps0.value())
        })
}

/// Indirect-Z success probabilities `R_1 … R_{m+1}`.
pub fn indirect_z_success(b: &BranchingVector, eps0: LossRate) -> Vec<f64> {
    fold_levels(b, eps0.value())
        .into_iter()
        .map(LevelSummary::indirect_success)
        .collect()
}

pub fn logical_success(b: &BranchingVector, eps0: LossRate) -> SuccessReport {
    let eps = eps0.value();
    let levels = fold_levels(b, eps);
    let first = levels[0];
    let b0 = b.as_slice()[0];
    SuccessReport {
        p: first.success(b0, eps),
        eps_eff: first.effective_loss(b0, eps),
        r: levels
            .into_iter()
            .map(LevelSummary::indirect_success)
            .collect(),
    }
}

/// Number of physical qubits in the tree: `Σ_i ∏_{j≤i} b_j`.
pub fn qubit_count(b: &BranchingVector) -> Result<u64> {
    let overflow = || Error::Capacity {
        what: "qubit count",
        actual: u64::MAX,
        limit: u64::MAX,
    };
    let mut level = 1u64;
    let mut total = 0u64;
    for &branch in b.as_slice() {
        level = level.checked_mul(u64::from(branch)).ok_or_else(overflow)?;
        total = total.checked_add(level).ok_or_else(overflow)?;
    }
    Ok(total)
}
