//! Operational model of the loss channel and the adaptive measurement strategy.
//!
//! Trees are stored breadth-first: the `b₀` first-row vertices come first and
//! every vertex has a larger index than its parent, so a single reverse sweep
//! evaluates removability bottom-up.
//!
//! Monte Carlo runs split trials into fixed blocks of [`TRIAL_BLOCK`] trials.
//! Block `j` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `j`, and within a block each trial draws one uniform `f64` per vertex in
//! index order (lost when the draw is `< ε₀`). Results therefore do not depend
//! on how blocks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::{qubit_count, BranchingVector, LossRate};
use crate::error::{Error, Result};

/// Largest tree handled by exact enumeration.
pub const MAX_ENUMERATION_QUBITS: usize = 24;

/// Trials per independent random stream.
pub const TRIAL_BLOCK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeGraph {
    shape: BranchingVector,
    level: Vec<u32>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl TreeGraph {
    pub fn shape(&self) -> &BranchingVector {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    /// Level of `v`, 1 for the first row.
    pub fn level(&self, v: usize) -> u32 {
        self.level[v]
    }

    /// Parent of `v`; first-row vertices hang off the virtual root and have none.
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn first_row(&self) -> std::ops::Range<usize> {
        0..self.shape.as_slice()[0] as usize
    }

    /// Number of vertices on each level, top to bottom.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.shape.len()];
        for &l in &self.level {
            sizes[l as usize - 1] += 1;
        }
        sizes
    }

    /// `v` followed by all of its descendants, in index order.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out.sort_unstable();
        out
    }
}

pub fn build_tree(b: &BranchingVector) -> Result<TreeGraph> {
    let total = qubit_count(b)?;
    let total = usize::try_from(total).map_err(|_| Error::Capacity {
        what: "tree size",
        actual: total,
        limit: usize::MAX as u64,
    })?;
    let mut level = Vec::with_capacity(total);
    let mut parent = Vec::with_capacity(total);
    let mut children = Vec::with_capacity(total);
    let branches = b.as_slice();
    for _ in 0..branches[0] {
        level.push(1);
        parent.push(None);
        children.push(Vec::new());
    }
    let mut row = 0..level.len();
    for (depth, &branch) in branches.iter().enumerate().skip(1) {
        let start = level.len();
        for p in row.clone() {
            for _ in 0..branch {
                children[p].push(level.len());
                level.push(depth as u32 + 1);
                parent.push(Some(p));
                children.push(Vec::new());
            }
        }
        row = start..level.len();
    }
    Ok(TreeGraph {
        shape: b.clone(),
        level,
        parent,
        children,
    })
}

/// Present/lost flag per tree vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossPattern {
    lost: Vec<bool>,
}

impl LossPattern {
    pub fn new(lost: Vec<bool>) -> Self {
        Self { lost }
    }

    pub fn all_present(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    pub fn all_lost(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    /// Bit `i` of `mask` marks vertex `i` lost.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::new((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, eps0: LossRate, rng: &mut R) -> Self {
        let e = eps0.value();
        Self::new((0..n).map(|_| rng.gen::<f64>() < e).collect())
    }

    pub fn len(&self) -> usize {
        self.lost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lost.is_empty()
    }

    pub fn is_lost(&self, v: usize) -> bool {
        self.lost[v]
    }

    pub fn set_lost(&mut self, v: usize, lost: bool) {
        self.lost[v] = lost;
    }

    pub fn lost_count(&self) -> usize {
        self.lost.iter().filter(|&&l| l).count()
    }

    fn check(&self, tree: &TreeGraph) -> Result<()> {
        if self.lost.len() != tree.len() {
            return Err(Error::invalid(format!(
                "loss pattern has {} entries but the tree has {} vertices",
                self.lost.len(),
                tree.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureReason {
    NoPresentFirstLevel,
    ChildRemovalFailed,
    SiblingRemovalFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    Success { a_vertex: usize },
    Failure(FailureReason),
}

impl TrialOutcome {
    pub fn is_success(self) -> bool {
        matches!(self, TrialOutcome::Success { .. })
    }
}

/// Whether `v` can be removed by an indirect Z measurement: some child `c` is
/// present and every child of `c` can be Z-removed (directly or indirectly).
/// The state of `v` itself is irrelevant.
pub fn indirect_removal_feasible(tree: &TreeGraph, pattern: &LossPattern, v: usize) -> bool {
    tree.children(v).iter().any(|&c| {
        !pattern.is_lost(c)
            && tree
                .children(c)
                .iter()
                .all(|&g| z_removal_feasible(tree, pattern, g))
    })
}

pub fn z_removal_feasible(tree: &TreeGraph, pattern: &LossPattern, v: usize) -> bool {
    !pattern.is_lost(v) || indirect_removal_feasible(tree, pattern, v)
}

/// Bottom-up removability of every vertex for one loss pattern.
struct Removability {
    indirect: Vec<bool>,
    z: Vec<bool>,
}

impl Removability {
    fn new(n: usize) -> Self {
        Self {
            indirect: vec![false; n],
            z: vec![false; n],
        }
    }

    fn evaluate(&mut self, tree: &TreeGraph, lost: impl Fn(usize) -> bool) {
        for v in (0..tree.len()).rev() {
            let ind = tree
                .children(v)
                .iter()
                .any(|&c| !lost(c) && tree.children(c).iter().all(|&g| self.z[g]));
            self.indirect[v] = ind;
            self.z[v] = !lost(v) || ind;
        }
    }

    fn outcome(&self, tree: &TreeGraph, lost: impl Fn(usize) -> bool) -> TrialOutcome {
        let row = tree.first_row();
        let Some(q) = row.clone().find(|&v| !lost(v)) else {
            return TrialOutcome::Failure(FailureReason::NoPresentFirstLevel);
        };
        if !tree.children(q).iter().all(|&c| self.z[c]) {
            return TrialOutcome::Failure(FailureReason::ChildRemovalFailed);
        }
        // vertices before q are all lost, so z-removability means indirect removal
        let siblings_ok =
            (row.start..q).all(|v| self.indirect[v]) && (q + 1..row.end).all(|v| self.z[v]);
        if siblings_ok {
            TrialOutcome::Success { a_vertex: q }
        } else {
            TrialOutcome::Failure(FailureReason::SiblingRemovalFailed)
        }
    }
}

/// The strategy: the first present first-row vertex `q` receives the A
/// measurement; success needs every child of `q` Z-removable, every earlier
/// (lost) first-row vertex indirectly removable and every later one
/// Z-removable. There is no second A attempt.
pub fn attempt_logical_measurement(
    tree: &TreeGraph,
    pattern: &LossPattern,
) -> Result<TrialOutcome> {
    pattern.check(tree)?;
    let mut table = Removability::new(tree.len());
    let lost = |v| pattern.is_lost(v);
    table.evaluate(tree, lost);
    Ok(table.outcome(tree, lost))
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::Capacity {
            what: "qubits to enumerate",
            actual: n as u64,
            limit: MAX_ENUMERATION_QUBITS as u64,
        });
    }
    Ok(())
}

const MASK_CHUNK: u64 = 1 << 12;

/// Counts, for every number of lost vertices `k`, the patterns with `k` losses
/// on which `predicate` holds. `predicate` sees the loss mask over `n` bits and
/// a scratch table for a tree of `tree_len` vertices.
fn profile_by_losses<F>(n: usize, tree_len: usize, predicate: F) -> Vec<u64>
where
    F: Fn(u64, &mut Removability) -> bool + Sync,
{
    let total = 1u64 << n;
    let chunks = total.div_ceil(MASK_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map_init(
            || Removability::new(tree_len),
            |table, chunk| {
                let mut counts = vec![0u64; n + 1];
                let end = ((chunk + 1) * MASK_CHUNK).min(total);
                for mask in chunk * MASK_CHUNK..end {
                    if predicate(mask, table) {
                        counts[mask.count_ones() as usize] += 1;
                    }
                }
                counts
            },
        )
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// `Σ_k count[k] · ε^k (1-ε)^(n-k)` in index order, for a profile over `n`
/// vertices as returned by [`success_profile`] or [`indirect_removal_profile`].
pub fn probability_from_profile(counts: &[u64], eps0: LossRate) -> f64 {
    let e = eps0.value();
    let n = counts.len() - 1;
    let total: f64 = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| c as f64 * e.powi(k as i32) * (1.0 - e).powi((n - k) as i32))
        .sum();
    total.clamp(0.0, 1.0)
}

/// Number of loss patterns, by loss count, on which the strategy succeeds.
pub fn success_profile(tree: &TreeGraph) -> Result<Vec<u64>> {
    let n = tree.len();
    check_enumerable(n)?;
    Ok(profile_by_losses(n, n, |mask, table| {
        let lost = |v: usize| mask >> v & 1 == 1;
        table.evaluate(tree, lost);
        table.outcome(tree, lost).is_success()
    }))
}

/// Exact success probability of the strategy by enumerating all `2^n` loss
/// patterns. Independent of the closed form in [`crate::analytics`].
pub fn exact_success(tree: &TreeGraph, eps0: LossRate) -> Result<f64> {
    Ok(probability_from_profile(&success_profile(tree)?, eps0))
}

/// Exact probability that `v` is indirectly removable, enumerating losses on
/// the descendants of `v` only.
pub fn exact_indirect_removal(tree: &TreeGraph, v: usize, eps0: LossRate) -> Result<f64> {
    Ok(probability_from_profile(
        &indirect_removal_profile(tree, v)?,
        eps0,
    ))
}

/// Number of loss patterns on the descendants of `v`, by loss count, for which
/// `v` is indirectly removable.
pub fn indirect_removal_profile(tree: &TreeGraph, v: usize) -> Result<Vec<u64>> {
    if v >= tree.len() {
        return Err(Error::invalid(format!("vertex {v} is not in the tree")));
    }
    let below: Vec<usize> = tree.subtree(v).into_iter().skip(1).collect();
    let k = below.len();
    check_enumerable(k)?;
    let mut slot = vec![usize::MAX; tree.len()];
    for (i, &u) in below.iter().enumerate() {
        slot[u] = i;
    }
    let counts = profile_by_losses(k, tree.len(), |mask, table| {
        let lost = |u: usize| slot[u] != usize::MAX && mask >> slot[u] & 1 == 1;
        table.evaluate(tree, lost);
        table.indirect[v]
    });
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p(1-p)/trials)` of the sample mean.
    pub std_error: f64,
    pub successes: u64,
    pub trials: u64,
}

/// Monte Carlo estimate of the strategy's success probability.
pub fn estimate_success(
    tree: &TreeGraph,
    eps0: LossRate,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let e = eps0.value();
    let n = tree.len();
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let successes: u64 = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let mut table = Removability::new(n);
            let mut lost = vec![false; n];
            let count = TRIAL_BLOCK.min(trials - block * TRIAL_BLOCK);
            let mut hits = 0u64;
            for _ in 0..count {
                lost.iter_mut().for_each(|l| *l = rng.gen::<f64>() < e);
                table.evaluate(tree, |v| lost[v]);
                hits += u64::from(table.outcome(tree, |v| lost[v]).is_success());
            }
            hits
        })
        .sum();
    let p = successes as f64 / trials as f64;
    Ok(Estimate {
        estimate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        successes,
        trials,
    })
}
