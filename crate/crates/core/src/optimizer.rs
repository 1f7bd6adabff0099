//! Minimal-qubit search over branching vectors.
//!
//! The search is exact within [`SearchBounds`]. It works bottom-up: every
//! suffix `(b_k, …, b_m)` of a branching vector is summarised by a
//! [`LevelSummary`] plus its subtree size, and prepending a level is monotone
//! in both failure probabilities. A suffix that is no better in both failure
//! probabilities and no smaller (in the `(size, length, lexicographic)` order)
//! than another can never be part of a strictly preferred tree, so only the
//! Pareto front of suffixes is kept at each depth. The front for depth `d` is
//! produced by a k-way merge of the previous front with its `max_branch`
//! prepended copies, each of which is already sorted, so no candidate list is
//! ever materialised.
//!
//! Ties between trees of equal qubit count are broken by depth, then by the
//! lexicographic order of the branching vector.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use ordered_float::OrderedFloat;
use rayon::prelude::*;

use crate::analytics::{logical_success, BranchingVector, LevelSummary, LossRate};
use crate::error::{Error, Result};

/// Margin by which a tree must beat the physical loss rate to count as an improvement.
pub const THRESHOLD_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Largest depth index `m`, so vectors have at most `max_depth + 1` entries.
    pub max_depth: u32,
    pub max_branch: u32,
    pub max_qubits: u64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            max_depth: 8,
            max_branch: 60,
            max_qubits: 1_000_000_000,
        }
    }
}

impl SearchBounds {
    pub const MAX_DEPTH_LIMIT: u32 = 64;

    pub fn validate(&self) -> Result<()> {
        if self.max_branch == 0 {
            return Err(Error::invalid("max_branch must be at least 1"));
        }
        if self.max_qubits == 0 {
            return Err(Error::invalid("max_qubits must be at least 1"));
        }
        if self.max_depth > Self::MAX_DEPTH_LIMIT {
            return Err(Error::invalid(format!(
                "max_depth must be at most {}",
                Self::MAX_DEPTH_LIMIT
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub feasible: bool,
    pub best: Option<BranchingVector>,
    pub qubits: Option<u64>,
    pub achieved_eps_eff: Option<f64>,
    /// Number of suffix and whole-tree evaluations performed.
    pub evaluated: u64,
    pub eps0: LossRate,
    pub target_eps_eff: f64,
}

/// One cell of a [`sweep`]; cell-level failures do not abort the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps0: f64,
    pub target: f64,
    pub outcome: Result<OptimizationResult>,
}

#[derive(Clone, Copy, Debug)]
enum Target {
    AtMost(f64),
    Below(f64),
}

impl Target {
    fn accepts(self, eps_eff: f64) -> bool {
        match self {
            Target::AtMost(t) => eps_eff <= t,
            Target::Below(t) => eps_eff < t,
        }
    }
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::invalid(format!(
            "target effective loss must lie in (0, 1], got {target}"
        )));
    }
    Ok(())
}

/// Smallest tree within `bounds` whose effective loss rate is at most `target`.
pub fn optimize_tree(
    eps0: LossRate,
    target: f64,
    bounds: &SearchBounds,
) -> Result<OptimizationResult> {
    check_target(target)?;
    bounds.validate()?;
    Ok(search(eps0, Target::AtMost(target), target, bounds))
}

/// Whether some tree within `bounds` has `ε_eff < ε₀ - THRESHOLD_MARGIN`.
pub fn threshold_probe(eps0: LossRate, bounds: &SearchBounds) -> Result<bool> {
    bounds.validate()?;
    let limit = eps0.value() - THRESHOLD_MARGIN;
    if limit <= 0.0 {
        return Ok(false);
    }
    Ok(search(eps0, Target::Below(limit), limit, bounds).feasible)
}

/// Runs [`optimize_tree`] for every `(ε₀, target)` pair, `ε₀`-major, in input order.
pub fn sweep(eps0_list: &[f64], targets: &[f64], bounds: &SearchBounds) -> Result<Vec<SweepRow>> {
    if eps0_list.is_empty() {
        return Err(Error::invalid("empty loss-rate list"));
    }
    if targets.is_empty() {
        return Err(Error::invalid("empty target list"));
    }
    bounds.validate()?;
    let cells: Vec<(f64, f64)> = eps0_list
        .iter()
        .flat_map(|&e| targets.iter().map(move |&t| (e, t)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(eps0, target)| SweepRow {
            eps0,
            target,
            outcome: LossRate::new(eps0).and_then(|rate| optimize_tree(rate, target, bounds)),
        })
        .collect())
}

/// For `ε₀ ≥ 1/2` no tree beats `ε₀`.
///
/// Write `R` for the indirect-removal probability of a vertex and `B` for the
/// probability that all its children are Z-removable. Leaves have `R + B = 1`,
/// and if the children satisfy `R' + B' ≤ 1` then
/// `ε R' + (1-ε) B' ≤ ε + B'(1 - 2ε) ≤ ε`, which is exactly `R + B ≤ 1` one
/// level up. With `u = 1 - R₁ ≥ B₁` and `p = 1 - εu`,
/// `P = (p^b₀ - (ε(1-u))^b₀) B₁ ≤ (1-ε) b₀ u p^(b₀-1) ≤ (1-ε) b₀ u (1-u/2)^(b₀-1) ≤ 1-ε`,
/// the last step because `b u (1-u/2)^(b-1) ≤ 1` on `[0, 1]`.
fn below_loss_floor(eps0: f64, target: Target) -> bool {
    eps0 >= 0.5 && !target.accepts(eps0)
}

fn search(
    eps0: LossRate,
    target: Target,
    target_value: f64,
    bounds: &SearchBounds,
) -> OptimizationResult {
    if below_loss_floor(eps0.value(), target) {
        return infeasible(eps0, target_value, 0);
    }
    exhaustive(eps0, target, target_value, bounds)
}

fn infeasible(eps0: LossRate, target_value: f64, evaluated: u64) -> OptimizationResult {
    OptimizationResult {
        feasible: false,
        best: None,
        qubits: None,
        achieved_eps_eff: None,
        evaluated,
        eps0,
        target_eps_eff: target_value,
    }
}

fn exhaustive(
    eps0: LossRate,
    target: Target,
    target_value: f64,
    bounds: &SearchBounds,
) -> OptimizationResult {
    let mut evaluated = 0u64;
    let mut found = None;
    for cap in qubit_caps(bounds.max_qubits) {
        let front = build_front(eps0.value(), bounds, cap - 1, &mut evaluated);
        let (best, scanned) = best_rooted(&front, eps0.value(), target, bounds.max_branch, cap);
        evaluated += scanned;
        if best.is_some() {
            found = best;
            break;
        }
    }
    match found {
        Some(key) => {
            let best = BranchingVector::new(key.branches).expect("search produces valid vectors");
            let eps_eff = logical_success(&best, eps0).eps_eff;
            debug_assert!(target.accepts(eps_eff));
            OptimizationResult {
                feasible: true,
                best: Some(best),
                qubits: Some(key.qubits),
                achieved_eps_eff: Some(eps_eff),
                evaluated,
                eps0,
                target_eps_eff: target_value,
            }
        }
        None => infeasible(eps0, target_value, evaluated),
    }
}

/// Qubit caps tried in turn; small optima are found without building the large fronts.
fn qubit_caps(max_qubits: u64) -> Vec<u64> {
    let mut caps = Vec::new();
    let mut cap = 100u64;
    while cap < max_qubits {
        caps.push(cap);
        cap = cap.saturating_mul(10);
    }
    caps.push(max_qubits);
    caps
}

/// A suffix `(b_k, …, b_m)` together with its per-vertex subtree size
/// `b_k + b_k·b_{k+1} + …`.
#[derive(Clone, Debug)]
struct Suffix {
    summary: LevelSummary,
    size: u64,
    branches: Vec<u32>,
}

/// Non-dominated `(children_failure, indirect_failure)` pairs, with
/// `indirect_failure` strictly decreasing in `children_failure`.
#[derive(Default)]
struct Staircase {
    steps: BTreeMap<OrderedFloat<f64>, f64>,
}

impl Staircase {
    fn dominates(&self, s: &LevelSummary) -> bool {
        self.steps
            .range(..=OrderedFloat(s.children_failure))
            .next_back()
            .is_some_and(|(_, &f)| f <= s.indirect_failure)
    }

    fn insert(&mut self, s: &LevelSummary) {
        let key = OrderedFloat(s.children_failure);
        let stale: Vec<_> = self
            .steps
            .range(key..)
            .take_while(|(_, &f)| f >= s.indirect_failure)
            .map(|(&k, _)| k)
            .collect();
        for k in stale {
            self.steps.remove(&k);
        }
        self.steps.insert(key, s.indirect_failure);
    }
}

/// Head of one merge stream. Stream 0 carries the previous front unchanged;
/// stream `b` prepends `b` to it.
#[derive(PartialEq, Eq)]
struct Head<'a> {
    size: u64,
    len: usize,
    first: u32,
    rest: &'a [u32],
    stream: u32,
    idx: usize,
}

impl Ord for Head<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.size, self.len, self.first, self.rest, self.stream).cmp(&(
            other.size,
            other.len,
            other.first,
            other.rest,
            other.stream,
        ))
    }
}

impl PartialOrd for Head<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn head<'a>(prev: &'a [Suffix], stream: u32, idx: usize, max_size: u64) -> Option<Head<'a>> {
    let item = prev.get(idx)?;
    if stream == 0 {
        let (first, rest) = match item.branches.split_first() {
            Some((&f, r)) => (f, r),
            None => (0, &[][..]),
        };
        return Some(Head {
            size: item.size,
            len: item.branches.len(),
            first,
            rest,
            stream,
            idx,
        });
    }
    let size = u64::from(stream)
        .checked_mul(item.size + 1)
        .filter(|&s| s <= max_size)?;
    Some(Head {
        size,
        len: item.branches.len() + 1,
        first: stream,
        rest: &item.branches,
        stream,
        idx,
    })
}

/// Pareto front of all suffixes with at most `max_depth` entries, each entry
/// at most `max_branch`, and subtree size at most `max_size`; sorted by
/// `(size, length, lexicographic)`.
fn build_front(
    eps0: f64,
    bounds: &SearchBounds,
    max_size: u64,
    evaluated: &mut u64,
) -> Vec<Suffix> {
    let mut front = vec![Suffix {
        summary: LevelSummary::BELOW_LEAVES,
        size: 0,
        branches: Vec::new(),
    }];
    for depth in 1..=bounds.max_depth as usize {
        let mut heap = BinaryHeap::new();
        for stream in 0..=bounds.max_branch {
            if let Some(h) = head(&front, stream, 0, max_size) {
                heap.push(Reverse(h));
            }
        }
        let mut stairs = Staircase::default();
        let mut next = Vec::with_capacity(front.len());
        let mut grew = false;
        while let Some(Reverse(h)) = heap.pop() {
            let parent = &front[h.idx];
            let summary = if h.stream == 0 {
                parent.summary
            } else {
                *evaluated += 1;
                parent.summary.prepend(h.stream, eps0)
            };
            if !stairs.dominates(&summary) {
                stairs.insert(&summary);
                let branches = if h.stream == 0 {
                    parent.branches.clone()
                } else {
                    grew |= h.len == depth;
                    let mut v = Vec::with_capacity(h.len);
                    v.push(h.stream);
                    v.extend_from_slice(&parent.branches);
                    v
                };
                next.push(Suffix {
                    summary,
                    size: h.size,
                    branches,
                });
            }
            if let Some(n) = head(&front, h.stream, h.idx + 1, max_size) {
                heap.push(Reverse(n));
            }
        }
        front = next;
        if !grew {
            // nothing new at this depth, so deeper levels cannot add anything either
            break;
        }
    }
    front
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TreeKey {
    qubits: u64,
    len: usize,
    branches: Vec<u32>,
}

/// Best full tree `(b₀, suffix)` with `Q ≤ cap` meeting `target`, and the number
/// of evaluations spent.
fn best_rooted(
    front: &[Suffix],
    eps0: f64,
    target: Target,
    max_branch: u32,
    cap: u64,
) -> (Option<TreeKey>, u64) {
    front
        .par_iter()
        .map(|s| {
            let mut evals = 0u64;
            for b0 in 1..=max_branch {
                let qubits = match u64::from(b0).checked_mul(s.size + 1) {
                    Some(q) if q <= cap => q,
                    _ => break,
                };
                evals += 1;
                // Q grows with b0, so the first acceptable b0 is this suffix's best
                if target.accepts(s.summary.effective_loss(b0, eps0)) {
                    let mut branches = Vec::with_capacity(s.branches.len() + 1);
                    branches.push(b0);
                    branches.extend_from_slice(&s.branches);
                    let key = TreeKey {
                        qubits,
                        len: branches.len(),
                        branches,
                    };
                    return (Some(key), evals);
                }
            }
            (None, evals)
        })
        .reduce(
            || (None, 0),
            |(a, ea), (b, eb)| {
                let best = match (a, b) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                (best, ea + eb)
            },
        )
}

/// Fast best-improvement heuristic. Not optimal: `P` is not monotone in the
/// individual `b_i`, so it can stall or overshoot the true minimum.
pub fn greedy_tree(
    eps0: LossRate,
    target: f64,
    bounds: &SearchBounds,
) -> Result<OptimizationResult> {
    check_target(target)?;
    bounds.validate()?;
    let eps = |v: &[u32]| {
        logical_success(
            &BranchingVector::new(v.to_vec()).expect("positive entries"),
            eps0,
        )
        .eps_eff
    };
    let count = |v: &[u32]| {
        crate::analytics::qubit_count(&BranchingVector::new(v.to_vec()).expect("positive entries"))
            .unwrap_or(u64::MAX)
    };
    let mut current = vec![1u32];
    let mut current_eps = eps(&current);
    let mut evaluated = 1u64;
    while current_eps > target {
        let mut moves: Vec<Vec<u32>> = (0..current.len())
            .filter(|&i| current[i] < bounds.max_branch)
            .map(|i| {
                let mut v = current.clone();
                v[i] += 1;
                v
            })
            .collect();
        if current.len() <= bounds.max_depth as usize {
            let mut v = current.clone();
            v.push(1);
            moves.push(v);
        }
        let q_now = count(&current) as f64;
        let best_move = moves
            .into_iter()
            .filter(|v| count(v) <= bounds.max_qubits)
            .map(|v| {
                evaluated += 1;
                let e = eps(&v);
                let gain = (current_eps.ln() - e.ln()) / (count(&v) as f64 - q_now);
                (gain, e, v)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best_move {
            Some((_, e, v)) => {
                current = v;
                current_eps = e;
            }
            None => break,
        }
    }
    let feasible = current_eps <= target;
    let best = BranchingVector::new(current).expect("positive entries");
    Ok(OptimizationResult {
        feasible,
        qubits: feasible.then(|| count(best.as_slice())),
        achieved_eps_eff: feasible.then_some(current_eps),
        best: feasible.then_some(best),
        evaluated,
        eps0,
        target_eps_eff: target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::qubit_count;

    fn rate(x: f64) -> LossRate {
        LossRate::new(x).unwrap()
    }

    fn small() -> SearchBounds {
        SearchBounds {
            max_depth: 3,
            max_branch: 8,
            max_qubits: 2_000,
        }
    }

    #[test]
    fn lossless_needs_one_qubit() {
        let r = optimize_tree(rate(0.0), 1e-6, &SearchBounds::default()).unwrap();
        assert!(r.feasible);
        assert_eq!(r.best.unwrap().as_slice(), &[1]);
        assert_eq!(r.qubits, Some(1));
        assert_eq!(r.achieved_eps_eff, Some(0.0));
    }

    #[test]
    fn lenient_target_takes_single_qubit() {
        let r = optimize_tree(rate(0.3), 0.3, &small()).unwrap();
        assert_eq!(r.best.unwrap().as_slice(), &[1]);
        let r = optimize_tree(rate(0.3), 1.0, &small()).unwrap();
        assert_eq!(r.qubits, Some(1));
    }

    #[test]
    fn rejects_bad_targets_and_bounds() {
        for t in [0.0, -1e-3, 1.5, f64::NAN] {
            assert!(optimize_tree(rate(0.2), t, &small()).is_err(), "{t}");
        }
        let mut b = small();
        b.max_branch = 0;
        assert!(optimize_tree(rate(0.2), 0.1, &b).is_err());
        b = small();
        b.max_qubits = 0;
        assert!(threshold_probe(rate(0.2), &b).is_err());
    }

    #[test]
    fn result_is_sound_and_consistent() {
        let r = optimize_tree(rate(0.2), 1e-4, &SearchBounds::default()).unwrap();
        let best = r.best.clone().unwrap();
        assert_eq!(r.qubits.unwrap(), qubit_count(&best).unwrap());
        assert!(logical_success(&best, rate(0.2)).eps_eff <= 1e-4);
        assert!(r.evaluated > 0);
    }

    #[test]
    fn staircase_keeps_only_nondominated_pairs() {
        let s = |c, f| LevelSummary {
            children_failure: c,
            indirect_failure: f,
        };
        let mut st = Staircase::default();
        st.insert(&s(0.5, 0.5));
        assert!(st.dominates(&s(0.5, 0.5)));
        assert!(st.dominates(&s(0.6, 0.7)));
        assert!(!st.dominates(&s(0.4, 0.9)));
        assert!(!st.dominates(&s(0.9, 0.1)));
        st.insert(&s(0.2, 0.2));
        assert_eq!(st.steps.len(), 1);
        assert!(st.dominates(&s(0.5, 0.5)));
    }

    #[test]
    fn empty_sweep_lists_are_rejected() {
        assert!(sweep(&[0.2], &[], &small()).is_err());
        assert!(sweep(&[], &[0.1], &small()).is_err());
    }

    #[test]
    fn sweep_marks_bad_cells_without_aborting() {
        let rows = sweep(&[0.2, 1.5], &[1e-2, 0.0], &small()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].outcome.as_ref().unwrap().feasible);
        assert!(rows[1].outcome.is_err());
        assert!(rows[2].outcome.is_err());
        assert_eq!((rows[3].eps0, rows[3].target), (1.5, 0.0));
    }

    #[test]
    fn greedy_is_feasible_but_never_beats_exact() {
        for target in [1e-2, 1e-4] {
            let g = greedy_tree(rate(0.2), target, &SearchBounds::default()).unwrap();
            let e = optimize_tree(rate(0.2), target, &SearchBounds::default()).unwrap();
            assert!(g.feasible);
            assert!(g.achieved_eps_eff.unwrap() <= target);
            assert!(g.qubits.unwrap() >= e.qubits.unwrap());
        }
    }

    #[test]
    fn loss_floor_agrees_with_exhaustive_search() {
        let bounds = SearchBounds {
            max_depth: 6,
            max_branch: 30,
            max_qubits: 5_000,
        };
        for eps in [0.5, 0.55, 0.6, 0.8] {
            let limit = eps - THRESHOLD_MARGIN;
            let r = exhaustive(rate(eps), Target::Below(limit), limit, &bounds);
            assert!(!r.feasible, "{eps}");
            assert!(r.evaluated > 0);
            assert!(below_loss_floor(eps, Target::Below(limit)));
        }
        assert!(!below_loss_floor(
            0.49,
            Target::Below(0.49 - THRESHOLD_MARGIN)
        ));
        assert!(!below_loss_floor(0.5, Target::AtMost(0.5)));
        let lenient = optimize_tree(rate(0.5), 0.5, &bounds).unwrap();
        assert_eq!(lenient.best.unwrap().as_slice(), &[1]);
        assert!(!optimize_tree(rate(0.5), 0.49, &bounds).unwrap().feasible);
    }

    #[test]
    fn probe_trivial_cases() {
        assert!(!threshold_probe(rate(0.0), &small()).unwrap());
        assert!(!threshold_probe(rate(1.0), &small()).unwrap());
        assert!(threshold_probe(rate(0.2), &small()).unwrap());
    }
}
