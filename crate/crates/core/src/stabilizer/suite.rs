//! Randomized verification of the measurement rules.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::rules::{counterfactual, paths_agree, tree_attachment, x_fusion, z_removal};
use super::Graph;
use crate::analytics::{qubit_count, BranchingVector};
use crate::error::{Error, Result};
use crate::simulator::{build_tree, TreeGraph};

/// Smallest graph size for which every rule has a valid instance.
pub const MIN_SUITE_QUBITS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Largest graph (and largest tree `Q`) drawn.
    pub max_qubits: usize,
    /// Instances per rule.
    pub instances: usize,
    /// Flip one generator sign before measuring; every rule should then fail.
    pub corrupt_sign: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_qubits: 12,
            instances: 500,
            corrupt_sign: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    pub rule: &'static str,
    pub instances: usize,
    pub passed: usize,
}

impl RuleReport {
    pub fn ok(&self) -> bool {
        self.passed == self.instances
    }
}

#[derive(Clone, Copy)]
enum Rule {
    ZRemoval,
    XFusion,
    IndirectZ,
    PathsAgree,
}

const RULES: [(Rule, &str); 4] = [
    (Rule::ZRemoval, "z_removal"),
    (Rule::XFusion, "x_fusion"),
    (Rule::IndirectZ, "counterfactual_indirect_z"),
    (Rule::PathsAgree, "counterfactual_paths_agree"),
];

pub fn run_suite(config: &SuiteConfig) -> Result<Vec<RuleReport>> {
    if config.max_qubits < MIN_SUITE_QUBITS {
        return Err(Error::invalid(format!(
            "suite needs graphs of at least {MIN_SUITE_QUBITS} qubits, got {}",
            config.max_qubits
        )));
    }
    if config.max_qubits > 64 {
        return Err(Error::Capacity {
            what: "suite graph size",
            actual: config.max_qubits as u64,
            limit: 64,
        });
    }
    if config.instances == 0 {
        return Err(Error::invalid("suite needs at least one instance"));
    }
    RULES
        .iter()
        .enumerate()
        .map(|(id, &(rule, name))| {
            let passed = (0..config.instances)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(((id as u64) << 32) | k as u64);
                    run_instance(rule, k, config, &mut rng)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&ok| ok)
                .count();
            Ok(RuleReport {
                rule: name,
                instances: config.instances,
                passed,
            })
        })
        .collect()
}

fn run_instance(rule: Rule, k: usize, config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<bool> {
    let max = config.max_qubits;
    let corrupt = config.corrupt_sign;
    match rule {
        Rule::ZRemoval => {
            let g = random_graph(rng.gen_range(2..=max), rng);
            let v = rng.gen_range(0..g.num_vertices());
            z_removal(&g, v, corrupt)
        }
        Rule::XFusion => match k % 3 {
            0 => {
                let n = rng.gen_range(4..=max);
                let i = rng.gen_range(1..n - 2);
                let (i, j) = if rng.gen() { (i, i + 1) } else { (i + 1, i) };
                x_fusion(&Graph::path(n), i, j, corrupt)
            }
            1 => {
                let (g, i, j) = random_fusion_graph(rng.gen_range(4..=max), rng);
                x_fusion(&g, i, j, corrupt)
            }
            _ => {
                let tree = random_tree(max - 3, 0, rng)?;
                tree_attachment(&tree, corrupt)
            }
        },
        Rule::IndirectZ => {
            let tree = random_tree(max, 1, rng)?;
            let v = pick_vertex(&tree, 1, rng);
            counterfactual(&tree, v, corrupt, rng)
        }
        Rule::PathsAgree => {
            let tree = random_tree(max, 2, rng)?;
            let v = pick_vertex(&tree, 2, rng);
            paths_agree(&tree, v, corrupt, rng)
        }
    }
}

fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let density = rng.gen_range(0.2..0.8);
    let mut g = Graph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                g.toggle_edge(a, b);
            }
        }
    }
    g
}

/// Random graph reshaped so that `(i, j)` admits the fusion rule.
fn random_fusion_graph(n: usize, rng: &mut ChaCha8Rng) -> (Graph, usize, usize) {
    let mut g = random_graph(n, rng);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (i, j, a, b) = (order[0], order[1], order[2], order[3]);
    g.isolate(i);
    g.toggle_edge(i, a);
    g.toggle_edge(i, j);
    g.remove_edge(a, j);
    if !g.has_edge(j, b) {
        g.toggle_edge(j, b);
    }
    (g, i, j)
}

/// Random tree with `Q <= max_qubits` containing a vertex with at least
/// `min_children` children.
fn random_tree(max_qubits: usize, min_children: usize, rng: &mut ChaCha8Rng) -> Result<TreeGraph> {
    loop {
        let depth = rng.gen_range(1..=3);
        let b: Vec<u32> = (0..depth).map(|_| rng.gen_range(1..=4)).collect();
        let b = BranchingVector::new(b)?;
        if qubit_count(&b)? > max_qubits as u64 {
            continue;
        }
        if min_children > 0
            && !b.as_slice()[1..]
                .iter()
                .any(|&x| x as usize >= min_children)
        {
            continue;
        }
        return build_tree(&b);
    }
}

fn pick_vertex(tree: &TreeGraph, min_children: usize, rng: &mut ChaCha8Rng) -> usize {
    let candidates: Vec<usize> = (0..tree.len())
        .filter(|&v| tree.children(v).len() >= min_children)
        .collect();
    *candidates
        .choose(rng)
        .expect("tree drawn with such a vertex")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(corrupt_sign: bool) -> SuiteConfig {
        SuiteConfig {
            seed: 11,
            max_qubits: 9,
            instances: 60,
            corrupt_sign,
        }
    }

    #[test]
    fn clean_suite_passes() {
        let reports = run_suite(&small(false)).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn corrupted_suite_fails_everywhere() {
        for r in run_suite(&small(true)).unwrap() {
            assert_eq!(r.passed, 0, "{r:?}");
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        assert_eq!(
            run_suite(&small(false)).unwrap(),
            run_suite(&small(false)).unwrap()
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small(false);
        c.max_qubits = 3;
        assert!(run_suite(&c).is_err());
        c.max_qubits = 8;
        c.instances = 0;
        assert!(run_suite(&c).is_err());
    }
}
