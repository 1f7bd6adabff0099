//! Stabilizer-formalism engine for graph states.
//!
//! A graph state on `G` is the joint +1 eigenstate of `K_i = X_i ∏_{j∈N(i)} Z_j`.
//! [`StabilizerTableau`] stores `n` commuting, independent generators with
//! signs and implements single-qubit Pauli measurement. [`rules`] checks the
//! measurement rewrite rules used by the loss-tolerant trees, and [`suite`]
//! runs them on randomized instances.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Mul;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulator::TreeGraph;

mod pauli;
pub mod rules;
pub mod suite;
mod tableau;

pub use pauli::PauliString;
pub use rules::{
    attachment_gadget, counterfactual_indirect_z, counterfactual_paths_agree, fusion_contraction,
    verify_tree_attachment, verify_x_fusion, verify_z_removal,
};
pub use suite::{run_suite, RuleReport, SuiteConfig};
pub use tableau::StabilizerTableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

/// A measurement outcome or generator sign, `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_minus(minus: bool) -> Self {
        if minus {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_minus(self.is_minus() != rhs.is_minus())
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_minus() { "-1" } else { "+1" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub basis: Basis,
    pub outcome: Sign,
    /// The measured operator was (up to sign) in the stabilizer group.
    pub deterministic: bool,
}

/// Simple undirected graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Linear cluster `0 - 1 - … - (n-1)`.
    pub fn path(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 1..n {
            g.adj[i - 1].insert(i);
            g.adj[i].insert(i - 1);
        }
        g
    }

    /// The tree plus one extra root vertex (index `tree.len()`) bonded to every
    /// first-row vertex, standing in for the rest of the logical cluster.
    pub fn from_tree(tree: &TreeGraph) -> Self {
        let root = tree.len();
        let mut g = Self::new(root + 1);
        for v in 0..root {
            let up = tree.parent(v).unwrap_or(root);
            g.adj[v].insert(up);
            g.adj[up].insert(v);
        }
        g
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.adj.len() {
            return Err(Error::invalid(format!(
                "vertex {v} out of range for a graph on {} vertices",
                self.adj.len()
            )));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if a == b {
            return Err(Error::invalid(format!("self-loop on vertex {a}")));
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a].remove(&b);
        self.adj[b].remove(&a);
    }

    pub fn toggle_edge(&mut self, a: usize, b: usize) {
        if self.has_edge(a, b) {
            self.remove_edge(a, b);
        } else if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Removes every edge incident to `v`.
    pub fn isolate(&mut self, v: usize) {
        for u in std::mem::take(&mut self.adj[v]) {
            self.adj[u].remove(&v);
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }
}
