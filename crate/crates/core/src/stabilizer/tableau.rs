use std::fmt;

use rand::Rng;

use super::{Basis, Graph, MeasurementRecord, PauliString, Sign};
use crate::error::{Error, Result};

/// `n` independent, commuting, signed Pauli generators on `n` qubits: a pure
/// stabilizer state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    gens: Vec<PauliString>,
}

fn bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a ^= b);
}

/// Row echelon form of the generators' symplectic rows, each tagged with the
/// set of original generators it is the product of.
struct Echelon {
    rows: Vec<(usize, Vec<u64>, Vec<u64>)>,
}

impl Echelon {
    fn new(gens: &[PauliString]) -> Self {
        let m = gens.len();
        let mut pending: Vec<(Vec<u64>, Vec<u64>)> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut combo = vec![0u64; m.div_ceil(64).max(1)];
                combo[i / 64] |= 1 << (i % 64);
                (g.bits(), combo)
            })
            .collect();
        let width = pending.first().map_or(0, |(b, _)| b.len() * 64);
        let mut rows = Vec::new();
        for col in 0..width {
            let Some(pos) = pending.iter().position(|(b, _)| bit(b, col)) else {
                continue;
            };
            let (pb, pc) = pending.swap_remove(pos);
            for (b, c) in pending.iter_mut() {
                if bit(b, col) {
                    xor_into(b, &pb);
                    xor_into(c, &pc);
                }
            }
            rows.push((col, pb, pc));
        }
        Self { rows }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Generators whose product has the same support as `bits`, if any.
    fn decompose(&self, bits: &[u64], m: usize) -> Option<Vec<u64>> {
        let mut rest = bits.to_vec();
        let mut combo = vec![0u64; m.div_ceil(64).max(1)];
        for (col, b, c) in &self.rows {
            if bit(&rest, *col) {
                xor_into(&mut rest, b);
                xor_into(&mut combo, c);
            }
        }
        rest.iter().all(|&w| w == 0).then_some(combo)
    }
}

impl StabilizerTableau {
    pub fn from_generators(gens: Vec<PauliString>) -> Result<Self> {
        let n = gens.len();
        if let Some(g) = gens.iter().find(|g| g.num_qubits() != n) {
            return Err(Error::invalid(format!(
                "generator on {} qubits in a tableau of {n} generators",
                g.num_qubits()
            )));
        }
        let t = Self { n, gens };
        t.health()?;
        Ok(t)
    }

    /// Graph state: generator `X_i ∏_{j∈N(i)} Z_j` with sign `+1` for every vertex.
    pub fn graph_state(g: &Graph) -> Self {
        let n = g.num_vertices();
        let gens = (0..n)
            .map(|i| {
                let mut p = PauliString::identity(n);
                p.set_x(i, true);
                for j in g.neighbors(i) {
                    p.set_z(j, true);
                }
                p
            })
            .collect();
        Self { n, gens }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.gens
    }

    /// Flips the sign of generator `i`. Used to corrupt a state on purpose.
    pub fn negate_generator(&mut self, i: usize) {
        self.gens[i].negate();
    }

    /// Generators commute pairwise, are Hermitian and independent.
    pub fn health(&self) -> Result<()> {
        for (i, g) in self.gens.iter().enumerate() {
            if !g.is_hermitian() {
                return Err(Error::invalid(format!("generator {i} is not Hermitian")));
            }
            if let Some(j) = (i + 1..self.n).find(|&j| !g.commutes_with(&self.gens[j])) {
                return Err(Error::invalid(format!(
                    "generators {i} and {j} anticommute"
                )));
            }
        }
        let rank = Echelon::new(&self.gens).rank();
        if rank != self.n {
            return Err(Error::invalid(format!(
                "generator rank {rank} < {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Sign with which the Pauli of `p`'s support occurs in the stabilizer
    /// group, or `None` if neither sign does.
    pub fn group_sign(&self, p: &PauliString) -> Option<Sign> {
        let combo = Echelon::new(&self.gens).decompose(&p.bits(), self.n)?;
        let mut product = PauliString::identity(self.n);
        for (i, g) in self.gens.iter().enumerate() {
            if bit(&combo, i) {
                product.mul_assign_right(g);
            }
        }
        debug_assert!(product.same_support(p));
        Some(product.sign())
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.group_sign(p) == Some(p.sign())
    }

    /// Both tableaux stabilize the same state.
    pub fn same_state(&self, other: &Self) -> bool {
        self.n == other.n && other.gens.iter().all(|g| self.contains(g))
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementRecord> {
        self.measure_with(q, basis, None, || Sign::from_minus(rng.gen()))
    }

    /// Measures with a prescribed outcome when the result is random; fails if
    /// the outcome is determined and differs.
    pub fn measure_forced(
        &mut self,
        q: usize,
        basis: Basis,
        outcome: Sign,
    ) -> Result<MeasurementRecord> {
        self.measure_with(q, basis, Some(outcome), || outcome)
    }

    fn measure_with(
        &mut self,
        q: usize,
        basis: Basis,
        forced: Option<Sign>,
        draw: impl FnOnce() -> Sign,
    ) -> Result<MeasurementRecord> {
        if q >= self.n {
            return Err(Error::invalid(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        let observable = PauliString::single(self.n, q, basis, Sign::Plus);
        let anti: Vec<usize> = (0..self.n)
            .filter(|&i| !self.gens[i].commutes_with(&observable))
            .collect();
        let Some((&pivot, others)) = anti.split_first() else {
            let outcome = self
                .group_sign(&observable)
                .expect("a commuting Pauli lies in the group of a pure state");
            if let Some(f) = forced.filter(|&f| f != outcome) {
                return Err(Error::Contradiction {
                    qubit: q,
                    forced: f.value(),
                    actual: outcome.value(),
                });
            }
            return Ok(MeasurementRecord {
                qubit: q,
                basis,
                outcome,
                deterministic: true,
            });
        };
        let pivot_gen = self.gens[pivot].clone();
        for &i in others {
            self.gens[i].mul_assign_right(&pivot_gen);
        }
        let outcome = draw();
        self.gens[pivot] = PauliString::single(self.n, q, basis, outcome);
        Ok(MeasurementRecord {
            qubit: q,
            basis,
            outcome,
            deterministic: false,
        })
    }
}

impl fmt::Display for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gens {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}
