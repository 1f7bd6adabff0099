//! Pauli strings `i^k · X^x · Z^z` over packed bit rows.

use std::fmt;

use super::{Basis, Sign};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Exponent of `i` in front of `X^x Z^z`, mod 4.
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    /// Single-qubit Pauli `basis` on qubit `q`, with sign.
    pub fn single(n: usize, q: usize, basis: Basis, sign: Sign) -> Self {
        let mut p = Self::identity(n);
        match basis {
            Basis::X => p.set_x(q, true),
            Basis::Z => p.set_z(q, true),
            Basis::Y => {
                // Y = i X Z
                p.set_x(q, true);
                p.set_z(q, true);
                p.phase = 1;
            }
        }
        p.set_sign(sign);
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn z(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn set_x(&mut self, q: usize, on: bool) {
        let bit = 1u64 << (q % 64);
        if on {
            self.x[q / 64] |= bit;
        } else {
            self.x[q / 64] &= !bit;
        }
    }

    pub fn set_z(&mut self, q: usize, on: bool) {
        let bit = 1u64 << (q % 64);
        if on {
            self.z[q / 64] |= bit;
        } else {
            self.z[q / 64] &= !bit;
        }
    }

    fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn is_hermitian(&self) -> bool {
        (u32::from(self.phase) + 4 - self.y_count() % 4).is_multiple_of(2)
    }

    /// Sign of a Hermitian string relative to the product of `X`, `Y`, `Z` factors.
    pub fn sign(&self) -> Sign {
        debug_assert!(self.is_hermitian());
        if (u32::from(self.phase) + 4 - self.y_count() % 4).is_multiple_of(4) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn set_sign(&mut self, sign: Sign) {
        let y = (self.y_count() % 4) as u8;
        self.phase = match sign {
            Sign::Plus => y,
            Sign::Minus => (y + 2) % 4,
        };
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    /// Same operator up to sign.
    pub fn same_support(&self, other: &Self) -> bool {
        self.x == other.x && self.z == other.z
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let overlap: u32 = self
            .x
            .iter()
            .zip(&other.z)
            .chain(self.z.iter().zip(&other.x))
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        overlap.is_multiple_of(2)
    }

    /// `self ← self · other`.
    pub fn mul_assign_right(&mut self, other: &Self) {
        // X^x1 Z^z1 X^x2 Z^z2 = (-1)^{z1·x2} X^{x1+x2} Z^{z1+z2}
        let swaps: u32 = self
            .z
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        self.phase = ((u32::from(self.phase) + u32::from(other.phase) + 2 * swaps) % 4) as u8;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Symplectic bits `(x | z)` as one row for elimination.
    pub(crate) fn bits(&self) -> Vec<u64> {
        self.x.iter().chain(&self.z).copied().collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_hermitian() {
            f.write_str(if self.sign() == Sign::Plus { "+" } else { "-" })?;
        } else {
            write!(f, "i^{}", (self.phase + 4 - (self.y_count() % 4) as u8) % 4)?;
        }
        for q in 0..self.n {
            let c = match (self.x(q), self.z(q)) {
                (false, false) => '.',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
