//! Incremental Gauss-Jordan elimination over GF(2).
//!
//! Rows are kept fully reduced: each stored row has a unique pivot column and
//! zeros at every other pivot column. Once the rank reaches the number of
//! columns, each stored row is a standard basis vector and its right-hand side
//! is a column of the solved matrix.

use std::collections::BTreeMap;

use crate::bits::{BitMatrix, BitString};
use crate::error::{Error, Result};

/// Outcome of inserting one `(x, y)` sample into the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// The sample added a new pivot.
    NewPivot,
    /// The sample was linearly dependent and consistent with the system.
    Dependent,
    /// The sample was linearly dependent but contradicts the system.
    Inconsistent,
}

/// A linear system `M * x_j = y_j` with unknown matrix `M`.
pub struct Gf2System {
    cols: usize,
    out_bits: usize,
    // pivot column -> (reduced lhs, reduced rhs)
    pivots: BTreeMap<usize, (BitString, BitString)>,
}

impl Gf2System {
    pub fn new(cols: usize, out_bits: usize) -> Self {
        Self {
            cols,
            out_bits,
            pivots: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn insert(&mut self, x: &BitString, y: &BitString) -> Result<InsertOutcome> {
        if x.len() != self.cols {
            return Err(Error::InputLength {
                expected: self.cols,
                got: x.len(),
            });
        }
        if y.len() != self.out_bits {
            return Err(Error::InputLength {
                expected: self.out_bits,
                got: y.len(),
            });
        }
        let mut x = x.clone();
        let mut y = y.clone();
        for (&pivot, (px, py)) in &self.pivots {
            if x.get(pivot) {
                x.xor_assign(px);
                y.xor_assign(py);
            }
        }
        let Some(pivot) = x.leading_one() else {
            return Ok(if y.is_zero() {
                InsertOutcome::Dependent
            } else {
                InsertOutcome::Inconsistent
            });
        };
        // Back-eliminate the new pivot from existing rows.
        for (px, py) in self.pivots.values_mut() {
            if px.get(pivot) {
                px.xor_assign(&x);
                py.xor_assign(&y);
            }
        }
        self.pivots.insert(pivot, (x, y));
        Ok(InsertOutcome::NewPivot)
    }

    /// Recovers the full matrix. Requires full rank.
    pub fn solve(&self) -> Result<BitMatrix> {
        if self.pivots.len() < self.cols {
            return Err(Error::RankDeficient {
                rank: self.pivots.len(),
                needed: self.cols,
            });
        }
        // Full rank and fully reduced: the row with pivot j is e_j, so its
        // right-hand side is column j of the matrix.
        let mut m = BitMatrix::zeros(self.out_bits, self.cols);
        for (col, (lhs, rhs)) in &self.pivots {
            debug_assert_eq!(lhs.count_ones(), 1);
            for i in 0..self.out_bits {
                if rhs.get(i) {
                    m.set_bit(i, *col, true);
                }
            }
        }
        Ok(m)
    }
}

/// Solves for the exact matrix mapping every `x` to its paired output.
///
/// Fails with [`Error::RankDeficient`] when the inputs do not span the space
/// and with [`Error::InconsistentSamples`] when no linear map fits.
pub fn solve_exact(samples: &[(BitString, BitString)]) -> Result<BitMatrix> {
    let Some((x0, y0)) = samples.first() else {
        return Err(Error::RankDeficient { rank: 0, needed: 0 });
    };
    let mut sys = Gf2System::new(x0.len(), y0.len());
    for (x, y) in samples {
        if sys.insert(x, y)? == InsertOutcome::Inconsistent {
            return Err(Error::InconsistentSamples);
        }
    }
    sys.solve()
}

/// Solves on a maximal independent subset, ignoring contradicting dependent
/// samples. Used by learners that must always produce a hypothesis even when
/// the labels are not linear in the input.
pub fn solve_lenient(samples: &[(BitString, BitString)]) -> Result<BitMatrix> {
    let Some((x0, y0)) = samples.first() else {
        return Err(Error::RankDeficient { rank: 0, needed: 0 });
    };
    let mut sys = Gf2System::new(x0.len(), y0.len());
    for (x, y) in samples {
        let _ = sys.insert(x, y)?;
    }
    sys.solve()
}
