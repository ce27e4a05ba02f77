//! Trailing column-norm tracking with a cancellation guard.

use alloc::vec::Vec;

use crate::matrix::DenseMatrix;

/// Fraction of the last exactly-computed squared norm below which a
/// downdated value is no longer trusted.
pub const RECOMPUTE_GUARD: f64 = 1e-6;

/// Squared trailing-column norms maintained by downdating.
///
/// Downdating `r_s <- r_s - a^2` is cheap but loses accuracy once most of the
/// norm has been subtracted away. Each column keeps the squared norm from its
/// last exact evaluation as a reference; when the running value drops below
/// `RECOMPUTE_GUARD` times the reference the column is flagged and the caller
/// must recompute it from matrix data before trusting it again.
#[derive(Debug, Clone)]
pub struct ColumnNormTracker {
    sq: Vec<f64>,
    reference: Vec<f64>,
    flagged: Vec<bool>,
}

impl ColumnNormTracker {
    /// Starts from the exact squared norms of the full columns of `a`.
    pub fn from_matrix(a: &DenseMatrix) -> Self {
        let sq: Vec<f64> = (0..a.cols()).map(|j| a.col_norm_sq_from(j, 0)).collect();
        Self {
            reference: sq.clone(),
            flagged: alloc::vec![false; sq.len()],
            sq,
        }
    }

    #[inline]
    pub fn norm_sq(&self, j: usize) -> f64 {
        self.sq[j]
    }

    #[inline]
    pub fn is_flagged(&self, j: usize) -> bool {
        self.flagged[j]
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }

    pub fn flagged_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flagged
            .iter()
            .enumerate()
            .filter_map(|(j, &f)| f.then_some(j))
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.sq.swap(a, b);
        self.reference.swap(a, b);
        self.flagged.swap(a, b);
    }

    /// Index of the largest tracked norm over `start..`; ties go to the
    /// lowest column index.
    pub fn argmax_from(&self, start: usize) -> usize {
        let mut best = start;
        for j in start + 1..self.sq.len() {
            if self.sq[j] > self.sq[best] {
                best = j;
            }
        }
        best
    }

    /// Removes the contribution `x^2` from column `j`. Returns `true` if the
    /// guard tripped and the column now needs an exact recompute.
    pub fn downdate(&mut self, j: usize, x: f64) -> bool {
        let next = self.sq[j] - x * x;
        self.sq[j] = if next > 0.0 { next } else { 0.0 };
        if self.sq[j] < RECOMPUTE_GUARD * self.reference[j] {
            self.flagged[j] = true;
        }
        self.flagged[j]
    }

    /// Adds the contribution `x^2` back to column `j` (used when a factored
    /// row re-enters the trailing block).
    pub fn update_add(&mut self, j: usize, x: f64) {
        self.sq[j] += x * x;
    }

    /// Overwrites column `j` with an exactly computed squared norm and clears
    /// its flag.
    pub fn recompute(&mut self, j: usize, sq: f64) {
        self.sq[j] = sq;
        self.reference[j] = sq;
        self.flagged[j] = false;
    }
}
