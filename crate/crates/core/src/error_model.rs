//! Decision-error and observation-channel matrices.
//!
//! Matrices are stored column-stochastic: entry `(j, i)` is the probability
//! that action `i` (intended, or actually played) comes out as action `j`
//! (played, or observed). Applying a channel to a strategy is then `C · q`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::SimplexVector;
use crate::linalg::Matrix;
use crate::rng::sample_index;
use crate::scalar::Scalar;

/// Default `|det|` threshold below which a channel is treated as singular.
pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 1e-9;

/// How a user-supplied matrix lays out its probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Each row sums to one: entry `(i, j)` = P(i becomes j).
    Rows,
    /// Each column sums to one: entry `(j, i)` = P(i becomes j).
    Columns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T>(Matrix<T>);

impl<T: Scalar> ChannelMatrix<T> {
    /// Validates a column-stochastic matrix.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::shape(
                "channel matrix",
                "square, at least 2x2",
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        let tol = T::simplex_tol();
        for c in 0..m.cols() {
            if let Some(bad) = m.column(c).find(|&x| !(x >= T::zero() && x <= T::one())) {
                return Err(Error::NotStochastic {
                    column: c,
                    reason: format!("entry {bad} outside [0, 1]"),
                });
            }
            let sum: T = m.column(c).sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::NotStochastic {
                    column: c,
                    reason: format!("sums to {sum}"),
                });
            }
        }
        Ok(ChannelMatrix(m))
    }

    /// Validates a matrix given in `orientation`, transposing row-stochastic input.
    pub fn with_orientation(m: Matrix<T>, orientation: Orientation) -> Result<Self> {
        match orientation {
            Orientation::Columns => Self::new(m),
            Orientation::Rows => Self::new(m.transpose()),
        }
    }

    pub fn identity(k: usize) -> Self {
        ChannelMatrix(Matrix::identity(k))
    }

    /// Binary channel `[[1 − a, g], [a, 1 − g]]`: action 0 flips with
    /// probability `a`, action 1 with probability `g`.
    pub fn from_2x2(a: T, g: T) -> Result<Self> {
        for (name, v) in [("first flip probability", a), ("second flip probability", g)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(ChannelMatrix(Matrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => T::one() - a,
            (0, 1) => g,
            (1, 0) => a,
            _ => T::one() - g,
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    /// Probability that `from` comes out as `to`.
    pub fn prob(&self, to: usize, from: usize) -> T {
        self.0[(to, from)]
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix::identity(self.dim())
    }

    pub fn determinant(&self) -> T {
        self.0.determinant().expect("channel matrices are square")
    }

    /// `C · q`, which stays on the simplex.
    pub fn apply(&self, q: &SimplexVector<T>) -> Result<SimplexVector<T>> {
        let v = self.0.mul_vec(q)?;
        SimplexVector::new(v)
    }

    /// `C⁻¹` as a general real matrix. Entries may be negative.
    pub fn invert(&self, threshold: T) -> Result<Matrix<T>> {
        self.0.inverse(threshold)
    }

    /// Passes `action` through the channel.
    pub fn sample_corrupt<R: Rng + ?Sized>(&self, action: usize, rng: &mut R) -> usize {
        assert!(action < self.dim(), "action {action} out of range");
        sample_index(self.0.column(action), rng)
    }
}

/// Counts of (input action, output action) pairs seen on one channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorFrequencyTracker {
    k: usize,
    // counts[to * k + from]
    counts: Vec<u64>,
    totals: Vec<u64>,
}

impl ErrorFrequencyTracker {
    pub fn new(k: usize) -> Self {
        ErrorFrequencyTracker {
            k,
            counts: vec![0; k * k],
            totals: vec![0; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn record(&mut self, from: usize, to: usize) {
        self.counts[to * self.k + from] += 1;
        self.totals[from] += 1;
    }

    pub fn count(&self, to: usize, from: usize) -> u64 {
        self.counts[to * self.k + from]
    }

    pub fn column_totals(&self) -> &[u64] {
        &self.totals
    }

    /// Empirical channel, one entry per input action; `None` for inputs never seen.
    pub fn frequencies<T: Scalar>(&self) -> Vec<Option<Vec<T>>> {
        (0..self.k)
            .map(|from| {
                let total = self.totals[from];
                (total > 0).then(|| {
                    (0..self.k)
                        .map(|to| T::from_u64(self.count(to, from)).unwrap() / T::from_u64(total).unwrap())
                        .collect()
                })
            })
            .collect()
    }

    /// Largest binomial z-score `|f − p| / √(p(1 − p)/N)` over observed entries.
    ///
    /// Entries with `p ∈ {0, 1}` have zero variance: any deviation yields `∞`.
    pub fn max_binomial_zscore<T: Scalar>(&self, expected: &ChannelMatrix<T>) -> f64 {
        let freqs = self.frequencies::<f64>();
        let mut worst = 0.0f64;
        for (from, col) in freqs.iter().enumerate() {
            let Some(col) = col else { continue };
            let n = self.totals[from] as f64;
            for (to, &f) in col.iter().enumerate() {
                let p = expected.prob(to, from).as_f64();
                let dev = (f - p).abs();
                let var = p * (1.0 - p) / n;
                let z = if var > 0.0 {
                    dev / var.sqrt()
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}
