//! Static two-player game: mixed strategies, soft-max best responses and the
//! entropy-regularized utility.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A probability vector over `k >= 2` actions.
///
/// Entries are nonnegative and sum to one. Inputs whose sum is off by no more
/// than [`Scalar::simplex_tol`] are renormalized, anything further is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector<T> {
    probs: Vec<T>,
}

impl<T: Scalar> SimplexVector<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::shape("simplex vector", "at least 2 entries", probs.len()));
        }
        let sum: T = probs.iter().copied().sum();
        let min = probs.iter().copied().fold(T::infinity(), T::min);
        let tol = T::simplex_tol();
        if !min.is_finite() || !sum.is_finite() || min < -tol || (sum - T::one()).abs() > tol {
            return Err(Error::NotOnSimplex {
                sum: sum.as_f64(),
                min: min.as_f64(),
            });
        }
        let mut probs = probs;
        if min < T::zero() || sum != T::one() {
            let clipped: T = probs.iter().map(|&p| p.max(T::zero())).sum();
            for p in &mut probs {
                *p = p.max(T::zero()) / clipped;
            }
        }
        Ok(SimplexVector { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 2, "simplex needs at least two actions");
        let w = T::one() / T::from_usize(k).unwrap();
        SimplexVector { probs: vec![w; k] }
    }

    /// The pure strategy placing all weight on `action`.
    pub fn vertex(k: usize, action: usize) -> Self {
        assert!(k >= 2 && action < k, "vertex {action} outside simplex of dimension {k}");
        let mut probs = vec![T::zero(); k];
        probs[action] = T::one();
        SimplexVector { probs }
    }

    /// Projects an arbitrary real vector onto the simplex by clipping negative
    /// entries and renormalizing. Falls back to uniform if nothing positive is left.
    pub fn clip_renormalize(x: &[T]) -> Self {
        let clipped: Vec<T> = x.iter().map(|&v| v.max(T::zero())).collect();
        let s: T = clipped.iter().copied().sum();
        if !(s > T::zero()) {
            return Self::uniform(x.len());
        }
        SimplexVector {
            probs: clipped.into_iter().map(|v| v / s).collect(),
        }
    }

    // Caller guarantees the simplex property up to rounding.
    pub(crate) fn from_raw(probs: Vec<T>) -> Self {
        SimplexVector { probs }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }
}

impl<T> Deref for SimplexVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.probs
    }
}

/// Entropy `−Σ p ln p` with `0 · ln 0 = 0`.
pub fn entropy<T: Scalar>(p: &SimplexVector<T>) -> T {
    -p.iter().filter(|&&x| x > T::zero()).map(|&x| x * x.ln()).sum::<T>()
}

/// Soft-max `e^{x_j} / Σ e^{x_l}`, evaluated after subtracting `max(x)`.
pub fn softmax<T: Scalar>(x: &[T]) -> SimplexVector<T> {
    let top = x.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = x.iter().map(|&v| (v - top).exp()).collect();
    let total: T = exps.iter().copied().sum();
    SimplexVector::from_raw(exps.into_iter().map(|e| e / total).collect())
}

/// Payoff matrix of one player: rows index own actions, columns the opponent's.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<T>(Matrix<T>);

impl<T: Scalar> PayoffMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("payoff matrix has non-finite entries".into()));
        }
        if m.rows() < 2 || m.cols() < 2 {
            return Err(Error::shape(
                "payoff matrix",
                "at least 2x2",
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        Ok(PayoffMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn own_actions(&self) -> usize {
        self.0.rows()
    }

    pub fn opponent_actions(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }
}

/// Entropy weight and payoffs of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerParams<T> {
    tau: T,
    payoff: PayoffMatrix<T>,
}

impl<T: Scalar> PlayerParams<T> {
    /// `tau` must be strictly positive; the unregularized game has set-valued
    /// best responses and is not supported.
    pub fn new(tau: T, payoff: PayoffMatrix<T>) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::Parameter(format!("entropy weight tau must be > 0, got {tau}")));
        }
        Ok(PlayerParams { tau, payoff })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn payoff(&self) -> &PayoffMatrix<T> {
        &self.payoff
    }

    pub fn own_actions(&self) -> usize {
        self.payoff.own_actions()
    }

    pub fn opponent_actions(&self) -> usize {
        self.payoff.opponent_actions()
    }
}

/// `pᵀ M q + τ H(p)`.
pub fn utility<T: Scalar>(p: &SimplexVector<T>, q: &SimplexVector<T>, params: &PlayerParams<T>) -> Result<T> {
    if p.dim() != params.own_actions() {
        return Err(Error::shape("utility: own strategy", params.own_actions(), p.dim()));
    }
    let mq = params.payoff.0.mul_vec(q)?;
    let bilinear: T = p.iter().zip(&mq).map(|(&a, &b)| a * b).sum();
    Ok(bilinear + params.tau * entropy(p))
}

/// Soft-max best response `σ(M q / τ)`.
///
/// `q` need not lie on the simplex: compensated frequency estimates can have
/// negative entries and are passed through unchanged.
pub fn best_response<T: Scalar>(q: &[T], params: &PlayerParams<T>) -> Result<SimplexVector<T>> {
    let mq = params.payoff.0.mul_vec(q)?;
    let scaled: Vec<T> = mq.into_iter().map(|v| v / params.tau).collect();
    Ok(softmax(&scaled))
}

/// Quadratic forms `(LᵀAL, LᵀBL)` with `L = (1, −1)ᵀ` for two 2×2 matrices.
pub fn nondegeneracy_2x2<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(T, T)> {
    let form = |m: &Matrix<T>| -> Result<T> {
        if m.shape() != (2, 2) {
            return Err(Error::shape(
                "nondegeneracy check",
                "2x2",
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        Ok(m[(0, 0)] - m[(0, 1)] - m[(1, 0)] + m[(1, 1)])
    };
    Ok((form(a)?, form(b)?))
}

/// Both players' parameters, with `M_1` of shape m×n and `M_2` of shape n×m.
#[derive(Debug, Clone, PartialEq)]
pub struct Game<T> {
    players: [PlayerParams<T>; 2],
}

impl<T: Scalar> Game<T> {
    pub fn new(p1: PlayerParams<T>, p2: PlayerParams<T>) -> Result<Self> {
        let (m, n) = (p1.own_actions(), p1.opponent_actions());
        if p2.own_actions() != n || p2.opponent_actions() != m {
            return Err(Error::shape(
                "game payoffs",
                format!("M2 of shape {n}x{m}"),
                format!("{}x{}", p2.own_actions(), p2.opponent_actions()),
            ));
        }
        Ok(Game { players: [p1, p2] })
    }

    pub fn from_matrices(m1: Matrix<T>, m2: Matrix<T>, tau1: T, tau2: T) -> Result<Self> {
        Self::new(
            PlayerParams::new(tau1, PayoffMatrix::new(m1)?)?,
            PlayerParams::new(tau2, PayoffMatrix::new(m2)?)?,
        )
    }

    /// Parameters of player `i` (0 or 1).
    pub fn player(&self, i: usize) -> &PlayerParams<T> {
        &self.players[i]
    }

    /// Action counts `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.players[0].own_actions(), self.players[1].own_actions())
    }

    pub fn is_2x2(&self) -> bool {
        self.dims() == (2, 2)
    }
}

/// A mixed strategy for each player.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub p1: SimplexVector<T>,
    pub p2: SimplexVector<T>,
}

impl<T: Scalar> Profile<T> {
    pub fn new(p1: SimplexVector<T>, p2: SimplexVector<T>) -> Self {
        Profile { p1, p2 }
    }

    pub fn uniform(m: usize, n: usize) -> Self {
        Profile::new(SimplexVector::uniform(m), SimplexVector::uniform(n))
    }

    pub fn get(&self, i: usize) -> &SimplexVector<T> {
        if i == 0 {
            &self.p1
        } else {
            &self.p2
        }
    }

    /// `max(‖p1 − p1'‖∞, ‖p2 − p2'‖∞)`.
    pub fn distance(&self, other: &Profile<T>) -> T {
        crate::scalar::sup_distance(&self.p1, &other.p1).max(crate::scalar::sup_distance(&self.p2, &other.p2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(p: &[f64]) -> SimplexVector<f64> {
        SimplexVector::new(p.to_vec()).unwrap()
    }

    fn params(rows: &[&[f64]], tau: f64) -> PlayerParams<f64> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PlayerParams::new(tau, PayoffMatrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&sv(&[0.5, 0.5])) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&sv(&[1.0, 0.0])), 0.0);
        assert!((entropy(&sv(&[0.25, 0.75])) - 0.562_335_144_618_808_3).abs() < 1e-12);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).as_slice(), &[0.5, 0.5]);
        let s = softmax(&[3f64.ln(), 0.0]);
        assert!((s[0] - 0.75).abs() < 1e-15 && (s[1] - 0.25).abs() < 1e-15);
        let s = softmax(&[1.0f64, 2.0, 3.0]);
        let want = [
            0.090_030_573_170_380_46,
            0.244_728_471_054_797_67,
            0.665_240_955_774_821_9,
        ];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_survives_huge_inputs() {
        let s = softmax(&[1000.0f64, 999.0, -1000.0]);
        assert!(s.iter().all(|x| x.is_finite()));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn utility_examples() {
        let half = sv(&[0.5, 0.5]);
        let ones = params(&[&[1.0, 1.0], &[1.0, 1.0]], 1.0);
        assert!((utility(&half, &half, &ones).unwrap() - (1.0 + std::f64::consts::LN_2)).abs() < 1e-12);

        let zero = params(&[&[0.0, 0.0], &[0.0, 0.0]], 1.0);
        let p = sv(&[0.3, 0.7]);
        assert!((utility(&p, &half, &zero).unwrap() - entropy(&p)).abs() < 1e-15);

        let diag = params(&[&[1.0, 0.0], &[0.0, 2.0]], 0.5);
        let u = utility(&sv(&[0.25, 0.75]), &sv(&[0.6, 0.4]), &diag).unwrap();
        assert!((u - 1.031_167_572_309_404_3).abs() < 1e-12);
    }

    #[test]
    fn utility_shape_error() {
        let diag = params(&[&[1.0, 0.0], &[0.0, 2.0]], 0.5);
        let p3 = SimplexVector::uniform(3);
        assert!(matches!(utility(&p3, &p3, &diag), Err(Error::Shape { .. })));
    }

    #[test]
    fn best_response_examples() {
        let zero = params(&[&[0.0, 0.0], &[0.0, 0.0]], 1.0);
        assert_eq!(best_response(&[0.2, 0.8], &zero).unwrap().as_slice(), &[0.5, 0.5]);
        let eye = params(&[&[1.0, 0.0], &[0.0, 1.0]], 1.0);
        let b = best_response(&[1.0, 0.0], &eye).unwrap();
        assert!((b[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((b[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
    }

    #[test]
    fn tau_must_be_positive() {
        let m = PayoffMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(PlayerParams::new(0.0, m.clone()).is_err());
        assert!(PlayerParams::new(-1.0, m).is_err());
    }

    #[test]
    fn nondegeneracy_examples() {
        let eye = Matrix::identity(2);
        let ones = Matrix::from_fn(2, 2, |_, _| 1.0);
        let a = Matrix::from_rows(&[vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(nondegeneracy_2x2(&eye, &ones).unwrap(), (2.0, 0.0));
        assert_eq!(nondegeneracy_2x2(&a, &a).unwrap().0, 4.0);
        assert!(nondegeneracy_2x2(&Matrix::<f64>::identity(3), &eye).is_err());
    }

    #[test]
    fn simplex_construction_rules() {
        assert!(SimplexVector::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(SimplexVector::new(vec![0.5, 0.51]).is_err());
        assert!(SimplexVector::new(vec![1.2, -0.2]).is_err());
        assert!(SimplexVector::new(vec![1.0]).is_err());
        let v = SimplexVector::new(vec![0.5, 0.5 + 1e-13]).unwrap();
        assert_eq!(v.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn game_shapes_must_transpose() {
        let m1 = Matrix::<f64>::zeros(2, 3);
        assert!(Game::from_matrices(m1.clone(), Matrix::zeros(3, 2), 1.0, 1.0).is_ok());
        assert!(Game::from_matrices(m1, Matrix::zeros(2, 3), 1.0, 1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let s = softmax(&[1.0f32, 2.0, 3.0]);
        assert!((s[2] - 0.665_241).abs() < 1e-6);
        assert!(SimplexVector::new(vec![0.3f32, 0.7]).is_ok());
    }
}
