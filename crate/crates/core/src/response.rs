//! Mean response maps shared by the ODE engine and the fixed-point solver.
//!
//! Every stationary system handled here has the form
//! `x_i = O_i σ(K_i x_{-i} / τ_i)` where `x_i` is player `i`'s realized action
//! frequency, `O_i` the decision-error matrix of a player unaware of it (or
//! the identity), and `K_i = M_i (C̄_{-i})⁻¹ C_{-i}` the payoff seen through the
//! compensated observation channel of the opponent's actions.

use crate::error::{Error, Result};
use crate::error_model::ChannelMatrix;
use crate::game::{nondegeneracy_2x2, softmax, Game, SimplexVector};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Whether players know their own decision-error matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Awareness {
    /// Players sample from `D_i⁻¹ β_i`, cancelling their own errors.
    Aware,
    /// Players run plain stochastic fictitious play.
    Unaware,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionErrors<T> {
    pub d: [ChannelMatrix<T>; 2],
    pub awareness: Awareness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationErrors<T> {
    /// True channels: `c[i]` corrupts player `i`'s actions as seen by the opponent.
    pub c: [ChannelMatrix<T>; 2],
    /// Estimates of `c` used for compensation.
    pub c_bar: [ChannelMatrix<T>; 2],
}

/// Everything that can go wrong between an intended action and the opponent's record of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel<T> {
    pub decision: Option<DecisionErrors<T>>,
    pub observation: Option<ObservationErrors<T>>,
}

impl<T> Default for ErrorModel<T> {
    fn default() -> Self {
        ErrorModel {
            decision: None,
            observation: None,
        }
    }
}

impl<T: Scalar> ErrorModel<T> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn decision(d1: ChannelMatrix<T>, d2: ChannelMatrix<T>, awareness: Awareness) -> Self {
        ErrorModel {
            decision: Some(DecisionErrors { d: [d1, d2], awareness }),
            observation: None,
        }
    }

    pub fn observation(c: [ChannelMatrix<T>; 2], c_bar: [ChannelMatrix<T>; 2]) -> Self {
        ErrorModel {
            decision: None,
            observation: Some(ObservationErrors { c, c_bar }),
        }
    }

    /// Checks channel dimensions against the game's action counts.
    pub fn validate(&self, game: &Game<T>) -> Result<()> {
        let (m, n) = game.dims();
        let dims = [m, n];
        let check = |name: &'static str, ch: &ChannelMatrix<T>, i: usize| {
            if ch.dim() != dims[i] {
                Err(Error::shape(name, dims[i], ch.dim()))
            } else {
                Ok(())
            }
        };
        if let Some(d) = &self.decision {
            for i in 0..2 {
                check("decision-error matrix", &d.d[i], i)?;
            }
        }
        if let Some(o) = &self.observation {
            for i in 0..2 {
                check("observation channel", &o.c[i], i)?;
                check("observation channel estimate", &o.c_bar[i], i)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PlayerMap<T> {
    tau: T,
    coupling: Matrix<T>,
    outer: Option<Matrix<T>>,
}

/// The pair of maps `x_{-i} ↦ O_i σ(K_i x_{-i} / τ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap<T> {
    players: [PlayerMap<T>; 2],
}

impl<T: Scalar> ResponseMap<T> {
    pub fn plain(game: &Game<T>) -> Self {
        Self::build(
            game,
            &ErrorModel::none(),
            T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD),
        )
        .expect("error-free map always builds")
    }

    /// Builds the realized-frequency map for `errors`.
    ///
    /// `singularity` bounds `|det C̄_i|` from below.
    pub fn build(game: &Game<T>, errors: &ErrorModel<T>, singularity: T) -> Result<Self> {
        errors.validate(game)?;
        let mk = |i: usize| -> Result<PlayerMap<T>> {
            let params = game.player(i);
            let opp = 1 - i;
            let mut coupling = params.payoff().matrix().clone();
            if let Some(o) = &errors.observation {
                let seen = o.c_bar[opp].invert(singularity)?.mul_mat(o.c[opp].matrix())?;
                coupling = coupling.mul_mat(&seen)?;
            }
            let outer = match &errors.decision {
                Some(d) if d.awareness == Awareness::Unaware => Some(d.d[i].matrix().clone()),
                _ => None,
            };
            Ok(PlayerMap {
                tau: params.tau(),
                coupling,
                outer,
            })
        };
        Ok(ResponseMap {
            players: [mk(0)?, mk(1)?],
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.players[0].coupling.rows(), self.players[1].coupling.rows())
    }

    /// The soft-max part `σ(K_i x / τ_i)`: player `i`'s intended mixed strategy.
    pub fn intended(&self, i: usize, opponent: &[T]) -> Result<SimplexVector<T>> {
        let p = &self.players[i];
        let logits: Vec<T> = p.coupling.mul_vec(opponent)?.into_iter().map(|v| v / p.tau).collect();
        Ok(softmax(&logits))
    }

    /// `O_i σ(K_i x / τ_i)`: player `i`'s expected realized action.
    pub fn eval(&self, i: usize, opponent: &[T]) -> Result<Vec<T>> {
        let s = self.intended(i, opponent)?;
        match &self.players[i].outer {
            Some(o) => o.mul_vec(&s),
            None => Ok(s.into_vec()),
        }
    }

    /// Effective matrices `K_i O_{-i}` whose 2×2 quadratic forms gate the convergence theorems.
    pub fn effective_matrices(&self) -> Result<(Matrix<T>, Matrix<T>)> {
        let eff = |i: usize| -> Result<Matrix<T>> {
            let k = &self.players[i].coupling;
            match &self.players[1 - i].outer {
                Some(o) => k.mul_mat(o),
                None => Ok(k.clone()),
            }
        };
        Ok((eff(0)?, eff(1)?))
    }

    /// `(LᵀK̃₁L, LᵀK̃₂L)` for the effective matrices, `None` unless 2×2.
    pub fn nondegeneracy(&self) -> Option<(T, T)> {
        let (a, b) = self.effective_matrices().ok()?;
        nondegeneracy_2x2(&a, &b).ok()
    }
}
