//! Random problem instances for experiments and property checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error_model::ChannelMatrix;
use crate::game::Game;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A 2×2 game with payoffs uniform in `[-bound, bound]` and each `τ_i` drawn from `taus`.
pub fn random_game_2x2<T: Scalar, R: Rng + ?Sized>(rng: &mut R, bound: f64, taus: &[f64]) -> Game<T> {
    let mut entry = || T::lit(rng.gen_range(-bound..=bound));
    let m1 = Matrix::from_fn(2, 2, |_, _| entry());
    let m2 = Matrix::from_fn(2, 2, |_, _| entry());
    let tau1 = T::lit(*taus.choose(rng).expect("nonempty tau set"));
    let tau2 = T::lit(*taus.choose(rng).expect("nonempty tau set"));
    Game::from_matrices(m1, m2, tau1, tau2).expect("valid random game")
}

/// Binary channel with flip probabilities uniform in `[0, max_flip]`, redrawn
/// until `|det| > min_abs_det`.
pub fn random_channel_2x2<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    max_flip: f64,
    min_abs_det: f64,
) -> ChannelMatrix<T> {
    assert!(
        min_abs_det < 1.0,
        "no binary channel has |det| >= 1 other than the identity and swap"
    );
    loop {
        let a = rng.gen_range(0.0..=max_flip);
        let g = rng.gen_range(0.0..=max_flip);
        if (1.0 - a - g).abs() > min_abs_det {
            return ChannelMatrix::from_2x2(T::lit(a), T::lit(g)).expect("probabilities in range");
        }
    }
}
