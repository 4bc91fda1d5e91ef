//! Stochastic fictitious play for two-player matrix games with trembling-hand
//! decision errors and noisy observation channels.
//!
//! The math is generic over the floating-point type (see [`Scalar`]); the
//! aliases at the crate root fix it to `f64`, which is what the simulator and
//! CLI use.
//!
//! * [`game`]: simplex vectors, soft-max best responses, regularized utility.
//! * [`error_model`]: decision-error and observation channel matrices.
//! * [`dtfp`]: the discrete-time process, stage by stage.
//! * [`ctfp`]: the mean-field ODEs and an RK4 integrator.
//! * [`equilibrium`]: a fixed-point solver for the stationary points.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctfp;
pub mod dtfp;
pub mod equilibrium;
pub mod error;
pub mod error_model;
pub mod game;
pub mod linalg;
pub mod response;
pub mod rng;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use error_model::Orientation;
pub use response::Awareness;
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type SimplexVector = game::SimplexVector<f64>;
pub type PayoffMatrix = game::PayoffMatrix<f64>;
pub type PlayerParams = game::PlayerParams<f64>;
pub type Game = game::Game<f64>;
pub type Profile = game::Profile<f64>;
pub type ChannelMatrix = error_model::ChannelMatrix<f64>;
pub type ErrorModel = response::ErrorModel<f64>;
pub type DynamicsSpec = ctfp::DynamicsSpec<f64>;
pub type OdeTrajectory = ctfp::OdeTrajectory<f64>;
pub type FixedPointProblem = equilibrium::FixedPointProblem<f64>;
pub type Simulation = dtfp::Simulation<f64>;
pub type RunRecord = dtfp::RunRecord<f64>;

pub type Matrix32 = linalg::Matrix<f32>;
pub type SimplexVector32 = game::SimplexVector<f32>;
pub type Game32 = game::Game<f32>;
pub type Profile32 = game::Profile<f32>;
pub type ChannelMatrix32 = error_model::ChannelMatrix<f32>;
