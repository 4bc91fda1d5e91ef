//! Continuous-time fictitious play: the mean-field ODEs and a fixed-step RK4
//! integrator for them.

use crate::error::{Error, Result};
use crate::error_model::ChannelMatrix;
use crate::game::{Game, Profile, SimplexVector};
use crate::response::{Awareness, ErrorModel, ResponseMap};
use crate::scalar::{max_abs, Scalar};

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_HORIZON: f64 = 200.0;
/// Threshold on `|LᵀK̃₁L · LᵀK̃₂L|` above which the 2×2 theorems apply.
pub const DEFAULT_NONDEGENERACY_THRESHOLD: f64 = 1e-6;

const RENORMALIZE_ABOVE: f64 = 1e-12;
const STATE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `ṗ_i = β_i(p_{-i}) − p_i`.
    Plain,
    /// `ṗ̄_i = D_i β_i(p̄_{-i}) − p̄_i` for players unaware of their errors.
    DecisionError,
    /// `ṗ_i = σ(M_i (C̄_{-i})⁻¹ C_{-i} p_{-i} / τ_i) − p_i`.
    ObservationError,
    /// Decision errors and observation channels together.
    Combined,
}

/// Right-hand side of one of the mean dynamics, in realized-frequency coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec<T> {
    variant: Variant,
    map: ResponseMap<T>,
}

impl<T: Scalar> DynamicsSpec<T> {
    pub fn plain(game: &Game<T>) -> Self {
        DynamicsSpec {
            variant: Variant::Plain,
            map: ResponseMap::plain(game),
        }
    }

    pub fn decision_error(game: &Game<T>, d1: ChannelMatrix<T>, d2: ChannelMatrix<T>) -> Result<Self> {
        Self::from_errors(
            game,
            &ErrorModel::decision(d1, d2, Awareness::Unaware),
            default_singularity(),
        )
    }

    pub fn observation_error(
        game: &Game<T>,
        c: [ChannelMatrix<T>; 2],
        c_bar: [ChannelMatrix<T>; 2],
        singularity: T,
    ) -> Result<Self> {
        Self::from_errors(game, &ErrorModel::observation(c, c_bar), singularity)
    }

    /// Dynamics of the realized frequencies under `errors`.
    ///
    /// Aware players cancel their decision errors, so an aware-only model
    /// yields the plain dynamics.
    pub fn from_errors(game: &Game<T>, errors: &ErrorModel<T>, singularity: T) -> Result<Self> {
        let unaware = matches!(&errors.decision, Some(d) if d.awareness == Awareness::Unaware);
        let variant = match (unaware, errors.observation.is_some()) {
            (false, false) => Variant::Plain,
            (true, false) => Variant::DecisionError,
            (false, true) => Variant::ObservationError,
            (true, true) => Variant::Combined,
        };
        let map = ResponseMap::build(game, errors, singularity).map_err(|e| match e {
            Error::Shape { .. } => Error::Config(e.to_string()),
            other => other,
        })?;
        Ok(DynamicsSpec { variant, map })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn response_map(&self) -> &ResponseMap<T> {
        &self.map
    }

    pub fn dims(&self) -> (usize, usize) {
        self.map.dims()
    }

    /// Time derivative of `(p1, p2)`. Each component sums to zero.
    pub fn rhs(&self, p1: &[T], p2: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let (m, n) = self.dims();
        if p1.len() != m || p2.len() != n {
            return Err(Error::shape(
                "ODE state",
                format!("({m}, {n})"),
                format!("({}, {})", p1.len(), p2.len()),
            ));
        }
        let f1 = self.map.eval(0, p2)?;
        let f2 = self.map.eval(1, p1)?;
        Ok((
            f1.iter().zip(p1).map(|(&a, &b)| a - b).collect(),
            f2.iter().zip(p2).map(|(&a, &b)| a - b).collect(),
        ))
    }

    /// `‖rhs‖∞` over both players.
    pub fn residual(&self, state: &Profile<T>) -> Result<T> {
        let (d1, d2) = self.rhs(&state.p1, &state.p2)?;
        Ok(max_abs(d1.into_iter().chain(d2)))
    }

    /// Nondegeneracy gate of the 2×2 convergence theorems.
    pub fn hypotheses(&self, threshold: T) -> Hypotheses<T> {
        let forms = self.map.nondegeneracy();
        let holds = forms.is_some_and(|(a, b)| (a * b).abs() > threshold);
        Hypotheses { forms, holds }
    }
}

fn default_singularity<T: Scalar>() -> T {
    T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypotheses<T> {
    /// `(LᵀK̃₁L, LᵀK̃₂L)`; `None` for games that are not 2×2.
    pub forms: Option<(T, T)>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory<T> {
    pub step: T,
    pub times: Vec<T>,
    pub states: Vec<Profile<T>>,
    /// `‖rhs(state)‖∞` at each snapshot.
    pub residuals: Vec<T>,
    /// Per-player `‖rhs_i(state)‖∞` at each snapshot.
    pub player_residuals: Vec<[T; 2]>,
    /// Largest `|Σp − 1|` corrected by renormalization, zero if none was needed.
    pub max_renormalization: T,
    pub renormalizations: usize,
}

impl<T: Scalar> OdeTrajectory<T> {
    pub fn last(&self) -> &Profile<T> {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Integrates `spec` from `p0` with classic fixed-step RK4 up to `t_end`.
pub fn integrate<T: Scalar>(spec: &DynamicsSpec<T>, p0: &Profile<T>, h: T, t_end: T) -> Result<OdeTrajectory<T>> {
    if !(h > T::zero()) || !(t_end >= h) {
        return Err(Error::Parameter(format!(
            "need 0 < h <= t_end, got h = {h}, t_end = {t_end}"
        )));
    }
    let (m, n) = spec.dims();
    if p0.p1.dim() != m || p0.p2.dim() != n {
        return Err(Error::shape(
            "initial state",
            format!("({m}, {n})"),
            format!("({}, {})", p0.p1.dim(), p0.p2.dim()),
        ));
    }
    let steps = (t_end / h).round().to_usize().unwrap_or(0).max(1);
    let f = |x: &[T]| -> Result<Vec<T>> {
        let (a, b) = spec.rhs(&x[..m], &x[m..])?;
        Ok(a.into_iter().chain(b).collect())
    };
    let two = T::lit(2.0);
    let half = h / two;
    let sixth = h / T::lit(6.0);
    let lo = T::lit(-STATE_SLACK);
    let hi = T::one() + T::lit(STATE_SLACK);
    let renorm_tol = T::lit(RENORMALIZE_ABOVE);

    let mut x: Vec<T> = p0.p1.iter().chain(p0.p2.iter()).copied().collect();
    let mut traj = OdeTrajectory {
        step: h,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        residuals: Vec::with_capacity(steps + 1),
        player_residuals: Vec::with_capacity(steps + 1),
        max_renormalization: T::zero(),
        renormalizations: 0,
    };
    let axpy = |x: &[T], k: &[T], s: T| -> Vec<T> { x.iter().zip(k).map(|(&a, &b)| a + s * b).collect() };

    for step in 0..=steps {
        let k1 = f(&x)?;
        traj.times.push(T::from_usize(step).unwrap() * h);
        traj.states.push(Profile::new(
            SimplexVector::from_raw(x[..m].to_vec()),
            SimplexVector::from_raw(x[m..].to_vec()),
        ));
        let r = [max_abs(k1[..m].iter().copied()), max_abs(k1[m..].iter().copied())];
        traj.residuals.push(r[0].max(r[1]));
        traj.player_residuals.push(r);
        if step == steps {
            break;
        }
        let k2 = f(&axpy(&x, &k1, half))?;
        let k3 = f(&axpy(&x, &k2, half))?;
        let k4 = f(&axpy(&x, &k3, h))?;
        for j in 0..x.len() {
            x[j] += sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        let t = T::from_usize(step + 1).unwrap() * h;
        if let Some(&bad) = x.iter().find(|&&v| !(v >= lo && v <= hi)) {
            return Err(Error::Instability {
                time: t.as_f64(),
                value: bad.as_f64(),
            });
        }
        for block in [0..m, m..m + n] {
            let s: T = x[block.clone()].iter().copied().sum();
            let drift = (s - T::one()).abs();
            if drift > renorm_tol {
                for v in &mut x[block] {
                    *v /= s;
                }
                traj.max_renormalization = traj.max_renormalization.max(drift);
                traj.renormalizations += 1;
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convergence<T> {
    Converged(Profile<T>),
    NotConverged { residual_tail: Vec<T> },
}

impl<T> Convergence<T> {
    pub fn limit(&self) -> Option<&Profile<T>> {
        match self {
            Convergence::Converged(p) => Some(p),
            Convergence::NotConverged { .. } => None,
        }
    }
}

/// Final state if the residual stays below `tol` over the trailing 10% of the grid.
pub fn converged_limit<T: Scalar>(traj: &OdeTrajectory<T>, tol: T) -> Convergence<T> {
    let len = traj.residuals.len();
    let window = len.div_ceil(10).max(1);
    let tail = &traj.residuals[len - window..];
    if tail.iter().all(|&r| r < tol) {
        Convergence::Converged(traj.last().clone())
    } else {
        Convergence::NotConverged {
            residual_tail: tail.to_vec(),
        }
    }
}
