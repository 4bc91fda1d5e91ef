//! Damped fixed-point iteration for the stationary systems of the learning
//! dynamics. Independent of the ODE integrator, so the two can check each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::error_model::ChannelMatrix;
use crate::game::{Game, Profile, SimplexVector};
use crate::linalg::Matrix;
use crate::response::{Awareness, ErrorModel, ResponseMap};
use crate::scalar::Scalar;

pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_STARTS: usize = 10;

// A non-converging attempt is retried with half the damping this many times.
const DAMPING_RETRIES: usize = 6;
// Iterations without a new best residual before polishing gives up.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemVariant {
    /// `p_i = β_i(p_{-i})`.
    Plain,
    /// `p̄_i = D_i β_i(p̄_{-i})`, players unaware of their errors.
    DecisionError,
    /// `p_i = σ(M_i (C̄_{-i})⁻¹ C_{-i} p_{-i} / τ_i)`.
    ObservationError,
    /// Unaware decision errors together with observation channels.
    Combined,
    /// Intended strategies of aware players: `p_i = D_i⁻¹ β_i(D_{-i} p_{-i})`.
    Precompensated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub damping: T,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        SolverSettings {
            damping: T::lit(DEFAULT_DAMPING),
            tol: T::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointProblem<T> {
    variant: ProblemVariant,
    errors: ErrorModel<T>,
    map: ResponseMap<T>,
    // D_i⁻¹ for the precompensated system.
    precompensation: Option<[Matrix<T>; 2]>,
    pub settings: SolverSettings<T>,
}

impl<T: Scalar> FixedPointProblem<T> {
    pub fn plain(game: &Game<T>) -> Self {
        Self::from_errors(
            game,
            &ErrorModel::none(),
            T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD),
        )
        .expect("error-free problem always builds")
    }

    pub fn decision_error(game: &Game<T>, d1: ChannelMatrix<T>, d2: ChannelMatrix<T>) -> Result<Self> {
        let errors = ErrorModel::decision(d1, d2, Awareness::Unaware);
        Self::from_errors(game, &errors, T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD))
    }

    pub fn precompensated(game: &Game<T>, d1: ChannelMatrix<T>, d2: ChannelMatrix<T>, singularity: T) -> Result<Self> {
        Self::from_errors(game, &ErrorModel::decision(d1, d2, Awareness::Aware), singularity)
    }

    pub fn observation_error(
        game: &Game<T>,
        c: [ChannelMatrix<T>; 2],
        c_bar: [ChannelMatrix<T>; 2],
        singularity: T,
    ) -> Result<Self> {
        Self::from_errors(game, &ErrorModel::observation(c, c_bar), singularity)
    }

    /// Stationary system of the process with `errors`. For aware players the
    /// unknowns are the intended strategies; otherwise the realized frequencies.
    pub fn from_errors(game: &Game<T>, errors: &ErrorModel<T>, singularity: T) -> Result<Self> {
        let map = ResponseMap::build(game, errors, singularity)?;
        let (variant, precompensation) = match (&errors.decision, errors.observation.is_some()) {
            (Some(d), _) if d.awareness == Awareness::Aware => (
                ProblemVariant::Precompensated,
                Some([d.d[0].invert(singularity)?, d.d[1].invert(singularity)?]),
            ),
            (Some(_), true) => (ProblemVariant::Combined, None),
            (Some(_), false) => (ProblemVariant::DecisionError, None),
            (None, true) => (ProblemVariant::ObservationError, None),
            (None, false) => (ProblemVariant::Plain, None),
        };
        Ok(FixedPointProblem {
            variant,
            errors: errors.clone(),
            map,
            precompensation,
            settings: SolverSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: SolverSettings<T>) -> Self {
        self.settings = settings;
        self
    }

    pub fn variant(&self) -> ProblemVariant {
        self.variant
    }

    pub fn dims(&self) -> (usize, usize) {
        self.map.dims()
    }

    /// Evaluates the map `F`.
    pub fn apply(&self, x: &Profile<T>) -> Result<Profile<T>> {
        match &self.precompensation {
            None => Ok(Profile::new(
                SimplexVector::from_raw(self.map.eval(0, &x.p2)?),
                SimplexVector::from_raw(self.map.eval(1, &x.p1)?),
            )),
            Some(inv) => {
                let d = &self
                    .errors
                    .decision
                    .as_ref()
                    .expect("precompensation implies decision errors")
                    .d;
                let realized = [d[0].matrix().mul_vec(&x.p1)?, d[1].matrix().mul_vec(&x.p2)?];
                let pre = |i: usize| -> Result<SimplexVector<T>> {
                    let beta = self.map.intended(i, &realized[1 - i])?;
                    let raw = inv[i].mul_vec(&beta)?;
                    SimplexVector::new(raw.clone()).map_err(|_| Error::InfeasiblePrecompensation {
                        player: i + 1,
                        vector: raw.iter().map(|v| v.as_f64()).collect(),
                    })
                };
                Ok(Profile::new(pre(0)?, pre(1)?))
            }
        }
    }

    /// `‖x − F(x)‖∞`.
    pub fn residual(&self, x: &Profile<T>) -> Result<T> {
        Ok(x.distance(&self.apply(x)?))
    }

    /// Frequencies a long simulation should exhibit if its strategies sit at `solution`.
    pub fn predicted_frequencies(&self, solution: &Profile<T>) -> Result<PredictedFrequencies<T>> {
        let (intended, realized) = match self.variant {
            ProblemVariant::Plain | ProblemVariant::ObservationError => (solution.clone(), solution.clone()),
            ProblemVariant::DecisionError | ProblemVariant::Combined => {
                let intended = Profile::new(self.map.intended(0, &solution.p2)?, self.map.intended(1, &solution.p1)?);
                let realized = Profile::new(
                    SimplexVector::from_raw(self.map.eval(0, &solution.p2)?),
                    SimplexVector::from_raw(self.map.eval(1, &solution.p1)?),
                );
                (intended, realized)
            }
            ProblemVariant::Precompensated => {
                let d = &self.errors.decision.as_ref().expect("decision errors present").d;
                let realized = Profile::new(d[0].apply(&solution.p1)?, d[1].apply(&solution.p2)?);
                (solution.clone(), realized)
            }
        };
        let observed = match &self.errors.observation {
            Some(o) => Profile::new(o.c[0].apply(&realized.p1)?, o.c[1].apply(&realized.p2)?),
            None => realized.clone(),
        };
        Ok(PredictedFrequencies {
            intended,
            realized,
            observed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedFrequencies<T> {
    pub intended: Profile<T>,
    pub realized: Profile<T>,
    /// What each player's opponent records of it.
    pub observed: Profile<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub point: Profile<T>,
    pub residual: T,
    /// Evaluations of `F` across all attempts.
    pub iterations: usize,
    pub converged: bool,
    /// Damping of the final attempt.
    pub damping: T,
}

/// Iterates `x ← (1 − λ)x + λF(x)` until `‖x − F(x)‖∞ < tol`.
///
/// Once below `tol` the iteration continues towards `tol / 1000`, stopping
/// early when rounding stalls it, so that points reached from different starts
/// agree to within the tolerance and not only their residuals.
///
/// An attempt that exhausts `max_iter` is restarted from `start` with `λ/2`,
/// which recovers convergence when `F` rotates strongly around its fixed
/// point. The best iterate seen is returned if no attempt converges.
pub fn solve<T: Scalar>(problem: &FixedPointProblem<T>, start: &Profile<T>) -> Result<SolveReport<T>> {
    let s = &problem.settings;
    if !(s.damping > T::zero() && s.damping <= T::one()) {
        return Err(Error::Parameter(format!(
            "damping must lie in (0, 1], got {}",
            s.damping
        )));
    }
    let polish_to = s.tol / T::lit(1000.0);
    let mut total = 0;
    let mut best: Option<(Profile<T>, T)> = None;
    let mut lambda = s.damping;
    for _ in 0..=DAMPING_RETRIES {
        let mut x = start.clone();
        let mut stalled = 0;
        for _ in 0..s.max_iter {
            let fx = problem.apply(&x)?;
            let r = x.distance(&fx);
            total += 1;
            if best.as_ref().is_none_or(|(_, b)| r < *b) {
                best = Some((x.clone(), r));
                stalled = 0;
            } else {
                stalled += 1;
            }
            let (_, best_r) = best.as_ref().unwrap();
            if r < polish_to || (*best_r < s.tol && stalled >= STALL_LIMIT) {
                break;
            }
            x = blend(&x, &fx, lambda);
        }
        if let Some((point, residual)) = best.clone().filter(|(_, r)| *r < s.tol) {
            return Ok(SolveReport {
                point,
                residual,
                iterations: total,
                converged: true,
                damping: lambda,
            });
        }
        lambda /= T::lit(2.0);
    }
    let (point, residual) = best.expect("at least one iteration ran");
    Ok(SolveReport {
        point,
        residual,
        iterations: total,
        converged: false,
        damping: lambda * T::lit(2.0),
    })
}

fn blend<T: Scalar>(x: &Profile<T>, fx: &Profile<T>, lambda: T) -> Profile<T> {
    let mix = |a: &SimplexVector<T>, b: &SimplexVector<T>| {
        SimplexVector::from_raw(a.iter().zip(b.iter()).map(|(&u, &v)| u + lambda * (v - u)).collect())
    };
    Profile::new(mix(&x.p1, &fx.p1), mix(&x.p2, &fx.p2))
}

/// Results of solving from several starting points.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart<T> {
    pub runs: Vec<SolveReport<T>>,
    /// Distinct converged solutions, in order of first appearance.
    pub solutions: Vec<Profile<T>>,
}

impl<T: Scalar> MultiStart<T> {
    /// More than one distinct solution was found.
    pub fn possibly_multiple(&self) -> bool {
        self.solutions.len() > 1
    }

    /// The converged solution from the uniform start, else the first found.
    pub fn primary(&self) -> Option<&Profile<T>> {
        self.runs
            .first()
            .filter(|r| r.converged)
            .map(|r| &r.point)
            .or_else(|| self.solutions.first())
    }

    /// The solution closest to `x`, with its distance.
    pub fn nearest(&self, x: &Profile<T>) -> Option<(&Profile<T>, T)> {
        self.solutions
            .iter()
            .map(|s| (s, s.distance(x)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    }
}

/// Solves from the uniform profile and from `starts` random interior profiles.
///
/// Converged points farther apart than `agreement_tol` are reported as distinct
/// solutions; they are never averaged.
pub fn multi_start<T: Scalar>(
    problem: &FixedPointProblem<T>,
    starts: usize,
    seed: u64,
    agreement_tol: T,
) -> Result<MultiStart<T>> {
    let (m, n) = problem.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![Profile::uniform(m, n)];
    for _ in 0..starts {
        points.push(Profile::new(random_simplex(m, &mut rng), random_simplex(n, &mut rng)));
    }
    let mut runs = Vec::with_capacity(points.len());
    let mut solutions: Vec<Profile<T>> = Vec::new();
    for p in &points {
        let r = solve(problem, p)?;
        if r.converged && !solutions.iter().any(|s| s.distance(&r.point) <= agreement_tol) {
            solutions.push(r.point.clone());
        }
        runs.push(r);
    }
    Ok(MultiStart { runs, solutions })
}

/// Uniformly distributed point of the open simplex (flat Dirichlet).
pub fn random_simplex<T: Scalar, R: Rng + ?Sized>(k: usize, rng: &mut R) -> SimplexVector<T> {
    let e: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + f64::MIN_POSITIVE)
        .collect();
    let s: f64 = e.iter().sum();
    SimplexVector::new(e.into_iter().map(|v| T::lit(v / s)).collect()).expect("normalized draw")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{best_response, utility};

    fn game(m1: [[f64; 2]; 2], m2: [[f64; 2]; 2], tau: f64) -> Game<f64> {
        let mk = |m: [[f64; 2]; 2]| Matrix::from_rows(&[m[0].to_vec(), m[1].to_vec()]).unwrap();
        Game::from_matrices(mk(m1), mk(m2), tau, tau).unwrap()
    }

    fn attacker_defender() -> Game<f64> {
        game([[-1.0, 2.0], [0.5, 0.0]], [[1.5, -1.0], [-0.5, 0.5]], 0.8)
    }

    #[test]
    fn zero_payoffs_one_iteration() {
        let p = FixedPointProblem::plain(&game([[0.0; 2]; 2], [[0.0; 2]; 2], 1.0));
        let r = solve(&p, &Profile::uniform(2, 2)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.point, Profile::uniform(2, 2));
    }

    #[test]
    fn symmetric_game_has_uniform_solution() {
        let p = FixedPointProblem::plain(&game([[0.0, 1.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], 1.0));
        let r = solve(&p, &Profile::uniform(2, 2)).unwrap();
        assert!(r.converged);
        assert!(r.point.distance(&Profile::uniform(2, 2)) < 1e-12);
    }

    #[test]
    fn plain_solution_is_regularized_nash() {
        let g = attacker_defender();
        let p = FixedPointProblem::plain(&g);
        let r = solve(&p, &Profile::uniform(2, 2)).unwrap();
        assert!(r.converged && r.residual < 1e-10);
        let x = &r.point;
        let b1 = best_response(&x.p2, g.player(0)).unwrap();
        assert!(crate::scalar::sup_distance(&b1, &x.p1) < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let alt = random_simplex(2, &mut rng);
            assert!(utility(&alt, &x.p2, g.player(0)).unwrap() <= utility(&x.p1, &x.p2, g.player(0)).unwrap() + 1e-9);
            assert!(utility(&alt, &x.p1, g.player(1)).unwrap() <= utility(&x.p2, &x.p1, g.player(1)).unwrap() + 1e-9);
        }
    }

    #[test]
    fn strongly_rotating_game_needs_smaller_damping() {
        // Matching pennies with low noise: λ = 0.5 oscillates.
        let g = game([[2.0, -2.0], [-2.0, 2.0]], [[-2.0, 2.0], [2.0, -2.0]], 0.5);
        let p = FixedPointProblem::plain(&g);
        let r = solve(
            &p,
            &Profile::new(SimplexVector::vertex(2, 0), SimplexVector::vertex(2, 0)),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.damping < 0.5);
        assert!(r.point.distance(&Profile::uniform(2, 2)) < 1e-9);
    }

    #[test]
    fn identity_errors_collapse_all_variants() {
        let g = attacker_defender();
        let eye = ChannelMatrix::identity(2);
        let base = solve(&FixedPointProblem::plain(&g), &Profile::uniform(2, 2))
            .unwrap()
            .point;
        let problems = [
            FixedPointProblem::decision_error(&g, eye.clone(), eye.clone()).unwrap(),
            FixedPointProblem::precompensated(&g, eye.clone(), eye.clone(), 1e-9).unwrap(),
            FixedPointProblem::observation_error(&g, [eye.clone(), eye.clone()], [eye.clone(), eye], 1e-9).unwrap(),
        ];
        for p in &problems {
            let r = solve(p, &Profile::uniform(2, 2)).unwrap();
            assert!(r.point.distance(&base) < 1e-10, "{:?}", p.variant());
        }
    }

    #[test]
    fn predicted_frequencies_per_variant() {
        let g = attacker_defender();
        let d1 = ChannelMatrix::from_2x2(0.1, 0.2).unwrap();
        let d2 = ChannelMatrix::from_2x2(0.05, 0.15).unwrap();
        let base = solve(&FixedPointProblem::plain(&g), &Profile::uniform(2, 2))
            .unwrap()
            .point;

        let plain = FixedPointProblem::plain(&g);
        assert_eq!(plain.predicted_frequencies(&base).unwrap().realized, base);

        let aware = FixedPointProblem::precompensated(&g, d1.clone(), d2.clone(), 1e-9).unwrap();
        let x = solve(&aware, &Profile::uniform(2, 2)).unwrap().point;
        let pred = aware.predicted_frequencies(&x).unwrap();
        assert!(pred.realized.distance(&base) < 1e-9);

        let unaware = FixedPointProblem::decision_error(&g, d1.clone(), d2.clone()).unwrap();
        let x = solve(&unaware, &Profile::uniform(2, 2)).unwrap().point;
        let pred = unaware.predicted_frequencies(&x).unwrap();
        let direct = d1.apply(&best_response(&x.p2, g.player(0)).unwrap()).unwrap();
        assert!(crate::scalar::sup_distance(&pred.realized.p1, &direct) < 1e-15);
        assert!(pred.realized.distance(&x) < 1e-9);
        assert!(pred.realized.distance(&base) > 1e-3);
    }

    #[test]
    fn infeasible_precompensation_propagates() {
        let g = game([[10.0, 10.0], [-10.0, -10.0]], [[0.0; 2]; 2], 1.0);
        let d = ChannelMatrix::from_2x2(0.2, 0.2).unwrap();
        let p = FixedPointProblem::precompensated(&g, d.clone(), d, 1e-9).unwrap();
        assert!(matches!(
            solve(&p, &Profile::uniform(2, 2)),
            Err(Error::InfeasiblePrecompensation { .. })
        ));
    }

    #[test]
    fn multi_start_detects_multiple_equilibria() {
        // Strong coordination with little noise has two stable equilibria.
        let g = game([[3.0, 0.0], [0.0, 3.0]], [[3.0, 0.0], [0.0, 3.0]], 0.5);
        let ms = multi_start(&FixedPointProblem::plain(&g), 10, 1, 1e-6).unwrap();
        assert!(ms.possibly_multiple());
        let ms = multi_start(&FixedPointProblem::plain(&attacker_defender()), 10, 1, 1e-6).unwrap();
        assert_eq!(ms.solutions.len(), 1);
    }
}
