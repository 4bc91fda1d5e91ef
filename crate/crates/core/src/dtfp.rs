//! Discrete-time stochastic fictitious play.
//!
//! Each stage both players best-respond to what they have seen of the
//! opponent so far, draw an action, and the action travels through the
//! pipeline `intended → decision error → realized → observation channel →
//! observed` before it reaches the opponent's running frequency.

use crate::error::{Error, Result};
use crate::error_model::{ChannelMatrix, ErrorFrequencyTracker};
use crate::game::{best_response, Game, Profile, SimplexVector};
use crate::linalg::Matrix;
use crate::response::{Awareness, ErrorModel};
use crate::rng::{sample_index, RunStreams, Source};
use crate::scalar::{sup_distance, Scalar};

/// Running average after observing `vertex` at step `k`: `q + (v − q)/(k + 1)`.
///
/// At `k = 0` the result is the vertex itself, whatever `q` was.
pub fn freq_update<T: Scalar>(q: &SimplexVector<T>, k: u64, vertex: usize) -> SimplexVector<T> {
    assert!(
        vertex < q.dim(),
        "vertex {vertex} outside simplex of dimension {}",
        q.dim()
    );
    let w = T::one() / (T::from_u64(k).unwrap() + T::one());
    let next = q
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let target = if j == vertex { T::one() } else { T::zero() };
            p + (target - p) * w
        })
        .collect();
    SimplexVector::new(next).expect("convex combination of simplex points")
}

/// What one player knows about the opponent.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState<T> {
    /// Running frequency of the opponent's actions as observed.
    pub observed_freq: SimplexVector<T>,
    pub step_count: u64,
    /// `(C̄)⁻¹` applied to `observed_freq` before best-responding.
    pub compensation: Option<Matrix<T>>,
    /// `D⁻¹` applied to the best response by a player aware of its decision errors.
    pub own_precompensation: Option<Matrix<T>>,
}

impl<T: Scalar> PlayerState<T> {
    pub fn new(opponent_actions: usize) -> Self {
        PlayerState {
            observed_freq: SimplexVector::uniform(opponent_actions),
            step_count: 0,
            compensation: None,
            own_precompensation: None,
        }
    }

    /// Estimated opponent frequency. Before any observation this is the uniform prior.
    pub fn estimate(&self) -> Vec<T> {
        match (&self.compensation, self.step_count) {
            (Some(inv), k) if k > 0 => inv
                .mul_vec(&self.observed_freq)
                .expect("compensation shape checked at setup"),
            _ => self.observed_freq.to_vec(),
        }
    }

    /// Mixed strategy player `index` samples its intended action from.
    fn sampling_law(&self, index: usize, game: &Game<T>) -> Result<(SimplexVector<T>, Vec<T>)> {
        let estimate = self.estimate();
        let beta = best_response(&estimate, game.player(index))?;
        let law = match &self.own_precompensation {
            None => beta,
            Some(inv) => {
                let raw = inv.mul_vec(&beta)?;
                SimplexVector::new(raw.clone()).map_err(|_| Error::InfeasiblePrecompensation {
                    player: index + 1,
                    vector: raw.iter().map(|x| x.as_f64()).collect(),
                })?
            }
        };
        Ok((law, estimate))
    }
}

/// Actions of one stage for both players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageActions {
    pub intended: [usize; 2],
    pub realized: [usize; 2],
    /// `observed[i]`: player `i`'s action as the opponent saw it.
    pub observed: [usize; 2],
}

/// Snapshot of the frequencies after `step` completed stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub step: u64,
    pub intended: Profile<T>,
    pub realized: Profile<T>,
    /// Frequency of each player's actions as seen by the opponent.
    pub observed: Profile<T>,
    /// `estimate[i]`: player `i`'s compensated estimate of the opponent, unprojected.
    pub estimate: [Vec<T>; 2],
    pub estimate_clipped: [SimplexVector<T>; 2],
    /// `‖intended frequency − current sampling law‖∞` per player.
    pub residual: [T; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionLog {
    pub intended: [Vec<u32>; 2],
    pub realized: [Vec<u32>; 2],
    pub observed: [Vec<u32>; 2],
}

impl ActionLog {
    fn push(&mut self, a: &StageActions) {
        for i in 0..2 {
            self.intended[i].push(a.intended[i] as u32);
            self.realized[i].push(a.realized[i] as u32);
            self.observed[i].push(a.observed[i] as u32);
        }
    }

    pub fn len(&self) -> usize {
        self.intended[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stage(&self, k: usize) -> StageActions {
        let pick = |v: &[Vec<u32>; 2]| [v[0][k] as usize, v[1][k] as usize];
        StageActions {
            intended: pick(&self.intended),
            realized: pick(&self.realized),
            observed: pick(&self.observed),
        }
    }
}

/// Full trace of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<T> {
    pub seed: u64,
    pub config_hash: Option<String>,
    pub actions: ActionLog,
    pub checkpoints: Vec<Checkpoint<T>>,
    /// Intended → realized counts per player, when decision errors are active.
    pub decision_trackers: Option<[ErrorFrequencyTracker; 2]>,
    /// Realized → observed counts per player, when observation errors are active.
    pub channel_trackers: Option<[ErrorFrequencyTracker; 2]>,
}

impl<T: Scalar> RunRecord<T> {
    pub fn last(&self) -> Option<&Checkpoint<T>> {
        self.checkpoints.last()
    }
}

/// A two-player stochastic fictitious play run in progress.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    game: Game<T>,
    errors: ErrorModel<T>,
    players: [PlayerState<T>; 2],
    intended_freq: [SimplexVector<T>; 2],
    realized_freq: [SimplexVector<T>; 2],
    streams: RunStreams,
    decision_trackers: Option<[ErrorFrequencyTracker; 2]>,
    channel_trackers: Option<[ErrorFrequencyTracker; 2]>,
    seed: u64,
    stage: u64,
}

impl<T: Scalar> Simulation<T> {
    /// Error-free play.
    pub fn perfect(game: Game<T>, seed: u64) -> Self {
        Self::new(
            game,
            ErrorModel::none(),
            seed,
            T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD),
        )
        .expect("error-free setup cannot fail")
    }

    /// Trembling-hand play; aware players precompensate with `D_i⁻¹`.
    pub fn with_decision_errors(
        game: Game<T>,
        d1: ChannelMatrix<T>,
        d2: ChannelMatrix<T>,
        awareness: Awareness,
        seed: u64,
    ) -> Result<Self> {
        let threshold = T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD);
        Self::new(game, ErrorModel::decision(d1, d2, awareness), seed, threshold)
    }

    /// Noisy observations; each player compensates with the inverse of its channel estimate.
    pub fn with_observation_errors(
        game: Game<T>,
        c: [ChannelMatrix<T>; 2],
        c_bar: [ChannelMatrix<T>; 2],
        seed: u64,
    ) -> Result<Self> {
        let threshold = T::lit(crate::error_model::DEFAULT_SINGULARITY_THRESHOLD);
        Self::new(game, ErrorModel::observation(c, c_bar), seed, threshold)
    }

    /// General setup. Matrices that must be inverted are checked against `singularity` here.
    pub fn new(game: Game<T>, errors: ErrorModel<T>, seed: u64, singularity: T) -> Result<Self> {
        errors.validate(&game)?;
        let (m, n) = game.dims();
        let mut players = [PlayerState::new(n), PlayerState::new(m)];
        if let Some(d) = &errors.decision {
            if d.awareness == Awareness::Aware {
                for (i, p) in players.iter_mut().enumerate() {
                    p.own_precompensation = Some(d.d[i].invert(singularity)?);
                }
            }
        }
        if let Some(o) = &errors.observation {
            for (i, p) in players.iter_mut().enumerate() {
                // Player i observes the opponent through c[1 - i].
                p.compensation = Some(o.c_bar[1 - i].invert(singularity)?);
            }
        }
        let decision_trackers = errors
            .decision
            .as_ref()
            .map(|_| [ErrorFrequencyTracker::new(m), ErrorFrequencyTracker::new(n)]);
        let channel_trackers = errors
            .observation
            .as_ref()
            .map(|_| [ErrorFrequencyTracker::new(m), ErrorFrequencyTracker::new(n)]);
        Ok(Simulation {
            game,
            errors,
            players,
            intended_freq: [SimplexVector::uniform(m), SimplexVector::uniform(n)],
            realized_freq: [SimplexVector::uniform(m), SimplexVector::uniform(n)],
            streams: RunStreams::new(seed),
            decision_trackers,
            channel_trackers,
            seed,
            stage: 0,
        })
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn player(&self, i: usize) -> &PlayerState<T> {
        &self.players[i]
    }

    pub fn game(&self) -> &Game<T> {
        &self.game
    }

    /// Plays one stage.
    pub fn step(&mut self) -> Result<StageActions> {
        let laws = [
            self.players[0].sampling_law(0, &self.game)?.0,
            self.players[1].sampling_law(1, &self.game)?.0,
        ];
        let mut actions = StageActions {
            intended: [0; 2],
            realized: [0; 2],
            observed: [0; 2],
        };
        for i in 0..2 {
            let intended = sample_index(laws[i].iter().copied(), self.streams.get(Source::Decision(i)));
            let realized = match &self.errors.decision {
                Some(d) => {
                    let r = d.d[i].sample_corrupt(intended, self.streams.get(Source::Tremble(i)));
                    if let Some(t) = &mut self.decision_trackers {
                        t[i].record(intended, r);
                    }
                    r
                }
                None => intended,
            };
            let observed = match &self.errors.observation {
                Some(o) => {
                    let seen = o.c[i].sample_corrupt(realized, self.streams.get(Source::Channel(i)));
                    if let Some(t) = &mut self.channel_trackers {
                        t[i].record(realized, seen);
                    }
                    seen
                }
                None => realized,
            };
            actions.intended[i] = intended;
            actions.realized[i] = realized;
            actions.observed[i] = observed;
        }
        let k = self.stage;
        for i in 0..2 {
            self.intended_freq[i] = freq_update(&self.intended_freq[i], k, actions.intended[i]);
            self.realized_freq[i] = freq_update(&self.realized_freq[i], k, actions.realized[i]);
            let watcher = &mut self.players[1 - i];
            watcher.observed_freq = freq_update(&watcher.observed_freq, k, actions.observed[i]);
            watcher.step_count += 1;
        }
        self.stage += 1;
        Ok(actions)
    }

    pub fn checkpoint(&self) -> Result<Checkpoint<T>> {
        let (law0, est0) = self.players[0].sampling_law(0, &self.game)?;
        let (law1, est1) = self.players[1].sampling_law(1, &self.game)?;
        let residual = [
            sup_distance(&self.intended_freq[0], &law0),
            sup_distance(&self.intended_freq[1], &law1),
        ];
        Ok(Checkpoint {
            step: self.stage,
            intended: Profile::new(self.intended_freq[0].clone(), self.intended_freq[1].clone()),
            realized: Profile::new(self.realized_freq[0].clone(), self.realized_freq[1].clone()),
            observed: Profile::new(
                self.players[1].observed_freq.clone(),
                self.players[0].observed_freq.clone(),
            ),
            estimate_clipped: [
                SimplexVector::clip_renormalize(&est0),
                SimplexVector::clip_renormalize(&est1),
            ],
            estimate: [est0, est1],
            residual,
        })
    }

    /// Plays `steps` stages, checkpointing every `record_every` stages and at the end.
    pub fn run(mut self, steps: u64, record_every: u64) -> Result<RunRecord<T>> {
        let every = record_every.max(1);
        let mut actions = ActionLog::default();
        let mut checkpoints = Vec::with_capacity((steps / every) as usize + 1);
        for _ in 0..steps {
            let a = self.step()?;
            actions.push(&a);
            if self.stage.is_multiple_of(every) || self.stage == steps {
                checkpoints.push(self.checkpoint()?);
            }
        }
        Ok(RunRecord {
            seed: self.seed,
            config_hash: None,
            actions,
            checkpoints,
            decision_trackers: self.decision_trackers,
            channel_trackers: self.channel_trackers,
        })
    }
}

/// Batch average of the first `k` action indices as a frequency over `dim` actions.
pub fn batch_frequency(actions: &[u32], dim: usize) -> Vec<f64> {
    let mut counts = vec![0u64; dim];
    for &a in actions {
        counts[a as usize] += 1;
    }
    let k = actions.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / k).collect()
}
