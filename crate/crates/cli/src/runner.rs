//! Runs a scenario end to end: solver, ODE, discrete-time seeds, artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sfp_core::ctfp::{converged_limit, integrate};
use sfp_core::equilibrium::{multi_start, MultiStart, ProblemVariant};
use sfp_core::error_model::ErrorFrequencyTracker;
use sfp_core::scalar::sup_distance;
use sfp_core::{
    Awareness, ChannelMatrix, DynamicsSpec, FixedPointProblem, OdeTrajectory, Profile, RunRecord, Simulation,
};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::report::{
    pair, pair_distance, Check, Frequencies, HypothesesReport, OdeReport, Pair, SeedReport, SolverReport, SolverRun,
    Summary, SCHEMA_VERSION,
};

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const SUMMARY: &str = "summary.json";
pub const ODE_TRAJECTORY: &str = "ode_trajectory.csv";
pub const SEED_TRAJECTORY: &str = "trajectory.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] sfp_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SHA-256 of the resolved configuration, ignoring where output goes.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let mut raw = cfg.to_raw();
    raw.output_dir = None;
    let text = toml::to_string(&raw).expect("scenario values serialize to TOML");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn variant_name(cfg: &ScenarioConfig) -> String {
    let decision = cfg.errors.decision.as_ref().map(|d| match d.awareness {
        Awareness::Aware => "aware-decision",
        Awareness::Unaware => "unaware-decision",
    });
    let observation = cfg.errors.observation.as_ref().map(|_| "observation");
    let parts: Vec<&str> = decision.into_iter().chain(observation).collect();
    if parts.is_empty() {
        "error-free".into()
    } else {
        parts.join("+")
    }
}

fn problem_name(v: ProblemVariant) -> &'static str {
    match v {
        ProblemVariant::Plain => "plain",
        ProblemVariant::DecisionError => "decision-error",
        ProblemVariant::ObservationError => "observation-error",
        ProblemVariant::Combined => "combined",
        ProblemVariant::Precompensated => "precompensated",
    }
}

fn solver_report(problem: &FixedPointProblem, ms: &MultiStart<f64>) -> SolverReport {
    SolverReport {
        variant: problem_name(problem.variant()).into(),
        primary: ms.primary().map(pair),
        solutions: ms.solutions.iter().map(pair).collect(),
        possibly_multiple: ms.possibly_multiple(),
        runs: ms
            .runs
            .iter()
            .map(|r| SolverRun {
                converged: r.converged,
                residual: r.residual,
                iterations: r.iterations,
                damping: r.damping,
            })
            .collect(),
    }
}

fn determinants(cfg: &ScenarioConfig) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if let Some(d) = &cfg.errors.decision {
        for i in 0..2 {
            out.insert(format!("d{}", i + 1), d.d[i].determinant());
        }
    }
    if let Some(o) = &cfg.errors.observation {
        for i in 0..2 {
            out.insert(format!("c{}", i + 1), o.c[i].determinant());
            out.insert(format!("cbar{}", i + 1), o.c_bar[i].determinant());
        }
    }
    out
}

/// Solver results for the error-free game and for the configured errors.
pub struct Solved {
    pub spec: DynamicsSpec,
    pub hypotheses: HypothesesReport,
    pub error_free: SolverReport,
    pub solver: SolverReport,
    /// Predicted frequencies at every distinct solution; the first matches `primary`.
    pub predictions: Vec<Frequencies>,
    pub equilibrium_shift: Option<f64>,
}

impl Solved {
    fn predicted(&self) -> Option<&Frequencies> {
        self.predictions.first()
    }

    /// Distance from realized frequencies `x` to the nearest predicted ones.
    pub fn nearest_realized(&self, x: &Pair) -> Option<f64> {
        self.predictions
            .iter()
            .filter_map(|f| pair_distance(&f.realized, x))
            .reduce(f64::min)
    }
}

pub fn solve_scenario(cfg: &ScenarioConfig) -> Result<Solved, RunError> {
    let singularity = cfg.thresholds.singularity;
    let settings = cfg.solver.settings();
    let s = &cfg.solver;

    let plain = FixedPointProblem::plain(&cfg.game).with_settings(settings.clone());
    let plain_ms = multi_start(&plain, s.starts, s.seed, s.agreement_tol)?;
    let problem = FixedPointProblem::from_errors(&cfg.game, &cfg.errors, singularity)?.with_settings(settings);
    let ms = multi_start(&problem, s.starts, s.seed, s.agreement_tol)?;

    let mut order: Vec<&Profile> = ms.primary().into_iter().collect();
    order.extend(ms.solutions.iter().filter(|x| Some(*x) != ms.primary()));
    let predictions = order
        .into_iter()
        .map(|x| {
            let p = problem.predicted_frequencies(x)?;
            Ok(Frequencies {
                intended: pair(&p.intended),
                realized: pair(&p.realized),
                observed: pair(&p.observed),
            })
        })
        .collect::<Result<Vec<_>, sfp_core::Error>>()?;

    let spec = DynamicsSpec::from_errors(&cfg.game, &cfg.errors, singularity)?;
    let h = spec.hypotheses(cfg.thresholds.nondegeneracy);
    let hypotheses = HypothesesReport {
        applicable: cfg.game.is_2x2(),
        forms: h.forms.map(|(a, b)| [a, b]),
        product: h.forms.map(|(a, b)| a * b),
        threshold: cfg.thresholds.nondegeneracy,
        holds: h.holds,
        determinants: determinants(cfg),
    };
    let error_free = solver_report(&plain, &plain_ms);
    let equilibrium_shift = match (predictions.first(), &error_free.primary) {
        (Some(f), Some(e)) => pair_distance(&f.realized, e),
        _ => None,
    };
    Ok(Solved {
        spec,
        hypotheses,
        error_free,
        solver: solver_report(&problem, &ms),
        predictions,
        equilibrium_shift,
    })
}

fn float(x: f64) -> String {
    // Debug formatting is the shortest string that parses back to `x`.
    format!("{x:?}")
}

fn prob_headers(m: usize, n: usize) -> Vec<String> {
    (1..=m)
        .map(|j| format!("p1_{j}"))
        .chain((1..=n).map(|j| format!("p2_{j}")))
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::Writer::from_path(path).map_err(|source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<I>(path: &Path, header: Vec<String>, rows: I) -> Result<(), RunError>
where
    I: Iterator<Item = Vec<String>>,
{
    let wrap = |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(&header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

/// `time, p1_*, p2_*, residual1, residual2`.
pub fn write_ode_csv(path: &Path, traj: &OdeTrajectory) -> Result<(), RunError> {
    let (m, n) = (traj.states[0].p1.dim(), traj.states[0].p2.dim());
    let mut header = vec!["time".to_string()];
    header.extend(prob_headers(m, n));
    header.extend(["residual1", "residual2"].map(String::from));
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.player_residuals)
        .map(|((t, s), r)| {
            let mut row = vec![float(*t)];
            row.extend(s.p1.iter().chain(s.p2.iter()).map(|&x| float(x)));
            row.extend(r.iter().map(|&x| float(x)));
            row
        });
    write_rows(path, header, rows)
}

/// `step, p1_*, p2_*, residual1, residual2`, then the stage's intended,
/// realized and observed action of each player. Frequencies are realized ones.
pub fn write_dt_csv(path: &Path, rec: &RunRecord) -> Result<(), RunError> {
    let first = &rec.checkpoints[0];
    let (m, n) = (first.realized.p1.dim(), first.realized.p2.dim());
    let mut header = vec!["step".to_string()];
    header.extend(prob_headers(m, n));
    header.extend(
        [
            "residual1",
            "residual2",
            "intended1",
            "realized1",
            "observed1",
            "intended2",
            "realized2",
            "observed2",
        ]
        .map(String::from),
    );
    let rows = rec.checkpoints.iter().map(|cp| {
        let s = rec.actions.stage(cp.step as usize - 1);
        let mut row = vec![cp.step.to_string()];
        row.extend(cp.realized.p1.iter().chain(cp.realized.p2.iter()).map(|&x| float(x)));
        row.extend(cp.residual.iter().map(|&x| float(x)));
        for i in 0..2 {
            row.extend([s.intended[i], s.realized[i], s.observed[i]].map(|a| a.to_string()));
        }
        row
    });
    write_rows(path, header, rows)
}

fn zscores(trackers: &Option<[ErrorFrequencyTracker; 2]>, expected: Option<&[ChannelMatrix; 2]>) -> Option<[f64; 2]> {
    let (t, e) = (trackers.as_ref()?, expected?);
    Some([t[0].max_binomial_zscore(&e[0]), t[1].max_binomial_zscore(&e[1])])
}

fn run_seed(
    cfg: &ScenarioConfig,
    seed: u64,
    dir: &Path,
    ode_final: &Pair,
    solved: &Solved,
) -> Result<SeedReport, RunError> {
    let dt = cfg.dtfp.as_ref().expect("seeds run only with a dtfp section");
    let sim = Simulation::new(cfg.game.clone(), cfg.errors.clone(), seed, cfg.thresholds.singularity)?;
    let rec = sim.run(dt.steps, dt.record_every)?;
    let seed_dir = dir.join(format!("seed_{seed}"));
    fs::create_dir_all(&seed_dir).map_err(io_err(&seed_dir))?;
    let file = seed_dir.join(SEED_TRAJECTORY);
    write_dt_csv(&file, &rec)?;

    let last = rec.last().expect("at least one stage was played");
    let realized = pair(&last.realized);
    let observed_vs_channel = match &cfg.errors.observation {
        Some(o) => {
            let mut worst = 0.0f64;
            for i in 0..2 {
                let predicted = o.c[i].apply(last.realized.get(i))?;
                worst = worst.max(sup_distance(&predicted, last.observed.get(i)));
            }
            Some(worst)
        }
        None => None,
    };
    Ok(SeedReport {
        seed,
        file: format!("seed_{seed}/{SEED_TRAJECTORY}"),
        steps: dt.steps,
        final_intended: pair(&last.intended),
        final_observed: pair(&last.observed),
        residual: last.residual,
        distance_to_ode: pair_distance(&realized, ode_final).expect("same game"),
        distance_to_solver: solved.nearest_realized(&realized),
        decision_zscores: zscores(&rec.decision_trackers, cfg.errors.decision.as_ref().map(|d| &d.d)),
        channel_zscores: zscores(&rec.channel_trackers, cfg.errors.observation.as_ref().map(|o| &o.c)),
        observed_vs_channel,
        final_realized: realized,
    })
}

fn checks(cfg: &ScenarioConfig, ode: &OdeReport, seeds: &[SeedReport]) -> Vec<Check> {
    let t = &cfg.thresholds;
    let mut out = vec![Check::at_most(
        "ode_converged",
        ode.tail_residual,
        cfg.ctfp.convergence_tol,
    )];
    out.push(Check::at_most("ode_vs_solver", ode.distance_to_solver, t.ode_vs_solver));
    for s in seeds {
        let tag = |what: &str| format!("{what}[seed={}]", s.seed);
        out.push(Check::at_most(tag("dt_vs_ode"), s.distance_to_ode, t.dt_vs_ode));
        out.push(Check::at_most(
            tag("dt_vs_solver"),
            s.distance_to_solver,
            t.dt_vs_solver,
        ));
        if let Some(z) = s.decision_zscores {
            out.push(Check::at_most(tag("decision_zscore"), z[0].max(z[1]), t.zscore));
        }
        if let Some(z) = s.channel_zscores {
            out.push(Check::at_most(tag("channel_zscore"), z[0].max(z[1]), t.zscore));
        }
        if let Some(d) = s.observed_vs_channel {
            out.push(Check::at_most(tag("observed_vs_channel"), d, t.observed_vs_channel));
        }
    }
    out
}

/// Runs every engine, writes the artifacts under `cfg.output_dir` and returns the summary.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Summary, RunError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let resolved = dir.join(RESOLVED_CONFIG);
    fs::write(&resolved, cfg.to_toml()).map_err(io_err(&resolved))?;

    let solved = solve_scenario(cfg)?;
    let (m, n) = cfg.game.dims();
    let traj = integrate(&solved.spec, &Profile::uniform(m, n), cfg.ctfp.h, cfg.ctfp.t_end)?;
    write_ode_csv(&dir.join(ODE_TRAJECTORY), &traj)?;
    let len = traj.residuals.len();
    let tail = &traj.residuals[len - len.div_ceil(10).max(1)..];
    let final_state = pair(traj.last());
    let ode = OdeReport {
        file: ODE_TRAJECTORY.into(),
        h: cfg.ctfp.h,
        t_end: cfg.ctfp.t_end,
        converged: converged_limit(&traj, cfg.ctfp.convergence_tol).limit().is_some(),
        tail_residual: tail.iter().copied().fold(0.0, f64::max),
        max_renormalization: traj.max_renormalization,
        renormalizations: traj.renormalizations,
        distance_to_solver: solved.nearest_realized(&final_state),
        final_state,
    };

    let seeds = match &cfg.dtfp {
        Some(dt) => {
            let workers = std::thread::available_parallelism()
                .map_or(1, |n| n.get())
                .min(dt.seeds.len());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool");
            pool.install(|| {
                dt.seeds
                    .par_iter()
                    .map(|&s| run_seed(cfg, s, dir, &ode.final_state, &solved))
                    .collect::<Result<Vec<_>, _>>()
            })?
        }
        None => Vec::new(),
    };

    let mut warnings = Vec::new();
    if !solved.hypotheses.applicable {
        warnings.push(format!(
            "the game is {m}x{n}; convergence is only guaranteed for 2x2 games, so check failures do not fail the run"
        ));
    } else if !solved.hypotheses.holds {
        warnings.push(format!(
            "nondegeneracy product {:e} is within {:e} of zero; convergence is not guaranteed, so check failures do not fail the run",
            solved.hypotheses.product.unwrap_or(0.0),
            solved.hypotheses.threshold
        ));
    }
    if solved.solver.possibly_multiple {
        warnings.push(format!(
            "the solver found {} distinct fixed points; distances use the nearest one",
            solved.solver.solutions.len()
        ));
    }
    if solved.solver.primary.is_none() {
        warnings.push("no solver start converged".into());
    }

    let checks = checks(cfg, &ode, &seeds);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        config_hash: config_hash(cfg),
        dims: [m, n],
        variant: variant_name(cfg),
        predicted: solved.predicted().cloned(),
        equilibrium_shift: solved.equilibrium_shift,
        hypotheses: solved.hypotheses,
        error_free: solved.error_free,
        solver: solved.solver,
        ode,
        dtfp: seeds,
        passed: checks.iter().all(|c| c.pass),
        checks,
        warnings,
    };
    let path = dir.join(SUMMARY);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(summary)
}
