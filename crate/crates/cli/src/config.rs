//! Scenario files: TOML parsing, validation and the resolved (fully explicit) form.
//!
//! Parsing happens in two passes. Serde reads the file into permissive raw
//! structs, then [`validate`] walks them and collects every problem with its
//! dotted field path, so one run reports all mistakes at once.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfp_core::ctfp::{DEFAULT_HORIZON, DEFAULT_NONDEGENERACY_THRESHOLD, DEFAULT_STEP};
use sfp_core::equilibrium::SolverSettings;
use sfp_core::error_model::DEFAULT_SINGULARITY_THRESHOLD;
use sfp_core::{Awareness, ChannelMatrix, Error as CoreError, ErrorModel, Game, Matrix, Orientation};

pub const DEFAULT_DT_STEPS: u64 = 100_000;
pub const DEFAULT_ODE_TOL: f64 = 1e-6;
pub const DEFAULT_STARTS: usize = 10;
pub const DEFAULT_AGREEMENT_TOL: f64 = 1e-6;

/// One validation failure, located by dotted path (`errors.observation.c1.matrix`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Parse(String),
    #[error("{} invalid field(s):\n{}", .0.len(), render_issues(.0))]
    Invalid(Vec<Issue>),
}

fn render_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl ConfigError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationSpec {
    Rows,
    Columns,
}

impl From<OrientationSpec> for Orientation {
    fn from(o: OrientationSpec) -> Self {
        match o {
            OrientationSpec::Rows => Orientation::Rows,
            OrientationSpec::Columns => Orientation::Columns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AwarenessSpec {
    Aware,
    Unaware,
}

/// A channel is either a binary `{ alpha, gamma }` pair or a full matrix
/// whose orientation must be stated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<OrientationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawTau {
    Shared(f64),
    PerPlayer(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGame {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<RawTau>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff1: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff2: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDecision {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub awareness: Option<AwarenessSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<RawChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<RawChannel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawObservation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<RawChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<RawChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cbar1: Option<RawChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cbar2: Option<RawChannel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawErrors {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<RawDecision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<RawObservation>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDtfp {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCtfp {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSolver {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawThresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_vs_solver: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_vs_ode: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_vs_solver: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegeneracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singularity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zscore: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_vs_channel: Option<f64>,
}

/// The file as written, before defaults and validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<RawGame>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<RawErrors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtfp: Option<RawDtfp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ctfp: Option<RawCtfp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<RawSolver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<RawThresholds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtfpSettings {
    pub steps: u64,
    pub seeds: Vec<u64>,
    pub record_every: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtfpSettings {
    pub h: f64,
    pub t_end: f64,
    /// Residual below which the trailing tenth of the trajectory counts as converged.
    pub convergence_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    pub agreement_tol: f64,
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings<f64> {
        SolverSettings {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub ode_vs_solver: f64,
    pub dt_vs_ode: f64,
    pub dt_vs_solver: f64,
    pub nondegeneracy: f64,
    pub singularity: f64,
    pub zscore: f64,
    pub observed_vs_channel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ode_vs_solver: 1e-6,
            dt_vs_ode: 0.02,
            dt_vs_solver: 0.02,
            nondegeneracy: DEFAULT_NONDEGENERACY_THRESHOLD,
            singularity: DEFAULT_SINGULARITY_THRESHOLD,
            zscore: 4.0,
            observed_vs_channel: 0.01,
        }
    }
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub game: Game,
    pub errors: ErrorModel,
    /// `None` skips the discrete-time runs.
    pub dtfp: Option<DtfpSettings>,
    pub ctfp: CtfpSettings,
    pub solver: SolverConfig,
    pub thresholds: Thresholds,
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    validate(&raw)
}

/// Sets `dotted.path` in a scenario document to `value` (parsed as a TOML
/// literal, falling back to a plain string) and validates the result.
pub fn parse_with_override(text: &str, dotted: &str, value: &str) -> Result<(ScenarioConfig, String), ConfigError> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let parsed = parse_literal(value);
    let keys: Vec<&str> = dotted.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Parse(format!("bad parameter path `{dotted}`")));
    }
    let mut table = &mut doc;
    for key in &keys[..keys.len() - 1] {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigError::Parse(format!("`{key}` in `{dotted}` is not a table"))),
        };
    }
    table.insert(keys[keys.len() - 1].to_string(), parsed);
    let text = toml::to_string(&doc).map_err(|e| ConfigError::Parse(e.to_string()))?;
    Ok((parse_config(&text)?, text))
}

fn parse_literal(value: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Probe {
        v: toml::Value,
    }
    match toml::from_str::<Probe>(&format!("v = {value}")) {
        Ok(p) => p.v,
        Err(_) => toml::Value::String(value.to_string()),
    }
}

struct Collector {
    issues: Vec<Issue>,
}

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be a positive finite number, got {v}"));
        }
    }
}

pub fn validate(raw: &RawScenario) -> Result<ScenarioConfig, ConfigError> {
    let mut c = Collector { issues: Vec::new() };

    let name = raw.name.clone().unwrap_or_else(|| "scenario".to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        c.push("name", "must be non-empty and contain no path separators");
    }
    let output_dir = raw
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&name));

    let thresholds = thresholds(&mut c, raw.thresholds.clone().unwrap_or_default());
    let game = game(&mut c, raw.game.as_ref());
    let errors = errors(&mut c, raw.errors.as_ref(), game.as_ref(), &thresholds);

    let dtfp = raw.dtfp.as_ref().map(|d| {
        let s = DtfpSettings {
            steps: d.steps.unwrap_or(DEFAULT_DT_STEPS),
            seeds: d.seeds.clone().unwrap_or_else(|| vec![0]),
            record_every: d.record_every.unwrap_or(1),
        };
        if s.steps == 0 {
            c.push("dtfp.steps", "must be at least 1");
        }
        if s.seeds.is_empty() {
            c.push("dtfp.seeds", "must list at least one seed");
        }
        let mut sorted = s.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != s.seeds.len() {
            c.push("dtfp.seeds", "seeds must be distinct");
        }
        if s.record_every == 0 {
            c.push("dtfp.record_every", "must be at least 1");
        }
        s
    });

    let rc = raw.ctfp.clone().unwrap_or_default();
    let ctfp = CtfpSettings {
        h: rc.h.unwrap_or(DEFAULT_STEP),
        t_end: rc.t_end.unwrap_or(DEFAULT_HORIZON),
        convergence_tol: rc.convergence_tol.unwrap_or(DEFAULT_ODE_TOL),
    };
    c.positive("ctfp.h", ctfp.h);
    c.positive("ctfp.t_end", ctfp.t_end);
    if ctfp.h > 0.0 && ctfp.t_end < ctfp.h {
        c.push("ctfp.t_end", format!("must be at least h = {}", ctfp.h));
    }
    c.positive("ctfp.convergence_tol", ctfp.convergence_tol);

    let rs = raw.solver.clone().unwrap_or_default();
    let defaults = SolverSettings::<f64>::default();
    let solver = SolverConfig {
        damping: rs.damping.unwrap_or(defaults.damping),
        tol: rs.tol.unwrap_or(defaults.tol),
        max_iter: rs.max_iter.unwrap_or(defaults.max_iter),
        starts: rs.starts.unwrap_or(DEFAULT_STARTS),
        seed: rs.seed.unwrap_or(0),
        agreement_tol: rs.agreement_tol.unwrap_or(DEFAULT_AGREEMENT_TOL),
    };
    if !(solver.damping > 0.0 && solver.damping <= 1.0) {
        c.push("solver.damping", format!("must lie in (0, 1], got {}", solver.damping));
    }
    c.positive("solver.tol", solver.tol);
    if solver.max_iter == 0 {
        c.push("solver.max_iter", "must be at least 1");
    }
    c.positive("solver.agreement_tol", solver.agreement_tol);

    if !c.issues.is_empty() {
        return Err(ConfigError::Invalid(c.issues));
    }
    Ok(ScenarioConfig {
        name,
        output_dir,
        game: game.expect("no issues means the game was built"),
        errors: errors.expect("no issues means the error model was built"),
        dtfp,
        ctfp,
        solver,
        thresholds,
    })
}

fn thresholds(c: &mut Collector, r: RawThresholds) -> Thresholds {
    let d = Thresholds::default();
    let t = Thresholds {
        ode_vs_solver: r.ode_vs_solver.unwrap_or(d.ode_vs_solver),
        dt_vs_ode: r.dt_vs_ode.unwrap_or(d.dt_vs_ode),
        dt_vs_solver: r.dt_vs_solver.unwrap_or(d.dt_vs_solver),
        nondegeneracy: r.nondegeneracy.unwrap_or(d.nondegeneracy),
        singularity: r.singularity.unwrap_or(d.singularity),
        zscore: r.zscore.unwrap_or(d.zscore),
        observed_vs_channel: r.observed_vs_channel.unwrap_or(d.observed_vs_channel),
    };
    for (k, v) in [
        ("ode_vs_solver", t.ode_vs_solver),
        ("dt_vs_ode", t.dt_vs_ode),
        ("dt_vs_solver", t.dt_vs_solver),
        ("nondegeneracy", t.nondegeneracy),
        ("singularity", t.singularity),
        ("zscore", t.zscore),
        ("observed_vs_channel", t.observed_vs_channel),
    ] {
        c.positive(&format!("thresholds.{k}"), v);
    }
    t
}

fn matrix(c: &mut Collector, path: &str, rows: &[Vec<f64>]) -> Option<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        c.push(path, "must be a non-empty array of rows");
        return None;
    }
    let width = rows[0].len();
    if let Some(r) = rows.iter().position(|r| r.len() != width) {
        c.push(
            path,
            format!("row {r} has {} entries, row 0 has {width}", rows[r].len()),
        );
        return None;
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        c.push(path, "entries must be finite");
        return None;
    }
    Matrix::from_rows(rows).ok()
}

fn game(c: &mut Collector, raw: Option<&RawGame>) -> Option<Game> {
    let Some(raw) = raw else {
        c.push("game", "missing section");
        return None;
    };
    let taus = match &raw.tau {
        None => Some([1.0, 1.0]),
        Some(RawTau::Shared(t)) => Some([*t, *t]),
        Some(RawTau::PerPlayer(v)) if v.len() == 2 => Some([v[0], v[1]]),
        Some(RawTau::PerPlayer(v)) => {
            c.push("game.tau", format!("give one temperature or two, got {}", v.len()));
            None
        }
    };
    if let Some(t) = taus {
        for (i, tau) in t.iter().enumerate() {
            if !(*tau > 0.0 && tau.is_finite()) {
                c.push(
                    "game.tau",
                    format!("temperature of player {} must be positive, got {tau}", i + 1),
                );
            }
        }
    }
    let mut load = |key: &str, rows: &Option<Vec<Vec<f64>>>| match rows {
        None => {
            c.push(format!("game.{key}"), "missing");
            None
        }
        Some(rows) => matrix(c, &format!("game.{key}"), rows),
    };
    let m1 = load("payoff1", &raw.payoff1);
    let m2 = load("payoff2", &raw.payoff2);
    let (m1, m2, taus) = (m1?, m2?, taus?);
    let (m, n) = m1.shape();
    if m < 2 || n < 2 {
        c.push(
            "game.payoff1",
            format!("each player needs at least 2 actions, got {m}x{n}"),
        );
        return None;
    }
    if m2.shape() != (n, m) {
        c.push(
            "game.payoff2",
            format!(
                "must be {n}x{m} (own actions x opponent actions), got {}x{}",
                m2.rows(),
                m2.cols()
            ),
        );
        return None;
    }
    if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return None;
    }
    match Game::from_matrices(m1, m2, taus[0], taus[1]) {
        Ok(g) => Some(g),
        Err(e) => {
            c.push("game", e.to_string());
            None
        }
    }
}

fn channel(c: &mut Collector, path: &str, raw: &RawChannel, dim: Option<usize>) -> Option<ChannelMatrix> {
    let binary = raw.alpha.is_some() || raw.gamma.is_some();
    let full = raw.matrix.is_some() || raw.orientation.is_some();
    if binary && full {
        c.push(path, "give either {alpha, gamma} or {matrix, orientation}, not both");
        return None;
    }
    let ch = if binary {
        let (Some(a), Some(g)) = (raw.alpha, raw.gamma) else {
            c.push(path, "binary channel needs both alpha and gamma");
            return None;
        };
        let mut ok = true;
        for (k, v) in [("alpha", a), ("gamma", g)] {
            if !(0.0..=1.0).contains(&v) {
                c.push(format!("{path}.{k}"), format!("must lie in [0, 1], got {v}"));
                ok = false;
            }
        }
        if let Some(d) = dim.filter(|&d| d != 2) {
            c.push(path, format!("binary form needs a 2-action player, this one has {d}"));
            ok = false;
        }
        if !ok {
            return None;
        }
        ChannelMatrix::from_2x2(a, g).ok()?
    } else {
        let Some(rows) = &raw.matrix else {
            c.push(format!("{path}.matrix"), "missing (or give alpha and gamma)");
            return None;
        };
        let Some(orientation) = raw.orientation else {
            c.push(
                format!("{path}.orientation"),
                "required for full matrices: \"rows\" or \"columns\"",
            );
            return None;
        };
        let m = matrix(c, &format!("{path}.matrix"), rows)?;
        if let Some(d) = dim {
            if m.shape() != (d, d) {
                c.push(
                    format!("{path}.matrix"),
                    format!("must be {d}x{d}, got {}x{}", m.rows(), m.cols()),
                );
                return None;
            }
        }
        match ChannelMatrix::with_orientation(m, orientation.into()) {
            Ok(ch) => ch,
            Err(CoreError::NotStochastic { column, reason }) => {
                let what = match orientation {
                    OrientationSpec::Columns => "column",
                    OrientationSpec::Rows => "row",
                };
                c.push(
                    format!("{path}.matrix"),
                    format!("{what} {column} {reason}; each {what} must sum to one"),
                );
                return None;
            }
            Err(e) => {
                c.push(format!("{path}.matrix"), e.to_string());
                return None;
            }
        }
    };
    Some(ch)
}

fn invertible(c: &mut Collector, path: &str, ch: &ChannelMatrix, threshold: f64, why: &str) {
    let det = ch.determinant();
    if det.abs() <= threshold {
        c.push(
            path,
            format!("determinant {det:e} is within {threshold:e} of zero; {why}"),
        );
    }
}

fn errors(c: &mut Collector, raw: Option<&RawErrors>, game: Option<&Game>, t: &Thresholds) -> Option<ErrorModel> {
    let dims = game.map(|g| {
        let (m, n) = g.dims();
        [m, n]
    });
    let dim = |i: usize| dims.map(|d| d[i]);
    let mut model = ErrorModel::none();
    let mut ok = true;
    let Some(raw) = raw else {
        return Some(model);
    };
    if let Some(d) = &raw.decision {
        let awareness = match d.awareness {
            Some(AwarenessSpec::Aware) => Awareness::Aware,
            Some(AwarenessSpec::Unaware) => Awareness::Unaware,
            None => {
                c.push("errors.decision.awareness", "required: \"aware\" or \"unaware\"");
                ok = false;
                Awareness::Unaware
            }
        };
        let mut load = |i: usize, raw: &Option<RawChannel>| {
            let path = format!("errors.decision.d{}", i + 1);
            match raw {
                None => {
                    c.push(path, "missing");
                    None
                }
                Some(r) => {
                    let ch = channel(c, &path, r, dim(i))?;
                    if awareness == Awareness::Aware {
                        invertible(c, &path, &ch, t.singularity, "aware players must invert it");
                    }
                    Some(ch)
                }
            }
        };
        match (load(0, &d.d1), load(1, &d.d2)) {
            (Some(d1), Some(d2)) => model.decision = ErrorModel::decision(d1, d2, awareness).decision,
            _ => ok = false,
        }
    }
    if let Some(o) = &raw.observation {
        let mut load = |key: &str, i: usize, raw: &Option<RawChannel>, invert: bool| {
            let path = format!("errors.observation.{key}");
            match raw {
                None => {
                    c.push(path, "missing");
                    None
                }
                Some(r) => {
                    let ch = channel(c, &path, r, dim(i))?;
                    if invert {
                        invertible(
                            c,
                            &path,
                            &ch,
                            t.singularity,
                            "the observer compensates with its inverse",
                        );
                    }
                    Some(ch)
                }
            }
        };
        let c1 = load("c1", 0, &o.c1, false);
        let c2 = load("c2", 1, &o.c2, false);
        let b1 = load("cbar1", 0, &o.cbar1, true);
        let b2 = load("cbar2", 1, &o.cbar2, true);
        match (c1, c2, b1, b2) {
            (Some(c1), Some(c2), Some(b1), Some(b2)) => {
                model.observation = ErrorModel::observation([c1, c2], [b1, b2]).observation;
            }
            _ => ok = false,
        }
    }
    (ok && game.is_some()).then_some(model)
}

fn raw_channel(ch: &ChannelMatrix) -> RawChannel {
    RawChannel {
        matrix: Some(ch.matrix().to_rows()),
        orientation: Some(OrientationSpec::Columns),
        ..RawChannel::default()
    }
}

impl ScenarioConfig {
    /// The explicit form: every default spelled out, channels as column-stochastic matrices.
    pub fn to_raw(&self) -> RawScenario {
        let t = &self.thresholds;
        RawScenario {
            name: Some(self.name.clone()),
            output_dir: Some(self.output_dir.clone()),
            game: Some(RawGame {
                tau: Some(RawTau::PerPlayer(vec![
                    self.game.player(0).tau(),
                    self.game.player(1).tau(),
                ])),
                payoff1: Some(self.game.player(0).payoff().matrix().to_rows()),
                payoff2: Some(self.game.player(1).payoff().matrix().to_rows()),
            }),
            errors: Some(RawErrors {
                decision: self.errors.decision.as_ref().map(|d| RawDecision {
                    awareness: Some(match d.awareness {
                        Awareness::Aware => AwarenessSpec::Aware,
                        Awareness::Unaware => AwarenessSpec::Unaware,
                    }),
                    d1: Some(raw_channel(&d.d[0])),
                    d2: Some(raw_channel(&d.d[1])),
                }),
                observation: self.errors.observation.as_ref().map(|o| RawObservation {
                    c1: Some(raw_channel(&o.c[0])),
                    c2: Some(raw_channel(&o.c[1])),
                    cbar1: Some(raw_channel(&o.c_bar[0])),
                    cbar2: Some(raw_channel(&o.c_bar[1])),
                }),
            }),
            dtfp: self.dtfp.as_ref().map(|d| RawDtfp {
                steps: Some(d.steps),
                seeds: Some(d.seeds.clone()),
                record_every: Some(d.record_every),
            }),
            ctfp: Some(RawCtfp {
                h: Some(self.ctfp.h),
                t_end: Some(self.ctfp.t_end),
                convergence_tol: Some(self.ctfp.convergence_tol),
            }),
            solver: Some(RawSolver {
                damping: Some(self.solver.damping),
                tol: Some(self.solver.tol),
                max_iter: Some(self.solver.max_iter),
                starts: Some(self.solver.starts),
                seed: Some(self.solver.seed),
                agreement_tol: Some(self.solver.agreement_tol),
            }),
            thresholds: Some(RawThresholds {
                ode_vs_solver: Some(t.ode_vs_solver),
                dt_vs_ode: Some(t.dt_vs_ode),
                dt_vs_solver: Some(t.dt_vs_solver),
                nondegeneracy: Some(t.nondegeneracy),
                singularity: Some(t.singularity),
                zscore: Some(t.zscore),
                observed_vs_channel: Some(t.observed_vs_channel),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("scenario values serialize to TOML")
    }
}
