//! The `summary.json` schema and cross-report comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sfp_core::Profile;

pub const SCHEMA_VERSION: u32 = 1;

/// `[p1, p2]` as plain vectors.
pub type Pair = [Vec<f64>; 2];

pub fn pair(p: &Profile) -> Pair {
    [p.p1.to_vec(), p.p2.to_vec()]
}

/// `max_i ‖a_i − b_i‖∞`; `None` when shapes differ.
pub fn pair_distance(a: &Pair, b: &Pair) -> Option<f64> {
    let mut d = 0.0f64;
    for i in 0..2 {
        if a[i].len() != b[i].len() {
            return None;
        }
        for (x, y) in a[i].iter().zip(&b[i]) {
            d = d.max((x - y).abs());
        }
    }
    Some(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesesReport {
    /// The convergence guarantees only cover 2×2 games.
    pub applicable: bool,
    /// Nondegeneracy forms of the effective payoff matrices.
    pub forms: Option<[f64; 2]>,
    pub product: Option<f64>,
    pub threshold: f64,
    pub holds: bool,
    /// Determinants of every configured channel, keyed `d1`, `c2`, `cbar1`, ...
    pub determinants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub variant: String,
    /// Solution reached from the uniform start, in the solver's own coordinates.
    pub primary: Option<Pair>,
    pub solutions: Vec<Pair>,
    pub possibly_multiple: bool,
    pub runs: Vec<SolverRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequencies {
    pub intended: Pair,
    pub realized: Pair,
    pub observed: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeReport {
    pub file: String,
    pub h: f64,
    pub t_end: f64,
    pub converged: bool,
    /// Largest residual over the trailing tenth of the grid.
    pub tail_residual: f64,
    pub final_state: Pair,
    pub max_renormalization: f64,
    pub renormalizations: usize,
    /// Distance from the final state to the nearest predicted realized frequency.
    pub distance_to_solver: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub file: String,
    pub steps: u64,
    pub final_intended: Pair,
    pub final_realized: Pair,
    pub final_observed: Pair,
    pub residual: [f64; 2],
    pub distance_to_ode: f64,
    pub distance_to_solver: Option<f64>,
    /// Largest binomial z-score of the empirical decision-error rates, per player.
    pub decision_zscores: Option<[f64; 2]>,
    pub channel_zscores: Option<[f64; 2]>,
    /// `max_i ‖observed_i − C_i realized_i‖∞`.
    pub observed_vs_channel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the quantity could not be computed, which fails the check.
    pub value: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: impl Into<Option<f64>>, threshold: f64) -> Self {
        let value = value.into();
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value.is_some_and(|v| v <= threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub dims: [usize; 2],
    pub variant: String,
    pub hypotheses: HypothesesReport,
    pub error_free: SolverReport,
    pub solver: SolverReport,
    /// Frequencies implied by the variant's primary solution.
    pub predicted: Option<Frequencies>,
    /// `‖predicted realized − error-free equilibrium‖∞`.
    pub equilibrium_shift: Option<f64>,
    pub ode: OdeReport,
    pub dtfp: Vec<SeedReport>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl Summary {
    /// Whether failed checks should fail the run. Outside the theorems'
    /// hypotheses disagreement is reported, not enforced.
    pub fn enforced(&self) -> bool {
        self.hypotheses.applicable && self.hypotheses.holds
    }

    pub fn exit_code(&self) -> i32 {
        if !self.passed && self.enforced() {
            3
        } else {
            0
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let file = if path.is_dir() {
            path.join("summary.json")
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
        let s: Summary = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", file.display()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "{}: schema version {} (expected {SCHEMA_VERSION})",
                file.display(),
                s.schema_version
            ));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub variant: String,
    pub shift: Option<f64>,
    pub ode_vs_solver: Option<f64>,
    pub worst_dt_vs_ode: Option<f64>,
    pub passed: bool,
}

/// One row per report. All reports must describe games of the same shape.
pub fn compare(reports: &[(String, Summary)]) -> Result<Vec<CompareRow>, String> {
    let Some((_, first)) = reports.first() else {
        return Err("nothing to compare".into());
    };
    let mut rows = Vec::with_capacity(reports.len());
    for (label, s) in reports {
        if s.dims != first.dims {
            return Err(format!(
                "{label} has a {}x{} game but the first report has {}x{}",
                s.dims[0], s.dims[1], first.dims[0], first.dims[1]
            ));
        }
        rows.push(CompareRow {
            label: label.clone(),
            variant: s.variant.clone(),
            shift: s.equilibrium_shift,
            ode_vs_solver: s.ode.distance_to_solver,
            worst_dt_vs_ode: s.dtfp.iter().map(|d| d.distance_to_ode).reduce(f64::max),
            passed: s.passed,
        });
    }
    Ok(rows)
}

pub fn format_table(rows: &[CompareRow]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"));
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.variant.clone(),
                cell(r.shift),
                cell(r.ode_vs_solver),
                cell(r.worst_dt_vs_ode),
                if r.passed { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    let header = ["report", "variant", "shift", "ode-solver", "dt-ode", "passed"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&body) {
        let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_distance_is_sup_norm_over_both_players() {
        let a: Pair = [vec![0.5, 0.5], vec![0.2, 0.8]];
        let b: Pair = [vec![0.4, 0.6], vec![0.5, 0.5]];
        assert!((pair_distance(&a, &b).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(pair_distance(&a, &[vec![1.0], vec![0.5, 0.5]]), None);
    }

    #[test]
    fn missing_values_fail_checks() {
        assert!(!Check::at_most("x", None, 1.0).pass);
        assert!(Check::at_most("x", 1.0, 1.0).pass);
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn table_aligns_columns() {
        let row = |label: &str, shift| CompareRow {
            label: label.into(),
            variant: "error-free".into(),
            shift,
            ode_vs_solver: Some(1e-14),
            worst_dt_vs_ode: None,
            passed: true,
        };
        let t = format_table(&[row("a", Some(0.0)), row("longer-name", None)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        let col = lines[0].find("variant").unwrap();
        assert!(lines.iter().skip(1).all(|l| l[col..].starts_with("error-free")));
        assert!(lines[1].contains("0.000e0"));
    }
}
