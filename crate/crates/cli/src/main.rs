use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sfp_cli::config::{load_config, parse_with_override, DtfpSettings, ScenarioConfig};
use sfp_cli::report::{compare, format_table, pair_distance, Summary};
use sfp_cli::{exit, render, run_scenario, solve_scenario, ConfigError, RunError};

#[derive(Parser)]
#[command(
    name = "sfp",
    version,
    about = "Stochastic fictitious play with decision and observation errors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver, the ODE and every discrete-time seed, and write all artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds; overrides (or enables) the discrete-time runs.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Stages per discrete-time run.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the error-free and perturbed fixed points and print them as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun a scenario once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path into the scenario file, e.g. `errors.decision.d1.alpha`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate equilibrium shifts across run reports (summary.json or its directory).
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Plot the frequency columns of a trajectory CSV as SVG.
    Render {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(ConfigError),
    Run(RunError),
    Other(i32, String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            exit::INVALID_CONFIG
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            exit::ENGINE
        }
        Err(Failure::Other(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Simulate {
            config,
            seeds,
            steps,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if seeds.is_some() || steps.is_some() {
                let dt = cfg.dtfp.get_or_insert_with(|| DtfpSettings {
                    steps: sfp_cli::config::DEFAULT_DT_STEPS,
                    seeds: vec![0],
                    record_every: 1,
                });
                if let Some(s) = seeds {
                    dt.seeds = s;
                }
                if let Some(s) = steps {
                    dt.steps = s.max(1);
                }
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let summary = run_scenario(&cfg)?;
            report_run(&cfg, &summary);
            Ok(summary.exit_code())
        }
        Command::Solve { config } => {
            let cfg = load_config(&config)?;
            let solved = solve_scenario(&cfg)?;
            let value = json!({
                "name": cfg.name,
                "hypotheses": solved.hypotheses,
                "error_free": solved.error_free,
                "solver": solved.solver,
                "predicted": solved.predictions.first(),
                "equilibrium_shift": solved.equilibrium_shift,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("JSON values serialize")
            );
            Ok(exit::OK)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => sweep(&config, &param, &values, out),
        Command::Compare { reports } => {
            let loaded = reports
                .iter()
                .map(|p| Summary::load(p).map(|s| (p.display().to_string(), s)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Other(exit::INVALID_CONFIG, e))?;
            let rows = compare(&loaded).map_err(|e| Failure::Other(exit::INVALID_CONFIG, e))?;
            print!("{}", format_table(&rows));
            Ok(exit::OK)
        }
        Command::Render { csv, out } => {
            let series = render::read_series(&csv)
                .map_err(|e| Failure::Other(exit::INVALID_CONFIG, format!("{}: {e}", csv.display())))?;
            let target = out.unwrap_or_else(|| csv.with_extension("svg"));
            let title = csv.display().to_string();
            std::fs::write(&target, render::to_svg(&series, &title))
                .map_err(|e| Failure::Other(exit::ENGINE, format!("{}: {e}", target.display())))?;
            println!("{}", target.display());
            Ok(exit::OK)
        }
    }
}

fn report_run(cfg: &ScenarioConfig, s: &Summary) {
    println!("{} ({}) -> {}", s.name, s.variant, cfg.output_dir.display());
    if let (Some(p), Some(e)) = (&s.predicted, &s.error_free.primary) {
        println!("  error-free equilibrium  {:?}", e);
        println!("  predicted realized      {:?}", p.realized);
        if let Some(d) = pair_distance(&p.realized, e) {
            println!("  equilibrium shift       {d:.6e}");
        }
    }
    for c in &s.checks {
        let value = c.value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3e}"));
        println!(
            "  {} {:<32} {value} (<= {:.1e})",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.threshold
        );
    }
    for w in &s.warnings {
        println!("  warning: {w}");
    }
}

fn sweep(config: &Path, param: &str, values: &[String], out: Option<PathBuf>) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(config).map_err(|source| ConfigError::Io {
        path: config.to_path_buf(),
        source,
    })?;
    // Validate every point before running any of them.
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let (mut cfg, _) = parse_with_override(&text, param, v)?;
        let base = out.clone().unwrap_or_else(|| cfg.output_dir.join("sweep"));
        let label: String = format!("{param}={v}")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "._=-".contains(c) {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        cfg.output_dir = base.join(&label);
        configs.push((label, cfg));
    }
    let mut code = exit::OK;
    let mut reports = Vec::with_capacity(configs.len());
    for (label, cfg) in configs {
        let summary = run_scenario(&cfg)?;
        report_run(&cfg, &summary);
        code = code.max(summary.exit_code());
        reports.push((label, summary));
    }
    let rows = compare(&reports).map_err(|e| Failure::Other(exit::INVALID_CONFIG, e))?;
    print!("{}", format_table(&rows));
    Ok(code)
}
