//! Command-line definition and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qutrit_dephasing::{ChannelSpec, NoiseSource};

use crate::config::{McConfig, OutputKind, ScenarioConfig};
use crate::error::CliError;
use crate::output::{pretty, write_atomic, Format};
use crate::scenario::{run_scenario, RunOptions, DEFAULT_TRAJECTORIES};
use crate::sweep::{run_sweep, DEFAULT_POINTS, DEFAULT_T_END};
use crate::verify::{run_verify, Suite};

const LONG_ABOUT: &str = "\
Two-qutrit dephasing simulator.

All quantities are dimensionless. Rates gamma1 (local noise) and gamma2
(collective noise) are measured in units of a reference rate and times in
units of its inverse, so gamma * t is the only combination that matters.

Exit codes: 0 success, 1 configuration or usage error, 2 validation
failure (unphysical input or a failed check), 3 numerical contract
violation.";

#[derive(Debug, Parser)]
#[command(name = "qutrit-dephasing", version, about = "Two-qutrit dephasing simulator", long_about = LONG_ABOUT)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed for random draws; overrides mc.seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of the tabular output files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepChannel {
    MultiLocal,
    Collective,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the configured state and write the requested outputs.
    Evolve,
    /// Compare disentanglement and decoherence over random pure states.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepChannel::MultiLocal)]
        channel: SweepChannel,
        #[arg(long, default_value_t = 1.0)]
        gamma1: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma2: f64,
        #[arg(long, default_value_t = 1000)]
        n_states: usize,
        /// Grid end in units of the inverse of the slowest active rate.
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        n_points: usize,
    },
    /// Run a validation suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Random states (trajectories for the oracle suite).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compare a Monte Carlo ensemble with the analytic channel.
    Mc,
    /// Classify the configured initial state.
    Classify,
    /// Decoherence timescales of the configured channels.
    Timescales,
    /// Every output for the configured scenario.
    Report,
}

fn load_config(common: &Common) -> Result<ScenarioConfig, CliError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("this command needs --config FILE".into()))?;
    ScenarioConfig::load(path)
}

fn options(common: &Common) -> RunOptions {
    RunOptions {
        out_dir: common.out_dir.clone(),
        format: common.format,
        seed: common.seed,
    }
}

fn scenario_with(common: &Common, outputs: Option<Vec<OutputKind>>) -> Result<Vec<String>, CliError> {
    let mut config = load_config(common)?;
    if let Some(o) = outputs {
        config.outputs = o;
    } else if config.outputs.is_empty() {
        config.outputs = vec![OutputKind::Negativity];
    }
    if config.outputs.contains(&OutputKind::Oracle) && config.mc.is_none() {
        config.mc = Some(McConfig {
            n_trajectories: DEFAULT_TRAJECTORIES,
            seed: common.seed.unwrap_or(0),
        });
    }
    let outcome = run_scenario(&config, &options(common))?;
    let mut lines: Vec<String> = outcome.files.iter().map(|p| format!("wrote {}", p.display())).collect();
    if let Some(passed) = outcome.summary["oracle"]["passed"].as_bool() {
        if !passed {
            return Err(CliError::Validation(format!(
                "Monte Carlo oracle disagrees with the channel (max z {})",
                outcome.summary["oracle"]["max_z"]
            )));
        }
    }
    lines.push(format!("classification: {}", outcome.summary["classification"].as_str().unwrap_or("?")));
    Ok(lines)
}

fn write_named(dir: &Path, stem: &str, format: Format, body: String) -> Result<String, CliError> {
    let name = format!("{stem}.{}", format.extension());
    Ok(format!("wrote {}", write_atomic(dir, &name, &body)?.display()))
}

/// Executes a parsed command. Returns the lines to print on success.
pub fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Evolve => scenario_with(common, None),
        Command::Mc => scenario_with(common, Some(vec![OutputKind::Oracle])),
        Command::Classify => scenario_with(common, Some(vec![OutputKind::Classify])),
        Command::Timescales => scenario_with(common, Some(vec![OutputKind::Timescales])),
        Command::Report => {
            let config = load_config(common)?;
            let mut all = vec![
                OutputKind::Negativity,
                OutputKind::Coherence,
                OutputKind::Reduced,
                OutputKind::Timescales,
                OutputKind::Classify,
                OutputKind::Dfs,
                OutputKind::Rho,
            ];
            if config.mc.is_some() {
                all.push(OutputKind::Oracle);
            }
            scenario_with(common, Some(all))
        }
        Command::Verify { suite, n } => {
            let seed = common.seed.unwrap_or(0);
            let report = run_verify(*suite, seed, *n)?;
            let stem = format!("verify_{}", suite.name());
            let body = match common.format {
                Format::Csv => report.table().to_csv(),
                Format::Json => pretty(&serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?),
            };
            let mut lines = vec![write_named(&common.out_dir, &stem, common.format, body)?];
            for c in &report.checks {
                lines.push(format!(
                    "{} {}: {:e}{}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.threshold.map(|t| format!(" (threshold {t:e})")).unwrap_or_default()
                ));
            }
            if !report.passed {
                return Err(CliError::Validation(format!(
                    "suite {} failed: {}",
                    suite.name(),
                    report.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
                )));
            }
            Ok(lines)
        }
        Command::Sweep {
            channel,
            gamma1,
            gamma2,
            n_states,
            t_end,
            n_points,
        } => {
            let spec = match channel {
                SweepChannel::MultiLocal => ChannelSpec::from_sources(&[NoiseSource::ALocal, NoiseSource::BLocal], *gamma1, 0.0),
                SweepChannel::Collective => ChannelSpec::collective(*gamma2),
                SweepChannel::Full => ChannelSpec::full(*gamma1, *gamma2),
            };
            if *n_points < 2 || !(t_end.is_finite() && *t_end > 0.0) {
                return Err(CliError::Validation("sweep needs --n-points >= 2 and --t-end > 0".into()));
            }
            let seed = common.seed.unwrap_or(0);
            let result = run_sweep(&spec, *n_states, seed, *t_end, *n_points)?;
            let violations = result.violations();
            let mut lines = vec![write_named(&common.out_dir, "sweep", common.format, result.table().render(common.format))?];
            let summary = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "library_version": qutrit_dephasing::VERSION,
                "seed": seed,
                "channels": spec,
                "n_states": n_states,
                "t_grid_end": result.t_grid_end,
                "n_points": n_points,
                "n_violations": violations.len(),
                "violations": violations,
            });
            lines.push(format!(
                "wrote {}",
                write_atomic(&common.out_dir, "sweep_summary.json", &pretty(&summary))?.display()
            ));
            lines.push(format!("{} states, {} violations", n_states, violations.len()));
            if !violations.is_empty() {
                return Err(CliError::Validation(format!(
                    "{} of {} states have tau_dis > tau_dec; see sweep_summary.json",
                    violations.len(),
                    n_states
                )));
            }
            Ok(lines)
        }
    }
}

/// Parses `args` (including the program name) and runs. Returns the exit
/// code; messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
