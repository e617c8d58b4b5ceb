//! Scenario runs: evolve one initial state and emit the requested outputs.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use qutrit_dephasing::analysis::{
    classify_state, coherence_trace, compare_rates, extract_timescales, is_decoherence_free, upper_pairs,
    CoherenceLevel, TimescaleSet,
};
use qutrit_dephasing::channels::reduced_evolution;
use qutrit_dephasing::linalg::{projector, QUTRIT_DIM};
use qutrit_dephasing::noise_mc::oracle_compare;
use qutrit_dephasing::{evolve, negativity, ChannelSpec, DensityMatrix, PureState9, Subsystem};

use crate::config::{McConfig, OutputKind, ScenarioConfig};
use crate::error::CliError;
use crate::output::{pretty, write_atomic, Format, Table};

pub const SUMMARY_FILE: &str = "summary.json";
pub const DEFAULT_TRAJECTORIES: usize = 100_000;

/// Label attached to the `tau` comparison in summaries.
pub const TAU_CONVENTION: &str = "slowest-component: tau_dec is the slowest decaying coherence present \
in the state; tau_dis is the tail-fitted constant of N(t) - N(inf), or the hitting time when that \
excess vanishes inside the grid";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Format,
    /// Overrides `mc.seed`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

struct Context {
    state: PureState9,
    rho0: DensityMatrix,
    spec: ChannelSpec,
    grid: Vec<f64>,
}

fn joint_tag(i: usize, j: usize) -> String {
    format!("{}_{}", i + 1, j + 1)
}

fn negativity_table(cx: &Context) -> Result<Table, CliError> {
    let mut t = Table::new(["t", "negativity", "n_negative_eigenvalues", "min_offdiag_abs", "max_offdiag_abs"]);
    for &time in &cx.grid {
        let rho = evolve(&cx.rho0, &cx.spec, time)?;
        let n = negativity(&rho)?;
        let mags: Vec<f64> = upper_pairs().iter().map(|&(i, j)| rho.get(i, j).norm()).collect();
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let max = mags.iter().copied().fold(0.0, f64::max);
        t.push(vec![
            time.into(),
            n.value.into(),
            n.negative_eigenvalues.len().into(),
            min.into(),
            max.into(),
        ]);
    }
    Ok(t)
}

fn coherence_table(cx: &Context) -> Result<Table, CliError> {
    let pairs = upper_pairs();
    let mut cols = vec!["t".to_string()];
    cols.extend(pairs.iter().map(|&(i, j)| format!("abs_rho_{}", joint_tag(i, j))));
    let mut t = Table::new(cols);
    let tr = coherence_trace(&cx.rho0, &cx.spec, &cx.grid)?;
    for (time, mags) in tr.times.iter().zip(&tr.magnitudes) {
        let mut row = vec![(*time).into()];
        row.extend(mags.iter().map(|&m| m.into()));
        t.push(row);
    }
    Ok(t)
}

fn reduced_pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for x in 0..QUTRIT_DIM {
        for y in x + 1..QUTRIT_DIM {
            v.push((x, y));
        }
    }
    v
}

fn reduced_table(cx: &Context) -> Result<Table, CliError> {
    let mut cols = vec!["t".to_string()];
    for s in [Subsystem::A, Subsystem::B] {
        cols.extend(reduced_pairs().iter().map(|&(x, y)| format!("abs_rho{s}_{}_{}", x + 1, y + 1)));
    }
    let mut t = Table::new(cols);
    for &time in &cx.grid {
        let mut row = vec![time.into()];
        for s in [Subsystem::A, Subsystem::B] {
            let r = reduced_evolution(&cx.rho0, &cx.spec, time, s)?;
            row.extend(reduced_pairs().iter().map(|&(x, y)| r.get(x, y).norm().into()));
        }
        t.push(row);
    }
    Ok(t)
}

fn position_list(set: &TimescaleSet, k: usize) -> String {
    set.entries[k]
        .positions
        .iter()
        .map(|p| match p.subsystem {
            None => format!("{}-{}", p.row, p.col),
            Some(s) => format!("{s}:{}-{}", p.row, p.col),
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn timescales_table(sets: &[TimescaleSet]) -> Table {
    let mut t = Table::new(["level", "tau", "rate", "fitted_rate", "fit_rel_error", "positions"]);
    for set in sets {
        let level = match set.level {
            CoherenceLevel::Joint => "2-qutrit",
            CoherenceLevel::Reduced => "1-qutrit",
        };
        for (k, e) in set.entries.iter().enumerate() {
            t.push(vec![
                level.into(),
                e.tau.into(),
                e.rate.into(),
                e.fitted_rate.into(),
                e.fit_rel_error.into(),
                position_list(set, k).into(),
            ]);
        }
    }
    t
}

fn support_list(state: &PureState9) -> String {
    state
        .support(1e-12)
        .iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn classify_table(cx: &Context) -> Result<Table, CliError> {
    let mut t = Table::new(["label", "negativity", "support"]);
    t.push(vec![
        classify_state(&cx.state)?.to_string().into(),
        negativity(&cx.rho0)?.value.into(),
        support_list(&cx.state).into(),
    ]);
    Ok(t)
}

fn dfs_table(cx: &Context) -> Result<Table, CliError> {
    let mut t = Table::new(["t", "max_abs_deviation"]);
    for &time in &cx.grid {
        t.push(vec![time.into(), evolve(&cx.rho0, &cx.spec, time)?.max_abs_diff(&cx.rho0).into()]);
    }
    Ok(t)
}

fn oracle_table(cx: &Context, mc: &McConfig) -> Result<(Table, Value), CliError> {
    let mut t = Table::new(["t", "max_abs_deviation", "max_z", "n_disagreements", "passed"]);
    let mut all_passed = true;
    let mut worst_z = 0.0_f64;
    for &time in &cx.grid {
        let rep = oracle_compare(&cx.rho0, &cx.spec, time, mc.n_trajectories, mc.seed)?;
        all_passed &= rep.passed();
        worst_z = worst_z.max(rep.max_z);
        t.push(vec![
            time.into(),
            rep.max_abs_deviation.into(),
            rep.max_z.into(),
            rep.disagreements.len().into(),
            rep.passed().into(),
        ]);
    }
    let summary = json!({
        "n_trajectories": mc.n_trajectories,
        "seed": mc.seed,
        "max_z": worst_z,
        "passed": all_passed,
    });
    Ok((t, summary))
}

fn rho_table(cx: &Context) -> Result<Table, CliError> {
    let mut cols = vec!["t".to_string()];
    for i in 0..9 {
        for j in 0..9 {
            cols.push(format!("re_{}", joint_tag(i, j)));
            cols.push(format!("im_{}", joint_tag(i, j)));
        }
    }
    let mut t = Table::new(cols);
    for &time in &cx.grid {
        let rho = evolve(&cx.rho0, &cx.spec, time)?;
        let mut row = vec![time.into()];
        for i in 0..9 {
            for j in 0..9 {
                row.push(rho.get(i, j).re.into());
                row.push(rho.get(i, j).im.into());
            }
        }
        t.push(row);
    }
    Ok(t)
}

/// Runs `config`, writing one file per requested output plus
/// [`SUMMARY_FILE`] into `opts.out_dir`.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutcome, CliError> {
    config.validate()?;
    let state = config.initial_state()?;
    let cx = Context {
        rho0: projector(&state),
        state,
        spec: config.channel_spec()?,
        grid: config.time_grid()?,
    };
    let mc = config.mc.clone().map(|mut m| {
        if let Some(s) = opts.seed {
            m.seed = s;
        }
        m
    });
    let seed = mc.as_ref().map(|m| m.seed).or(opts.seed).unwrap_or(0);

    let timescales = vec![
        extract_timescales(&cx.spec, CoherenceLevel::Joint)?,
        extract_timescales(&cx.spec, CoherenceLevel::Reduced)?,
    ];
    let label = classify_state(&cx.state)?;
    let n0 = negativity(&cx.rho0)?.value;
    let t_end = *cx.grid.last().expect("grid has >= 2 points");
    let dfs = is_decoherence_free(&cx.rho0, &cx.spec, t_end, cx.grid.len())?;
    let comparison = match compare_rates(&cx.state, &cx.spec, &cx.grid) {
        Ok(r) => serde_json::to_value(r).map_err(|e| CliError::Numerical(e.to_string()))?,
        Err(qutrit_dephasing::Error::Precondition(msg)) => json!({ "skipped": msg }),
        Err(e) => return Err(e.into()),
    };

    let mut outputs = config.outputs.clone();
    outputs.sort();
    outputs.dedup();
    let mut files = Vec::new();
    let mut oracle_summary = Value::Null;
    for kind in &outputs {
        let table = match kind {
            OutputKind::Negativity => negativity_table(&cx)?,
            OutputKind::Coherence => coherence_table(&cx)?,
            OutputKind::Reduced => reduced_table(&cx)?,
            OutputKind::Timescales => timescales_table(&timescales),
            OutputKind::Classify => classify_table(&cx)?,
            OutputKind::Dfs => dfs_table(&cx)?,
            OutputKind::Rho => rho_table(&cx)?,
            OutputKind::Oracle => {
                let m = mc
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("output oracle needs an mc section".into()))?;
                let (t, s) = oracle_table(&cx, m)?;
                oracle_summary = s;
                t
            }
        };
        let name = format!("{}.{}", kind.name(), opts.format.extension());
        files.push(write_atomic(&opts.out_dir, &name, &table.render(opts.format))?);
    }

    let amplitudes: Vec<[f64; 2]> = cx.state.amplitudes().iter().map(|a| [a.re, a.im]).collect();
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": qutrit_dephasing::VERSION,
        "seed": seed,
        "state": { "amplitudes": amplitudes, "support": support_list(&cx.state) },
        "channels": cx.spec,
        "time_grid": config.time_grid,
        "classification": label,
        "initial_negativity": n0,
        "timescales": timescales,
        "decoherence_free": dfs.decoherence_free,
        "dfs_max_deviation": dfs.max_deviation,
        "tau_convention": TAU_CONVENTION,
        "comparison": comparison,
        "oracle": oracle_summary,
        "outputs": outputs.iter().map(|k| format!("{}.{}", k.name(), opts.format.extension())).collect::<Vec<_>>(),
    });
    files.push(write_atomic(&opts.out_dir, SUMMARY_FILE, &pretty(&summary))?);
    Ok(ScenarioOutcome { summary, files })
}

/// Reads `path` and runs it.
pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> Result<ScenarioOutcome, CliError> {
    run_scenario(&ScenarioConfig::load(path)?, opts)
}
