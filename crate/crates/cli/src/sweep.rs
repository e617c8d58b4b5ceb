//! Random pure-state sweeps of the disentanglement/decoherence comparison.

use rayon::prelude::*;
use serde::Serialize;

use qutrit_dephasing::analysis::{classify_state, compare_rates, linear_grid, Disentanglement, RateComparison};
use qutrit_dephasing::noise_mc::trajectory_rng;
use qutrit_dephasing::{ChannelSpec, PureState9};

use crate::error::CliError;
use crate::output::Table;

/// Grid used by default: `[0, 50 / rate]` with 401 points. The negativity
/// excess of a generic state is still above the extinction threshold near
/// the end, so the tail fit sees the asymptotic rate.
pub const DEFAULT_T_END: f64 = 50.0;
pub const DEFAULT_POINTS: usize = 401;

#[derive(Debug, Clone, Serialize)]
pub struct SweepCase {
    pub index: usize,
    pub amplitudes: Vec<[f64; 2]>,
    pub class: String,
    pub report: RateComparison,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: ChannelSpec,
    pub seed: u64,
    pub t_grid_end: f64,
    pub n_points: usize,
    pub cases: Vec<SweepCase>,
}

impl SweepResult {
    pub fn violations(&self) -> Vec<&SweepCase> {
        self.cases.iter().filter(|c| !c.report.verdict).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "index",
            "class",
            "kind",
            "tau_dis",
            "death_time",
            "tau_dec_joint",
            "tau_dec_reduced_a",
            "tau_dec_reduced_b",
            "initial_negativity",
            "asymptotic_negativity",
            "verdict",
        ]);
        let opt = |x: Option<f64>| x.unwrap_or(f64::NAN).into();
        for c in &self.cases {
            let r = &c.report;
            let (kind, death) = match &r.disentanglement {
                Disentanglement::Constant => ("constant", None),
                Disentanglement::Exponential { .. } => ("exponential", None),
                Disentanglement::FiniteTime { time, .. } => ("finite-time", Some(*time)),
                Disentanglement::NotDecaying { .. } => ("not-decaying", None),
            };
            t.push(vec![
                c.index.into(),
                c.class.clone().into(),
                kind.into(),
                opt(r.tau_dis),
                opt(death),
                opt(r.tau_dec_joint),
                opt(r.tau_dec_reduced_a),
                opt(r.tau_dec_reduced_b),
                r.initial_negativity.into(),
                r.asymptotic_negativity.into(),
                r.verdict.into(),
            ]);
        }
        t
    }
}

/// Haar-random state `index` of a sweep seeded with `seed`.
pub fn sweep_state(seed: u64, index: usize) -> PureState9 {
    PureState9::random(&mut trajectory_rng(seed, index as u64))
}

/// Runs [`compare_rates`] on `n_states` random states. `t_end` is in units
/// of the slowest active rate's inverse.
pub fn run_sweep(
    spec: &ChannelSpec,
    n_states: usize,
    seed: u64,
    t_end: f64,
    n_points: usize,
) -> Result<SweepResult, CliError> {
    spec.validate()?;
    let rate = [spec.rate(qutrit_dephasing::NoiseSource::ALocal), spec.rate(qutrit_dephasing::NoiseSource::BLocal), spec.rate(qutrit_dephasing::NoiseSource::Collective)]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !rate.is_finite() {
        return Err(CliError::Validation("sweep needs at least one active source with a positive rate".into()));
    }
    let end = t_end / rate;
    let grid = linear_grid(0.0, end, n_points);
    let cases = (0..n_states)
        .into_par_iter()
        .map(|index| {
            let state = sweep_state(seed, index);
            let report = compare_rates(&state, spec, &grid)?;
            Ok(SweepCase {
                index,
                amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
                class: classify_state(&state)?.to_string(),
                report,
            })
        })
        .collect::<Result<Vec<_>, qutrit_dephasing::Error>>()?;
    Ok(SweepResult {
        spec: *spec,
        seed,
        t_grid_end: end,
        n_points,
        cases,
    })
}
