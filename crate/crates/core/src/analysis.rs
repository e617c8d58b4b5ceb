//! Timescales, state classes, decoherence-free checks, and the comparison
//! of disentanglement against decoherence.
//!
//! Conventions used throughout:
//!
//! * a decoherence time constant is `tau` in `exp(-t / tau)` for one
//!   off-diagonal entry (so `gamma = exp(-Gamma t / 2)` has `tau = 2 / Gamma`);
//! * a state's `tau_dec` is the slowest such constant among the entries that
//!   are nonzero initially and actually decay;
//! * `tau_dis` is the decay constant of the negativity excess
//!   `N(t) - N(inf)`, fitted on the tail of the supplied time grid, or the
//!   time at which the excess vanishes when that happens inside the grid.
//!
//! Neither `tau_dis` nor `tau_dec` is a unique quantity for a general state;
//! the report fields carry the whole candidate sets next to the scalars.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{
    decay_factors, evolve, factor_powers, reduced_terms, ChannelSpec, DecayParams, FactorPowers,
};
use crate::entanglement::{
    is_schmidt_aligned, negativity_of_matrix, AMPLITUDE_TOL, FRAGILE_SUPPORT, ROBUST_SUPPORT,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, partial_transpose, projector, CMatrix, DensityMatrix, PureState9, Subsystem, DIM, QUTRIT_DIM};

/// Slack allowed in `tau_dis <= tau_dec`.
pub const FIT_TOL: f64 = 1e-6;
/// Negativity excess (or coherence) at or below this is treated as gone.
pub const EXTINCT_TOL: f64 = 1e-13;
/// Fraction of the grid used for the tail fit.
pub const TAIL_FRACTION: f64 = 0.25;
/// Maximum entry deviation for a state to count as decoherence free.
pub const DFS_TOL: f64 = 1e-12;
/// Initial coherences below this magnitude are ignored.
pub const COHERENCE_TOL: f64 = 1e-12;
/// States with negativity below this are product-like.
pub const PRODUCT_TOL: f64 = 1e-12;
/// Minimum initial negativity accepted by [`compare_rates`].
pub const ENTANGLED_TOL: f64 = 1e-10;

/// Evenly spaced grid with `n >= 2` points.
pub fn linear_grid(t_start: f64, t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let step = (t_end - t_start) / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { t_end } else { t_start + step * k as f64 })
        .collect()
}

/// Grid with `t = 0` followed by `n - 1` log-spaced points in
/// `[t_end * 1e-3, t_end]` when `t_start = 0`, otherwise log-spaced on
/// `[t_start, t_end]`.
pub fn log_grid(t_start: f64, t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    if t_start <= 0.0 {
        let mut g = vec![0.0];
        let lo = (t_end * 1e-3).ln();
        let hi = t_end.ln();
        g.extend(linear_grid(lo, hi, n - 1).into_iter().map(f64::exp));
        g[n - 1] = t_end;
        g
    } else {
        let mut g: Vec<f64> = linear_grid(t_start.ln(), t_end.ln(), n)
            .into_iter()
            .map(f64::exp)
            .collect();
        g[0] = t_start;
        g[n - 1] = t_end;
        g
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Precondition("time grid must be finite and non-negative".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("time grid must be strictly ascending".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceLevel {
    #[serde(rename = "2-qutrit")]
    Joint,
    #[serde(rename = "1-qutrit")]
    Reduced,
}

/// A density-matrix entry, 1-based. `subsystem` is set for reduced states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub subsystem: Option<Subsystem>,
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn joint(i: usize, j: usize) -> Self {
        Position {
            subsystem: None,
            row: i + 1,
            col: j + 1,
        }
    }

    pub fn reduced(s: Subsystem, x: usize, y: usize) -> Self {
        Position {
            subsystem: Some(s),
            row: x + 1,
            col: y + 1,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subsystem {
            None => write!(f, "rho({},{})", self.row, self.col),
            Some(s) => write!(f, "rho{}({},{})", s, self.row, self.col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timescale {
    /// `1 / rate`.
    pub tau: f64,
    pub rate: f64,
    /// Rate recovered by log-linear regression of the decay factors.
    pub fitted_rate: f64,
    /// Largest relative deviation of any member's fitted rate from `rate`.
    pub fit_rel_error: f64,
    pub positions: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimescaleSet {
    pub level: CoherenceLevel,
    /// Slowest first.
    pub entries: Vec<Timescale>,
}

impl TimescaleSet {
    pub fn taus(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.tau).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

fn fitted_rate(spec: &ChannelSpec, p: FactorPowers, horizon: f64) -> Result<f64> {
    let ts = linear_grid(0.0, horizon, 21);
    let logs = ts
        .iter()
        .map(|&t| Ok(spec.decay_params(t)?.factor(p).ln()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(-ls_slope(&ts, &logs))
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Distinct decay time constants of the off-diagonal entries, read from the
/// closed-form decay exponents and cross-checked by regression.
pub fn extract_timescales(spec: &ChannelSpec, level: CoherenceLevel) -> Result<TimescaleSet> {
    spec.validate()?;
    let mut items: Vec<(Position, FactorPowers)> = Vec::new();
    match level {
        CoherenceLevel::Joint => {
            for i in 0..DIM {
                for j in i + 1..DIM {
                    items.push((Position::joint(i, j), factor_powers(i, j)));
                }
            }
        }
        CoherenceLevel::Reduced => {
            for s in [Subsystem::A, Subsystem::B] {
                for x in 0..QUTRIT_DIM {
                    for y in x + 1..QUTRIT_DIM {
                        for (_, _, p) in reduced_terms(s, x, y) {
                            items.push((Position::reduced(s, x, y), p));
                        }
                    }
                }
            }
        }
    }

    let mut rated: Vec<(f64, Position, FactorPowers)> = items
        .into_iter()
        .map(|(pos, p)| (p.rate(spec), pos, p))
        .filter(|(r, _, _)| *r > 0.0)
        .collect();
    if rated.is_empty() {
        return Ok(TimescaleSet {
            level,
            entries: Vec::new(),
        });
    }
    rated.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let max_rate = rated.last().map(|r| r.0).unwrap_or(1.0);
    // keep the fastest factor above ~e^-20 on the regression grid
    let horizon = 20.0 / max_rate;

    let mut entries: Vec<Timescale> = Vec::new();
    for (rate, pos, p) in rated {
        let fit = fitted_rate(spec, p, horizon)?;
        let rel = ((fit - rate) / rate).abs();
        match entries.last_mut() {
            Some(e) if same_rate(e.rate, rate) => {
                if !e.positions.contains(&pos) {
                    e.positions.push(pos);
                }
                let k = e.positions.len() as f64;
                e.fitted_rate += (fit - e.fitted_rate) / k;
                e.fit_rel_error = e.fit_rel_error.max(rel);
            }
            _ => entries.push(Timescale {
                tau: 1.0 / rate,
                rate,
                fitted_rate: fit,
                fit_rel_error: rel,
                positions: vec![pos],
            }),
        }
    }
    Ok(TimescaleSet { level, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassLabel {
    Fragile,
    Robust,
    General,
    ProductLike,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassLabel::Fragile => "fragile",
            ClassLabel::Robust => "robust",
            ClassLabel::General => "general",
            ClassLabel::ProductLike => "product-like",
        };
        f.write_str(s)
    }
}

pub fn classify_state(state: &PureState9) -> Result<ClassLabel> {
    let n = negativity_of_matrix(projector(state).matrix(), Subsystem::A)?.value;
    if n < PRODUCT_TOL {
        return Ok(ClassLabel::ProductLike);
    }
    let support = state.support(AMPLITUDE_TOL);
    if support.len() >= 2 && support.iter().all(|k| FRAGILE_SUPPORT.contains(k)) {
        return Ok(ClassLabel::Fragile);
    }
    if support.len() >= 2 && support.iter().all(|k| ROBUST_SUPPORT.contains(k)) {
        return Ok(ClassLabel::Robust);
    }
    Ok(ClassLabel::General)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfsReport {
    pub decoherence_free: bool,
    pub max_deviation: f64,
}

/// Samples `rho(t)` at `samples` evenly spaced times in `[0, horizon]` and
/// checks that it never leaves `rho0`.
pub fn is_decoherence_free(
    rho0: &DensityMatrix,
    spec: &ChannelSpec,
    horizon: f64,
    samples: usize,
) -> Result<DfsReport> {
    if samples < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::domain("horizon", horizon, "(0, inf)"));
    }
    let mut max_dev = 0.0_f64;
    for t in linear_grid(0.0, horizon, samples) {
        max_dev = max_dev.max(evolve(rho0, spec, t)?.max_abs_diff(rho0));
    }
    Ok(DfsReport {
        decoherence_free: max_dev <= DFS_TOL,
        max_deviation: max_dev,
    })
}

/// The 36 strictly upper-triangular joint positions in row-major order.
pub fn upper_pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(36);
    for i in 0..DIM {
        for j in i + 1..DIM {
            v.push((i, j));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTrace {
    pub times: Vec<f64>,
    /// Per time: `|rho_ij|` for the pairs of [`upper_pairs`].
    pub magnitudes: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

pub fn coherence_trace(rho0: &DensityMatrix, spec: &ChannelSpec, t_grid: &[f64]) -> Result<CoherenceTrace> {
    check_grid(t_grid)?;
    let pairs = upper_pairs();
    let mut magnitudes = Vec::with_capacity(t_grid.len());
    let mut totals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let rho = evolve(rho0, spec, t)?;
        let row: Vec<f64> = pairs.iter().map(|&(i, j)| rho.get(i, j).norm()).collect();
        totals.push(row.iter().sum());
        magnitudes.push(row);
    }
    Ok(CoherenceTrace {
        times: t_grid.to_vec(),
        magnitudes,
        totals,
    })
}

/// How the negativity excess `N(t) - N(inf)` behaves on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Disentanglement {
    /// Negativity is constant: nothing to disentangle.
    Constant,
    /// Exponential tail with time constant `tau`.
    Exponential { tau: f64, fit_points: usize },
    /// The excess is gone by `time` and stays gone to the end of the grid.
    /// `tau_before` is a tail fit on the grid up to that point, if possible.
    FiniteTime { time: f64, tau_before: Option<f64> },
    /// The tail fit found no decay.
    NotDecaying { slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub initial_negativity: f64,
    pub asymptotic_negativity: f64,
    /// Slowest decoherence constant of the joint state.
    pub tau_dec_joint: Option<f64>,
    pub tau_dec_joint_positions: Vec<Position>,
    /// All distinct joint decoherence constants present in the state.
    pub tau_dec_candidates: Vec<f64>,
    /// Slowest reduced-state decoherence constant; `None` when the reduced
    /// state has no decaying coherence (nothing left to decohere).
    pub tau_dec_reduced_a: Option<f64>,
    pub tau_dec_reduced_b: Option<f64>,
    pub disentanglement: Disentanglement,
    /// Fitted exponential constant, when the tail is exponential.
    pub tau_dis: Option<f64>,
    /// Term-by-term constants for Schmidt-aligned states, otherwise the
    /// fitted constant alone.
    pub tau_dis_candidates: Vec<f64>,
    /// First grid time at which every decaying joint coherence is gone.
    pub coherence_extinction: Option<f64>,
    pub verdict_joint: bool,
    pub verdict_reduced: bool,
    /// `tau_dis <= tau_dec` at both levels.
    pub verdict: bool,
}

fn asymptotic_factors(spec: &ChannelSpec) -> DMatrix<f64> {
    DMatrix::from_fn(DIM, DIM, |i, j| {
        if factor_powers(i, j).rate(spec) > 0.0 {
            0.0
        } else {
            1.0
        }
    })
}

fn hadamard(rho0: &CMatrix, f: &DMatrix<f64>) -> CMatrix {
    rho0.zip_map(f, |z, x| z * x)
}

/// `N(rho_inf + d) - N(rho_inf)` evaluated without subtracting two
/// O(1) negativities. `d` is the (small) difference matrix. The spectrum of
/// the perturbed partial transpose is taken in the eigenbasis of the
/// asymptotic one, where the sum of negative eigenvalues splits into terms
/// that carry only the size of `d` as absolute error.
struct ExcessEvaluator {
    lambda: Vec<f64>,
    basis: CMatrix,
}

impl ExcessEvaluator {
    fn new(rho_inf: &CMatrix) -> Result<Self> {
        let (lambda, basis) = hermitian_eigen(&partial_transpose(rho_inf, Subsystem::A)?)?;
        Ok(ExcessEvaluator { lambda, basis })
    }

    fn excess(&self, d: &CMatrix) -> Result<f64> {
        let e = self.basis.adjoint() * partial_transpose(d, Subsystem::A)? * &self.basis;
        let mut m = e.clone();
        for (k, l) in self.lambda.iter().enumerate() {
            m[(k, k)] += l;
        }
        let (mu, w) = hermitian_eigen(&m)?;
        let neg: Vec<bool> = mu.iter().map(|&x| x < 0.0).collect();
        // shift of the sum of negative eigenvalues
        let mut shift = 0.0;
        for (n, _) in neg.iter().enumerate().filter(|(_, &b)| b) {
            let v = w.column(n);
            shift += (v.adjoint() * &e * v)[(0, 0)].re;
        }
        for (k, &l) in self.lambda.iter().enumerate() {
            if l < 0.0 {
                let out: f64 = (0..w.ncols()).filter(|&p| !neg[p]).map(|p| w[(k, p)].norm_sqr()).sum();
                shift -= l * out;
            } else {
                let inn: f64 = (0..w.ncols()).filter(|&n| neg[n]).map(|n| w[(k, n)].norm_sqr()).sum();
                shift += l * inn;
            }
        }
        Ok(-shift)
    }
}

fn push_distinct(v: &mut Vec<f64>, x: f64) {
    if !v.iter().any(|&y| same_rate(1.0 / y, 1.0 / x)) {
        v.push(x);
    }
}

/// Slowest reduced-state constant of `keep`: every reduced entry is a sum of
/// joint entries; terms sharing a rate are summed before testing for zero.
fn reduced_tau_dec(rho0: &CMatrix, spec: &ChannelSpec, keep: Subsystem) -> Option<f64> {
    let mut slowest: Option<f64> = None;
    for x in 0..QUTRIT_DIM {
        for y in x + 1..QUTRIT_DIM {
            let mut groups: Vec<(f64, crate::linalg::C64)> = Vec::new();
            for (i, j, p) in reduced_terms(keep, x, y) {
                let r = p.rate(spec);
                match groups.iter_mut().find(|g| same_rate(g.0, r)) {
                    Some(g) => g.1 += rho0[(i, j)],
                    None => groups.push((r, rho0[(i, j)])),
                }
            }
            for (r, coef) in groups {
                if r > 0.0 && coef.norm() > COHERENCE_TOL {
                    let tau = 1.0 / r;
                    slowest = Some(slowest.map_or(tau, |s: f64| s.max(tau)));
                }
            }
        }
    }
    slowest
}

fn tail_fit(times: &[f64], excess: &[f64]) -> Option<(f64, usize)> {
    let n = times.len();
    let start = n - ((n as f64 * TAIL_FRACTION).ceil() as usize).clamp(1, n);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (start..n)
        .filter(|&k| excess[k] > EXTINCT_TOL)
        .map(|k| (times[k], excess[k].ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    Some((ls_slope(&xs, &ys), xs.len()))
}

/// Compares the disentanglement and decoherence time constants of a pure
/// initial state evolved under `spec` over `t_grid`.
pub fn compare_rates(state: &PureState9, spec: &ChannelSpec, t_grid: &[f64]) -> Result<RateComparison> {
    spec.validate()?;
    check_grid(t_grid)?;
    if t_grid.len() < 2 {
        return Err(Error::Precondition("need at least 2 grid points".into()));
    }
    let rho0 = projector(state);
    let m0 = rho0.matrix();
    let n0 = negativity_of_matrix(m0, Subsystem::A)?.value;
    if n0 <= ENTANGLED_TOL {
        return Err(Error::Precondition(format!(
            "initial state is not entangled (negativity {n0:e})"
        )));
    }

    // decoherence side
    let mut tau_dec_candidates: Vec<f64> = Vec::new();
    let mut tau_dec_joint: Option<f64> = None;
    let mut tau_dec_joint_positions = Vec::new();
    let mut decaying = Vec::new();
    for (i, j) in upper_pairs() {
        let r = factor_powers(i, j).rate(spec);
        if r <= 0.0 || m0[(i, j)].norm() <= COHERENCE_TOL {
            continue;
        }
        decaying.push((i, j));
        let tau = 1.0 / r;
        push_distinct(&mut tau_dec_candidates, tau);
        match tau_dec_joint {
            Some(s) if same_rate(s, tau) => tau_dec_joint_positions.push(Position::joint(i, j)),
            Some(s) if s > tau => {}
            _ => {
                tau_dec_joint = Some(tau);
                tau_dec_joint_positions = vec![Position::joint(i, j)];
            }
        }
    }
    tau_dec_candidates.sort_by(|a, b| b.total_cmp(a));
    let tau_dec_reduced_a = reduced_tau_dec(m0, spec, Subsystem::A);
    let tau_dec_reduced_b = reduced_tau_dec(m0, spec, Subsystem::B);

    // disentanglement side, along the element-wise route
    let f_inf = asymptotic_factors(spec);
    let rho_inf = hadamard(m0, &f_inf);
    let n_inf = negativity_of_matrix(&rho_inf, Subsystem::A)?.value;
    let evaluator = ExcessEvaluator::new(&rho_inf)?;
    let mut excess = Vec::with_capacity(t_grid.len());
    let mut coherence_extinction = None;
    for &t in t_grid {
        let params: DecayParams = spec.decay_params(t)?;
        let f = decay_factors(&params);
        let rho_t = hadamard(m0, &f);
        excess.push(evaluator.excess(&hadamard(m0, &(f - &f_inf)))?);
        let max_coh = decaying
            .iter()
            .map(|&(i, j)| rho_t[(i, j)].norm())
            .fold(0.0, f64::max);
        if coherence_extinction.is_none() && !decaying.is_empty() && max_coh <= EXTINCT_TOL {
            coherence_extinction = Some(t);
        }
    }

    let last = t_grid.len() - 1;
    let disentanglement = if excess[0] <= EXTINCT_TOL {
        Disentanglement::Constant
    } else if excess[last] <= EXTINCT_TOL {
        let k = (0..=last)
            .rev()
            .take_while(|&k| excess[k] <= EXTINCT_TOL)
            .last()
            .unwrap_or(last);
        let tau_before = tail_fit(&t_grid[..k], &excess[..k])
            .filter(|(s, _)| *s < 0.0)
            .map(|(s, _)| -1.0 / s);
        Disentanglement::FiniteTime {
            time: t_grid[k],
            tau_before,
        }
    } else {
        match tail_fit(t_grid, &excess) {
            Some((slope, pts)) if slope < 0.0 => Disentanglement::Exponential {
                tau: -1.0 / slope,
                fit_points: pts,
            },
            Some((slope, _)) => Disentanglement::NotDecaying { slope },
            None => Disentanglement::NotDecaying { slope: 0.0 },
        }
    };

    let tau_dis = match disentanglement {
        Disentanglement::Exponential { tau, .. } => Some(tau),
        _ => None,
    };

    let mut tau_dis_candidates = Vec::new();
    if is_schmidt_aligned(state) {
        let support = state.support(AMPLITUDE_TOL);
        for (a, &k) in support.iter().enumerate() {
            for &l in &support[a + 1..] {
                let r = factor_powers(k, l).rate(spec);
                if r > 0.0 {
                    push_distinct(&mut tau_dis_candidates, 1.0 / r);
                }
            }
        }
        tau_dis_candidates.sort_by(|a, b| b.total_cmp(a));
    } else if let Some(t) = tau_dis {
        tau_dis_candidates.push(t);
    }

    let within = |dec: Option<f64>| match (tau_dis, dec) {
        (Some(dis), Some(dec)) => dis <= dec + FIT_TOL,
        // no decaying coherence left at this level
        (_, None) => true,
        (None, Some(_)) => false,
    };
    let (verdict_joint, verdict_reduced) = match &disentanglement {
        Disentanglement::Constant => (true, true),
        Disentanglement::FiniteTime { time, .. } => {
            let ok = coherence_extinction.is_none_or(|te| *time <= te);
            (ok, ok)
        }
        Disentanglement::Exponential { .. } => (
            tau_dec_joint.is_some() && within(tau_dec_joint),
            within(tau_dec_reduced_a) && within(tau_dec_reduced_b),
        ),
        Disentanglement::NotDecaying { .. } => (false, false),
    };

    Ok(RateComparison {
        initial_negativity: n0,
        asymptotic_negativity: n_inf,
        tau_dec_joint,
        tau_dec_joint_positions,
        tau_dec_candidates,
        tau_dec_reduced_a,
        tau_dec_reduced_b,
        disentanglement,
        tau_dis,
        tau_dis_candidates,
        coherence_extinction,
        verdict_joint,
        verdict_reduced,
        verdict: verdict_joint && verdict_reduced,
    })
}
