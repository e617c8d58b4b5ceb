//! Pure-dephasing channels on two qutrits.
//!
//! Each channel has two representations that must agree:
//!
//! * an operator sum `rho -> sum_mu E_mu rho E_mu^dagger` over diagonal
//!   Kraus operators (the reference dynamics), and
//! * an element-wise decay form `rho_ij -> rho_ij * f_ij` where every factor
//!   is a product `gamma_A^pA * gamma_B^pB * gamma^pC`.
//!
//! Local channels act on one qutrit with `E1 = diag(1, g, g)`,
//! `E2 = diag(0, w, 0)`, `E3 = diag(0, 0, w)` and `w = sqrt(1 - g^2)`.
//! The collective channel acts on the joint space only and does not factor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, partial_trace, BasisLabel, CMatrix, DensityMatrix, Level, Subsystem, DIM, QUTRIT_DIM,
};

/// Residual allowed in `sum E^dagger E = I`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

/// A dephasing noise source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSource {
    ALocal,
    BLocal,
    Collective,
}

impl NoiseSource {
    pub const ALL: [NoiseSource; 3] = [
        NoiseSource::ALocal,
        NoiseSource::BLocal,
        NoiseSource::Collective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseSource::ALocal => "a-local",
            NoiseSource::BLocal => "b-local",
            NoiseSource::Collective => "collective",
        }
    }
}

/// Which sources are switched on, and their rates. Local sources share
/// `gamma1`; the collective source uses `gamma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub a_local: bool,
    pub b_local: bool,
    pub collective: bool,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ChannelSpec {
    pub fn none() -> Self {
        ChannelSpec {
            a_local: false,
            b_local: false,
            collective: false,
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    /// Both local channels at rate `gamma1`.
    pub fn multi_local(gamma1: f64) -> Self {
        ChannelSpec {
            a_local: true,
            b_local: true,
            gamma1,
            ..ChannelSpec::none()
        }
    }

    pub fn local(subsystem: Subsystem, gamma1: f64) -> Self {
        ChannelSpec {
            a_local: subsystem == Subsystem::A,
            b_local: subsystem == Subsystem::B,
            gamma1,
            ..ChannelSpec::none()
        }
    }

    pub fn collective(gamma2: f64) -> Self {
        ChannelSpec {
            collective: true,
            gamma2,
            ..ChannelSpec::none()
        }
    }

    /// All three sources.
    pub fn full(gamma1: f64, gamma2: f64) -> Self {
        ChannelSpec {
            a_local: true,
            b_local: true,
            collective: true,
            gamma1,
            gamma2,
        }
    }

    pub fn from_sources(sources: &[NoiseSource], gamma1: f64, gamma2: f64) -> Self {
        ChannelSpec {
            a_local: sources.contains(&NoiseSource::ALocal),
            b_local: sources.contains(&NoiseSource::BLocal),
            collective: sources.contains(&NoiseSource::Collective),
            gamma1,
            gamma2,
        }
    }

    pub fn is_active(&self, s: NoiseSource) -> bool {
        match s {
            NoiseSource::ALocal => self.a_local,
            NoiseSource::BLocal => self.b_local,
            NoiseSource::Collective => self.collective,
        }
    }

    pub fn sources(&self) -> Vec<NoiseSource> {
        NoiseSource::ALL
            .into_iter()
            .filter(|&s| self.is_active(s))
            .collect()
    }

    pub fn without(mut self, s: NoiseSource) -> Self {
        match s {
            NoiseSource::ALocal => self.a_local = false,
            NoiseSource::BLocal => self.b_local = false,
            NoiseSource::Collective => self.collective = false,
        }
        self
    }

    /// Dephasing rate of `s`, zero when the source is off.
    pub fn rate(&self, s: NoiseSource) -> f64 {
        if !self.is_active(s) {
            return 0.0;
        }
        match s {
            NoiseSource::ALocal | NoiseSource::BLocal => self.gamma1,
            NoiseSource::Collective => self.gamma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1.is_finite() && self.gamma1 >= 0.0) {
            return Err(Error::domain("gamma1", self.gamma1, "[0, inf)"));
        }
        if !(self.gamma2.is_finite() && self.gamma2 >= 0.0) {
            return Err(Error::domain("gamma2", self.gamma2, "[0, inf)"));
        }
        Ok(())
    }

    /// Decay parameters `gamma_X = exp(-Gamma_X t / 2)` at time `t`.
    pub fn decay_params(&self, t: f64) -> Result<DecayParams> {
        self.validate()?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain("t", t, "[0, inf)"));
        }
        let g = |s| (-self.rate(s) * t / 2.0).exp();
        DecayParams::new(
            g(NoiseSource::ALocal),
            g(NoiseSource::BLocal),
            g(NoiseSource::Collective),
        )
    }
}

/// `gamma` values of the three sources at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
}

fn check_gamma(name: &'static str, g: f64) -> Result<()> {
    if g > 0.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(name, g, "(0, 1]"))
    }
}

impl DecayParams {
    pub fn new(gamma_a: f64, gamma_b: f64, gamma_c: f64) -> Result<Self> {
        check_gamma("gamma_a", gamma_a)?;
        check_gamma("gamma_b", gamma_b)?;
        check_gamma("gamma_c", gamma_c)?;
        Ok(DecayParams {
            gamma_a,
            gamma_b,
            gamma_c,
        })
    }

    pub fn identity() -> Self {
        DecayParams {
            gamma_a: 1.0,
            gamma_b: 1.0,
            gamma_c: 1.0,
        }
    }

    /// Multiplier applied to `rho_ij`.
    pub fn factor(&self, p: FactorPowers) -> f64 {
        self.gamma_a.powi(p.a as i32) * self.gamma_b.powi(p.b as i32) * self.gamma_c.powi(p.c as i32)
    }
}

/// `sqrt(1 - g^2)`.
pub fn omega(g: f64) -> f64 {
    (1.0 - g * g).max(0.0).sqrt()
}

/// The three weights of the collective Kraus operators at positions 5 and 9.
pub fn collective_omegas(g: f64) -> (f64, f64, f64) {
    let g2 = g * g;
    let w1 = omega(g);
    let w2 = -g2 * w1;
    let w3 = ((1.0 - g2) * (1.0 - g2 * g2)).max(0.0).sqrt();
    (w1, w2, w3)
}

/// Exponents of `(gamma_A, gamma_B, gamma)` in the decay factor of one
/// density-matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct FactorPowers {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl FactorPowers {
    /// Decay rate of the factor: `factor = exp(-rate * t)`.
    pub fn rate(&self, spec: &ChannelSpec) -> f64 {
        0.5 * (self.a as f64 * spec.rate(NoiseSource::ALocal)
            + self.b as f64 * spec.rate(NoiseSource::BLocal)
            + self.c as f64 * spec.rate(NoiseSource::Collective))
    }
}

fn local_power(x: Level, y: Level) -> u8 {
    match (x, y) {
        _ if x == y => 0,
        (Level::Ground, _) | (_, Level::Ground) => 1,
        _ => 2,
    }
}

/// Weight of a joint basis state in the collective noise: 0 for `|0,0>`,
/// 2 for `|+1,+1>` and `|-1,-1>`, 1 otherwise.
pub fn collective_charge(k: usize) -> i32 {
    match k {
        0 => 0,
        4 | 8 => 2,
        _ => 1,
    }
}

/// Closed-form decay exponents of entry `(i, j)` (0-based).
pub fn factor_powers(i: usize, j: usize) -> FactorPowers {
    let (x, y) = (
        BasisLabel::from_index(i).expect("joint index"),
        BasisLabel::from_index(j).expect("joint index"),
    );
    let dc = collective_charge(i) - collective_charge(j);
    FactorPowers {
        a: local_power(x.a, y.a),
        b: local_power(x.b, y.b),
        c: (dc * dc) as u8,
    }
}

/// A finite list of 9x9 operators with `sum E^dagger E = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let k = KrausSet::from_operators(ops)?;
        let residual = k.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(Error::ChannelIntegrity { residual });
        }
        Ok(k)
    }

    /// Builds a set without checking completeness. [`apply_channel`] still
    /// refuses sets that are not trace preserving.
    pub fn from_operators(ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Precondition("empty Kraus set".into()));
        }
        for e in &ops {
            if e.nrows() != DIM || e.ncols() != DIM {
                return Err(Error::Dimension {
                    expected: DIM,
                    got: e.nrows(),
                });
            }
        }
        Ok(KrausSet { ops })
    }

    pub fn identity() -> Self {
        KrausSet {
            ops: vec![CMatrix::identity(DIM, DIM)],
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `max |(sum E^dagger E - I)_ij|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(DIM, DIM);
        for e in &self.ops {
            sum += e.adjoint() * e;
        }
        sum -= CMatrix::identity(DIM, DIM);
        sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Channel `self` after `first`: operators `E_i F_j`.
    pub fn compose(&self, first: &KrausSet) -> KrausSet {
        let mut ops = Vec::with_capacity(self.len() * first.len());
        for e in &self.ops {
            for f in &first.ops {
                ops.push(e * f);
            }
        }
        KrausSet { ops }
    }
}

fn diag9(d: [f64; DIM]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(DIM, d.iter().map(|&x| c(x, 0.0))))
}

/// `E1..E3` for one qutrit, tensored with the identity on the other.
pub fn build_local_kraus(gamma: f64, subsystem: Subsystem) -> Result<KrausSet> {
    check_gamma("gamma", gamma)?;
    let w = omega(gamma);
    let single = [[1.0, gamma, gamma], [0.0, w, 0.0], [0.0, 0.0, w]];
    let ops = single
        .iter()
        .map(|d| {
            let mut full = [0.0; DIM];
            for (k, v) in full.iter_mut().enumerate() {
                let l = BasisLabel::from_index(k).expect("joint index");
                *v = d[l.level(subsystem).index()];
            }
            diag9(full)
        })
        .collect();
    KrausSet::new(ops)
}

/// `D1 = diag(g,1,1,1,g,1,1,1,g)`, `D2 = diag(w1,0,0,0,w2,0,0,0,w2)`,
/// `D3 = diag(0,0,0,0,w3,0,0,0,w3)`.
pub fn build_collective_kraus(gamma: f64) -> Result<KrausSet> {
    check_gamma("gamma", gamma)?;
    let g = gamma;
    let (w1, w2, w3) = collective_omegas(g);
    let ops = vec![
        diag9([g, 1.0, 1.0, 1.0, g, 1.0, 1.0, 1.0, g]),
        diag9([w1, 0.0, 0.0, 0.0, w2, 0.0, 0.0, 0.0, w2]),
        diag9([0.0, 0.0, 0.0, 0.0, w3, 0.0, 0.0, 0.0, w3]),
    ];
    KrausSet::new(ops)
}

/// Combined Kraus set `E^A E^B D^AB` for the given parameters. Sources at
/// `gamma = 1` are skipped since they are the identity channel.
pub fn kraus_for(params: &DecayParams) -> Result<KrausSet> {
    let mut k = KrausSet::identity();
    if params.gamma_a < 1.0 {
        k = build_local_kraus(params.gamma_a, Subsystem::A)?.compose(&k);
    }
    if params.gamma_b < 1.0 {
        k = build_local_kraus(params.gamma_b, Subsystem::B)?.compose(&k);
    }
    if params.gamma_c < 1.0 {
        k = build_collective_kraus(params.gamma_c)?.compose(&k);
    }
    Ok(k)
}

/// `rho -> sum_mu E_mu rho E_mu^dagger`.
pub fn apply_channel(k: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.require_dim(DIM)?;
    let residual = k.completeness_residual();
    if residual > COMPLETENESS_TOL {
        return Err(Error::ChannelIntegrity { residual });
    }
    let mut out = CMatrix::zeros(DIM, DIM);
    for e in k.operators() {
        out += e * rho.matrix() * e.adjoint();
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Factor matrix `f_ij` for explicit decay parameters.
pub fn decay_factors(params: &DecayParams) -> DMatrix<f64> {
    DMatrix::from_fn(DIM, DIM, |i, j| params.factor(factor_powers(i, j)))
}

/// Factor matrix for `spec` at time `t`; symmetric with unit diagonal.
pub fn decay_factor_matrix(spec: &ChannelSpec, t: f64) -> Result<DMatrix<f64>> {
    Ok(decay_factors(&spec.decay_params(t)?))
}

/// Element-wise route `rho0 * f` (Hadamard product).
pub fn evolve_elementwise(rho0: &DensityMatrix, params: &DecayParams) -> Result<DensityMatrix> {
    rho0.require_dim(DIM)?;
    let f = decay_factors(params);
    let m = rho0.matrix().zip_map(&f, |z, x| z * x);
    Ok(DensityMatrix::from_trusted(m))
}

/// Operator-sum route with explicit decay parameters.
pub fn evolve_with_params(rho0: &DensityMatrix, params: &DecayParams) -> Result<DensityMatrix> {
    apply_channel(&kraus_for(params)?, rho0)
}

/// `rho(t)` under `spec`, computed through the Kraus operators.
pub fn evolve(rho0: &DensityMatrix, spec: &ChannelSpec, t: f64) -> Result<DensityMatrix> {
    evolve_with_params(rho0, &spec.decay_params(t)?)
}

/// Single-qutrit state of `keep` after evolving the joint state.
pub fn reduced_evolution(
    rho0: &DensityMatrix,
    spec: &ChannelSpec,
    t: f64,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    partial_trace(&evolve(rho0, spec, t)?, keep)
}

/// Decay exponents of the reduced-state entry `(x, y)` of `keep`, one per
/// joint entry summed into it: `(joint i, joint j, powers)`.
pub fn reduced_terms(keep: Subsystem, x: usize, y: usize) -> Vec<(usize, usize, FactorPowers)> {
    (0..QUTRIT_DIM)
        .map(|e| {
            let (i, j) = match keep {
                Subsystem::A => (x * QUTRIT_DIM + e, y * QUTRIT_DIM + e),
                Subsystem::B => (e * QUTRIT_DIM + x, e * QUTRIT_DIM + y),
            };
            (i, j, factor_powers(i, j))
        })
        .collect()
}
