//! Negativity `N(rho) = (||rho^T_A||_1 - 1) / 2`, computed numerically from
//! the partial-transpose spectrum, plus closed forms for the fragile and
//! robust Bell-like classes.

use serde::{Deserialize, Serialize};

use crate::channels::{factor_powers, ChannelSpec, DecayParams};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, partial_transpose, BasisLabel, CMatrix, DensityMatrix, PureState9,
    Subsystem, DIM, PSD_TOL,
};

/// Amplitudes below this magnitude count as zero when checking class forms.
pub const AMPLITUDE_TOL: f64 = 1e-12;

/// Support of the fragile class: `|1>, |5>, |9>`.
pub const FRAGILE_SUPPORT: [usize; 3] = [0, 4, 8];
/// Support of the robust class: `|2>, |3>, |4>, |6>, |7>, |8>`.
pub const ROBUST_SUPPORT: [usize; 6] = [1, 2, 3, 5, 6, 7];
/// Support of the robust Bell-like forms psi1, psi2, psi3.
pub const PSI_FORMS: [[usize; 2]; 3] = [[1, 3], [2, 6], [5, 7]];
/// Support of the fragile Bell-like forms phi1, phi2, phi3.
pub const PHI_FORMS: [[usize; 2]; 3] = [[0, 4], [0, 8], [4, 8]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativityMethod {
    Numerical,
    ClosedFormGeneral,
    ClosedFormFragile,
    ClosedFormRobust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    pub value: f64,
    /// Partial-transpose eigenvalues below `-PSD_TOL`.
    pub negative_eigenvalues: Vec<f64>,
    pub method: NegativityMethod,
}

/// Negativity of a 9x9 Hermitian matrix without validating it as a state.
/// Used on hot paths where the input is known to be a density matrix.
pub fn negativity_of_matrix(m: &CMatrix, subsystem: Subsystem) -> Result<NegativityResult> {
    let pt = partial_transpose(m, subsystem)?;
    let ev = hermitian_eigenvalues(&pt)?;
    let value = ev.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    Ok(NegativityResult {
        value,
        negative_eigenvalues: ev.into_iter().filter(|&l| l < -PSD_TOL).collect(),
        method: NegativityMethod::Numerical,
    })
}

/// Numerical negativity, partial transpose over qutrit A.
pub fn negativity(rho: &DensityMatrix) -> Result<NegativityResult> {
    negativity_wrt(rho, Subsystem::A)
}

pub fn negativity_wrt(rho: &DensityMatrix, subsystem: Subsystem) -> Result<NegativityResult> {
    rho.require_dim(DIM)?;
    rho.validate()?;
    negativity_of_matrix(rho.matrix(), subsystem)
}

fn check_unit(name: &'static str, g: f64) -> Result<()> {
    if g > 0.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: g,
            domain: "(0, 1]",
        })
    }
}

/// The nine-term square-root expression for the negativity of a pure state
/// under multi-local dephasing, evaluated as written. It is exact for the
/// fragile class and the psi forms; for other states it is only an estimate
/// and [`negativity`] should be preferred.
pub fn negativity_general_multilocal(state: &PureState9, gamma_a: f64, gamma_b: f64) -> Result<f64> {
    check_unit("gamma_a", gamma_a)?;
    check_unit("gamma_b", gamma_b)?;
    // p[k] = |a_k|^2 with 1-based k
    let mut p = [0.0; DIM + 1];
    for (k, a) in state.amplitudes().iter().enumerate() {
        p[k + 1] = a.norm_sqr();
    }
    let (ga2, gb2) = (gamma_a * gamma_a, gamma_b * gamma_b);
    let (ga4, gb4) = (ga2 * ga2, gb2 * gb2);
    let terms = [
        (p[1] + (p[4] + p[7]) * ga2) * (p[1] + (p[2] + p[3]) * gb2),
        (p[7] + p[1] * ga2 + p[4] * ga4) * (p[7] + (p[8] + p[9]) * gb2),
        (p[4] + p[1] * ga2 + p[7] * ga4) * (p[4] + (p[5] + p[6]) * gb2),
        (p[3] + (p[6] + p[9]) * ga2) * (p[3] + p[1] * gb2 + p[2] * gb4),
        (p[6] + p[3] * ga2 + p[9] * ga4) * (p[6] + p[4] * gb2 + p[5] * gb4),
        (p[9] + p[3] * ga2 + p[6] * ga4) * (p[9] + p[7] * gb2 + p[8] * gb4),
        (p[2] + (p[5] + p[8]) * ga2) * (p[2] + p[1] * gb2 + p[3] * gb4),
        (p[8] + p[2] * ga2 + p[5] * ga4) * (p[8] + p[7] * gb2 + p[9] * gb4),
        (p[5] + p[2] * ga2 + p[8] * ga4) * (p[5] + p[4] * gb2 + p[6] * gb4),
    ];
    let sum: f64 = terms.iter().map(|x| x.sqrt()).sum();
    Ok(0.5 * (sum - 1.0))
}

fn supported_within(state: &PureState9, allowed: &[usize]) -> bool {
    (0..DIM).all(|k| allowed.contains(&k) || state.amplitude(k).norm() <= AMPLITUDE_TOL)
}

pub fn is_fragile_form(state: &PureState9) -> bool {
    supported_within(state, &FRAGILE_SUPPORT)
}

pub fn is_psi1_form(state: &PureState9) -> bool {
    supported_within(state, &PSI_FORMS[0])
}

/// True when no two support states share a level on either qutrit, so the
/// state is already in Schmidt form in the computational basis. The fragile
/// class and the psi/phi forms all have this property.
pub fn is_schmidt_aligned(state: &PureState9) -> bool {
    let support: Vec<BasisLabel> = state
        .support(AMPLITUDE_TOL)
        .into_iter()
        .filter_map(BasisLabel::from_index)
        .collect();
    for (n, x) in support.iter().enumerate() {
        for y in &support[n + 1..] {
            if x.a == y.a || x.b == y.b {
                return false;
            }
        }
    }
    true
}

/// For a Schmidt-aligned state the partial transpose of the dephased state
/// splits into 2x2 blocks with eigenvalues `+-|a_k||a_l| f_kl`, so
/// `N = sum_{k<l} |a_k||a_l| f_kl`.
pub fn negativity_schmidt_aligned(state: &PureState9, params: &DecayParams) -> Result<f64> {
    if !is_schmidt_aligned(state) {
        return Err(Error::Classification {
            expected: "Schmidt-aligned",
        });
    }
    let support = state.support(AMPLITUDE_TOL);
    let mut n = 0.0;
    for (i, &k) in support.iter().enumerate() {
        for &l in &support[i + 1..] {
            n += state.amplitude(k).norm()
                * state.amplitude(l).norm()
                * params.factor(factor_powers(k, l));
        }
    }
    Ok(n)
}

/// Fragile class under `spec` at time `t`:
/// `(|a1||a5| + |a1||a9|) gA gB g^4 + |a5||a9| gA^2 gB^2`, which reduces to the
/// multi-local and collective closed forms when the other sources are off.
pub fn negativity_fragile(state: &PureState9, spec: &ChannelSpec, t: f64) -> Result<f64> {
    if !is_fragile_form(state) {
        return Err(Error::Classification { expected: "fragile" });
    }
    negativity_fragile_params(state, &spec.decay_params(t)?)
}

pub fn negativity_fragile_params(state: &PureState9, params: &DecayParams) -> Result<f64> {
    if !is_fragile_form(state) {
        return Err(Error::Classification { expected: "fragile" });
    }
    let [a1, a5, a9] = FRAGILE_SUPPORT.map(|k| state.amplitude(k).norm());
    let g4 = params.gamma_c.powi(4);
    let gab = params.gamma_a * params.gamma_b;
    Ok((a1 * a5 + a1 * a9) * gab * g4 + a5 * a9 * gab * gab)
}

/// `|a2||a4| gA gB` for the psi1 form `a2|2> + a4|4>`.
pub fn negativity_robust_multilocal(state: &PureState9, gamma_a: f64, gamma_b: f64) -> Result<f64> {
    check_unit("gamma_a", gamma_a)?;
    check_unit("gamma_b", gamma_b)?;
    if !is_psi1_form(state) {
        return Err(Error::Classification { expected: "psi1" });
    }
    Ok(state.amplitude(1).norm() * state.amplitude(3).norm() * gamma_a * gamma_b)
}
