//! Scenario configuration files (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use qutrit_dephasing::analysis::{linear_grid, log_grid};
use qutrit_dephasing::entanglement::{FRAGILE_SUPPORT, PHI_FORMS, PSI_FORMS};
use qutrit_dephasing::{ChannelSpec, NoiseSource, PureState9, C64};

use crate::error::CliError;

/// Hand-written amplitudes may be off from unit norm by this much; they are
/// renormalized. Anything further off is rejected.
pub const CONFIG_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    FragileBell,
    MaximallyEntangled,
    Phi1,
    Phi2,
    Phi3,
    RobustPsi1,
    RobustPsi2,
    RobustPsi3,
}

impl Preset {
    /// 0-based support of the preset.
    pub fn support(self) -> &'static [usize] {
        match self {
            Preset::FragileBell | Preset::MaximallyEntangled => &FRAGILE_SUPPORT,
            Preset::Phi1 => &PHI_FORMS[0],
            Preset::Phi2 => &PHI_FORMS[1],
            Preset::Phi3 => &PHI_FORMS[2],
            Preset::RobustPsi1 => &PSI_FORMS[0],
            Preset::RobustPsi2 => &PSI_FORMS[1],
            Preset::RobustPsi3 => &PSI_FORMS[2],
        }
    }
}

/// A complex number written as `x` or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Amplitude::Real(x) => C64::new(x, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    /// Nine amplitudes for basis states 1..=9.
    #[serde(default)]
    pub amplitudes: Option<Vec<Amplitude>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub sources: Vec<NoiseSource>,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_trajectories: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Negativity,
    Coherence,
    Reduced,
    Timescales,
    Classify,
    Dfs,
    Oracle,
    /// Full density-matrix entries per time point.
    Rho,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Negativity => "negativity",
            OutputKind::Coherence => "coherence",
            OutputKind::Reduced => "reduced",
            OutputKind::Timescales => "timescales",
            OutputKind::Classify => "classify",
            OutputKind::Dfs => "dfs",
            OutputKind::Oracle => "oracle",
            OutputKind::Rho => "rho",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub state: StateConfig,
    pub channels: ChannelConfig,
    pub time_grid: TimeGridConfig,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub outputs: Vec<OutputKind>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The initial state, checked and normalized.
    pub fn initial_state(&self) -> Result<PureState9, CliError> {
        let s = &self.state;
        match (&s.preset, &s.amplitudes) {
            (None, None) => Err(CliError::Validation(
                "state: give a preset, amplitudes, or both".into(),
            )),
            (Some(p), None) => {
                let terms: Vec<(usize, C64)> = p.support().iter().map(|&k| (k, C64::new(1.0, 0.0))).collect();
                Ok(PureState9::superposition(&terms)?)
            }
            (preset, Some(amps)) => {
                if amps.len() != 9 {
                    return Err(CliError::Validation(format!(
                        "state.amplitudes: expected 9 entries, got {}",
                        amps.len()
                    )));
                }
                let mut v = [C64::new(0.0, 0.0); 9];
                for (k, a) in amps.iter().enumerate() {
                    v[k] = a.value();
                    if !(v[k].re.is_finite() && v[k].im.is_finite()) {
                        return Err(CliError::Validation(format!("state.amplitudes[{k}] is not finite")));
                    }
                    if let Some(p) = preset {
                        if !p.support().contains(&k) && v[k].norm() > 0.0 {
                            return Err(CliError::Validation(format!(
                                "state.amplitudes[{k}] lies outside the support of preset {}",
                                serde_json::to_string(p).unwrap_or_default()
                            )));
                        }
                    }
                }
                let norm_sq: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                if (norm_sq - 1.0).abs() > CONFIG_NORM_TOL {
                    return Err(CliError::Validation(format!(
                        "state.amplitudes: squared norm {norm_sq} is not 1"
                    )));
                }
                Ok(PureState9::normalized(v)?)
            }
        }
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec, CliError> {
        let c = &self.channels;
        for (name, g) in [("gamma1", c.gamma1), ("gamma2", c.gamma2)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(CliError::Validation(format!("channels.{name} must be finite and >= 0")));
            }
        }
        Ok(ChannelSpec::from_sources(&c.sources, c.gamma1, c.gamma2))
    }

    pub fn time_grid(&self) -> Result<Vec<f64>, CliError> {
        let g = &self.time_grid;
        if !(g.t_start.is_finite() && g.t_end.is_finite()) {
            return Err(CliError::Validation("time_grid: bounds must be finite".into()));
        }
        if g.t_start < 0.0 || g.t_end <= g.t_start {
            return Err(CliError::Validation(format!(
                "time_grid: need 0 <= t_start < t_end, got [{}, {}]",
                g.t_start, g.t_end
            )));
        }
        if g.n_points < 2 {
            return Err(CliError::Validation(format!(
                "time_grid: need n_points >= 2, got {}",
                g.n_points
            )));
        }
        Ok(match g.spacing {
            Spacing::Linear => linear_grid(g.t_start, g.t_end, g.n_points),
            Spacing::Log => log_grid(g.t_start, g.t_end, g.n_points),
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.initial_state()?;
        self.channel_spec()?;
        self.time_grid()?;
        if let Some(mc) = &self.mc {
            if mc.n_trajectories == 0 {
                return Err(CliError::Validation("mc.n_trajectories must be >= 1".into()));
            }
        }
        if self.outputs.contains(&OutputKind::Oracle) && self.mc.is_none() {
            return Err(CliError::Validation("output oracle needs an mc section".into()));
        }
        Ok(())
    }
}
