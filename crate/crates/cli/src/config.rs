//! Run configuration, read from TOML.
//!
//! Every key lives in a section (`system.n_antennas`, `alm.tau`, ...);
//! unknown keys are rejected. Omitted keys take the library defaults.

use std::path::{Path, PathBuf};

use qce_core::model::uniform_grid;
use qce_core::outer::ObjectiveScale;
use qce_core::{AlmParams, HomotopyParams, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub system: SystemSection,
    pub alm: AlmSection,
    pub homotopy: HomotopySection,
    pub sweep: SweepSection,
    pub ser: SerSection,
    pub oracle: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            system: SystemSection::default(),
            alm: AlmSection::default(),
            homotopy: HomotopySection::default(),
            sweep: SweepSection::default(),
            ser: SerSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

/// Scenario. Angles in degrees, powers linear, SNR in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_antennas: usize,
    pub n_users: usize,
    pub block_len: usize,
    pub psk_order: usize,
    pub quant_levels: usize,
    pub power: f64,
    pub snr_db: f64,
    pub margin_threshold: f64,
    pub target_angles: Vec<f64>,
    pub beam_width: f64,
    pub grid_start: f64,
    pub grid_end: f64,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let d = SystemConfig::default();
        Self {
            n_antennas: d.n_antennas,
            n_users: d.n_users,
            block_len: d.block_len,
            psk_order: d.psk_order,
            quant_levels: d.quant_levels,
            power: d.power,
            snr_db: d.snr_db,
            margin_threshold: d.margin_threshold,
            target_angles: d.target_angles,
            beam_width: d.beam_width,
            grid_start: -90.0,
            grid_end: 90.0,
            grid_step: 1.0,
            seed: d.rng_seed,
        }
    }
}

/// `"mse"`, `"raw"` or an explicit positive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Named(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlmSection {
    pub rho_scale: f64,
    pub rho_ratio: f64,
    pub mu_bound: f64,
    pub nu_bound: f64,
    pub tau: f64,
    pub delta: f64,
    pub eps_scale: f64,
    pub max_outer: usize,
    /// Absent means `1e-3·√T`.
    pub stop_tol: Option<f64>,
    pub inner_max_iter: usize,
    pub objective_scale: ScaleSpec,
}

impl Default for AlmSection {
    fn default() -> Self {
        let d = AlmParams::default();
        Self {
            rho_scale: d.rho_scale,
            rho_ratio: d.rho_ratio,
            mu_bound: d.mu_bound,
            nu_bound: d.nu_bound,
            tau: d.tau,
            delta: d.delta,
            eps_scale: d.eps_scale,
            max_outer: d.max_outer,
            stop_tol: d.stop_tol,
            inner_max_iter: d.inner_max_iter,
            objective_scale: match d.objective_scale {
                ObjectiveScale::Mse => ScaleSpec::Named("mse".into()),
                ObjectiveScale::Raw => ScaleSpec::Named("raw".into()),
                ObjectiveScale::Custom(k) => ScaleSpec::Value(k),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomotopySection {
    pub lambda0: f64,
    pub growth: f64,
    pub vertex_tol: f64,
    pub max_stages: usize,
}

impl Default for HomotopySection {
    fn default() -> Self {
        let d = HomotopyParams::default();
        Self {
            lambda0: d.lambda0,
            growth: d.growth,
            vertex_tol: d.vertex_tol,
            max_stages: d.max_stages,
        }
    }
}

/// Sweep axes. An absent axis holds the `system` value; a present axis must
/// be nonempty, and at least one of `b`, `levels`, `snr_db` must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub b: Option<Vec<f64>>,
    pub levels: Option<Vec<usize>>,
    pub snr_db: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SerSection {
    /// Simulate SER after `solve`.
    pub enabled: bool,
    /// Noise realizations per symbol.
    pub trials: u64,
}

impl Default for SerSection {
    fn default() -> Self {
        Self {
            enabled: false,
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Seeds `system.seed .. system.seed + n_seeds`.
    pub n_seeds: u64,
    pub budget: u64,
    /// Relative objective gap counted as agreement.
    pub gap_tol: f64,
    /// Fraction of oracle-feasible seeds that must agree.
    pub pass_fraction: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_seeds: 50,
            budget: 1_000_000,
            gap_tol: 0.05,
            pass_fraction: 0.8,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if !(s.grid_step > 0.0) || !(s.grid_end >= s.grid_start) || !(s.grid_end - s.grid_start).is_finite() {
            return Err(CliError::Config("grid needs grid_step > 0 and grid_end >= grid_start".into()));
        }
        self.system_config(s.seed).validate()?;
        self.alm_params()?.validate()?;
        self.homotopy_params().validate(s.quant_levels)?;
        if !(0.0..=1.0).contains(&self.oracle.pass_fraction) || !(self.oracle.gap_tol >= 0.0) {
            return Err(CliError::Config("oracle.pass_fraction must lie in [0, 1] and oracle.gap_tol be >= 0".into()));
        }
        Ok(())
    }

    pub fn system_config(&self, seed: u64) -> SystemConfig {
        let s = &self.system;
        SystemConfig {
            n_antennas: s.n_antennas,
            n_users: s.n_users,
            block_len: s.block_len,
            psk_order: s.psk_order,
            quant_levels: s.quant_levels,
            power: s.power,
            snr_db: s.snr_db,
            margin_threshold: s.margin_threshold,
            target_angles: s.target_angles.clone(),
            beam_width: s.beam_width,
            grid: uniform_grid(s.grid_start, s.grid_end, s.grid_step),
            rng_seed: seed,
        }
    }

    pub fn alm_params(&self) -> Result<AlmParams> {
        let a = &self.alm;
        let objective_scale = match &a.objective_scale {
            ScaleSpec::Named(n) if n == "mse" => ObjectiveScale::Mse,
            ScaleSpec::Named(n) if n == "raw" => ObjectiveScale::Raw,
            ScaleSpec::Named(n) => {
                return Err(CliError::Config(format!(
                    "alm.objective_scale must be \"mse\", \"raw\" or a number, got {n:?}"
                )))
            }
            ScaleSpec::Value(k) => ObjectiveScale::Custom(*k),
        };
        Ok(AlmParams {
            rho_scale: a.rho_scale,
            rho_ratio: a.rho_ratio,
            mu_bound: a.mu_bound,
            nu_bound: a.nu_bound,
            tau: a.tau,
            delta: a.delta,
            eps_scale: a.eps_scale,
            max_outer: a.max_outer,
            stop_tol: a.stop_tol,
            inner_max_iter: a.inner_max_iter,
            objective_scale,
            record_trace: false,
        })
    }

    pub fn homotopy_params(&self) -> HomotopyParams {
        let h = &self.homotopy;
        HomotopyParams {
            lambda0: h.lambda0,
            growth: h.growth,
            vertex_tol: h.vertex_tol,
            max_stages: h.max_stages,
        }
    }
}
