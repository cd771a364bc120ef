//! Experiment configuration: defaults, JSON schema, and validation.

use serde::{Deserialize, Serialize};

use crate::hetnet::PathLossConfig;
use crate::optimizer::{CutLimits, Method, SolveOptions};

use super::HarnessError;

/// A parameter that is either a single value or a sweep list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    One(usize),
    Many(Vec<usize>),
}

impl SweepValues {
    pub fn values(&self) -> Vec<usize> {
        match self {
            SweepValues::One(v) => vec![*v],
            SweepValues::Many(vs) => vs.clone(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, SweepValues::Many(v) if v.len() > 1)
    }
}

/// Transmit powers per role. Macro users get one of `mue_dbm_levels`
/// according to their distance quintile from the macro BS (nearest level
/// first).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub mbs_dbm: f64,
    pub sbs_dbm: f64,
    pub sue_dbm: f64,
    pub mue_dbm_levels: Vec<f64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            mbs_dbm: 40.0,
            sbs_dbm: 25.0,
            sue_dbm: 15.0,
            mue_dbm_levels: vec![10.0, 15.0, 20.0, 25.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub macro_radius: f64,
    pub small_radius: f64,
    pub n_sbs: SweepValues,
    pub n_users: SweepValues,
    /// Reporting only: converts per-Hz rates into bit rates.
    pub bandwidth: f64,
    pub powers: PowerConfig,
    pub ratio_mbs: f64,
    pub ratio_sbs: f64,
    pub dof_mbs: usize,
    pub dof_sbs: usize,
    /// Nested-array levels of every small BS.
    pub sbs_nested_levels: [usize; 2],
    /// Per-link multipath counts are uniform on `1..=q_max` ...
    pub q_max: u32,
    /// ... unless this fixes them all, enabling the unimodular fast path.
    pub fixed_multipath: Option<u32>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub gamma_out_db: f64,
    pub epsilon_n: f64,
    pub max_order: usize,
    pub p4_max_order: usize,
    pub max_terms: usize,
    /// dBm level treated as linear power 1.0, so configured powers become
    /// ratios to the noise floor.
    pub noise_floor_dbm: f64,
    /// Minimum spacing between small-cell centers; `None` means twice the
    /// small-cell radius.
    pub sbs_min_separation: Option<f64>,
    pub outage_include_array_gain: bool,
    pub path_loss: PathLossConfig,
    pub per_station_probability: bool,
    /// Record wall-clock solve times. Off by default so output files are
    /// byte-reproducible; when off the time column holds zeros.
    pub record_timing: bool,
    pub max_cuts: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            macro_radius: 1000.0,
            small_radius: 50.0,
            n_sbs: SweepValues::One(4),
            n_users: SweepValues::One(30),
            bandwidth: 4e6,
            powers: PowerConfig::default(),
            ratio_mbs: 100.0,
            ratio_sbs: 10.0,
            dof_mbs: 100,
            dof_sbs: 11,
            sbs_nested_levels: [2, 2],
            q_max: 3,
            fixed_multipath: None,
            trials: 100,
            seed: 1,
            methods: vec![Method::CuttingPlane, Method::Heuristic, Method::NoNulling],
            gamma_out_db: 0.0,
            epsilon_n: 1.0,
            max_order: 3,
            p4_max_order: 2,
            max_terms: 8_000_000,
            noise_floor_dbm: -104.0,
            sbs_min_separation: None,
            outage_include_array_gain: false,
            path_loss: PathLossConfig::default(),
            per_station_probability: false,
            record_timing: false,
            max_cuts: 500,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.macro_radius <= 0.0
            || self.small_radius <= 0.0
            || self.macro_radius.is_nan()
            || self.small_radius.is_nan()
        {
            return bad("radii must be positive".into());
        }
        if self.small_radius >= self.macro_radius {
            return bad("small_radius must be below macro_radius".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        if self.n_sbs.values().is_empty() || self.n_users.values().is_empty() {
            return bad("sweep lists must be nonempty".into());
        }
        if self.powers.mue_dbm_levels.is_empty() {
            return bad("mue_dbm_levels must be nonempty".into());
        }
        if self.q_max == 0 || self.fixed_multipath == Some(0) {
            return bad("multipath counts must be at least 1".into());
        }
        if self.dof_mbs < 2 || self.dof_sbs < 2 {
            return bad("DoF budgets must leave room for the noise slot".into());
        }
        let [n1, n2] = self.sbs_nested_levels;
        if n1 == 0 || n2 == 0 {
            return bad("nested-array levels must be nonzero".into());
        }
        if self.max_order == 0 || self.p4_max_order == 0 {
            return bad("expansion orders must be at least 1".into());
        }
        if self.bandwidth <= 0.0 || self.bandwidth.is_nan() {
            return bad("bandwidth must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            max_order: self.max_order,
            p4_max_order: self.p4_max_order,
            max_terms: self.max_terms,
            per_station_probability: self.per_station_probability,
            limits: CutLimits {
                max_cuts: self.max_cuts,
                ..CutLimits::default()
            },
        }
    }

    pub fn sbs_separation(&self) -> f64 {
        self.sbs_min_separation.unwrap_or(2.0 * self.small_radius)
    }
}
