//! Run configuration. Every section has defaults, so an empty file describes
//! the reference two-cell highway scenario.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::LinkBudget;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: PopulationConfig,
    pub topology: TopologyConfig,
    pub channel: LinkBudget,
    pub user: UserConfig,
    pub arrm: ArrmConfig,
    pub baseline: BaselineConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// K
    pub num_users: usize,
    /// T_d, seconds.
    pub slot_duration_s: f64,
    /// T_N
    pub lifetime_slots: usize,
    pub seed: u64,
    /// Distances below this are clamped before evaluating path loss.
    pub min_distance_m: f64,
    pub policy: Policy,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            num_users: 20,
            slot_duration_s: 0.167,
            lifetime_slots: 100,
            seed: 1,
            min_distance_m: 10.0,
            policy: Policy::Arrm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Arrm,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub num_bs: usize,
    pub inter_site_distance_m: f64,
    pub prbs_per_bs: f64,
    /// Informational only; distances are measured along the road.
    pub antenna_height_m: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            num_bs: 2,
            inter_site_distance_m: 500.0,
            prbs_per_bs: 50.0,
            antenna_height_m: 35.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    pub speed_mps: f64,
    pub video_rate_bps: f64,
    pub buffer_cap_bits: f64,
    pub initial_buffer_bits: f64,
}

impl Default for UserConfig {
    fn default() -> Self {
        Self {
            speed_mps: 30.0,
            video_rate_bps: 1.5e6,
            buffer_cap_bits: 20e6,
            initial_buffer_bits: 0.0,
        }
    }
}

/// Trade-off weight: a fixed value, or ten times the instance threshold
/// clamped into `[1, 1e4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Auto,
    Fixed(f64),
}

impl Serialize for Gamma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Gamma::Auto => s.serialize_str("auto"),
            Gamma::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Gamma::Fixed(v)),
            Raw::Int(v) => Ok(Gamma::Fixed(v as f64)),
            Raw::Text(s) if s == "auto" => Ok(Gamma::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// Which LP layout the simulator hands to the solver. Both have the same
/// optimum; `buffered` keeps the buffer levels as explicit variables, which
/// keeps the constraint matrix sparse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Cumulative,
    Buffered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrmConfig {
    /// T, slots of look-ahead.
    pub horizon: usize,
    /// T_c, slots between scheduled re-optimizations.
    pub reopt_step: usize,
    pub gamma: Gamma,
    /// Prediction error deviation at the end of the horizon, dB.
    pub error_sigma_db: f64,
    pub formulation: Formulation,
}

impl Default for ArrmConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            reopt_step: 20,
            gamma: Gamma::Auto,
            error_sigma_db: 0.0,
            formulation: Formulation::Buffered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    /// Scale every demand at an overloaded BS by the same factor.
    Proportional,
    /// Serve demands in user order until the BS runs out.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub sharing: Sharing,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { sharing: Sharing::Proportional }
    }
}

/// Sweep grids for the experiment drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub video_rates_bps: Vec<f64>,
    /// Horizons for the single-user study.
    pub horizons: Vec<usize>,
    /// User counts for the stalling study.
    pub user_counts: Vec<usize>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    /// Deviation used for the mispredicted series, dB.
    pub error_sigma_db: f64,
    /// Stall fraction at which the trade-off curve is read off.
    pub stall_target: f64,
    /// Stall fraction counted as acceptable service.
    pub qos_stall_limit: f64,
    pub buffer_caps_bits: Vec<f64>,
    /// Active-user counts for the timing study.
    pub timing_users: Vec<usize>,
    pub timing_horizons: Vec<usize>,
    /// Solves per timing cell.
    pub timing_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            replications: 200,
            video_rates_bps: vec![1.5e6, 2.5e6, 4e6, 6e6],
            horizons: (1..=100).collect(),
            user_counts: (1..=30).collect(),
            gamma_min: 1.0,
            gamma_max: 1e4,
            gamma_points: 20,
            error_sigma_db: 10.0,
            stall_target: 0.10,
            qos_stall_limit: 0.05,
            buffer_caps_bits: vec![20e6],
            timing_users: vec![1, 10, 20, 30],
            timing_horizons: vec![20, 50, 100],
            timing_samples: 11,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let s = &self.scenario;
        let a = &self.arrm;
        if !(s.slot_duration_s > 0.0 && s.slot_duration_s.is_finite()) {
            return bad(format!("slot_duration_s = {}", s.slot_duration_s));
        }
        if !(1 <= a.reopt_step && a.reopt_step <= a.horizon && a.horizon <= s.lifetime_slots) {
            return bad(format!(
                "need 1 <= reopt_step ({}) <= horizon ({}) <= lifetime_slots ({})",
                a.reopt_step, a.horizon, s.lifetime_slots
            ));
        }
        if !(s.min_distance_m > 0.0) {
            return bad(format!("min_distance_m = {}", s.min_distance_m));
        }
        if !(a.error_sigma_db >= 0.0) {
            return bad(format!("error_sigma_db = {}", a.error_sigma_db));
        }
        if let Gamma::Fixed(g) = a.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return bad(format!("gamma = {g}"));
            }
        }
        let t = &self.topology;
        if t.num_bs == 0 || !(t.prbs_per_bs > 0.0) || !(t.inter_site_distance_m > 0.0) {
            return bad("topology needs at least one BS, positive PRBs and spacing".into());
        }
        let u = &self.user;
        if !(u.speed_mps > 0.0 && u.video_rate_bps > 0.0 && u.buffer_cap_bits >= 0.0) {
            return bad("user speed and video rate must be positive, buffer non-negative".into());
        }
        if !(u.initial_buffer_bits >= 0.0 && u.initial_buffer_bits <= u.buffer_cap_bits) {
            return bad(format!(
                "initial_buffer_bits {} outside [0, {}]",
                u.initial_buffer_bits, u.buffer_cap_bits
            ));
        }
        self.channel.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let e = &self.experiment;
        if e.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(e.gamma_min > 0.0 && e.gamma_max >= e.gamma_min && e.gamma_points >= 1) {
            return bad("gamma grid needs 0 < gamma_min <= gamma_max and at least one point".into());
        }
        if e.timing_samples == 0 {
            return bad("timing_samples must be at least 1".into());
        }
        Ok(())
    }
}
