//! Browser bindings: a single user's rolling plan, a policy comparison on a
//! small population, and the per-PRB rate along the road.

use arrm_core::channel::achievable_rate_per_prb;
use arrm_core::config::{ConfigError, Gamma, Policy, ScenarioConfig};
use arrm_core::metrics::{user_spectral_efficiency, EpisodeMetrics};
use arrm_core::scenario::{serving_distance_m, Geometry, ScenarioError};
use arrm_core::simulator::{run_episode, SimError};
use thiserror::Error;
use wasm_bindgen::prelude::*;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("{0}")]
    Input(String),
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

fn base_config(video_mbps: f64, tx_power_dbm: f64) -> ScenarioConfig {
    let mut config = ScenarioConfig::default();
    config.user.video_rate_bps = video_mbps * 1e6;
    config.channel.tx_power_dbm = tx_power_dbm;
    config
}

/// Trajectory of one user, slot by slot.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct UserRun {
    omega: Vec<f64>,
    buffer_mbit: Vec<f64>,
    stall: Vec<f64>,
    rate_mbps: Vec<f64>,
    spectral_efficiency: f64,
    optimizations: usize,
}

#[wasm_bindgen]
impl UserRun {
    /// PRBs allocated per slot.
    #[wasm_bindgen(getter)]
    pub fn omega(&self) -> Vec<f64> {
        self.omega.clone()
    }

    /// Buffer level at the end of each slot.
    #[wasm_bindgen(getter, js_name = bufferMbit)]
    pub fn buffer_mbit(&self) -> Vec<f64> {
        self.buffer_mbit.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn stall(&self) -> Vec<f64> {
        self.stall.clone()
    }

    /// Achievable rate of one PRB in each slot.
    #[wasm_bindgen(getter, js_name = rateMbps)]
    pub fn rate_mbps(&self) -> Vec<f64> {
        self.rate_mbps.clone()
    }

    #[wasm_bindgen(getter, js_name = spectralEfficiency)]
    pub fn spectral_efficiency(&self) -> f64 {
        self.spectral_efficiency
    }

    #[wasm_bindgen(getter)]
    pub fn optimizations(&self) -> usize {
        self.optimizations
    }
}

pub fn single_user(
    video_mbps: f64,
    horizon: usize,
    reopt_step: usize,
    buffer_cap_mbit: f64,
    tx_power_dbm: f64,
) -> Result<UserRun, DemoError> {
    let mut config = base_config(video_mbps, tx_power_dbm);
    config.scenario.num_users = 1;
    config.arrm.horizon = horizon;
    config.arrm.reopt_step = reopt_step;
    config.user.buffer_cap_bits = buffer_cap_mbit * 1e6;
    config.validate()?;
    let trace = run_episode(&config, config.scenario.seed)?;
    let records = || trace.records.iter().filter(|r| r.user == 0);
    Ok(UserRun {
        omega: records().map(|r| r.omega).collect(),
        buffer_mbit: records().map(|r| r.buffer_bits / 1e6).collect(),
        stall: records().map(|r| r.stall).collect(),
        rate_mbps: records().map(|r| r.rate_bps / 1e6).collect(),
        spectral_efficiency: user_spectral_efficiency(&trace, 0).unwrap_or(0.0),
        optimizations: trace.events.len(),
    })
}

/// Plans and plays out one user's whole trip across the two cells.
#[wasm_bindgen(js_name = planSingleUser)]
pub fn plan_single_user(
    video_mbps: f64,
    horizon: usize,
    reopt_step: usize,
    buffer_cap_mbit: f64,
    tx_power_dbm: f64,
) -> Result<UserRun, JsError> {
    single_user(video_mbps, horizon, reopt_step, buffer_cap_mbit, tx_power_dbm).map_err(js)
}

/// Mean stall fraction and cell SE of both policies on one population.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub arrm_stall: f64,
    pub arrm_se: f64,
    pub baseline_stall: f64,
    pub baseline_se: f64,
    pub optimizations: usize,
}

pub fn compare(
    users: usize,
    video_mbps: f64,
    gamma: f64,
    sigma_db: f64,
    tx_power_dbm: f64,
    seed: u32,
) -> Result<Comparison, DemoError> {
    let mut config = base_config(video_mbps, tx_power_dbm);
    config.scenario.num_users = users;
    config.arrm.gamma = if gamma > 0.0 { Gamma::Fixed(gamma) } else { Gamma::Auto };
    config.arrm.error_sigma_db = sigma_db;
    config.validate()?;
    let mut run = |policy| -> Result<_, DemoError> {
        config.scenario.policy = policy;
        let trace = run_episode(&config, u64::from(seed))?;
        Ok((EpisodeMetrics::from_trace(&trace), trace.events.len()))
    };
    let (arrm, optimizations) = run(Policy::Arrm)?;
    let (base, _) = run(Policy::Baseline)?;
    Ok(Comparison {
        arrm_stall: arrm.mean_stall(),
        arrm_se: arrm.cell_se.unwrap_or(0.0),
        baseline_stall: base.mean_stall(),
        baseline_se: base.cell_se.unwrap_or(0.0),
        optimizations,
    })
}

/// Runs the anticipatory scheduler and the baseline on the same arrivals.
/// `gamma ≤ 0` picks the trade-off weight automatically.
#[wasm_bindgen(js_name = comparePolicies)]
pub fn compare_policies(
    users: usize,
    video_mbps: f64,
    gamma: f64,
    sigma_db: f64,
    tx_power_dbm: f64,
    seed: u32,
) -> Result<Comparison, JsError> {
    compare(users, video_mbps, gamma, sigma_db, tx_power_dbm, seed).map_err(js)
}

pub fn rate_along_route(tx_power_dbm: f64, step_m: f64) -> Result<Vec<f64>, DemoError> {
    if !(step_m > 0.0) {
        return Err(DemoError::Input(format!("step must be positive, got {step_m}")));
    }
    let config = base_config(1.5, tx_power_dbm);
    let geometry = Geometry::from_config(&config)?;
    let end = geometry.topology.route_length_m();
    let points = (end / step_m).floor() as usize + 1;
    (0..points)
        .map(|i| {
            let d = serving_distance_m(i as f64 * step_m, &geometry.topology, geometry.min_distance_m);
            let gain = geometry.budget.gain_db(d / 1000.0).map_err(ScenarioError::from)?;
            Ok(achievable_rate_per_prb(gain, &geometry.budget) / 1e6)
        })
        .collect()
}

/// Per-PRB rate in Mbit/s every `step_m` metres from the first BS to the
/// second.
#[wasm_bindgen(js_name = rateProfile)]
pub fn rate_profile(tx_power_dbm: f64, step_m: f64) -> Result<Vec<f64>, JsError> {
    rate_along_route(tx_power_dbm, step_m).map_err(js)
}
