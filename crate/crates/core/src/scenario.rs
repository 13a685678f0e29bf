//! Two-cell highway topology: Poisson arrivals, straight-line mobility from
//! the first BS towards the second, nearest-BS association and per-slot
//! channel gains.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::channel::{apply_prediction_error, ChannelError, ChannelGainTrace, LinkBudget};
use crate::config::ScenarioConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("slot {slot} outside lifetime [{arrival}, {end}) of user {user}")]
    SlotOutsideLifetime {
        user: usize,
        slot: usize,
        arrival: usize,
        end: usize,
    },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid user: {0}")]
    InvalidUser(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Base stations on a line.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub inter_site_distance_m: f64,
    /// PRBs per BS, `N_m`.
    pub prbs_per_bs: Vec<f64>,
    /// Strictly increasing positions along the line, m.
    pub bs_positions: Vec<f64>,
}

impl Topology {
    /// `num_bs` equally spaced sites starting at the origin.
    pub fn line(num_bs: usize, inter_site_distance_m: f64, prbs_per_bs: f64) -> Result<Self, ScenarioError> {
        let t = Self {
            inter_site_distance_m,
            prbs_per_bs: vec![prbs_per_bs; num_bs],
            bs_positions: (0..num_bs).map(|m| m as f64 * inter_site_distance_m).collect(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    /// End of the road, where the last BS sits.
    pub fn route_length_m(&self) -> f64 {
        *self.bs_positions.last().unwrap_or(&0.0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.bs_positions.is_empty() {
            return Err(ScenarioError::InvalidTopology("at least one BS required".into()));
        }
        if self.prbs_per_bs.len() != self.bs_positions.len() {
            return Err(ScenarioError::InvalidTopology("one PRB count per BS required".into()));
        }
        if self.prbs_per_bs.iter().any(|&n| !(n > 0.0)) {
            return Err(ScenarioError::InvalidTopology("PRB counts must be positive".into()));
        }
        if self.bs_positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ScenarioError::InvalidTopology("BS positions must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// One streaming user. Rates and sizes in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub id: usize,
    pub arrival_slot: usize,
    pub speed_mps: f64,
    pub lifetime_slots: usize,
    /// Play-out rate per lifetime slot, bits/s.
    pub video_rate_bps: Vec<f64>,
    pub buffer_cap_bits: f64,
    pub initial_buffer_bits: f64,
}

impl UserSpec {
    pub fn departure_slot(&self) -> usize {
        self.arrival_slot + self.lifetime_slots
    }

    pub fn is_active(&self, slot: usize) -> bool {
        slot >= self.arrival_slot && slot < self.departure_slot()
    }

    pub fn video_rate_at(&self, slot: usize) -> f64 {
        self.video_rate_bps[slot - self.arrival_slot]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.speed_mps > 0.0) {
            return Err(ScenarioError::InvalidUser(format!("speed {} m/s", self.speed_mps)));
        }
        if self.lifetime_slots == 0 {
            return Err(ScenarioError::InvalidUser("lifetime must be at least one slot".into()));
        }
        if self.video_rate_bps.len() != self.lifetime_slots || self.video_rate_bps.iter().any(|&v| !(v > 0.0)) {
            return Err(ScenarioError::InvalidUser("one positive video rate per lifetime slot".into()));
        }
        if !(self.initial_buffer_bits >= 0.0 && self.initial_buffer_bits <= self.buffer_cap_bits) {
            return Err(ScenarioError::InvalidUser(format!(
                "initial buffer {} outside [0, {}]",
                self.initial_buffer_bits, self.buffer_cap_bits
            )));
        }
        Ok(())
    }
}

/// Arrival slots of `num_users` users under a Poisson process with rate
/// `λ = K / (T_N·T_d)`, i.e. exponential inter-arrival times floored to slots.
pub fn generate_arrivals<R: Rng + ?Sized>(
    num_users: usize,
    lifetime_slots: usize,
    slot_duration_s: f64,
    rng: &mut R,
) -> Vec<usize> {
    if num_users == 0 {
        return Vec::new();
    }
    let rate = arrival_rate(num_users, lifetime_slots, slot_duration_s);
    let exp = Exp::new(rate).expect("arrival rate is positive and finite");
    let mut t = 0.0;
    (0..num_users)
        .map(|_| {
            t += exp.sample(rng);
            (t / slot_duration_s).floor() as usize
        })
        .collect()
}

/// Users per second.
pub fn arrival_rate(num_users: usize, lifetime_slots: usize, slot_duration_s: f64) -> f64 {
    num_users as f64 / (lifetime_slots as f64 * slot_duration_s)
}

/// Position along the BS line, clamped to the end of the route.
pub fn user_position(
    user: &UserSpec,
    slot: usize,
    slot_duration_s: f64,
    topology: &Topology,
) -> Result<f64, ScenarioError> {
    if !user.is_active(slot) {
        return Err(ScenarioError::SlotOutsideLifetime {
            user: user.id,
            slot,
            arrival: user.arrival_slot,
            end: user.departure_slot(),
        });
    }
    let travelled = user.speed_mps * slot_duration_s * (slot - user.arrival_slot) as f64;
    Ok(travelled.clamp(0.0, topology.route_length_m()))
}

/// Index of the nearest BS; ties go to the lower index.
pub fn bs_assignment(position_m: f64, topology: &Topology) -> usize {
    let mut best = 0;
    for (m, &p) in topology.bs_positions.iter().enumerate() {
        if (position_m - p).abs() < (position_m - topology.bs_positions[best]).abs() {
            best = m;
        }
    }
    best
}

/// Distance to the serving BS, clamped below at `min_distance_m`.
pub fn serving_distance_m(position_m: f64, topology: &Topology, min_distance_m: f64) -> f64 {
    let bs = bs_assignment(position_m, topology);
    (position_m - topology.bs_positions[bs]).abs().max(min_distance_m)
}

/// Geometry needed to turn a user's slots into channel gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub topology: Topology,
    pub budget: LinkBudget,
    pub slot_duration_s: f64,
    pub min_distance_m: f64,
}

impl Geometry {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let topology = Topology::line(
            config.topology.num_bs,
            config.topology.inter_site_distance_m,
            config.topology.prbs_per_bs,
        )?;
        config.channel.validate()?;
        Ok(Self {
            topology,
            budget: config.channel.clone(),
            slot_duration_s: config.scenario.slot_duration_s,
            min_distance_m: config.scenario.min_distance_m,
        })
    }

    /// Serving BS and true gain (dB) for each lifetime slot of `user`.
    pub fn lifetime_channel(&self, user: &UserSpec) -> Result<(Vec<usize>, Vec<f64>), ScenarioError> {
        let mut bs = Vec::with_capacity(user.lifetime_slots);
        let mut gain = Vec::with_capacity(user.lifetime_slots);
        for slot in user.arrival_slot..user.departure_slot() {
            let pos = user_position(user, slot, self.slot_duration_s, &self.topology)?;
            bs.push(bs_assignment(pos, &self.topology));
            let d = serving_distance_m(pos, &self.topology, self.min_distance_m);
            gain.push(self.budget.gain_db(d / 1000.0)?);
        }
        Ok((bs, gain))
    }
}

/// True gain per lifetime slot plus one forecast of it, where each slot is
/// predicted from the start of the horizon window containing it.
pub fn gain_trace<R: Rng + ?Sized>(
    user: &UserSpec,
    geometry: &Geometry,
    sigma_db: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<ChannelGainTrace, ScenarioError> {
    let (_, true_db) = geometry.lifetime_channel(user)?;
    let predicted_db = true_db
        .iter()
        .enumerate()
        .map(|(i, &g)| apply_prediction_error(g, i % horizon + 1, horizon, sigma_db, rng))
        .collect::<Result<_, _>>()?;
    Ok(ChannelGainTrace { true_db, predicted_db })
}

/// Users with Poisson arrivals and the configured per-user defaults.
pub fn build_users<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<UserSpec> {
    let s = &config.scenario;
    generate_arrivals(s.num_users, s.lifetime_slots, s.slot_duration_s, rng)
        .into_iter()
        .enumerate()
        .map(|(id, arrival_slot)| UserSpec {
            id,
            arrival_slot,
            speed_mps: config.user.speed_mps,
            lifetime_slots: s.lifetime_slots,
            video_rate_bps: vec![config.user.video_rate_bps; s.lifetime_slots],
            buffer_cap_bits: config.user.buffer_cap_bits,
            initial_buffer_bits: config.user.initial_buffer_bits,
        })
        .collect()
}
