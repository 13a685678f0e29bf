//! Rolling-horizon episode engine.
//!
//! An episode runs from the first arrival until the last user leaves. The
//! anticipatory policy re-plans whenever a user arrives or `T_c` slots have
//! passed since the previous plan; the baseline decides slot by slot. Both
//! apply their allocations to the true channel through [`step_buffer`].

use std::collections::HashMap;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arrm::{
    auto_gamma, baseline_allocate, build_lp_buffered, build_lp_with_stalls, extract_plan, gamma_threshold,
    AllocationPlan, ArrmError, ProblemInstance, SlotDemand, UserWindow,
};
use crate::channel::{achievable_rate_per_prb, apply_prediction_error, ChannelError};
use crate::config::{Formulation, Gamma, Policy, ScenarioConfig, Sharing};
use crate::lp::{solve_lp, solve_lp_from, Basis, BasisStatus, LpError, LpStatus, ToleranceSettings};
use crate::scenario::{build_users, Geometry, ScenarioError, UserSpec};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Arrm(#[from] ArrmError),
    #[error("optimization at slot {slot} with {users} users ended {status}")]
    Solver { slot: usize, users: usize, status: LpStatus },
}

/// Outcome of playing one slot from a buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferStep {
    pub delivered: f64,
    pub played: f64,
    pub buffer: f64,
    pub stall: f64,
    pub discarded: f64,
}

/// Plays one slot: `ω·S` bits arrive, `V` bits are consumed if available,
/// and whatever would push the buffer past `Z` is dropped.
pub fn step_buffer(z_prev: f64, omega: f64, rate_bits: f64, video_bits: f64, cap: f64) -> BufferStep {
    let delivered = omega * rate_bits;
    let available = delivered + z_prev;
    let played = available.min(video_bits);
    let left = available - played;
    let buffer = left.min(cap);
    BufferStep {
        delivered,
        played,
        buffer,
        stall: (video_bits - played) / video_bits,
        discarded: left - buffer,
    }
}

/// One user in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub user: usize,
    pub slot: usize,
    pub serving_bs: usize,
    pub omega: f64,
    /// True per-PRB rate, bits/s.
    pub rate_bps: f64,
    pub delivered_bits: f64,
    pub played_bits: f64,
    pub buffer_bits: f64,
    pub stall: f64,
    pub discarded_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationEvent {
    pub slot: usize,
    pub active_users: usize,
    pub num_vars: usize,
    pub num_constraints: usize,
    pub status: LpStatus,
    pub iterations: usize,
    pub gamma: f64,
    /// NaN when every predicted rate was zero.
    pub gamma_threshold: f64,
    pub planned_stall: f64,
    /// Slots of the extracted plan that both stall and keep data buffered.
    pub plan_overlaps: usize,
    /// Same count on the raw solver output.
    pub lp_overlaps: usize,
    pub solve_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSummary {
    pub id: usize,
    pub arrival_slot: usize,
    pub lifetime_slots: usize,
    pub initial_buffer_bits: f64,
    pub buffer_cap_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub num_bs: usize,
    pub prbs_per_bs: Vec<f64>,
    pub prb_bandwidth_hz: f64,
    pub slot_duration_s: f64,
    pub users: Vec<UserSummary>,
    /// Ordered by slot, then user.
    pub records: Vec<SlotRecord>,
    pub events: Vec<OptimizationEvent>,
}

impl EpisodeTrace {
    /// Last slot in which any user is active, plus one.
    pub fn end_slot(&self) -> usize {
        self.records.last().map_or(0, |r| r.slot + 1)
    }

    pub fn write_records_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "user,slot,serving_bs,omega,rate_bps,delivered_bits,played_bits,buffer_bits,stall,discarded_bits"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.user,
                r.slot,
                r.serving_bs,
                r.omega,
                r.rate_bps,
                r.delivered_bits,
                r.played_bits,
                r.buffer_bits,
                r.stall,
                r.discarded_bits
            )?;
        }
        Ok(())
    }

    /// Everything about each optimization except its wall-clock time.
    pub fn write_events_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "slot,active_users,num_vars,num_constraints,status,iterations,gamma,gamma_threshold,planned_stall,plan_overlaps,lp_overlaps"
        )?;
        for e in &self.events {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                e.slot,
                e.active_users,
                e.num_vars,
                e.num_constraints,
                e.status,
                e.iterations,
                e.gamma,
                e.gamma_threshold,
                e.planned_stall,
                e.plan_overlaps,
                e.lp_overlaps
            )?;
        }
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "slot,active_users,solve_time_s")?;
        for e in &self.events {
            writeln!(w, "{},{},{}", e.slot, e.active_users, e.solve_time_s)?;
        }
        Ok(())
    }
}

/// Episode parameters that do not depend on the user population.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSettings {
    pub policy: Policy,
    pub horizon: usize,
    pub reopt_step: usize,
    pub gamma: Gamma,
    pub error_sigma_db: f64,
    pub formulation: Formulation,
    pub sharing: Sharing,
    pub tolerances: ToleranceSettings,
}

impl EpisodeSettings {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self {
            policy: config.scenario.policy,
            horizon: config.arrm.horizon,
            reopt_step: config.arrm.reopt_step,
            gamma: config.arrm.gamma,
            error_sigma_db: config.arrm.error_sigma_db,
            formulation: config.arrm.formulation,
            sharing: config.baseline.sharing,
            tolerances: ToleranceSettings::default(),
        }
    }
}

/// Independent random streams of one replication: arrivals and forecast
/// errors never share draws, so policies compared under the same seed see
/// the same users.
pub fn episode_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
    arrivals.set_stream(0);
    let mut errors = ChaCha8Rng::seed_from_u64(seed);
    errors.set_stream(1);
    (arrivals, errors)
}

/// Draws the user population from `seed` and simulates it.
pub fn run_episode(config: &ScenarioConfig, seed: u64) -> Result<EpisodeTrace, SimError> {
    let geometry = Geometry::from_config(config)?;
    let (mut arrivals, mut errors) = episode_streams(seed);
    let users = build_users(config, &mut arrivals);
    simulate(&users, &geometry, &EpisodeSettings::from_config(config), &mut errors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ColumnKey {
    Omega(usize, usize),
    Stall(usize, usize),
    Buffer(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum RowKey {
    Buffer(usize, usize),
    Capacity(usize, usize),
}

/// Per-user state while the episode runs.
#[derive(Debug, Clone)]
pub struct ActiveUser {
    pub spec: UserSpec,
    pub serving_bs: Vec<usize>,
    pub gain_db: Vec<f64>,
    /// True per-PRB rate in bits/s over the lifetime.
    pub rate_bps: Vec<f64>,
    pub buffer: f64,
    pub stall_total: f64,
    /// Most recent planned ω per lifetime slot.
    pub plan: Vec<f64>,
    /// First absolute slot not covered by the current plan.
    pub planned_until: usize,
}

pub struct SimulatorState<'a> {
    pub slot: usize,
    pub users: Vec<ActiveUser>,
    geometry: &'a Geometry,
    settings: &'a EpisodeSettings,
    last_opt: Option<usize>,
    columns: HashMap<ColumnKey, BasisStatus>,
    rows: HashMap<RowKey, BasisStatus>,
}

impl<'a> SimulatorState<'a> {
    pub fn new(users: &[UserSpec], geometry: &'a Geometry, settings: &'a EpisodeSettings) -> Result<Self, SimError> {
        let mut active = Vec::with_capacity(users.len());
        for u in users {
            u.validate()?;
            let (serving_bs, gain_db) = geometry.lifetime_channel(u)?;
            let rate_bps = gain_db.iter().map(|&g| achievable_rate_per_prb(g, &geometry.budget)).collect();
            active.push(ActiveUser {
                spec: u.clone(),
                serving_bs,
                gain_db,
                rate_bps,
                buffer: u.initial_buffer_bits,
                stall_total: 0.0,
                plan: vec![0.0; u.lifetime_slots],
                planned_until: u.arrival_slot,
            });
        }
        Ok(Self {
            slot: users.iter().map(|u| u.arrival_slot).min().unwrap_or(0),
            users: active,
            geometry,
            settings,
            last_opt: None,
            columns: HashMap::new(),
            rows: HashMap::new(),
        })
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        let slot = self.slot;
        (0..self.users.len()).filter(move |&k| self.users[k].spec.is_active(slot))
    }

    fn needs_plan(&self) -> bool {
        let slot = self.slot;
        let due = self.last_opt.is_none_or(|t| slot - t >= self.settings.reopt_step);
        due || self.active().any(|k| {
            let u = &self.users[k];
            u.spec.arrival_slot == slot || u.planned_until <= slot
        })
    }

    /// Plans every active user over `min(T, remaining lifetime)` slots using
    /// freshly drawn forecasts, and overwrites their stored allocations.
    pub fn reoptimize<R: rand::Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<(AllocationPlan, OptimizationEvent), SimError> {
        let slot = self.slot;
        let s = self.settings;
        let td = self.geometry.slot_duration_s;
        let members: Vec<usize> = self.active().collect();
        let mut windows = Vec::with_capacity(members.len());
        for &k in &members {
            let u = &self.users[k];
            let offset = slot - u.spec.arrival_slot;
            let n = s.horizon.min(u.spec.lifetime_slots - offset);
            let mut rate_bits = Vec::with_capacity(n);
            for j in 0..n {
                let g = apply_prediction_error(u.gain_db[offset + j], j + 1, s.horizon, s.error_sigma_db, rng)?;
                rate_bits.push(achievable_rate_per_prb(g, &self.geometry.budget) * td);
            }
            windows.push(UserWindow {
                rate_bits,
                video_bits: (0..n).map(|j| u.spec.video_rate_at(slot + j) * td).collect(),
                serving_bs: u.serving_bs[offset..offset + n].to_vec(),
                initial_buffer: u.buffer,
                buffer_cap: u.spec.buffer_cap_bits,
            });
        }
        let mut instance = ProblemInstance {
            users: windows,
            prbs_per_bs: self.geometry.topology.prbs_per_bs.clone(),
            gamma: 0.0,
        };
        let threshold = gamma_threshold(&instance).unwrap_or(f64::NAN);
        instance.gamma = match s.gamma {
            Gamma::Fixed(g) => g,
            Gamma::Auto => auto_gamma(&instance),
        };
        instance.validate()?;

        let solution = match s.formulation {
            Formulation::Buffered => {
                let lp = build_lp_buffered(&instance);
                let (col_keys, row_keys) = self.buffered_keys(&members, &instance);
                let start = Basis {
                    columns: col_keys
                        .iter()
                        .map(|key| {
                            self.columns.get(key).copied().unwrap_or(match key {
                                ColumnKey::Stall(..) => BasisStatus::Basic,
                                _ => BasisStatus::AtLower,
                            })
                        })
                        .collect(),
                    rows: row_keys
                        .iter()
                        .map(|key| {
                            self.rows.get(key).copied().unwrap_or(match key {
                                RowKey::Buffer(..) => BasisStatus::AtLower,
                                RowKey::Capacity(..) => BasisStatus::Basic,
                            })
                        })
                        .collect(),
                };
                let sol = solve_lp_from(&lp, &s.tolerances, &start)?;
                if let Some(b) = &sol.basis {
                    self.columns = col_keys.into_iter().zip(b.columns.iter().copied()).collect();
                    self.rows = row_keys.into_iter().zip(b.rows.iter().copied()).collect();
                }
                (sol, lp.num_vars, lp.num_constraints())
            }
            Formulation::Cumulative => {
                let lp = build_lp_with_stalls(&instance);
                (solve_lp(&lp, &s.tolerances)?, lp.num_vars, lp.num_constraints())
            }
        };
        let (solution, num_vars, num_constraints) = solution;
        if solution.status != LpStatus::Optimal {
            return Err(SimError::Solver { slot, users: members.len(), status: solution.status });
        }
        let plan = extract_plan(&solution, &instance)?;
        let mut plan_overlaps = 0;
        for (i, &k) in members.iter().enumerate() {
            let u = &mut self.users[k];
            let p = &plan.users[i];
            let offset = slot - u.spec.arrival_slot;
            u.plan[offset..offset + p.omega.len()].copy_from_slice(&p.omega);
            u.planned_until = slot + p.omega.len();
            plan_overlaps += p
                .buffer
                .iter()
                .zip(&p.stall)
                .filter(|(z, l)| **z > 1e-6 * u.spec.buffer_cap_bits && **l > 1e-6)
                .count();
        }
        self.last_opt = Some(slot);
        let event = OptimizationEvent {
            slot,
            active_users: members.len(),
            num_vars,
            num_constraints,
            status: solution.status,
            iterations: solution.iteration_count,
            gamma: instance.gamma,
            gamma_threshold: threshold,
            planned_stall: plan.total_stall(),
            plan_overlaps,
            lp_overlaps: plan.lp_overlap_count,
            solve_time_s: solution.solve_time,
        };
        Ok((plan, event))
    }

    fn buffered_keys(&self, members: &[usize], instance: &ProblemInstance) -> (Vec<ColumnKey>, Vec<RowKey>) {
        let slot = self.slot;
        let mut cols = Vec::new();
        let mut rows = Vec::new();
        for (i, &k) in members.iter().enumerate() {
            let id = self.users[k].spec.id;
            let n = instance.users[i].len();
            cols.extend((0..n).map(|t| ColumnKey::Omega(id, slot + t)));
            cols.extend((0..n).map(|t| ColumnKey::Stall(id, slot + t)));
            cols.extend((0..n).map(|t| ColumnKey::Buffer(id, slot + t)));
            rows.extend((0..n).map(|t| RowKey::Buffer(id, slot + t)));
        }
        let m = instance.prbs_per_bs.len();
        rows.extend((0..instance.horizon() * m).map(|i| RowKey::Capacity(slot + i / m, i % m)));
        (cols, rows)
    }

    /// Allocations for the current slot under the configured policy.
    fn allocate(&self, members: &[usize]) -> Vec<f64> {
        let td = self.geometry.slot_duration_s;
        match self.settings.policy {
            Policy::Arrm => members
                .iter()
                .map(|&k| {
                    let u = &self.users[k];
                    u.plan[self.slot - u.spec.arrival_slot]
                })
                .collect(),
            Policy::Baseline => {
                let demands: Vec<SlotDemand> = members
                    .iter()
                    .map(|&k| {
                        let u = &self.users[k];
                        let i = self.slot - u.spec.arrival_slot;
                        SlotDemand {
                            rate_bits: u.rate_bps[i] * td,
                            video_bits: u.spec.video_rate_at(self.slot) * td,
                            buffer_bits: u.buffer,
                            serving_bs: u.serving_bs[i],
                        }
                    })
                    .collect();
                baseline_allocate(&demands, &self.geometry.topology.prbs_per_bs, self.settings.sharing)
            }
        }
    }
}

/// Runs `users` through the episode. `errors` supplies the forecast noise.
pub fn simulate<R: rand::Rng + ?Sized>(
    users: &[UserSpec],
    geometry: &Geometry,
    settings: &EpisodeSettings,
    errors: &mut R,
) -> Result<EpisodeTrace, SimError> {
    let mut state = SimulatorState::new(users, geometry, settings)?;
    let mut trace = EpisodeTrace {
        num_bs: geometry.topology.num_bs(),
        prbs_per_bs: geometry.topology.prbs_per_bs.clone(),
        prb_bandwidth_hz: geometry.budget.prb_bandwidth_hz,
        slot_duration_s: geometry.slot_duration_s,
        users: users
            .iter()
            .map(|u| UserSummary {
                id: u.id,
                arrival_slot: u.arrival_slot,
                lifetime_slots: u.lifetime_slots,
                initial_buffer_bits: u.initial_buffer_bits,
                buffer_cap_bits: u.buffer_cap_bits,
            })
            .collect(),
        records: Vec::new(),
        events: Vec::new(),
    };
    let end = users.iter().map(UserSpec::departure_slot).max().unwrap_or(0);
    let td = geometry.slot_duration_s;
    while state.slot < end {
        let members: Vec<usize> = state.active().collect();
        if !members.is_empty() {
            if settings.policy == Policy::Arrm && state.needs_plan() {
                let (_, event) = state.reoptimize(errors)?;
                trace.events.push(event);
            }
            let omega = state.allocate(&members);
            for (&k, &w) in members.iter().zip(&omega) {
                let slot = state.slot;
                let u = &mut state.users[k];
                let i = slot - u.spec.arrival_slot;
                let step = step_buffer(
                    u.buffer,
                    w,
                    u.rate_bps[i] * td,
                    u.spec.video_rate_at(slot) * td,
                    u.spec.buffer_cap_bits,
                );
                u.buffer = step.buffer;
                u.stall_total += step.stall;
                trace.records.push(SlotRecord {
                    user: u.spec.id,
                    slot,
                    serving_bs: u.serving_bs[i],
                    omega: w,
                    rate_bps: u.rate_bps[i],
                    delivered_bits: step.delivered,
                    played_bits: step.played,
                    buffer_bits: step.buffer,
                    stall: step.stall,
                    discarded_bits: step.discarded,
                });
            }
        }
        state.slot += 1;
    }
    Ok(trace)
}
