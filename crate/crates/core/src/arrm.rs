//! LP formulations of anticipatory allocation, plan extraction, the γ
//! threshold and the non-anticipatory baseline.
//!
//! Bit quantities are passed to the solver in megabits so that absolute
//! solver tolerances stay meaningful.

use thiserror::Error;

use crate::config::Sharing;
use crate::lp::{LinearProgram, LpSolution, LpStatus, Sense};

const MEGABIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrmError {
    #[error("solver returned {0}, no plan available")]
    NotOptimal(LpStatus),
    #[error("threshold undefined: every rate in the instance is zero")]
    ThresholdUndefined,
    #[error("solution has {got} values, instance expects {expected}")]
    LayoutMismatch { expected: String, got: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Inputs for one user over its optimization window. Slot 0 is the first
/// slot being planned.
#[derive(Debug, Clone, PartialEq)]
pub struct UserWindow {
    /// S^d, bits one PRB carries in each slot.
    pub rate_bits: Vec<f64>,
    /// V^d, bits played in each slot.
    pub video_bits: Vec<f64>,
    pub serving_bs: Vec<usize>,
    /// ζ, buffer level before slot 0.
    pub initial_buffer: f64,
    /// Z
    pub buffer_cap: f64,
}

impl UserWindow {
    pub fn len(&self) -> usize {
        self.rate_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate_bits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub users: Vec<UserWindow>,
    /// N_m
    pub prbs_per_bs: Vec<f64>,
    pub gamma: f64,
}

impl ProblemInstance {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Longest user window, T.
    pub fn horizon(&self) -> usize {
        self.users.iter().map(UserWindow::len).max().unwrap_or(0)
    }

    /// Σ_k T_k, the number of (k, t) pairs.
    pub fn num_pairs(&self) -> usize {
        self.users.iter().map(UserWindow::len).sum()
    }

    pub fn validate(&self) -> Result<(), ArrmError> {
        let bad = |m: String| Err(ArrmError::InvalidInstance(m));
        if self.prbs_per_bs.iter().any(|&n| !(n > 0.0)) {
            return bad("PRB counts must be positive".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {}", self.gamma));
        }
        for (k, u) in self.users.iter().enumerate() {
            let n = u.len();
            if u.video_bits.len() != n || u.serving_bs.len() != n {
                return bad(format!("user {k}: window sequences differ in length"));
            }
            if u.rate_bits.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
                return bad(format!("user {k}: rates must be finite and non-negative"));
            }
            if u.video_bits.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad(format!("user {k}: play-out bits must be positive"));
            }
            if u.serving_bs.iter().any(|&m| m >= self.prbs_per_bs.len()) {
                return bad(format!("user {k}: serving BS out of range"));
            }
            if !(u.initial_buffer >= 0.0 && u.initial_buffer <= u.buffer_cap) {
                return bad(format!(
                    "user {k}: initial buffer {} outside [0, {}]",
                    u.initial_buffer, u.buffer_cap
                ));
            }
        }
        Ok(())
    }
}

/// Column positions of each user's variable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// ω only, user-major.
    NoStalls,
    /// ω then ℓ per user.
    Stalls,
    /// ω, ℓ then z per user.
    Buffered,
}

impl Layout {
    fn blocks(self) -> usize {
        match self {
            Layout::NoStalls => 1,
            Layout::Stalls => 2,
            Layout::Buffered => 3,
        }
    }

    pub fn num_vars(self, instance: &ProblemInstance) -> usize {
        self.blocks() * instance.num_pairs()
    }

    /// Offset of user `k`'s first ω column.
    pub fn user_offset(self, instance: &ProblemInstance, k: usize) -> usize {
        self.blocks() * instance.users[..k].iter().map(UserWindow::len).sum::<usize>()
    }

    fn from_len(instance: &ProblemInstance, len: usize) -> Option<Self> {
        let pairs = instance.num_pairs();
        [Layout::NoStalls, Layout::Stalls, Layout::Buffered]
            .into_iter()
            .find(|l| l.blocks() * pairs == len)
    }
}

fn capacity_rows(instance: &ProblemInstance, layout: Layout, lp: &mut LinearProgram) {
    let horizon = instance.horizon();
    let mut rows = vec![Vec::new(); horizon * instance.prbs_per_bs.len()];
    for (k, u) in instance.users.iter().enumerate() {
        let base = layout.user_offset(instance, k);
        for t in 0..u.len() {
            rows[t * instance.prbs_per_bs.len() + u.serving_bs[t]].push((base + t, 1.0));
        }
    }
    for (i, terms) in rows.into_iter().enumerate() {
        lp.add_constraint(terms, Sense::Le, instance.prbs_per_bs[i % instance.prbs_per_bs.len()]);
    }
}

/// Cumulative buffer rows `0 ≤ Σ_{i≤t}(ω S + ℓ V − V) + ζ ≤ Z`, emitted as a
/// `≥` row followed by a `≤` row per slot.
fn cumulative_rows(instance: &ProblemInstance, layout: Layout, lp: &mut LinearProgram) {
    for (k, u) in instance.users.iter().enumerate() {
        let base = layout.user_offset(instance, k);
        let n = u.len();
        let mut terms = Vec::new();
        let mut played = 0.0;
        for t in 0..n {
            if u.rate_bits[t] > 0.0 {
                terms.push((base + t, u.rate_bits[t] * MEGABIT));
            }
            if layout == Layout::Stalls {
                terms.push((base + n + t, u.video_bits[t] * MEGABIT));
            }
            played += u.video_bits[t];
            let shift = (played - u.initial_buffer) * MEGABIT;
            lp.add_constraint(terms.clone(), Sense::Ge, shift);
            lp.add_constraint(terms.clone(), Sense::Le, u.buffer_cap * MEGABIT + shift);
        }
    }
}

/// Stall-free program: minimize Σω subject to the cumulative buffer bounds and
/// per-BS capacity. Variables ω only.
pub fn build_lp_no_stalls(instance: &ProblemInstance) -> LinearProgram {
    let n = Layout::NoStalls.num_vars(instance);
    let mut lp = LinearProgram::with_objective(vec![1.0; n]);
    cumulative_rows(instance, Layout::NoStalls, &mut lp);
    capacity_rows(instance, Layout::NoStalls, &mut lp);
    lp
}

/// Stall-aware program: minimize Σ(ω + γℓ). `2·ΣT_k` variables and
/// `2·ΣT_k + T·M` rows.
pub fn build_lp_with_stalls(instance: &ProblemInstance) -> LinearProgram {
    let mut objective = Vec::with_capacity(Layout::Stalls.num_vars(instance));
    for u in &instance.users {
        objective.extend(std::iter::repeat_n(1.0, u.len()));
        objective.extend(std::iter::repeat_n(instance.gamma, u.len()));
    }
    let mut lp = LinearProgram::with_objective(objective);
    cumulative_rows(instance, Layout::Stalls, &mut lp);
    capacity_rows(instance, Layout::Stalls, &mut lp);
    lp
}

/// Same optimum as [`build_lp_with_stalls`] with the buffer levels kept as
/// boxed variables `z ∈ [0, Z]` linked by `z_t − z_{t−1} − Sω − Vℓ = −V`.
/// Every row has at most four entries.
pub fn build_lp_buffered(instance: &ProblemInstance) -> LinearProgram {
    let mut objective = Vec::with_capacity(Layout::Buffered.num_vars(instance));
    for u in &instance.users {
        objective.extend(std::iter::repeat_n(1.0, u.len()));
        objective.extend(std::iter::repeat_n(instance.gamma, u.len()));
        objective.extend(std::iter::repeat_n(0.0, u.len()));
    }
    let mut lp = LinearProgram::with_objective(objective);
    for (k, u) in instance.users.iter().enumerate() {
        let base = Layout::Buffered.user_offset(instance, k);
        let n = u.len();
        for t in 0..n {
            let z = base + 2 * n + t;
            lp.set_bounds(z, 0.0, u.buffer_cap * MEGABIT);
            let mut terms = vec![(z, 1.0)];
            if t > 0 {
                terms.push((z - 1, -1.0));
            }
            if u.rate_bits[t] > 0.0 {
                terms.push((base + t, -u.rate_bits[t] * MEGABIT));
            }
            terms.push((base + n + t, -u.video_bits[t] * MEGABIT));
            let carried = if t == 0 { u.initial_buffer } else { 0.0 };
            lp.add_constraint(terms, Sense::Eq, (carried - u.video_bits[t]) * MEGABIT);
        }
    }
    capacity_rows(instance, Layout::Buffered, &mut lp);
    lp
}

/// Allocation, stall and buffer trajectory for one user's window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserPlan {
    pub omega: Vec<f64>,
    pub stall: Vec<f64>,
    /// Buffer level at the end of each slot, bits.
    pub buffer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub users: Vec<UserPlan>,
    pub feasible: bool,
    pub objective_value: f64,
    /// Σℓ as returned by the solver, before the closed forms are applied.
    pub lp_stall_total: f64,
    /// Number of (k, t) where the solver's own cumulative buffer and ℓ are
    /// both positive.
    pub lp_overlap_count: usize,
}

impl AllocationPlan {
    pub fn total_omega(&self) -> f64 {
        self.users.iter().flat_map(|u| &u.omega).sum()
    }

    pub fn total_stall(&self) -> f64 {
        self.users.iter().flat_map(|u| &u.stall).sum()
    }
}

/// Buffer level and stall fraction after playing one slot, without the cap.
pub fn buffer_step(z_prev: f64, delivered: f64, video: f64) -> (f64, f64) {
    let available = delivered + z_prev;
    ((available - video).max(0.0), (video - available).max(0.0) / video)
}

/// Turns an optimal solution of any of the three builders into a plan. The
/// buffer and stall trajectories are rebuilt from ω with the closed forms
/// `z = max(ωS + z_prev − V, 0)` and `ℓ = max(V − ωS − z_prev, 0)/V`, so a slot
/// never both stalls and leaves data in the buffer.
pub fn extract_plan(solution: &LpSolution, instance: &ProblemInstance) -> Result<AllocationPlan, ArrmError> {
    if solution.status != LpStatus::Optimal {
        return Err(ArrmError::NotOptimal(solution.status));
    }
    let x = solution.x.as_ref().ok_or(ArrmError::NotOptimal(solution.status))?;
    let layout = Layout::from_len(instance, x.len()).ok_or_else(|| ArrmError::LayoutMismatch {
        expected: format!("a multiple of {} up to three blocks", instance.num_pairs()),
        got: x.len(),
    })?;
    let mut users = Vec::with_capacity(instance.num_users());
    let mut lp_stall_total = 0.0;
    let mut lp_overlap_count = 0;
    let mut objective_value = 0.0;
    for (k, u) in instance.users.iter().enumerate() {
        let base = layout.user_offset(instance, k);
        let n = u.len();
        let mut plan = UserPlan::default();
        let mut z = u.initial_buffer;
        let mut lp_level = u.initial_buffer;
        for t in 0..n {
            let omega = x[base + t].max(0.0);
            let (next, stall) = buffer_step(z, omega * u.rate_bits[t], u.video_bits[t]);
            z = next.min(u.buffer_cap);
            plan.omega.push(omega);
            plan.stall.push(stall);
            plan.buffer.push(z);
            objective_value += omega + instance.gamma * stall;

            if layout != Layout::NoStalls {
                let lp_stall = x[base + n + t].max(0.0);
                lp_stall_total += lp_stall;
                lp_level += omega * u.rate_bits[t] + (lp_stall - 1.0) * u.video_bits[t];
                if lp_level > 1e-6 * u.buffer_cap && lp_stall > 1e-6 {
                    lp_overlap_count += 1;
                }
            }
        }
        users.push(plan);
    }
    Ok(AllocationPlan {
        users,
        feasible: true,
        objective_value,
        lp_stall_total,
        lp_overlap_count,
    })
}

/// γ* = max V/S over pairs with S > 0.
pub fn gamma_threshold(instance: &ProblemInstance) -> Result<f64, ArrmError> {
    instance
        .users
        .iter()
        .flat_map(|u| u.rate_bits.iter().zip(&u.video_bits))
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, v)| v / s)
        .reduce(f64::max)
        .ok_or(ArrmError::ThresholdUndefined)
}

/// Default weight: ten times the threshold, clamped into `[1, 1e4]`. Instances
/// with no usable rate get the upper end.
pub fn auto_gamma(instance: &ProblemInstance) -> f64 {
    match gamma_threshold(instance) {
        Ok(g) => (10.0 * g).clamp(1.0, 1e4),
        Err(_) => 1e4,
    }
}

/// Current-slot inputs of one user for the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDemand {
    pub rate_bits: f64,
    pub video_bits: f64,
    pub buffer_bits: f64,
    pub serving_bs: usize,
}

/// Non-anticipatory allocation: each user asks for just enough PRBs to play
/// the current slot; overloaded BSs share according to `sharing`.
pub fn baseline_allocate(demands: &[SlotDemand], prbs_per_bs: &[f64], sharing: Sharing) -> Vec<f64> {
    let want: Vec<f64> = demands
        .iter()
        .map(|d| {
            let cap = prbs_per_bs[d.serving_bs];
            let deficit = (d.video_bits - d.buffer_bits).max(0.0);
            if deficit == 0.0 {
                0.0
            } else if d.rate_bits > 0.0 {
                (deficit / d.rate_bits).min(cap)
            } else {
                cap
            }
        })
        .collect();
    let mut grant = vec![0.0; demands.len()];
    for (m, &cap) in prbs_per_bs.iter().enumerate() {
        let members: Vec<usize> = (0..demands.len()).filter(|&k| demands[k].serving_bs == m).collect();
        let total: f64 = members.iter().map(|&k| want[k]).sum();
        match sharing {
            _ if total <= cap => members.iter().for_each(|&k| grant[k] = want[k]),
            Sharing::Proportional => {
                let f = cap / total;
                members.iter().for_each(|&k| grant[k] = want[k] * f);
            }
            Sharing::Greedy => {
                let mut left = cap;
                for &k in &members {
                    grant[k] = want[k].min(left);
                    left -= grant[k];
                }
            }
        }
    }
    grant
}
