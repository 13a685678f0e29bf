//! Cell spectral efficiency, stalling and solve-time statistics.

use thiserror::Error;

use crate::simulator::EpisodeTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("user {0} does not appear in the trace")]
    UnknownUser(usize),
    #[error("nothing to aggregate")]
    Empty,
}

/// Transmitted bits per second per Hz per cell over the whole trace:
/// `Σ ω·S / (M·B·Σ ω)` with realized allocations and true rates. `None` when
/// nothing was allocated.
pub fn cell_spectral_efficiency(trace: &EpisodeTrace) -> Option<f64> {
    let (num, den) = trace
        .records
        .iter()
        .fold((0.0, 0.0), |(n, d), r| (n + r.omega * r.rate_bps, d + r.omega));
    (den > 0.0).then(|| num / (trace.num_bs as f64 * trace.prb_bandwidth_hz * den))
}

/// Same ratio restricted to one user and without the per-cell division.
pub fn user_spectral_efficiency(trace: &EpisodeTrace, user: usize) -> Option<f64> {
    let (num, den) = trace
        .records
        .iter()
        .filter(|r| r.user == user)
        .fold((0.0, 0.0), |(n, d), r| (n + r.omega * r.rate_bps, d + r.omega));
    (den > 0.0).then(|| num / (trace.prb_bandwidth_hz * den))
}

/// Stalled time of `user` as a fraction of its lifetime.
pub fn stalling_fraction(trace: &EpisodeTrace, user: usize) -> Result<f64, MetricsError> {
    let summary = trace
        .users
        .iter()
        .find(|u| u.id == user)
        .ok_or(MetricsError::UnknownUser(user))?;
    let stalled: f64 = trace.records.iter().filter(|r| r.user == user).map(|r| r.stall).sum();
    Ok(stalled / summary.lifetime_slots as f64)
}

/// Consistency checks on one trace. All three values are zero for a correct
/// simulation, up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceChecks {
    /// Largest per-user relative mismatch of
    /// `delivered + ζ = played + final buffer + discarded`.
    pub conservation_error: f64,
    /// Largest amount by which a BS's realized allocation exceeds `N_m`.
    pub capacity_excess: f64,
    /// Realized slots that stall while data stays in the buffer, plus the
    /// same count over all extracted plans.
    pub overlap_slots: usize,
    /// Slots where the raw LP vertex both buffers and stalls, counted only for
    /// solves with γ above the threshold. Informational: such vertices are
    /// alternative optima and are never executed.
    pub solver_overlaps: usize,
}

impl TraceChecks {
    pub fn merge(self, other: TraceChecks) -> TraceChecks {
        TraceChecks {
            conservation_error: self.conservation_error.max(other.conservation_error),
            capacity_excess: self.capacity_excess.max(other.capacity_excess),
            overlap_slots: self.overlap_slots + other.overlap_slots,
            solver_overlaps: self.solver_overlaps + other.solver_overlaps,
        }
    }
}

pub fn check_trace(trace: &EpisodeTrace) -> TraceChecks {
    let mut checks = TraceChecks::default();
    for u in &trace.users {
        let (mut delivered, mut played, mut discarded, mut last) = (0.0, 0.0, 0.0, u.initial_buffer_bits);
        for r in trace.records.iter().filter(|r| r.user == u.id) {
            delivered += r.delivered_bits;
            played += r.played_bits;
            discarded += r.discarded_bits;
            last = r.buffer_bits;
            if r.buffer_bits > 1e-6 * u.buffer_cap_bits && r.stall > 1e-6 {
                checks.overlap_slots += 1;
            }
        }
        let lhs = delivered + u.initial_buffer_bits;
        let rhs = played + last + discarded;
        let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        checks.conservation_error = checks.conservation_error.max(err);
    }
    let mut load = std::collections::BTreeMap::new();
    for r in &trace.records {
        *load.entry((r.slot, r.serving_bs)).or_insert(0.0) += r.omega;
    }
    for ((_, m), total) in load {
        checks.capacity_excess = checks.capacity_excess.max(total - trace.prbs_per_bs[m]);
    }
    checks.overlap_slots += trace.events.iter().map(|e| e.plan_overlaps).sum::<usize>();
    checks.solver_overlaps = trace
        .events
        .iter()
        .filter(|e| e.gamma > e.gamma_threshold)
        .map(|e| e.lp_overlaps)
        .sum();
    checks
}

/// Metrics of a single replication.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub cell_se: Option<f64>,
    pub stall_fractions: Vec<f64>,
    pub solve_times_s: Vec<f64>,
    pub checks: TraceChecks,
}

impl EpisodeMetrics {
    pub fn from_trace(trace: &EpisodeTrace) -> Self {
        Self {
            cell_se: cell_spectral_efficiency(trace),
            stall_fractions: trace
                .users
                .iter()
                .map(|u| stalling_fraction(trace, u.id).expect("user taken from the trace"))
                .collect(),
            solve_times_s: trace.events.iter().map(|e| e.solve_time_s).collect(),
            checks: check_trace(trace),
        }
    }

    /// Mean stall fraction over users; 0 for an empty population.
    pub fn mean_stall(&self) -> f64 {
        if self.stall_fractions.is_empty() {
            0.0
        } else {
            self.stall_fractions.iter().sum::<f64>() / self.stall_fractions.len() as f64
        }
    }
}

/// Mean with a normal-approximation 95 % half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let constant = values.iter().all(|&v| v == values[0]);
        let half_width = if n < 2 || constant {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        Some(Self { mean, half_width, samples: n })
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSummary {
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub count: usize,
}

impl TimeSummary {
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            median: quantile(&v, 0.5),
            lower_quartile: quantile(&v, 0.25),
            upper_quartile: quantile(&v, 0.75),
            count: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub replications: usize,
    /// Over replications with a defined SE.
    pub cell_se: Option<Estimate>,
    /// Per-replication mean stall fraction.
    pub stall: Estimate,
    pub solve_time: Option<TimeSummary>,
    pub checks: TraceChecks,
}

/// Combines replications. The result does not depend on their order.
pub fn aggregate(reports: &[EpisodeMetrics]) -> Result<MetricsReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    // Sort copies so that summation order, and hence rounding, is fixed.
    let mut se: Vec<f64> = reports.iter().filter_map(|r| r.cell_se).collect();
    se.sort_by(f64::total_cmp);
    let mut stall: Vec<f64> = reports.iter().map(EpisodeMetrics::mean_stall).collect();
    stall.sort_by(f64::total_cmp);
    let times: Vec<f64> = reports.iter().flat_map(|r| r.solve_times_s.iter().copied()).collect();
    Ok(MetricsReport {
        replications: reports.len(),
        cell_se: Estimate::from_samples(&se),
        stall: Estimate::from_samples(&stall).expect("at least one replication"),
        solve_time: TimeSummary::from_samples(&times),
        checks: reports.iter().map(|r| r.checks).fold(TraceChecks::default(), TraceChecks::merge),
    })
}
