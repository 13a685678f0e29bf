//! Parameter sweeps behind the figures and the timing table. Every driver
//! returns plain rows; replications run on the current rayon pool and are
//! collected in a fixed order, so results do not depend on the thread count.

use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arrm::{
    auto_gamma, baseline_allocate, build_lp_buffered, build_lp_with_stalls, ProblemInstance, SlotDemand, UserWindow,
};
use crate::channel::achievable_rate_per_prb;
use crate::config::{ConfigError, Gamma, Policy, ScenarioConfig};
use crate::lp::{solve_lp, LpStatus, ToleranceSettings};
use crate::metrics::{aggregate, user_spectral_efficiency, EpisodeMetrics, Estimate, MetricsError, TraceChecks};
use crate::scenario::{bs_assignment, serving_distance_m, Geometry, UserSpec};
use crate::simulator::{episode_streams, run_episode, simulate, EpisodeSettings, EpisodeTrace, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("timing solve for {k_prime} users over {horizon} slots ended {status}")]
    Timing { k_prime: usize, horizon: usize, status: LpStatus },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Seed of replication `rep` of population `population` under `master`.
/// Policies and error levels evaluated on the same population share seeds.
pub fn replication_seed(master: u64, population: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(population);
    rng.set_word_pos(2 * rep as u128);
    rng.next_u64()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Runs `reps` replications of `config` for the given population index.
pub fn replicate(config: &ScenarioConfig, population: u64, reps: usize) -> Result<Vec<EpisodeMetrics>, SimError> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let trace = run_episode(config, replication_seed(config.scenario.seed, population, rep))?;
            Ok(EpisodeMetrics::from_trace(&trace))
        })
        .collect()
}

/// Aggregated outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub replications: usize,
    pub stall: Estimate,
    pub cell_se: Option<Estimate>,
    pub checks: TraceChecks,
}

impl PointSummary {
    fn from_metrics(m: &[EpisodeMetrics]) -> Result<Self, MetricsError> {
        let r = aggregate(m)?;
        Ok(Self {
            replications: r.replications,
            stall: r.stall,
            cell_se: r.cell_se,
            checks: r.checks,
        })
    }

    const HEADER: &'static str =
        "replications,stall_mean,stall_half_width,cell_se_mean,cell_se_half_width,overlap_slots,solver_overlaps,conservation_error,capacity_excess";

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.replications,
            self.stall.mean,
            self.stall.half_width,
            fmt_opt(self.cell_se.map(|e| e.mean)),
            fmt_opt(self.cell_se.map(|e| e.half_width)),
            self.checks.overlap_slots,
            self.checks.solver_overlaps,
            self.checks.conservation_error,
            self.checks.capacity_excess
        )
    }
}

/// The three policies compared in the stalling and trade-off studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    /// Anticipatory with perfect prediction.
    Arrm,
    /// Anticipatory with the configured forecast error.
    ArrmError,
    Baseline,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::Arrm => "arrm",
            Series::ArrmError => "arrm_error",
            Series::Baseline => "baseline",
        }
    }

    /// Sets policy and forecast error of `config` for this series.
    pub fn apply(self, config: &mut ScenarioConfig) {
        let sigma = config.experiment.error_sigma_db;
        match self {
            Series::Arrm => {
                config.scenario.policy = Policy::Arrm;
                config.arrm.error_sigma_db = 0.0;
            }
            Series::ArrmError => {
                config.scenario.policy = Policy::Arrm;
                config.arrm.error_sigma_db = sigma;
            }
            Series::Baseline => config.scenario.policy = Policy::Baseline,
        }
    }
}

// ---- single-user horizon study ----

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Row {
    pub video_rate_bps: f64,
    pub horizon: usize,
    /// `every_slot` (T_c = 1) or `every_horizon` (T_c = T).
    pub mode: &'static str,
    pub reopt_step: usize,
    pub user_se: Option<f64>,
    pub cell_se: Option<f64>,
    pub stall_fraction: f64,
    pub optimizations: usize,
    pub checks: TraceChecks,
}

/// Single user, perfect prediction: SE against the horizon for re-planning
/// every slot and every `T` slots.
pub fn run_fig2(config: &ScenarioConfig) -> Result<Vec<Fig2Row>, ExperimentError> {
    config.validate()?;
    let lifetime = config.scenario.lifetime_slots;
    let mut jobs = Vec::new();
    for &v in &config.experiment.video_rates_bps {
        for &t in config.experiment.horizons.iter().filter(|&&t| t >= 1 && t <= lifetime) {
            jobs.push((v, t, "every_slot", 1));
            jobs.push((v, t, "every_horizon", t));
        }
    }
    jobs.into_par_iter()
        .map(|(v, t, mode, step)| {
            let mut cfg = config.clone();
            cfg.scenario.num_users = 1;
            cfg.scenario.policy = Policy::Arrm;
            cfg.user.video_rate_bps = v;
            cfg.arrm.horizon = t;
            cfg.arrm.reopt_step = step;
            cfg.arrm.error_sigma_db = 0.0;
            let trace = run_episode(&cfg, replication_seed(cfg.scenario.seed, 1, 0))?;
            let m = EpisodeMetrics::from_trace(&trace);
            Ok(Fig2Row {
                video_rate_bps: v,
                horizon: t,
                mode,
                reopt_step: step,
                user_se: user_spectral_efficiency(&trace, 0),
                cell_se: m.cell_se,
                stall_fraction: m.mean_stall(),
                optimizations: trace.events.len(),
                checks: m.checks,
            })
        })
        .collect()
}

pub fn write_fig2_csv<W: Write>(rows: &[Fig2Row], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "video_rate_bps,horizon,mode,reopt_step,user_se,cell_se,stall_fraction,optimizations,overlap_slots,solver_overlaps,conservation_error,capacity_excess"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.video_rate_bps,
            r.horizon,
            r.mode,
            r.reopt_step,
            fmt_opt(r.user_se),
            fmt_opt(r.cell_se),
            r.stall_fraction,
            r.optimizations,
            r.checks.overlap_slots,
            r.checks.solver_overlaps,
            r.checks.conservation_error,
            r.checks.capacity_excess
        )?;
    }
    Ok(())
}

// ---- stalling against load ----

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub video_rate_bps: f64,
    pub num_users: usize,
    pub series: Series,
    pub summary: PointSummary,
}

fn sweep<P: Send + Sync>(
    points: Vec<P>,
    reps: usize,
    run: impl Fn(&P, usize) -> Result<EpisodeMetrics, SimError> + Send + Sync,
) -> Result<Vec<(P, PointSummary)>, ExperimentError> {
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..reps).map(move |r| (p, r))).collect();
    let results: Vec<EpisodeMetrics> = jobs
        .into_par_iter()
        .map(|(p, r)| run(&points[p], r))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(points.len());
    for (p, chunk) in points.into_iter().zip(results.chunks(reps.max(1))) {
        out.push((p, PointSummary::from_metrics(chunk)?));
    }
    Ok(out)
}

fn episode(cfg: &ScenarioConfig, population: u64, rep: usize) -> Result<EpisodeMetrics, SimError> {
    let trace = run_episode(cfg, replication_seed(cfg.scenario.seed, population, rep))?;
    Ok(EpisodeMetrics::from_trace(&trace))
}

/// Mean stall fraction against the number of users for the three series.
pub fn run_fig3(config: &ScenarioConfig) -> Result<Vec<Fig3Row>, ExperimentError> {
    config.validate()?;
    let mut points = Vec::new();
    for &v in &config.experiment.video_rates_bps {
        for &k in &config.experiment.user_counts {
            for s in [Series::Arrm, Series::ArrmError, Series::Baseline] {
                points.push((v, k, s));
            }
        }
    }
    let reps = config.experiment.replications;
    let out = sweep(points, reps, |&(v, k, s), rep| {
        let mut cfg = config.clone();
        cfg.scenario.num_users = k;
        cfg.user.video_rate_bps = v;
        s.apply(&mut cfg);
        episode(&cfg, k as u64, rep)
    })?;
    Ok(out
        .into_iter()
        .map(|((v, k, s), summary)| Fig3Row { video_rate_bps: v, num_users: k, series: s, summary })
        .collect())
}

pub fn write_fig3_csv<W: Write>(rows: &[Fig3Row], mut w: W) -> io::Result<()> {
    writeln!(w, "video_rate_bps,num_users,series,{}", PointSummary::HEADER)?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.video_rate_bps, r.num_users, r.series.name(), r.summary.csv())?;
    }
    Ok(())
}

/// Smallest user count whose mean stall exceeds `limit`, if any.
pub fn first_count_exceeding(rows: &[Fig3Row], video_rate_bps: f64, series: Series, limit: f64) -> Option<usize> {
    rows.iter()
        .filter(|r| r.video_rate_bps == video_rate_bps && r.series == series && r.summary.stall.mean > limit)
        .map(|r| r.num_users)
        .min()
}

// ---- trade-off over γ ----

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub buffer_cap_bits: f64,
    pub video_rate_bps: f64,
    pub series: Series,
    /// `None` for the baseline.
    pub gamma: Option<f64>,
    pub summary: PointSummary,
}

/// `points` values spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Stalling and cell SE across the γ grid, plus the baseline point, for
/// every buffer size and video rate.
pub fn run_fig4(config: &ScenarioConfig) -> Result<Vec<Fig4Row>, ExperimentError> {
    config.validate()?;
    let e = &config.experiment;
    let grid = log_grid(e.gamma_min, e.gamma_max, e.gamma_points);
    let mut points = Vec::new();
    for &z in &e.buffer_caps_bits {
        for &v in &e.video_rates_bps {
            for s in [Series::Arrm, Series::ArrmError] {
                for &g in &grid {
                    points.push((z, v, s, Some(g)));
                }
            }
            points.push((z, v, Series::Baseline, None));
        }
    }
    let k = config.scenario.num_users as u64;
    let out = sweep(points, e.replications, |&(z, v, s, g), rep| {
        let mut cfg = config.clone();
        cfg.user.buffer_cap_bits = z;
        cfg.user.initial_buffer_bits = cfg.user.initial_buffer_bits.min(z);
        cfg.user.video_rate_bps = v;
        s.apply(&mut cfg);
        if let Some(g) = g {
            cfg.arrm.gamma = Gamma::Fixed(g);
        }
        episode(&cfg, k, rep)
    })?;
    Ok(out
        .into_iter()
        .map(|((z, v, s, g), summary)| Fig4Row {
            buffer_cap_bits: z,
            video_rate_bps: v,
            series: s,
            gamma: g,
            summary,
        })
        .collect())
}

pub fn write_fig4_csv<W: Write>(rows: &[Fig4Row], mut w: W) -> io::Result<()> {
    writeln!(w, "buffer_cap_bits,video_rate_bps,series,gamma,{}", PointSummary::HEADER)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.buffer_cap_bits,
            r.video_rate_bps,
            r.series.name(),
            fmt_opt(r.gamma),
            r.summary.csv()
        )?;
    }
    Ok(())
}

/// Highest SE reachable along the piecewise-linear curve through `(stall,
/// SE)` points while keeping stall at or below `target`. Segments are
/// interpolated linearly in the stall fraction.
pub fn se_at_stall(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut best: Option<f64> = None;
    let mut consider = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
    for (i, &(s, se)) in pts.iter().enumerate() {
        if s <= target {
            consider(se);
            if let Some(&(s2, se2)) = pts.get(i + 1) {
                if s2 > target {
                    consider(se + (se2 - se) * (target - s) / (s2 - s));
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Row {
    pub buffer_cap_bits: f64,
    pub video_rate_bps: f64,
    pub series: Series,
    pub stall_target: f64,
    pub se_at_target: Option<f64>,
    pub baseline_se: Option<f64>,
    /// `None` when either side misses the target.
    pub gain: Option<f64>,
}

/// Reads the trade-off curves at the configured stall target and compares
/// them with the baseline.
pub fn fig5_from_fig4(rows: &[Fig4Row], stall_target: f64) -> Vec<Fig5Row> {
    let mut out = Vec::new();
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.buffer_cap_bits, r.video_rate_bps)) {
            keys.push((r.buffer_cap_bits, r.video_rate_bps));
        }
    }
    for (z, v) in keys {
        let of = |s: Series| {
            rows.iter()
                .filter(move |r| r.buffer_cap_bits == z && r.video_rate_bps == v && r.series == s)
                .filter_map(|r| r.summary.cell_se.map(|se| (r.summary.stall.mean, se.mean)))
                .collect::<Vec<_>>()
        };
        let baseline = se_at_stall(&of(Series::Baseline), stall_target);
        for s in [Series::Arrm, Series::ArrmError] {
            let se = se_at_stall(&of(s), stall_target);
            let gain = match (se, baseline) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
            out.push(Fig5Row {
                buffer_cap_bits: z,
                video_rate_bps: v,
                series: s,
                stall_target,
                se_at_target: se,
                baseline_se: baseline,
                gain,
            });
        }
    }
    out
}

pub fn run_fig5(config: &ScenarioConfig) -> Result<(Vec<Fig4Row>, Vec<Fig5Row>), ExperimentError> {
    let sweep = run_fig4(config)?;
    let table = fig5_from_fig4(&sweep, config.experiment.stall_target);
    Ok((sweep, table))
}

pub fn write_fig5_csv<W: Write>(rows: &[Fig5Row], mut w: W) -> io::Result<()> {
    writeln!(w, "buffer_cap_bits,video_rate_bps,series,stall_target,se_at_target,baseline_se,gain")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.buffer_cap_bits,
            r.video_rate_bps,
            r.series.name(),
            r.stall_target,
            fmt_opt(r.se_at_target),
            fmt_opt(r.baseline_se),
            fmt_opt(r.gain)
        )?;
    }
    Ok(())
}

// ---- solve time ----

/// `k_prime` simultaneously active users at random positions on the road,
/// each planned over `horizon` slots with an empty buffer.
pub fn timing_instance<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    geometry: &Geometry,
    k_prime: usize,
    horizon: usize,
    rng: &mut R,
) -> ProblemInstance {
    let td = geometry.slot_duration_s;
    let step = config.user.speed_mps * td;
    let end = geometry.topology.route_length_m();
    let users = (0..k_prime)
        .map(|_| {
            let start = rng.random_range(0.0..end);
            let mut w = UserWindow {
                rate_bits: Vec::with_capacity(horizon),
                video_bits: vec![config.user.video_rate_bps * td; horizon],
                serving_bs: Vec::with_capacity(horizon),
                initial_buffer: 0.0,
                buffer_cap: config.user.buffer_cap_bits,
            };
            for t in 0..horizon {
                let pos = (start + step * t as f64).min(end);
                let d = serving_distance_m(pos, &geometry.topology, geometry.min_distance_m);
                let gain = geometry.budget.gain_db(d / 1000.0).expect("clamped distance is positive");
                w.rate_bits.push(achievable_rate_per_prb(gain, &geometry.budget) * td);
                w.serving_bs.push(bs_assignment(pos, &geometry.topology));
            }
            w
        })
        .collect();
    let mut instance = ProblemInstance {
        users,
        prbs_per_bs: geometry.topology.prbs_per_bs.clone(),
        gamma: 0.0,
    };
    instance.gamma = match config.arrm.gamma {
        Gamma::Fixed(g) => g,
        Gamma::Auto => auto_gamma(&instance),
    };
    instance
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub k_prime: usize,
    pub horizon: usize,
    pub num_vars: usize,
    pub num_constraints: usize,
    pub buffered_vars: usize,
    pub buffered_constraints: usize,
    pub samples: usize,
    pub median_iterations: f64,
    /// Seconds, cumulative formulation.
    pub median_time_s: f64,
    pub lower_quartile_s: f64,
    pub upper_quartile_s: f64,
    pub buffered_median_s: f64,
    pub baseline_median_s: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    crate::metrics::quantile(&v, 0.5)
}

/// Cold-start solve times of single optimizations. Runs sequentially so
/// that measurements do not compete for cores.
pub fn run_table2(config: &ScenarioConfig) -> Result<Vec<Table2Row>, ExperimentError> {
    config.validate()?;
    let geometry = Geometry::from_config(config).map_err(SimError::from)?;
    let tol = ToleranceSettings::default();
    let e = &config.experiment;
    let mut rows = Vec::new();
    for &k in &e.timing_users {
        for &t in &e.timing_horizons {
            let mut rng = ChaCha8Rng::seed_from_u64(config.scenario.seed);
            rng.set_stream(((k as u64) << 32) | t as u64);
            let (mut times, mut buffered, mut baseline, mut iterations) = (vec![], vec![], vec![], vec![]);
            let (mut dims, mut bdims) = ((0, 0), (0, 0));
            for _ in 0..e.timing_samples {
                let inst = timing_instance(config, &geometry, k, t, &mut rng);
                let lp = build_lp_with_stalls(&inst);
                dims = (lp.num_vars, lp.num_constraints());
                let sol = solve_lp(&lp, &tol).map_err(SimError::from)?;
                if sol.status != LpStatus::Optimal {
                    return Err(ExperimentError::Timing { k_prime: k, horizon: t, status: sol.status });
                }
                times.push(sol.solve_time);
                iterations.push(sol.iteration_count as f64);
                let lp = build_lp_buffered(&inst);
                bdims = (lp.num_vars, lp.num_constraints());
                let sol = solve_lp(&lp, &tol).map_err(SimError::from)?;
                if sol.status != LpStatus::Optimal {
                    return Err(ExperimentError::Timing { k_prime: k, horizon: t, status: sol.status });
                }
                buffered.push(sol.solve_time);
                let demands: Vec<SlotDemand> = inst
                    .users
                    .iter()
                    .map(|u| SlotDemand {
                        rate_bits: u.rate_bits[0],
                        video_bits: u.video_bits[0],
                        buffer_bits: u.initial_buffer,
                        serving_bs: u.serving_bs[0],
                    })
                    .collect();
                let started = Instant::now();
                std::hint::black_box(baseline_allocate(
                    std::hint::black_box(&demands),
                    &inst.prbs_per_bs,
                    config.baseline.sharing,
                ));
                baseline.push(started.elapsed().as_secs_f64());
            }
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            rows.push(Table2Row {
                k_prime: k,
                horizon: t,
                num_vars: dims.0,
                num_constraints: dims.1,
                buffered_vars: bdims.0,
                buffered_constraints: bdims.1,
                samples: e.timing_samples,
                median_iterations: median(&iterations),
                median_time_s: crate::metrics::quantile(&sorted, 0.5),
                lower_quartile_s: crate::metrics::quantile(&sorted, 0.25),
                upper_quartile_s: crate::metrics::quantile(&sorted, 0.75),
                buffered_median_s: median(&buffered),
                baseline_median_s: median(&baseline),
            });
        }
    }
    Ok(rows)
}

/// Problem sizes and pivot counts; identical on every run.
pub fn write_table2_csv<W: Write>(rows: &[Table2Row], mut w: W) -> io::Result<()> {
    writeln!(w, "k_prime,horizon,num_vars,num_constraints,buffered_vars,buffered_constraints,samples,median_iterations")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.k_prime,
            r.horizon,
            r.num_vars,
            r.num_constraints,
            r.buffered_vars,
            r.buffered_constraints,
            r.samples,
            r.median_iterations
        )?;
    }
    Ok(())
}

/// Wall-clock measurements, in milliseconds.
pub fn write_table2_timing_csv<W: Write>(rows: &[Table2Row], mut w: W) -> io::Result<()> {
    writeln!(w, "k_prime,horizon,median_ms,lower_quartile_ms,upper_quartile_ms,buffered_median_ms,baseline_median_ms")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.6}",
            r.k_prime,
            r.horizon,
            r.median_time_s * 1e3,
            r.lower_quartile_s * 1e3,
            r.upper_quartile_s * 1e3,
            r.buffered_median_s * 1e3,
            r.baseline_median_s * 1e3
        )?;
    }
    Ok(())
}

// ---- configured scenario ----

#[derive(Debug, Clone, PartialEq)]
pub struct CustomRun {
    pub seeds: Vec<u64>,
    pub metrics: Vec<EpisodeMetrics>,
    pub summary: PointSummary,
    /// Full trace of the first replication.
    pub first_trace: Option<EpisodeTrace>,
}

/// Runs the configured scenario as is.
pub fn run_custom(config: &ScenarioConfig) -> Result<CustomRun, ExperimentError> {
    config.validate()?;
    let k = config.scenario.num_users as u64;
    let seeds: Vec<u64> = (0..config.experiment.replications)
        .map(|r| replication_seed(config.scenario.seed, k, r))
        .collect();
    let traces: Vec<EpisodeTrace> = seeds
        .par_iter()
        .map(|&s| run_episode(config, s))
        .collect::<Result<_, _>>()?;
    let metrics: Vec<EpisodeMetrics> = traces.iter().map(EpisodeMetrics::from_trace).collect();
    let summary = PointSummary::from_metrics(&metrics)?;
    Ok(CustomRun { seeds, metrics, summary, first_trace: traces.into_iter().next() })
}

pub fn write_custom_csv<W: Write>(run: &CustomRun, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "replication,seed,cell_se,mean_stall,optimizations,overlap_slots,solver_overlaps,conservation_error,capacity_excess"
    )?;
    for (i, (seed, m)) in run.seeds.iter().zip(&run.metrics).enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            i,
            seed,
            fmt_opt(m.cell_se),
            m.mean_stall(),
            m.solve_times_s.len(),
            m.checks.overlap_slots,
            m.checks.solver_overlaps,
            m.checks.conservation_error,
            m.checks.capacity_excess
        )?;
    }
    Ok(())
}

/// Simulates one hand-built user with perfect prediction; handy for
/// single-user studies outside the Poisson population.
pub fn single_user_trace(config: &ScenarioConfig, user: &UserSpec) -> Result<EpisodeTrace, ExperimentError> {
    let geometry = Geometry::from_config(config).map_err(SimError::from)?;
    let mut settings = EpisodeSettings::from_config(config);
    settings.error_sigma_db = 0.0;
    let (_, mut errors) = episode_streams(config.scenario.seed);
    Ok(simulate(std::slice::from_ref(user), &geometry, &settings, &mut errors)?)
}
