use arrm_core::arrm::{build_lp_with_stalls, ProblemInstance, UserWindow};
use arrm_core::config::{Formulation, Gamma, Policy, ScenarioConfig};
use arrm_core::lp::{solve_lp, LpStatus, ToleranceSettings};
use arrm_core::metrics::{cell_spectral_efficiency, check_trace, EpisodeMetrics};
use arrm_core::simulator::{run_episode, EpisodeTrace};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn small_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        1usize..=6,
        8usize..=30,
        prop_oneof![Just(Policy::Arrm), Just(Policy::Baseline)],
        prop_oneof![Just(Gamma::Auto), (0.5f64..20.0).prop_map(Gamma::Fixed)],
        prop_oneof![Just(0.0), 1.0f64..10.0],
        prop_oneof![Just(46.0), -10.0f64..20.0],
        0.5e6f64..8e6,
        prop_oneof![Just(Formulation::Buffered), Just(Formulation::Cumulative)],
    )
        .prop_flat_map(|(k, lifetime, policy, gamma, sigma, tx, video, formulation)| {
            (1usize..=lifetime).prop_flat_map(move |horizon| {
                (1usize..=horizon).prop_map(move |step| {
                    let mut c = ScenarioConfig::default();
                    c.scenario.num_users = k;
                    c.scenario.lifetime_slots = lifetime;
                    c.scenario.policy = policy;
                    c.arrm.horizon = horizon;
                    c.arrm.reopt_step = step;
                    c.arrm.gamma = gamma;
                    c.arrm.error_sigma_db = sigma;
                    c.arrm.formulation = formulation;
                    c.channel.tx_power_dbm = tx;
                    c.user.video_rate_bps = video;
                    c.topology.prbs_per_bs = 4.0;
                    c
                })
            })
        })
}

/// Parsed rows of the records CSV, keyed by column name.
fn parse_records(trace: &EpisodeTrace) -> Vec<BTreeMap<String, f64>> {
    let mut bytes = Vec::new();
    trace.write_records_csv(&mut bytes).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(|v| v.parse().unwrap())).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn episodes_conserve_bits_and_respect_capacity(config in small_config(), seed in any::<u64>()) {
        let trace = run_episode(&config, seed).unwrap();
        let checks = check_trace(&trace);
        prop_assert!(checks.conservation_error < 1e-9, "{checks:?}");
        prop_assert!(checks.capacity_excess < 1e-6, "{checks:?}");
        prop_assert_eq!(checks.overlap_slots, 0);
        prop_assert!(trace.events.iter().all(|e| e.status == LpStatus::Optimal));
        for u in &trace.users {
            let slots: Vec<usize> = trace.records.iter().filter(|r| r.user == u.id).map(|r| r.slot).collect();
            let expected: Vec<usize> = (u.arrival_slot..u.arrival_slot + u.lifetime_slots).collect();
            prop_assert_eq!(slots, expected);
        }
        for r in &trace.records {
            prop_assert!(r.omega >= -1e-9 && (0.0..=1.0 + 1e-12).contains(&r.stall));
            prop_assert!(r.buffer_bits <= config.user.buffer_cap_bits * (1.0 + 1e-12));
        }
    }

    #[test]
    fn metrics_match_the_records_file(config in small_config(), seed in any::<u64>()) {
        let trace = run_episode(&config, seed).unwrap();
        let rows = parse_records(&trace);
        let (mut bits, mut prbs) = (0.0, 0.0);
        let mut stall: BTreeMap<u64, f64> = BTreeMap::new();
        for row in &rows {
            bits += row["omega"] * row["rate_bps"];
            prbs += row["omega"];
            *stall.entry(row["user"] as u64).or_default() += row["stall"];
        }
        let metrics = EpisodeMetrics::from_trace(&trace);
        match cell_spectral_efficiency(&trace) {
            Some(se) => {
                let ours = bits / (2.0 * 180e3 * prbs);
                prop_assert!((se - ours).abs() <= 1e-9 * ours, "{se} vs {ours}");
            }
            None => prop_assert!(prbs == 0.0),
        }
        for (u, fraction) in trace.users.iter().zip(&metrics.stall_fractions) {
            let ours = stall[&(u.id as u64)] / config.scenario.lifetime_slots as f64;
            prop_assert!((fraction - ours).abs() <= 1e-9);
        }
    }
}

#[test]
fn same_seed_gives_the_same_trace() {
    let mut config = ScenarioConfig::default();
    config.scenario.num_users = 8;
    config.arrm.error_sigma_db = 5.0;
    let a = run_episode(&config, 42).unwrap();
    let b = run_episode(&config, 42).unwrap();
    assert_eq!(a.records, b.records);
    let c = run_episode(&config, 43).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn one_shot_plan_with_perfect_prediction_is_lp_optimal() {
    // One user, one optimization over the whole lifetime and no forecast
    // error: what the simulator executes must cost exactly the optimum of
    // the program rebuilt from its own records.
    for (tx, video, gamma) in [(46.0, 6e6, 1.5), (0.0, 4e6, 3.0), (10.0, 2.5e6, 1.2)] {
        let mut config = ScenarioConfig::default();
        config.scenario.num_users = 1;
        config.arrm.horizon = 100;
        config.arrm.reopt_step = 100;
        config.arrm.gamma = Gamma::Fixed(gamma);
        config.channel.tx_power_dbm = tx;
        config.user.video_rate_bps = video;
        config.topology.prbs_per_bs = 1.5;
        let trace = run_episode(&config, 9).unwrap();
        assert_eq!(trace.events.len(), 1);
        let td = config.scenario.slot_duration_s;
        let instance = ProblemInstance {
            users: vec![UserWindow {
                rate_bits: trace.records.iter().map(|r| r.rate_bps * td).collect(),
                video_bits: vec![video * td; trace.records.len()],
                serving_bs: trace.records.iter().map(|r| r.serving_bs).collect(),
                initial_buffer: 0.0,
                buffer_cap: config.user.buffer_cap_bits,
            }],
            prbs_per_bs: vec![1.5, 1.5],
            gamma,
        };
        let lp = solve_lp(&build_lp_with_stalls(&instance), &ToleranceSettings::default()).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        let realized: f64 = trace.records.iter().map(|r| r.omega + gamma * r.stall).sum();
        assert!(
            (realized - lp.objective_value).abs() <= 1e-6 * (1.0 + lp.objective_value),
            "tx {tx}: realized {realized} vs optimum {}",
            lp.objective_value
        );
    }
}
