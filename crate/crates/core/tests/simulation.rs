mod common;

use ahsps_core::simulator::{simulate_counts, DeadTimeMode};
use ahsps_core::{
    accumulate_counts, read_raw, simulate_run_with, write_raw, CountTotals, DetectorConfig,
    Execution, RecordSet, RunOptions, SourceConfig,
};
use common::enumerate;
use proptest::prelude::*;

const A: DetectorConfig = DetectorConfig::BENCH_A;
const B: DetectorConfig = DetectorConfig::BENCH_B;

fn opts(execution: Execution, timestamps: bool) -> RunOptions {
    RunOptions {
        execution,
        timestamps,
        ..RunOptions::default()
    }
}

fn within(k: u64, n: u64, p: f64, z: f64) -> bool {
    let mean = n as f64 * p;
    (k as f64 - mean).abs() <= z * (mean * (1.0 - p)).sqrt()
}

#[test]
fn click_marginals_follow_the_model() {
    // high efficiencies so the two-photon branch matters
    let a = DetectorConfig::new(0.7, 0.02).unwrap();
    let b = DetectorConfig::new(0.5, 0.01).unwrap();
    let src = SourceConfig {
        coupling_p1: 0.5,
        gate_acceptance: 0.9,
        ..SourceConfig::default()
    }
    .with_pair_rate(4e7);
    let n = 2_000_000;
    let s = simulate_counts(&src, &a, &b, n, 31, &RunOptions::default()).unwrap();
    let probs = s.stats.as_array();
    assert!(s.stats.p2 > 0.01);
    let o = enumerate(probs, (0.7 * 0.9, 0.5 * 0.9), (0.02, 0.01));
    let t = s.tallies;
    assert_eq!(t.n_t, n);
    assert!(within(t.n_a, n, o.p_a, 4.0), "{t:?} {o:?}");
    assert!(within(t.n_b, n, o.p_b, 4.0), "{t:?} {o:?}");
    assert!(within(t.n_ab, n, o.p_ab, 4.0), "{t:?} {o:?}");
}

#[test]
fn discarded_fraction_matches_renewal_law() {
    let src = SourceConfig {
        pump_power: 49e-3,
        ..SourceConfig::default()
    };
    let n = 2_000_000u64;
    let s = simulate_counts(&src, &A, &B, n, 8, &RunOptions::default()).unwrap();
    let t = s.tallies;
    // any-click probability per accepted trigger, and triggers per window
    let c = (t.n_a + t.n_b - t.n_ab) as f64 / t.n_t as f64;
    let lambda = s.herald_rate * src.dead_time;
    let expected = c * lambda / (1.0 + c * lambda);
    let var = c * lambda + c * lambda * lambda - (c * lambda).powi(2);
    let offered = s.n_triggers_offered as f64;
    let sigma = (n as f64 * var).sqrt() * n as f64 / offered.powi(2);
    let got = s.discard_fraction();
    assert!(expected > 0.2);
    assert!(
        (got - expected).abs() < 5.0 * sigma + 1e-3,
        "{got} vs {expected} ± {sigma}"
    );
}

#[test]
fn strategies_produce_identical_records() {
    let src = SourceConfig::default();
    let seq = simulate_run_with(
        &src,
        &A,
        &B,
        300_000,
        17,
        &opts(Execution::Sequential, true),
    )
    .unwrap();
    let par =
        simulate_run_with(&src, &A, &B, 300_000, 17, &opts(Execution::Parallel, true)).unwrap();
    assert_eq!(seq.records, par.records);
    assert_eq!(seq.summary, par.summary);
    let other = simulate_run_with(
        &src,
        &A,
        &B,
        300_000,
        18,
        &opts(Execution::Sequential, true),
    )
    .unwrap();
    assert_ne!(seq.records, other.records);
}

#[test]
fn longer_runs_extend_shorter_ones() {
    let src = SourceConfig::default();
    let short =
        simulate_run_with(&src, &A, &B, 10_000, 3, &opts(Execution::default(), true)).unwrap();
    let long =
        simulate_run_with(&src, &A, &B, 50_000, 3, &opts(Execution::default(), true)).unwrap();
    assert_eq!(short.records.clicks(), &long.records.clicks()[..10_000]);
    assert_eq!(
        short.records.timestamps_ns().unwrap(),
        &long.records.timestamps_ns().unwrap()[..10_000]
    );
}

#[test]
fn timestamps_increase_and_respect_dead_time() {
    let src = SourceConfig {
        pump_power: 49e-3,
        ..SourceConfig::default()
    };
    let sim =
        simulate_run_with(&src, &A, &B, 200_000, 4, &opts(Execution::default(), true)).unwrap();
    let ts = sim.records.timestamps_ns().unwrap();
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
    let dead = (src.dead_time * 1e9) as u64;
    let mut last_click: Option<u64> = None;
    for (k, c) in sim.records.clicks().iter().enumerate() {
        if let Some(t0) = last_click {
            if ts[k] < t0 + dead {
                panic!("trigger {k} accepted inside a dead window");
            }
        }
        if c.any() {
            last_click = Some(ts[k]);
        }
    }
}

#[test]
fn naive_mode_keeps_every_trigger() {
    let src = SourceConfig {
        pump_power: 49e-3,
        ..SourceConfig::default()
    };
    let run = |mode| {
        let o = RunOptions {
            dead_time_mode: mode,
            ..RunOptions::default()
        };
        simulate_counts(&src, &A, &B, 500_000, 12, &o).unwrap()
    };
    let naive = run(DeadTimeMode::Naive);
    assert_eq!(naive.n_triggers_offered, naive.n_triggers_accepted);
    let gated = run(DeadTimeMode::Discard);
    assert!(gated.n_triggers_offered > gated.n_triggers_accepted);
    assert!((naive.tallies.n_a as f64) < 0.95 * gated.tallies.n_a as f64);
}

#[test]
fn simulated_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.raw");
    let sim = simulate_run_with(
        &SourceConfig::default(),
        &A,
        &B,
        123_457,
        1,
        &opts(Execution::default(), true),
    )
    .unwrap();
    write_raw(&sim.records, &path).unwrap();
    let back = read_raw(&path).unwrap();
    assert_eq!(back, sim.records);
    assert_eq!(
        accumulate_counts(&back, Execution::Sequential),
        sim.summary.tallies
    );
}

proptest! {
    #[test]
    fn counts_do_not_depend_on_partition(
        bits in proptest::collection::vec(0u8..4, 0..3000),
        cuts in proptest::collection::vec(0usize..3000, 0..6),
    ) {
        let set = RecordSet::from_pairs(bits.iter().map(|&b| (b & 1 != 0, b & 2 != 0)));
        let whole = accumulate_counts(&set, Execution::Sequential);
        prop_assert_eq!(whole, accumulate_counts(&set, Execution::Parallel));

        let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c.min(bits.len())).collect();
        cuts.push(0);
        cuts.push(bits.len());
        cuts.sort_unstable();
        let merged = cuts
            .windows(2)
            .map(|w| CountTotals::from_clicks(&set.clicks()[w[0]..w[1]]))
            .fold(CountTotals::default(), |x, y| x + y);
        prop_assert_eq!(whole, merged);
        prop_assert!(whole.validate().is_ok());
    }
}
