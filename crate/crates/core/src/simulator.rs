//! Monte Carlo generation of per-trigger detection records.
//!
//! Heralding signals arrive as a Poisson process. Each offered trigger gets
//! its detection bits from a ChaCha8 stream keyed by the run seed, with one
//! stream per block of [`BLOCK_LEN`] trigger indices, so blocks can be drawn
//! in any order or in parallel. A single sequential pass then applies the
//! gate-out rule: a trigger is kept only when both bench detectors are
//! outside their dead windows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::CountTotals;
use crate::exec::Execution;
use crate::model::{
    heralding_rate, photon_statistics, DetectorConfig, PhotonStatistics, SourceConfig,
};
use crate::record::{Clicks, RecordSet, TriggerRecord};

/// Offered triggers per RNG stream.
pub const BLOCK_LEN: u64 = 4096;

/// Blocks generated per round before the sequential filter runs.
const BLOCKS_PER_ROUND: u64 = 64;

/// Draws the detection bits for one trigger.
///
/// The photon number is drawn from {0, 1, 2}; every photon picks an arm of
/// the 50/50 splitter and is detected with that arm's efficiency. A dark
/// count then combines with the photon outcome exclusively: the detector
/// reports a click when exactly one of (photon detected, dark count) holds.
#[inline]
pub fn sample_clicks<R: Rng + ?Sized>(
    stats: &PhotonStatistics,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    rng: &mut R,
) -> Clicks {
    let u: f64 = rng.random();
    let photons = if u < stats.p0 {
        0
    } else if u < stats.p0 + stats.p1 {
        1
    } else {
        2
    };
    let mut hit_a = false;
    let mut hit_b = false;
    for _ in 0..photons {
        let to_a: bool = rng.random();
        let eta = if to_a {
            det_a.efficiency
        } else {
            det_b.efficiency
        };
        if rng.random::<f64>() < eta {
            if to_a {
                hit_a = true;
            } else {
                hit_b = true;
            }
        }
    }
    let dark_a = rng.random::<f64>() < det_a.dark_count_prob;
    let dark_b = rng.random::<f64>() < det_b.dark_count_prob;
    Clicks::new(hit_a ^ dark_a, hit_b ^ dark_b)
}

/// [`sample_clicks`] wrapped as an untimed record.
pub fn sample_trigger<R: Rng + ?Sized>(
    stats: &PhotonStatistics,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    rng: &mut R,
) -> TriggerRecord {
    let c = sample_clicks(stats, det_a, det_b, rng);
    TriggerRecord {
        det_a: c.a(),
        det_b: c.b(),
        timestamp_ns: None,
    }
}

/// What happens to triggers arriving while a detector is dead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadTimeMode {
    /// Gate-out AND: drop the trigger unless both detectors are ready.
    #[default]
    Discard,
    /// Keep every trigger; a dead detector simply reports no click. This
    /// is the biased acquisition the gate-out signal exists to prevent.
    Naive,
}

/// Dead-window state machine shared by the simulator and [`apply_deadtime`].
#[derive(Clone, Debug)]
pub struct DeadTimeFilter {
    dead_ns: u64,
    ready_a: u64,
    ready_b: u64,
    mode: DeadTimeMode,
}

impl DeadTimeFilter {
    pub fn new(dead_time: f64, mode: DeadTimeMode) -> Self {
        Self {
            dead_ns: seconds_to_ns(dead_time),
            ready_a: 0,
            ready_b: 0,
            mode,
        }
    }

    /// Offers one trigger. Returns the recorded clicks, or `None` when the
    /// trigger is discarded. Only recorded clicks open dead windows.
    #[inline]
    pub fn offer(&mut self, t_ns: u64, clicks: Clicks) -> Option<Clicks> {
        let live_a = t_ns >= self.ready_a;
        let live_b = t_ns >= self.ready_b;
        let recorded = match self.mode {
            DeadTimeMode::Discard if live_a && live_b => clicks,
            DeadTimeMode::Discard => return None,
            DeadTimeMode::Naive => Clicks::new(clicks.a() && live_a, clicks.b() && live_b),
        };
        if recorded.a() {
            self.ready_a = t_ns.saturating_add(self.dead_ns);
        }
        if recorded.b() {
            self.ready_b = t_ns.saturating_add(self.dead_ns);
        }
        Some(recorded)
    }
}

/// Acceptance mask for timestamped clicks under the gate-out rule.
pub fn apply_deadtime(
    timestamps_ns: &[u64],
    dead_time: f64,
    clicks: &[Clicks],
) -> Result<Vec<bool>> {
    if timestamps_ns.len() != clicks.len() {
        return Err(Error::invalid(
            "click_flags",
            format!(
                "{} flags for {} timestamps",
                clicks.len(),
                timestamps_ns.len()
            ),
        ));
    }
    if let Some(k) = timestamps_ns.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Unsorted { index: k + 1 });
    }
    let mut filter = DeadTimeFilter::new(dead_time, DeadTimeMode::Discard);
    Ok(timestamps_ns
        .iter()
        .zip(clicks)
        .map(|(&t, &c)| filter.offer(t, c).is_some())
        .collect())
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub execution: Execution,
    /// Keep per-record timestamps in the output.
    pub timestamps: bool,
    pub dead_time_mode: DeadTimeMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            timestamps: false,
            dead_time_mode: DeadTimeMode::Discard,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub n_triggers_offered: u64,
    /// N_t.
    pub n_triggers_accepted: u64,
    /// T, seconds from run start to the last offered trigger.
    pub wall_duration: f64,
    /// Offered trigger rate R_H, Hz.
    pub herald_rate: f64,
    pub rng_seed: u64,
    /// Ground truth the records were drawn from.
    pub stats: PhotonStatistics,
    /// Click tallies over the accepted records.
    pub tallies: CountTotals,
}

impl SimulationSummary {
    pub fn discard_fraction(&self) -> f64 {
        if self.n_triggers_offered == 0 {
            return 0.0;
        }
        1.0 - self.n_triggers_accepted as f64 / self.n_triggers_offered as f64
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub records: RecordSet,
    pub summary: SimulationSummary,
}

/// Simulates `n_target` accepted triggers with the default options.
pub fn simulate_run(
    src: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    n_target: u64,
    seed: u64,
) -> Result<Simulation> {
    simulate_run_with(src, det_a, det_b, n_target, seed, &RunOptions::default())
}

pub fn simulate_run_with(
    src: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    n_target: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Simulation> {
    if n_target == 0 {
        return Err(Error::invalid("n_target", "must be at least 1"));
    }
    src.validate()?;
    det_a.validate()?;
    det_b.validate()?;
    let stats = photon_statistics(src)?;

    let herald = heralding_rate(src);
    let dark = if src.simulate_herald_darks {
        src.herald_dark_rate
    } else {
        0.0
    };
    let rate = herald + dark;
    if !(rate > 0.0) {
        return Err(Error::invalid(
            "heralding rate",
            "no triggers are offered (rate is zero)",
        ));
    }
    let plan = TriggerPlan {
        stats,
        det_a: DetectorConfig {
            efficiency: det_a.efficiency * src.gate_acceptance,
            ..*det_a
        },
        det_b: DetectorConfig {
            efficiency: det_b.efficiency * src.gate_acceptance,
            ..*det_b
        },
        mean_gap_ns: 1e9 / rate,
        dark_fraction: dark / rate,
        seed,
    };

    let mut filter = DeadTimeFilter::new(src.dead_time, opts.dead_time_mode);
    let mut clicks = Vec::with_capacity(n_target as usize);
    let mut stamps = Vec::with_capacity(if opts.timestamps {
        n_target as usize
    } else {
        0
    });
    let mut tallies = CountTotals::default();
    let mut t_ns = 0.0f64;
    let mut last_stamp: Option<u64> = None;
    let mut offered = 0u64;

    let round = BLOCKS_PER_ROUND.max(4 * opts.execution.threads() as u64);
    let mut next_block = 0u64;
    'rounds: loop {
        let blocks = opts
            .execution
            .map_range(next_block..next_block + round, |b| plan.block(b));
        next_block += round;
        for block in &blocks {
            for (&gap, &c) in block.gaps_ns.iter().zip(&block.clicks) {
                t_ns += gap;
                let stamp = match last_stamp {
                    Some(prev) => (t_ns.floor() as u64).max(prev + 1),
                    None => t_ns.floor() as u64,
                };
                last_stamp = Some(stamp);
                offered += 1;
                if let Some(rec) = filter.offer(stamp, c) {
                    tallies.record(rec);
                    clicks.push(rec);
                    if opts.timestamps {
                        stamps.push(stamp);
                    }
                    if tallies.n_t == n_target {
                        break 'rounds;
                    }
                }
            }
        }
    }

    let records = if opts.timestamps {
        RecordSet::with_timestamps(clicks, stamps)
    } else {
        RecordSet::new(clicks)
    };
    let summary = SimulationSummary {
        n_triggers_offered: offered,
        n_triggers_accepted: tallies.n_t,
        wall_duration: t_ns * 1e-9,
        herald_rate: rate,
        rng_seed: seed,
        stats,
        tallies,
    };
    Ok(Simulation { records, summary })
}

/// Draws accepted-trigger counts only, without keeping the records.
pub fn simulate_counts(
    src: &SourceConfig,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    n_target: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<SimulationSummary> {
    let opts = RunOptions {
        timestamps: false,
        ..opts.clone()
    };
    simulate_run_with(src, det_a, det_b, n_target, seed, &opts).map(|s| s.summary)
}

struct TriggerPlan {
    stats: PhotonStatistics,
    det_a: DetectorConfig,
    det_b: DetectorConfig,
    mean_gap_ns: f64,
    dark_fraction: f64,
    seed: u64,
}

struct Block {
    gaps_ns: Vec<f64>,
    clicks: Vec<Clicks>,
}

impl TriggerPlan {
    fn block(&self, index: u64) -> Block {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let mut gaps_ns = Vec::with_capacity(BLOCK_LEN as usize);
        let mut clicks = Vec::with_capacity(BLOCK_LEN as usize);
        for _ in 0..BLOCK_LEN {
            let e: f64 = rng.sample(Exp1);
            gaps_ns.push(e * self.mean_gap_ns);
            let herald_dark = self.dark_fraction > 0.0 && rng.random::<f64>() < self.dark_fraction;
            let stats = if herald_dark {
                &PhotonStatistics::VACUUM
            } else {
                &self.stats
            };
            clicks.push(sample_clicks(stats, &self.det_a, &self.det_b, &mut rng));
        }
        Block { gaps_ns, clicks }
    }
}

fn seconds_to_ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}
