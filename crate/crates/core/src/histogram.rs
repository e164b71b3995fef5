//! Start/stop trigger-separation histogram.
//!
//! The record stream is read once, in order. A click on one detector arms a
//! start; the next click on the other detector stops it, and the number of
//! triggers between start and stop selects the bin. Positive bins mean
//! "start on A, stop on B", negative bins the reverse, and bin 0 counts
//! coincidences at the trigger that would otherwise arm a start.
//!
//! Edge rules:
//! * a click on the armed detector while waiting is an invalid start; it is
//!   counted and ignored, and the search window is not reset;
//! * a stop never arms a new start at the same trigger;
//! * a stop trigger that also clicks on the armed detector is a valid stop;
//! * after `n_max` triggers without a stop the search is cancelled, and a
//!   start still armed when the stream ends counts as cancelled too.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Clicks, RecordSet};

pub const DEFAULT_N_MAX: u32 = 100;

/// Counts M(n) for n in [-n_max, n_max].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub n_max: u32,
    counts: Vec<u64>,
    pub starts_consumed: u64,
    pub invalid_starts: u64,
    pub cancelled_searches: u64,
}

impl Histogram {
    fn empty(n_max: u32) -> Self {
        Self {
            n_max,
            counts: vec![0; 2 * n_max as usize + 1],
            starts_consumed: 0,
            invalid_starts: 0,
            cancelled_searches: 0,
        }
    }

    /// M(n); zero outside the range.
    pub fn count(&self, n: i64) -> u64 {
        if n.unsigned_abs() > self.n_max as u64 {
            return 0;
        }
        self.counts[(n + self.n_max as i64) as usize]
    }

    pub fn central(&self) -> u64 {
        self.count(0)
    }

    /// `(n, M(n))` from -n_max to n_max.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        let off = self.n_max as i64;
        self.counts
            .iter()
            .enumerate()
            .map(move |(k, &m)| (k as i64 - off, m))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn bump(&mut self, n: i64) {
        self.counts[(n + self.n_max as i64) as usize] += 1;
        self.starts_consumed += 1;
    }
}

#[derive(Clone, Copy)]
enum Search {
    Idle,
    /// Start on A (`from_a`) or B at trigger index `at`.
    Armed {
        from_a: bool,
        at: u64,
    },
}

/// Runs the start/stop state machine over the clicks in order.
pub fn build_histogram(clicks: &[Clicks], n_max: u32) -> Result<Histogram> {
    if n_max == 0 {
        return Err(Error::InvalidRange);
    }
    let mut h = Histogram::empty(n_max);
    let mut state = Search::Idle;

    for (k, &c) in clicks.iter().enumerate() {
        let k = k as u64;
        state = match state {
            Search::Idle => {
                if c.both() {
                    h.bump(0);
                    Search::Idle
                } else if c.a() {
                    Search::Armed {
                        from_a: true,
                        at: k,
                    }
                } else if c.b() {
                    Search::Armed {
                        from_a: false,
                        at: k,
                    }
                } else {
                    Search::Idle
                }
            }
            Search::Armed { from_a, at } => {
                let sep = (k - at) as i64;
                let (stop, same) = if from_a {
                    (c.b(), c.a())
                } else {
                    (c.a(), c.b())
                };
                if stop {
                    h.bump(if from_a { sep } else { -sep });
                    Search::Idle
                } else {
                    if same {
                        h.invalid_starts += 1;
                    }
                    if sep >= n_max as i64 {
                        h.cancelled_searches += 1;
                        h.starts_consumed += 1;
                        Search::Idle
                    } else {
                        state
                    }
                }
            }
        };
    }
    if let Search::Armed { .. } = state {
        h.cancelled_searches += 1;
        h.starts_consumed += 1;
    }
    Ok(h)
}

pub fn build_histogram_records(records: &RecordSet, n_max: u32) -> Result<Histogram> {
    build_histogram(records.clicks(), n_max)
}

/// Expected M(n) for independent triggers, n ≠ 0:
/// `C p_A (1 - p_B)^|n| p_B` for n > 0, A and B swapped for n < 0.
pub fn theoretical_m(n: i64, p_a: f64, p_b: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid(
            "n",
            "the coincidence bin has no geometric model",
        ));
    }
    Ok(c * unit_shape(n, p_a, p_b))
}

fn unit_shape(n: i64, p_a: f64, p_b: f64) -> f64 {
    let (start, stop) = if n > 0 { (p_a, p_b) } else { (p_b, p_a) };
    start * (1.0 - stop).powi(n.unsigned_abs() as i32) * stop
}

/// Σ_{n≠0, |n|≤n_max} M(n)/C in closed form.
pub fn offcenter_mass(p_a: f64, p_b: f64, n_max: u32) -> f64 {
    let side =
        |start: f64, stop: f64| start * (1.0 - stop) * (1.0 - (1.0 - stop).powi(n_max as i32));
    side(p_a, p_b) + side(p_b, p_a)
}

/// Fitted normalization constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CFit {
    pub c: f64,
    pub sigma_c: f64,
    pub chi2: f64,
    pub dof: u64,
    pub chi2_per_dof: f64,
    /// chi2/dof above [`INCONSISTENT_CHI2`]: the geometric law does not
    /// describe these data.
    pub inconsistent: bool,
}

pub const INCONSISTENT_CHI2: f64 = 5.0;
const MIN_FIT_BINS: usize = 10;

/// Fits C over all n ≠ 0 with Poisson weights (variance = model).
///
/// With the shape s(n) fixed, minimizing Σ (M - C s)² / s gives
/// C = Σ M / Σ s, the same as the Poisson maximum-likelihood estimate.
pub fn fit_c(h: &Histogram, p_a: f64, p_b: f64) -> Result<CFit> {
    let bins: Vec<(f64, f64)> = h
        .iter()
        .filter(|&(n, _)| n != 0)
        .map(|(n, m)| (m as f64, unit_shape(n, p_a, p_b)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    // small ranges (n_max < 5) can only offer 2·n_max bins
    let needed = MIN_FIT_BINS.min(bins.len()).max(2);
    let filled = bins.iter().filter(|(m, _)| *m > 0.0).count();
    if filled < needed {
        return Err(Error::InsufficientData(format!(
            "{filled} non-empty off-center bins, need at least {needed}"
        )));
    }
    let sum_m: f64 = bins.iter().map(|(m, _)| m).sum();
    let sum_s: f64 = bins.iter().map(|(_, s)| s).sum();
    let c = sum_m / sum_s;
    let chi2: f64 = bins
        .iter()
        .map(|&(m, s)| {
            let model = c * s;
            (m - model).powi(2) / model
        })
        .sum();
    let dof = (bins.len() - 1) as u64;
    let chi2_per_dof = chi2 / dof as f64;
    Ok(CFit {
        c,
        sigma_c: sum_m.sqrt() / sum_s,
        chi2,
        dof,
        chi2_per_dof,
        inconsistent: chi2_per_dof > INCONSISTENT_CHI2,
    })
}

/// Histogram divided by C·p_A·p_B; the central bin reads raw g2(0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedHistogram {
    pub values: Vec<(i64, f64)>,
    pub central: f64,
    /// Poisson 1σ of the central bin from M(0) alone.
    pub central_sigma: f64,
}

pub fn normalize(h: &Histogram, p_a: f64, p_b: f64, c: f64) -> Result<NormalizedHistogram> {
    let norm = c * p_a * p_b;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ZeroDenominator(
            "histogram normalization (C p_a p_b)",
        ));
    }
    let values: Vec<(i64, f64)> = h.iter().map(|(n, m)| (n, m as f64 / norm)).collect();
    let m0 = h.central() as f64;
    Ok(NormalizedHistogram {
        values,
        central: m0 / norm,
        central_sigma: m0.sqrt() / norm,
    })
}

/// Writes `n, count, model, normalized` rows. The model column is empty at
/// n = 0; without a fit both derived columns are empty.
pub fn write_tsv<W: Write>(
    mut w: W,
    h: &Histogram,
    p_a: f64,
    p_b: f64,
    fit: Option<&CFit>,
) -> io::Result<()> {
    writeln!(w, "n\tcount\tmodel\tnormalized")?;
    let norm = fit.map(|f| f.c * p_a * p_b).filter(|v| *v > 0.0);
    for (n, m) in h.iter() {
        let model = match (fit, n) {
            (Some(f), n) if n != 0 => format!("{:.6e}", f.c * unit_shape(n, p_a, p_b)),
            _ => String::new(),
        };
        let normalized = norm
            .map(|v| format!("{:.6e}", m as f64 / v))
            .unwrap_or_default();
        writeln!(w, "{n}\t{m}\t{model}\t{normalized}")?;
    }
    Ok(())
}
