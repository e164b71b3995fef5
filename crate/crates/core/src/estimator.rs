//! From raw counts to photon statistics.
//!
//! The click model truncates the photon number at two (the bench cannot
//! distinguish two photons from more, so P(2) is the "more than one"
//! proxy). With P(0) = 1 - P(1) - P(2) substituted, every click probability
//! is affine in (P(1), P(2)), and the measured single-arm and coincidence
//! rates can be inverted in closed form.
//!
//! # Error model
//!
//! Uncertainties use Poisson counting statistics on N_A, N_B and N_AB.
//! Coincidences are a subset of each single-arm count, so
//! `cov(N_A, N_AB) = cov(N_B, N_AB) = cov(N_A, N_B) = N_AB`. The covariance
//! is propagated linearly through the (arm-averaged) inversion. With no
//! coincidences at all, P(2) and g2 get a 90 % upper limit from
//! `p_AB < 2.3 / N_t` instead of a symmetric bar.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{DetectorConfig, PhotonStatistics};
use crate::record::{Clicks, RecordSet, TriggerRecord};

/// Poisson 90 % upper limit on the mean when zero events were observed.
pub const ZERO_COUNT_UPPER_90: f64 = 2.3;

/// Single-arm counts above this make the P(1) error negligible.
pub const NEGLIGIBLE_P1_COUNTS: u64 = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTotals {
    pub n_t: u64,
    pub n_a: u64,
    pub n_b: u64,
    pub n_ab: u64,
}

impl CountTotals {
    #[inline]
    pub fn record(&mut self, c: Clicks) {
        self.n_t += 1;
        self.n_a += c.a() as u64;
        self.n_b += c.b() as u64;
        self.n_ab += c.both() as u64;
    }

    pub fn from_clicks(clicks: &[Clicks]) -> Self {
        let mut t = CountTotals::default();
        for &c in clicks {
            t.record(c);
        }
        t
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ab > self.n_a.min(self.n_b) || self.n_a.max(self.n_b) > self.n_t {
            return Err(Error::invalid(
                "counts",
                format!("need n_ab <= min(n_a, n_b) <= n_t, got {self:?}"),
            ));
        }
        Ok(())
    }
}

impl Add for CountTotals {
    type Output = CountTotals;

    fn add(self, o: CountTotals) -> CountTotals {
        CountTotals {
            n_t: self.n_t + o.n_t,
            n_a: self.n_a + o.n_a,
            n_b: self.n_b + o.n_b,
            n_ab: self.n_ab + o.n_ab,
        }
    }
}

impl AddAssign for CountTotals {
    fn add_assign(&mut self, o: CountTotals) {
        *self = *self + o;
    }
}

/// Single pass over a record set. Chunks are counted in parallel when
/// `exec` allows and merged; the result does not depend on partitioning.
pub fn accumulate_counts(records: &RecordSet, exec: Execution) -> CountTotals {
    exec.chunked_reduce(
        records.clicks(),
        1 << 16,
        CountTotals::from_clicks,
        Add::add,
    )
}

pub fn accumulate_records<I: IntoIterator<Item = TriggerRecord>>(records: I) -> CountTotals {
    let mut t = CountTotals::default();
    for r in records {
        t.record(r.clicks());
    }
    t
}

/// Click probabilities per accepted trigger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRates {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
}

pub fn measured_rates(c: &CountTotals) -> Result<MeasuredRates> {
    if c.n_t == 0 {
        return Err(Error::NoTriggers);
    }
    let n = c.n_t as f64;
    Ok(MeasuredRates {
        p_a: c.n_a as f64 / n,
        p_b: c.n_b as f64 / n,
        p_ab: c.n_ab as f64 / n,
    })
}

/// Click probability of one detector when `i` photons enter the splitter.
fn single_term(i: i32, det: &DetectorConfig) -> f64 {
    let dc = det.dark_count_prob;
    (1.0 - 2.0 * dc) * (1.0 - (1.0 - det.efficiency / 2.0).powi(i)) + dc
}

/// Coincidence probability when `i` photons enter the splitter: photon
/// pairs in both arms, photon-times-dark cross terms, and dark-dark.
fn joint_term(i: i32, a: &DetectorConfig, b: &DetectorConfig) -> f64 {
    let (ea, eb) = (a.efficiency, b.efficiency);
    let (da, db) = (a.dark_count_prob, b.dark_count_prob);
    let miss_a = (1.0 - ea / 2.0).powi(i);
    let miss_b = (1.0 - eb / 2.0).powi(i);
    let miss_ab = (1.0 - (ea + eb) / 2.0).powi(i);
    (1.0 - miss_a - miss_b + miss_ab) * (1.0 - 2.0 * da) * (1.0 - 2.0 * db)
        + (1.0 - miss_a) * (1.0 - 2.0 * da) * db
        + (1.0 - miss_b) * (1.0 - 2.0 * db) * da
        + da * db
}

/// Expected p_A, p_B, p_AB for the given statistics and detectors.
pub fn forward_probabilities(
    stats: &PhotonStatistics,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> MeasuredRates {
    let mut out = MeasuredRates {
        p_a: 0.0,
        p_b: 0.0,
        p_ab: 0.0,
    };
    for (i, &pi) in stats.as_array().iter().enumerate() {
        let i = i as i32;
        out.p_a += pi * single_term(i, det_a);
        out.p_b += pi * single_term(i, det_b);
        out.p_ab += pi * joint_term(i, det_a, det_b);
    }
    out
}

/// The click model as `rates = base + P(1)·d1 + P(2)·d2`.
#[derive(Clone, Copy, Debug)]
pub struct AffineModel {
    pub base: MeasuredRates,
    pub d1: MeasuredRates,
    pub d2: MeasuredRates,
}

impl AffineModel {
    pub fn new(det_a: &DetectorConfig, det_b: &DetectorConfig) -> Self {
        let at = |i: i32| MeasuredRates {
            p_a: single_term(i, det_a),
            p_b: single_term(i, det_b),
            p_ab: joint_term(i, det_a, det_b),
        };
        let (v0, v1, v2) = (at(0), at(1), at(2));
        let diff = |x: MeasuredRates| MeasuredRates {
            p_a: x.p_a - v0.p_a,
            p_b: x.p_b - v0.p_b,
            p_ab: x.p_ab - v0.p_ab,
        };
        Self {
            base: v0,
            d1: diff(v1),
            d2: diff(v2),
        }
    }

    /// 2x2 system matrix for one arm: rows (p_arm, p_ab), columns (P1, P2).
    fn matrix(&self, arm: Arm) -> [[f64; 2]; 2] {
        let (s1, s2) = match arm {
            Arm::A => (self.d1.p_a, self.d2.p_a),
            Arm::B => (self.d1.p_b, self.d2.p_b),
        };
        [[s1, s2], [self.d1.p_ab, self.d2.p_ab]]
    }

    fn inverse(&self, arm: Arm) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.matrix(arm);
        let det = a * d - b * c;
        let scale = (a.abs() + b.abs()) * (c.abs() + d.abs());
        if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-14 * scale {
            return Err(Error::Singular { det });
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    A,
    B,
}

/// Which single-arm rates take part in the inversion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arms {
    /// Solve with p_A and with p_B, report the plain mean.
    #[default]
    Both,
    /// p_B unavailable (e.g. published totals without N_B).
    AOnly,
}

impl Arms {
    pub fn list(self) -> &'static [Arm] {
        match self {
            Arms::Both => &[Arm::A, Arm::B],
            Arms::AOnly => &[Arm::A],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSolution {
    pub arm: Arm,
    pub p1: f64,
    pub p2: f64,
}

/// Result of the inversion. `stats` is clamped onto the simplex;
/// `p1_raw`/`p2_raw` keep the unclamped mean for diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub stats: PhotonStatistics,
    pub p1_raw: f64,
    pub p2_raw: f64,
    pub per_arm: Vec<ArmSolution>,
    pub clamped: bool,
}

pub fn solve_arm(
    arm: Arm,
    m: &MeasuredRates,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<ArmSolution> {
    let model = AffineModel::new(det_a, det_b);
    let inv = model.inverse(arm)?;
    let single = match arm {
        Arm::A => m.p_a - model.base.p_a,
        Arm::B => m.p_b - model.base.p_b,
    };
    let joint = m.p_ab - model.base.p_ab;
    Ok(ArmSolution {
        arm,
        p1: inv[0][0] * single + inv[0][1] * joint,
        p2: inv[1][0] * single + inv[1][1] * joint,
    })
}

/// Inverts the click model using both arms and averages the two solutions.
pub fn solve_statistics(
    m: &MeasuredRates,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<Solution> {
    solve_statistics_arms(m, det_a, det_b, Arms::Both)
}

pub fn solve_statistics_arms(
    m: &MeasuredRates,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    arms: Arms,
) -> Result<Solution> {
    for det in [det_a, det_b] {
        if !(det.efficiency > 0.0) {
            return Err(Error::Singular { det: 0.0 });
        }
    }
    let per_arm = arms
        .list()
        .iter()
        .map(|&arm| solve_arm(arm, m, det_a, det_b))
        .collect::<Result<Vec<_>>>()?;
    let k = per_arm.len() as f64;
    let p1_raw = per_arm.iter().map(|s| s.p1).sum::<f64>() / k;
    let p2_raw = per_arm.iter().map(|s| s.p2).sum::<f64>() / k;

    let p1 = p1_raw.clamp(0.0, 1.0);
    let p2 = p2_raw.clamp(0.0, 1.0 - p1);
    let clamped = p1 != p1_raw || p2 != p2_raw;
    if clamped {
        log::warn!(
            "solved statistics left the simplex: P(1)={p1_raw:.4e}, P(2)={p2_raw:.4e}; clamped"
        );
    }
    Ok(Solution {
        stats: PhotonStatistics::from_p1_p2(p1, p2)?,
        p1_raw,
        p2_raw,
        per_arm,
        clamped,
    })
}

/// Click probabilities with the dark counts removed.
pub fn net_rates(
    stats: &PhotonStatistics,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> MeasuredRates {
    forward_probabilities(stats, &det_a.noiseless(), &det_b.noiseless())
}

/// g2(0) = p_AB / (p_A p_B).
pub fn g2(m: &MeasuredRates) -> Result<f64> {
    let denom = m.p_a * m.p_b;
    if !(denom > 0.0) {
        return Err(Error::ZeroDenominator("g2 (p_a * p_b)"));
    }
    Ok(m.p_ab / denom)
}

/// g2(0) ≅ 2 P(2) / P(1)².
pub fn g2_from_stats(stats: &PhotonStatistics) -> Result<f64> {
    if !(stats.p1 > 0.0) {
        return Err(Error::ZeroDenominator("g2 (P(1)^2)"));
    }
    Ok(2.0 * stats.p2 / (stats.p1 * stats.p1))
}

/// Relative-error floor `value / sqrt(n)` of a quantity driven by `n` counts.
pub fn poisson_floor(value: f64, n: u64) -> f64 {
    value / (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uncertainty {
    /// Symmetric one-standard-deviation bar.
    Sigma { sigma: f64 },
    /// No events observed: 90 % confidence upper limit on the value.
    UpperLimit90 { limit: f64 },
}

impl Uncertainty {
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            Uncertainty::Sigma { sigma } => Some(sigma),
            Uncertainty::UpperLimit90 { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: Uncertainty,
}

impl Estimate {
    pub fn sigma(&self) -> Option<f64> {
        self.uncertainty.sigma()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBars {
    pub p0: Uncertainty,
    pub p1: Uncertainty,
    pub p2: Uncertainty,
    pub g2_raw: Uncertainty,
    pub g2_net: Uncertainty,
    /// Single-arm counts exceed [`NEGLIGIBLE_P1_COUNTS`].
    pub p1_negligible: bool,
}

/// Jacobian of the arm-averaged (P1, P2) with respect to (p_a, p_b, p_ab).
fn solve_jacobian(model: &AffineModel, arms: Arms) -> Result<[[f64; 3]; 2]> {
    let mut j = [[0.0; 3]; 2];
    let k = arms.list().len() as f64;
    for &arm in arms.list() {
        let inv = model.inverse(arm)?;
        let col = match arm {
            Arm::A => 0,
            Arm::B => 1,
        };
        for row in 0..2 {
            j[row][col] += inv[row][0] / k;
            j[row][2] += inv[row][1] / k;
        }
    }
    Ok(j)
}

fn rate_covariance(c: &CountTotals) -> [[f64; 3]; 3] {
    let n2 = (c.n_t as f64).powi(2);
    let (a, b, ab) = (c.n_a as f64 / n2, c.n_b as f64 / n2, c.n_ab as f64 / n2);
    [[a, ab, ab], [ab, b, ab], [ab, ab, ab]]
}

fn quad(grad: &[f64; 3], cov: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += grad[i] * cov[i][j] * grad[j];
        }
    }
    s
}

/// g2 of the dark-count-free rates and its gradient in (P1, P2).
fn g2_net_with_gradient(
    stats: &PhotonStatistics,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
) -> Result<(f64, [f64; 2])> {
    let model = AffineModel::new(&det_a.noiseless(), &det_b.noiseless());
    let net = net_rates(stats, det_a, det_b);
    let g = g2(&net)?;
    let denom = net.p_a * net.p_b;
    let grad = |d: &MeasuredRates| d.p_ab / denom - g * (d.p_a / net.p_a + d.p_b / net.p_b);
    Ok((g, [grad(&model.d1), grad(&model.d2)]))
}

/// Poisson 1σ bars for the solved statistics and both g2 values.
///
/// `raw_rates` are the rates g2_raw was computed from (for A-only analysis
/// p_b is the modelled value).
pub fn error_bars(
    c: &CountTotals,
    solution: &Solution,
    raw_rates: &MeasuredRates,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    arms: Arms,
) -> Result<ErrorBars> {
    if c.n_t == 0 {
        return Err(Error::NoTriggers);
    }
    let model = AffineModel::new(det_a, det_b);
    let jac = solve_jacobian(&model, arms)?;
    let mut cov = rate_covariance(c);
    if arms == Arms::AOnly {
        for k in 0..3 {
            cov[1][k] = 0.0;
            cov[k][1] = 0.0;
        }
    }

    let var1 = quad(&jac[0], &cov);
    let var2 = quad(&jac[1], &cov);
    let mut cross = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            cross += jac[0][i] * cov[i][j] * jac[1][j];
        }
    }
    let sigma = |v: f64| Uncertainty::Sigma {
        sigma: v.max(0.0).sqrt(),
    };
    let p1 = sigma(var1);
    let p0 = sigma(var1 + var2 + 2.0 * cross);

    let (p2, g2_raw, g2_net) = if c.n_ab == 0 {
        let p_ab_limit = ZERO_COUNT_UPPER_90 / c.n_t as f64;
        let bound_rates = MeasuredRates {
            p_ab: p_ab_limit,
            ..*raw_rates
        };
        let bound = solve_statistics_arms(&bound_rates, det_a, det_b, arms)?;
        let g2_net_limit = g2_net_with_gradient(&bound.stats, det_a, det_b)?.0;
        (
            Uncertainty::UpperLimit90 {
                limit: bound.stats.p2,
            },
            Uncertainty::UpperLimit90 {
                limit: g2(&bound_rates)?,
            },
            Uncertainty::UpperLimit90 {
                limit: g2_net_limit,
            },
        )
    } else {
        let g_raw = g2(raw_rates)?;
        let mut grad_raw = [
            -g_raw / raw_rates.p_a,
            -g_raw / raw_rates.p_b,
            1.0 / (raw_rates.p_a * raw_rates.p_b),
        ];
        if arms == Arms::AOnly {
            grad_raw[1] = 0.0;
        }
        let (_, gp) = g2_net_with_gradient(&solution.stats, det_a, det_b)?;
        let grad_net: [f64; 3] = std::array::from_fn(|k| gp[0] * jac[0][k] + gp[1] * jac[1][k]);
        (
            sigma(var2),
            sigma(quad(&grad_raw, &cov)),
            sigma(quad(&grad_net, &cov)),
        )
    };

    let p1_negligible =
        c.n_a > NEGLIGIBLE_P1_COUNTS && (arms == Arms::AOnly || c.n_b > NEGLIGIBLE_P1_COUNTS);
    Ok(ErrorBars {
        p0,
        p1,
        p2,
        g2_raw,
        g2_net,
        p1_negligible,
    })
}

/// Where a report's numbers came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: Option<String>,
    pub config_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub counts: CountTotals,
    pub arms: Arms,
    /// Rates entering g2_raw; for A-only analysis p_b is modelled.
    pub measured: MeasuredRates,
    pub stats: PhotonStatistics,
    pub stats_err: ErrorBars,
    pub g2_raw: Estimate,
    pub g2_net: Estimate,
    pub rates_net: MeasuredRates,
    pub solution: Solution,
    /// The inversion was clamped onto the simplex.
    pub clamped: bool,
    pub warnings: Vec<String>,
    pub source_row: Provenance,
}

impl AnalysisReport {
    pub fn p2(&self) -> Estimate {
        Estimate {
            value: self.stats.p2,
            uncertainty: self.stats_err.p2,
        }
    }

    pub fn p1(&self) -> Estimate {
        Estimate {
            value: self.stats.p1,
            uncertainty: self.stats_err.p1,
        }
    }
}

/// Full analysis of a set of count totals.
pub fn analyze(
    c: &CountTotals,
    arms: Arms,
    det_a: &DetectorConfig,
    det_b: &DetectorConfig,
    source_row: Provenance,
) -> Result<AnalysisReport> {
    if arms == Arms::Both {
        c.validate()?;
    } else if c.n_ab > c.n_a || c.n_a > c.n_t {
        return Err(Error::invalid(
            "counts",
            format!("need n_ab <= n_a <= n_t, got {c:?}"),
        ));
    }
    let mut measured = measured_rates(c)?;
    let mut warnings = Vec::new();
    if arms == Arms::AOnly {
        warnings.push("N_B not available: A-arm reconstruction only".to_owned());
    }

    let solution = solve_statistics_arms(&measured, det_a, det_b, arms)?;
    if solution.clamped {
        warnings.push(format!(
            "inversion left the simplex (P(1)={:.4e}, P(2)={:.4e}); clamped",
            solution.p1_raw, solution.p2_raw
        ));
    }
    if arms == Arms::AOnly {
        measured.p_b = forward_probabilities(&solution.stats, det_a, det_b).p_b;
    }
    let stats = solution.stats;
    let rates_net = net_rates(&stats, det_a, det_b);
    let stats_err = error_bars(c, &solution, &measured, det_a, det_b, arms)?;
    let g2_raw = Estimate {
        value: g2(&measured)?,
        uncertainty: stats_err.g2_raw,
    };
    let g2_net = Estimate {
        value: g2(&rates_net)?,
        uncertainty: stats_err.g2_net,
    };

    Ok(AnalysisReport {
        counts: *c,
        arms,
        measured,
        stats,
        stats_err,
        g2_raw,
        g2_net,
        rates_net,
        clamped: solution.clamped,
        solution,
        warnings,
        source_row,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    const A: DetectorConfig = DetectorConfig::BENCH_A;
    const B: DetectorConfig = DetectorConfig::BENCH_B;

    fn stats(p1: f64, p2: f64) -> PhotonStatistics {
        PhotonStatistics::from_p1_p2(p1, p2).unwrap()
    }

    fn table_25mw() -> MeasuredRates {
        measured_rates(&CountTotals {
            n_t: 28_000_000,
            n_a: 770_000,
            n_b: 0,
            n_ab: 255,
        })
        .unwrap()
    }

    #[test]
    fn counting_examples() {
        let set =
            RecordSet::from_pairs([(false, false), (true, false), (false, true), (true, true)]);
        let c = accumulate_counts(&set, Execution::Sequential);
        assert_eq!(
            c,
            CountTotals {
                n_t: 4,
                n_a: 2,
                n_b: 2,
                n_ab: 1
            }
        );
        assert_eq!(accumulate_records(set.iter()), c);
        assert_eq!(
            accumulate_counts(&RecordSet::default(), Execution::Parallel),
            CountTotals::default()
        );
    }

    #[test]
    fn rate_examples() {
        let m = table_25mw();
        assert_relative_eq!(m.p_a, 0.0275, max_relative = 1e-3);
        assert_relative_eq!(m.p_ab, 9.11e-6, max_relative = 1e-3);
        let full = measured_rates(&CountTotals {
            n_t: 10,
            n_a: 10,
            n_b: 3,
            n_ab: 0,
        })
        .unwrap();
        assert_eq!(full.p_a, 1.0);
        assert_eq!(full.p_ab, 0.0);
        assert!(matches!(
            measured_rates(&CountTotals::default()),
            Err(Error::NoTriggers)
        ));
    }

    #[test]
    fn forward_examples() {
        let det = DetectorConfig::new(0.084, 0.0).unwrap();
        let m = forward_probabilities(&stats(1.0, 0.0), &det, &det);
        assert_relative_eq!(m.p_a, 0.042, max_relative = 1e-14);
        assert!(m.p_ab.abs() < 1e-15);

        let ideal = DetectorConfig::new(1.0, 0.0).unwrap();
        let m = forward_probabilities(&stats(0.0, 1.0), &ideal, &ideal);
        assert_relative_eq!(m.p_ab, 0.5, max_relative = 1e-14);
        assert_relative_eq!(m.p_a, 0.75, max_relative = 1e-14);
        assert_relative_eq!(m.p_b, 0.75, max_relative = 1e-14);
    }

    #[test]
    fn solves_the_25mw_row_from_arm_a() {
        let s = solve_statistics_arms(&table_25mw(), &A, &B, Arms::AOnly).unwrap();
        assert!(!s.clamped);
        assert!((s.stats.p1 - 0.65).abs() < 0.01, "P(1) = {}", s.stats.p1);
        assert_relative_eq!(s.stats.p2, 1.95e-3, max_relative = 0.02);
    }

    #[test]
    fn inversion_round_trips() {
        let truth = stats(0.6, 1e-3);
        let m = forward_probabilities(&truth, &A, &B);
        let s = solve_statistics(&m, &A, &B).unwrap();
        assert!((s.stats.p1 - 0.6).abs() < 1e-12);
        assert!((s.stats.p2 - 1e-3).abs() < 1e-12);
        assert_eq!(s.per_arm.len(), 2);
    }

    #[test]
    fn dark_coincidences_alone_give_zero_p2() {
        let p1 = 0.6;
        let m = MeasuredRates {
            p_a: A.dark_count_prob + (1.0 - 2.0 * A.dark_count_prob) * p1 * A.efficiency / 2.0,
            p_b: 0.0,
            p_ab: A.dark_count_prob * B.dark_count_prob,
        };
        // with P(1) > 0 the photon-dark cross terms are part of the model,
        // so feed the exact forward value of the joint rate instead
        let exact = forward_probabilities(&stats(p1, 0.0), &A, &B);
        let s = solve_statistics_arms(
            &MeasuredRates {
                p_ab: exact.p_ab,
                ..m
            },
            &A,
            &B,
            Arms::AOnly,
        )
        .unwrap();
        assert!(s.stats.p2.abs() < 1e-12);
        assert!((s.stats.p1 - p1).abs() < 1e-12);

        let vacuum = solve_statistics_arms(
            &MeasuredRates {
                p_a: A.dark_count_prob,
                p_b: B.dark_count_prob,
                p_ab: A.dark_count_prob * B.dark_count_prob,
            },
            &A,
            &B,
            Arms::Both,
        )
        .unwrap();
        assert!(vacuum.stats.p2.abs() < 1e-12 && vacuum.stats.p1.abs() < 1e-12);
    }

    #[test]
    fn negative_solutions_are_clamped_and_flagged() {
        let m = MeasuredRates {
            p_a: 0.027,
            p_b: 0.031,
            p_ab: 0.0,
        };
        let s = solve_statistics(&m, &A, &B).unwrap();
        assert!(s.clamped);
        assert!(s.p2_raw < 0.0);
        assert_eq!(s.stats.p2, 0.0);
    }

    #[test]
    fn degenerate_efficiency_is_singular() {
        let dead = DetectorConfig {
            efficiency: 0.0,
            dark_count_prob: 0.0,
        };
        assert!(matches!(
            solve_statistics(&table_25mw(), &dead, &B),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn net_rate_examples() {
        let clean = (A.noiseless(), B.noiseless());
        let s = stats(0.6, 1e-3);
        assert_eq!(
            net_rates(&s, &clean.0, &clean.1),
            forward_probabilities(&s, &clean.0, &clean.1)
        );
        let v = net_rates(&PhotonStatistics::VACUUM, &A, &B);
        assert_eq!((v.p_a, v.p_b, v.p_ab), (0.0, 0.0, 0.0));

        let solved = solve_statistics_arms(&table_25mw(), &A, &B, Arms::AOnly).unwrap();
        let net = net_rates(&solved.stats, &A, &B);
        assert_relative_eq!(net.p_ab, 7.9e-6, max_relative = 0.02);
        let gap = table_25mw().p_ab - net.p_ab;
        assert!((gap - 1.2e-6).abs() < 0.15e-6, "gap {gap}");
    }

    #[test]
    fn g2_examples() {
        let m = MeasuredRates {
            p_a: 0.0275,
            p_b: 0.0275,
            p_ab: 9.11e-6,
        };
        assert_relative_eq!(g2(&m).unwrap(), 1.20e-2, max_relative = 5e-3);
        assert_relative_eq!(
            g2_from_stats(&stats(0.61, 19e-4)).unwrap(),
            1.02e-2,
            max_relative = 5e-3
        );
        assert_eq!(g2_from_stats(&stats(0.61, 0.0)).unwrap(), 0.0);
        assert!(g2(&MeasuredRates {
            p_a: 0.0,
            p_b: 0.1,
            p_ab: 0.0
        })
        .is_err());
        assert!(g2_from_stats(&PhotonStatistics::VACUUM).is_err());
    }

    #[test]
    fn error_bar_examples() {
        assert_relative_eq!(poisson_floor(19e-4, 255), 1.19e-4, max_relative = 1e-2);
        assert_relative_eq!(poisson_floor(2.5e-4, 35), 0.42e-4, max_relative = 1e-2);
        assert_relative_eq!(poisson_floor(1.0, 10_000), 0.01, max_relative = 1e-12);

        let c = CountTotals {
            n_t: 28_000_000,
            n_a: 770_000,
            n_b: 0,
            n_ab: 255,
        };
        let r = analyze(&c, Arms::AOnly, &A, &B, Provenance::default()).unwrap();
        let sigma = r.stats_err.p2.sigma().unwrap();
        assert!(sigma >= poisson_floor(r.stats.p2, 255));
        assert!(sigma < 2.0 * 1e-4, "sigma {sigma}");
        assert!(r.stats_err.p1_negligible);

        let c = CountTotals {
            n_t: 16_000_000,
            n_a: 420_000,
            n_b: 0,
            n_ab: 35,
        };
        let r = analyze(&c, Arms::AOnly, &A, &B, Provenance::default()).unwrap();
        assert!(r.stats_err.p2.sigma().unwrap() >= poisson_floor(r.stats.p2, 35));
    }

    #[test]
    fn zero_coincidences_give_an_upper_limit() {
        let c = CountTotals {
            n_t: 1_000_000,
            n_a: 27_000,
            n_b: 31_000,
            n_ab: 0,
        };
        let r = analyze(&c, Arms::Both, &A, &B, Provenance::default()).unwrap();
        match r.stats_err.p2 {
            Uncertainty::UpperLimit90 { limit } => assert!(limit > 0.0 && limit < 1e-3),
            other => panic!("expected an upper limit, got {other:?}"),
        }
        assert!(matches!(
            r.stats_err.g2_raw,
            Uncertainty::UpperLimit90 { .. }
        ));
        assert!(r.clamped);
    }

    #[test]
    fn inconsistent_counts_rejected() {
        let c = CountTotals {
            n_t: 10,
            n_a: 5,
            n_b: 2,
            n_ab: 3,
        };
        assert!(analyze(&c, Arms::Both, &A, &B, Provenance::default()).is_err());
    }
}
