//! Pump-power and attenuation sweeps.
//!
//! Each point is simulated, counted and analysed independently; P(2) is then
//! fitted against the heralding rate with a weighted straight line and P(1)
//! is checked for constancy.

use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;
use crate::error::{Error, Result};
use crate::estimator::{analyze, AnalysisReport, Arms, Provenance};
use crate::model::{heralding_rate, multi_photon_prob};
use crate::simulator::{simulate_counts, RunOptions, SimulationSummary};

/// Minimum R² before a P(2)-vs-rate line is called linear.
pub const LINEARITY_R2: f64 = 0.99;
/// Maximum relative deviation of any P(1) from the sweep mean.
pub const P1_SPREAD_LIMIT: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pump powers, W.
    Pump(Vec<f64>),
    /// Heralding-signal attenuation factors.
    Attenuation(Vec<f64>),
}

impl SweepAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::Pump(v) | SweepAxis::Attenuation(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_sigma: f64,
    pub intercept: f64,
    pub intercept_sigma: f64,
    pub r_squared: f64,
    pub chi2: f64,
    /// All abscissae equal: the slope is undefined and reported as 0.
    pub degenerate: bool,
}

/// Straight-line fit to `(x, y, sigma_y)` points.
///
/// Points are weighted by 1/σ² when every σ is positive; otherwise all
/// weights are one and the parameter errors are scaled by the residual
/// variance. R² is the weighted coefficient of determination.
pub fn fit_line(points: &[(f64, f64, f64)]) -> Result<LineFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a sweep needs at least 3 points, got {}",
            points.len()
        )));
    }
    let weighted = points.iter().all(|&(_, _, s)| s > 0.0 && s.is_finite());
    let w = |s: f64| if weighted { 1.0 / (s * s) } else { 1.0 };

    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, s) in points {
        let wi = w(s);
        sw += wi;
        sx += wi * x;
        sy += wi * y;
        sxx += wi * x * x;
        sxy += wi * x * y;
    }
    let delta = sw * sxx - sx * sx;
    let x_mean = sx / sw;
    let spread: f64 = points
        .iter()
        .map(|&(x, _, s)| w(s) * (x - x_mean).powi(2))
        .sum();
    let degenerate = !(spread > 1e-12 * (sxx.abs() + f64::MIN_POSITIVE));

    let (slope, intercept) = if degenerate {
        (0.0, sy / sw)
    } else {
        ((sw * sxy - sx * sy) / delta, (sxx * sy - sx * sxy) / delta)
    };

    let y_mean = sy / sw;
    let (mut chi2, mut total) = (0.0, 0.0);
    for &(x, y, s) in points {
        let wi = w(s);
        chi2 += wi * (y - intercept - slope * x).powi(2);
        total += wi * (y - y_mean).powi(2);
    }
    let r_squared = if total > 0.0 { 1.0 - chi2 / total } else { 0.0 };

    let scale = if weighted {
        1.0
    } else {
        chi2 / (points.len() - 2) as f64
    };
    let (slope_sigma, intercept_sigma) = if degenerate {
        (f64::INFINITY, (scale / sw).sqrt())
    } else {
        ((scale * sw / delta).sqrt(), (scale * sxx / delta).sqrt())
    };
    Ok(LineFit {
        slope,
        slope_sigma,
        intercept,
        intercept_sigma,
        r_squared,
        chi2,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub setting: f64,
    /// R_H, Hz.
    pub herald_rate: f64,
    /// Model P(2) at this setting.
    pub p2_model: f64,
    pub simulation: SimulationSummary,
    pub report: AnalysisReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// P(2) against R_H.
    pub p2_fit: LineFit,
    /// Slope predicted by the source model, ½ P(1)² Δτ / (q_H η_H).
    pub p2_slope_model: f64,
    pub p1_mean: f64,
    /// Largest |P(1) - mean| / mean.
    pub p1_spread: f64,
    /// R² below [`LINEARITY_R2`] or a degenerate fit.
    pub nonlinear: bool,
    pub p1_spread_exceeded: bool,
}

/// Simulates and analyses every point of the sweep. Point `k` uses seed
/// `seed + k`.
pub fn run_sweep(
    bench: &BenchConfig,
    axis: &SweepAxis,
    n_per_point: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<SweepResult> {
    if axis.values().len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a sweep needs at least 3 points, got {}",
            axis.values().len()
        )));
    }
    let mut points = Vec::with_capacity(axis.values().len());
    for (k, &setting) in axis.values().iter().enumerate() {
        let mut src = bench.source.clone();
        match axis {
            SweepAxis::Pump(_) => src.pump_power = setting,
            SweepAxis::Attenuation(_) => src.attenuation = setting,
        }
        let simulation = simulate_counts(
            &src,
            &bench.det_a,
            &bench.det_b,
            n_per_point,
            seed.wrapping_add(k as u64),
            opts,
        )?;
        let report = analyze(
            &simulation.tallies,
            Arms::Both,
            &bench.det_a,
            &bench.det_b,
            Provenance {
                input: Some(format!("sweep point {k}")),
                config_hash: Some(bench.hash()),
            },
        )?;
        log::info!(
            "point {k}: setting {setting:e}, R_H {:.3e} Hz, P(1) {:.4}, P(2) {:.3e}",
            heralding_rate(&src),
            report.stats.p1,
            report.stats.p2
        );
        points.push(SweepPoint {
            setting,
            herald_rate: heralding_rate(&src),
            p2_model: multi_photon_prob(&src),
            simulation,
            report,
        });
    }

    let xy: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let sigma = p.report.stats_err.p2.sigma().unwrap_or(0.0);
            (p.herald_rate, p.report.stats.p2, sigma)
        })
        .collect();
    let p2_fit = fit_line(&xy)?;

    let p1s: Vec<f64> = points.iter().map(|p| p.report.stats.p1).collect();
    let p1_mean = p1s.iter().sum::<f64>() / p1s.len() as f64;
    let p1_spread = p1s
        .iter()
        .map(|p| (p - p1_mean).abs() / p1_mean)
        .fold(0.0, f64::max);

    let src = &bench.source;
    let p2_slope_model = 0.5 * src.coupling_p1.powi(2) * src.gate_width
        / (src.herald_coupling * src.herald_detector_eff);

    Ok(SweepResult {
        axis: axis.clone(),
        nonlinear: p2_fit.degenerate || p2_fit.r_squared < LINEARITY_R2,
        p1_spread_exceeded: p1_spread >= P1_SPREAD_LIMIT,
        points,
        p2_fit,
        p2_slope_model,
        p1_mean,
        p1_spread,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<_> = (0..6)
            .map(|k| (k as f64, 2.0 + 0.5 * k as f64, 0.1))
            .collect();
        let fit = fit_line(&pts).unwrap();
        assert_relative_eq!(fit.slope, 0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        assert!(!fit.degenerate);
        // sigma = 0.1 on 6 points at x = 0..5: var(slope) = 0.01 / Σ(x - x̄)²
        assert_relative_eq!(
            fit.slope_sigma,
            (0.01f64 / 17.5).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![(3.0, 1e-3, 1e-4); 6];
        let fit = fit_line(&pts).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.slope, 0.0);
        assert_relative_eq!(fit.intercept, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn unweighted_fallback() {
        let pts = vec![
            (0.0, 0.0, 0.0),
            (1.0, 1.1, 0.0),
            (2.0, 1.9, 0.0),
            (3.0, 3.0, 0.0),
        ];
        let fit = fit_line(&pts).unwrap();
        assert!(fit.slope_sigma.is_finite() && fit.slope_sigma > 0.0);
        assert!((fit.slope - 1.0).abs() < 0.1);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_line(&[(0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]).is_err());
        let bench = BenchConfig::default();
        let axis = SweepAxis::Pump(vec![1e-3, 2e-3]);
        assert!(run_sweep(&bench, &axis, 1000, 0, &RunOptions::default()).is_err());
    }

    #[test]
    fn attenuation_leaves_p2_flat() {
        let bench = BenchConfig::default();
        let axis = SweepAxis::Attenuation(vec![1.0, 0.5, 0.25, 0.1]);
        let res = run_sweep(&bench, &axis, 200_000, 11, &RunOptions::default()).unwrap();
        let model = res.points[0].p2_model;
        assert!(res.points.iter().all(|p| p.p2_model == model));
        assert!(res.points[3].herald_rate < res.points[0].herald_rate);
    }
}
