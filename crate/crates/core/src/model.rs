//! Shared domain types and the closed-form source relations.
//!
//! The pump power and the crystal's pair-creation efficiency only ever enter
//! through their product, the pair rate. Attenuation thins the heralding
//! signal without touching the heralded photon statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Truncated photon-number distribution at the bench input, per heralding signal.
///
/// `p2` stands for "more than one photon"; the bench cannot tell 2 from 3+.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PhotonStatistics {
    pub const VACUUM: PhotonStatistics = PhotonStatistics {
        p0: 1.0,
        p1: 0.0,
        p2: 0.0,
    };

    /// Builds the distribution from P(1) and P(2); P(0) takes the remainder.
    pub fn from_p1_p2(p1: f64, p2: f64) -> Result<Self> {
        check_unit("p1", p1)?;
        check_unit("p2", p2)?;
        if p1 + p2 > 1.0 + SUM_TOLERANCE {
            return Err(Error::NonPhysical { p1, p2 });
        }
        let p0 = (1.0 - p1 - p2).max(0.0);
        Ok(Self { p0, p1, p2 }.normalized())
    }

    /// Accepts three components that already sum to one (to 1e-9) and
    /// renormalizes them.
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        check_unit("p0", p0)?;
        check_unit("p1", p1)?;
        check_unit("p2", p2)?;
        let sum = p0 + p1 + p2;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(
                "photon statistics",
                format!("components sum to {sum}, expected 1"),
            ));
        }
        Ok(Self { p0, p1, p2 }.normalized())
    }

    fn normalized(self) -> Self {
        let sum = self.p0 + self.p1 + self.p2;
        Self {
            p0: self.p0 / sum,
            p1: self.p1 / sum,
            p2: self.p2 / sum,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p1, self.p2]
    }
}

/// One gated detector of the bench: overall efficiency (splitter and fibre
/// losses folded in) and dark-count probability per gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_prob: f64,
}

impl DetectorConfig {
    /// Calibrated detector A of the reference bench (8.4 %, 35.1e-6 per gate).
    pub const BENCH_A: DetectorConfig = DetectorConfig {
        efficiency: 0.084,
        dark_count_prob: 35.1e-6,
    };

    /// Calibrated detector B of the reference bench (9.6 %, 7.4e-6 per gate).
    pub const BENCH_B: DetectorConfig = DetectorConfig {
        efficiency: 0.096,
        dark_count_prob: 7.4e-6,
    };

    pub fn new(efficiency: f64, dark_count_prob: f64) -> Result<Self> {
        let det = Self {
            efficiency,
            dark_count_prob,
        };
        det.validate()?;
        Ok(det)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid(
                "efficiency",
                format!("{} not in (0, 1]", self.efficiency),
            ));
        }
        if !(self.dark_count_prob >= 0.0 && self.dark_count_prob < 0.5) {
            return Err(Error::invalid(
                "dark_count_prob",
                format!("{} not in [0, 0.5)", self.dark_count_prob),
            ));
        }
        Ok(())
    }

    pub fn noiseless(&self) -> Self {
        Self {
            dark_count_prob: 0.0,
            ..*self
        }
    }
}

/// Physical parameters of the heralded source and the trigger chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Pump power at the crystal, W.
    pub pump_power: f64,
    /// Pairs created per second per watt of pump.
    pub pair_efficiency: f64,
    /// Coupling efficiency of the heralding photons.
    pub herald_coupling: f64,
    /// Quantum efficiency of the heralding detector.
    pub herald_detector_eff: f64,
    /// Dark-count rate of the heralding detector, Hz.
    pub herald_dark_rate: f64,
    /// Heralded-photon coupling ratio; the model's ground-truth P(1).
    pub coupling_p1: f64,
    /// Detection gate width of the heralded photons, s.
    pub gate_width: f64,
    /// External dead time applied after each bench click, s.
    pub dead_time: f64,
    /// Thinning factor on the heralding signal only.
    pub attenuation: f64,
    /// Multiplier on both bench efficiencies (gate capture fraction).
    pub gate_acceptance: f64,
    /// Inject heralding-detector dark counts as vacuum triggers.
    pub simulate_herald_darks: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            pump_power: 25e-3,
            pair_efficiency: 1.86e8,
            herald_coupling: 0.265,
            herald_detector_eff: 0.35,
            herald_dark_rate: 100.0,
            coupling_p1: 0.60,
            gate_width: 2.5e-9,
            dead_time: 10e-6,
            attenuation: 1.0,
            gate_acceptance: 1.0,
            simulate_herald_darks: false,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("herald_coupling", self.herald_coupling),
            ("herald_detector_eff", self.herald_detector_eff),
            ("coupling_p1", self.coupling_p1),
            ("attenuation", self.attenuation),
            ("gate_acceptance", self.gate_acceptance),
        ] {
            check_unit(name, v)?;
        }
        for (name, v) in [
            ("pump_power", self.pump_power),
            ("pair_efficiency", self.pair_efficiency),
            ("herald_dark_rate", self.herald_dark_rate),
            ("dead_time", self.dead_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        if !(self.gate_width > 0.0 && self.gate_width.is_finite()) {
            return Err(Error::invalid(
                "gate_width",
                format!("{} must be > 0", self.gate_width),
            ));
        }
        Ok(())
    }

    /// Pairs created per second: the only way pump power and crystal
    /// efficiency enter the model.
    pub fn pair_rate(&self) -> f64 {
        self.pair_efficiency * self.pump_power
    }

    /// Returns a copy whose pair rate equals `pair_rate`, keeping
    /// `pair_efficiency` and rescaling the pump.
    pub fn with_pair_rate(&self, pair_rate: f64) -> Self {
        let mut out = self.clone();
        if self.pair_efficiency > 0.0 {
            out.pump_power = pair_rate / self.pair_efficiency;
        } else {
            out.pair_efficiency = pair_rate;
            out.pump_power = 1.0;
        }
        out
    }
}

/// Heralded photon rate divided by g2(0), Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hz", rename_all = "snake_case")]
pub enum FigureOfMerit {
    Finite(f64),
    /// P(2) = 0: no multi-photon events, F diverges.
    Unbounded,
}

impl FigureOfMerit {
    pub fn value(&self) -> f64 {
        match *self {
            FigureOfMerit::Finite(v) => v,
            FigureOfMerit::Unbounded => f64::INFINITY,
        }
    }
}

/// Heralding signal rate R_H = attenuation · q_H · η_H · pair_rate, Hz.
pub fn heralding_rate(src: &SourceConfig) -> f64 {
    src.attenuation * src.herald_coupling * src.herald_detector_eff * src.pair_rate()
}

/// Multi-photon probability per heralding signal,
/// P(2) = ½ · P(1)² · Δτ · pair_rate.
///
/// Logs a warning when the result leaves the physical regime
/// (P(2) ≥ 1 − P(1)); callers that need a hard failure use
/// [`photon_statistics`].
pub fn multi_photon_prob(src: &SourceConfig) -> f64 {
    let p2 = 0.5 * src.coupling_p1 * src.coupling_p1 * src.gate_width * src.pair_rate();
    if p2 > 0.0 && p2 >= 1.0 - src.coupling_p1 {
        log::warn!(
            "non-physical regime: P(2)={p2:.3e} >= 1 - P(1) = {:.3e}",
            1.0 - src.coupling_p1
        );
    }
    p2
}

/// The photon statistics the source model predicts per heralding signal.
pub fn photon_statistics(src: &SourceConfig) -> Result<PhotonStatistics> {
    let p1 = src.coupling_p1;
    let p2 = multi_photon_prob(src);
    if p2 > 0.0 && p2 >= 1.0 - p1 {
        return Err(Error::NonPhysical { p1, p2 });
    }
    PhotonStatistics::from_p1_p2(p1, p2)
}

/// F = P(1)³ · R_H / (2 P(2)), identical to P(1)·R_H / g2 with g2 = 2P(2)/P(1)².
pub fn figure_of_merit(stats: &PhotonStatistics, herald_rate: f64) -> FigureOfMerit {
    if stats.p2 == 0.0 {
        return FigureOfMerit::Unbounded;
    }
    FigureOfMerit::Finite(stats.p1.powi(3) * herald_rate / (2.0 * stats.p2))
}

/// F = P(1) · q_H · η_H / Δτ. Does not depend on the pair rate.
pub fn figure_of_merit_physical(src: &SourceConfig) -> FigureOfMerit {
    FigureOfMerit::Finite(
        src.coupling_p1 * src.herald_coupling * src.herald_detector_eff / src.gate_width,
    )
}

/// g2(0) of a Poissonian (attenuated laser) source with any P(1).
pub fn poissonian_reference() -> f64 {
    1.0
}

/// How much the multi-photon probability is reduced relative to a
/// Poissonian source with the same P(1): 1/g2.
pub fn suppression_factor(g2: f64) -> f64 {
    poissonian_reference() / g2
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} not in [0, 1]")))
    }
}
