//! Flat `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment. Source keys use the
//! [`SourceConfig`] field names; bench detector keys carry a `det_a.` or
//! `det_b.` prefix, e.g. `det_a.efficiency = 0.084`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{DetectorConfig, SourceConfig};

const REQUIRED: &[&str] = &[
    "pump_power",
    "pair_efficiency",
    "herald_coupling",
    "herald_detector_eff",
    "coupling_p1",
    "det_a.efficiency",
    "det_a.dark_count_prob",
    "det_b.efficiency",
    "det_b.dark_count_prob",
];

/// Source plus the two bench detectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub source: SourceConfig,
    pub det_a: DetectorConfig,
    pub det_b: DetectorConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            det_a: DetectorConfig::BENCH_A,
            det_b: DetectorConfig::BENCH_B,
        }
    }
}

impl BenchConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        let mut seen: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(key, value)
                .map_err(|message| Error::ConfigSyntax { line, message })?;
            seen.push(key.to_owned());
        }

        if let Some(missing) = REQUIRED.iter().find(|k| !seen.iter().any(|s| s == *k)) {
            return Err(Error::MissingKey((*missing).to_owned()));
        }
        cfg.source.validate()?;
        cfg.det_a.validate()?;
        cfg.det_b.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        if key == "simulate_herald_darks" {
            self.source.simulate_herald_darks = match value {
                "true" | "1" => true,
                "false" | "0" => false,
                other => return Err(format!("`{key}` expects true/false, got `{other}`")),
            };
            return Ok(());
        }
        let v: f64 = value
            .parse()
            .map_err(|_| format!("`{key}` expects a number, got `{value}`"))?;
        let s = &mut self.source;
        let slot = match key {
            "pump_power" => &mut s.pump_power,
            "pair_efficiency" => &mut s.pair_efficiency,
            "herald_coupling" => &mut s.herald_coupling,
            "herald_detector_eff" => &mut s.herald_detector_eff,
            "herald_dark_rate" => &mut s.herald_dark_rate,
            "coupling_p1" => &mut s.coupling_p1,
            "gate_width" => &mut s.gate_width,
            "dead_time" => &mut s.dead_time,
            "attenuation" => &mut s.attenuation,
            "gate_acceptance" => &mut s.gate_acceptance,
            "det_a.efficiency" => &mut self.det_a.efficiency,
            "det_a.dark_count_prob" => &mut self.det_a.dark_count_prob,
            "det_b.efficiency" => &mut self.det_b.efficiency,
            "det_b.dark_count_prob" => &mut self.det_b.dark_count_prob,
            _ => return Err(format!("unknown key `{key}`")),
        };
        *slot = v;
        Ok(())
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn to_text(&self) -> String {
        let s = &self.source;
        let mut out = String::new();
        let pairs: [(&str, f64); 14] = [
            ("pump_power", s.pump_power),
            ("pair_efficiency", s.pair_efficiency),
            ("herald_coupling", s.herald_coupling),
            ("herald_detector_eff", s.herald_detector_eff),
            ("herald_dark_rate", s.herald_dark_rate),
            ("coupling_p1", s.coupling_p1),
            ("gate_width", s.gate_width),
            ("dead_time", s.dead_time),
            ("attenuation", s.attenuation),
            ("gate_acceptance", s.gate_acceptance),
            ("det_a.efficiency", self.det_a.efficiency),
            ("det_a.dark_count_prob", self.det_a.dark_count_prob),
            ("det_b.efficiency", self.det_b.efficiency),
            ("det_b.dark_count_prob", self.det_b.dark_count_prob),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        let _ = writeln!(out, "simulate_herald_darks = {}", s.simulate_herald_darks);
        out
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
