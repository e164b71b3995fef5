//! Table, JSON and TSV renderings. Every format is produced from the same
//! view structs, so the numbers in a table and its JSON twin are identical.

use std::fmt::Write as _;

use ahsps_core::estimator::{AnalysisReport, Estimate, Uncertainty};
use ahsps_core::histogram::{write_tsv, CFit, Histogram, NormalizedHistogram};
use ahsps_core::sweep::SweepResult;
use ahsps_core::SimulationSummary;
use serde::Serialize;

/// Units of every numeric field in the JSON documents.
#[derive(Serialize)]
struct Units {
    counts: &'static str,
    probabilities: &'static str,
    g2: &'static str,
    rates: &'static str,
    durations: &'static str,
    pump_power: &'static str,
}

const UNITS: Units = Units {
    counts: "events",
    probabilities: "per accepted trigger",
    g2: "dimensionless",
    rates: "Hz",
    durations: "s",
    pump_power: "W",
};

fn json<T: Serialize>(kind: &str, body: &T) -> String {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        kind: &'a str,
        units: &'a Units,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Doc {
        kind,
        units: &UNITS,
        body,
    })
    .expect("document serializes");
    s.push('\n');
    s
}

fn estimate(e: &Estimate) -> String {
    match e.uncertainty {
        Uncertainty::Sigma { sigma } => format!("{:.4e} ± {:.1e}", e.value, sigma),
        Uncertainty::UpperLimit90 { limit } => format!("< {limit:.2e} (90% CL)"),
    }
}

#[derive(Serialize)]
pub struct AnalysisView<'a> {
    pub input: Option<&'a str>,
    pub report: &'a AnalysisReport,
}

impl AnalysisView<'_> {
    pub fn json(&self) -> String {
        json("analysis", self)
    }

    pub fn table(&self) -> String {
        let r = self.report;
        let c = &r.counts;
        let mut s = String::new();
        if let Some(input) = self.input {
            let _ = writeln!(s, "input          {input}");
        }
        let n_b = match r.arms {
            ahsps_core::Arms::Both => c.n_b.to_string(),
            ahsps_core::Arms::AOnly => "-".to_owned(),
        };
        let _ = writeln!(s, "{:>12} {:>10} {:>10} {:>8}", "N_t", "N_A", "N_B", "N_AB");
        let _ = writeln!(s, "{:>12} {:>10} {:>10} {:>8}", c.n_t, c.n_a, n_b, c.n_ab);
        let _ = writeln!(s);
        let rows: [(&str, Estimate); 5] = [
            (
                "P(0)",
                Estimate {
                    value: r.stats.p0,
                    uncertainty: r.stats_err.p0,
                },
            ),
            ("P(1)", r.p1()),
            ("P(2)", r.p2()),
            ("g2(0) raw", r.g2_raw),
            ("g2(0) net", r.g2_net),
        ];
        for (name, e) in rows {
            let _ = writeln!(s, "{name:<14} {}", estimate(&e));
        }
        let _ = writeln!(s, "{:<14} {:.1}", "1/g2 net", 1.0 / r.g2_net.value);
        let _ = writeln!(
            s,
            "{:<14} p_a {:.4e}  p_b {:.4e}  p_ab {:.4e}",
            "measured", r.measured.p_a, r.measured.p_b, r.measured.p_ab
        );
        let _ = writeln!(
            s,
            "{:<14} p_a {:.4e}  p_b {:.4e}  p_ab {:.4e}",
            "dark-free", r.rates_net.p_a, r.rates_net.p_b, r.rates_net.p_ab
        );
        if r.clamped {
            let _ = writeln!(
                s,
                "{:<14} P(1) {:.4e}  P(2) {:.4e}",
                "unclamped", r.solution.p1_raw, r.solution.p2_raw
            );
        }
        for w in &r.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

#[derive(Serialize)]
pub struct SimulationView<'a> {
    pub output: &'a str,
    pub summary: &'a SimulationSummary,
    pub discard_fraction: f64,
}

impl SimulationView<'_> {
    pub fn json(&self) -> String {
        json("simulation", self)
    }

    pub fn table(&self) -> String {
        let m = self.summary;
        let t = &m.tallies;
        let mut s = String::new();
        let _ = writeln!(s, "output         {}", self.output);
        let _ = writeln!(
            s,
            "{:>10} {:>12} {:>12} {:>10} {:>10} {:>8}",
            "R_H [Hz]", "N_t", "T [s]", "N_A", "N_B", "N_AB"
        );
        let _ = writeln!(
            s,
            "{:>10.4e} {:>12} {:>12.4e} {:>10} {:>10} {:>8}",
            m.herald_rate, t.n_t, m.wall_duration, t.n_a, t.n_b, t.n_ab
        );
        let _ = writeln!(
            s,
            "offered {} triggers, discarded {:.2}% in dead windows",
            m.n_triggers_offered,
            100.0 * self.discard_fraction
        );
        let _ = writeln!(
            s,
            "ground truth   P(1) {:.4}  P(2) {:.4e}  seed {}",
            m.stats.p1, m.stats.p2, m.rng_seed
        );
        s
    }
}

#[derive(Serialize)]
pub struct HistogramView<'a> {
    pub input: &'a str,
    pub p_a: f64,
    pub p_b: f64,
    pub histogram: &'a Histogram,
    pub fit: &'a CFit,
    pub normalized: &'a NormalizedHistogram,
    /// Estimator raw g2 from the same records, for comparison with the
    /// central bin.
    pub g2_raw: Estimate,
}

impl HistogramView<'_> {
    pub fn json(&self) -> String {
        json("histogram", self)
    }

    pub fn tsv(&self) -> String {
        let mut out = Vec::new();
        write_tsv(&mut out, self.histogram, self.p_a, self.p_b, Some(self.fit))
            .expect("writing to memory");
        String::from_utf8(out).expect("TSV is ASCII")
    }

    pub fn table(&self) -> String {
        let h = self.histogram;
        let f = self.fit;
        let mut s = String::new();
        let _ = writeln!(s, "input          {}", self.input);
        let _ = writeln!(s, "bins           {} (n_max {})", 2 * h.n_max + 1, h.n_max);
        let _ = writeln!(
            s,
            "starts         {} consumed, {} invalid, {} cancelled",
            h.starts_consumed, h.invalid_starts, h.cancelled_searches
        );
        let _ = writeln!(s, "p_a, p_b       {:.4e}, {:.4e}", self.p_a, self.p_b);
        let _ = writeln!(s, "C              {:.6e} ± {:.1e}", f.c, f.sigma_c);
        let _ = writeln!(
            s,
            "chi2/dof       {:.3} ({:.1}/{})",
            f.chi2_per_dof, f.chi2, f.dof
        );
        let _ = writeln!(
            s,
            "central bin    {:.4e} ± {:.1e}  (M(0) = {})",
            self.normalized.central,
            self.normalized.central_sigma,
            h.central()
        );
        let _ = writeln!(s, "g2(0) raw      {}", estimate(&self.g2_raw));
        if f.inconsistent {
            let _ = writeln!(s, "warning: shape inconsistent with the geometric law");
        }
        let _ = writeln!(s);
        s.push_str(&ascii_preview(self.normalized, 15, 50));
        s
    }
}

/// Bars of the normalized histogram for |n| ≤ `span`.
pub fn ascii_preview(norm: &NormalizedHistogram, span: i64, width: usize) -> String {
    let shown: Vec<(i64, f64)> = norm
        .values
        .iter()
        .copied()
        .filter(|(n, _)| n.abs() <= span)
        .collect();
    let top = shown.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let mut s = String::new();
    for (n, v) in shown {
        let len = if top > 0.0 {
            (v / top * width as f64).round() as usize
        } else {
            0
        };
        let _ = writeln!(s, "{n:>5} | {:<width$} {v:.3e}", "#".repeat(len));
    }
    s
}

#[derive(Serialize)]
pub struct SweepView<'a> {
    pub result: &'a SweepResult,
}

impl SweepView<'_> {
    pub fn json(&self) -> String {
        json("sweep", self)
    }

    fn axis_name(&self) -> &'static str {
        match self.result.axis {
            ahsps_core::sweep::SweepAxis::Pump(_) => "pump [W]",
            ahsps_core::sweep::SweepAxis::Attenuation(_) => "attenuation",
        }
    }

    pub fn tsv(&self) -> String {
        let mut s = String::from("setting\therald_rate\tn_t\tn_a\tn_b\tn_ab\tp1\tp1_sigma\tp2\tp2_sigma\tp2_model\tg2_net\n");
        for p in &self.result.points {
            let r = &p.report;
            let c = &r.counts;
            let _ = writeln!(
                s,
                "{:e}\t{:e}\t{}\t{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                p.setting,
                p.herald_rate,
                c.n_t,
                c.n_a,
                c.n_b,
                c.n_ab,
                r.stats.p1,
                r.p1().sigma().unwrap_or(f64::NAN),
                r.stats.p2,
                r.p2().sigma().unwrap_or(f64::NAN),
                p.p2_model,
                r.g2_net.value
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let res = self.result;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>12} {:>10} {:>10} {:>8} {:>22} {:>22} {:>10}",
            self.axis_name(),
            "R_H [Hz]",
            "N_t",
            "N_AB",
            "P(1)",
            "P(2)",
            "g2 net"
        );
        for p in &res.points {
            let r = &p.report;
            let _ = writeln!(
                s,
                "{:>12.4e} {:>10.4e} {:>10} {:>8} {:>22} {:>22} {:>10.3e}",
                p.setting,
                p.herald_rate,
                r.counts.n_t,
                r.counts.n_ab,
                estimate(&r.p1()),
                estimate(&r.p2()),
                r.g2_net.value
            );
        }
        let f = &res.p2_fit;
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "P(2) vs R_H    slope {:.4e} ± {:.1e} s, model {:.4e} s",
            f.slope, f.slope_sigma, res.p2_slope_model
        );
        let _ = writeln!(
            s,
            "               intercept {:.2e} ± {:.1e}, R² {:.4}",
            f.intercept, f.intercept_sigma, f.r_squared
        );
        let _ = writeln!(
            s,
            "P(1)           mean {:.4}, spread {:.2}%",
            res.p1_mean,
            100.0 * res.p1_spread
        );
        if f.degenerate {
            let _ = writeln!(
                s,
                "warning: all points share one heralding rate; slope undefined"
            );
        } else if res.nonlinear {
            let _ = writeln!(s, "warning: P(2) is not linear in R_H (R² < 0.99)");
        }
        if res.p1_spread_exceeded {
            let _ = writeln!(s, "warning: P(1) spread exceeds 2%");
        }
        s
    }
}
