//! Brute-force reference for the bench click model.
//!
//! Every elementary outcome is enumerated: photon number, the arm each photon
//! takes at the splitter, whether each photon is detected, and the two dark
//! count branches. A detector clicks when exactly one of (photon detected,
//! dark count) happens. Nothing here shares code with the library model.

#![allow(dead_code)]

#[derive(Clone, Copy, Debug)]
pub struct Oracle {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
}

/// `probs[i]` is P(i); `eta`/`dc` are (A, B).
pub fn enumerate(probs: [f64; 3], eta: (f64, f64), dc: (f64, f64)) -> Oracle {
    let mut out = Oracle {
        p_a: 0.0,
        p_b: 0.0,
        p_ab: 0.0,
    };
    for (n, &pn) in probs.iter().enumerate() {
        // routing: bit k set means photon k goes to A
        for route in 0..(1u32 << n) {
            // detection: bit k set means photon k is detected
            for seen in 0..(1u32 << n) {
                let mut w = pn;
                let (mut hit_a, mut hit_b) = (false, false);
                for k in 0..n {
                    let to_a = route >> k & 1 == 1;
                    let det = seen >> k & 1 == 1;
                    let e = if to_a { eta.0 } else { eta.1 };
                    w *= 0.5 * if det { e } else { 1.0 - e };
                    if det {
                        if to_a {
                            hit_a = true;
                        } else {
                            hit_b = true;
                        }
                    }
                }
                for dark_a in [false, true] {
                    for dark_b in [false, true] {
                        let wd = w
                            * if dark_a { dc.0 } else { 1.0 - dc.0 }
                            * if dark_b { dc.1 } else { 1.0 - dc.1 };
                        let a = hit_a != dark_a;
                        let b = hit_b != dark_b;
                        if a {
                            out.p_a += wd;
                        }
                        if b {
                            out.p_b += wd;
                        }
                        if a && b {
                            out.p_ab += wd;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Solves (P1, P2) from (p_arm, p_ab) through the oracle alone, using that
/// the outcome probabilities are linear in the photon-number distribution.
pub fn invert(
    use_a: bool,
    p_single: f64,
    p_ab: f64,
    eta: (f64, f64),
    dc: (f64, f64),
) -> (f64, f64) {
    let pick = |o: Oracle| (if use_a { o.p_a } else { o.p_b }, o.p_ab);
    let v0 = pick(enumerate([1.0, 0.0, 0.0], eta, dc));
    let v1 = pick(enumerate([0.0, 1.0, 0.0], eta, dc));
    let v2 = pick(enumerate([0.0, 0.0, 1.0], eta, dc));
    let (a, b) = (v1.0 - v0.0, v2.0 - v0.0);
    let (c, d) = (v1.1 - v0.1, v2.1 - v0.1);
    let (r, s) = (p_single - v0.0, p_ab - v0.1);
    let det = a * d - b * c;
    ((r * d - b * s) / det, (a * s - c * r) / det)
}

/// One published measurement row: pump label, N_t, N_A, N_AB and the
/// published P(1), P(2), g2.
pub struct Row {
    pub label: &'static str,
    pub n_t: u64,
    pub n_a: u64,
    pub n_ab: u64,
    pub p1: f64,
    pub p2: f64,
    pub g2: f64,
}

pub const ROWS: [Row; 6] = [
    Row {
        label: "49 mW",
        n_t: 60_000_000,
        n_a: 1_600_000,
        n_ab: 1062,
        p1: 0.59,
        p2: 41e-4,
        g2: 22.6e-3,
    },
    Row {
        label: "25 mW",
        n_t: 28_000_000,
        n_a: 770_000,
        n_ab: 255,
        p1: 0.61,
        p2: 19e-4,
        g2: 10.2e-3,
    },
    Row {
        label: "13 mW",
        n_t: 16_000_000,
        n_a: 410_000,
        n_ab: 82,
        p1: 0.61,
        p2: 10e-4,
        g2: 5.3e-3,
    },
    Row {
        label: "3.3 mW",
        n_t: 17_000_000,
        n_a: 460_000,
        n_ab: 78,
        p1: 0.60,
        p2: 8.0e-4,
        g2: 4.4e-3,
    },
    Row {
        label: "1.6 mW",
        n_t: 16_000_000,
        n_a: 420_000,
        n_ab: 35,
        p1: 0.61,
        p2: 2.5e-4,
        g2: 1.4e-3,
    },
    Row {
        label: "0.9 mW",
        n_t: 18_000_000,
        n_a: 440_000,
        n_ab: 46,
        p1: 0.58,
        p2: 3.7e-4,
        g2: 2.2e-3,
    },
];

pub const ETA: (f64, f64) = (0.084, 0.096);
pub const DC: (f64, f64) = (35.1e-6, 7.4e-6);
