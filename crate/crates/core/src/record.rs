//! Per-trigger detection records.

use serde::{Deserialize, Serialize};

/// Detection bits of both bench detectors for one accepted trigger.
/// Bit 0 is detector A, bit 1 detector B (the on-disk layout).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Clicks(u8);

impl Clicks {
    pub const NONE: Clicks = Clicks(0);

    #[inline]
    pub const fn new(det_a: bool, det_b: bool) -> Self {
        Clicks(det_a as u8 | (det_b as u8) << 1)
    }

    #[inline]
    pub(crate) const fn from_bits(bits: u8) -> Self {
        Clicks(bits & 0b11)
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn a(self) -> bool {
        self.0 & 1 != 0
    }

    #[inline]
    pub const fn b(self) -> bool {
        self.0 & 2 != 0
    }

    #[inline]
    pub const fn both(self) -> bool {
        self.0 == 0b11
    }

    #[inline]
    pub const fn any(self) -> bool {
        self.0 != 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub det_a: bool,
    pub det_b: bool,
    /// Nanoseconds since run start, when recorded.
    pub timestamp_ns: Option<u64>,
}

impl TriggerRecord {
    pub fn clicks(&self) -> Clicks {
        Clicks::new(self.det_a, self.det_b)
    }
}

impl From<(bool, bool)> for TriggerRecord {
    fn from((det_a, det_b): (bool, bool)) -> Self {
        TriggerRecord {
            det_a,
            det_b,
            timestamp_ns: None,
        }
    }
}

/// A run of accepted triggers in compact columnar form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordSet {
    clicks: Vec<Clicks>,
    timestamps_ns: Option<Vec<u64>>,
}

impl RecordSet {
    pub fn new(clicks: Vec<Clicks>) -> Self {
        Self {
            clicks,
            timestamps_ns: None,
        }
    }

    /// Panics if the two columns differ in length.
    pub fn with_timestamps(clicks: Vec<Clicks>, timestamps_ns: Vec<u64>) -> Self {
        assert_eq!(clicks.len(), timestamps_ns.len(), "column length mismatch");
        Self {
            clicks,
            timestamps_ns: Some(timestamps_ns),
        }
    }

    /// Builds a set from `(det_a, det_b)` pairs, without timestamps.
    pub fn from_pairs<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> Self {
        Self::new(pairs.into_iter().map(|(a, b)| Clicks::new(a, b)).collect())
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn clicks(&self) -> &[Clicks] {
        &self.clicks
    }

    pub fn timestamps_ns(&self) -> Option<&[u64]> {
        self.timestamps_ns.as_deref()
    }

    pub fn drop_timestamps(&mut self) {
        self.timestamps_ns = None;
    }

    pub fn get(&self, k: usize) -> Option<TriggerRecord> {
        let c = *self.clicks.get(k)?;
        Some(TriggerRecord {
            det_a: c.a(),
            det_b: c.b(),
            timestamp_ns: self.timestamps_ns.as_ref().map(|t| t[k]),
        })
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = TriggerRecord> + '_ {
        (0..self.len()).map(move |k| self.get(k).expect("index in range"))
    }
}

impl FromIterator<TriggerRecord> for RecordSet {
    /// Keeps timestamps only if every record carries one.
    fn from_iter<T: IntoIterator<Item = TriggerRecord>>(iter: T) -> Self {
        let mut clicks = Vec::new();
        let mut stamps = Vec::new();
        let mut all_stamped = true;
        for r in iter {
            clicks.push(r.clicks());
            match r.timestamp_ns {
                Some(t) if all_stamped => stamps.push(t),
                _ => all_stamped = false,
            }
        }
        if all_stamped && !clicks.is_empty() {
            Self::with_timestamps(clicks, stamps)
        } else {
            Self::new(clicks)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn click_bits() {
        let c = Clicks::new(true, false);
        assert!(c.a() && !c.b() && !c.both() && c.any());
        assert_eq!(Clicks::new(false, true).bits(), 2);
        assert!(Clicks::new(true, true).both());
        assert!(!Clicks::NONE.any());
    }

    #[test]
    fn collects_with_and_without_timestamps() {
        let stamped: RecordSet = (0..3u64)
            .map(|k| TriggerRecord {
                det_a: k == 1,
                det_b: false,
                timestamp_ns: Some(10 * k),
            })
            .collect();
        assert_eq!(stamped.timestamps_ns(), Some(&[0, 10, 20][..]));
        assert_eq!(stamped.get(1).unwrap().clicks(), Clicks::new(true, false));

        let plain = RecordSet::from_pairs([(true, true), (false, false)]);
        assert!(plain.timestamps_ns().is_none());
        assert_eq!(plain.iter().filter(|r| r.det_a).count(), 1);
    }
}
