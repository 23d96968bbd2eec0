use serde::{Deserialize, Serialize};

use super::PropagatorError;

fn is_false(b: &bool) -> bool {
    !*b
}

/// Evolution under generator `k` (zero-based) for duration `t >= 0`.
///
/// `reversed` marks the unphysical `exp(-H_k t)`. It exists only in ideal
/// words before inversion and in sequences realized with the exact
/// (oracle) inverter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub k: usize,
    pub t: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub reversed: bool,
}

#[derive(Deserialize)]
struct RawSequence {
    #[serde(default)]
    provenance: String,
    segments: Vec<Segment>,
}

/// Ordered list of segments, applied in time order. Durations are never
/// negative; construction panics on a negative duration and
/// deserialization rejects one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct ControlSequence {
    provenance: String,
    segments: Vec<Segment>,
}

impl TryFrom<RawSequence> for ControlSequence {
    type Error = String;

    fn try_from(raw: RawSequence) -> Result<Self, String> {
        if let Some(bad) = raw.segments.iter().position(|s| !(s.t >= 0.0 && s.t.is_finite())) {
            return Err(format!("segment {bad} has negative or non-finite duration {}", raw.segments[bad].t));
        }
        Ok(Self { provenance: raw.provenance, segments: raw.segments })
    }
}

impl ControlSequence {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self { provenance: provenance.into(), segments: Vec::new() }
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: impl Into<String>) {
        self.provenance = provenance.into();
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn push_segment(&mut self, seg: Segment) {
        assert!(seg.t >= 0.0 && seg.t.is_finite(), "negative or non-finite duration {}", seg.t);
        self.segments.push(seg);
    }

    /// Appends `exp(H_k t)`.
    pub fn push(&mut self, k: usize, t: f64) {
        self.push_segment(Segment { k, t, reversed: false });
    }

    /// Appends the unphysical `exp(-H_k t)`.
    pub fn push_reversed(&mut self, k: usize, t: f64) {
        self.push_segment(Segment { k, t, reversed: true });
    }

    pub fn extend(&mut self, other: &ControlSequence) {
        self.segments.extend_from_slice(&other.segments);
    }

    /// `times` back-to-back copies.
    pub fn repeated(&self, times: usize) -> Self {
        let mut out = Self::new(self.provenance.clone());
        out.segments.reserve(self.len() * times);
        for _ in 0..times {
            out.extend(self);
        }
        out
    }

    /// The exact inverse word: reversed order, every segment flipped.
    pub fn inverse(&self) -> Self {
        let segments = self.segments.iter().rev().map(|s| Segment { reversed: !s.reversed, ..*s }).collect();
        Self { provenance: format!("inverse of {}", self.provenance), segments }
    }

    /// True when no segment is reversed.
    pub fn is_physical(&self) -> bool {
        self.segments.iter().all(|s| !s.reversed)
    }

    pub fn reversed_count(&self) -> usize {
        self.segments.iter().filter(|s| s.reversed).count()
    }

    /// Sum of all durations.
    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.t).sum()
    }

    pub fn min_duration(&self) -> Option<f64> {
        self.segments.iter().map(|s| s.t).reduce(f64::min)
    }

    pub fn check_indices(&self, count: usize) -> Result<(), PropagatorError> {
        match self.segments.iter().find(|s| s.k >= count) {
            Some(s) => Err(PropagatorError::IndexOutOfRange { k: s.k, count }),
            None => Ok(()),
        }
    }

    /// Drops zero-duration segments and merges equal neighbours.
    pub fn compacted(&self) -> Self {
        let mut out = Self::new(self.provenance.clone());
        for s in &self.segments {
            if s.t == 0.0 {
                continue;
            }
            match out.segments.last_mut() {
                Some(last) if last.k == s.k && last.reversed == s.reversed => last.t += s.t,
                _ => out.segments.push(*s),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequences always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[should_panic(expected = "negative")]
    fn negative_durations_are_refused() {
        ControlSequence::new("x").push(0, -0.1);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut s = ControlSequence::new("test");
        s.push(0, 0.5);
        s.push(2, 1.25);
        let json = s.to_json();
        assert!(json.contains("\"provenance\": \"test\""));
        assert!(!json.contains("reversed"));
        let back: ControlSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"provenance":"x","segments":[{"k":0,"t":-1.0}]}"#;
        assert!(serde_json::from_str::<ControlSequence>(bad).is_err());
    }

    #[test]
    fn inverse_and_compaction() {
        let mut s = ControlSequence::new("w");
        s.push(0, 0.5);
        s.push(1, 0.25);
        let inv = s.inverse();
        assert_eq!(inv.segments()[0], Segment { k: 1, t: 0.25, reversed: true });
        assert!(!inv.is_physical());
        assert_eq!(inv.inverse().segments(), s.segments());

        let mut c = ControlSequence::new("c");
        c.push(0, 0.5);
        c.push(0, 0.25);
        c.push(1, 0.0);
        c.push(0, 1.0);
        assert_eq!(c.compacted().segments(), &[Segment { k: 0, t: 1.75, reversed: false }]);
        assert_eq!(s.repeated(3).len(), 6);
    }
}
