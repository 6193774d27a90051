use std::fmt;

use serde::Serialize;

use crate::detect::TouchEvent;
use crate::mpisim::ContactInterval;

pub const DEFAULT_PAIRING_WINDOW_MS: f64 = 200.0;

/// A timed touch location, detected or ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventPoint {
    pub time_ms: f64,
    pub x: f64,
    pub y: f64,
}

impl From<&TouchEvent> for EventPoint {
    fn from(e: &TouchEvent) -> Self {
        Self { time_ms: e.timestamp_us as f64 / 1000.0, x: e.x, y: e.y }
    }
}

impl From<&ContactInterval> for EventPoint {
    fn from(c: &ContactInterval) -> Self {
        Self { time_ms: c.down_us as f64 / 1000.0, x: c.x, y: c.y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pairing_window_ms: f64,
    /// (detected index, truth index) of every pair, in truth order.
    #[serde(skip)]
    pub pairs: Vec<(usize, usize)>,
}

impl MatchReport {
    fn from_counts(tp: usize, fp: usize, fneg: usize, window: f64, pairs: Vec<(usize, usize)>) -> Self {
        // an empty denominator means nothing could go wrong on that side
        let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { true_positives: tp, false_positives: fp, false_negatives: fneg, precision, recall, f1, pairing_window_ms: window, pairs }
    }

    /// Detected/truth position pairs for [`spatial_accuracy`](super::spatial_accuracy).
    pub fn position_pairs(&self, detected: &[EventPoint], truth: &[EventPoint]) -> Vec<([f64; 2], [f64; 2])> {
        self.pairs.iter().map(|&(d, t)| ([detected[d].x, detected[d].y], [truth[t].x, truth[t].y])).collect()
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "touch-down matching (window {} ms)", self.pairing_window_ms)?;
        writeln!(f, "  TP {}  FP {}  FN {}", self.true_positives, self.false_positives, self.false_negatives)?;
        write!(f, "  precision {:.4}  recall {:.4}  F1 {:.4}", self.precision, self.recall, self.f1)
    }
}

/// Greedy one-to-one pairing, closest in time first. Pairs further apart
/// than `window_ms` are never formed; what remains unpaired counts as false
/// positives (detected) or false negatives (truth).
pub fn match_events(detected: &[EventPoint], truth: &[EventPoint], window_ms: f64) -> MatchReport {
    let mut candidates = Vec::new();
    for (i, d) in detected.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let dt = (d.time_ms - t.time_ms).abs();
            if dt <= window_ms {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|p| p.1);
    let tp = pairs.len();
    MatchReport::from_counts(tp, detected.len() - tp, truth.len() - tp, window_ms, pairs)
}
