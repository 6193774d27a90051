use std::fmt;

use serde::Serialize;

use super::{mean, EvalError, Result};
use crate::detect::TraceRecord;
use crate::mpisim::{Segment, SegmentKind};

/// Hover samples at or below this height count as contact, mm.
const CONTACT_MM: f64 = 1e-9;

/// Mean vertical travel before each key press: for every key, the highest
/// hover reached between the previous contact and the contact the key
/// belongs to. Travel down and back up is taken to be the same.
///
/// `hover` holds `(timestamp_us, hover_mm)` ground-truth samples with `None`
/// while no finger is present; `keys` are key event timestamps. A key
/// belongs to the last contact that began at or before it.
pub fn touch_point_threshold(hover: &[(u64, Option<f64>)], keys: &[u64]) -> Result<f64> {
    if keys.is_empty() {
        return Err(EvalError::Empty("key events"));
    }
    // (start index, end index exclusive) of every contact run
    let mut contacts: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, (_, h)) in hover.iter().enumerate() {
        let touching = matches!(h, Some(h) if *h <= CONTACT_MM);
        match (touching, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                contacts.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        contacts.push((s, hover.len()));
    }
    if contacts.is_empty() {
        return Err(EvalError::Empty("ground-truth contacts"));
    }
    let mut travel = Vec::with_capacity(keys.len());
    for &k in keys {
        let Some(c) = contacts.iter().rposition(|&(s, _)| hover[s].0 <= k) else {
            return Err(EvalError::Schema(format!("key at {k} us precedes every contact")));
        };
        let from = if c == 0 { 0 } else { contacts[c - 1].1 };
        let peak = hover[from..contacts[c].0].iter().filter_map(|(_, h)| *h).fold(0.0, f64::max);
        travel.push(peak);
    }
    Ok(mean(&travel))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockQuantity {
    Hover,
    Pressure,
}

impl BlockQuantity {
    pub fn targets(&self) -> &'static [f64] {
        match self {
            BlockQuantity::Hover => &crate::mpisim::scripts::HOVER_TARGETS,
            BlockQuantity::Pressure => &crate::mpisim::scripts::PRESSURE_TARGETS,
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            BlockQuantity::Hover => "mm",
            BlockQuantity::Pressure => "% full scale",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetError {
    pub target: f64,
    pub mae: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaeReport {
    pub quantity: BlockQuantity,
    /// In the quantity's unit: mm for hover, percent of full scale for
    /// pressure.
    pub mae: f64,
    pub per_target: Vec<TargetError>,
}

impl fmt::Display for MaeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = self.quantity.unit();
        write!(f, "{:?} MAE {:.3} {unit}", self.quantity, self.mae)?;
        for t in &self.per_target {
            write!(f, "\n  target {}: {:.3} {unit} over {} samples", t.target, t.mae, t.samples)?;
        }
        Ok(())
    }
}

fn block_mae(quantity: BlockQuantity, predicted: &[f64], truth: &[f64], scale: f64) -> Result<MaeReport> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predicted: predicted.len(), truth: truth.len() });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty("series"));
    }
    if let Some(i) = predicted.iter().zip(truth).position(|(p, t)| !p.is_finite() || !t.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let errors: Vec<f64> = predicted.iter().zip(truth).map(|(p, t)| (p - t).abs() * scale).collect();
    let mut per_target = Vec::new();
    for &target in quantity.targets() {
        let e: Vec<f64> = errors.iter().zip(truth).filter(|(_, t)| **t == target).map(|(e, _)| *e).collect();
        if !e.is_empty() {
            per_target.push(TargetError { target, mae: mean(&e), samples: e.len() });
        }
    }
    Ok(MaeReport { quantity, mae: mean(&errors), per_target })
}

/// Mean absolute hover error in mm, broken down by the standard targets.
pub fn hover_mae(predicted: &[f64], truth: &[f64]) -> Result<MaeReport> {
    block_mae(BlockQuantity::Hover, predicted, truth, 1.0)
}

/// Mean absolute pressure error in percent of full scale; pressures are
/// fractions of full scale.
pub fn pressure_mae(predicted: &[f64], truth: &[f64]) -> Result<MaeReport> {
    block_mae(BlockQuantity::Pressure, predicted, truth, 100.0)
}

/// Aligned prediction/truth series from a detection trace over labelled
/// blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSeries {
    pub predicted: Vec<f64>,
    pub truth: Vec<f64>,
    /// Block frames with no estimate (hover unreadable).
    pub missing: usize,
}

/// Collects, for every trace frame inside a `Block` segment, the estimate
/// and the segment's target.
pub fn block_series(trace: &[TraceRecord], segments: &[Segment], fps: f64, quantity: BlockQuantity) -> BlockSeries {
    let mut out = BlockSeries::default();
    for seg in segments.iter().filter(|s| s.kind == SegmentKind::Block) {
        let Some(target) = seg.target else { continue };
        for r in trace.iter().filter(|r| seg.contains(r.frame as f64 / fps)) {
            let estimate = match quantity {
                BlockQuantity::Hover => r.hover_mm,
                BlockQuantity::Pressure => r.corrected.map(|_| r.pressure),
            };
            match estimate {
                Some(v) => {
                    out.predicted.push(v);
                    out.truth.push(target);
                }
                None => out.missing += 1,
            }
        }
    }
    out
}
