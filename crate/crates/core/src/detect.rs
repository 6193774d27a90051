//! Runtime touch state machine.
//!
//! Corrected strength is mapped onto the calibrated anchors: the subtle and
//! touch anchors span the classifier's unit range, the hover and subtle
//! anchors span the calibrated hover heights, the touch and pressure anchors
//! the normalized pressure. Far hover, where the corrected signal is too
//! faint, is read from how many halo pixels remain on the tip-dip segment.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::{CalibrationProfile, StateAnchors};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("degenerate interpolation: x_min == x_max == {0}")]
    DegenerateAnchors(f64),
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("event log: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DetectError>;

/// `y_min + (x - x_min) / (x_max - x_min) * (y_max - y_min)`, optionally
/// clamped to the output span.
pub fn interpolate(x: f64, x_min: f64, x_max: f64, y_min: f64, y_max: f64, clamp: bool) -> Result<f64> {
    if x_max == x_min {
        return Err(DetectError::DegenerateAnchors(x_min));
    }
    let y = y_min + (x - x_min) / (x_max - x_min) * (y_max - y_min);
    Ok(if clamp { y.clamp(y_min.min(y_max), y_min.max(y_max)) } else { y })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TouchState {
    Idle,
    Hover,
    Subtle,
    Touch,
    Pressure,
}

impl TouchState {
    const ORDER: [TouchState; 5] =
        [TouchState::Idle, TouchState::Hover, TouchState::Subtle, TouchState::Touch, TouchState::Pressure];

    pub fn name(&self) -> &'static str {
        match self {
            TouchState::Idle => "idle",
            TouchState::Hover => "hover",
            TouchState::Subtle => "subtle",
            TouchState::Touch => "touch",
            TouchState::Pressure => "pressure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ORDER.into_iter().find(|t| t.name() == s)
    }

    fn level(self) -> usize {
        self as usize
    }

    pub fn in_contact(self) -> bool {
        matches!(self, TouchState::Touch | TouchState::Pressure)
    }

    /// States visited going from `self` to `to` one level at a time,
    /// both ends included.
    pub fn path_to(self, to: TouchState) -> Vec<TouchState> {
        let (a, b) = (self.level(), to.level());
        if a <= b {
            Self::ORDER[a..=b].to_vec()
        } else {
            Self::ORDER[b..=a].iter().rev().copied().collect()
        }
    }
}

impl fmt::Display for TouchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub baseline_alpha: f64,
    /// Deviation from the baseline needed to fire, as a fraction of the
    /// touch - subtle anchor gap.
    pub delta_threshold: f64,
    /// Per-frame rise needed to fire, same unit.
    pub derivative_min: f64,
    pub hover_far_range: [f64; 2],
    /// Width of the band around each state threshold, as a fraction of the
    /// gap between the adjacent anchors.
    pub hysteresis: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { baseline_alpha: 0.9, delta_threshold: 0.5, derivative_min: 0.1, hover_far_range: [10.0, 15.0], hysteresis: 0.1 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DetectError::InvalidConfig(m));
        if !(self.baseline_alpha > 0.0 && self.baseline_alpha < 1.0) {
            return bad(format!("baseline_alpha {} outside (0, 1)", self.baseline_alpha));
        }
        if !(self.delta_threshold > 0.0 && self.derivative_min > 0.0) {
            return bad("thresholds must be positive".into());
        }
        let [lo, hi] = self.hover_far_range;
        if !(lo >= 0.0 && hi > lo) {
            return bad(format!("hover_far_range [{lo}, {hi}] must be increasing"));
        }
        if !(0.0..0.5).contains(&self.hysteresis) {
            return bad(format!("hysteresis {} outside [0, 0.5)", self.hysteresis));
        }
        Ok(())
    }
}

/// One classifier step on the unit-gap value scale. Fires when the value
/// sits more than `delta_threshold` from the baseline and rose by at least
/// `derivative_min` since the previous frame. The baseline is smoothed
/// toward the value unless `freeze` is set (the finger is on the surface).
pub fn classify_touch(value: f64, prev_value: f64, baseline: f64, freeze: bool, cfg: &DetectorConfig) -> (bool, f64) {
    let deviation = (value - baseline).abs();
    let derivative = value - prev_value;
    let fire = deviation > cfg.delta_threshold && derivative >= cfg.derivative_min;
    let next = if freeze { baseline } else { cfg.baseline_alpha * baseline + (1.0 - cfg.baseline_alpha) * value };
    (fire, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Down,
    Up,
    Key,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Down => "down",
            EventKind::Up => "up",
            EventKind::Key => "key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchEvent {
    pub kind: EventKind,
    pub frame_index: u64,
    pub timestamp_us: u64,
    /// Fingertip on the surface, mm.
    pub x: f64,
    pub y: f64,
    /// Normalized pressure at touch-down; 0 for other kinds.
    pub pressure: f64,
    pub latency_frames: u32,
}

/// The calibration values the detector runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorCalibration {
    pub anchors: StateAnchors,
    pub hover_mm: f64,
    pub subtle_mm: f64,
    pub hover_line_count: f64,
}

impl From<&CalibrationProfile> for DetectorCalibration {
    fn from(p: &CalibrationProfile) -> Self {
        Self { anchors: p.state_anchors, hover_mm: p.hover_mm, subtle_mm: p.subtle_mm, hover_line_count: p.hover_line_count }
    }
}

/// Per-frame detector input. `corrected` is `None` when the frame could not
/// be measured or corrected; `note` then says why.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation {
    pub frame_index: u64,
    pub timestamp_us: u64,
    pub corrected: Option<f64>,
    pub line_count: Option<usize>,
    pub x: f64,
    pub y: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub frame: u64,
    pub timestamp_us: u64,
    pub corrected: Option<f64>,
    pub value: Option<f64>,
    pub baseline: Option<f64>,
    pub derivative: Option<f64>,
    pub state: TouchState,
    pub hover_mm: Option<f64>,
    pub pressure: f64,
    pub line_count: Option<usize>,
    /// States passed through this frame, `>`-separated, when it changed.
    pub path: String,
    pub flag: String,
}

#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    cal: DetectorCalibration,
    state: TouchState,
    baseline: Option<f64>,
    prev_value: Option<f64>,
}

impl Detector {
    pub fn new(cal: DetectorCalibration, cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let a = cal.anchors;
        if a.ordering_violation().is_some() {
            return Err(DetectError::InvalidConfig(format!("anchors not increasing: {a:?}")));
        }
        Ok(Self { cfg, cal, state: TouchState::Idle, baseline: None, prev_value: None })
    }

    pub fn state(&self) -> TouchState {
        self.state
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Classifier value: 0 at the subtle anchor, 1 at the touch anchor.
    pub fn value(&self, corrected: f64) -> f64 {
        let a = self.cal.anchors;
        (corrected - a.subtle) / (a.touch - a.subtle)
    }

    /// Height estimate for a finger that is not on the surface.
    pub fn hover_estimate(&self, corrected: f64, line_count: Option<usize>) -> f64 {
        let a = self.cal.anchors;
        let (h, s) = (self.cal.hover_mm, self.cal.subtle_mm);
        let [far_lo, far_hi] = self.cfg.hover_far_range;
        if corrected >= a.subtle {
            return interpolate(corrected, a.subtle, a.touch, s, 0.0, true).expect("anchors increase");
        }
        if corrected >= a.hover {
            return interpolate(corrected, a.hover, a.subtle, h, s, true).expect("anchors increase");
        }
        match line_count {
            Some(c) if self.cal.hover_line_count >= 1.0 => {
                interpolate(c as f64, self.cal.hover_line_count, 0.0, far_lo, far_hi, true).expect("count above zero")
            }
            _ => interpolate(corrected, a.hover, 0.0, far_lo, far_hi, true).expect("hover anchor above zero"),
        }
    }

    pub fn pressure_estimate(&self, corrected: f64) -> f64 {
        let a = self.cal.anchors;
        interpolate(corrected, a.touch, a.pressure, 0.0, 1.0, true).expect("anchors increase")
    }

    /// Level the signal asks for, with hysteresis around each threshold.
    fn target_state(&self, corrected: f64, hover_mm: f64, contact: bool) -> TouchState {
        let a = self.cal.anchors;
        let band = |lo: f64, hi: f64| ((lo + hi) / 2.0, self.cfg.hysteresis * (hi - lo) / 2.0);
        let above = |lo: f64, hi: f64, was_above: bool| {
            let (mid, half) = band(lo, hi);
            if was_above {
                corrected >= mid - half
            } else {
                corrected > mid + half
            }
        };
        if contact {
            return if above(a.touch, a.pressure, self.state == TouchState::Pressure) {
                TouchState::Pressure
            } else {
                TouchState::Touch
            };
        }
        if above(a.hover, a.subtle, self.state >= TouchState::Subtle) {
            return TouchState::Subtle;
        }
        let [lo, hi] = self.cfg.hover_far_range;
        let near = if self.state >= TouchState::Hover { hover_mm < hi } else { hover_mm <= hi - self.cfg.hysteresis * (hi - lo) };
        if near {
            TouchState::Hover
        } else {
            TouchState::Idle
        }
    }

    /// Advances one frame. Returns the down/up events it raised and the
    /// trace record.
    pub fn step(&mut self, obs: &Observation) -> (Option<TouchEvent>, TraceRecord) {
        let mut rec = TraceRecord {
            frame: obs.frame_index,
            timestamp_us: obs.timestamp_us,
            corrected: obs.corrected,
            value: None,
            baseline: self.baseline,
            derivative: None,
            state: self.state,
            hover_mm: None,
            pressure: 0.0,
            line_count: obs.line_count,
            path: String::new(),
            flag: String::new(),
        };
        let Some(corrected) = obs.corrected.filter(|c| c.is_finite()) else {
            rec.flag = obs.note.clone().unwrap_or_else(|| "no measurement".into());
            return (None, rec);
        };
        let v = self.value(corrected);
        let contact = self.state.in_contact();
        let touch_mid = 0.5 + self.cfg.hysteresis / 2.0;

        let mut event = None;
        let mut now_contact = contact;
        match (self.prev_value, self.baseline) {
            (Some(prev), Some(base)) => {
                let (fire, next) = classify_touch(v, prev, base, contact, &self.cfg);
                rec.derivative = Some(v - prev);
                self.baseline = Some(next);
                if !contact && fire && v >= touch_mid {
                    now_contact = true;
                }
            }
            _ => self.baseline = Some(v),
        }
        if contact && v < 0.0 {
            now_contact = false;
        }
        self.prev_value = Some(v);
        rec.value = Some(v);
        rec.baseline = self.baseline;

        let hover_mm = if now_contact { 0.0 } else { self.hover_estimate(corrected, obs.line_count) };
        rec.hover_mm = Some(hover_mm);
        if now_contact {
            rec.pressure = self.pressure_estimate(corrected);
        }
        if now_contact != contact {
            event = Some(TouchEvent {
                kind: if now_contact { EventKind::Down } else { EventKind::Up },
                frame_index: obs.frame_index,
                timestamp_us: obs.timestamp_us,
                x: obs.x,
                y: obs.y,
                pressure: rec.pressure,
                latency_frames: 1,
            });
        }
        let next = self.target_state(corrected, hover_mm, now_contact);
        if next != self.state {
            rec.path = self.state.path_to(next).iter().map(|s| s.name()).collect::<Vec<_>>().join(">");
            self.state = next;
        }
        rec.state = self.state;
        (event, rec)
    }
}

/// What the debouncer sees each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DebounceSignal {
    Down,
    Up,
    /// Contact continues.
    Held,
    /// A frame without contact that is not the up frame itself.
    Clear,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Idle,
    Pressed(TouchEvent),
    Released(TouchEvent, u64),
}

/// Turns down/up pairs into key presses. A key is emitted once a released
/// pair is followed by a no-touch frame, or by the next down.
#[derive(Debug, Clone)]
pub struct Debouncer {
    phase: Phase,
    notes: Vec<String>,
}

impl Default for Debouncer {
    fn default() -> Self {
        Self::new()
    }
}

impl Debouncer {
    pub fn new() -> Self {
        Self { phase: Phase::Idle, notes: Vec::new() }
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    fn key(down: &TouchEvent, up_frame: u64, frame_index: u64, timestamp_us: u64) -> TouchEvent {
        TouchEvent {
            kind: EventKind::Key,
            frame_index,
            timestamp_us,
            latency_frames: (frame_index - up_frame) as u32,
            pressure: 0.0,
            ..*down
        }
    }

    /// `event` carries the down's position for `Down`; other signals only
    /// use its frame and time.
    pub fn feed(&mut self, signal: DebounceSignal, event: &TouchEvent) -> Option<TouchEvent> {
        let (f, t) = (event.frame_index, event.timestamp_us);
        match (self.phase, signal) {
            (Phase::Idle, DebounceSignal::Down) => {
                self.phase = Phase::Pressed(*event);
                None
            }
            (Phase::Idle, DebounceSignal::Up) => {
                self.notes.push(format!("frame {f}: up without down dropped"));
                None
            }
            (Phase::Idle, DebounceSignal::Held) => {
                self.notes.push(format!("frame {f}: contact without down ignored"));
                None
            }
            (Phase::Idle, DebounceSignal::Clear) => None,
            (Phase::Pressed(_), DebounceSignal::Down) => {
                self.notes.push(format!("frame {f}: repeated down ignored"));
                None
            }
            (Phase::Pressed(d), DebounceSignal::Up) => {
                self.phase = Phase::Released(d, f);
                None
            }
            (Phase::Pressed(_), DebounceSignal::Held) => None,
            (Phase::Pressed(d), DebounceSignal::Clear) => {
                self.notes.push(format!("frame {f}: contact of frame {} lost without up; down dropped", d.frame_index));
                self.phase = Phase::Idle;
                None
            }
            (Phase::Released(d, up), DebounceSignal::Clear) => {
                self.phase = Phase::Idle;
                Some(Self::key(&d, up, f, t))
            }
            (Phase::Released(d, up), DebounceSignal::Down) => {
                self.phase = Phase::Pressed(*event);
                Some(Self::key(&d, up, f, t))
            }
            (Phase::Released(_, _), DebounceSignal::Up) => {
                self.notes.push(format!("frame {f}: second up dropped"));
                None
            }
            (Phase::Released(d, _), DebounceSignal::Held) => {
                self.notes.push(format!("frame {f}: contact resumed without down; pair of frame {} dropped", d.frame_index));
                self.phase = Phase::Idle;
                None
            }
        }
    }

    /// Ends the stream. Open presses and releases with no following frame
    /// yield no key.
    pub fn finish(&mut self) {
        match self.phase {
            Phase::Pressed(d) => self.notes.push(format!("down at frame {} never released", d.frame_index)),
            Phase::Released(d, _) => {
                self.notes.push(format!("release of frame {} not followed by a no-touch frame", d.frame_index))
            }
            Phase::Idle => {}
        }
        self.phase = Phase::Idle;
    }
}

/// Keys for a whole signal sequence, one signal per frame starting at
/// frame 0.
pub fn debounce(signals: &[DebounceSignal]) -> (Vec<TouchEvent>, Vec<String>) {
    let mut d = Debouncer::new();
    let mut keys = Vec::new();
    for (i, &s) in signals.iter().enumerate() {
        let e = TouchEvent {
            kind: EventKind::Down,
            frame_index: i as u64,
            timestamp_us: 0,
            x: 0.0,
            y: 0.0,
            pressure: 0.0,
            latency_frames: 0,
        };
        keys.extend(d.feed(s, &e));
    }
    d.finish();
    (keys, d.notes)
}

#[derive(Serialize, Deserialize)]
struct EventRow {
    frame: u64,
    kind: EventKind,
    x_mm: f64,
    y_mm: f64,
    pressure: f64,
}

/// Writes the `frame,kind,x_mm,y_mm,pressure` event log.
pub fn write_events<W: Write>(sink: W, events: &[TouchEvent]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(["frame", "kind", "x_mm", "y_mm", "pressure"])?;
    for e in events {
        w.serialize(EventRow { frame: e.frame_index, kind: e.kind, x_mm: e.x, y_mm: e.y, pressure: e.pressure })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an event log. Timestamps are rebuilt from the frame index at `fps`.
pub fn read_events<R: Read>(source: R, fps: f64) -> Result<Vec<TouchEvent>> {
    let mut r = csv::Reader::from_reader(source);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["frame", "kind", "x_mm", "y_mm", "pressure"] {
        return Err(DetectError::Format(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: EventRow = row?;
        out.push(TouchEvent {
            kind: row.kind,
            frame_index: row.frame,
            timestamp_us: (row.frame as f64 * 1e6 / fps).round() as u64,
            x: row.x_mm,
            y: row.y_mm,
            pressure: row.pressure,
            latency_frames: 0,
        });
    }
    Ok(out)
}

pub fn write_trace<W: Write>(sink: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record([
        "frame",
        "timestamp_us",
        "corrected",
        "value",
        "baseline",
        "derivative",
        "state",
        "hover_mm",
        "pressure",
        "line_count",
        "path",
        "flag",
    ])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(source: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(source);
    r.deserialize().map(|row| row.map_err(DetectError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> DetectorCalibration {
        DetectorCalibration {
            anchors: StateAnchors { hover: 3000.0, subtle: 6000.0, touch: 7000.0, pressure: 10000.0 },
            hover_mm: 10.0,
            subtle_mm: 1.0,
            hover_line_count: 6.0,
        }
    }

    fn obs(frame: u64, corrected: f64) -> Observation {
        Observation { frame_index: frame, corrected: Some(corrected), line_count: Some(0), ..Default::default() }
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolate(1000.0, 1000.0, 3000.0, 0.0, 1.0, false).unwrap(), 0.0);
        assert_eq!(interpolate(2000.0, 1000.0, 3000.0, 0.0, 1.0, false).unwrap(), 0.5);
        assert_eq!(interpolate(2000.0, 1000.0, 3000.0, 0.0, 385.0, false).unwrap(), 192.5);
        assert_eq!(interpolate(4000.0, 1000.0, 3000.0, 0.0, 1.0, false).unwrap(), 1.5);
        assert_eq!(interpolate(4000.0, 1000.0, 3000.0, 0.0, 1.0, true).unwrap(), 1.0);
        assert_eq!(interpolate(4000.0, 1000.0, 3000.0, 10.0, 1.0, true).unwrap(), 1.0);
        assert!(interpolate(1.0, 2.0, 2.0, 0.0, 1.0, false).is_err());
    }

    #[test]
    fn classifier_cases() {
        let cfg = DetectorConfig::default();
        let (fire, b) = classify_touch(0.0, 0.0, 0.0, false, &cfg);
        assert!(!fire);
        assert_eq!(b, 0.0);
        assert!(classify_touch(1.0, 0.0, 0.0, false, &cfg).0);
        // frozen baseline stays put
        assert_eq!(classify_touch(1.0, 1.0, 0.0, true, &cfg).1, 0.0);
        // a large drop is a deviation but not a rise
        assert!(!classify_touch(-1.0, 0.0, 0.0, false, &cfg).0);
    }

    #[test]
    fn slow_drift_never_fires() {
        let cfg = DetectorConfig::default();
        let (mut b, mut prev) = (0.0, 0.0);
        for k in 1..=300 {
            let v = k as f64 / 300.0;
            let (fire, nb) = classify_touch(v, prev, b, false, &cfg);
            assert!(!fire, "fired at {k}");
            b = nb;
            prev = v;
        }
    }

    #[test]
    fn hover_anchor_maps_to_hover_height() {
        let mut d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        let (ev, rec) = d.step(&obs(0, 3000.0));
        assert!(ev.is_none());
        assert_eq!(rec.state, TouchState::Hover);
        assert_eq!(rec.hover_mm, Some(10.0));
        assert_eq!(rec.path, "idle>hover");
        assert_eq!(d.hover_estimate(6000.0, None), 1.0);
        assert_eq!(d.hover_estimate(6500.0, None), 0.5);
    }

    #[test]
    fn far_hover_from_line_count() {
        let d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        assert_eq!(d.hover_estimate(1000.0, Some(6)), 10.0);
        assert_eq!(d.hover_estimate(1000.0, Some(3)), 12.5);
        assert_eq!(d.hover_estimate(1000.0, Some(0)), 15.0);
        let faint = DetectorCalibration { hover_line_count: 0.5, ..cal() };
        let d = Detector::new(faint, DetectorConfig::default()).unwrap();
        assert_eq!(d.hover_estimate(1500.0, Some(0)), 12.5);
    }

    #[test]
    fn tap_gives_one_down_and_one_up() {
        let mut d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        let series = [2000.0, 3000.0, 4500.0, 5800.0, 7000.0, 7050.0, 6950.0, 5000.0, 3000.0];
        let mut events = Vec::new();
        let mut states = Vec::new();
        for (i, &c) in series.iter().enumerate() {
            let (e, r) = d.step(&obs(i as u64, c));
            events.extend(e);
            states.push(r.state);
        }
        let kinds: Vec<_> = events.iter().map(|e| (e.kind, e.frame_index)).collect();
        assert_eq!(kinds, vec![(EventKind::Down, 4), (EventKind::Up, 7)]);
        assert_eq!(states[4], TouchState::Touch);
        assert_eq!(states[8], TouchState::Hover);
    }

    #[test]
    fn idle_to_touch_logs_the_full_path() {
        let mut d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        d.step(&obs(0, 0.0));
        let (e, r) = d.step(&obs(1, 7000.0));
        assert_eq!(e.unwrap().kind, EventKind::Down);
        assert_eq!(r.path, "idle>hover>subtle>touch");
    }

    #[test]
    fn pressure_midpoint() {
        let mut d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        d.step(&obs(0, 3000.0));
        d.step(&obs(1, 7000.0));
        let (_, r) = d.step(&obs(2, 8500.0));
        assert_eq!(r.pressure, 0.5);
        let (_, r) = d.step(&obs(3, 9000.0));
        assert_eq!(r.state, TouchState::Pressure);
    }

    #[test]
    fn missing_measurement_freezes() {
        let mut d = Detector::new(cal(), DetectorConfig::default()).unwrap();
        d.step(&obs(0, 3000.0));
        let (e, r) = d.step(&Observation { frame_index: 1, note: Some("no landmarks".into()), ..Default::default() });
        assert!(e.is_none());
        assert_eq!(r.state, TouchState::Hover);
        assert_eq!(r.flag, "no landmarks");
        assert_eq!(d.state(), TouchState::Hover);
    }

    #[test]
    fn debounce_examples() {
        use DebounceSignal::*;
        assert_eq!(debounce(&[Down, Up, Clear]).0.len(), 1);
        let (keys, _) = debounce(&[Down, Up, Down, Up, Clear]);
        assert_eq!(keys.iter().map(|k| k.frame_index).collect::<Vec<_>>(), vec![2, 4]);
        let (keys, notes) = debounce(&[Clear, Down, Held, Held]);
        assert!(keys.is_empty());
        assert!(notes.iter().any(|n| n.contains("never released")));
        let (keys, notes) = debounce(&[Up, Clear]);
        assert!(keys.is_empty() && notes.len() == 1);
        assert_eq!(debounce(&[Down, Up, Clear]).0[0].latency_frames, 1);
        let (keys, notes) = debounce(&[Down, Clear, Up, Clear]);
        assert!(keys.is_empty() && notes.len() == 2);
    }

    #[test]
    fn event_log_round_trip() {
        let e = TouchEvent {
            kind: EventKind::Down,
            frame_index: 90,
            timestamp_us: 3_000_000,
            x: -25.5,
            y: 74.125,
            pressure: 0.25,
            latency_frames: 1,
        };
        let mut buf = Vec::new();
        write_events(&mut buf, &[e]).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("frame,kind,x_mm,y_mm,pressure\n90,down,-25.5,74.125,0.25\n"));
        let back = read_events(&buf[..], 30.0).unwrap();
        assert_eq!(back, vec![TouchEvent { latency_frames: 0, ..e }]);
        assert!(read_events("a,b\n".as_bytes(), 30.0).is_err());
    }
}
