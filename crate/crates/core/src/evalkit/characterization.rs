use std::fmt;
use std::io::Read;

use serde::Serialize;

use super::{EvalError, Result};
use crate::mpisim::{CharacterizationRow, SweepAxis, SweepState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacterizationPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub state: SweepState,
    pub strength_norm: f64,
}

impl From<&CharacterizationRow> for CharacterizationPoint {
    fn from(r: &CharacterizationRow) -> Self {
        Self { axis: r.axis, value: r.value, state: r.state, strength_norm: r.strength_norm }
    }
}

/// Reads the `param,state,strength_norm` table written by the
/// characterization sweep.
pub fn read_characterization_csv<R: Read>(source: R) -> Result<Vec<CharacterizationPoint>> {
    let mut r = csv::Reader::from_reader(source);
    let headers = r.headers().map_err(|e| EvalError::Schema(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["param", "state", "strength_norm"] {
        return Err(EvalError::Schema(format!("expected header param,state,strength_norm, got {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| EvalError::Schema(e.to_string()))?;
        let bad = |what: &str| EvalError::Schema(format!("row {}: bad {what} {:?}", i + 1, rec.iter().collect::<Vec<_>>()));
        let (axis, value) = rec[0].split_once('=').ok_or_else(|| bad("param"))?;
        let axis = SweepAxis::parse(axis).ok_or_else(|| bad("axis"))?;
        let value: f64 = value.parse().map_err(|_| bad("param value"))?;
        let state = SweepState::parse(&rec[1]).ok_or_else(|| bad("state"))?;
        let strength_norm: f64 = rec[2].parse().map_err(|_| bad("strength_norm"))?;
        if !value.is_finite() || !strength_norm.is_finite() {
            return Err(bad("number"));
        }
        out.push(CharacterizationPoint { axis, value, state, strength_norm });
    }
    if out.is_empty() {
        return Err(EvalError::Schema("no rows".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for PropertyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Sorted `(value, strength_norm)` of one curve.
fn curve(points: &[CharacterizationPoint], axis: SweepAxis, state: SweepState) -> Vec<(f64, f64)> {
    let mut c: Vec<(f64, f64)> = points.iter().filter(|p| p.axis == axis && p.state == state).map(|p| (p.value, p.strength_norm)).collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

fn bound_check(
    name: &str,
    points: &[CharacterizationPoint],
    axis: SweepAxis,
    state: SweepState,
    region: impl Fn(f64) -> bool,
    ok: impl Fn(f64) -> bool,
    rule: &str,
) -> PropertyCheck {
    let c: Vec<(f64, f64)> = curve(points, axis, state).into_iter().filter(|(v, _)| region(*v)).collect();
    let failures: Vec<String> = c.iter().filter(|(_, s)| !ok(*s)).map(|(v, s)| format!("{}={v}: {s:.3}", axis.name())).collect();
    let (passed, detail) = if c.is_empty() {
        (false, "no points in range".to_string())
    } else if failures.is_empty() {
        (true, format!("{rule} at all {} points", c.len()))
    } else {
        (false, format!("{rule} violated at {}", failures.join(", ")))
    };
    PropertyCheck { name: name.into(), passed, detail }
}

/// Envelope properties of the normalized curves: touch stays at or above
/// 0.75 out to 1 m, 50 degrees of yaw and 45 degrees of pitch; hover drops
/// below 0.5 from 0.8 m, 25 degrees of yaw and 15 degrees of pitch on; the
/// touch curve never rises with yaw.
pub fn characterization_report(points: &[CharacterizationPoint]) -> Vec<PropertyCheck> {
    use SweepAxis::*;
    use SweepState::*;
    let above = |s: f64| s >= 0.75;
    let below = |s: f64| s < 0.5;
    let mut out = vec![
        bound_check("touch_z_1m", points, Z, Touch, |v| v <= 1.0 + 1e-9, above, ">= 0.75"),
        bound_check("touch_yaw_50", points, Yaw, Touch, |v| v <= 50.0 + 1e-9, above, ">= 0.75"),
        bound_check("touch_pitch_45", points, Pitch, Touch, |v| v.abs() <= 45.0 + 1e-9, above, ">= 0.75"),
        bound_check("hover_z_80cm", points, Z, Hover, |v| v >= 0.8 - 1e-9, below, "< 0.5"),
        bound_check("hover_yaw_25", points, Yaw, Hover, |v| v >= 25.0 - 1e-9, below, "< 0.5"),
        bound_check("hover_pitch_15", points, Pitch, Hover, |v| v.abs() >= 15.0 - 1e-9, below, "< 0.5"),
    ];
    let c = curve(points, Yaw, Touch);
    let rises: Vec<String> =
        c.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| format!("{} -> {}: {:.4} -> {:.4}", w[0].0, w[1].0, w[0].1, w[1].1)).collect();
    out.push(PropertyCheck {
        name: "touch_yaw_monotone".into(),
        passed: c.len() >= 2 && rises.is_empty(),
        detail: if c.len() < 2 {
            "fewer than two yaw points".into()
        } else if rises.is_empty() {
            format!("non-increasing over {} points", c.len())
        } else {
            format!("rises at {}", rises.join(", "))
        },
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> String {
        let mut s = String::from("param,state,strength_norm\n");
        for (i, v) in [0.0, 10.0, 20.0, 30.0, 40.0, 50.0].iter().enumerate() {
            s += &format!("yaw={v},touch,{}\n", 1.0 - 0.04 * i as f64);
            s += &format!("yaw={v},hover,{}\n", 1.0 - 0.2 * i as f64);
        }
        for v in [-45.0, -15.0, 0.0, 15.0, 45.0] {
            s += &format!("pitch={v},touch,{}\n", if v == 0.0 { 1.0 } else { 0.9 });
            s += &format!("pitch={v},hover,{}\n", if v == 0.0 { 1.0 } else { 0.3 });
        }
        for v in [0.5, 0.8, 1.0] {
            s += &format!("z={v},touch,{}\n", 1.0 - 0.4 * (v - 0.5));
            s += &format!("z={v},hover,{}\n", if v == 0.5 { 1.0 } else { 0.2 });
        }
        s
    }

    #[test]
    fn synthetic_table_passes() {
        let pts = read_characterization_csv(table().as_bytes()).unwrap();
        for c in characterization_report(&pts) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn shuffled_yaw_breaks_monotonicity() {
        let pts = read_characterization_csv(table().as_bytes()).unwrap();
        let mut touch_yaw: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].axis == SweepAxis::Yaw && pts[i].state == SweepState::Touch).collect();
        let values: Vec<f64> = touch_yaw.iter().map(|&i| pts[i].strength_norm).collect();
        touch_yaw.reverse();
        let mut shuffled = pts.clone();
        for (slot, v) in touch_yaw.iter().zip(values) {
            shuffled[*slot].strength_norm = v;
        }
        let report = characterization_report(&shuffled);
        assert!(!report.iter().find(|c| c.name == "touch_yaw_monotone").unwrap().passed);
    }

    #[test]
    fn empty_csv_is_a_schema_error() {
        assert!(matches!(read_characterization_csv("".as_bytes()), Err(EvalError::Schema(_))));
        assert!(matches!(read_characterization_csv("param,state,strength_norm\n".as_bytes()), Err(EvalError::Schema(_))));
        assert!(matches!(read_characterization_csv("param,state\nyaw=0,touch\n".as_bytes()), Err(EvalError::Schema(_))));
        assert!(matches!(read_characterization_csv("param,state,strength_norm\nroll=0,touch,1\n".as_bytes()), Err(EvalError::Schema(_))));
    }

    #[test]
    fn missing_curve_fails_rather_than_passing() {
        let pts = read_characterization_csv("param,state,strength_norm\nyaw=0,touch,1\n".as_bytes()).unwrap();
        let report = characterization_report(&pts);
        assert!(!report.iter().find(|c| c.name == "touch_z_1m").unwrap().passed);
    }
}
