use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::render::GroundTruthRecord;
use super::scene::FingerPose;
use super::{MpisimError, Result};

#[derive(Serialize, Deserialize)]
struct Row {
    frame: u64,
    timestamp_us: u64,
    x: Option<f64>,
    y: Option<f64>,
    hover: Option<f64>,
    pressure: f64,
    pitch: Option<f64>,
    yaw: Option<f64>,
    roll: Option<f64>,
    contact: u8,
    u_tip: Option<f64>,
    v_tip: Option<f64>,
    u_dip: Option<f64>,
    v_dip: Option<f64>,
}

const HEADER: [&str; 14] =
    ["frame", "timestamp_us", "x", "y", "hover", "pressure", "pitch", "yaw", "roll", "contact", "u_tip", "v_tip", "u_dip", "v_dip"];

/// Writes the ground-truth log, one row per frame. Frames without a finger
/// leave the pose and pixel columns empty.
pub fn write_ground_truth<W: Write>(sink: W, records: &[GroundTruthRecord]) -> Result<()> {
    let io = |e: csv::Error| MpisimError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        let p = r.pose.as_ref();
        w.serialize(Row {
            frame: r.frame_index,
            timestamp_us: r.timestamp_us,
            x: p.map(|p| p.x),
            y: p.map(|p| p.y),
            hover: p.map(|p| p.hover),
            pressure: r.pressure,
            pitch: p.map(|p| p.pitch),
            yaw: p.map(|p| p.yaw),
            roll: p.map(|p| p.roll),
            contact: r.contact as u8,
            u_tip: r.tip_px.map(|t| t.0),
            v_tip: r.tip_px.map(|t| t.1),
            u_dip: r.dip_px.map(|t| t.0),
            v_dip: r.dip_px.map(|t| t.1),
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| MpisimError::Io(e.to_string()))
}

pub fn read_ground_truth<R: Read>(source: R) -> Result<Vec<GroundTruthRecord>> {
    let bad = |m: String| MpisimError::Io(m);
    let mut r = csv::Reader::from_reader(source);
    let mut out: Vec<GroundTruthRecord> = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: Row = row.map_err(|e| bad(format!("truth row {}: {e}", i + 1)))?;
        let pose = match (row.x, row.y, row.hover, row.pitch, row.yaw) {
            (Some(x), Some(y), Some(hover), Some(pitch), Some(yaw)) => Some(FingerPose {
                x,
                y,
                hover,
                pressure: row.pressure,
                pitch,
                yaw,
                roll: row.roll.unwrap_or(0.0),
            }),
            (None, None, None, None, None) => None,
            _ => return Err(bad(format!("truth row {}: partial pose", i + 1))),
        };
        let pair = |a: Option<f64>, b: Option<f64>| a.zip(b);
        out.push(GroundTruthRecord {
            frame_index: row.frame,
            timestamp_us: row.timestamp_us,
            pose,
            contact: row.contact != 0,
            pressure: row.pressure,
            tip_px: pair(row.u_tip, row.v_tip),
            dip_px: pair(row.u_dip, row.v_dip),
        });
    }
    Ok(out)
}
