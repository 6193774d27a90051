use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{HalocoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

/// Image position plus depth, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub frame_index: u64,
    pub tip: Landmark,
    pub dip: Landmark,
    pub hand: Hand,
}

impl LandmarkFrame {
    pub fn in_bounds(&self, width: usize, height: usize) -> bool {
        let ok = |l: &Landmark| l.u >= 0.0 && l.v >= 0.0 && l.u < width as f64 && l.v < height as f64;
        ok(&self.tip) && ok(&self.dip)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    frame: u64,
    u_tip: f64,
    v_tip: f64,
    z_tip: f64,
    u_dip: f64,
    v_dip: f64,
    z_dip: f64,
    hand: Hand,
}

/// Writes the `frame,u_tip,v_tip,z_tip,u_dip,v_dip,z_dip,hand` sidecar.
pub fn write_landmarks<W: Write>(sink: W, frames: &[LandmarkFrame]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for f in frames {
        w.serialize(Row {
            frame: f.frame_index,
            u_tip: f.tip.u,
            v_tip: f.tip.v,
            z_tip: f.tip.depth,
            u_dip: f.dip.u,
            v_dip: f.dip.v,
            z_dip: f.dip.depth,
            hand: f.hand,
        })?;
    }
    if frames.is_empty() {
        w.write_record(["frame", "u_tip", "v_tip", "z_tip", "u_dip", "v_dip", "z_dip", "hand"])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a landmark sidecar; frame indices must increase.
pub fn read_landmarks<R: Read>(source: R) -> Result<Vec<LandmarkFrame>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out: Vec<LandmarkFrame> = Vec::new();
    for row in r.deserialize() {
        let row: Row = row?;
        if out.last().is_some_and(|l| l.frame_index >= row.frame) {
            return Err(HalocoreError::Landmarks(format!("frame {} out of order", row.frame)));
        }
        out.push(LandmarkFrame {
            frame_index: row.frame,
            tip: Landmark { u: row.u_tip, v: row.v_tip, depth: row.z_tip },
            dip: Landmark { u: row.u_dip, v: row.v_dip, depth: row.z_dip },
            hand: row.hand,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let lm = LandmarkFrame {
            frame_index: 4,
            tip: Landmark { u: 10.25, v: 20.5, depth: 491.75 },
            dip: Landmark { u: 11.0, v: 40.125, depth: 475.0 },
            hand: Hand::Left,
        };
        let mut buf = Vec::new();
        write_landmarks(&mut buf, &[lm]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame,u_tip,v_tip,z_tip,u_dip,v_dip,z_dip,hand\n"));
        assert_eq!(read_landmarks(&buf[..]).unwrap(), vec![lm]);
    }

    #[test]
    fn empty_and_unordered() {
        let mut buf = Vec::new();
        write_landmarks(&mut buf, &[]).unwrap();
        assert!(read_landmarks(&buf[..]).unwrap().is_empty());
        let text = "frame,u_tip,v_tip,z_tip,u_dip,v_dip,z_dip,hand\n2,1,1,1,2,2,2,right\n1,1,1,1,2,2,2,right\n";
        assert!(read_landmarks(text.as_bytes()).is_err());
    }
}
