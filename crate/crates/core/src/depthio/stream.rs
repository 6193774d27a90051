//! `HTDS` depth stream container, little-endian:
//!
//! ```text
//! magic "HTDS" | u16 version (1) | u16 width | u16 height | f32 nominal_fps
//! u8 channel flags (bit0 depth, bit1 ir)
//! f32 z_distance (m) | f32 yaw (deg) | f32 pitch (deg)
//! u32 frame count (0xFFFFFFFF when unknown)
//! per frame: u64 timestamp_us | depth plane u16[w*h] | ir plane u16[w*h] if flagged
//! ```

use std::io::{self, Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{DepthFrame, DepthioError, Result};
use crate::geometry::CameraPose;

pub const STREAM_MAGIC: [u8; 4] = *b"HTDS";
pub const STREAM_VERSION: u16 = 1;
pub const UNKNOWN_FRAME_COUNT: u32 = u32::MAX;

const FLAG_DEPTH: u8 = 1;
const FLAG_IR: u8 = 1 << 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 2 + 4 + 1 + 12 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channels {
    pub depth: bool,
    pub ir: bool,
}

impl Default for Channels {
    fn default() -> Self {
        Self { depth: true, ir: false }
    }
}

impl Channels {
    fn bits(&self) -> u8 {
        (if self.depth { FLAG_DEPTH } else { 0 }) | (if self.ir { FLAG_IR } else { 0 })
    }

    fn from_bits(bits: u8) -> Result<Self> {
        if bits & !(FLAG_DEPTH | FLAG_IR) != 0 {
            return Err(DepthioError::InvalidHeader(format!("unsupported channel flags {bits:#04x}")));
        }
        if bits & FLAG_DEPTH == 0 {
            return Err(DepthioError::InvalidHeader("depth channel flag not set".into()));
        }
        Ok(Self { depth: true, ir: bits & FLAG_IR != 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamHeader {
    pub width: usize,
    pub height: usize,
    pub nominal_fps: f32,
    pub channels: Channels,
    /// Stored as `f32`; values round-trip at single precision.
    pub camera_pose: CameraPose,
}

impl StreamHeader {
    pub fn new(width: usize, height: usize, nominal_fps: f32, camera_pose: CameraPose) -> Self {
        Self { width, height, nominal_fps, channels: Channels::default(), camera_pose }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DepthioError::InvalidHeader(m.into()));
        if self.width == 0 || self.height == 0 || self.width > u16::MAX as usize || self.height > u16::MAX as usize {
            return bad("width and height must be in 1..=65535");
        }
        if !(self.nominal_fps > 0.0 && self.nominal_fps.is_finite()) {
            return bad("nominal_fps must be positive");
        }
        if !self.channels.depth {
            return bad("depth channel is required");
        }
        if !self.camera_pose.is_valid() {
            return bad("camera pose needs z_distance > 0 and finite angles");
        }
        Ok(())
    }

    /// Bytes per stored frame, timestamp included.
    pub fn frame_len(&self) -> usize {
        let plane = self.width * self.height * 2;
        8 + plane * if self.channels.ir { 2 } else { 1 }
    }

    pub const fn header_len() -> usize {
        HEADER_LEN
    }

    fn write_to<W: Write>(&self, w: &mut W, frame_count: u32) -> io::Result<()> {
        w.write_all(&STREAM_MAGIC)?;
        w.write_u16::<LE>(STREAM_VERSION)?;
        w.write_u16::<LE>(self.width as u16)?;
        w.write_u16::<LE>(self.height as u16)?;
        w.write_f32::<LE>(self.nominal_fps)?;
        w.write_u8(self.channels.bits())?;
        w.write_f32::<LE>(self.camera_pose.z_distance as f32)?;
        w.write_f32::<LE>(self.camera_pose.yaw as f32)?;
        w.write_f32::<LE>(self.camera_pose.pitch as f32)?;
        w.write_u32::<LE>(frame_count)
    }

    fn read_from<R: Read>(r: &mut R) -> Result<(Self, u32)> {
        let mut buf = [0u8; HEADER_LEN];
        read_full(r, &mut buf)?.then_some(()).ok_or(DepthioError::TruncatedHeader)?;
        let mut c = &buf[..];
        let mut magic = [0u8; 4];
        c.read_exact(&mut magic)?;
        if magic != STREAM_MAGIC {
            return Err(DepthioError::BadMagic(magic));
        }
        let version = c.read_u16::<LE>()?;
        if version != STREAM_VERSION {
            return Err(DepthioError::UnsupportedVersion(version));
        }
        let width = c.read_u16::<LE>()? as usize;
        let height = c.read_u16::<LE>()? as usize;
        let nominal_fps = c.read_f32::<LE>()?;
        let channels = Channels::from_bits(c.read_u8()?)?;
        let camera_pose = CameraPose {
            z_distance: c.read_f32::<LE>()? as f64,
            yaw: c.read_f32::<LE>()? as f64,
            pitch: c.read_f32::<LE>()? as f64,
        };
        let count = c.read_u32::<LE>()?;
        let header = Self { width, height, nominal_fps, channels, camera_pose };
        header.validate()?;
        Ok((header, count))
    }
}

/// Returns whether `buf` could be filled before the input ended.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled == buf.len())
}

/// Incremental writer; frames are validated against the header as they arrive.
pub struct StreamWriter<W: Write> {
    sink: W,
    header: StreamHeader,
    declared: Option<u32>,
    written: u64,
    last_timestamp: Option<u64>,
    bytes: u64,
    scratch: Vec<u8>,
}

impl<W: Write> StreamWriter<W> {
    /// `frame_count` of `None` writes the "unknown" marker, for live capture.
    pub fn new(mut sink: W, header: StreamHeader, frame_count: Option<u32>) -> Result<Self> {
        header.validate()?;
        if frame_count == Some(UNKNOWN_FRAME_COUNT) {
            return Err(DepthioError::InvalidHeader("frame count 0xFFFFFFFF is reserved".into()));
        }
        header.write_to(&mut sink, frame_count.unwrap_or(UNKNOWN_FRAME_COUNT))?;
        Ok(Self {
            sink,
            header,
            declared: frame_count,
            written: 0,
            last_timestamp: None,
            bytes: HEADER_LEN as u64,
            scratch: Vec::with_capacity(header.frame_len()),
        })
    }

    pub fn write_frame(&mut self, frame: &DepthFrame) -> Result<()> {
        let h = &self.header;
        if frame.width != h.width || frame.height != h.height {
            return Err(DepthioError::DimensionMismatch {
                frame_index: frame.frame_index,
                expected_w: h.width,
                expected_h: h.height,
                found_w: frame.width,
                found_h: frame.height,
            });
        }
        frame.validate()?;
        let invalid = |reason: &str| DepthioError::InvalidFrame { frame_index: frame.frame_index, reason: reason.into() };
        if frame.ir.is_some() != h.channels.ir {
            return Err(invalid("ir plane presence does not match the header channels"));
        }
        if self.last_timestamp.is_some_and(|t| frame.timestamp_us <= t) {
            return Err(invalid("timestamps must strictly increase"));
        }
        if self.declared.is_some_and(|n| self.written >= n as u64) {
            return Err(invalid("more frames than the declared frame count"));
        }

        self.scratch.clear();
        self.scratch.write_u64::<LE>(frame.timestamp_us)?;
        for &d in &frame.depth {
            self.scratch.write_u16::<LE>(d)?;
        }
        if let Some(ir) = &frame.ir {
            for &v in ir {
                self.scratch.write_u16::<LE>(v)?;
            }
        }
        self.sink.write_all(&self.scratch)?;
        self.bytes += self.scratch.len() as u64;
        self.written += 1;
        self.last_timestamp = Some(frame.timestamp_us);
        Ok(())
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    /// Flushes the sink; errors if fewer frames than declared were written.
    pub fn finish(mut self) -> Result<(W, u64)> {
        if let Some(n) = self.declared {
            if self.written != n as u64 {
                return Err(DepthioError::InvalidHeader(format!("declared {n} frames, wrote {}", self.written)));
            }
        }
        self.sink.flush()?;
        Ok((self.sink, self.bytes))
    }
}

/// Writes a complete stream and returns the number of bytes written.
pub fn write_stream<W: Write>(frames: &[DepthFrame], header: &StreamHeader, sink: W) -> Result<u64> {
    let count = u32::try_from(frames.len())
        .ok()
        .filter(|&n| n != UNKNOWN_FRAME_COUNT)
        .ok_or_else(|| DepthioError::InvalidHeader("too many frames".into()))?;
    let mut w = StreamWriter::new(sink, *header, Some(count))?;
    for f in frames {
        w.write_frame(f)?;
    }
    Ok(w.finish()?.1)
}

/// Lazy frame iterator over an `HTDS` source.
pub struct StreamReader<R: Read> {
    source: R,
    header: StreamHeader,
    declared: Option<u32>,
    next_index: u64,
    done: bool,
    buf: Vec<u8>,
}

impl<R: Read> StreamReader<R> {
    pub fn new(mut source: R) -> Result<Self> {
        let (header, count) = StreamHeader::read_from(&mut source)?;
        let declared = (count != UNKNOWN_FRAME_COUNT).then_some(count);
        let buf = vec![0u8; header.frame_len()];
        Ok(Self { source, header, declared, next_index: 0, done: false, buf })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    /// Frame count from the header, if it was known when the stream was written.
    pub fn declared_frames(&self) -> Option<u32> {
        self.declared
    }

    fn read_next(&mut self) -> Result<Option<DepthFrame>> {
        if self.declared.is_some_and(|n| self.next_index >= n as u64) {
            return Ok(None);
        }
        let frame_index = self.next_index;
        let mut filled = 0;
        while filled < self.buf.len() {
            match self.source.read(&mut self.buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 && self.declared.is_none() {
            return Ok(None);
        }
        if filled < self.buf.len() {
            return Err(DepthioError::Truncated { frame_index });
        }

        let (w, h) = (self.header.width, self.header.height);
        let n = w * h;
        let mut c = &self.buf[..];
        let timestamp_us = c.read_u64::<LE>()?;
        let mut depth = vec![0u16; n];
        c.read_u16_into::<LE>(&mut depth)?;
        let ir = if self.header.channels.ir {
            let mut ir = vec![0u16; n];
            c.read_u16_into::<LE>(&mut ir)?;
            Some(ir)
        } else {
            None
        };
        self.next_index += 1;
        Ok(Some(DepthFrame { width: w, height: h, timestamp_us, frame_index, depth, ir }))
    }
}

impl<R: Read> Iterator for StreamReader<R> {
    type Item = Result<DepthFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_next();
        match item {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Reads a whole stream into memory.
pub fn read_stream<R: Read>(source: R) -> Result<(StreamHeader, Vec<DepthFrame>)> {
    let reader = StreamReader::new(source)?;
    let header = *reader.header();
    let frames = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(w: usize, h: usize) -> StreamHeader {
        StreamHeader::new(w, h, 30.0, CameraPose { z_distance: 0.5, yaw: 10.0, pitch: -5.0 })
    }

    #[test]
    fn empty_stream_is_header_only() {
        let mut buf = Vec::new();
        let n = write_stream(&[], &header(4, 3), &mut buf).unwrap();
        assert_eq!(n as usize, HEADER_LEN);
        assert_eq!(buf.len(), HEADER_LEN);
        let (h, frames) = read_stream(&buf[..]).unwrap();
        assert_eq!(h, header(4, 3));
        assert!(frames.is_empty());
    }

    #[test]
    fn single_zero_frame_layout() {
        let f = DepthFrame::filled(2, 2, 0, 0, 0);
        let mut buf = Vec::new();
        write_stream(&[f.clone()], &header(2, 2), &mut buf).unwrap();
        // header, u64 timestamp, 4 depth samples
        assert_eq!(buf.len(), HEADER_LEN + 8 + 8);
        assert_eq!(&buf[..4], b"HTDS");
        let (_, frames) = read_stream(&buf[..]).unwrap();
        assert_eq!(frames, vec![f]);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut buf = Vec::new();
        write_stream(&[], &header(2, 2), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[1] = b'X';
        assert!(matches!(read_stream(&bad[..]), Err(DepthioError::BadMagic(_))));
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(read_stream(&bad[..]), Err(DepthioError::UnsupportedVersion(2))));
        assert!(matches!(read_stream(&buf[..10]), Err(DepthioError::TruncatedHeader)));
    }

    #[test]
    fn truncation_names_the_frame() {
        let frames: Vec<_> = (0..3).map(|i| DepthFrame::filled(3, 2, i, i * 33_333, 500)).collect();
        let mut buf = Vec::new();
        write_stream(&frames, &header(3, 2), &mut buf).unwrap();
        let cut = HEADER_LEN + 2 * header(3, 2).frame_len() + 5;
        match read_stream(&buf[..cut]) {
            Err(DepthioError::Truncated { frame_index }) => assert_eq!(frame_index, 2),
            other => panic!("expected truncation, got {other:?}"),
        }
        // a declared count also catches a cut on a frame boundary
        let cut = HEADER_LEN + header(3, 2).frame_len();
        assert!(matches!(read_stream(&buf[..cut]), Err(DepthioError::Truncated { frame_index: 1 })));
    }

    #[test]
    fn unknown_count_reads_to_eof() {
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, header(2, 1), None).unwrap();
        for i in 0..4 {
            w.write_frame(&DepthFrame::filled(2, 1, i, i + 1, 7)).unwrap();
        }
        w.finish().unwrap();
        let reader = StreamReader::new(&buf[..]).unwrap();
        assert_eq!(reader.declared_frames(), None);
        assert_eq!(reader.count(), 4);
    }

    #[test]
    fn writer_rejects_mismatches() {
        let mut buf = Vec::new();
        let mut w = StreamWriter::new(&mut buf, header(2, 2), None).unwrap();
        assert!(matches!(
            w.write_frame(&DepthFrame::filled(3, 2, 0, 0, 1)),
            Err(DepthioError::DimensionMismatch { .. })
        ));
        w.write_frame(&DepthFrame::filled(2, 2, 0, 10, 1)).unwrap();
        assert!(w.write_frame(&DepthFrame::filled(2, 2, 1, 10, 1)).is_err());
        let with_ir = DepthFrame::filled(2, 2, 1, 20, 1).with_ir(vec![0; 4]).unwrap();
        assert!(w.write_frame(&with_ir).is_err());
    }

    #[test]
    fn ir_plane_round_trips() {
        let mut h = header(2, 2);
        h.channels.ir = true;
        let f = DepthFrame::filled(2, 2, 0, 5, 600).with_ir(vec![1, 2, 3, 4]).unwrap();
        let mut buf = Vec::new();
        write_stream(&[f.clone()], &h, &mut buf).unwrap();
        assert_eq!(read_stream(&buf[..]).unwrap().1, vec![f]);
    }
}
