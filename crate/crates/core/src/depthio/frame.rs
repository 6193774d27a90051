use super::{DepthioError, Result};

/// Depth readings of 0 mm mark pixels without a valid return.
pub const INVALID_DEPTH: u16 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    /// Microseconds since the start of the stream.
    pub timestamp_us: u64,
    pub frame_index: u64,
    /// Row-major millimeters.
    pub depth: Vec<u16>,
    pub ir: Option<Vec<u16>>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, frame_index: u64, timestamp_us: u64, depth: Vec<u16>) -> Result<Self> {
        let frame = Self { width, height, timestamp_us, frame_index, depth, ir: None };
        frame.validate()?;
        Ok(frame)
    }

    pub fn with_ir(mut self, ir: Vec<u16>) -> Result<Self> {
        self.ir = Some(ir);
        self.validate()?;
        Ok(self)
    }

    pub fn filled(width: usize, height: usize, frame_index: u64, timestamp_us: u64, value: u16) -> Self {
        Self { width, height, timestamp_us, frame_index, depth: vec![value; width * height], ir: None }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.width * self.height;
        let bad = |reason: String| DepthioError::InvalidFrame { frame_index: self.frame_index, reason };
        if self.width == 0 || self.height == 0 {
            return Err(bad("zero-sized frame".into()));
        }
        if self.depth.len() != n {
            return Err(bad(format!("depth plane has {} values, expected {n}", self.depth.len())));
        }
        if let Some(ir) = &self.ir {
            if ir.len() != n {
                return Err(bad(format!("ir plane has {} values, expected {n}", ir.len())));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u16 {
        self.depth[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.at(x, y) != INVALID_DEPTH
    }
}
