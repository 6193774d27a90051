use super::{DepthFrame, DepthioError, Result, INVALID_DEPTH};
use crate::geometry::Rect;

/// Frames averaged into the background under the default pipeline policy.
pub const BACKGROUND_FRAMES: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    pub width: usize,
    pub height: usize,
    pub mean_depth: Vec<f64>,
    pub valid_mask: Vec<bool>,
    pub frames_used: usize,
}

impl BackgroundModel {
    #[inline]
    pub fn mean_at(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid_mask[i].then_some(self.mean_depth[i])
    }
}

/// Running per-pixel sums for a background built one frame at a time.
#[derive(Debug, Clone)]
pub struct BackgroundBuilder {
    width: usize,
    height: usize,
    sums: Vec<f64>,
    counts: Vec<u32>,
    frames: usize,
}

impl BackgroundBuilder {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, sums: vec![0.0; width * height], counts: vec![0; width * height], frames: 0 }
    }

    pub fn push(&mut self, f: &DepthFrame) -> Result<()> {
        if f.width != self.width || f.height != self.height {
            return Err(DepthioError::DimensionMismatch {
                frame_index: f.frame_index,
                expected_w: self.width,
                expected_h: self.height,
                found_w: f.width,
                found_h: f.height,
            });
        }
        for (i, &d) in f.depth.iter().enumerate() {
            if d != INVALID_DEPTH {
                self.sums[i] += d as f64;
                self.counts[i] += 1;
            }
        }
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn finish(self) -> Result<BackgroundModel> {
        if self.frames == 0 {
            return Err(DepthioError::Empty);
        }
        let valid_mask: Vec<bool> = self.counts.iter().map(|&c| c > 0).collect();
        let mean_depth =
            self.sums.iter().zip(&self.counts).map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Ok(BackgroundModel {
            width: self.width,
            height: self.height,
            mean_depth,
            valid_mask,
            frames_used: self.frames,
        })
    }
}

/// Per-pixel mean over `frames`, ignoring invalid (0 mm) readings.
pub fn build_background<'a, I>(frames: I) -> Result<BackgroundModel>
where
    I: IntoIterator<Item = &'a DepthFrame>,
{
    let mut iter = frames.into_iter().peekable();
    let first = iter.peek().ok_or(DepthioError::Empty)?;
    let mut b = BackgroundBuilder::new(first.width, first.height);
    for f in iter {
        b.push(f)?;
    }
    b.finish()
}

/// Signed background difference over a region of interest; pixels outside
/// the region read as 0. Halo pixels are positive, objects nearer the camera
/// negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMap {
    pub width: usize,
    pub height: usize,
    pub roi: Rect,
    values: Vec<f64>,
}

impl DiffMap {
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "diff values must cover the frame");
        Self { width, height, roi: Rect::full(width, height), values }
    }

    /// Diff over `roi` only; `values` are row-major within the region.
    pub fn with_roi(width: usize, height: usize, roi: Rect, values: Vec<f64>) -> Self {
        assert!(roi.x1() <= width && roi.y1() <= height, "region exceeds the frame");
        assert_eq!(values.len(), roi.area(), "diff values must cover the region");
        Self { width, height, roi, values }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::from_values(width, height, vec![0.0; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        if self.roi.contains(x, y) {
            self.values[(y - self.roi.y0) * self.roi.width + (x - self.roi.x0)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        assert!(self.roi.contains(x, y), "({x}, {y}) outside the diff region");
        self.values[(y - self.roi.y0) * self.roi.width + (x - self.roi.x0)] = v;
    }

    /// Values inside the region, row-major.
    pub fn roi_values(&self) -> &[f64] {
        &self.values
    }
}

pub fn subtract_background(frame: &DepthFrame, bg: &BackgroundModel) -> Result<DiffMap> {
    subtract_background_in(frame, bg, Rect::full(frame.width, frame.height))
}

/// Background difference restricted to `roi` (clipped to the frame).
pub fn subtract_background_in(frame: &DepthFrame, bg: &BackgroundModel, roi: Rect) -> Result<DiffMap> {
    if frame.width != bg.width || frame.height != bg.height {
        return Err(DepthioError::DimensionMismatch {
            frame_index: frame.frame_index,
            expected_w: bg.width,
            expected_h: bg.height,
            found_w: frame.width,
            found_h: frame.height,
        });
    }
    let roi = Rect::clipped(
        roi.x0 as i64,
        roi.y0 as i64,
        roi.x1() as i64,
        roi.y1() as i64,
        frame.width,
        frame.height,
    );
    let mut values = Vec::with_capacity(roi.area());
    for y in roi.y0..roi.y1() {
        let row = y * frame.width;
        for x in roi.x0..roi.x1() {
            let i = row + x;
            let d = frame.depth[i];
            values.push(if d == INVALID_DEPTH || !bg.valid_mask[i] { 0.0 } else { d as f64 - bg.mean_depth[i] });
        }
    }
    Ok(DiffMap { width: frame.width, height: frame.height, roi, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frames_give_exact_mean() {
        let frames: Vec<_> = (0..BACKGROUND_FRAMES as u64).map(|i| DepthFrame::filled(3, 2, i, i, 500)).collect();
        let bg = build_background(&frames).unwrap();
        assert_eq!(bg.frames_used, 60);
        assert!(bg.mean_depth.iter().all(|&m| m == 500.0));
        assert!(bg.valid_mask.iter().all(|&v| v));
    }

    #[test]
    fn invalid_readings_are_excluded() {
        let frames: Vec<_> =
            [500u16, 0, 500].iter().enumerate().map(|(i, &d)| DepthFrame::filled(1, 1, i as u64, i as u64, d)).collect();
        let bg = build_background(&frames).unwrap();
        assert_eq!(bg.mean_at(0, 0), Some(500.0));

        let dead: Vec<_> = (0..3).map(|i| DepthFrame::filled(1, 1, i, i, 0)).collect();
        let bg = build_background(&dead).unwrap();
        assert_eq!(bg.mean_at(0, 0), None);
        let diff = subtract_background(&DepthFrame::filled(1, 1, 9, 9, 480), &bg).unwrap();
        assert_eq!(diff.get(0, 0), 0.0);
    }

    #[test]
    fn sign_convention() {
        let bg = build_background(&[DepthFrame::filled(2, 1, 0, 0, 500)]).unwrap();
        let f = DepthFrame::new(2, 1, 1, 1, vec![480, 509]).unwrap();
        let d = subtract_background(&f, &bg).unwrap();
        assert_eq!(d.get(0, 0), -20.0);
        assert_eq!(d.get(1, 0), 9.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(build_background(&[]), Err(DepthioError::Empty)));
        let a = DepthFrame::filled(2, 2, 0, 0, 1);
        let b = DepthFrame::filled(3, 2, 1, 1, 1);
        assert!(build_background([&a, &b]).is_err());
        let bg = build_background([&a]).unwrap();
        assert!(subtract_background(&b, &bg).is_err());
    }

    #[test]
    fn roi_diff_matches_full_diff_inside() {
        let depth: Vec<u16> = (0..48).map(|i| 400 + i as u16).collect();
        let f = DepthFrame::new(8, 6, 0, 0, depth).unwrap();
        let bg = build_background(&[DepthFrame::filled(8, 6, 0, 0, 420)]).unwrap();
        let full = subtract_background(&f, &bg).unwrap();
        let part = subtract_background_in(&f, &bg, Rect { x0: 2, y0: 1, width: 10, height: 3 }).unwrap();
        assert_eq!(part.roi, Rect { x0: 2, y0: 1, width: 6, height: 3 });
        for y in 0..6 {
            for x in 0..8 {
                let expect = if part.roi.contains(x, y) { full.get(x, y) } else { 0.0 };
                assert_eq!(part.get(x, y), expect);
            }
        }
    }
}
