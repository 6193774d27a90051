use crate::depthio::DiffMap;
use crate::geometry::Rect;

pub const LABEL_BACKGROUND: u8 = 0;
pub const LABEL_OBJECT: u8 = 127;
pub const LABEL_HALO: u8 = 255;

/// Default reveal threshold, mm.
pub const DEFAULT_THRESHOLD: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaloMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl HaloMap {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[inline]
pub fn label_of(diff: f64, threshold: f64) -> u8 {
    if diff > threshold {
        LABEL_HALO
    } else if diff < 0.0 {
        LABEL_OBJECT
    } else {
        LABEL_BACKGROUND
    }
}

/// Halo above `threshold` becomes 255, anything nearer than the background
/// 127, the band in between 0. Pixels outside the diff's region are 0.
pub fn reveal(diff: &DiffMap, threshold: f64) -> HaloMap {
    let mut labels = vec![LABEL_BACKGROUND; diff.width * diff.height];
    let Rect { x0, y0, width, height } = diff.roi;
    for (i, &d) in diff.roi_values().iter().enumerate() {
        let (x, y) = (x0 + i % width, y0 + i / width);
        debug_assert!(y < y0 + height);
        labels[y * diff.width + x] = label_of(d, threshold);
    }
    HaloMap { width: diff.width, height: diff.height, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping() {
        let d = DiffMap::from_values(4, 1, vec![10.0, -5.0, 3.0, 8.0]);
        assert_eq!(reveal(&d, 8.0).labels, vec![255, 127, 0, 0]);
        assert_eq!(reveal(&DiffMap::zeros(3, 3), 8.0).count(LABEL_BACKGROUND), 9);
    }

    #[test]
    fn labels_are_fixed_points() {
        // reading labels back as diffs keeps each label's class
        for l in [LABEL_BACKGROUND, LABEL_OBJECT, LABEL_HALO] {
            let as_diff = match l {
                LABEL_OBJECT => -(l as f64),
                other => other as f64,
            };
            assert_eq!(label_of(as_diff, DEFAULT_THRESHOLD), l);
        }
    }
}
