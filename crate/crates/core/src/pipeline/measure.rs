use crate::depthio::{subtract_background_in, BackgroundModel, DepthFrame};
use crate::geometry::CameraModel;
use crate::halocore::{count_line_pixels_in, extract_sample, region_of_interest, ExtractConfig, HaloSample, LandmarkFrame};

use super::{PipelineError, Result};

/// What one frame contributes downstream: the corrector sample and the
/// number of halo pixels left on the fingertip-fingerdip segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub sample: HaloSample,
    pub line_count: usize,
}

/// Per-frame halo measurement against a fixed background. Only the region
/// the extractor reads is differenced.
#[derive(Debug, Clone)]
pub struct Measurer {
    background: BackgroundModel,
    camera: CameraModel,
    cfg: ExtractConfig,
}

impl Measurer {
    pub fn new(background: BackgroundModel, camera: CameraModel, cfg: ExtractConfig) -> Self {
        Self { background, camera, cfg }
    }

    pub fn background(&self) -> &BackgroundModel {
        &self.background
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn config(&self) -> &ExtractConfig {
        &self.cfg
    }

    pub fn measure(&self, frame: &DepthFrame, lm: &LandmarkFrame) -> Result<Measurement> {
        if lm.frame_index != frame.frame_index {
            return Err(PipelineError::LandmarkMismatch { frame: frame.frame_index, landmarks: lm.frame_index });
        }
        let roi = region_of_interest(lm, &self.cfg, frame.width, frame.height)?;
        let diff = subtract_background_in(frame, &self.background, roi)?;
        let sample = extract_sample(&diff, lm, &self.camera, &self.cfg)?;
        let line_count = count_line_pixels_in(&diff, lm, self.cfg.threshold)?;
        Ok(Measurement { sample, line_count })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depthio::subtract_background;
    use crate::halocore::{count_line_pixels, reveal};
    use crate::mpisim::{FingerPose, Renderer, SceneSpec};

    #[test]
    fn matches_full_frame_processing() {
        let r = Renderer::new(SceneSpec::default().with_size(160, 160)).unwrap();
        let bg = r.ideal_background();
        let m = Measurer::new(bg.clone(), r.camera().clone(), ExtractConfig::default());
        let out = r.render(Some(&FingerPose::hovering(5.0, -5.0, 4.0, 45.0, 270.0)), 3, 0, 9).unwrap();
        let lm = out.landmarks.unwrap();
        let got = m.measure(&out.frame, &lm).unwrap();
        let diff = subtract_background(&out.frame, &bg).unwrap();
        let want = extract_sample(&diff, &lm, r.camera(), &ExtractConfig::default()).unwrap();
        assert_eq!(got.sample, want);
        assert!(want.raw_strength > 0.0);
        assert_eq!(got.line_count, count_line_pixels(&reveal(&diff, 8.0), &lm).unwrap());

        let other = LandmarkFrame { frame_index: 4, ..lm };
        assert!(matches!(m.measure(&out.frame, &other), Err(PipelineError::LandmarkMismatch { .. })));
    }
}
