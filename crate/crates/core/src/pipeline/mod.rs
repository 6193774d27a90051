//! Frame-by-frame wiring: background, halo measurement, correction,
//! detection and debouncing.

mod measure;
mod run;

pub use measure::{Measurement, Measurer};
pub use run::{run_stream, FrameOutput, Pipeline, PipelineConfig, RunOutput};

use thiserror::Error;

use crate::depthio::DepthioError;
use crate::detect::DetectError;
use crate::halocore::HalocoreError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {frame} paired with landmarks of frame {landmarks}")]
    LandmarkMismatch { frame: u64, landmarks: u64 },
    #[error("frame {frame} is {width}x{height}, which does not match the camera")]
    FrameSize { frame: u64, width: usize, height: usize },
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Depth(#[from] DepthioError),
    #[error(transparent)]
    Halo(#[from] HalocoreError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;
