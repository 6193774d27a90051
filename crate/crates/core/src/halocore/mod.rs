//! Halo revealing, patch signal extraction and landmark geometry.

mod blend;
mod extract;
mod landmarks;
mod reveal;

pub use blend::{blend, blend_with, IR_WEIGHT};
pub use extract::{
    bresenham, count_line_pixels, count_line_pixels_in, extract_sample, patch_rect, patch_strength, region_of_interest, ExtractConfig,
    HaloSample, FEATURE_NAMES,
};
pub use landmarks::{read_landmarks, write_landmarks, Hand, Landmark, LandmarkFrame};
pub use reveal::{label_of, reveal, HaloMap, DEFAULT_THRESHOLD, LABEL_BACKGROUND, LABEL_HALO, LABEL_OBJECT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HalocoreError {
    #[error("frame {frame_index}: landmarks outside the frame")]
    OutOfBounds { frame_index: u64 },
    #[error("frame {frame_index}: fingertip and fingerdip coincide")]
    DegenerateLandmarks { frame_index: u64 },
    #[error("image sizes differ: {0}")]
    DimensionMismatch(String),
    #[error("landmarks: {0}")]
    Landmarks(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HalocoreError>;
