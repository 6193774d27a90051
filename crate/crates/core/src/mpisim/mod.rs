//! Synthetic time-of-flight frames with multipath interference.
//!
//! Every pixel's reading is the phase of a sum of return phasors. A finger
//! near the surface adds a longer, weaker return to the surface around the
//! fingertip (the halo, which reads deeper than the surface) and to the
//! finger's underside; finger edges blend with the surface once the finger is
//! close enough. The amplitude model lives in [`HaloParams`].

mod characterize;
mod phasor;
mod render;
mod scene;
pub mod scripts;
mod trajectory;
mod truth;

pub use characterize::{characterize, sample_halo, write_characterization_csv, CharacterizationRow, Sweep, SweepAxis, SweepState};
pub use phasor::{phasor_depth, unambiguous_range_mm, PathComponent, DEFAULT_MODULATION_HZ, SPEED_OF_LIGHT};
pub use render::{render_frame, GroundTruthRecord, RenderedFrame, Renderer};
pub use scene::{FingerPose, HaloParams, MaterialProfile, SceneSpec, UserProfile};
pub use truth::{read_ground_truth, write_ground_truth};
pub use trajectory::{contact_intervals, render_trajectory, ContactInterval, Keyframe, Script, Segment, SegmentKind, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpisimError {
    #[error("no return paths")]
    NoPaths,
    #[error("total path amplitude is zero")]
    ZeroAmplitude,
    #[error("invalid path component: {0}")]
    InvalidPath(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid finger pose: {0}")]
    InvalidPose(String),
    #[error("finger at ({x:.1}, {y:.1}) mm projects outside the frame")]
    FingerOutsideFrame { x: f64, y: f64 },
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("extraction: {0}")]
    Extract(String),
    #[error("ground truth: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MpisimError>;
