//! Touch, hover and pressure sensing from the multipath "halo" that a
//! time-of-flight camera reports around a fingertip close to a surface.
//!
//! The crate is organised along the processing chain:
//!
//! - [`depthio`]: depth frames, the `HTDS` stream container and static
//!   background modelling.
//! - [`mpisim`]: a phasor-sum multipath simulator that renders depth streams
//!   with ground truth and landmarks.
//! - [`halocore`]: halo revealing, patch signal extraction and landmark
//!   geometry.
//! - [`calib`]: the pose corrector and four-state calibration.
//! - [`detect`]: interpolation, touch classification, the state machine and
//!   key debouncing.
//! - [`evalkit`]: detection, spatial, hover/pressure and typing metrics.
//! - [`pipeline`]: the per-frame chain wired end to end.

pub mod calib;
pub mod depthio;
pub mod detect;
pub mod evalkit;
pub mod geometry;
pub mod halocore;
pub mod mpisim;
pub mod pipeline;

pub use halotouch_gbrt as gbrt;
