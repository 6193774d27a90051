//! Evaluation metrics: event matching, spatial accuracy, touch point
//! threshold, hover and pressure error, typing performance and the
//! characterization envelope checks.

mod blocks;
mod characterization;
mod matching;
mod spatial;
mod typing;

pub use blocks::{block_series, hover_mae, pressure_mae, touch_point_threshold, BlockQuantity, BlockSeries, MaeReport, TargetError};
pub use characterization::{characterization_report, read_characterization_csv, CharacterizationPoint, PropertyCheck};
pub use matching::{match_events, EventPoint, MatchReport, DEFAULT_PAIRING_WINDOW_MS};
pub use spatial::{spatial_accuracy, ConfidenceEllipse, SpatialReport, CHI2_2DOF_95};
pub use typing::{
    load_phrases, read_keystrokes, replay, sample_phrases, typing_metrics, write_keystrokes, Keystroke, KeyInput, SentenceRow,
    TypingReport, TypingTrial,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("length mismatch: {predicted} predictions for {truth} truth values")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("schema: {0}")]
    Schema(String),
    #[error("sentence {sentence}: {message}")]
    Inconsistent { sentence: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for EvalError {
    fn from(e: csv::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EvalError>;

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
