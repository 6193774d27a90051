//! Depth frames, the `HTDS` stream container and static background modelling.

mod background;
mod frame;
mod stream;

pub use background::{build_background, BackgroundBuilder, subtract_background, subtract_background_in, BackgroundModel, DiffMap, BACKGROUND_FRAMES};
pub use frame::{DepthFrame, INVALID_DEPTH};
pub use stream::{read_stream, write_stream, Channels, StreamHeader, StreamReader, StreamWriter, STREAM_MAGIC, STREAM_VERSION, UNKNOWN_FRAME_COUNT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DepthioError {
    #[error("bad magic {0:?}, expected \"HTDS\"")]
    BadMagic([u8; 4]),
    #[error("unsupported stream version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("stream truncated in header")]
    TruncatedHeader,
    #[error("stream truncated in frame {frame_index}")]
    Truncated { frame_index: u64 },
    #[error("frame {frame_index} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    DimensionMismatch { frame_index: u64, expected_w: usize, expected_h: usize, found_w: usize, found_h: usize },
    #[error("frame {frame_index}: {reason}")]
    InvalidFrame { frame_index: u64, reason: String },
    #[error("no frames to build a background from")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DepthioError>;
