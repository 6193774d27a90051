//! Histogram gradient-boosted regression trees.
//!
//! Features are quantile-binned once, trees are grown best-first on per-bin
//! residual histograms, and every stage is shrunk by the learning rate.
//! The only loss is squared error.

mod binning;
mod boost;
mod config;
mod dataset;
mod error;
mod io;
mod tree;

pub use binning::{bin_features, BinEdges, BinnedMatrix};
pub use boost::{fit, FineTuneMode, GbrtModel, TrainingLog};
pub use config::GbrtConfig;
pub use dataset::Dataset;
pub use error::GbrtError;
pub use io::{MODEL_MAGIC, MODEL_VERSION};
pub use tree::{Node, Tree};

pub type Result<T> = std::result::Result<T, GbrtError>;
