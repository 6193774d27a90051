use crate::{GbrtError, Result};

/// Boosting hyperparameters. Defaults follow the signal-corrector setup:
/// learning rate 0.1, 200 stages, 31 leaves, 25 samples per leaf, 255 bins
/// and an 8:2 train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct GbrtConfig {
    pub learning_rate: f64,
    pub n_iterations: u32,
    pub max_leaf_nodes: u32,
    pub min_samples_leaf: u32,
    pub max_bins: u16,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for GbrtConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            n_iterations: 200,
            max_leaf_nodes: 31,
            min_samples_leaf: 25,
            max_bins: 255,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl GbrtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GbrtError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(2..=255).contains(&self.max_bins) {
            return Err(GbrtError::InvalidConfig(format!(
                "max_bins must be in [2, 255], got {}",
                self.max_bins
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(GbrtError::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if self.max_leaf_nodes < 2 {
            return Err(GbrtError::InvalidConfig("max_leaf_nodes must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(GbrtError::InvalidConfig(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}
