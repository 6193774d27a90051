use crate::{GbrtError, Result};

/// Row-major feature matrix with one regression target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(n_features: usize, features: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if n_features == 0 || n_features > 256 {
            return Err(GbrtError::InvalidConfig(format!(
                "feature count must be in [1, 256], got {n_features}"
            )));
        }
        if features.len() != targets.len() * n_features {
            return Err(GbrtError::ArityMismatch {
                expected: targets.len() * n_features,
                found: features.len(),
            });
        }
        for (i, v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(GbrtError::NonFinite { row: i / n_features, column: i % n_features });
            }
        }
        for (row, v) in targets.iter().enumerate() {
            if !v.is_finite() {
                return Err(GbrtError::NonFinite { row, column: n_features });
            }
        }
        Ok(Self { n_features, features, targets })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], targets: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map(|r| r.as_ref().len()).ok_or(GbrtError::Empty)?;
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_features {
                return Err(GbrtError::ArityMismatch { expected: n_features, found: r.len() });
            }
            features.extend_from_slice(r);
        }
        Self::new(n_features, features, targets)
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.features.iter().skip(j).step_by(self.n_features).copied()
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut targets = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            targets.push(self.targets[r]);
        }
        Dataset { n_features: self.n_features, features, targets }
    }
}
