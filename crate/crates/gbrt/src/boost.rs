use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binning::{bin_features, BinEdges, BinnedMatrix};
use crate::tree::{Tree, TreeGrower};
use crate::{Dataset, GbrtConfig, GbrtError, Result};

/// Per-stage squared error. Entry 0 is the constant base model; entry `k`
/// is the error after `k` boosting stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub train_mse: Vec<f64>,
    pub validation_mse: Vec<f64>,
}

/// How per-user fine-tuning uses the new data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FineTuneMode {
    /// Append stages fit on the new data's residuals; existing trees stay.
    #[default]
    Append,
    /// Discard the existing stages and fit from scratch on the new data.
    Retrain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbrtModel {
    pub(crate) config: GbrtConfig,
    pub(crate) base_prediction: f64,
    pub(crate) trees: Vec<Tree>,
    pub(crate) bin_edges: BinEdges,
    pub(crate) feature_names: Vec<String>,
}

impl GbrtModel {
    pub fn from_parts(
        config: GbrtConfig,
        base_prediction: f64,
        trees: Vec<Tree>,
        bin_edges: BinEdges,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != bin_edges.n_features() {
            return Err(GbrtError::ArityMismatch {
                expected: bin_edges.n_features(),
                found: feature_names.len(),
            });
        }
        Ok(Self { config, base_prediction, trees, bin_edges, feature_names })
    }

    /// A model with no trees that predicts `value` everywhere.
    pub fn constant(value: f64, feature_names: Vec<String>, config: GbrtConfig) -> Self {
        let edges = BinEdges::from_edges(vec![Vec::new(); feature_names.len()])
            .expect("empty edges are valid");
        Self { config, base_prediction: value, trees: Vec::new(), bin_edges: edges, feature_names }
    }

    pub fn config(&self) -> &GbrtConfig {
        &self.config
    }

    pub fn base_prediction(&self) -> f64 {
        self.base_prediction
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn bin_edges(&self) -> &BinEdges {
        &self.bin_edges
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(GbrtError::ArityMismatch { expected: self.n_features(), found: names.len() });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(GbrtError::ArityMismatch { expected: self.n_features(), found: row.len() });
        }
        if let Some(column) = row.iter().position(|v| !v.is_finite()) {
            return Err(GbrtError::NonFinite { row: 0, column });
        }
        let bins: Vec<u8> = row.iter().enumerate().map(|(j, &x)| self.bin_edges.bin(j, x)).collect();
        let lr = self.config.learning_rate;
        Ok(self.base_prediction + lr * self.trees.iter().map(|t| t.predict_with(|f| bins[f])).sum::<f64>())
    }

    fn predict_binned(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        let lr = self.config.learning_rate;
        self.base_prediction
            + lr * self.trees.iter().map(|t| t.predict_with(|f| binned.get(row, f))).sum::<f64>()
    }

    /// Continues boosting on `new_data` for `extra_iterations` stages.
    pub fn warm_start_update(&self, new_data: &Dataset, extra_iterations: u32) -> Result<GbrtModel> {
        self.fine_tune(new_data, extra_iterations, FineTuneMode::Append)
    }

    pub fn fine_tune(&self, new_data: &Dataset, extra_iterations: u32, mode: FineTuneMode) -> Result<GbrtModel> {
        if new_data.n_features() != self.n_features() {
            return Err(GbrtError::ArityMismatch {
                expected: self.n_features(),
                found: new_data.n_features(),
            });
        }
        match mode {
            FineTuneMode::Retrain => {
                let cfg = GbrtConfig { n_iterations: extra_iterations, ..self.config.clone() };
                let (model, _) = fit(new_data, &cfg)?;
                model.with_feature_names(self.feature_names.clone())
            }
            FineTuneMode::Append => {
                let mut model = self.clone();
                if extra_iterations == 0 || new_data.n_rows() == 0 {
                    return Ok(model);
                }
                let binned = model.bin_edges.apply(new_data.features());
                let mut pred: Vec<f64> =
                    (0..new_data.n_rows()).map(|r| model.predict_binned(&binned, r)).collect();
                let rows: Vec<u32> = (0..new_data.n_rows() as u32).collect();
                let n_bins: Vec<usize> = (0..model.n_features()).map(|j| model.bin_edges.n_bins(j)).collect();
                let mut stages = Stages {
                    binned: &binned,
                    n_bins: &n_bins,
                    targets: new_data.targets(),
                    rows: &rows,
                    cfg: &model.config,
                };
                for _ in 0..extra_iterations {
                    if let Some(tree) = stages.boost_once(&mut pred) {
                        model.trees.push(tree);
                    }
                }
                Ok(model)
            }
        }
    }
}

struct Stages<'a> {
    binned: &'a BinnedMatrix,
    n_bins: &'a [usize],
    targets: &'a [f64],
    rows: &'a [u32],
    cfg: &'a GbrtConfig,
}

impl Stages<'_> {
    fn mse(&self, pred: &[f64]) -> f64 {
        let sse: f64 = self.rows.iter().map(|&r| (self.targets[r as usize] - pred[r as usize]).powi(2)).sum();
        sse / self.rows.len() as f64
    }

    /// Fits one stage and applies it to `pred`. A stage that would raise the
    /// training error (possible only through rounding) is dropped.
    fn boost_once(&mut self, pred: &mut [f64]) -> Option<Tree> {
        let residuals: Vec<f64> = self.targets.iter().zip(pred.iter()).map(|(y, p)| y - p).collect();
        let grower = TreeGrower::new(
            self.binned,
            self.n_bins,
            &residuals,
            self.cfg.max_leaf_nodes as usize,
            self.cfg.min_samples_leaf as usize,
        );
        let (tree, leaf_rows) = grower.grow(self.rows.to_vec());
        let before = self.mse(pred);
        let mut updated = pred.to_vec();
        for (node, rows) in &leaf_rows {
            let crate::Node::Leaf { value, .. } = tree.nodes[*node] else { unreachable!() };
            let step = self.cfg.learning_rate * value;
            for &r in rows {
                updated[r as usize] += step;
            }
        }
        if self.mse(&updated) > before {
            return None;
        }
        pred.copy_from_slice(&updated);
        Some(tree)
    }
}

/// Fits a boosted model. The rows are shuffled with `cfg.seed` and the last
/// `validation_fraction` of the shuffled order is held out for the log.
pub fn fit(data: &Dataset, cfg: &GbrtConfig) -> Result<(GbrtModel, TrainingLog)> {
    cfg.validate()?;
    let n = data.n_rows();
    if n == 0 {
        return Err(GbrtError::Empty);
    }
    let names = default_names(data.n_features());
    let msl = cfg.min_samples_leaf as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_val = (n as f64 * cfg.validation_fraction).floor() as usize;
    let n_train = n - n_val;

    if n_train < 2 * msl {
        let mean = data.targets().iter().sum::<f64>() / n as f64;
        return Ok((GbrtModel::constant(mean, names, cfg.clone()), TrainingLog::default()));
    }

    let train = data.select(&order[..n_train]);
    let val = data.select(&order[n_train..]);

    let (binned, edges) = bin_features(train.features(), train.n_features(), cfg.max_bins as usize)?;
    let base = train.targets().iter().sum::<f64>() / n_train as f64;
    let mut model = GbrtModel {
        config: cfg.clone(),
        base_prediction: base,
        trees: Vec::with_capacity(cfg.n_iterations as usize),
        bin_edges: edges,
        feature_names: names,
    };

    let val_binned = model.bin_edges.apply(val.features());
    let mut val_pred = vec![base; val.n_rows()];
    let val_mse = |p: &[f64]| -> f64 {
        if p.is_empty() {
            return f64::NAN;
        }
        val.targets().iter().zip(p).map(|(y, q)| (y - q).powi(2)).sum::<f64>() / p.len() as f64
    };

    let mut pred = vec![base; n_train];
    let rows: Vec<u32> = (0..n_train as u32).collect();
    let n_bins: Vec<usize> = (0..train.n_features()).map(|j| model.bin_edges.n_bins(j)).collect();
    let mut stages = Stages { binned: &binned, n_bins: &n_bins, targets: train.targets(), rows: &rows, cfg };

    let mut log = TrainingLog::default();
    log.train_mse.push(stages.mse(&pred));
    log.validation_mse.push(val_mse(&val_pred));
    for _ in 0..cfg.n_iterations {
        if let Some(tree) = stages.boost_once(&mut pred) {
            for (r, p) in val_pred.iter_mut().enumerate() {
                *p += cfg.learning_rate * tree.predict_with(|f| val_binned.get(r, f));
            }
            model.trees.push(tree);
        }
        log.train_mse.push(stages.mse(&pred));
        log.validation_mse.push(val_mse(&val_pred));
    }
    Ok((model, log))
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("f{j}")).collect()
}
