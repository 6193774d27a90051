use crate::{GbrtError, Result};

/// Per-feature bin thresholds. A value `x` falls in bin `i` where `i` is the
/// number of edges strictly below `x`, so values at or below the first edge
/// land in bin 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    edges: Vec<Vec<f64>>,
}

impl BinEdges {
    pub fn from_edges(edges: Vec<Vec<f64>>) -> Result<Self> {
        for (j, e) in edges.iter().enumerate() {
            if e.len() > 254 {
                return Err(GbrtError::Malformed(format!("feature {j} has {} edges", e.len())));
            }
            if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GbrtError::Malformed(format!("feature {j} edges not strictly increasing")));
            }
        }
        Ok(Self { edges })
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    pub fn feature_edges(&self, feature: usize) -> &[f64] {
        &self.edges[feature]
    }

    #[inline]
    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.edges[feature].partition_point(|&e| e < x) as u8
    }

    /// Bins a row-major matrix with these edges.
    pub fn apply(&self, features: &[f64]) -> BinnedMatrix {
        let n_features = self.edges.len();
        let n_rows = features.len() / n_features;
        let mut columns = vec![Vec::with_capacity(n_rows); n_features];
        for row in features.chunks_exact(n_features) {
            for (j, &x) in row.iter().enumerate() {
                columns[j].push(self.bin(j, x));
            }
        }
        BinnedMatrix { n_rows, columns }
    }
}

/// Column-major bin indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMatrix {
    n_rows: usize,
    columns: Vec<Vec<u8>>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        &self.columns[feature]
    }

    pub fn get(&self, row: usize, feature: usize) -> u8 {
        self.columns[feature][row]
    }
}

/// Quantile-bins every column of a row-major matrix into at most `max_bins`
/// bins.
pub fn bin_features(
    features: &[f64],
    n_features: usize,
    max_bins: usize,
) -> Result<(BinnedMatrix, BinEdges)> {
    if n_features == 0 || features.is_empty() {
        return Err(GbrtError::Empty);
    }
    if features.len() % n_features != 0 {
        return Err(GbrtError::ArityMismatch {
            expected: n_features,
            found: features.len() % n_features,
        });
    }
    if !(2..=255).contains(&max_bins) {
        return Err(GbrtError::InvalidConfig(format!("max_bins must be in [2, 255], got {max_bins}")));
    }
    if let Some(i) = features.iter().position(|v| !v.is_finite()) {
        return Err(GbrtError::NonFinite { row: i / n_features, column: i % n_features });
    }

    let edges = (0..n_features)
        .map(|j| {
            let mut col: Vec<f64> =
                features.iter().skip(j).step_by(n_features).copied().collect();
            col.sort_by(f64::total_cmp);
            quantile_edges(&col, max_bins)
        })
        .collect();
    let edges = BinEdges { edges };
    let binned = edges.apply(features);
    Ok((binned, edges))
}

fn quantile_edges(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut unique = sorted.to_vec();
    unique.dedup();
    if unique.len() <= max_bins {
        return unique.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for i in 1..max_bins {
        let idx = ((i * n) as f64 / max_bins as f64).round() as usize;
        let idx = idx.clamp(1, n - 1);
        let edge = midpoint(sorted[idx - 1], sorted[idx]);
        // ties collapse onto one edge; the last sample must stay above all edges
        if edge < sorted[n - 1] && edges.last().map_or(true, |&last| edge > last) {
            edges.push(edge);
        }
    }
    edges
}

fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bins_of(col: &[f64], max_bins: usize) -> (Vec<u8>, BinEdges) {
        let (m, e) = bin_features(col, 1, max_bins).unwrap();
        (m.column(0).to_vec(), e)
    }

    #[test]
    fn constant_column_is_one_bin() {
        let (bins, edges) = bins_of(&[3.5; 40], 255);
        assert_eq!(edges.n_bins(0), 1);
        assert!(bins.iter().all(|&b| b == 0));
    }

    #[test]
    fn two_values_two_bins_in_order() {
        let (bins, edges) = bins_of(&[7.0, -1.0, 7.0, -1.0], 255);
        assert_eq!(edges.n_bins(0), 2);
        assert_eq!(bins, vec![1, 0, 1, 0]);
    }

    #[test]
    fn uniform_thousand_gives_equal_counts() {
        let col: Vec<f64> = (1..=1000).map(f64::from).collect();
        let (bins, edges) = bins_of(&col, 255);
        assert_eq!(edges.n_bins(0), 255);
        let mut counts = vec![0usize; 255];
        for b in bins {
            counts[b as usize] += 1;
        }
        // 1000 / 255 = 3.92
        assert!(counts.iter().all(|&c| c == 3 || c == 4), "{counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn value_on_first_edge_is_bin_zero() {
        let (_, edges) = bins_of(&[0.0, 1.0, 2.0], 255);
        let first = edges.feature_edges(0)[0];
        assert_eq!(edges.bin(0, first), 0);
        assert_eq!(edges.bin(0, -100.0), 0);
        assert_eq!(edges.bin(0, 100.0), 2);
    }

    #[test]
    fn heavy_ties_keep_edges_strict() {
        let mut col = vec![1.0; 900];
        col.extend((0..300).map(|i| i as f64 * 0.01));
        let (_, edges) = bins_of(&col, 16);
        let e = edges.feature_edges(0);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(edges.n_bins(0) <= 16);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            bin_features(&[1.0, f64::NAN], 2, 10),
            Err(GbrtError::NonFinite { row: 0, column: 1 })
        ));
    }
}
