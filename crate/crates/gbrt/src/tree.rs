use crate::binning::BinnedMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `bin(feature) <= bin` go left.
    Split { feature: u8, bin: u8, left: u32, right: u32 },
    Leaf { value: f64, samples: u32 },
}

/// A regression tree over binned features. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { value, samples } => Some((value, samples)),
            Node::Split { .. } => None,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    #[inline]
    pub fn predict_with(&self, bin_of: impl Fn(usize) -> u8) -> f64 {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, bin, left, right } => {
                    idx = if bin_of(feature as usize) <= bin { left as usize } else { right as usize };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitInfo {
    gain: f64,
    feature: usize,
    bin: usize,
}

/// Residual sums and counts per (feature, bin).
#[derive(Debug, Clone)]
struct Histogram {
    sums: Vec<f64>,
    counts: Vec<u32>,
}

impl Histogram {
    fn build(binned: &BinnedMatrix, offsets: &[usize], residuals: &[f64], rows: &[u32]) -> Self {
        let total = *offsets.last().unwrap();
        let mut sums = vec![0.0; total];
        let mut counts = vec![0u32; total];
        for j in 0..binned.n_features() {
            let col = binned.column(j);
            let base = offsets[j];
            for &r in rows {
                let slot = base + col[r as usize] as usize;
                sums[slot] += residuals[r as usize];
                counts[slot] += 1;
            }
        }
        Self { sums, counts }
    }

    fn minus(&self, other: &Histogram) -> Histogram {
        Histogram {
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a - b).collect(),
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a - b).collect(),
        }
    }
}

struct Candidate {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    sum: f64,
    split: Option<SplitInfo>,
}

pub(crate) struct TreeGrower<'a> {
    binned: &'a BinnedMatrix,
    offsets: Vec<usize>,
    residuals: &'a [f64],
    max_leaf_nodes: usize,
    min_samples_leaf: usize,
}

/// Rows that ended in each leaf, keyed by node index.
pub(crate) type LeafRows = Vec<(usize, Vec<u32>)>;

impl<'a> TreeGrower<'a> {
    pub(crate) fn new(
        binned: &'a BinnedMatrix,
        n_bins: &[usize],
        residuals: &'a [f64],
        max_leaf_nodes: usize,
        min_samples_leaf: usize,
    ) -> Self {
        let mut offsets = Vec::with_capacity(n_bins.len() + 1);
        offsets.push(0);
        for &nb in n_bins {
            offsets.push(offsets.last().unwrap() + nb);
        }
        Self { binned, offsets, residuals, max_leaf_nodes, min_samples_leaf }
    }

    fn best_split(&self, hist: &Histogram, sum: f64, count: usize) -> Option<SplitInfo> {
        let msl = self.min_samples_leaf;
        if count < 2 * msl {
            return None;
        }
        let parent = sum * sum / count as f64;
        let mut best: Option<SplitInfo> = None;
        for j in 0..self.binned.n_features() {
            let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
            let mut left_sum = 0.0;
            let mut left_count = 0usize;
            // the last bin cannot be a threshold: nothing would go right
            for b in lo..hi.saturating_sub(1) {
                left_sum += hist.sums[b];
                left_count += hist.counts[b] as usize;
                if left_count < msl {
                    continue;
                }
                let right_count = count - left_count;
                if right_count < msl {
                    break;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / left_count as f64
                    + right_sum * right_sum / right_count as f64
                    - parent;
                // strict comparison keeps the lowest feature, then lowest bin, on ties
                if gain > best.map_or(0.0, |s| s.gain) {
                    best = Some(SplitInfo { gain, feature: j, bin: b - lo });
                }
            }
        }
        best
    }

    fn candidate(&self, node: usize, rows: Vec<u32>, hist: Histogram) -> Candidate {
        let sum: f64 = rows.iter().map(|&r| self.residuals[r as usize]).sum();
        let split = self.best_split(&hist, sum, rows.len());
        Candidate { node, rows, hist, sum, split }
    }

    /// Grows one tree best-first; leaf values are mean residuals.
    pub(crate) fn grow(&self, rows: Vec<u32>) -> (Tree, LeafRows) {
        let hist = Histogram::build(self.binned, &self.offsets, self.residuals, &rows);
        let mut nodes = vec![Node::Leaf { value: 0.0, samples: 0 }];
        let mut open = vec![self.candidate(0, rows, hist)];

        while open.len() < self.max_leaf_nodes {
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.split.map(|s| (i, s.gain, c.node)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
            let Some((i, _, _)) = pick else { break };
            let parent = open.swap_remove(i);
            let split = parent.split.unwrap();

            let col = self.binned.column(split.feature);
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                parent.rows.iter().partition(|&&r| col[r as usize] as usize <= split.bin);

            let (small, large_is_left) = if left_rows.len() <= right_rows.len() {
                (&left_rows, false)
            } else {
                (&right_rows, true)
            };
            let small_hist = Histogram::build(self.binned, &self.offsets, self.residuals, small);
            let large_hist = parent.hist.minus(&small_hist);
            let (left_hist, right_hist) =
                if large_is_left { (large_hist, small_hist) } else { (small_hist, large_hist) };

            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { value: 0.0, samples: 0 });
            nodes.push(Node::Leaf { value: 0.0, samples: 0 });
            nodes[parent.node] = Node::Split {
                feature: split.feature as u8,
                bin: split.bin as u8,
                left: left as u32,
                right: right as u32,
            };
            open.push(self.candidate(left, left_rows, left_hist));
            open.push(self.candidate(right, right_rows, right_hist));
        }

        let mut leaf_rows = Vec::with_capacity(open.len());
        for c in open {
            let n = c.rows.len();
            let value = if n == 0 { 0.0 } else { c.sum / n as f64 };
            nodes[c.node] = Node::Leaf { value, samples: n as u32 };
            leaf_rows.push((c.node, c.rows));
        }
        leaf_rows.sort_by_key(|(node, _)| *node);
        (Tree { nodes }, leaf_rows)
    }
}
