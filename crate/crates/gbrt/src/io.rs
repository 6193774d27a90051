//! `HTGB` model files, little-endian:
//!
//! ```text
//! magic "HTGB" | u16 version
//! config: f64 learning_rate | u32 n_iterations | u32 max_leaf_nodes
//!         u32 min_samples_leaf | u16 max_bins | f64 validation_fraction | u64 seed
//! f64 base_prediction
//! u16 n_features, then per feature: u16 name_len | name (UTF-8) | u16 n_edges | f64 edges
//! u32 n_trees, then per tree: u32 n_nodes, then per node:
//!   u8 0 (split) | u8 feature | u8 bin | u32 left | u32 right
//!   u8 1 (leaf)  | f64 value  | u32 samples
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::{BinEdges, GbrtConfig, GbrtError, GbrtModel, Node, Result, Tree};

pub const MODEL_MAGIC: [u8; 4] = *b"HTGB";
pub const MODEL_VERSION: u16 = 1;

const TAG_SPLIT: u8 = 0;
const TAG_LEAF: u8 = 1;

impl GbrtModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MODEL_MAGIC)?;
        w.write_u16::<LE>(MODEL_VERSION)?;
        let c = &self.config;
        w.write_f64::<LE>(c.learning_rate)?;
        w.write_u32::<LE>(c.n_iterations)?;
        w.write_u32::<LE>(c.max_leaf_nodes)?;
        w.write_u32::<LE>(c.min_samples_leaf)?;
        w.write_u16::<LE>(c.max_bins)?;
        w.write_f64::<LE>(c.validation_fraction)?;
        w.write_u64::<LE>(c.seed)?;
        w.write_f64::<LE>(self.base_prediction)?;

        w.write_u16::<LE>(self.feature_names.len() as u16)?;
        for (j, name) in self.feature_names.iter().enumerate() {
            w.write_u16::<LE>(name.len() as u16)?;
            w.write_all(name.as_bytes())?;
            let edges = self.bin_edges.feature_edges(j);
            w.write_u16::<LE>(edges.len() as u16)?;
            for &e in edges {
                w.write_f64::<LE>(e)?;
            }
        }

        w.write_u32::<LE>(self.trees.len() as u32)?;
        for tree in &self.trees {
            w.write_u32::<LE>(tree.nodes.len() as u32)?;
            for node in &tree.nodes {
                match *node {
                    Node::Split { feature, bin, left, right } => {
                        w.write_u8(TAG_SPLIT)?;
                        w.write_u8(feature)?;
                        w.write_u8(bin)?;
                        w.write_u32::<LE>(left)?;
                        w.write_u32::<LE>(right)?;
                    }
                    Node::Leaf { value, samples } => {
                        w.write_u8(TAG_LEAF)?;
                        w.write_f64::<LE>(value)?;
                        w.write_u32::<LE>(samples)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MODEL_MAGIC {
            return Err(GbrtError::BadMagic(magic));
        }
        let version = r.read_u16::<LE>()?;
        if version != MODEL_VERSION {
            return Err(GbrtError::UnsupportedVersion(version));
        }
        let config = GbrtConfig {
            learning_rate: r.read_f64::<LE>()?,
            n_iterations: r.read_u32::<LE>()?,
            max_leaf_nodes: r.read_u32::<LE>()?,
            min_samples_leaf: r.read_u32::<LE>()?,
            max_bins: r.read_u16::<LE>()?,
            validation_fraction: r.read_f64::<LE>()?,
            seed: r.read_u64::<LE>()?,
        };
        config.validate()?;
        let base_prediction = r.read_f64::<LE>()?;

        let n_features = r.read_u16::<LE>()? as usize;
        if n_features == 0 {
            return Err(GbrtError::Malformed("model has no features".into()));
        }
        let mut names = Vec::with_capacity(n_features);
        let mut edges = Vec::with_capacity(n_features);
        for _ in 0..n_features {
            let len = r.read_u16::<LE>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            names.push(String::from_utf8(buf).map_err(|e| GbrtError::Malformed(e.to_string()))?);
            let n_edges = r.read_u16::<LE>()? as usize;
            let mut fe = Vec::with_capacity(n_edges);
            for _ in 0..n_edges {
                fe.push(r.read_f64::<LE>()?);
            }
            edges.push(fe);
        }
        let bin_edges = BinEdges::from_edges(edges)?;

        let n_trees = r.read_u32::<LE>()? as usize;
        let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
        for t in 0..n_trees {
            let n_nodes = r.read_u32::<LE>()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes.min(1 << 16));
            for _ in 0..n_nodes {
                let node = match r.read_u8()? {
                    TAG_SPLIT => Node::Split {
                        feature: r.read_u8()?,
                        bin: r.read_u8()?,
                        left: r.read_u32::<LE>()?,
                        right: r.read_u32::<LE>()?,
                    },
                    TAG_LEAF => Node::Leaf { value: r.read_f64::<LE>()?, samples: r.read_u32::<LE>()? },
                    tag => return Err(GbrtError::Malformed(format!("tree {t}: unknown node tag {tag}"))),
                };
                nodes.push(node);
            }
            validate_tree(t, &nodes, n_features)?;
            trees.push(Tree::from_nodes(nodes));
        }
        GbrtModel::from_parts(config, base_prediction, trees, bin_edges, names)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn validate_tree(t: usize, nodes: &[Node], n_features: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(GbrtError::Malformed(format!("tree {t} is empty")));
    }
    for (i, node) in nodes.iter().enumerate() {
        if let Node::Split { feature, left, right, .. } = *node {
            // children always follow their parent, so traversal terminates
            let ok = (feature as usize) < n_features
                && (left as usize) > i
                && (right as usize) > i
                && (left as usize) < nodes.len()
                && (right as usize) < nodes.len();
            if !ok {
                return Err(GbrtError::Malformed(format!("tree {t}: bad split node {i}")));
            }
        }
    }
    Ok(())
}
