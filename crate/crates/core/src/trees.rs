//! Additive regression-tree ensembles: naive traversal, bitvector-based
//! feature-wise traversal, and split-point midpoint extraction.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// One node of a binary decision tree. Documents go left when
/// `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Branch {
        feature: u32,
        threshold: f32,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// A single regression tree rooted at node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Checks the node array forms a single-rooted binary tree with valid
    /// feature indices.
    pub fn validate(&self, num_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Validation("tree has no nodes".into()));
        }
        let n = self.nodes.len();
        let mut in_degree = alloc::vec![0usize; n];
        let mut internal = 0usize;
        for node in &self.nodes {
            if let Node::Branch {
                feature,
                left,
                right,
                ..
            } = node
            {
                internal += 1;
                if *feature as usize >= num_features {
                    return Err(Error::Validation(alloc::format!(
                        "split feature {feature} out of range (num_features = {num_features})"
                    )));
                }
                for child in [*left, *right] {
                    if child as usize >= n {
                        return Err(Error::Validation(alloc::format!(
                            "child index {child} out of range"
                        )));
                    }
                    in_degree[child as usize] += 1;
                }
            }
        }
        if in_degree[0] != 0 || in_degree.iter().skip(1).any(|&d| d != 1) {
            return Err(Error::Validation(
                "tree nodes must form a single-rooted binary tree".into(),
            ));
        }
        if self.leaf_count() != internal + 1 {
            return Err(Error::Validation(
                "leaf count must be internal count + 1".into(),
            ));
        }
        Ok(())
    }

    /// Path-following traversal of one document.
    pub fn score(&self, doc: &[f32]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Branch {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if doc[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Pre-trained additive ensemble; prediction is `base_score` plus the sum of
/// each tree's exit-leaf value.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub num_features: usize,
    pub base_score: f64,
}

impl TreeEnsemble {
    pub fn validate(&self) -> Result<()> {
        for tree in &self.trees {
            tree.validate(self.num_features)?;
        }
        Ok(())
    }

    pub fn max_leaf_count(&self) -> usize {
        self.trees.iter().map(Tree::leaf_count).max().unwrap_or(0)
    }

    /// Baseline if-then-else traversal of every tree.
    pub fn score_naive(&self, doc: &[f32]) -> f64 {
        assert_eq!(doc.len(), self.num_features, "document width mismatch");
        let mut score = self.base_score;
        for tree in &self.trees {
            score += tree.score(doc);
        }
        score
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ThresholdEntry {
    threshold: f32,
    tree: u32,
    mask: u64,
}

/// Feature-wise traversal index.
///
/// Leaves are numbered left to right; each decision node carries a 64-bit
/// mask with zeros exactly on the leaves of its left subtree, the leaves
/// that become unreachable when the node's test is false (`x > threshold`).
/// ANDing the masks of all false nodes into a per-tree `leafidx` word leaves
/// the exit leaf as the lowest set bit.
#[derive(Debug, Clone, PartialEq)]
pub struct QsIndex {
    num_features: usize,
    base_score: f64,
    /// Per feature, ascending by threshold.
    feature_thresholds: Vec<Vec<ThresholdEntry>>,
    /// Per tree, exit-leaf values in left-to-right leaf order.
    leaf_values: Vec<Vec<f64>>,
    /// Per tree, the all-leaves-reachable bitvector.
    default_masks: Vec<u64>,
}

/// Builds the feature-wise index. Fails if any tree has more than 64 leaves,
/// the capacity of a one-word bitvector.
pub fn build_qs_index(ens: &TreeEnsemble) -> Result<QsIndex> {
    ens.validate()?;
    let mut feature_thresholds = alloc::vec![Vec::new(); ens.num_features];
    let mut leaf_values = Vec::with_capacity(ens.trees.len());
    let mut default_masks = Vec::with_capacity(ens.trees.len());

    for (tree_id, tree) in ens.trees.iter().enumerate() {
        let leaf_count = tree.leaf_count();
        if leaf_count > 64 {
            return Err(Error::UnsupportedModel(alloc::format!(
                "tree {tree_id} has {leaf_count} leaves; the one-word bitvector \
                 traversal supports at most 64"
            )));
        }
        let default = if leaf_count == 64 {
            u64::MAX
        } else {
            (1u64 << leaf_count) - 1
        };

        let mut values = alloc::vec![0.0f64; leaf_count];
        let mut next_leaf = 0u32;
        collect_masks(
            tree,
            0,
            default,
            tree_id as u32,
            &mut next_leaf,
            &mut values,
            &mut feature_thresholds,
        );
        debug_assert_eq!(next_leaf as usize, leaf_count);

        leaf_values.push(values);
        default_masks.push(default);
    }

    for entries in &mut feature_thresholds {
        entries.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    }

    Ok(QsIndex {
        num_features: ens.num_features,
        base_score: ens.base_score,
        feature_thresholds,
        leaf_values,
        default_masks,
    })
}

/// In-order walk assigning left-to-right leaf ids; returns the bitmask of
/// leaves under `idx` and records one threshold entry per decision node.
fn collect_masks(
    tree: &Tree,
    idx: usize,
    default: u64,
    tree_id: u32,
    next_leaf: &mut u32,
    values: &mut [f64],
    feature_thresholds: &mut [Vec<ThresholdEntry>],
) -> u64 {
    match &tree.nodes[idx] {
        Node::Leaf { value } => {
            let leaf = *next_leaf;
            *next_leaf += 1;
            values[leaf as usize] = *value;
            1u64 << leaf
        }
        Node::Branch {
            feature,
            threshold,
            left,
            right,
        } => {
            let left_bits = collect_masks(
                tree,
                *left as usize,
                default,
                tree_id,
                next_leaf,
                values,
                feature_thresholds,
            );
            let right_bits = collect_masks(
                tree,
                *right as usize,
                default,
                tree_id,
                next_leaf,
                values,
                feature_thresholds,
            );
            feature_thresholds[*feature as usize].push(ThresholdEntry {
                threshold: *threshold,
                tree: tree_id,
                mask: default & !left_bits,
            });
            left_bits | right_bits
        }
    }
}

impl QsIndex {
    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Scores one document. Identical output to [`TreeEnsemble::score_naive`].
    pub fn score(&self, doc: &[f32]) -> f64 {
        let mut leafidx = self.default_masks.clone();
        self.score_into(doc, &mut leafidx)
    }

    /// Scores a batch of documents (one per row).
    pub fn score_batch(&self, docs: &DenseMatrix) -> Vec<f64> {
        assert_eq!(docs.cols(), self.num_features, "document width mismatch");
        let mut leafidx = alloc::vec![0u64; self.default_masks.len()];
        (0..docs.rows())
            .map(|i| {
                leafidx.copy_from_slice(&self.default_masks);
                self.score_into(docs.row(i), &mut leafidx)
            })
            .collect()
    }

    fn score_into(&self, doc: &[f32], leafidx: &mut [u64]) -> f64 {
        assert_eq!(doc.len(), self.num_features, "document width mismatch");
        for (x, entries) in doc.iter().zip(&self.feature_thresholds) {
            for e in entries {
                // thresholds are sorted: once the test is true, all the
                // remaining ones on this feature are true as well
                if *x <= e.threshold {
                    break;
                }
                leafidx[e.tree as usize] &= e.mask;
            }
        }
        let mut score = self.base_score;
        for (word, values) in leafidx.iter().zip(&self.leaf_values) {
            debug_assert!(*word != 0, "no reachable leaf left");
            score += values[word.trailing_zeros() as usize];
        }
        score
    }
}

/// Per-feature midpoint lists used to synthesize training documents, plus
/// the observed `[min, max]` range of each feature as a sampling fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationTable {
    pub midpoints: Vec<Vec<f32>>,
    pub ranges: Vec<(f32, f32)>,
}

/// Collects, per feature, every split threshold in the ensemble together
/// with the feature's min and max over the training documents; the sorted,
/// deduplicated list is replaced by its adjacent-pair midpoints.
pub fn extract_midpoint_table(ens: &TreeEnsemble, ds: &Dataset) -> AugmentationTable {
    assert_eq!(
        ens.num_features, ds.num_features,
        "ensemble and dataset disagree on feature count"
    );
    let f = ens.num_features;
    let mut points: Vec<Vec<f32>> = alloc::vec![Vec::new(); f];
    for tree in &ens.trees {
        for node in &tree.nodes {
            if let Node::Branch {
                feature, threshold, ..
            } = node
            {
                points[*feature as usize].push(*threshold);
            }
        }
    }

    let mut ranges = alloc::vec![(0.0f32, 0.0f32); f];
    let mut saw_docs = false;
    for group in &ds.queries {
        for d in 0..group.docs.rows() {
            let row = group.docs.row(d);
            for j in 0..f {
                let v = row[j];
                if !saw_docs {
                    ranges[j] = (v, v);
                } else {
                    ranges[j].0 = ranges[j].0.min(v);
                    ranges[j].1 = ranges[j].1.max(v);
                }
            }
            saw_docs = true;
        }
    }

    let midpoints = points
        .into_iter()
        .zip(&ranges)
        .map(|(mut list, &(lo, hi))| {
            if saw_docs {
                list.push(lo);
                list.push(hi);
            }
            list.sort_by(f32::total_cmp);
            list.dedup();
            let mut mids: Vec<f32> = list.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
            mids.dedup();
            mids
        })
        .collect();

    AugmentationTable { midpoints, ranges }
}
