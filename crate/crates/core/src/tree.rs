//! CART-style binary classification trees.
//!
//! Trees are grown fully by default (no depth cap, minimum split size 2)
//! with the Gini impurity decrease criterion, midpoint thresholds between
//! consecutive distinct sorted values, and `<=` routing to the left child.
//! Two split modes exist: `FixedSubset` considers every column of the
//! training matrix at every node, `PerNodeUniform` first draws a uniform
//! random candidate set at each node (the random-forest baseline).
//!
//! Tie-breaking is deterministic throughout: among equally good splits the lowest
//! feature index wins, then the lowest threshold; leaf ties resolve to the
//! smallest class id. Node split rules store feature indices of the
//! original feature space (mapped through the tree's column subset).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::sampling::{FeatureSubset, SeededRng};

/// Class label encoded as an index in 0..n_classes (the encoding preserves
/// the dataset's global class ordering).
pub type ClassId = usize;

/// A threshold test: samples with `value <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature_index: usize,
    pub threshold: f64,
}

/// Flat tree node; children are indices into the tree's node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: ClassId,
    },
}

/// How candidate features are chosen at each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitMode {
    /// Every column of the training matrix is a candidate at every node.
    FixedSubset,
    /// A fresh uniform sample of `candidates` columns per node.
    PerNodeUniform { candidates: usize },
}

/// Stopping controls for tree growth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeParams {
    pub min_samples_split: usize,
    /// `None` grows until purity; nodes at this depth become leaves.
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_samples_split: 2,
            max_depth: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be >= 2".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trained binary decision tree plus the feature subset it was grown on.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    feature_subset: FeatureSubset,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn feature_subset(&self) -> &FeatureSubset {
        &self.feature_subset
    }

    /// Total internal plus leaf nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    pub fn leaf_count(&self) -> usize {
        self.node_count() - self.internal_count()
    }

    /// Routes `sample` (original feature space) to a leaf. The sample must
    /// provide a value for every feature index the tree references.
    pub fn predict(&self, sample: &[f64]) -> ClassId {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if sample[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub(crate) fn from_parts(nodes: Vec<TreeNode>, feature_subset: FeatureSubset) -> Self {
        Self {
            nodes,
            feature_subset,
        }
    }
}

/// Gini impurity 1 - sum of squared class frequencies. `labels` must be
/// non-empty.
pub fn gini_impurity(labels: &[ClassId]) -> f64 {
    assert!(!labels.is_empty(), "gini_impurity of an empty label set");
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Best (feature, midpoint threshold) over the given candidate columns of
/// `a`, maximizing the weighted Gini decrease; the returned feature index is
/// relative to `a`. Returns `None` for pure nodes and when no candidate has
/// two distinct values. A best split with zero decrease is still returned
/// for impure nodes, so growth can continue through decrease plateaus.
pub fn best_split(
    a: &DataMatrix,
    labels: &[ClassId],
    candidate_features: &[usize],
) -> Option<(SplitRule, f64)> {
    debug_assert_eq!(a.n_rows(), labels.len());
    debug_assert!(!candidate_features.is_empty());
    let n = labels.len();
    if n < 2 {
        return None;
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    let indices: Vec<u32> = (0..n as u32).collect();
    let columns: Vec<Vec<f64>> = (0..a.n_cols()).map(|j| a.column(j)).collect();
    let mut scratch = SplitScratch::new(n_classes);
    let counts = class_counts(labels, &indices, n_classes);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return None; // pure node
    }
    let found = find_best_split(
        &columns,
        labels,
        &indices,
        candidate_features,
        &counts,
        &mut scratch,
    )?;
    let parent_sumsq: u64 = counts.iter().map(|&c| (c as u64) * (c as u64)).sum();
    let nf = n as f64;
    let decrease = found.score / nf - parent_sumsq as f64 / (nf * nf);
    Some((
        SplitRule {
            feature_index: found.feature,
            threshold: found.threshold,
        },
        decrease,
    ))
}

/// Growth observations for inspection: how many candidate features each
/// split search considered, in node-creation order.
#[derive(Debug, Default, Clone)]
pub struct GrowthStats {
    pub candidate_counts: Vec<usize>,
}

/// Grows a tree on `a` (the matrix already restricted to `subset`'s columns,
/// in subset order). Split rules store original feature indices, i.e.
/// `subset.indices()[local_column]`.
pub fn train_tree(
    a: &DataMatrix,
    labels: &[ClassId],
    subset: &FeatureSubset,
    n_classes: usize,
    mode: &SplitMode,
    params: &TreeParams,
    rng: &mut SeededRng,
) -> Result<DecisionTree> {
    train_tree_impl(a, labels, subset, n_classes, mode, params, rng, None)
}

/// `train_tree` plus growth statistics; the tree is identical to the
/// uninstrumented one.
pub fn train_tree_with_stats(
    a: &DataMatrix,
    labels: &[ClassId],
    subset: &FeatureSubset,
    n_classes: usize,
    mode: &SplitMode,
    params: &TreeParams,
    rng: &mut SeededRng,
) -> Result<(DecisionTree, GrowthStats)> {
    let mut stats = GrowthStats::default();
    let tree = train_tree_impl(
        a,
        labels,
        subset,
        n_classes,
        mode,
        params,
        rng,
        Some(&mut stats),
    )?;
    Ok((tree, stats))
}

#[allow(clippy::too_many_arguments)]
fn train_tree_impl(
    a: &DataMatrix,
    labels: &[ClassId],
    subset: &FeatureSubset,
    n_classes: usize,
    mode: &SplitMode,
    params: &TreeParams,
    rng: &mut SeededRng,
    mut stats: Option<&mut GrowthStats>,
) -> Result<DecisionTree> {
    params.validate()?;
    if a.n_cols() != subset.len() {
        return Err(Error::InvalidConfig(format!(
            "matrix has {} columns but the subset names {}",
            a.n_cols(),
            subset.len()
        )));
    }
    if labels.len() != a.n_rows() {
        return Err(Error::InvalidConfig(format!(
            "{} labels for {} rows",
            labels.len(),
            a.n_rows()
        )));
    }
    if n_classes == 0 || labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::InvalidConfig(
            "labels must lie in 0..n_classes".into(),
        ));
    }
    if let SplitMode::PerNodeUniform { candidates } = mode {
        if *candidates == 0 {
            return Err(Error::InvalidConfig(
                "per-node candidate count must be >= 1".into(),
            ));
        }
    }

    let k = a.n_cols();
    let columns: Vec<Vec<f64>> = (0..k).map(|j| a.column(j)).collect();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut scratch = SplitScratch::new(n_classes);
    let all_candidates: Vec<usize> = (0..k).collect();
    let mut candidate_buf: Vec<usize> = Vec::with_capacity(k);

    // Work items carry the sample set and where to wire the produced node.
    struct Item {
        indices: Vec<u32>,
        depth: usize,
        parent: Option<(usize, bool)>, // (node index, is_left)
    }
    let mut stack = vec![Item {
        indices: (0..labels.len() as u32).collect(),
        depth: 0,
        parent: None,
    }];

    while let Some(item) = stack.pop() {
        let counts = class_counts(labels, &item.indices, n_classes);
        let n_present = counts.iter().filter(|&&c| c > 0).count();
        let depth_capped = params.max_depth.is_some_and(|d| item.depth >= d);
        let too_small = item.indices.len() < params.min_samples_split;

        let split = if n_present < 2 || depth_capped || too_small {
            None
        } else {
            let candidates: &[usize] = match mode {
                SplitMode::FixedSubset => &all_candidates,
                SplitMode::PerNodeUniform { candidates } => {
                    draw_candidates(k, (*candidates).min(k), rng, &mut candidate_buf);
                    &candidate_buf
                }
            };
            if let Some(stats) = stats.as_deref_mut() {
                stats.candidate_counts.push(candidates.len());
            }
            find_best_split(
                &columns,
                labels,
                &item.indices,
                candidates,
                &counts,
                &mut scratch,
            )
        };

        let node_index = nodes.len();
        match split {
            None => {
                nodes.push(TreeNode::Leaf {
                    class: majority_class(&counts),
                });
            }
            Some(found) => {
                // Children are wired when popped; order right-then-left so the
                // left subtree is laid out first (stable preorder layout).
                nodes.push(TreeNode::Split {
                    feature: subset.indices()[found.feature],
                    threshold: found.threshold,
                    left: 0,
                    right: 0,
                });
                let col = &columns[found.feature];
                let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = item
                    .indices
                    .iter()
                    .partition(|&&i| col[i as usize] <= found.threshold);
                debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());
                stack.push(Item {
                    indices: right_idx,
                    depth: item.depth + 1,
                    parent: Some((node_index, false)),
                });
                stack.push(Item {
                    indices: left_idx,
                    depth: item.depth + 1,
                    parent: Some((node_index, true)),
                });
            }
        }
        if let Some((p, is_left)) = item.parent {
            if let TreeNode::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = node_index;
                } else {
                    *right = node_index;
                }
            }
        }
    }

    Ok(DecisionTree::from_parts(nodes, subset.clone()))
}

/// Per-node uniform candidate draw, sorted ascending so the lowest-index
/// tie-break applies within the drawn set as well.
fn draw_candidates(k: usize, m: usize, rng: &mut SeededRng, buf: &mut Vec<usize>) {
    buf.clear();
    if m >= k {
        buf.extend(0..k);
        return;
    }
    // Partial Fisher-Yates over 0..k.
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..m {
        let j = i + rng.next_below(k - i);
        pool.swap(i, j);
    }
    buf.extend_from_slice(&pool[..m]);
    buf.sort_unstable();
}

fn class_counts(labels: &[ClassId], indices: &[u32], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &i in indices {
        counts[labels[i as usize]] += 1;
    }
    counts
}

/// Majority label; ties go to the smallest class id.
fn majority_class(counts: &[usize]) -> ClassId {
    let mut best = 0;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best
}

struct FoundSplit {
    feature: usize,
    threshold: f64,
    /// sum_left/n_left + sum_right/n_right with sum_* the sums of squared
    /// class counts; maximizing it maximizes the Gini decrease.
    score: f64,
}

struct SplitScratch {
    pairs: Vec<(f64, u32)>,
    left_counts: Vec<u64>,
    right_counts: Vec<u64>,
}

impl SplitScratch {
    fn new(n_classes: usize) -> Self {
        Self {
            pairs: Vec::new(),
            left_counts: vec![0; n_classes],
            right_counts: vec![0; n_classes],
        }
    }
}

/// Scans every candidate feature in ascending order and every boundary
/// between consecutive distinct sorted values in ascending order, keeping
/// the strictly best score; ties therefore resolve to the lowest feature
/// index, then the lowest threshold. Returns `None` only when no candidate
/// offers two distinct values.
fn find_best_split(
    columns: &[Vec<f64>],
    labels: &[ClassId],
    indices: &[u32],
    candidates: &[usize],
    counts: &[usize],
    scratch: &mut SplitScratch,
) -> Option<FoundSplit> {
    let n = indices.len();
    let mut best: Option<FoundSplit> = None;
    for &f in candidates {
        let col = &columns[f];
        scratch.pairs.clear();
        scratch
            .pairs
            .extend(indices.iter().map(|&i| (col[i as usize], i)));
        scratch
            .pairs
            .sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

        for c in scratch.left_counts.iter_mut() {
            *c = 0;
        }
        for (rc, &c) in scratch.right_counts.iter_mut().zip(counts) {
            *rc = c as u64;
        }
        let mut sum_left: u64 = 0;
        let mut sum_right: u64 = counts.iter().map(|&c| (c as u64) * (c as u64)).sum();

        for pos in 0..n - 1 {
            let (value, idx) = scratch.pairs[pos];
            let class = labels[idx as usize];
            sum_left += 2 * scratch.left_counts[class] + 1;
            sum_right -= 2 * scratch.right_counts[class] - 1;
            scratch.left_counts[class] += 1;
            scratch.right_counts[class] -= 1;

            let next_value = scratch.pairs[pos + 1].0;
            if next_value == value {
                continue;
            }
            let n_left = (pos + 1) as f64;
            let n_right = (n - pos - 1) as f64;
            let score = sum_left as f64 / n_left + sum_right as f64 / n_right;
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(FoundSplit {
                    feature: f,
                    threshold: 0.5 * (value + next_value),
                    score,
                });
            }
        }
    }
    best
}
