//! Tree-ensemble training and majority-vote prediction.
//!
//! `train_less` implements the two-phase construction: compute the feature
//! distribution once on the training matrix, then for every tree
//! independently draw k features without replacement and grow a full tree on
//! the restricted columns. `train_rf` is the baseline forest: no bagging,
//! every tree sees the full sample set, and each node draws ceil(sqrt(d))
//! uniform candidate features.
//!
//! Every tree gets its own child generator derived from the master seed and
//! the tree index, so training parallelizes across trees without changing
//! any result.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::sampling::{sample_without_replacement, FeatureSubset, SeededRng};
use crate::scores::{
    leverage_distribution, norm_distribution, uniform_distribution, FeatureDistribution,
    SamplingScheme,
};
use crate::tree::{train_tree, ClassId, DecisionTree, SplitMode, TreeNode, TreeParams};

/// Training scheme of a model: the three feature-distribution variants plus
/// the random-forest baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Uniform,
    Norm,
    Leverage,
    Rf,
}

impl Scheme {
    /// The feature-distribution scheme, or `None` for the forest baseline.
    pub fn sampling(&self) -> Option<SamplingScheme> {
        match self {
            Scheme::Uniform => Some(SamplingScheme::Uniform),
            Scheme::Norm => Some(SamplingScheme::Norm),
            Scheme::Leverage => Some(SamplingScheme::Leverage),
            Scheme::Rf => None,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scheme::Uniform => "uniform",
            Scheme::Norm => "norm",
            Scheme::Leverage => "leverage",
            Scheme::Rf => "rf",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Scheme::Uniform),
            "norm" => Ok(Scheme::Norm),
            "leverage" => Ok(Scheme::Leverage),
            "rf" => Ok(Scheme::Rf),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheme '{other}' (expected uniform|norm|leverage|rf)"
            ))),
        }
    }
}

/// Configuration for `train_less`.
#[derive(Debug, Clone)]
pub struct LessConfig {
    pub scheme: SamplingScheme,
    /// Features sampled per tree.
    pub k: usize,
    /// Number of trees.
    pub trees: usize,
    /// SVD truncation limit for the leverage scheme.
    pub max_rank: usize,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl LessConfig {
    pub fn new(scheme: SamplingScheme, k: usize, trees: usize, seed: u64) -> Self {
        Self {
            scheme,
            k,
            trees,
            max_rank: DEFAULT_MAX_RANK,
            tree_params: TreeParams::default(),
            seed,
        }
    }
}

/// Default SVD truncation limit for leverage scores.
pub const DEFAULT_MAX_RANK: usize = 50;

/// Configuration for `train_rf`.
#[derive(Debug, Clone)]
pub struct RfConfig {
    pub trees: usize,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl RfConfig {
    pub fn new(trees: usize, seed: u64) -> Self {
        Self {
            trees,
            tree_params: TreeParams::default(),
            seed,
        }
    }
}

/// Per-node uniform candidate count used by the forest baseline.
pub fn rf_candidate_count(d: usize) -> usize {
    (d as f64).sqrt().ceil() as usize
}

/// Trained ensemble: the trees, their feature subsets, and training
/// metadata. Wall-clock training times are kept in memory for the harness
/// but never serialized, so model files are reproducible byte for byte.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    scheme: Scheme,
    k: usize,
    seed: u64,
    n_features: usize,
    n_classes: usize,
    class_names: Vec<String>,
    trees: Vec<DecisionTree>,
    train_times_secs: Vec<f64>,
    effective_rank: Option<usize>,
    distribution_fallback: bool,
}

impl EnsembleModel {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Wall-clock seconds spent training each tree (subset draw, column
    /// restriction and growth; excludes the distribution computation).
    pub fn train_times_secs(&self) -> &[f64] {
        &self.train_times_secs
    }

    /// Effective SVD rank used for the leverage distribution, if any.
    pub fn effective_rank(&self) -> Option<usize> {
        self.effective_rank
    }

    /// True when a degenerate matrix forced a fallback to the uniform
    /// distribution.
    pub fn distribution_fallback(&self) -> bool {
        self.distribution_fallback
    }

    /// Maps encoded class ids back to their original labels.
    pub fn set_class_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.n_classes {
            return Err(Error::InvalidConfig(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        self.class_names = names;
        Ok(())
    }

    /// Majority vote over all trees; ties resolve to the smallest class id.
    pub fn predict_majority(&self, sample: &[f64]) -> ClassId {
        self.predict_prefix(self.trees.len(), sample)
    }

    /// Majority vote over the first `prefix` trees (1-based count).
    pub fn predict_prefix(&self, prefix: usize, sample: &[f64]) -> ClassId {
        assert!(
            prefix >= 1 && prefix <= self.trees.len(),
            "prefix must be in 1..=t"
        );
        assert_eq!(
            sample.len(),
            self.n_features,
            "sample has {} features, model expects {}",
            sample.len(),
            self.n_features
        );
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees[..prefix] {
            votes[tree.predict(sample)] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }

    /// Sum of node counts over all trees.
    pub fn total_node_count(&self) -> usize {
        self.trees.iter().map(|t| t.node_count()).sum()
    }

    /// Fraction of test samples whose majority vote differs from the label.
    pub fn classification_error(&self, a: &DataMatrix, labels: &[ClassId]) -> f64 {
        assert!(a.n_rows() > 0, "empty test set");
        assert_eq!(a.n_rows(), labels.len());
        let wrong: usize = (0..a.n_rows())
            .filter(|&i| self.predict_majority(a.row(i)) != labels[i])
            .count();
        wrong as f64 / a.n_rows() as f64
    }

    /// Test error after each vote prefix 1..=t, computed in one pass over
    /// the per-tree predictions.
    pub fn prefix_errors(&self, a: &DataMatrix, labels: &[ClassId]) -> Vec<f64> {
        assert!(a.n_rows() > 0, "empty test set");
        assert_eq!(a.n_rows(), labels.len());
        let t = self.trees.len();
        let n = a.n_rows();
        let mut wrong = vec![0usize; t];
        let mut votes = vec![0usize; self.n_classes];
        for (i, &label) in labels.iter().enumerate() {
            let row = a.row(i);
            assert_eq!(row.len(), self.n_features);
            votes.iter_mut().for_each(|v| *v = 0);
            let mut leader = 0usize;
            for (m, tree) in self.trees.iter().enumerate() {
                let p = tree.predict(row);
                votes[p] += 1;
                // Incremental argmax with smallest-id tie-break: only p's
                // count changed, so compare it against the current leader.
                if p != leader
                    && (votes[p] > votes[leader] || (votes[p] == votes[leader] && p < leader))
                {
                    leader = p;
                }
                if leader != label {
                    wrong[m] += 1;
                }
            }
        }
        wrong.iter().map(|&w| w as f64 / n as f64).collect()
    }

    /// Serializes to the model JSON container. Random-forest trees store an
    /// empty feature list (they reference the full feature range).
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            scheme: self.scheme,
            k: self.k,
            t: self.trees.len(),
            seed: self.seed,
            n_features: self.n_features,
            classes: self.class_names.clone(),
            effective_rank: self.effective_rank,
            distribution_fallback: self.distribution_fallback,
            trees: self
                .trees
                .iter()
                .map(|tree| TreeFile {
                    features: if self.scheme == Scheme::Rf {
                        Vec::new()
                    } else {
                        tree.feature_subset().indices().to_vec()
                    },
                    nodes: tree.nodes().to_vec(),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_json(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        let n_classes = file.classes.len();
        if n_classes == 0 {
            return Err(Error::Data("model has no classes".into()));
        }
        let mut trees = Vec::with_capacity(file.trees.len());
        for t in file.trees {
            let subset = if t.features.is_empty() {
                FeatureSubset::full(file.n_features)
            } else {
                FeatureSubset::new(t.features, file.n_features)
                    .map_err(|e| Error::Data(format!("bad tree feature list: {e}")))?
            };
            if t.nodes.is_empty() {
                return Err(Error::Data("tree with no nodes".into()));
            }
            trees.push(DecisionTree::from_parts(t.nodes, subset));
        }
        if trees.is_empty() {
            return Err(Error::Data("model has no trees".into()));
        }
        let times = vec![0.0; trees.len()];
        Ok(Self {
            scheme: file.scheme,
            k: file.k,
            seed: file.seed,
            n_features: file.n_features,
            n_classes,
            class_names: file.classes,
            trees,
            train_times_secs: times,
            effective_rank: file.effective_rank,
            distribution_fallback: file.distribution_fallback,
        })
    }
}

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    scheme: Scheme,
    k: usize,
    t: usize,
    seed: u64,
    n_features: usize,
    classes: Vec<String>,
    effective_rank: Option<usize>,
    distribution_fallback: bool,
    trees: Vec<TreeFile>,
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    features: Vec<usize>,
    nodes: Vec<TreeNode>,
}

fn default_class_names(n_classes: usize) -> Vec<String> {
    (0..n_classes).map(|c| c.to_string()).collect()
}

fn validate_training_input(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    trees: usize,
) -> Result<()> {
    if labels.len() != a.n_rows() {
        return Err(Error::InvalidConfig(format!(
            "{} labels for {} rows",
            labels.len(),
            a.n_rows()
        )));
    }
    if n_classes < 2 {
        return Err(Error::InvalidConfig(
            "training requires at least 2 classes".into(),
        ));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::InvalidConfig(
            "labels must lie in 0..n_classes".into(),
        ));
    }
    if trees == 0 {
        return Err(Error::InvalidConfig("tree count must be >= 1".into()));
    }
    Ok(())
}

/// Computes the feature distribution for a scheme, substituting the uniform
/// distribution when the matrix is degenerate. The bool reports the
/// fallback.
pub fn scheme_distribution(
    a: &DataMatrix,
    scheme: SamplingScheme,
    max_rank: usize,
) -> Result<(FeatureDistribution, bool)> {
    let computed = match scheme {
        SamplingScheme::Uniform => return Ok((uniform_distribution(a.n_cols()), false)),
        SamplingScheme::Norm => norm_distribution(a),
        SamplingScheme::Leverage => leverage_distribution(a, max_rank),
    };
    match computed {
        Ok(dist) => Ok((dist, false)),
        Err(Error::DegenerateMatrix(_)) => Ok((uniform_distribution(a.n_cols()), true)),
        Err(e) => Err(e),
    }
}

/// Trains one tree of a LESS ensemble: child generator, subset draw, column
/// restriction, full growth. Returns the tree and its wall-clock seconds.
fn train_less_tree(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    dist: &FeatureDistribution,
    cfg: &LessConfig,
    master: &SeededRng,
    tree_index: usize,
) -> Result<(DecisionTree, f64)> {
    let start = Instant::now();
    let mut rng = master.child(tree_index as u64);
    let subset = sample_without_replacement(dist, cfg.k, &mut rng)?;
    let restricted = a.restrict_columns(&subset);
    let tree = train_tree(
        &restricted,
        labels,
        &subset,
        n_classes,
        &SplitMode::FixedSubset,
        &cfg.tree_params,
        &mut rng,
    )?;
    Ok((tree, start.elapsed().as_secs_f64()))
}

fn train_rf_tree(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    cfg: &RfConfig,
    master: &SeededRng,
    tree_index: usize,
) -> Result<(DecisionTree, f64)> {
    let start = Instant::now();
    let mut rng = master.child(tree_index as u64);
    let subset = FeatureSubset::full(a.n_cols());
    let mode = SplitMode::PerNodeUniform {
        candidates: rf_candidate_count(a.n_cols()),
    };
    let tree = train_tree(
        a,
        labels,
        &subset,
        n_classes,
        &mode,
        &cfg.tree_params,
        &mut rng,
    )?;
    Ok((tree, start.elapsed().as_secs_f64()))
}

/// Trains a LESS ensemble, computing the feature distribution internally.
pub fn train_less(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    cfg: &LessConfig,
) -> Result<EnsembleModel> {
    let (dist, fallback) = scheme_distribution(a, cfg.scheme, cfg.max_rank)?;
    let mut model = train_less_with_distribution(a, labels, n_classes, &dist, cfg)?;
    model.distribution_fallback = fallback;
    model.effective_rank = dist.effective_rank();
    Ok(model)
}

/// Trains a LESS ensemble from a precomputed distribution (the harness
/// reuses one distribution across repetitions; it is deterministic for a
/// given matrix, so results are identical to `train_less`).
pub fn train_less_with_distribution(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    dist: &FeatureDistribution,
    cfg: &LessConfig,
) -> Result<EnsembleModel> {
    validate_training_input(a, labels, n_classes, cfg.trees)?;
    cfg.tree_params.validate()?;
    if cfg.k == 0 || cfg.k > a.n_cols() {
        return Err(Error::InvalidConfig(format!(
            "k = {} must lie in 1..={}",
            cfg.k,
            a.n_cols()
        )));
    }
    if dist.len() != a.n_cols() {
        return Err(Error::InvalidConfig(format!(
            "distribution over {} features for a matrix with {} columns",
            dist.len(),
            a.n_cols()
        )));
    }
    let master = SeededRng::new(cfg.seed);
    let results: Result<Vec<(DecisionTree, f64)>> = (0..cfg.trees)
        .into_par_iter()
        .map(|i| train_less_tree(a, labels, n_classes, dist, cfg, &master, i))
        .collect();
    let (trees, times): (Vec<_>, Vec<_>) = results?.into_iter().unzip();
    Ok(EnsembleModel {
        scheme: match cfg.scheme {
            SamplingScheme::Uniform => Scheme::Uniform,
            SamplingScheme::Norm => Scheme::Norm,
            SamplingScheme::Leverage => Scheme::Leverage,
        },
        k: cfg.k,
        seed: cfg.seed,
        n_features: a.n_cols(),
        n_classes,
        class_names: default_class_names(n_classes),
        trees,
        train_times_secs: times,
        effective_rank: dist.effective_rank(),
        distribution_fallback: false,
    })
}

/// Trains the random-forest baseline: t fully grown trees on the full
/// sample set, per-node uniform candidate draws, no bagging.
pub fn train_rf(
    a: &DataMatrix,
    labels: &[ClassId],
    n_classes: usize,
    cfg: &RfConfig,
) -> Result<EnsembleModel> {
    validate_training_input(a, labels, n_classes, cfg.trees)?;
    cfg.tree_params.validate()?;
    let master = SeededRng::new(cfg.seed);
    let results: Result<Vec<(DecisionTree, f64)>> = (0..cfg.trees)
        .into_par_iter()
        .map(|i| train_rf_tree(a, labels, n_classes, cfg, &master, i))
        .collect();
    let (trees, times): (Vec<_>, Vec<_>) = results?.into_iter().unzip();
    Ok(EnsembleModel {
        scheme: Scheme::Rf,
        k: rf_candidate_count(a.n_cols()),
        seed: cfg.seed,
        n_features: a.n_cols(),
        n_classes,
        class_names: default_class_names(n_classes),
        trees,
        train_times_secs: times,
        effective_rank: None,
        distribution_fallback: false,
    })
}

/// Grows an ensemble one tree at a time; tree i is identical to tree i of
/// the batch trainers with the same configuration. Used by the harness to
/// stop on an error target or a time budget.
pub struct IncrementalTrainer<'a> {
    a: &'a DataMatrix,
    labels: &'a [ClassId],
    n_classes: usize,
    kind: TrainerKind,
    master: SeededRng,
    model: EnsembleModel,
}

enum TrainerKind {
    Less {
        dist: FeatureDistribution,
        cfg: LessConfig,
    },
    Rf {
        cfg: RfConfig,
    },
}

impl<'a> IncrementalTrainer<'a> {
    pub fn less(
        a: &'a DataMatrix,
        labels: &'a [ClassId],
        n_classes: usize,
        cfg: LessConfig,
    ) -> Result<Self> {
        let (dist, fallback) = scheme_distribution(a, cfg.scheme, cfg.max_rank)?;
        let mut t = Self::less_with_distribution(a, labels, n_classes, dist, cfg)?;
        t.model.distribution_fallback = fallback;
        Ok(t)
    }

    pub fn less_with_distribution(
        a: &'a DataMatrix,
        labels: &'a [ClassId],
        n_classes: usize,
        dist: FeatureDistribution,
        cfg: LessConfig,
    ) -> Result<Self> {
        validate_training_input(a, labels, n_classes, cfg.trees)?;
        cfg.tree_params.validate()?;
        if cfg.k == 0 || cfg.k > a.n_cols() {
            return Err(Error::InvalidConfig(format!(
                "k = {} must lie in 1..={}",
                cfg.k,
                a.n_cols()
            )));
        }
        let model = EnsembleModel {
            scheme: match cfg.scheme {
                SamplingScheme::Uniform => Scheme::Uniform,
                SamplingScheme::Norm => Scheme::Norm,
                SamplingScheme::Leverage => Scheme::Leverage,
            },
            k: cfg.k,
            seed: cfg.seed,
            n_features: a.n_cols(),
            n_classes,
            class_names: default_class_names(n_classes),
            trees: Vec::new(),
            train_times_secs: Vec::new(),
            effective_rank: dist.effective_rank(),
            distribution_fallback: false,
        };
        Ok(Self {
            a,
            labels,
            n_classes,
            master: SeededRng::new(cfg.seed),
            kind: TrainerKind::Less { dist, cfg },
            model,
        })
    }

    pub fn rf(
        a: &'a DataMatrix,
        labels: &'a [ClassId],
        n_classes: usize,
        cfg: RfConfig,
    ) -> Result<Self> {
        validate_training_input(a, labels, n_classes, cfg.trees)?;
        cfg.tree_params.validate()?;
        let model = EnsembleModel {
            scheme: Scheme::Rf,
            k: rf_candidate_count(a.n_cols()),
            seed: cfg.seed,
            n_features: a.n_cols(),
            n_classes,
            class_names: default_class_names(n_classes),
            trees: Vec::new(),
            train_times_secs: Vec::new(),
            effective_rank: None,
            distribution_fallback: false,
        };
        Ok(Self {
            a,
            labels,
            n_classes,
            master: SeededRng::new(cfg.seed),
            kind: TrainerKind::Rf { cfg },
            model,
        })
    }

    /// Trains the next tree and returns its wall-clock seconds.
    pub fn grow_one(&mut self) -> Result<f64> {
        let index = self.model.trees.len();
        let (tree, secs) = match &self.kind {
            TrainerKind::Less { dist, cfg } => train_less_tree(
                self.a,
                self.labels,
                self.n_classes,
                dist,
                cfg,
                &self.master,
                index,
            )?,
            TrainerKind::Rf { cfg } => train_rf_tree(
                self.a,
                self.labels,
                self.n_classes,
                cfg,
                &self.master,
                index,
            )?,
        };
        self.model.trees.push(tree);
        self.model.train_times_secs.push(secs);
        Ok(secs)
    }

    pub fn model(&self) -> &EnsembleModel {
        &self.model
    }

    pub fn into_model(self) -> EnsembleModel {
        self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededRng;

    fn blobs(
        n_per_class: usize,
        d: usize,
        separation: f64,
        seed: u64,
    ) -> (DataMatrix, Vec<ClassId>) {
        let mut rng = SeededRng::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            let center = if c == 0 { 0.0 } else { separation };
            for _ in 0..n_per_class {
                rows.push(
                    (0..d)
                        .map(|_| center + rng.next_gaussian())
                        .collect::<Vec<_>>(),
                );
                labels.push(c);
            }
        }
        (DataMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn k_equals_d_makes_all_trees_identical() {
        let (a, y) = blobs(20, 3, 4.0, 1);
        let cfg = LessConfig::new(SamplingScheme::Uniform, 3, 5, 7);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        for t in model.trees() {
            assert_eq!(t, &model.trees()[0]);
        }
        let single_error = {
            let wrong: usize = (0..a.n_rows())
                .filter(|&i| model.trees()[0].predict(a.row(i)) != y[i])
                .count();
            wrong as f64 / a.n_rows() as f64
        };
        assert_eq!(model.classification_error(&a, &y), single_error);
    }

    #[test]
    fn single_tree_fits_separable_data() {
        let (a, y) = blobs(25, 2, 8.0, 3);
        let cfg = LessConfig::new(SamplingScheme::Norm, 2, 1, 11);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        assert_eq!(model.classification_error(&a, &y), 0.0);
    }

    #[test]
    fn rf_on_separated_blobs_generalizes() {
        let (train_a, train_y) = blobs(300, 20, 6.0, 5);
        let (test_a, test_y) = blobs(100, 20, 6.0, 6);
        let model = train_rf(&train_a, &train_y, 2, &RfConfig::new(20, 13)).unwrap();
        let err = model.classification_error(&test_a, &test_y);
        assert!(err < 0.05, "rf error {err}");
        assert_eq!(rf_candidate_count(20), 5);
    }

    #[test]
    fn rf_with_one_feature_reduces_to_cart() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<ClassId> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let a = DataMatrix::from_rows(&rows).unwrap();
        let rf = train_rf(&a, &y, 2, &RfConfig::new(3, 3)).unwrap();
        let mut rng = SeededRng::new(0);
        let cart = train_tree(
            &a,
            &y,
            &FeatureSubset::full(1),
            2,
            &SplitMode::FixedSubset,
            &TreeParams::default(),
            &mut rng,
        )
        .unwrap();
        for t in rf.trees() {
            assert_eq!(t.nodes(), cart.nodes());
        }
    }

    #[test]
    fn seed_determinism_and_prefix_stability() {
        let (a, y) = blobs(40, 6, 3.0, 9);
        let cfg = LessConfig::new(SamplingScheme::Leverage, 3, 10, 21);
        let m1 = train_less(&a, &y, 2, &cfg).unwrap();
        let m2 = train_less(&a, &y, 2, &cfg).unwrap();
        assert_eq!(m1.to_json_string().unwrap(), m2.to_json_string().unwrap());

        // A longer run shares its prefix with the shorter one.
        let longer = train_less(
            &a,
            &y,
            2,
            &LessConfig {
                trees: 15,
                ..cfg.clone()
            },
        )
        .unwrap();
        for i in 0..10 {
            assert_eq!(longer.trees()[i], m1.trees()[i]);
        }
    }

    #[test]
    fn incremental_matches_batch() {
        let (a, y) = blobs(30, 5, 3.0, 17);
        let cfg = LessConfig::new(SamplingScheme::Norm, 2, 6, 77);
        let batch = train_less(&a, &y, 2, &cfg).unwrap();
        let mut inc = IncrementalTrainer::less(&a, &y, 2, cfg).unwrap();
        for _ in 0..6 {
            inc.grow_one().unwrap();
        }
        let inc_model = inc.into_model();
        for (bt, it) in batch.trees().iter().zip(inc_model.trees()) {
            assert_eq!(bt, it);
        }
    }

    #[test]
    fn majority_vote_unanimity() {
        let rows = vec![vec![0.0], vec![1.0]];
        let a = DataMatrix::from_rows(&rows).unwrap();
        let y = vec![0, 1];
        let cfg = LessConfig::new(SamplingScheme::Uniform, 1, 3, 5);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        // Identical trees vote unanimously: same label as any single tree.
        assert_eq!(model.predict_majority(&[0.0]), 0);
        assert_eq!(model.predict_majority(&[1.0]), 1);
    }

    /// A hand-built model of constant trees with the given leaf classes.
    fn constant_model(leaf_classes: &[usize], classes: &[&str]) -> EnsembleModel {
        let trees: Vec<String> = leaf_classes
            .iter()
            .map(|c| format!(r#"{{"features":[0],"nodes":[{{"leaf":{{"class":{c}}}}}]}}"#))
            .collect();
        let json = format!(
            r#"{{"schema_version":1,"scheme":"uniform","k":1,"t":{},"seed":0,"n_features":1,
                "classes":[{}],"effective_rank":null,"distribution_fallback":false,
                "trees":[{}]}}"#,
            leaf_classes.len(),
            classes
                .iter()
                .map(|c| format!("\"{c}\""))
                .collect::<Vec<_>>()
                .join(","),
            trees.join(",")
        );
        EnsembleModel::read_json(json.as_bytes()).unwrap()
    }

    #[test]
    fn vote_tie_breaks_to_smallest_class() {
        // Votes [1, -1] tie; under the ordering -1 < 1 the encoded ids are
        // {-1: 0, 1: 1} and the tie resolves to -1.
        let model = constant_model(&[1, 0], &["-1", "1"]);
        let winner = model.predict_majority(&[0.0]);
        assert_eq!(winner, 0);
        assert_eq!(model.class_names()[winner], "-1");
        // Strict majority [1, 1, -1] picks 1.
        let model = constant_model(&[1, 1, 0], &["-1", "1"]);
        assert_eq!(model.predict_majority(&[0.0]), 1);
    }

    #[test]
    fn constant_model_error_on_balanced_set_is_half() {
        let model = constant_model(&[1], &["-1", "1"]);
        let a = DataMatrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let y = vec![0, 1, 0, 1];
        assert_eq!(model.classification_error(&a, &y), 0.5);
        // A model that always matches the single test label scores 0.
        let all_one = vec![1, 1, 1, 1];
        assert_eq!(model.classification_error(&a, &all_one), 0.0);
    }

    #[test]
    fn prefix_errors_match_direct_evaluation() {
        let (a, y) = blobs(30, 4, 2.0, 23);
        let (ta, ty) = blobs(15, 4, 2.0, 24);
        let cfg = LessConfig::new(SamplingScheme::Uniform, 2, 7, 31);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        let fast = model.prefix_errors(&ta, &ty);
        for m in 1..=7 {
            let direct = {
                let wrong: usize = (0..ta.n_rows())
                    .filter(|&i| model.predict_prefix(m, ta.row(i)) != ty[i])
                    .count();
                wrong as f64 / ta.n_rows() as f64
            };
            assert_eq!(fast[m - 1], direct, "prefix {m}");
        }
    }

    #[test]
    fn node_count_additivity() {
        let (a, y) = blobs(20, 3, 2.0, 41);
        let cfg = LessConfig::new(SamplingScheme::Uniform, 2, 4, 3);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        let by_walk: usize = model
            .trees()
            .iter()
            .map(|t| {
                // Independent traversal count.
                fn walk(nodes: &[TreeNode], at: usize) -> usize {
                    match &nodes[at] {
                        TreeNode::Leaf { .. } => 1,
                        TreeNode::Split { left, right, .. } => {
                            1 + walk(nodes, *left) + walk(nodes, *right)
                        }
                    }
                }
                walk(t.nodes(), 0)
            })
            .sum();
        assert_eq!(model.total_node_count(), by_walk);
    }

    #[test]
    fn serialization_round_trip() {
        let (a, y) = blobs(25, 4, 3.0, 51);
        let cfg = LessConfig::new(SamplingScheme::Leverage, 2, 5, 61);
        let mut model = train_less(&a, &y, 2, &cfg).unwrap();
        model
            .set_class_names(vec!["-1".into(), "1".into()])
            .unwrap();
        let json = model.to_json_string().unwrap();
        let loaded = EnsembleModel::read_json(json.as_bytes()).unwrap();
        assert_eq!(loaded.tree_count(), 5);
        assert_eq!(loaded.class_names(), model.class_names());
        for i in 0..a.n_rows() {
            assert_eq!(
                loaded.predict_majority(a.row(i)),
                model.predict_majority(a.row(i))
            );
        }
        // Times are not serialized; the reloaded file re-serializes identically.
        assert_eq!(loaded.to_json_string().unwrap(), json);
    }

    #[test]
    fn rf_round_trip_restores_full_subset() {
        let (a, y) = blobs(20, 5, 4.0, 71);
        let model = train_rf(&a, &y, 2, &RfConfig::new(3, 19)).unwrap();
        let json = model.to_json_string().unwrap();
        assert!(json.contains("\"features\": []"));
        let loaded = EnsembleModel::read_json(json.as_bytes()).unwrap();
        for i in 0..a.n_rows() {
            assert_eq!(
                loaded.predict_majority(a.row(i)),
                model.predict_majority(a.row(i))
            );
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let (a, y) = blobs(10, 3, 2.0, 81);
        assert!(train_less(
            &a,
            &y,
            2,
            &LessConfig::new(SamplingScheme::Uniform, 4, 1, 0)
        )
        .is_err());
        assert!(train_less(
            &a,
            &y,
            2,
            &LessConfig::new(SamplingScheme::Uniform, 0, 1, 0)
        )
        .is_err());
        assert!(train_less(
            &a,
            &y,
            2,
            &LessConfig::new(SamplingScheme::Uniform, 2, 0, 0)
        )
        .is_err());
        let one_class = vec![0; a.n_rows()];
        assert!(train_less(
            &a,
            &one_class,
            1,
            &LessConfig::new(SamplingScheme::Uniform, 2, 1, 0)
        )
        .is_err());
    }

    #[test]
    fn degenerate_matrix_falls_back_to_uniform() {
        let a = DataMatrix::from_vec(4, 3, vec![0.0; 12]).unwrap();
        let y = vec![0, 0, 1, 1];
        let cfg = LessConfig::new(SamplingScheme::Leverage, 2, 2, 5);
        let model = train_less(&a, &y, 2, &cfg).unwrap();
        assert!(model.distribution_fallback());
    }
}
