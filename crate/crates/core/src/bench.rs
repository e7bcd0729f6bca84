//! Experiment harness: repeated seeded runs over a set of schemes and k
//! values, recording (cumulative training time, prefix-vote test error,
//! cumulative node count) after every tree, plus the node-budget experiment
//! that grows ensembles until a target error or a time budget.
//!
//! Determinism: repetition seeds derive from the master seed and the
//! (scheme, k, repetition) triple, so reruns with the same configuration
//! reproduce every error and node column exactly; wall-time columns vary.
//! Cumulative time is the sum of per-tree measured durations in tree order
//! (logical serial time), which keeps curves independent of how many trees
//! trained concurrently. Feature distributions are deterministic per matrix
//! and are computed once per scheme, then shared across repetitions.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    load_csv, load_libsvm, make_planted_dataset, train_test_split, LabelColumn, LabeledDataset,
    PlantedConfig,
};
use crate::ensemble::{
    rf_candidate_count, scheme_distribution, train_less_with_distribution, train_rf, EnsembleModel,
    IncrementalTrainer, LessConfig, RfConfig, Scheme,
};
use crate::error::{Error, Result};
use crate::sampling::splitmix64;
use crate::scores::FeatureDistribution;
use crate::tree::TreeParams;

/// Where the harness gets its data.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    CsvFile {
        path: PathBuf,
        label_col: LabelColumn,
        has_header: bool,
        delimiter: u8,
    },
    LibsvmFile {
        path: PathBuf,
    },
    Planted(PlantedConfig),
}

impl DatasetSource {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetSource::CsvFile {
                path,
                label_col,
                has_header,
                delimiter,
            } => load_csv(path, label_col, *has_header, *delimiter),
            DatasetSource::LibsvmFile { path } => load_libsvm(path),
            DatasetSource::Planted(cfg) => make_planted_dataset(cfg),
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub schemes: Vec<Scheme>,
    pub k_values: Vec<usize>,
    /// Trees per ensemble; also the growth cap for the node-budget runs.
    pub trees: usize,
    pub repetitions: usize,
    pub epsilon_target: f64,
    pub time_budget_secs: f64,
    pub seed: u64,
    pub test_fraction: f64,
    pub max_rank: usize,
    pub tree_params: TreeParams,
    /// Add the distribution-computation time to every cumulative timestamp.
    pub include_scores_time: bool,
}

impl ExperimentConfig {
    pub fn new(source: DatasetSource) -> Self {
        Self {
            source,
            schemes: vec![Scheme::Leverage, Scheme::Uniform],
            k_values: Vec::new(), // defaults to ceil(sqrt(d)) and 2*ceil(sqrt(d))
            trees: 100,
            repetitions: 30,
            epsilon_target: 0.25,
            time_budget_secs: 3600.0,
            seed: 42,
            test_fraction: 0.3,
            max_rank: 50,
            tree_params: TreeParams::default(),
            include_scores_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes requested".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::InvalidConfig(format!("scheme '{s}' listed twice")));
            }
        }
        if self.trees == 0 {
            return Err(Error::InvalidConfig("trees must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if !(self.epsilon_target > 0.0 && self.epsilon_target <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_target must lie in (0, 1], got {}",
                self.epsilon_target
            )));
        }
        if self.time_budget_secs < 0.0 {
            return Err(Error::InvalidConfig("negative time budget".into()));
        }
        self.tree_params.validate()
    }

    /// The k values to sweep, first occurrences only; defaults to
    /// ceil(sqrt(d)) and 2 ceil(sqrt(d)) clamped to d when none are
    /// configured.
    pub fn effective_k_values(&self, d: usize) -> Vec<usize> {
        let raw = if self.k_values.is_empty() {
            let root = rf_candidate_count(d);
            vec![root.min(d), (2 * root).min(d)]
        } else {
            self.k_values.clone()
        };
        let mut ks = Vec::new();
        for k in raw {
            if !ks.contains(&k) {
                ks.push(k);
            }
        }
        ks
    }
}

/// One measurement: the state after `tree_index` trees of one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub scheme: Scheme,
    pub k: usize,
    pub rep: usize,
    /// 1-based prefix length.
    pub tree_index: usize,
    pub cum_time_s: f64,
    pub test_error: f64,
    pub cum_nodes: usize,
    #[serde(skip)]
    pub seed: u64,
}

/// Mean curve point over repetitions at a fixed (scheme, k, tree_index).
#[derive(Debug, Clone, Serialize)]
pub struct MeanPoint {
    pub scheme: Scheme,
    pub k: usize,
    pub tree_index: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_cum_time_s: f64,
    pub mean_cum_nodes: f64,
}

/// Curve-experiment output: raw per-repetition records plus mean curves.
#[derive(Debug)]
pub struct CurveOutcome {
    pub records: Vec<ExperimentRecord>,
    pub means: Vec<MeanPoint>,
}

/// Node-budget outcome for one repetition.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum NodesOutcome {
    /// The error target was reached; `nodes` is the ensemble's total node
    /// count at that point.
    Reached {
        nodes: usize,
        trees: usize,
        cum_time_s: f64,
    },
    /// The time budget (or the tree cap) ran out first.
    ExceededBudget { trees: usize, best_error: f64 },
}

/// Node-budget results for one scheme.
#[derive(Debug, Clone, Serialize)]
pub struct NodesToEpsilon {
    pub scheme: Scheme,
    pub k: usize,
    pub epsilon: f64,
    pub per_rep: Vec<NodesOutcome>,
    /// Mean node count over the repetitions that reached the target.
    pub mean_nodes: Option<f64>,
    pub exceeded_count: usize,
}

/// Repetition seed: a SplitMix64 chain over (master, scheme, k, rep).
pub fn rep_seed(master: u64, scheme: Scheme, k: usize, rep: usize) -> u64 {
    let scheme_id = match scheme {
        Scheme::Uniform => 1u64,
        Scheme::Norm => 2,
        Scheme::Leverage => 3,
        Scheme::Rf => 4,
    };
    let s1 = splitmix64(master ^ splitmix64(scheme_id));
    let s2 = splitmix64(s1 ^ splitmix64(k as u64));
    splitmix64(s2 ^ splitmix64(rep as u64 + 1))
}

const SPLIT_SALT: u64 = 0x5b71_f5ee_d001_7a2c;

fn split_seed(master: u64) -> u64 {
    splitmix64(master ^ SPLIT_SALT)
}

/// The exact train/test partition a run of this configuration uses; exposed
/// so recorded errors can be recomputed from serialized models.
pub fn experiment_split(cfg: &ExperimentConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let ds = cfg.source.load()?;
    train_test_split(&ds, cfg.test_fraction, split_seed(cfg.seed))
}

struct Prepared {
    train: LabeledDataset,
    test: LabeledDataset,
    /// (distribution, fallback flag, seconds spent computing it) per scheme,
    /// shared across repetitions and k values.
    dists: Vec<(Scheme, FeatureDistribution, f64)>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (train, test) = experiment_split(cfg)?;
    let mut dists = Vec::new();
    for &scheme in &cfg.schemes {
        if let Some(sampling) = scheme.sampling() {
            let start = Instant::now();
            let (dist, _fallback) = scheme_distribution(train.matrix(), sampling, cfg.max_rank)?;
            dists.push((scheme, dist, start.elapsed().as_secs_f64()));
        }
    }
    Ok(Prepared { train, test, dists })
}

fn scheme_dist(p: &Prepared, scheme: Scheme) -> Option<&(Scheme, FeatureDistribution, f64)> {
    p.dists.iter().find(|(s, _, _)| *s == scheme)
}

/// Trains one repetition and expands it into per-tree records.
fn run_repetition(
    cfg: &ExperimentConfig,
    p: &Prepared,
    scheme: Scheme,
    k: usize,
    rep: usize,
) -> Result<Vec<ExperimentRecord>> {
    let seed = rep_seed(cfg.seed, scheme, k, rep);
    let (model, scores_secs) = train_for(cfg, p, scheme, k, seed)?;
    let errors = model.prefix_errors(p.test.matrix(), p.test.labels());
    let time_origin = if cfg.include_scores_time {
        scores_secs
    } else {
        0.0
    };
    let mut records = Vec::with_capacity(model.tree_count());
    let mut cum_time = time_origin;
    let mut cum_nodes = 0usize;
    for (i, tree) in model.trees().iter().enumerate() {
        cum_time += model.train_times_secs()[i];
        cum_nodes += tree.node_count();
        records.push(ExperimentRecord {
            scheme,
            k,
            rep,
            tree_index: i + 1,
            cum_time_s: cum_time,
            test_error: errors[i],
            cum_nodes,
            seed,
        });
    }
    Ok(records)
}

fn train_for(
    cfg: &ExperimentConfig,
    p: &Prepared,
    scheme: Scheme,
    k: usize,
    seed: u64,
) -> Result<(EnsembleModel, f64)> {
    let train = &p.train;
    match scheme.sampling() {
        Some(sampling) => {
            let (_, dist, secs) = scheme_dist(p, scheme).expect("distribution prepared");
            let less = LessConfig {
                scheme: sampling,
                k,
                trees: cfg.trees,
                max_rank: cfg.max_rank,
                tree_params: cfg.tree_params.clone(),
                seed,
            };
            let model = train_less_with_distribution(
                train.matrix(),
                train.labels(),
                train.n_classes(),
                dist,
                &less,
            )?;
            Ok((model, *secs))
        }
        None => {
            let rf = RfConfig {
                trees: cfg.trees,
                tree_params: cfg.tree_params.clone(),
                seed,
            };
            let model = train_rf(train.matrix(), train.labels(), train.n_classes(), &rf)?;
            Ok((model, 0.0))
        }
    }
}

/// (scheme, k) combinations to run: the k sweep applies to the distribution
/// schemes; the forest baseline has no k and runs once, recorded with its
/// per-node candidate count in the k column.
fn combinations(cfg: &ExperimentConfig, d: usize) -> Vec<(Scheme, usize)> {
    let ks = cfg.effective_k_values(d);
    let mut combos = Vec::new();
    for &scheme in &cfg.schemes {
        if scheme == Scheme::Rf {
            combos.push((scheme, rf_candidate_count(d)));
        } else {
            for &k in &ks {
                combos.push((scheme, k));
            }
        }
    }
    combos
}

/// Error-versus-cumulative-training-time curves: every scheme, k and
/// repetition, one record per tree prefix.
pub fn run_error_vs_time(cfg: &ExperimentConfig) -> Result<CurveOutcome> {
    let p = prepare(cfg)?;
    let combos = combinations(cfg, p.train.n_features());
    let jobs: Vec<(Scheme, usize, usize)> = combos
        .iter()
        .flat_map(|&(s, k)| (0..cfg.repetitions).map(move |r| (s, k, r)))
        .collect();
    let per_rep: Result<Vec<Vec<ExperimentRecord>>> = jobs
        .par_iter()
        .map(|&(scheme, k, rep)| run_repetition(cfg, &p, scheme, k, rep))
        .collect();
    let records: Vec<ExperimentRecord> = per_rep?.into_iter().flatten().collect();
    let means = mean_curves(&records, cfg.repetitions);
    Ok(CurveOutcome { records, means })
}

/// Error-versus-number-of-trees curves. Shares its instrumentation with
/// `run_error_vs_time` (the records carry both axes); provided so each
/// measurement family can be requested by name.
pub fn run_error_vs_trees(cfg: &ExperimentConfig) -> Result<CurveOutcome> {
    run_error_vs_time(cfg)
}

fn mean_curves(records: &[ExperimentRecord], repetitions: usize) -> Vec<MeanPoint> {
    use std::collections::BTreeMap;
    // Key order gives a stable output layout.
    let scheme_id = |s: Scheme| match s {
        Scheme::Uniform => 0u8,
        Scheme::Norm => 1,
        Scheme::Leverage => 2,
        Scheme::Rf => 3,
    };
    let mut groups: BTreeMap<(u8, usize, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((scheme_id(r.scheme), r.k, r.tree_index))
            .or_default()
            .push(r);
    }
    groups
        .values()
        .map(|rs| {
            let n = rs.len() as f64;
            let mean_error = rs.iter().map(|r| r.test_error).sum::<f64>() / n;
            let var = if rs.len() > 1 {
                rs.iter()
                    .map(|r| (r.test_error - mean_error).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            debug_assert!(rs.len() == repetitions);
            MeanPoint {
                scheme: rs[0].scheme,
                k: rs[0].k,
                tree_index: rs[0].tree_index,
                mean_error,
                std_error: var.sqrt(),
                mean_cum_time_s: rs.iter().map(|r| r.cum_time_s).sum::<f64>() / n,
                mean_cum_nodes: rs.iter().map(|r| r.cum_nodes as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Grows each scheme's ensemble tree by tree until the prefix test error
/// reaches `epsilon_target` or the budget runs out. The first tree is always
/// trained (the budget is checked before each growth step), and `cfg.trees`
/// caps the growth, counting as budget exhaustion when hit.
pub fn run_nodes_to_epsilon(cfg: &ExperimentConfig) -> Result<Vec<NodesToEpsilon>> {
    let p = prepare(cfg)?;
    let d = p.train.n_features();
    let ks = cfg.effective_k_values(d);
    let k_for = |scheme: Scheme| {
        if scheme == Scheme::Rf {
            rf_candidate_count(d)
        } else {
            ks[0]
        }
    };
    let mut results = Vec::new();
    for &scheme in &cfg.schemes {
        let k = k_for(scheme);
        let per_rep: Result<Vec<NodesOutcome>> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| grow_to_epsilon(cfg, &p, scheme, k, rep))
            .collect();
        let per_rep = per_rep?;
        let reached: Vec<f64> = per_rep
            .iter()
            .filter_map(|o| match o {
                NodesOutcome::Reached { nodes, .. } => Some(*nodes as f64),
                NodesOutcome::ExceededBudget { .. } => None,
            })
            .collect();
        let exceeded_count = per_rep.len() - reached.len();
        let mean_nodes = if reached.is_empty() {
            None
        } else {
            Some(reached.iter().sum::<f64>() / reached.len() as f64)
        };
        results.push(NodesToEpsilon {
            scheme,
            k,
            epsilon: cfg.epsilon_target,
            per_rep,
            mean_nodes,
            exceeded_count,
        });
    }
    Ok(results)
}

fn grow_to_epsilon(
    cfg: &ExperimentConfig,
    p: &Prepared,
    scheme: Scheme,
    k: usize,
    rep: usize,
) -> Result<NodesOutcome> {
    let seed = rep_seed(cfg.seed, scheme, k, rep);
    let train = &p.train;
    let (mut trainer, time_origin) = match scheme.sampling() {
        Some(sampling) => {
            let (_, dist, scores_secs) = scheme_dist(p, scheme).expect("distribution prepared");
            let less = LessConfig {
                scheme: sampling,
                k,
                trees: cfg.trees,
                max_rank: cfg.max_rank,
                tree_params: cfg.tree_params.clone(),
                seed,
            };
            let t = IncrementalTrainer::less_with_distribution(
                train.matrix(),
                train.labels(),
                train.n_classes(),
                dist.clone(),
                less,
            )?;
            (
                t,
                if cfg.include_scores_time {
                    *scores_secs
                } else {
                    0.0
                },
            )
        }
        None => {
            let rf = RfConfig {
                trees: cfg.trees,
                tree_params: cfg.tree_params.clone(),
                seed,
            };
            (
                IncrementalTrainer::rf(train.matrix(), train.labels(), train.n_classes(), rf)?,
                0.0,
            )
        }
    };
    let mut cum_time = time_origin;
    let mut best_error = 1.0f64;
    loop {
        if cum_time >= cfg.time_budget_secs || trainer.model().tree_count() >= cfg.trees {
            return Ok(NodesOutcome::ExceededBudget {
                trees: trainer.model().tree_count(),
                best_error,
            });
        }
        cum_time += trainer.grow_one()?;
        let model = trainer.model();
        let error = model.classification_error(p.test.matrix(), p.test.labels());
        best_error = best_error.min(error);
        if error <= cfg.epsilon_target {
            return Ok(NodesOutcome::Reached {
                nodes: model.total_node_count(),
                trees: model.tree_count(),
                cum_time_s: cum_time,
            });
        }
    }
}

/// Writes records in the curve CSV schema:
/// `scheme,k,rep,tree_index,cum_time_s,test_error,cum_nodes`. Every row is
/// self-describing, so files from multiple runs can be concatenated.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "scheme",
        "k",
        "rep",
        "tree_index",
        "cum_time_s",
        "test_error",
        "cum_nodes",
    ])
    .map_err(|e| Error::Data(e.to_string()))?;
    for r in records {
        w.write_record([
            r.scheme.to_string(),
            r.k.to_string(),
            r.rep.to_string(),
            r.tree_index.to_string(),
            r.cum_time_s.to_string(),
            r.test_error.to_string(),
            r.cum_nodes.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON summary payload: configuration echo, mean curves, and node-budget
/// results when that family ran.
#[derive(Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub seed: u64,
    pub repetitions: usize,
    pub trees: usize,
    pub epsilon_target: f64,
    pub time_budget_secs: f64,
    pub schemes: Vec<String>,
    pub k_values: Vec<usize>,
    pub curves: Option<&'a [MeanPoint]>,
    pub nodes_to_epsilon: Option<&'a [NodesToEpsilon]>,
}

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

pub fn write_summary_json<W: Write>(
    cfg: &ExperimentConfig,
    curves: Option<&[MeanPoint]>,
    nodes: Option<&[NodesToEpsilon]>,
    d: usize,
    writer: W,
) -> Result<()> {
    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        seed: cfg.seed,
        repetitions: cfg.repetitions,
        trees: cfg.trees,
        epsilon_target: cfg.epsilon_target,
        time_budget_secs: cfg.time_budget_secs,
        schemes: cfg.schemes.iter().map(|s| s.to_string()).collect(),
        k_values: cfg.effective_k_values(d),
        curves,
        nodes_to_epsilon: nodes,
    };
    serde_json::to_writer_pretty(writer, &summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted_source(n: usize, d: usize) -> DatasetSource {
        DatasetSource::Planted(PlantedConfig {
            n_samples: n,
            n_features: d,
            n_informative: 2,
            class_count: 2,
            noise_scale: 0.0,
            seed: 3,
        })
    }

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(planted_source(80, 6));
        cfg.schemes = vec![Scheme::Uniform, Scheme::Norm];
        cfg.k_values = vec![2];
        cfg.trees = 3;
        cfg.repetitions = 2;
        cfg.epsilon_target = 0.5;
        cfg
    }

    #[test]
    fn one_record_per_tree_per_rep() {
        let mut cfg = small_config();
        cfg.trees = 1;
        let out = run_error_vs_time(&cfg).unwrap();
        // 2 schemes x 1 k x 2 reps x 1 tree.
        assert_eq!(out.records.len(), 4);
    }

    #[test]
    fn cumulative_columns_non_decreasing() {
        let cfg = small_config();
        let out = run_error_vs_time(&cfg).unwrap();
        for chunk in out.records.chunks(cfg.trees) {
            for w in chunk.windows(2) {
                assert!(w[1].cum_time_s >= w[0].cum_time_s);
                assert!(w[1].cum_nodes >= w[0].cum_nodes);
                assert_eq!(w[1].tree_index, w[0].tree_index + 1);
            }
        }
    }

    #[test]
    fn mean_curve_equals_recomputed_mean() {
        let cfg = small_config();
        let out = run_error_vs_time(&cfg).unwrap();
        for point in &out.means {
            let matching: Vec<f64> = out
                .records
                .iter()
                .filter(|r| {
                    r.scheme == point.scheme && r.k == point.k && r.tree_index == point.tree_index
                })
                .map(|r| r.test_error)
                .collect();
            assert_eq!(matching.len(), cfg.repetitions);
            let mean = matching.iter().sum::<f64>() / matching.len() as f64;
            assert!((mean - point.mean_error).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_with_full_k_gives_flat_curve() {
        let mut cfg = small_config();
        cfg.schemes = vec![Scheme::Uniform];
        cfg.k_values = vec![6]; // k = d: identical trees
        cfg.trees = 4;
        cfg.repetitions = 1;
        let out = run_error_vs_time(&cfg).unwrap();
        let first = out.records[0].test_error;
        for r in &out.records {
            assert_eq!(r.test_error, first);
        }
    }

    #[test]
    fn rerun_reproduces_error_and_node_columns() {
        let cfg = small_config();
        let a = run_error_vs_time(&cfg).unwrap();
        let b = run_error_vs_time(&cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.test_error, y.test_error);
            assert_eq!(x.cum_nodes, y.cum_nodes);
            assert_eq!(x.seed, y.seed);
        }
    }

    #[test]
    fn records_recomputable_from_serialized_model_prefix() {
        let cfg = small_config();
        let out = run_error_vs_time(&cfg).unwrap();
        // Rebuild the (uniform, k=2, rep=0) model through serialization and
        // check a record against its prefix error.
        let p = prepare(&cfg).unwrap();
        let seed = rep_seed(cfg.seed, Scheme::Uniform, 2, 0);
        let (model, _) = train_for(&cfg, &p, Scheme::Uniform, 2, seed).unwrap();
        let loaded = EnsembleModel::read_json(model.to_json_string().unwrap().as_bytes()).unwrap();
        let errors = loaded.prefix_errors(p.test.matrix(), p.test.labels());
        for r in out
            .records
            .iter()
            .filter(|r| r.scheme == Scheme::Uniform && r.rep == 0)
        {
            assert_eq!(r.test_error, errors[r.tree_index - 1]);
        }
    }

    #[test]
    fn epsilon_one_stops_after_first_tree() {
        let mut cfg = small_config();
        cfg.epsilon_target = 1.0;
        cfg.repetitions = 1;
        let results = run_nodes_to_epsilon(&cfg).unwrap();
        for r in &results {
            match &r.per_rep[0] {
                NodesOutcome::Reached { trees, nodes, .. } => {
                    assert_eq!(*trees, 1);
                    assert!(*nodes >= 1);
                }
                other => panic!("expected Reached, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_budget_exceeds_immediately() {
        let mut cfg = small_config();
        cfg.time_budget_secs = 0.0;
        cfg.repetitions = 1;
        let results = run_nodes_to_epsilon(&cfg).unwrap();
        for r in &results {
            assert_eq!(r.exceeded_count, 1);
            match &r.per_rep[0] {
                NodesOutcome::ExceededBudget { trees, .. } => assert_eq!(*trees, 0),
                other => panic!("expected ExceededBudget, got {other:?}"),
            }
        }
    }

    #[test]
    fn csv_schema_and_content() {
        let mut cfg = small_config();
        cfg.trees = 2;
        cfg.repetitions = 1;
        let out = run_error_vs_time(&cfg).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,k,rep,tree_index,cum_time_s,test_error,cum_nodes"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("uniform,2,0,1,"), "{first}");
        assert_eq!(text.lines().count(), 1 + out.records.len());
    }

    #[test]
    fn summary_json_has_schema_version() {
        let cfg = small_config();
        let out = run_error_vs_time(&cfg).unwrap();
        let mut buf = Vec::new();
        write_summary_json(&cfg, Some(&out.means), None, 6, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert!(v["curves"].is_array());
        assert!(v["nodes_to_epsilon"].is_null());
    }

    #[test]
    fn default_k_sweep_uses_sqrt_d() {
        let cfg = ExperimentConfig::new(planted_source(50, 30));
        // ceil(sqrt(30)) = 6.
        assert_eq!(cfg.effective_k_values(30), vec![6, 12]);
    }
}
