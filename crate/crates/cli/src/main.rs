//! Command-line interface: feature scoring, ensemble training, prediction,
//! and the benchmark harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 compute error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use less_trees::bench::{
    run_error_vs_time, run_nodes_to_epsilon, write_records_csv, write_summary_json, CurveOutcome,
    DatasetSource, ExperimentConfig, NodesToEpsilon,
};
use less_trees::data::{
    load_csv, load_csv_features, load_libsvm, LabelColumn, LabeledDataset, PlantedConfig,
};
use less_trees::ensemble::{
    rf_candidate_count, train_less, train_rf, EnsembleModel, LessConfig, RfConfig, Scheme,
    DEFAULT_MAX_RANK,
};
use less_trees::matrix::DataMatrix;
use less_trees::scores::SamplingScheme;
use less_trees::tree::TreeParams;
use less_trees::Error;

#[derive(Parser)]
#[command(
    name = "less-trees",
    version,
    about = "Tree ensembles with data-derived feature sampling"
)]
struct Cli {
    /// Worker threads for parallel training (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the feature probability distribution and write it as JSON.
    Scores(ScoresArgs),
    /// Train an ensemble and write the model as JSON.
    Train(TrainArgs),
    /// Predict labels for a dataset with a trained model.
    Predict(PredictArgs),
    /// Run the benchmark harness from a config file.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Input format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// CSV label column: an index or, with --header, a column name.
    #[arg(long)]
    label_col: Option<String>,
    /// The CSV file starts with a header row.
    #[arg(long)]
    header: bool,
    /// CSV field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Libsvm,
}

#[derive(Args)]
struct ScoresArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scoring scheme.
    #[arg(long)]
    scheme: String,
    /// SVD truncation limit for leverage scores.
    #[arg(long, default_value_t = DEFAULT_MAX_RANK)]
    max_rank: usize,
    /// Rescale columns to unit variance before scoring (changes the norm
    /// and leverage distributions).
    #[arg(long)]
    standardize: bool,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Training scheme: uniform | norm | leverage | rf.
    #[arg(long)]
    scheme: String,
    /// Features per tree (default: ceil(sqrt(d))). Ignored by rf.
    #[arg(long)]
    k: Option<usize>,
    /// Number of trees.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_RANK)]
    max_rank: usize,
    /// Minimum samples required to split a node.
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    /// Depth cap (unlimited when omitted).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model JSON.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Write predicted labels here (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if cli.threads > 0 {
            builder = builder.num_threads(cli.threads);
        }
        match builder.build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: cannot build thread pool: {e}");
                return ExitCode::from(3);
            }
        }
    };

    let result = pool.install(|| match &cli.command {
        Command::Scores(args) => cmd_scores(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::InvalidMatrix(_) | Error::Data(_) | Error::Io(_) | Error::Serialization(_) => 2,
        Error::DegenerateMatrix(_) => 3,
    }
}

fn delimiter_byte(args: &DataArgs) -> Result<u8, Error> {
    u8::try_from(args.delimiter).map_err(|_| {
        Error::InvalidConfig(format!("delimiter '{}' is not one byte", args.delimiter))
    })
}

fn load_labeled(args: &DataArgs) -> Result<LabeledDataset, Error> {
    match args.format {
        Format::Csv => {
            let label = args.label_col.as_deref().ok_or_else(|| {
                Error::InvalidConfig("--label-col is required for labeled csv data".into())
            })?;
            let label: LabelColumn = label.parse()?;
            load_csv(&args.data, &label, args.header, delimiter_byte(args)?)
        }
        Format::Libsvm => load_libsvm(&args.data),
    }
}

/// Loads only the feature matrix; a label column is excluded when named but
/// is not required for scoring.
fn load_matrix(args: &DataArgs) -> Result<DataMatrix, Error> {
    match args.format {
        Format::Csv => match &args.label_col {
            Some(label) => {
                let label: LabelColumn = label.parse()?;
                Ok(
                    load_csv(&args.data, &label, args.header, delimiter_byte(args)?)?
                        .matrix()
                        .clone(),
                )
            }
            None => load_csv_features(&args.data, args.header, delimiter_byte(args)?),
        },
        Format::Libsvm => Ok(load_libsvm(&args.data)?.matrix().clone()),
    }
}

fn cmd_scores(args: &ScoresArgs) -> Result<(), Error> {
    let scheme: SamplingScheme = args.scheme.parse()?;
    let mut matrix = load_matrix(&args.data)?;
    if args.standardize {
        matrix = less_trees::data::standardize_columns(&matrix);
    }
    let dist = match scheme {
        SamplingScheme::Uniform => less_trees::scores::uniform_distribution(matrix.n_cols()),
        SamplingScheme::Norm => less_trees::scores::norm_distribution(&matrix)?,
        SamplingScheme::Leverage => {
            less_trees::scores::leverage_distribution(&matrix, args.max_rank)?
        }
    };
    let payload = serde_json::json!({
        "schema_version": 1,
        "scheme": scheme.to_string(),
        "d": dist.len(),
        "effective_rank": dist.effective_rank(),
        "probs": dist.probs(),
    });
    write_json_out(&payload, args.out.as_deref())
}

fn write_json_out(payload: &serde_json::Value, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, payload)?;
            w.flush()?;
        }
        None => {
            println!("{}", serde_json::to_string_pretty(payload)?);
        }
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Error> {
    let scheme: Scheme = args.scheme.parse()?;
    let ds = load_labeled(&args.data)?;
    let d = ds.n_features();
    let tree_params = TreeParams {
        min_samples_split: args.min_split,
        max_depth: args.max_depth,
    };
    let start = std::time::Instant::now();
    let mut model = match scheme.sampling() {
        Some(sampling) => {
            let k = args.k.unwrap_or_else(|| rf_candidate_count(d).min(d));
            let cfg = LessConfig {
                scheme: sampling,
                k,
                trees: args.trees,
                max_rank: args.max_rank,
                tree_params,
                seed: args.seed,
            };
            train_less(ds.matrix(), ds.labels(), ds.n_classes(), &cfg)?
        }
        None => {
            if args.k.is_some() {
                eprintln!("warning: --k is ignored by scheme rf (per-node candidate count is ceil(sqrt(d)))");
            }
            let cfg = RfConfig {
                trees: args.trees,
                tree_params,
                seed: args.seed,
            };
            train_rf(ds.matrix(), ds.labels(), ds.n_classes(), &cfg)?
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    model.set_class_names(ds.class_names().to_vec())?;
    let mut w = BufWriter::new(File::create(&args.out)?);
    model.write_json(&mut w)?;
    w.flush()?;
    println!(
        "trained {} trees (scheme {}, k {}) in {:.3} s; total nodes {}; training error {:.4}",
        model.tree_count(),
        model.scheme(),
        model.k(),
        elapsed,
        model.total_node_count(),
        model.classification_error(ds.matrix(), ds.labels())
    );
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), Error> {
    let model = EnsembleModel::read_json(BufReader::new(File::open(&args.model)?))?;
    let (matrix, labels): (DataMatrix, Option<Vec<usize>>) = match args.data.format {
        Format::Csv => match &args.data.label_col {
            Some(label) => {
                let label: LabelColumn = label.parse()?;
                let ds = load_csv(
                    &args.data.data,
                    &label,
                    args.data.header,
                    delimiter_byte(&args.data)?,
                )?;
                let remapped = remap_labels(&model, &ds)?;
                (ds.matrix().clone(), Some(remapped))
            }
            None => (
                load_csv_features(
                    &args.data.data,
                    args.data.header,
                    delimiter_byte(&args.data)?,
                )?,
                None,
            ),
        },
        Format::Libsvm => {
            let ds = load_libsvm(&args.data.data)?;
            let remapped = remap_labels(&model, &ds)?;
            (ds.matrix().clone(), Some(remapped))
        }
    };
    if matrix.n_cols() != model.n_features() {
        return Err(Error::Data(format!(
            "feature-count mismatch: model expects {} features, dataset has {}",
            model.n_features(),
            matrix.n_cols()
        )));
    }
    let predictions: Vec<usize> = (0..matrix.n_rows())
        .map(|i| model.predict_majority(matrix.row(i)))
        .collect();

    let decoded = predictions
        .iter()
        .map(|&p| model.class_names()[p].as_str())
        .collect::<Vec<_>>()
        .join("\n");
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "{decoded}")?;
            w.flush()?;
        }
        None => println!("{decoded}"),
    }
    if let Some(true_labels) = labels {
        let wrong = predictions
            .iter()
            .zip(&true_labels)
            .filter(|(p, t)| p != t)
            .count();
        println!(
            "classification_error: {}",
            wrong as f64 / true_labels.len() as f64
        );
    }
    Ok(())
}

/// Re-encodes the dataset's labels in the model's class-id space; the two
/// encodings can differ when the prediction set misses classes.
fn remap_labels(model: &EnsembleModel, ds: &LabeledDataset) -> Result<Vec<usize>, Error> {
    let to_model_id: Vec<usize> = ds
        .class_names()
        .iter()
        .map(|name| {
            model
                .class_names()
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| {
                    Error::Data(format!(
                        "dataset label '{name}' is not among the model's classes"
                    ))
                })
        })
        .collect::<Result<_, _>>()?;
    Ok(ds.labels().iter().map(|&l| to_model_id[l]).collect())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let (mut cfg, mut run) = parse_bench_config(&args.config)?;
    if let Some(out) = &args.out {
        run.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trees) = args.trees {
        cfg.trees = trees;
    }
    if let Some(reps) = args.repetitions {
        cfg.repetitions = reps;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&run.out_dir)?;

    let d = cfg.source.load()?.n_features();
    let mut curves: Option<CurveOutcome> = None;
    let mut nodes: Option<Vec<NodesToEpsilon>> = None;
    let mut failure: Option<String> = None;

    if run.families.iter().any(|f| f.is_curve()) {
        match run_error_vs_time(&cfg) {
            Ok(out) => curves = Some(out),
            Err(e) => failure = Some(format!("curves: {e}")),
        }
    }
    if failure.is_none() && run.families.contains(&Family::NodesToEpsilon) {
        match run_nodes_to_epsilon(&cfg) {
            Ok(out) => nodes = Some(out),
            Err(e) => failure = Some(format!("nodes_to_epsilon: {e}")),
        }
    }

    if let Some(out) = &curves {
        let mut w = BufWriter::new(File::create(run.out_dir.join("curves.csv"))?);
        write_records_csv(&out.records, &mut w)?;
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(File::create(run.out_dir.join("summary.json"))?);
        write_summary_json(
            &cfg,
            curves.as_ref().map(|c| c.means.as_slice()),
            nodes.as_deref(),
            d,
            &mut w,
        )?;
        w.flush()?;
    }
    if run.save_models {
        save_models(&cfg, &run.out_dir)?;
    }
    if let Some(msg) = failure {
        // Keep whatever was produced and leave a machine-readable trace.
        let manifest = serde_json::json!({ "failed": true, "error": msg });
        let mut w = BufWriter::new(File::create(run.out_dir.join("failure_manifest.json"))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.flush()?;
        return Err(Error::Data(msg));
    }
    println!("bench complete: artifacts in {}", run.out_dir.display());
    Ok(())
}

/// Retrains and serializes the per-repetition models (same split, same rep
/// seeds) so every recorded error can be recomputed from a model prefix.
fn save_models(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), Error> {
    use less_trees::bench::{experiment_split, rep_seed};

    let models_dir = out_dir.join("models");
    std::fs::create_dir_all(&models_dir)?;
    let (train, _test) = experiment_split(cfg)?;
    let d = train.n_features();
    let ks = cfg.effective_k_values(d);
    for &scheme in &cfg.schemes {
        let scheme_ks: Vec<usize> = if scheme == Scheme::Rf {
            vec![rf_candidate_count(d)]
        } else {
            ks.clone()
        };
        for &k in &scheme_ks {
            for rep in 0..cfg.repetitions {
                let seed = rep_seed(cfg.seed, scheme, k, rep);
                let mut model = match scheme.sampling() {
                    Some(sampling) => train_less(
                        train.matrix(),
                        train.labels(),
                        train.n_classes(),
                        &LessConfig {
                            scheme: sampling,
                            k,
                            trees: cfg.trees,
                            max_rank: cfg.max_rank,
                            tree_params: cfg.tree_params.clone(),
                            seed,
                        },
                    )?,
                    None => train_rf(
                        train.matrix(),
                        train.labels(),
                        train.n_classes(),
                        &RfConfig {
                            trees: cfg.trees,
                            tree_params: cfg.tree_params.clone(),
                            seed,
                        },
                    )?,
                };
                model.set_class_names(train.class_names().to_vec())?;
                let path = models_dir.join(format!("{scheme}_k{k}_rep{rep}.json"));
                let mut w = BufWriter::new(File::create(path)?);
                model.write_json(&mut w)?;
                w.flush()?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Family {
    ErrorVsTime,
    ErrorVsTrees,
    NodesToEpsilon,
}

impl Family {
    fn is_curve(&self) -> bool {
        matches!(self, Family::ErrorVsTime | Family::ErrorVsTrees)
    }
}

struct RunOptions {
    out_dir: PathBuf,
    families: Vec<Family>,
    save_models: bool,
}

/// Parses the flat `key = value` experiment manifest.
fn parse_bench_config(path: &Path) -> Result<(ExperimentConfig, RunOptions), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut kv = std::collections::BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Data(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                idx + 1
            ))
        })?;
        kv.insert(key.trim().to_string(), value.trim().to_string());
    }

    let get = |key: &str| kv.get(key).map(String::as_str);
    let parse_usize = |key: &str| -> Result<Option<usize>, Error> {
        get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad integer for '{key}': {v}")))
            })
            .transpose()
    };
    let parse_f64 = |key: &str| -> Result<Option<f64>, Error> {
        get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad number for '{key}': {v}")))
            })
            .transpose()
    };
    let parse_bool = |key: &str| -> Result<Option<bool>, Error> {
        get(key)
            .map(|v| {
                v.parse::<bool>()
                    .map_err(|_| Error::Data(format!("bad boolean for '{key}': {v}")))
            })
            .transpose()
    };

    let source = match get("data") {
        None => return Err(Error::Data("config is missing 'data'".into())),
        Some("planted") => DatasetSource::Planted(PlantedConfig {
            n_samples: parse_usize("planted_n")?.unwrap_or(2000),
            n_features: parse_usize("planted_d")?.unwrap_or(500),
            n_informative: parse_usize("planted_informative")?.unwrap_or(20),
            class_count: parse_usize("planted_classes")?.unwrap_or(2),
            noise_scale: parse_f64("planted_noise")?.unwrap_or(0.0),
            seed: parse_usize("planted_seed")?.unwrap_or(1) as u64,
        }),
        Some(p) => {
            let path = PathBuf::from(p);
            match get("format").unwrap_or("csv") {
                "libsvm" => DatasetSource::LibsvmFile { path },
                "csv" => DatasetSource::CsvFile {
                    path,
                    label_col: get("label_col").unwrap_or("0").parse()?,
                    has_header: parse_bool("has_header")?.unwrap_or(false),
                    delimiter: {
                        let d = get("delimiter").unwrap_or(",");
                        if d.len() != 1 {
                            return Err(Error::Data(format!("bad delimiter '{d}'")));
                        }
                        d.as_bytes()[0]
                    },
                },
                other => return Err(Error::Data(format!("unknown format '{other}'"))),
            }
        }
    };

    let mut cfg = ExperimentConfig::new(source);
    if let Some(s) = get("schemes") {
        cfg.schemes = s
            .split(',')
            .map(|t| t.trim().parse::<Scheme>())
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(s) = get("k") {
        cfg.k_values = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad k value: {t}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(v) = parse_usize("trees")? {
        cfg.trees = v;
    }
    if let Some(v) = parse_usize("repetitions")? {
        cfg.repetitions = v;
    }
    if let Some(v) = parse_f64("epsilon")? {
        cfg.epsilon_target = v;
    }
    if let Some(v) = parse_f64("time_budget_secs")? {
        cfg.time_budget_secs = v;
    }
    if let Some(v) = parse_usize("seed")? {
        cfg.seed = v as u64;
    }
    if let Some(v) = parse_f64("test_fraction")? {
        cfg.test_fraction = v;
    }
    if let Some(v) = parse_usize("max_rank")? {
        cfg.max_rank = v;
    }
    if let Some(v) = parse_usize("min_split")? {
        cfg.tree_params.min_samples_split = v;
    }
    if let Some(v) = parse_usize("max_depth")? {
        cfg.tree_params.max_depth = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = parse_bool("include_scores_time")? {
        cfg.include_scores_time = v;
    }

    let families = match get("families") {
        None => vec![
            Family::ErrorVsTime,
            Family::ErrorVsTrees,
            Family::NodesToEpsilon,
        ],
        Some(s) => s
            .split(',')
            .map(|t| match t.trim() {
                "error_vs_time" => Ok(Family::ErrorVsTime),
                "error_vs_trees" => Ok(Family::ErrorVsTrees),
                "nodes_to_epsilon" => Ok(Family::NodesToEpsilon),
                other => Err(Error::Data(format!("unknown family '{other}'"))),
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let run = RunOptions {
        out_dir: PathBuf::from(get("out").unwrap_or("bench-out")),
        families,
        save_models: parse_bool("save_models")?.unwrap_or(false),
    };
    Ok((cfg, run))
}
