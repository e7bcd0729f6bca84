//! Dataset loading (CSV and LIBSVM text), label encoding, seeded train/test
//! splitting, and the planted synthetic generator used for desk-scale
//! benchmarking.
//!
//! Labels are arbitrary strings, encoded to contiguous ids 0..C-1 under the
//! global class ordering: numeric order when every distinct label parses as
//! a number, lexicographic order otherwise. The encoding table travels with
//! the dataset so predictions decode back to the original vocabulary.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::sampling::SeededRng;
use crate::tree::ClassId;

/// Scale factor applied to the informative columns of planted datasets;
/// their squared column norms are about `PLANTED_AMPLITUDE^2` times a noise
/// column's.
pub const PLANTED_AMPLITUDE: f64 = 12.0;
/// Within-cluster spread of the informative columns relative to the
/// amplitude.
pub const PLANTED_CLUSTER_SPREAD: f64 = 0.2;

/// A feature matrix with encoded labels and the label decoding table.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    matrix: DataMatrix,
    labels: Vec<ClassId>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Encodes raw string labels under the global class ordering.
    pub fn new(matrix: DataMatrix, raw_labels: Vec<String>) -> Result<Self> {
        if raw_labels.len() != matrix.n_rows() {
            return Err(Error::Data(format!(
                "{} labels for {} rows",
                raw_labels.len(),
                matrix.n_rows()
            )));
        }
        let mut class_names: Vec<String> = raw_labels.clone();
        class_names.sort();
        class_names.dedup();
        // Numeric order when every label parses; (value, string) keeps
        // distinct spellings of the same number deterministic.
        let numeric: Option<Vec<f64>> = class_names
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| !v.is_nan()))
            .collect();
        if let Some(values) = numeric {
            let mut order: Vec<usize> = (0..class_names.len()).collect();
            order.sort_by(|&i, &j| {
                values[i]
                    .partial_cmp(&values[j])
                    .unwrap()
                    .then_with(|| class_names[i].cmp(&class_names[j]))
            });
            class_names = order.iter().map(|&i| class_names[i].clone()).collect();
        }
        let labels = raw_labels
            .iter()
            .map(|l| class_names.iter().position(|c| c == l).unwrap())
            .collect();
        Ok(Self {
            matrix,
            labels,
            class_names,
        })
    }

    /// Builds a dataset from already-encoded labels and their decode table.
    pub fn from_encoded(
        matrix: DataMatrix,
        labels: Vec<ClassId>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != matrix.n_rows() {
            return Err(Error::Data(format!(
                "{} labels for {} rows",
                labels.len(),
                matrix.n_rows()
            )));
        }
        if labels.iter().any(|&l| l >= class_names.len()) {
            return Err(Error::Data("label id outside the class table".into()));
        }
        Ok(Self {
            matrix,
            labels,
            class_names,
        })
    }

    pub fn matrix(&self) -> &DataMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn decode(&self, id: ClassId) -> &str {
        &self.class_names[id]
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(i) = s.parse::<usize>() {
            Ok(LabelColumn::Index(i))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

/// Loads a delimited text file; every non-label cell must parse as a finite
/// real. Errors name the offending data row (1-based, header excluded) and
/// column.
pub fn load_csv(
    path: &Path,
    label_col: &LabelColumn,
    has_header: bool,
    delimiter: u8,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let label_index = match label_col {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::Data(
                    "label column named but the file has no header".into(),
                ));
            }
            let headers = reader
                .headers()
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("label column '{name}' not in header")))?
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", row_idx + 1)))?;
        if label_index >= record.len() {
            return Err(Error::Data(format!(
                "row {}: label column {} out of range (width {})",
                row_idx + 1,
                label_index,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (col_idx, cell) in record.iter().enumerate() {
            if col_idx == label_index {
                labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "row {}, column {}: cannot parse '{cell}' as a number",
                    row_idx + 1,
                    col_idx + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "row {}, column {}: non-finite value '{cell}'",
                    row_idx + 1,
                    col_idx + 1
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    let matrix = DataMatrix::from_rows(&rows)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    LabeledDataset::new(matrix, labels)
}

/// Loads a delimited text file with no label column (prediction input).
pub fn load_csv_features(path: &Path, has_header: bool, delimiter: u8) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", row_idx + 1)))?;
        let mut row = Vec::with_capacity(record.len());
        for (col_idx, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "row {}, column {}: cannot parse '{cell}' as a number",
                    row_idx + 1,
                    col_idx + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "row {}, column {}: non-finite value '{cell}'",
                    row_idx + 1,
                    col_idx + 1
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    DataMatrix::from_rows(&rows).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Loads LIBSVM sparse text: one `label idx:val ...` line per sample with
/// strictly increasing 1-based indices; absent entries are zero and the
/// feature count is the largest index seen.
pub fn load_libsvm(path: &Path) -> Result<LabeledDataset> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut d = 0usize;
    for (line_idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens
            .next()
            .expect("non-empty line has a first token")
            .to_string();
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for token in tokens {
            let (idx_str, val_str) = token.split_once(':').ok_or_else(|| {
                Error::Data(format!(
                    "line {}: malformed token '{token}' (expected index:value)",
                    line_idx + 1
                ))
            })?;
            let index: usize = idx_str.parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: bad feature index '{idx_str}'",
                    line_idx + 1
                ))
            })?;
            if index == 0 {
                return Err(Error::Data(format!(
                    "line {}: feature indices are 1-based",
                    line_idx + 1
                )));
            }
            if index <= prev_index {
                return Err(Error::Data(format!(
                    "line {}: feature index {index} does not increase past {prev_index}",
                    line_idx + 1
                )));
            }
            let value: f64 = val_str.parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: bad feature value '{val_str}'",
                    line_idx + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "line {}: non-finite value '{val_str}'",
                    line_idx + 1
                )));
            }
            prev_index = index;
            entries.push((index, value));
        }
        d = d.max(prev_index);
        sparse_rows.push(entries);
        labels.push(label);
    }
    if sparse_rows.is_empty() || d == 0 {
        return Err(Error::Data(format!(
            "{}: no samples with features",
            path.display()
        )));
    }
    let mut values = vec![0.0; sparse_rows.len() * d];
    for (i, entries) in sparse_rows.iter().enumerate() {
        for &(idx, v) in entries {
            values[i * d + (idx - 1)] = v;
        }
    }
    let matrix = DataMatrix::from_vec(sparse_rows.len(), d, values)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    LabeledDataset::new(matrix, labels)
}

/// Seeded shuffle-then-partition split. The test part takes the first
/// `round(n * test_fraction)` shuffled rows; both parts share the label
/// encoding.
pub fn train_test_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.n_samples();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::InvalidConfig(format!(
            "split of {n} samples at fraction {test_fraction} leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);

    let build = |indices: &[usize]| -> Result<LabeledDataset> {
        let rows: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| ds.matrix().row(i).to_vec())
            .collect();
        let labels: Vec<ClassId> = indices.iter().map(|&i| ds.labels()[i]).collect();
        LabeledDataset::from_encoded(
            DataMatrix::from_rows(&rows)?,
            labels,
            ds.class_names().to_vec(),
        )
    };
    let test = build(&order[..n_test])?;
    let train = build(&order[n_test..])?;
    Ok((train, test))
}

/// Rescales every column to unit variance (population variance; constant
/// columns are left untouched). Off by default everywhere: rescaling changes
/// the squared column norms and the singular directions, and with them the
/// norm and leverage distributions.
pub fn standardize_columns(m: &DataMatrix) -> DataMatrix {
    let n = m.n_rows();
    let d = m.n_cols();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (acc, &v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    for acc in mean.iter_mut() {
        *acc /= n as f64;
    }
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((acc, &v), &mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|&v| {
            let sd = (v / n as f64).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                1.0
            }
        })
        .collect();
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        values.extend(m.row(i).iter().zip(&scale).map(|(&v, &s)| v * s));
    }
    DataMatrix::from_vec(n, d, values).expect("scaling preserves validity")
}

/// Parameters for the planted synthetic generator.
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub n_samples: usize,
    pub n_features: usize,
    /// Number of amplified columns carrying the label signal; they occupy
    /// the first `n_informative` column positions.
    pub n_informative: usize,
    pub class_count: usize,
    /// Probability of replacing a label with a uniformly random class.
    pub noise_scale: f64,
    pub seed: u64,
}

/// Synthetic nonlinear benchmark data.
///
/// Each sample hides `m` latent sign bits, `m = min(n_informative,
/// max(2, class_count - 1))`; the label is `(sum of bits) mod class_count`,
/// which for two classes is the XOR of the bit signs. Informative column j
/// expresses bit j for `j < m` and bit m-1 (sign-alternated) otherwise, as
/// `PLANTED_AMPLITUDE * (sign + PLANTED_CLUSTER_SPREAD * gaussian)`; the
/// remaining columns are unit gaussian noise. No single bit predicts the
/// label, so a learner must combine features, and the amplified norms let
/// norm- and leverage-based selection find the informative block.
pub fn make_planted_dataset(cfg: &PlantedConfig) -> Result<LabeledDataset> {
    if cfg.n_samples == 0 || cfg.n_features == 0 {
        return Err(Error::InvalidConfig("empty planted dataset".into()));
    }
    if cfg.n_informative > cfg.n_features {
        return Err(Error::InvalidConfig(format!(
            "n_informative = {} exceeds n_features = {}",
            cfg.n_informative, cfg.n_features
        )));
    }
    if cfg.class_count < 2 {
        return Err(Error::InvalidConfig("class_count must be >= 2".into()));
    }
    if !(0.0..1.0).contains(&cfg.noise_scale) {
        return Err(Error::InvalidConfig(format!(
            "noise_scale must lie in [0, 1), got {}",
            cfg.noise_scale
        )));
    }
    let m = cfg.n_informative.min((cfg.class_count - 1).max(2));
    let mut rng = SeededRng::new(cfg.seed);
    let mut values = Vec::with_capacity(cfg.n_samples * cfg.n_features);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let bits: Vec<u64> = (0..m).map(|_| rng.next_below(2) as u64).collect();
        let mut label = if m == 0 {
            rng.next_below(cfg.class_count)
        } else {
            (bits.iter().sum::<u64>() as usize) % cfg.class_count
        };
        if cfg.noise_scale > 0.0 && rng.next_f64() < cfg.noise_scale {
            label = rng.next_below(cfg.class_count);
        }
        for j in 0..cfg.n_features {
            if j < cfg.n_informative {
                let bit = if j < m { j } else { m - 1 };
                let sign_flip = if j < m || (j - m).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                let sign = if bits[bit] == 1 { 1.0 } else { -1.0 };
                values.push(
                    PLANTED_AMPLITUDE
                        * (sign_flip * sign + PLANTED_CLUSTER_SPREAD * rng.next_gaussian()),
                );
            } else {
                values.push(rng.next_gaussian());
            }
        }
        labels.push(label.to_string());
    }
    let matrix = DataMatrix::from_vec(cfg.n_samples, cfg.n_features, values)?;
    LabeledDataset::new(matrix, labels)
}
