//! Feature-importance probability distributions that drive per-tree column
//! sampling: uniform, squared-column-norm, and statistical leverage scores
//! (row norms of the top right singular vectors from the truncated SVD).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{column_squared_norms, truncated_svd, DataMatrix, DEFAULT_RANK_TOL};

/// How the per-feature probabilities were derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    Uniform,
    Norm,
    Leverage,
}

impl std::fmt::Display for SamplingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SamplingScheme::Uniform => "uniform",
            SamplingScheme::Norm => "norm",
            SamplingScheme::Leverage => "leverage",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SamplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplingScheme::Uniform),
            "norm" => Ok(SamplingScheme::Norm),
            "leverage" => Ok(SamplingScheme::Leverage),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling scheme '{other}' (expected uniform|norm|leverage)"
            ))),
        }
    }
}

/// Probability vector over the d features. Non-negative, sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDistribution {
    probs: Vec<f64>,
    scheme: SamplingScheme,
    effective_rank: Option<usize>,
}

impl FeatureDistribution {
    /// Normalizes arbitrary non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>, scheme: SamplingScheme) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateMatrix("all weights are zero".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            probs,
            scheme,
            effective_rank: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    /// Truncation rank actually used, for leverage distributions.
    pub fn effective_rank(&self) -> Option<usize> {
        self.effective_rank
    }
}

/// Every feature equally likely: 1/d each.
pub fn uniform_distribution(d: usize) -> FeatureDistribution {
    assert!(d >= 1, "uniform_distribution requires d >= 1");
    FeatureDistribution {
        probs: vec![1.0 / d as f64; d],
        scheme: SamplingScheme::Uniform,
        effective_rank: None,
    }
}

/// Feature j with probability proportional to its squared column norm.
/// Zero columns get probability exactly 0. Fails on an all-zero matrix.
pub fn norm_distribution(a: &DataMatrix) -> Result<FeatureDistribution> {
    let norms = column_squared_norms(a);
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateMatrix(
            "all columns are zero; substitute the uniform distribution".into(),
        ));
    }
    Ok(FeatureDistribution {
        probs: norms.iter().map(|n| n / total).collect(),
        scheme: SamplingScheme::Norm,
        effective_rank: None,
    })
}

/// Normalized statistical leverage scores over the columns:
/// pi_j = (1/r) * sum over the top r right singular vectors of v_i(j)^2,
/// where r is the effective rank of the truncated SVD (the numerical rank
/// when it is below `max_rank`). Fails on an all-zero matrix.
pub fn leverage_distribution(a: &DataMatrix, max_rank: usize) -> Result<FeatureDistribution> {
    let factors = truncated_svd(a, max_rank, DEFAULT_RANK_TOL)?;
    let r = factors.rank();
    let d = a.n_cols();
    let mut probs = vec![0.0; d];
    for v in factors.right_vectors() {
        for (p, &vj) in probs.iter_mut().zip(v) {
            *p += vj * vj;
        }
    }
    let total: f64 = probs.iter().sum(); // equals r up to rounding
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(FeatureDistribution {
        probs,
        scheme: SamplingScheme::Leverage,
        effective_rank: Some(r),
    })
}
