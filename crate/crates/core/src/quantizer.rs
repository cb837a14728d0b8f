//! Discriminative quantization: raw feature values to a small token alphabet.
//!
//! Each sample is scored against every class with a Fisher-style ratio,
//! the scores are normalized into a distribution over classes, and the score
//! at the sample's own class (its prior) is binned into one of `T` equal-width
//! intervals of `[0, 1]`. Token `1` marks a poorly represented sample and
//! token `T` a well represented one.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassStats, FeatureMatrix};
use crate::error::{Error, Result};

/// Added to the summed class variances so zero-variance features stay finite.
pub const VARIANCE_EPSILON: f64 = 1e-12;

/// Slack allowed outside `[0, 1]` before [`tokenize`] rejects a prior.
pub const RANGE_SLACK: f64 = 1e-12;

pub const DEFAULT_TOKENS: usize = 6;

/// How a sample is scored against a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiMode {
    /// Score of class `k` is the squared distance to the *other* class means,
    /// so a well separated sample scores high at its own class.
    #[default]
    Prose,
    /// Score of class `k` is the squared distance to `mu_k` itself.
    Literal,
}

impl fmt::Display for PhiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhiMode::Prose => "prose",
            PhiMode::Literal => "literal",
        })
    }
}

impl FromStr for PhiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prose" => Ok(PhiMode::Prose),
            "literal" => Ok(PhiMode::Literal),
            other => Err(Error::InvalidParameter(format!("unknown phi mode '{other}'"))),
        }
    }
}

/// Normalized class scores of every sample of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiScores {
    /// `m x K`, each row a distribution over classes.
    pub phi: Array2<f64>,
    /// Row sum of the unnormalized scores; `0` where the uniform fallback applied.
    pub normalizer: Array1<f64>,
}

/// Scores one feature column against the class means `mu` (length `K`).
pub fn phi_scores(
    column: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    sigma_sq_sum: f64,
    mode: PhiMode,
) -> PhiScores {
    let m = column.len();
    let k = mu.len();
    let denom = sigma_sq_sum + VARIANCE_EPSILON;
    let mut phi = Array2::zeros((m, k));
    let mut normalizer = Array1::zeros(m);

    let mut dist = vec![0.0; k];
    for (s, &x) in column.iter().enumerate() {
        for (d, &mean) in dist.iter_mut().zip(mu.iter()) {
            let diff = x - mean;
            *d = diff * diff / denom;
        }
        let mut row = phi.row_mut(s);
        match mode {
            PhiMode::Literal => {
                for (cell, &d) in row.iter_mut().zip(&dist) {
                    *cell = d;
                }
            }
            PhiMode::Prose => {
                for (c, cell) in row.iter_mut().enumerate() {
                    *cell = dist
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != c)
                        .map(|(_, &d)| d)
                        .sum();
                }
            }
        }
        let z: f64 = row.sum();
        if z > 0.0 && z.is_finite() {
            row.mapv_inplace(|v| v / z);
            normalizer[s] = z;
        } else {
            row.fill(1.0 / k as f64);
        }
    }
    PhiScores { phi, normalizer }
}

/// Each sample's score at its own class column.
pub fn priors(phi: &PhiScores, labels: &[usize]) -> Result<Array1<f64>> {
    if labels.len() != phi.phi.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} score rows",
            labels.len(),
            phi.phi.nrows()
        )));
    }
    labels
        .iter()
        .enumerate()
        .map(|(s, &label)| {
            phi.phi.get((s, label)).copied().ok_or_else(|| {
                Error::ShapeMismatch(format!("label {label} outside {} classes", phi.phi.ncols()))
            })
        })
        .collect()
}

/// Bins priors in `[0, 1]` into tokens `1..=n_tokens`.
///
/// Token `t < T` covers `[(t-1)/T, t/T)`; the last token covers `[(T-1)/T, 1]`.
pub fn tokenize(pi: ArrayView1<'_, f64>, n_tokens: usize) -> Result<Array1<u32>> {
    if n_tokens < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 tokens, got {n_tokens}"
        )));
    }
    pi.iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(value >= -RANGE_SLACK && value <= 1.0 + RANGE_SLACK) {
                return Err(Error::OutOfRange { index, value });
            }
            let clamped = value.clamp(0.0, 1.0);
            let bin = (clamped * n_tokens as f64).floor() as usize;
            Ok(bin.min(n_tokens - 1) as u32 + 1)
        })
        .collect()
}

/// Token descriptors of every feature plus per-feature token counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedFeatures {
    /// `n x m`, entries in `1..=n_tokens`.
    pub tokens: Array2<u32>,
    /// `n x n_tokens`; `counts[[f, t - 1]]` is how often token `t` occurs in feature `f`.
    pub counts: Array2<u64>,
    pub n_tokens: usize,
}

impl TokenizedFeatures {
    /// Count table as reals, the form the latent model consumes.
    pub fn count_table(&self) -> Array2<f64> {
        self.counts.mapv(|c| c as f64)
    }

    pub fn n_features(&self) -> usize {
        self.tokens.nrows()
    }
}

/// Tokens of a single feature column.
pub fn quantize_feature(
    column: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    sigma_sq_sum: f64,
    labels: &[usize],
    n_tokens: usize,
    mode: PhiMode,
) -> Result<Array1<u32>> {
    let phi = phi_scores(column, mu, sigma_sq_sum, mode);
    let pi = priors(&phi, labels)?;
    tokenize(pi.view(), n_tokens)
}

/// Quantizes every feature of `data`.
pub fn quantize_all(data: &FeatureMatrix, n_tokens: usize, mode: PhiMode) -> Result<TokenizedFeatures> {
    if n_tokens < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 tokens, got {n_tokens}"
        )));
    }
    let stats = ClassStats::compute(data);
    let n = data.n_features();
    let m = data.n_samples();
    let mut tokens = Array2::zeros((n, m));
    let mut counts = Array2::zeros((n, n_tokens));

    for j in 0..n {
        let row = quantize_feature(
            data.feature(j),
            stats.mu.column(j),
            stats.sigma_sq_sum[j],
            data.labels(),
            n_tokens,
            mode,
        )?;
        for &t in &row {
            counts[[j, t as usize - 1]] += 1;
        }
        tokens.row_mut(j).assign(&row);
    }
    Ok(TokenizedFeatures {
        tokens,
        counts,
        n_tokens,
    })
}
