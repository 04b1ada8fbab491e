//! Entropy weight method: from a raw evaluation matrix to normalized,
//! optionally expert-combined indicator weights.
//!
//! The chain is share matrix -> per-index entropies -> entropy weights,
//! with an optional prior-combination step. All functions are pure.

use crate::model::{EvaluationMatrix, ModelError, WeightVector, NORMALIZATION_TOL};
use crate::warnings::Warning;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Looser than `NORMALIZATION_TOL`: inputs within this of 1 are accepted
/// as probability vectors, tighter deviations are tolerated silently.
const PROBABILITY_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightsError {
    #[error("probabilities sum to {sum}, expected 1 within {PROBABILITY_SUM_TOL}")]
    NotNormalized { sum: f64 },
    #[error("probability {value} at index {index} is negative or non-finite")]
    InvalidProbability { index: usize, value: f64 },
    #[error("column {col} is all zeros; its weight is undefined")]
    AllZeroColumn { col: usize },
    #[error("a single-row matrix has no entropy scale (need at least 2 states)")]
    SingleRow,
    #[error("entropy {value} at index {index} is outside [0, 1]")]
    EntropyOutOfRange { index: usize, value: f64 },
    #[error("every index is at maximal entropy; weights are undefined (uniform fallback available)")]
    AllMaxEntropy,
    #[error("length mismatch: {left} weights vs {right} priors")]
    LengthMismatch { left: usize, right: usize },
    #[error("prior {value} at index {index} is negative or non-finite")]
    InvalidPrior { index: usize, value: f64 },
    #[error("priors and weights have no overlapping mass")]
    ZeroOverlap,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything the entropy chain produces for one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Column-stochastic share matrix p_ik.
    pub shares: EvaluationMatrix,
    /// Per-index entropies s_k, each in [0, 1].
    pub entropies: Vec<f64>,
    /// Entropy weights w_k.
    pub weights: WeightVector,
    /// Prior-combined weights, present when a prior was supplied.
    pub combined: Option<WeightVector>,
}

impl EntropyReport {
    /// The weights downstream stages should use: combined when present.
    pub fn effective_weights(&self) -> &WeightVector {
        self.combined.as_ref().unwrap_or(&self.weights)
    }
}

/// Shannon entropy of a probability vector, natural log, with the
/// convention 0 ln 0 = 0.
pub fn system_entropy(probs: &[f64]) -> Result<f64, WeightsError> {
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(WeightsError::InvalidProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(WeightsError::NotNormalized { sum });
    }
    Ok(probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}

/// Divides each entry by its column sum: p_ik = r_ik / sum_i r_ik.
pub fn column_shares(matrix: &EvaluationMatrix) -> Result<EvaluationMatrix, WeightsError> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let mut sums = vec![0.0; cols];
    for k in 0..cols {
        sums[k] = matrix.column(k).sum();
        if sums[k] <= 0.0 {
            return Err(WeightsError::AllZeroColumn { col: k });
        }
    }
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for k in 0..cols {
            data.push(matrix.get(i, k) / sums[k]);
        }
    }
    Ok(EvaluationMatrix::from_parts(rows, cols, data))
}

/// Per-index entropies s_k = -g * sum_i p_ik ln p_ik with g = 1 / ln M.
/// Requires at least two rows; g is singular at M = 1.
pub fn index_entropies(shares: &EvaluationMatrix) -> Result<Vec<f64>, WeightsError> {
    let rows = shares.rows();
    if rows < 2 {
        return Err(WeightsError::SingleRow);
    }
    let g = 1.0 / (rows as f64).ln();
    let mut out = Vec::with_capacity(shares.cols());
    for k in 0..shares.cols() {
        let h: f64 = shares.column(k).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum();
        // Guard the top end against round-off: h <= ln M analytically, and
        // a uniform column must register as exactly maximal entropy.
        let mut s = (g * h).min(1.0);
        if 1.0 - s < 1e-12 {
            s = 1.0;
        }
        out.push(s);
    }
    Ok(out)
}

/// Entropy weights w_k = (1 - s_k) / sum_k (1 - s_k).
pub fn entropy_weights(entropies: &[f64]) -> Result<WeightVector, WeightsError> {
    for (index, &value) in entropies.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(WeightsError::EntropyOutOfRange { index, value });
        }
    }
    let denom: f64 = entropies.iter().map(|s| 1.0 - s).sum();
    if denom <= 0.0 {
        return Err(WeightsError::AllMaxEntropy);
    }
    let weights = entropies.iter().map(|s| (1.0 - s) / denom).collect();
    Ok(WeightVector::normalizing(weights)?.0)
}

/// Combines entropy weights with expert priors: d_k = g_k w_k / sum g_k w_k.
pub fn combine_with_prior(
    weights: &WeightVector,
    prior: &[f64],
) -> Result<WeightVector, WeightsError> {
    if weights.len() != prior.len() {
        return Err(WeightsError::LengthMismatch { left: weights.len(), right: prior.len() });
    }
    for (index, &value) in prior.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(WeightsError::InvalidPrior { index, value });
        }
    }
    let products: Vec<f64> = weights.iter().zip(prior).map(|(w, g)| g * w).collect();
    let denom: f64 = products.iter().sum();
    if denom <= 0.0 {
        return Err(WeightsError::ZeroOverlap);
    }
    let combined = products.iter().map(|p| p / denom).collect();
    Ok(WeightVector::normalizing(combined)?.0)
}

/// Runs the full chain on a validated matrix. `uniform_fallback` opts into
/// uniform weights when every index is at maximal entropy (otherwise that
/// degenerate case is an error).
pub fn entropy_report(
    matrix: &EvaluationMatrix,
    prior: Option<&[f64]>,
    uniform_fallback: bool,
) -> Result<(EntropyReport, Vec<Warning>), WeightsError> {
    let mut warnings = Vec::new();
    let shares = column_shares(matrix)?;
    let entropies = index_entropies(&shares)?;
    let weights = match entropy_weights(&entropies) {
        Ok(w) => w,
        Err(WeightsError::AllMaxEntropy) if uniform_fallback => {
            warnings.push(Warning::UniformWeightFallback);
            WeightVector::uniform(matrix.cols())?
        }
        Err(e) => return Err(e),
    };
    let combined = match prior {
        Some(gamma) => Some(combine_with_prior(&weights, gamma)?),
        None => None,
    };
    Ok((EntropyReport { shares, entropies, weights, combined }, warnings))
}

/// Checks that every column of `shares` sums to one.
pub fn is_column_stochastic(shares: &EvaluationMatrix) -> bool {
    (0..shares.cols()).all(|k| {
        let sum: f64 = shares.column(k).sum();
        (sum - 1.0).abs() <= NORMALIZATION_TOL
    })
}
