//! Fuzzy comprehensive evaluation: membership of observations against the
//! grade tables, the factor-by-grade relation matrix, the weighted grade
//! vector theta = W . R, and its reduction to a scalar and a monetary rho.

use crate::model::{
    FactorTree, Grade, GradeTable, GradeTableSet, GradeVector, ModelError, WeightVector,
    FACTOR_COUNT, GRADE_COUNT, NORMALIZATION_TOL, SUB_FACTORS_PER_FACTOR,
};
use crate::warnings::Warning;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("no observation for sub-factor '{sub_factor}'")]
    MissingObservation { sub_factor: String },
    #[error("observation key '{name}' is not a sub-factor of the tree")]
    UnknownSubFactor { name: String },
    #[error("observation for '{sub_factor}' is not finite")]
    NonFiniteObservation { sub_factor: String },
    #[error("no grade table for sub-factor '{sub_factor}'")]
    MissingGradeTable { sub_factor: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grade scores must be strictly descending within [0, 1]")]
    InvalidScores,
    #[error("invalid calibration map: {0}")]
    InvalidCalibration(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How a raw value spreads over the five grades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MembershipMode {
    /// One-hot on the containing band.
    Crisp,
    /// Linear crossfade across a band centered on each breakpoint, of
    /// width `width_fraction` times the narrower adjacent band.
    Trapezoidal { width_fraction: f64 },
}

/// Raw observations for one period, keyed by sub-factor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    period: String,
    values: BTreeMap<String, f64>,
}

impl ObservationSet {
    pub fn new(
        period: impl Into<String>,
        values: BTreeMap<String, f64>,
    ) -> Result<Self, FuzzyError> {
        for (name, value) in &values {
            if !value.is_finite() {
                return Err(FuzzyError::NonFiniteObservation { sub_factor: name.clone() });
            }
        }
        Ok(ObservationSet { period: period.into(), values })
    }

    /// Checks every key against the factor tree.
    pub fn validate_against(&self, tree: &FactorTree) -> Result<(), FuzzyError> {
        for name in self.values.keys() {
            if !tree.contains(name) {
                return Err(FuzzyError::UnknownSubFactor { name: name.clone() });
            }
        }
        Ok(())
    }

    pub fn period(&self) -> &str {
        &self.period
    }

    pub fn get(&self, sub_factor: &str) -> Option<f64> {
        self.values.get(sub_factor).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 5 x 5 relation matrix: rows are factors, columns are grades (best
/// first); each row is a partition of unity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMatrix {
    rows: [[f64; GRADE_COUNT]; FACTOR_COUNT],
}

impl RelationMatrix {
    pub fn new(rows: [[f64; GRADE_COUNT]; FACTOR_COUNT]) -> Result<Self, ModelError> {
        for row in &rows {
            GradeVector::new(*row)?;
        }
        Ok(RelationMatrix { rows })
    }

    /// Accepts rows that do not sum to one, renormalizing each and
    /// reporting a warning per adjusted row.
    pub fn normalizing(
        rows: [[f64; GRADE_COUNT]; FACTOR_COUNT],
    ) -> Result<(Self, Vec<Warning>), ModelError> {
        let mut out = rows;
        let mut warnings = Vec::new();
        for (i, row) in out.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(ModelError::ZeroVector);
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                for v in row.iter_mut() {
                    *v /= sum;
                }
                warnings.push(Warning::RenormalizedRelationRow { row: i, sum });
            }
        }
        Ok((RelationMatrix { rows: out }, warnings))
    }

    pub fn row(&self, factor: usize) -> &[f64; GRADE_COUNT] {
        &self.rows[factor]
    }
}

/// Evaluation output: the grade vector, its scalar reduction, the winning
/// grade, and the calibrated monetary value in $/m^2 a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyResult {
    pub theta_vector: GradeVector,
    pub theta_scalar: f64,
    pub grade_label: Grade,
    pub rho: f64,
}

/// Membership of one raw value against one grade table.
///
/// Crisp mode returns the one-hot vector of the containing band.
/// Trapezoidal mode crossfades linearly inside a band centered on each
/// breakpoint; the vector always sums to one. The crossfade fraction is
/// clamped to [0, 1] so bands never overlap.
pub fn membership(value: f64, table: &GradeTable, mode: MembershipMode) -> GradeVector {
    let interval = table.interval_index(value);
    match mode {
        MembershipMode::Crisp => GradeVector::crisp(table.grade_of_interval(interval)),
        MembershipMode::Trapezoidal { width_fraction } => {
            let fraction = width_fraction.clamp(0.0, 1.0);
            if fraction == 0.0 {
                return GradeVector::crisp(table.grade_of_interval(interval));
            }
            let b = table.bounds();
            let widths = [b[1] - b[0], b[2] - b[1], b[3] - b[2]];
            for (i, &bp) in b.iter().enumerate() {
                // Width local to breakpoint i: the narrower finite band
                // beside it (extreme bands are open-ended).
                let local = match i {
                    0 => widths[0],
                    3 => widths[2],
                    _ => widths[i - 1].min(widths[i]),
                };
                let half = fraction * local / 2.0;
                if value >= bp - half && value < bp + half {
                    let t = (value - (bp - half)) / (2.0 * half);
                    let lower = table.grade_of_interval(i);
                    let upper = table.grade_of_interval(i + 1);
                    let mut m = [0.0; GRADE_COUNT];
                    m[lower.index()] = 1.0 - t;
                    m[upper.index()] = t;
                    return GradeVector::new(m).expect("crossfade is a partition of unity");
                }
            }
            GradeVector::crisp(table.grade_of_interval(interval))
        }
    }
}

/// Builds the relation matrix from observations: each factor row is the
/// sub-weight convex combination of its four sub-factor memberships.
pub fn build_relation_matrix(
    observations: &ObservationSet,
    tables: &GradeTableSet,
    tree: &FactorTree,
    sub_weights: &[WeightVector],
    mode: MembershipMode,
) -> Result<RelationMatrix, FuzzyError> {
    if sub_weights.len() != FACTOR_COUNT {
        return Err(FuzzyError::DimensionMismatch {
            expected: FACTOR_COUNT,
            found: sub_weights.len(),
        });
    }
    let mut rows = [[0.0; GRADE_COUNT]; FACTOR_COUNT];
    for (fi, factor) in tree.factors().iter().enumerate() {
        let weights = &sub_weights[fi];
        if weights.len() != SUB_FACTORS_PER_FACTOR {
            return Err(FuzzyError::DimensionMismatch {
                expected: SUB_FACTORS_PER_FACTOR,
                found: weights.len(),
            });
        }
        for (si, sub) in factor.sub_factors.iter().enumerate() {
            let value = observations
                .get(&sub.name)
                .ok_or_else(|| FuzzyError::MissingObservation { sub_factor: sub.name.clone() })?;
            let table = tables
                .get(&sub.name)
                .ok_or_else(|| FuzzyError::MissingGradeTable { sub_factor: sub.name.clone() })?;
            let m = membership(value, table, mode);
            for g in 0..GRADE_COUNT {
                rows[fi][g] += weights.get(si) * m.memberships()[g];
            }
        }
    }
    Ok(RelationMatrix::new(rows)?)
}

/// theta = W . R: row vector times matrix, a grade vector.
pub fn fuzzy_evaluate(
    weights: &WeightVector,
    relation: &RelationMatrix,
) -> Result<GradeVector, FuzzyError> {
    if weights.len() != FACTOR_COUNT {
        return Err(FuzzyError::DimensionMismatch {
            expected: FACTOR_COUNT,
            found: weights.len(),
        });
    }
    let mut theta = [0.0; GRADE_COUNT];
    for g in 0..GRADE_COUNT {
        for f in 0..FACTOR_COUNT {
            theta[g] += weights.get(f) * relation.row(f)[g];
        }
    }
    Ok(GradeVector::new(theta)?)
}

/// Per-grade scores used to reduce a grade vector to a scalar, best first,
/// strictly descending within [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeScores([f64; GRADE_COUNT]);

impl GradeScores {
    pub fn new(scores: [f64; GRADE_COUNT]) -> Result<Self, FuzzyError> {
        let in_range = scores.iter().all(|s| s.is_finite() && (0.0..=1.0).contains(s));
        let descending = scores.windows(2).all(|w| w[0] > w[1]);
        if !in_range || !descending {
            return Err(FuzzyError::InvalidScores);
        }
        Ok(GradeScores(scores))
    }

    pub fn as_array(&self) -> [f64; GRADE_COUNT] {
        self.0
    }
}

impl Default for GradeScores {
    fn default() -> Self {
        GradeScores([0.9, 0.7, 0.5, 0.3, 0.1])
    }
}

/// Score-weighted reduction of a grade vector, plus the winning grade
/// (argmax, ties to the better grade).
pub fn defuzzify(theta: &GradeVector, scores: &GradeScores) -> (f64, Grade) {
    let scalar = theta
        .memberships()
        .iter()
        .zip(scores.0.iter())
        .map(|(m, s)| m * s)
        .sum();
    (scalar, theta.argmax())
}

/// Monotone piecewise-linear map from the scalar grade value to a
/// monetary value in $/m^2 a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Calibration {
    points: Vec<(f64, f64)>,
}

impl Calibration {
    /// Points must be strictly increasing in x, nondecreasing in y, all
    /// nonnegative in y, and span [0, 1] in x.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, FuzzyError> {
        if points.len() < 2 {
            return Err(FuzzyError::InvalidCalibration("need at least two points".into()));
        }
        for &(x, y) in &points {
            if !x.is_finite() || !y.is_finite() || y < 0.0 {
                return Err(FuzzyError::InvalidCalibration(format!(
                    "point ({x}, {y}) is not finite and nonnegative"
                )));
            }
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(FuzzyError::InvalidCalibration(
                    "x coordinates must be strictly increasing".into(),
                ));
            }
            if pair[1].1 < pair[0].1 {
                return Err(FuzzyError::InvalidCalibration(
                    "map must be monotone nondecreasing".into(),
                ));
            }
        }
        if points[0].0 > 0.0 || points[points.len() - 1].0 < 1.0 {
            return Err(FuzzyError::InvalidCalibration(
                "calibration must cover [0, 1]".into(),
            ));
        }
        Ok(Calibration { points })
    }

    /// Identity on [0, 1].
    pub fn identity() -> Self {
        Calibration { points: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    /// Piecewise-linear lookup; exact at nodes and on plateaus, clamped
    /// outside the covered range.
    pub fn value_at(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        if x >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        for pair in pts.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if x < x1 {
                if x == x0 || y0 == y1 {
                    return y0;
                }
                let t = (x - x0) / (x1 - x0);
                return y0 + t * (y1 - y0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// rho = calibration(theta_scalar), in $/m^2 a.
pub fn rho_from_grade(theta_scalar: f64, calibration: &Calibration) -> f64 {
    calibration.value_at(theta_scalar)
}
