//! Domain model: the five-factor evaluation hierarchy, grade division
//! tables, and the validated matrices/vectors everything downstream runs on.
//!
//! All types are immutable after construction and safe to share across
//! concurrent evaluations.

use crate::warnings::Warning;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Number of top-level factors in the hierarchy.
pub const FACTOR_COUNT: usize = 5;
/// Number of sub-factors under each factor.
pub const SUB_FACTORS_PER_FACTOR: usize = 4;
/// Total number of leaf indicators.
pub const LEAF_COUNT: usize = FACTOR_COUNT * SUB_FACTORS_PER_FACTOR;
/// Number of evaluation grades.
pub const GRADE_COUNT: usize = 5;

/// Tolerance for "sums to one" checks on normalized vectors.
pub const NORMALIZATION_TOL: f64 = 1e-9;

const DEFAULT_TABLES_TOML: &str = include_str!("../data/grade_tables.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("expected {FACTOR_COUNT} factors, found {found}")]
    FactorCount { found: usize },
    #[error("factor '{factor}' has {found} sub-factors, expected {SUB_FACTORS_PER_FACTOR}")]
    SubFactorCount { factor: String, found: usize },
    #[error("sub-factor name '{name}' appears more than once")]
    DuplicateSubFactor { name: String },
    #[error("grade table '{sub_factor}' breakpoints are not strictly increasing")]
    NonMonotoneBounds { sub_factor: String },
    #[error("grade table '{sub_factor}' has a non-finite breakpoint")]
    NonFiniteBounds { sub_factor: String },
    #[error("weight {value} at index {index} is negative")]
    NegativeWeight { index: usize, value: f64 },
    #[error("vector sums to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    NotNormalized { sum: f64 },
    #[error("vector is empty or sums to zero")]
    ZeroVector,
    #[error("data file: {0}")]
    DataFile(String),
    #[error("data file schema version {found}, this build reads version {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

/// The five evaluation grades, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Grade {
    Excellent,
    Top,
    Middle,
    Low,
    VeryLow,
}

impl Grade {
    pub const ALL: [Grade; GRADE_COUNT] =
        [Grade::Excellent, Grade::Top, Grade::Middle, Grade::Low, Grade::VeryLow];

    /// Position in best-first order: Excellent = 0 .. Very low = 4.
    pub fn index(self) -> usize {
        match self {
            Grade::Excellent => 0,
            Grade::Top => 1,
            Grade::Middle => 2,
            Grade::Low => 3,
            Grade::VeryLow => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<Grade> {
        Grade::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Grade::Excellent => "Excellent",
            Grade::Top => "Top",
            Grade::Middle => "Middle",
            Grade::Low => "Low",
            Grade::VeryLow => "Very low",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Whether larger raw observations mean a better grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// Which end of the numeric scale the Excellent band sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Excellent at the high end (e.g. per capita GDP).
    Ascending,
    /// Excellent at the low end (e.g. population density).
    Descending,
}

impl Orientation {
    pub fn direction(self) -> Direction {
        match self {
            Orientation::Ascending => Direction::HigherIsBetter,
            Orientation::Descending => Direction::LowerIsBetter,
        }
    }
}

/// One leaf indicator of the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubFactor {
    pub name: String,
    pub unit: String,
    pub direction: Direction,
}

/// One top-level factor with its four sub-factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub sub_factors: Vec<SubFactor>,
}

/// The 5-factor x 4-sub-factor evaluation hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTree {
    factors: Vec<Factor>,
}

impl FactorTree {
    /// Builds a tree, enforcing the exact 5 x 4 shape and unique leaf names.
    pub fn new(factors: Vec<Factor>) -> Result<Self, ModelError> {
        if factors.len() != FACTOR_COUNT {
            return Err(ModelError::FactorCount { found: factors.len() });
        }
        for factor in &factors {
            if factor.sub_factors.len() != SUB_FACTORS_PER_FACTOR {
                return Err(ModelError::SubFactorCount {
                    factor: factor.name.clone(),
                    found: factor.sub_factors.len(),
                });
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for sub in factors.iter().flat_map(|f| &f.sub_factors) {
            if !seen.insert(sub.name.as_str()) {
                return Err(ModelError::DuplicateSubFactor { name: sub.name.clone() });
            }
        }
        Ok(FactorTree { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Leaves in tree order (factor by factor).
    pub fn leaves(&self) -> impl Iterator<Item = &SubFactor> {
        self.factors.iter().flat_map(|f| f.sub_factors.iter())
    }

    pub fn leaf_count(&self) -> usize {
        self.factors.iter().map(|f| f.sub_factors.len()).sum()
    }

    pub fn contains(&self, sub_factor: &str) -> bool {
        self.leaves().any(|s| s.name == sub_factor)
    }

    /// Looks a leaf up by name, returning it with its (factor, sub) position.
    pub fn leaf(&self, sub_factor: &str) -> Option<(&SubFactor, usize, usize)> {
        for (fi, factor) in self.factors.iter().enumerate() {
            for (si, sub) in factor.sub_factors.iter().enumerate() {
                if sub.name == sub_factor {
                    return Some((sub, fi, si));
                }
            }
        }
        None
    }
}

/// Grade division table for one sub-factor: four breakpoints splitting the
/// real line into five half-open bands. Every band owns its numeric lower
/// breakpoint, so any finite value lands in exactly one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeTable {
    sub_factor: String,
    bounds: [f64; 4],
    orientation: Orientation,
}

impl GradeTable {
    pub fn new(
        sub_factor: impl Into<String>,
        bounds: [f64; 4],
        orientation: Orientation,
    ) -> Result<Self, ModelError> {
        let sub_factor = sub_factor.into();
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(ModelError::NonFiniteBounds { sub_factor });
        }
        if !(bounds[0] < bounds[1] && bounds[1] < bounds[2] && bounds[2] < bounds[3]) {
            return Err(ModelError::NonMonotoneBounds { sub_factor });
        }
        Ok(GradeTable { sub_factor, bounds, orientation })
    }

    pub fn sub_factor(&self) -> &str {
        &self.sub_factor
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Index of the band containing `value`: 0 for (-inf, b1) up to 4 for
    /// [b4, +inf). Bands own their numeric lower breakpoint.
    pub fn interval_index(&self, value: f64) -> usize {
        self.bounds.iter().filter(|&&b| value >= b).count()
    }

    /// Grade of the k-th band counted from the numeric bottom.
    pub fn grade_of_interval(&self, interval: usize) -> Grade {
        debug_assert!(interval < GRADE_COUNT);
        let idx = match self.orientation {
            Orientation::Ascending => GRADE_COUNT - 1 - interval,
            Orientation::Descending => interval,
        };
        Grade::from_index(idx).expect("interval index in range")
    }

    /// Crisp classification of a raw observation.
    pub fn crisp_grade(&self, value: f64) -> Grade {
        self.grade_of_interval(self.interval_index(value))
    }
}

/// Grade tables keyed by sub-factor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeTableSet {
    tables: std::collections::BTreeMap<String, GradeTable>,
}

impl GradeTableSet {
    pub fn from_tables(tables: Vec<GradeTable>) -> Result<Self, ModelError> {
        let mut map = std::collections::BTreeMap::new();
        for table in tables {
            let name = table.sub_factor.clone();
            if map.insert(name.clone(), table).is_some() {
                return Err(ModelError::DuplicateSubFactor { name });
            }
        }
        Ok(GradeTableSet { tables: map })
    }

    pub fn get(&self, sub_factor: &str) -> Option<&GradeTable> {
        self.tables.get(sub_factor)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GradeTable> {
        self.tables.values()
    }
}

/// M x N matrix of nonnegative scores: M evaluated states, N indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EvaluationMatrix {
    /// Validates a rectangular nonnegative array. An all-zero column is
    /// legal here but reported as a warning; the weights stage rejects it.
    pub fn validate(raw: &[Vec<f64>]) -> Result<(Self, Vec<Warning>), ModelError> {
        if raw.is_empty() || raw[0].is_empty() {
            return Err(ModelError::EmptyMatrix);
        }
        let cols = raw[0].len();
        for (i, row) in raw.iter().enumerate() {
            if row.len() != cols {
                return Err(ModelError::RaggedRows { row: i, expected: cols, found: row.len() });
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ModelError::NonFiniteEntry { row: i, col: k });
                }
                if v < 0.0 {
                    return Err(ModelError::NegativeEntry { row: i, col: k, value: v });
                }
            }
        }
        let data: Vec<f64> = raw.iter().flatten().copied().collect();
        let matrix = EvaluationMatrix { rows: raw.len(), cols, data };
        let warnings = (0..cols)
            .filter(|&k| matrix.column(k).all(|v| v == 0.0))
            .map(|col| Warning::AllZeroColumn { col })
            .collect();
        Ok((matrix, warnings))
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        EvaluationMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, col))
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts an already-normalized vector (sum within `NORMALIZATION_TOL`).
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        Self::check_nonnegative(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ModelError::NotNormalized { sum });
        }
        Ok(WeightVector(weights))
    }

    /// Normalizes on load. Returns a warning when the input was not already
    /// normalized, so callers can surface it.
    pub fn normalizing(weights: Vec<f64>) -> Result<(Self, Option<Warning>), ModelError> {
        Self::check_nonnegative(&weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(ModelError::ZeroVector);
        }
        if (sum - 1.0).abs() <= NORMALIZATION_TOL {
            return Ok((WeightVector(weights), None));
        }
        let scaled = weights.iter().map(|w| w / sum).collect();
        Ok((WeightVector(scaled), Some(Warning::RenormalizedWeights { sum })))
    }

    pub fn uniform(len: usize) -> Result<Self, ModelError> {
        if len == 0 {
            return Err(ModelError::ZeroVector);
        }
        Ok(WeightVector(vec![1.0 / len as f64; len]))
    }

    fn check_nonnegative(weights: &[f64]) -> Result<(), ModelError> {
        if weights.is_empty() {
            return Err(ModelError::ZeroVector);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::NegativeWeight { index, value });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

/// Memberships over the five grades, best first; a partition of unity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeVector([f64; GRADE_COUNT]);

impl GradeVector {
    pub fn new(memberships: [f64; GRADE_COUNT]) -> Result<Self, ModelError> {
        for (index, &value) in memberships.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::NegativeWeight { index, value });
            }
        }
        let sum: f64 = memberships.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ModelError::NotNormalized { sum });
        }
        Ok(GradeVector(memberships))
    }

    /// One-hot vector for a crisp grade.
    pub fn crisp(grade: Grade) -> Self {
        let mut m = [0.0; GRADE_COUNT];
        m[grade.index()] = 1.0;
        GradeVector(m)
    }

    pub fn memberships(&self) -> &[f64; GRADE_COUNT] {
        &self.0
    }

    pub fn get(&self, grade: Grade) -> f64 {
        self.0[grade.index()]
    }

    /// Highest-membership grade; ties resolve to the better grade.
    pub fn argmax(&self) -> Grade {
        let mut best = 0;
        for i in 1..GRADE_COUNT {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        Grade::from_index(best).expect("grade index in range")
    }
}

// ---------------------------------------------------------------------------
// Shipped defaults and the data-file schema.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TablesFile {
    schema_version: u32,
    #[serde(rename = "factor")]
    factors: Vec<FactorBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorBlock {
    name: String,
    #[serde(rename = "sub_factor")]
    sub_factors: Vec<SubFactorBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubFactorBlock {
    name: String,
    unit: String,
    orientation: Orientation,
    bounds: [f64; 4],
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
}

/// Parses a factor tree plus grade tables from the versioned data-file
/// format (the same schema the shipped defaults use).
pub fn load_tables_from_str(text: &str) -> Result<(FactorTree, Vec<GradeTable>), ModelError> {
    let file: TablesFile = toml::from_str(text).map_err(|e| ModelError::DataFile(e.to_string()))?;
    if file.schema_version != 1 {
        return Err(ModelError::SchemaVersion { found: file.schema_version, expected: 1 });
    }
    let mut factors = Vec::new();
    let mut tables = Vec::new();
    for fb in file.factors {
        let mut sub_factors = Vec::new();
        for sb in fb.sub_factors {
            sub_factors.push(SubFactor {
                name: sb.name.clone(),
                unit: sb.unit,
                direction: sb.orientation.direction(),
            });
            tables.push(GradeTable::new(sb.name, sb.bounds, sb.orientation)?);
        }
        factors.push(Factor { name: fb.name, sub_factors });
    }
    let tree = FactorTree::new(factors)?;
    Ok((tree, tables))
}

fn defaults() -> &'static (FactorTree, Vec<GradeTable>) {
    static DEFAULTS: OnceLock<(FactorTree, Vec<GradeTable>)> = OnceLock::new();
    DEFAULTS.get_or_init(|| {
        load_tables_from_str(DEFAULT_TABLES_TOML).expect("shipped grade tables are valid")
    })
}

/// The shipped 5 x 4 evaluation hierarchy.
pub fn build_default_factor_tree() -> FactorTree {
    defaults().0.clone()
}

/// The shipped grade division tables, one per sub-factor, in tree order.
pub fn build_default_grade_tables() -> Vec<GradeTable> {
    defaults().1.clone()
}
