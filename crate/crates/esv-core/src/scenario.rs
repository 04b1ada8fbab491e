//! Scenario files, pipeline orchestration, and report emission.
//!
//! A scenario bundles everything one end-to-end run needs: observations,
//! the raw evaluation matrix, marine and urban valuation inputs, the
//! project ledger, and run options. The pipeline executes
//! weights -> fuzzy -> valuation -> cost-benefit and records every
//! intermediate artifact.

use crate::cost_benefit::{
    compare_scenarios, CbrOptions, CbrReport, CostBenefitError, ProjectLedger,
};
use crate::forecast::ForecastError;
use crate::fuzzy::{
    build_relation_matrix, defuzzify, fuzzy_evaluate, rho_from_grade, Calibration, FuzzyError,
    FuzzyResult, GradeScores, MembershipMode, ObservationSet, RelationMatrix,
};
use crate::model::{
    build_default_factor_tree, build_default_grade_tables, EvaluationMatrix, FactorTree,
    GradeTableSet, ModelError, WeightVector, SUB_FACTORS_PER_FACTOR,
};
use crate::valuation::{
    climate_regulation, fishery_value, landscape_value, pollution_control, total_service_value,
    urban_unit_value_with, MarineInputs, ServiceValuation, UrbanFormula, UrbanParams,
    ValuationError,
};
use crate::warnings::Warning;
use crate::weights::{entropy_report, EntropyReport, WeightsError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Scenario file schema version this build reads.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("scenario schema version {found}, this build reads version {expected}")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("cross-reference error: {0}")]
    CrossRef(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Weights,
    Fuzzy,
    Valuation,
    CostBenefit,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Weights => "weights",
            Stage::Fuzzy => "fuzzy",
            Stage::Valuation => "valuation",
            Stage::CostBenefit => "cost-benefit",
        };
        f.write_str(name)
    }
}

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("weights stage: {0}")]
    Weights(#[from] WeightsError),
    #[error("fuzzy stage: {0}")]
    Fuzzy(#[from] FuzzyError),
    #[error("valuation stage: {0}")]
    Valuation(#[from] ValuationError),
    #[error("cost-benefit stage: {0}")]
    CostBenefit(#[from] CostBenefitError),
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Weights(_) => Stage::Weights,
            PipelineError::Fuzzy(_) => Stage::Fuzzy,
            PipelineError::Valuation(_) => Stage::Valuation,
            PipelineError::CostBenefit(_) => Stage::CostBenefit,
        }
    }
}

/// Urban parameters as they appear in a scenario: rho is computed by the
/// pipeline, not supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrbanSpec {
    pub sigma: f64,
    pub p0: f64,
    pub planning_cost: f64,
    pub land_area: f64,
    #[serde(default)]
    pub p0_ref: Option<f64>,
}

impl UrbanSpec {
    pub fn with_rho(&self, rho: f64) -> UrbanParams {
        UrbanParams {
            sigma: self.sigma,
            p0: self.p0,
            planning_cost: self.planning_cost,
            land_area: self.land_area,
            rho,
            p0_ref: self.p0_ref,
        }
    }
}

/// Resolved run options.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOptions {
    pub membership: MembershipMode,
    pub grade_scores: GradeScores,
    pub formula: UrbanFormula,
    pub calibration: Calibration,
    pub uniform_fallback: bool,
    pub cbr: CbrOptions,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            membership: MembershipMode::Crisp,
            grade_scores: GradeScores::default(),
            formula: UrbanFormula::default(),
            calibration: Calibration::identity(),
            uniform_fallback: false,
            cbr: CbrOptions::default(),
        }
    }
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub observations: ObservationSet,
    pub matrix: EvaluationMatrix,
    pub prior: Option<Vec<f64>>,
    pub marine: MarineInputs,
    pub urban: UrbanSpec,
    pub ledger: ProjectLedger,
    pub options: ScenarioOptions,
}

impl Scenario {
    /// Stable content hash of the scenario's canonical serialization.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// File schema (TOML). Unknown fields are rejected, not ignored.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    // Checked up front through VersionProbe; present here so strict
    // parsing accepts the field.
    #[allow(dead_code)]
    schema_version: u32,
    name: String,
    observations: ObservationsBlock,
    matrix: MatrixBlock,
    #[serde(default)]
    prior: Option<PriorBlock>,
    marine: MarineBlock,
    urban: UrbanSpec,
    ledger: LedgerBlock,
    #[serde(default)]
    options: Option<OptionsBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationsBlock {
    period: String,
    values: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixBlock {
    #[serde(default)]
    rows: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    file: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    states: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorBlock {
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarineBlock {
    cost_fix_co2: f64,
    cost_release_co2: f64,
    #[serde(default)]
    pollutants: Vec<PollutantBlock>,
    q: f64,
    depth: f64,
    sea_area: f64,
    landscape_importance: Vec<Vec<f64>>,
    landscape_use: Vec<Vec<u8>>,
    landscape_unit_value: f64,
    fishery_revenue: f64,
    fishery_cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PollutantBlock {
    capacity: f64,
    treatment_cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LedgerBlock {
    tangible_costs: BTreeMap<String, f64>,
    intangible_costs: BTreeMap<String, f64>,
    benefits: BTreeMap<String, f64>,
    area: f64,
    horizon_years: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsBlock {
    #[serde(default)]
    membership: Option<String>,
    #[serde(default)]
    trapezoid_width: Option<f64>,
    #[serde(default)]
    grade_scores: Option<[f64; 5]>,
    #[serde(default)]
    reconstruction: Option<String>,
    #[serde(default)]
    calibration: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    uniform_fallback: Option<bool>,
    #[serde(default)]
    avoided_degradation_benefit: Option<f64>,
    #[serde(default)]
    discount_rate: Option<f64>,
}

fn resolve_options(block: Option<OptionsBlock>) -> Result<ScenarioOptions, ScenarioError> {
    let mut options = ScenarioOptions::default();
    let Some(block) = block else { return Ok(options) };
    if let Some(kind) = block.membership {
        options.membership = match kind.as_str() {
            "crisp" => MembershipMode::Crisp,
            "trapezoidal" => MembershipMode::Trapezoidal {
                width_fraction: block.trapezoid_width.unwrap_or(0.2),
            },
            other => {
                return Err(ScenarioError::Invalid(format!(
                    "unknown membership mode '{other}' (expected crisp or trapezoidal)"
                )))
            }
        };
    }
    if let Some(scores) = block.grade_scores {
        options.grade_scores =
            GradeScores::new(scores).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    }
    if let Some(name) = block.reconstruction {
        options.formula =
            UrbanFormula::by_name(&name).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    }
    if let Some(points) = block.calibration {
        let pairs = points.iter().map(|p| (p[0], p[1])).collect();
        options.calibration =
            Calibration::new(pairs).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    }
    if let Some(flag) = block.uniform_fallback {
        options.uniform_fallback = flag;
    }
    options.cbr = CbrOptions {
        avoided_degradation_benefit: block.avoided_degradation_benefit,
        discount_rate: block.discount_rate.unwrap_or(0.0),
    };
    Ok(options)
}

/// Loads and fully validates a scenario file against the default tree.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    load_scenario_with(path, &build_default_factor_tree())
}

/// Loads a scenario, cross-referencing names against a given tree.
pub fn load_scenario_with(
    path: impl AsRef<Path>,
    tree: &FactorTree,
) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: display.clone(), message: e.to_string() })?;

    // Check the version before strict parsing so a future-version file
    // reports a version mismatch rather than unknown fields.
    let probe: VersionProbe = toml::from_str(&text)
        .map_err(|e| ScenarioError::Parse { path: display.clone(), message: e.to_string() })?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(ScenarioError::SchemaVersionMismatch {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(ScenarioError::Parse {
                path: display,
                message: "missing field `schema_version`".into(),
            })
        }
    }

    let file: ScenarioFile = toml::from_str(&text)
        .map_err(|e| ScenarioError::Parse { path: display.clone(), message: e.to_string() })?;

    let observations = ObservationSet::new(file.observations.period, file.observations.values)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    observations
        .validate_against(tree)
        .map_err(|e| ScenarioError::CrossRef(e.to_string()))?;

    let matrix = match (&file.matrix.rows, &file.matrix.file) {
        (Some(rows), None) => EvaluationMatrix::validate(rows)
            .map_err(|e| ScenarioError::Invalid(format!("matrix: {e}")))?
            .0,
        (None, Some(rel)) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            read_matrix_file(base.join(rel))?.0
        }
        _ => {
            return Err(ScenarioError::Invalid(
                "matrix needs exactly one of `rows` or `file`".into(),
            ))
        }
    };
    if matrix.cols() != tree.leaf_count() {
        return Err(ScenarioError::CrossRef(format!(
            "matrix has {} columns but the factor tree has {} leaves",
            matrix.cols(),
            tree.leaf_count()
        )));
    }

    let prior = file.prior.map(|p| p.weights);
    if let Some(gamma) = &prior {
        if gamma.len() != tree.leaf_count() {
            return Err(ScenarioError::CrossRef(format!(
                "prior has {} entries but the factor tree has {} leaves",
                gamma.len(),
                tree.leaf_count()
            )));
        }
    }

    let marine = MarineInputs {
        cost_fix_co2: file.marine.cost_fix_co2,
        cost_release_co2: file.marine.cost_release_co2,
        pollutants: file
            .marine
            .pollutants
            .iter()
            .map(|p| crate::valuation::Pollutant {
                capacity: p.capacity,
                treatment_cost: p.treatment_cost,
            })
            .collect(),
        q: file.marine.q,
        depth: file.marine.depth,
        sea_area: file.marine.sea_area,
        landscape_importance: file.marine.landscape_importance,
        landscape_use: file.marine.landscape_use,
        landscape_unit_value: file.marine.landscape_unit_value,
        fishery_revenue: file.marine.fishery_revenue,
        fishery_cost: file.marine.fishery_cost,
    };
    marine.validate().map_err(|e| ScenarioError::Invalid(format!("marine: {e}")))?;

    let ledger = ProjectLedger {
        tangible_costs: file.ledger.tangible_costs,
        intangible_costs: file.ledger.intangible_costs,
        benefits: file.ledger.benefits,
        area: file.ledger.area,
        horizon_years: file.ledger.horizon_years,
    };
    ledger.validate().map_err(|e| ScenarioError::Invalid(format!("ledger: {e}")))?;

    let options = resolve_options(file.options)?;

    Ok(Scenario {
        name: file.name,
        observations,
        matrix,
        prior,
        marine,
        urban: file.urban,
        ledger,
        options,
    })
}

// ---------------------------------------------------------------------------
// Delimited numeric files: matrices and (year, value) series.
// ---------------------------------------------------------------------------

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parses a whitespace- or comma-delimited numeric matrix. Blank lines and
/// `#` comments are skipped.
pub fn parse_matrix_text(
    text: &str,
    origin: &str,
) -> Result<(EvaluationMatrix, Vec<Warning>), ScenarioError> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for token in split_fields(line) {
            let value: f64 = token.parse().map_err(|_| ScenarioError::Parse {
                path: origin.to_string(),
                message: format!("line {}: '{token}' is not a number", line_no + 1),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    EvaluationMatrix::validate(&rows)
        .map_err(|e| ScenarioError::Invalid(format!("{origin}: {e}")))
}

pub fn read_matrix_file(
    path: impl AsRef<Path>,
) -> Result<(EvaluationMatrix, Vec<Warning>), ScenarioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: display.clone(), message: e.to_string() })?;
    parse_matrix_text(&text, &display)
}

/// Which column of a multi-column series file to forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesQuantity {
    TotalUnitValue,
    Theta,
}

/// Parses `year,value` rows. A non-numeric first line is a header; with a
/// header, multi-column files select the column matching the requested
/// quantity ("total" or "theta").
pub fn parse_series_text(
    text: &str,
    origin: &str,
    quantity: SeriesQuantity,
) -> Result<Vec<(i32, f64)>, ScenarioError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    let mut value_col = 1usize;
    if let Some(&(_, first)) = lines.peek() {
        let fields = split_fields(first);
        let is_header = fields.first().map(|f| f.parse::<i32>().is_err()).unwrap_or(false);
        if is_header {
            let wanted = match quantity {
                SeriesQuantity::TotalUnitValue => "total",
                SeriesQuantity::Theta => "theta",
            };
            let found = fields
                .iter()
                .position(|name| name.to_ascii_lowercase().contains(wanted));
            match found {
                Some(col) => value_col = col,
                None if quantity == SeriesQuantity::TotalUnitValue && fields.len() >= 2 => {
                    value_col = 1;
                }
                None => {
                    return Err(ScenarioError::Parse {
                        path: origin.to_string(),
                        message: format!("no column matching '{wanted}' in header"),
                    })
                }
            }
            lines.next();
        } else if quantity == SeriesQuantity::Theta && fields.len() < 3 {
            // Bare two-column files carry a single quantity; theta needs a
            // labelled column.
            value_col = 1;
        }
    }

    let mut points = Vec::new();
    for (line_no, line) in lines {
        let fields = split_fields(line);
        if fields.len() <= value_col {
            return Err(ScenarioError::Parse {
                path: origin.to_string(),
                message: format!("line {line_no}: expected at least {} columns", value_col + 1),
            });
        }
        let year: i32 = fields[0].parse().map_err(|_| ScenarioError::Parse {
            path: origin.to_string(),
            message: format!("line {line_no}: '{}' is not a year", fields[0]),
        })?;
        let value: f64 = fields[value_col].parse().map_err(|_| ScenarioError::Parse {
            path: origin.to_string(),
            message: format!("line {line_no}: '{}' is not a number", fields[value_col]),
        })?;
        points.push((year, value));
    }
    Ok(points)
}

pub fn read_series_file(
    path: impl AsRef<Path>,
    quantity: SeriesQuantity,
) -> Result<Vec<(i32, f64)>, ScenarioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: display.clone(), message: e.to_string() })?;
    parse_series_text(&text, &display, quantity)
}

/// Observations file for the standalone `evaluate` flow: a `period` plus a
/// `[values]` table.
pub fn read_observations_file(path: impl AsRef<Path>) -> Result<ObservationSet, ScenarioError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ObservationsFile {
        period: String,
        values: BTreeMap<String, f64>,
    }
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: display.clone(), message: e.to_string() })?;
    let file: ObservationsFile = toml::from_str(&text)
        .map_err(|e| ScenarioError::Parse { path: display, message: e.to_string() })?;
    ObservationSet::new(file.period, file.values)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))
}

/// Indicator-weights file: `indicator_weights = [...]`, one entry per leaf.
pub fn read_indicator_weights_file(path: impl AsRef<Path>) -> Result<Vec<f64>, ScenarioError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct WeightsFile {
        indicator_weights: Vec<f64>,
    }
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: display.clone(), message: e.to_string() })?;
    let file: WeightsFile = toml::from_str(&text)
        .map_err(|e| ScenarioError::Parse { path: display, message: e.to_string() })?;
    Ok(file.indicator_weights)
}

// ---------------------------------------------------------------------------
// Pipeline execution and run records.
// ---------------------------------------------------------------------------

/// Splits 20 indicator weights into the 5-factor weight vector (group
/// sums) and per-factor sub-weight vectors (group-normalized). A factor
/// whose group weight is zero gets uniform sub-weights and a warning.
pub fn split_indicator_weights(
    indicator: &WeightVector,
    tree: &FactorTree,
) -> Result<(WeightVector, Vec<WeightVector>, Vec<Warning>), WeightsError> {
    if indicator.len() != tree.leaf_count() {
        return Err(WeightsError::LengthMismatch {
            left: indicator.len(),
            right: tree.leaf_count(),
        });
    }
    let mut warnings = Vec::new();
    let mut factor_weights = Vec::with_capacity(tree.factors().len());
    let mut sub_weights = Vec::with_capacity(tree.factors().len());
    for (fi, factor) in tree.factors().iter().enumerate() {
        let start = fi * SUB_FACTORS_PER_FACTOR;
        let group: Vec<f64> =
            (start..start + SUB_FACTORS_PER_FACTOR).map(|k| indicator.get(k)).collect();
        let total: f64 = group.iter().sum();
        factor_weights.push(total);
        if total > 0.0 {
            let normalized = group.iter().map(|w| w / total).collect();
            sub_weights.push(WeightVector::normalizing(normalized).map_err(WeightsError::Model)?.0);
        } else {
            warnings.push(Warning::UniformSubWeights { factor: factor.name.clone() });
            sub_weights.push(
                WeightVector::uniform(SUB_FACTORS_PER_FACTOR).map_err(WeightsError::Model)?,
            );
        }
    }
    let factor = WeightVector::normalizing(factor_weights).map_err(WeightsError::Model)?.0;
    Ok((factor, sub_weights, warnings))
}

/// Run metadata: provenance, never part of the numeric payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario_name: String,
    pub scenario_hash: String,
    pub timestamp_unix: u64,
    pub toolkit_version: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Every numeric artifact of one pipeline run. Re-running an unchanged
/// scenario reproduces this payload byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPayload {
    pub period: String,
    pub entropy: EntropyReport,
    pub factor_weights: WeightVector,
    pub sub_weights: Vec<WeightVector>,
    pub relation: RelationMatrix,
    pub fuzzy: FuzzyResult,
    pub valuation: ServiceValuation,
    pub cost_benefit: CbrReport,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub payload: RunPayload,
}

impl RunRecord {
    /// Canonical bytes of the numeric payload, for determinism checks.
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.payload).expect("payload serializes")
    }
}

/// Executes the full pipeline against the shipped defaults.
pub fn run_pipeline(scenario: &Scenario) -> Result<RunRecord, PipelineError> {
    let tree = build_default_factor_tree();
    let tables = GradeTableSet::from_tables(build_default_grade_tables())
        .expect("shipped tables are unique");
    run_pipeline_with(scenario, &tree, &tables, None)
}

/// Executes the full pipeline with explicit tree/tables (user overrides).
pub fn run_pipeline_with(
    scenario: &Scenario,
    tree: &FactorTree,
    tables: &GradeTableSet,
    seed: Option<u64>,
) -> Result<RunRecord, PipelineError> {
    let mut warnings = Vec::new();

    // Stage 1: entropy weights over the indicator matrix.
    let (entropy, stage_warnings) = entropy_report(
        &scenario.matrix,
        scenario.prior.as_deref(),
        scenario.options.uniform_fallback,
    )?;
    warnings.extend(stage_warnings);
    let (factor_weights, sub_weights, stage_warnings) =
        split_indicator_weights(entropy.effective_weights(), tree)?;
    warnings.extend(stage_warnings);

    // Stage 2: fuzzy grade evaluation.
    scenario.observations.validate_against(tree)?;
    let relation = build_relation_matrix(
        &scenario.observations,
        tables,
        tree,
        &sub_weights,
        scenario.options.membership,
    )?;
    let theta = fuzzy_evaluate(&factor_weights, &relation)?;
    let (theta_scalar, grade_label) = defuzzify(&theta, &scenario.options.grade_scores);
    let rho = rho_from_grade(theta_scalar, &scenario.options.calibration);
    let fuzzy = FuzzyResult { theta_vector: theta, theta_scalar, grade_label, rho };

    // Stage 3: per-service valuation.
    scenario.marine.validate()?;
    let climate =
        climate_regulation(scenario.marine.cost_fix_co2, scenario.marine.cost_release_co2)?;
    let pollution = pollution_control(
        &scenario.marine.pollutants,
        scenario.marine.q,
        scenario.marine.depth,
        scenario.marine.sea_area,
    )?;
    let (_, landscape) = landscape_value(
        &scenario.marine.landscape_importance,
        &scenario.marine.landscape_use,
        scenario.marine.landscape_unit_value,
    )?;
    let (fishery, fishery_warning) = fishery_value(
        scenario.marine.fishery_revenue,
        scenario.marine.fishery_cost,
        scenario.marine.sea_area,
    )?;
    warnings.extend(fishery_warning);
    let urban = urban_unit_value_with(&scenario.urban.with_rho(rho), scenario.options.formula)?;
    let (valuation, stage_warnings) = total_service_value(
        [climate, pollution, landscape, fishery],
        urban,
        scenario.urban.land_area,
    )?;
    warnings.extend(stage_warnings);

    // Stage 4: cost-benefit comparison.
    let cost_benefit = compare_scenarios(&scenario.ledger, &valuation, &scenario.options.cbr)?;

    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    Ok(RunRecord {
        meta: RunMeta {
            scenario_name: scenario.name.clone(),
            scenario_hash: scenario.content_hash(),
            timestamp_unix,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        },
        payload: RunPayload {
            period: scenario.observations.period().to_string(),
            entropy,
            factor_weights,
            sub_weights,
            relation,
            fuzzy,
            valuation,
            cost_benefit,
            warnings,
        },
    })
}

/// Output format of `emit_report`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

/// Renders a run record: human-readable text, or JSON that reloads
/// losslessly (floats print in shortest round-trip form).
pub fn emit_report(record: &RunRecord, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            serde_json::to_string_pretty(record).expect("record serializes")
        }
        ReportFormat::Text => render_text(record),
    }
}

fn render_text(record: &RunRecord) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let meta = &record.meta;
    let p = &record.payload;
    let _ = writeln!(out, "scenario: {} (period {})", meta.scenario_name, p.period);
    let _ = writeln!(out, "hash: {}", meta.scenario_hash);
    let _ = writeln!(out, "toolkit: {}  timestamp: {}", meta.toolkit_version, meta.timestamp_unix);
    let _ = writeln!(out);
    let _ = writeln!(out, "factor weights:");
    for (i, w) in p.factor_weights.iter().enumerate() {
        let _ = writeln!(out, "  factor {}: {}", i + 1, w);
    }
    let _ = writeln!(out, "theta vector (Excellent, Top, Middle, Low, Very low):");
    let _ = writeln!(
        out,
        "  {}",
        p.fuzzy
            .theta_vector
            .memberships()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(out, "theta scalar: {}", p.fuzzy.theta_scalar);
    let _ = writeln!(out, "grade: {}", p.fuzzy.grade_label);
    let _ = writeln!(out, "rho: {} $/m2 a", p.fuzzy.rho);
    let _ = writeln!(out);
    let _ = writeln!(out, "service valuation ($/m2 a):");
    for (name, value) in p.valuation.components() {
        let _ = writeln!(out, "  {name}: {value}");
    }
    let _ = writeln!(out, "  total unit value: {}", p.valuation.total_unit_value);
    let _ = writeln!(out, "  total annual value: {} $/a", p.valuation.total_annual_value);
    let _ = writeln!(out);
    let _ = writeln!(out, "cost-benefit ({}):", p.cost_benefit.direction);
    let _ = writeln!(out, "  environmental cost: {} $", p.cost_benefit.env_cost);
    let _ = writeln!(out, "  ratio without environmental cost: {}", p.cost_benefit.ratio_without_env);
    let _ = writeln!(out, "  ratio with environmental cost: {}", p.cost_benefit.ratio_with_env);
    let _ = writeln!(out, "  delta: {}", p.cost_benefit.delta);
    if !p.warnings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "warnings:");
        for warning in &p.warnings {
            let _ = writeln!(out, "  - {warning}");
        }
    }
    out
}

/// Maps any toolkit error to the documented process exit code: 1 for
/// input/validation problems, 2 for computation failures.
pub fn exit_code_for_scenario_error(_: &ScenarioError) -> u8 {
    1
}

pub fn exit_code_for_pipeline_error(_: &PipelineError) -> u8 {
    2
}

pub fn exit_code_for_model_error(_: &ModelError) -> u8 {
    1
}

pub fn exit_code_for_forecast_error(e: &ForecastError) -> u8 {
    match e {
        ForecastError::ShapeMismatch { .. } | ForecastError::InvalidConfig(_) => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LEAF_COUNT;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn city_l_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/city_l.toml")
    }

    #[test]
    fn city_l_scenario_loads_with_twenty_observations() {
        let scenario = load_scenario(city_l_path()).unwrap();
        assert_eq!(scenario.observations.len(), LEAF_COUNT);
        assert_eq!(scenario.matrix.cols(), LEAF_COUNT);
        assert_eq!(scenario.observations.period(), "2019");
    }

    #[test]
    fn missing_sigma_names_the_field() {
        let text = std::fs::read_to_string(city_l_path()).unwrap();
        let broken = text.replace("sigma = 0.8\n", "");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(broken.as_bytes()).unwrap();
        let err = load_scenario(file.path()).unwrap_err();
        match err {
            ScenarioError::Parse { message, .. } => {
                assert!(message.contains("sigma"), "message should name sigma: {message}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_sub_factor_is_a_cross_ref_error() {
        let text = std::fs::read_to_string(city_l_path()).unwrap();
        let broken = text.replace("\"Per capita GDP\"", "\"Per capita widgets\"");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(broken.as_bytes()).unwrap();
        let err = load_scenario(file.path()).unwrap_err();
        assert!(matches!(err, ScenarioError::CrossRef(_)), "got {err:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = std::fs::read_to_string(city_l_path()).unwrap();
        let extended = format!("{text}\n[future_block]\nx = 1\n");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(extended.as_bytes()).unwrap();
        let err = load_scenario(file.path()).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }), "got {err:?}");
    }

    #[test]
    fn future_schema_version_is_reported_as_such() {
        let text = std::fs::read_to_string(city_l_path()).unwrap();
        let future = text.replace("schema_version = 1", "schema_version = 2");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(future.as_bytes()).unwrap();
        let err = load_scenario(file.path()).unwrap_err();
        assert_eq!(err, ScenarioError::SchemaVersionMismatch { found: 2, expected: 1 });
    }

    #[test]
    fn pipeline_reproduces_city_l_totals() {
        let scenario = load_scenario(city_l_path()).unwrap();
        let record = run_pipeline(&scenario).unwrap();
        let v = &record.payload.valuation;
        assert_abs_diff_eq!(v.climate_regulation, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(v.pollution_control, 0.60, epsilon = 1e-12);
        assert_abs_diff_eq!(v.landscape, 0.11, epsilon = 1e-12);
        assert_abs_diff_eq!(v.fishery, 0.32, epsilon = 1e-12);
        assert_abs_diff_eq!(v.urban, 0.56, epsilon = 1e-12);
        assert_abs_diff_eq!(v.total_unit_value, 1.61, epsilon = 1e-9);
    }

    #[test]
    fn rerun_payload_is_byte_identical() {
        let scenario = load_scenario(city_l_path()).unwrap();
        let a = run_pipeline(&scenario).unwrap();
        let b = run_pipeline(&scenario).unwrap();
        assert_eq!(a.payload_bytes(), b.payload_bytes());
    }

    #[test]
    fn structured_report_roundtrips() {
        let scenario = load_scenario(city_l_path()).unwrap();
        let record = run_pipeline(&scenario).unwrap();
        let rendered = emit_report(&record, ReportFormat::Structured);
        let reloaded: RunRecord = serde_json::from_str(&rendered).unwrap();
        assert_eq!(reloaded, record);
    }

    #[test]
    fn text_report_lists_all_components() {
        let scenario = load_scenario(city_l_path()).unwrap();
        let record = run_pipeline(&scenario).unwrap();
        let text = emit_report(&record, ReportFormat::Text);
        for name in
            ["climate regulation", "pollution control", "landscape", "fishery", "urban"]
        {
            assert!(text.contains(name), "missing component {name}");
        }
        assert!(text.contains("total unit value"));
    }

    #[test]
    fn empty_benefit_ledger_reports_zero_ratio() {
        let mut scenario = load_scenario(city_l_path()).unwrap();
        scenario.ledger.benefits.clear();
        let record = run_pipeline(&scenario).unwrap();
        assert_eq!(record.payload.cost_benefit.ratio_without_env, 0.0);
        assert_eq!(record.payload.cost_benefit.ratio_with_env, 0.0);
        let text = emit_report(&record, ReportFormat::Text);
        assert!(text.contains("ratio without environmental cost: 0"));
    }

    #[test]
    fn degenerate_matrix_fails_in_weights_stage() {
        let mut scenario = load_scenario(city_l_path()).unwrap();
        // A constant matrix has maximal entropy everywhere.
        let rows: Vec<Vec<f64>> = vec![vec![1.0; LEAF_COUNT]; 3];
        scenario.matrix = EvaluationMatrix::validate(&rows).unwrap().0;
        scenario.options.uniform_fallback = false;
        let err = run_pipeline(&scenario).unwrap_err();
        assert_eq!(err.stage(), Stage::Weights);
        assert!(err.to_string().starts_with("weights stage:"));
        // With the fallback flag the same scenario runs.
        scenario.options.uniform_fallback = true;
        let record = run_pipeline(&scenario).unwrap();
        assert!(record.payload.warnings.contains(&Warning::UniformWeightFallback));
    }

    #[test]
    fn series_parser_reads_plain_and_labelled_files() {
        let plain = "2015,1.2\n2016,1.3\n2017 1.4\n";
        let rows = parse_series_text(plain, "test", SeriesQuantity::TotalUnitValue).unwrap();
        assert_eq!(rows, vec![(2015, 1.2), (2016, 1.3), (2017, 1.4)]);

        let labelled = "year,total,theta\n2015,1.2,0.50\n2016,1.3,0.52\n";
        let total = parse_series_text(labelled, "test", SeriesQuantity::TotalUnitValue).unwrap();
        assert_eq!(total, vec![(2015, 1.2), (2016, 1.3)]);
        let theta = parse_series_text(labelled, "test", SeriesQuantity::Theta).unwrap();
        assert_eq!(theta, vec![(2015, 0.50), (2016, 0.52)]);
    }

    #[test]
    fn matrix_parser_flags_bad_tokens() {
        let err = parse_matrix_text("1 2\n3 x\n", "test").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }));
        let (m, _) = parse_matrix_text("# comment\n1, 2\n3, 4\n", "test").unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
    }

    #[test]
    fn split_weights_groups_and_renormalizes() {
        let tree = build_default_factor_tree();
        let mut raw = vec![0.0; LEAF_COUNT];
        // All mass on the first factor's group, split 2:1:1:0.
        raw[0] = 0.5;
        raw[1] = 0.25;
        raw[2] = 0.25;
        let indicator = WeightVector::new(raw).unwrap();
        let (factor, sub, warnings) = split_indicator_weights(&indicator, &tree).unwrap();
        assert_abs_diff_eq!(factor.get(0), 1.0, epsilon = 1e-12);
        assert_eq!(sub[0].as_slice(), &[0.5, 0.25, 0.25, 0.0]);
        // Factors with zero mass fall back to uniform sub-weights.
        assert_eq!(warnings.len(), 4);
        assert_eq!(sub[1].as_slice(), &[0.25, 0.25, 0.25, 0.25]);
    }
}
