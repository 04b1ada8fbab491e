//! Per-service monetary valuation: the four marine/coastal service
//! formulas, the urban unit value, and the project total.

use crate::warnings::Warning;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("{which} cost {value} is negative")]
    NegativeCost { which: &'static str, value: f64 },
    #[error("area must be positive")]
    ZeroArea,
    #[error("normalization constant Q must be positive")]
    ZeroQ,
    #[error("depth must be positive")]
    ZeroDepth,
    #[error("pollutant {index}: {which} {value} is negative")]
    NegativePollutant { index: usize, which: &'static str, value: f64 },
    #[error("landscape matrices differ in shape at row {row}: {left} vs {right}")]
    ShapeMismatch { row: usize, left: usize, right: usize },
    #[error("landscape use entry at ({row}, {col}) is {value}, expected 0 or 1")]
    NonBinaryUse { row: usize, col: usize, value: u8 },
    #[error("viscosity coefficient must satisfy 0 < sigma < 1, got {value}")]
    InvalidSigma { value: f64 },
    #[error("productivity must be nonnegative, got {value}")]
    NegativeProductivity { value: f64 },
    #[error("reference productivity must be positive")]
    ZeroReference,
    #[error("grade value rho must be nonnegative, got {value}")]
    NegativeRho { value: f64 },
    #[error("planning cost E must be nonnegative, got {value}")]
    NegativePlanningCost { value: f64 },
    #[error("unknown urban formula '{name}'")]
    UnknownFormula { name: String },
}

/// One pollutant species: annual environmental capacity X (ton/a) and
/// treatment cost C ($/ton).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pollutant {
    pub capacity: f64,
    pub treatment_cost: f64,
}

/// Inputs for the four marine/coastal service formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarineInputs {
    /// Cost of fixing CO2, $/m^2 a.
    pub cost_fix_co2: f64,
    /// Cost of releasing CO2, $/m^2 a.
    pub cost_release_co2: f64,
    pub pollutants: Vec<Pollutant>,
    /// Normalization constant Q; no default is supplied on purpose.
    pub q: f64,
    /// Water depth h, m.
    pub depth: f64,
    /// Sea area S, m^2 (shared by pollution control and fishery).
    pub sea_area: f64,
    /// Importance of landscape j in region i.
    pub landscape_importance: Vec<Vec<f64>>,
    /// Binary use matrix, same shape as the importance matrix.
    pub landscape_use: Vec<Vec<u8>>,
    /// Monetary value per landscape index point, $/m^2 a.
    pub landscape_unit_value: f64,
    /// Annual fishery revenue R_mf, $/a.
    pub fishery_revenue: f64,
    /// Annual fishing cost C_mf, $/a.
    pub fishery_cost: f64,
}

impl MarineInputs {
    pub fn validate(&self) -> Result<(), ValuationError> {
        if self.sea_area <= 0.0 {
            return Err(ValuationError::ZeroArea);
        }
        if self.depth <= 0.0 {
            return Err(ValuationError::ZeroDepth);
        }
        if self.q <= 0.0 {
            return Err(ValuationError::ZeroQ);
        }
        for (index, p) in self.pollutants.iter().enumerate() {
            if p.capacity < 0.0 {
                return Err(ValuationError::NegativePollutant {
                    index,
                    which: "capacity",
                    value: p.capacity,
                });
            }
            if p.treatment_cost < 0.0 {
                return Err(ValuationError::NegativePollutant {
                    index,
                    which: "treatment cost",
                    value: p.treatment_cost,
                });
            }
        }
        check_landscape_shapes(&self.landscape_importance, &self.landscape_use)?;
        Ok(())
    }
}

/// Inputs for the urban unit value formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanParams {
    /// Viscosity coefficient, 0 < sigma < 1.
    pub sigma: f64,
    /// Comprehensive productivity of urban land per unit area, $/m^2 a.
    pub p0: f64,
    /// Original environmental-protection cost in planning, $.
    pub planning_cost: f64,
    /// Project land area, m^2.
    pub land_area: f64,
    /// Grade monetary value from the fuzzy evaluation, $/m^2 a.
    pub rho: f64,
    /// Reference productivity; defaults to p0 when absent.
    pub p0_ref: Option<f64>,
}

impl UrbanParams {
    pub fn validate(&self) -> Result<(), ValuationError> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(ValuationError::InvalidSigma { value: self.sigma });
        }
        if self.p0 < 0.0 {
            return Err(ValuationError::NegativeProductivity { value: self.p0 });
        }
        if self.land_area <= 0.0 {
            return Err(ValuationError::ZeroArea);
        }
        if self.rho < 0.0 {
            return Err(ValuationError::NegativeRho { value: self.rho });
        }
        if self.planning_cost < 0.0 {
            return Err(ValuationError::NegativePlanningCost { value: self.planning_cost });
        }
        Ok(())
    }
}

/// Named reconstructions of the urban unit value formula. The source
/// equation is unrecoverable, so alternatives register here by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrbanFormula {
    /// sigma * rho * (P0 + E/S) / P0_ref, the bracket acting as a
    /// dimensionless uplift over the reference productivity.
    Uplift,
    /// sigma * rho, ignoring the planning-cost uplift.
    Plain,
}

impl UrbanFormula {
    pub fn by_name(name: &str) -> Result<Self, ValuationError> {
        match name {
            "uplift" => Ok(UrbanFormula::Uplift),
            "plain" => Ok(UrbanFormula::Plain),
            _ => Err(ValuationError::UnknownFormula { name: name.into() }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UrbanFormula::Uplift => "uplift",
            UrbanFormula::Plain => "plain",
        }
    }
}

impl Default for UrbanFormula {
    fn default() -> Self {
        UrbanFormula::Uplift
    }
}

/// Climate regulation service value: 1.63 Cost1 + 1.19 Cost2, $/m^2 a.
pub fn climate_regulation(cost_fix: f64, cost_release: f64) -> Result<f64, ValuationError> {
    if cost_fix < 0.0 {
        return Err(ValuationError::NegativeCost { which: "CO2 fixing", value: cost_fix });
    }
    if cost_release < 0.0 {
        return Err(ValuationError::NegativeCost { which: "CO2 release", value: cost_release });
    }
    Ok(1.63 * cost_fix + 1.19 * cost_release)
}

/// Pollution treatment and control service value per unit area, $/m^2 a:
/// P_ev = h * (sum X_i C_i / Q) / S.
pub fn pollution_control(
    pollutants: &[Pollutant],
    q: f64,
    depth: f64,
    sea_area: f64,
) -> Result<f64, ValuationError> {
    if sea_area <= 0.0 {
        return Err(ValuationError::ZeroArea);
    }
    if q <= 0.0 {
        return Err(ValuationError::ZeroQ);
    }
    for (index, p) in pollutants.iter().enumerate() {
        if p.capacity < 0.0 {
            return Err(ValuationError::NegativePollutant {
                index,
                which: "capacity",
                value: p.capacity,
            });
        }
        if p.treatment_cost < 0.0 {
            return Err(ValuationError::NegativePollutant {
                index,
                which: "treatment cost",
                value: p.treatment_cost,
            });
        }
    }
    let total_treatment = pollutants
        .iter()
        .fold(0.0, |acc, p| acc + p.capacity * p.treatment_cost);
    Ok(depth * (total_treatment / q) / sea_area)
}

fn check_landscape_shapes(
    importance: &[Vec<f64>],
    usage: &[Vec<u8>],
) -> Result<(), ValuationError> {
    if importance.len() != usage.len() {
        return Err(ValuationError::ShapeMismatch {
            row: 0,
            left: importance.len(),
            right: usage.len(),
        });
    }
    for (row, (u_row, i_row)) in importance.iter().zip(usage).enumerate() {
        if u_row.len() != i_row.len() {
            return Err(ValuationError::ShapeMismatch {
                row,
                left: u_row.len(),
                right: i_row.len(),
            });
        }
        for (col, &bit) in i_row.iter().enumerate() {
            if bit > 1 {
                return Err(ValuationError::NonBinaryUse { row, col, value: bit });
            }
        }
    }
    Ok(())
}

/// Landscape service: per-region importance index IS_i = sum_j U_ij I_ij,
/// and its monetary value = unit_value * mean(IS), $/m^2 a.
pub fn landscape_value(
    importance: &[Vec<f64>],
    usage: &[Vec<u8>],
    unit_value: f64,
) -> Result<(Vec<f64>, f64), ValuationError> {
    check_landscape_shapes(importance, usage)?;
    if importance.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    let index: Vec<f64> = importance
        .iter()
        .zip(usage)
        .map(|(u_row, i_row)| {
            u_row.iter().zip(i_row).fold(0.0, |acc, (u, &i)| acc + u * f64::from(i))
        })
        .collect();
    let mean = index.iter().fold(0.0, |acc, v| acc + v) / index.len() as f64;
    Ok((index, unit_value * mean))
}

/// Fishery resource service value: (R_mf - C_mf) / S, $/m^2 a. A negative
/// result (fishing at a loss) is preserved and flagged.
pub fn fishery_value(
    revenue: f64,
    cost: f64,
    sea_area: f64,
) -> Result<(f64, Option<Warning>), ValuationError> {
    if sea_area <= 0.0 {
        return Err(ValuationError::ZeroArea);
    }
    let value = (revenue - cost) / sea_area;
    let warning =
        (value < 0.0).then_some(Warning::NegativeFisheryValue { value });
    Ok((value, warning))
}

/// Urban ecosystem unit value under the default formula.
pub fn urban_unit_value(params: &UrbanParams) -> Result<f64, ValuationError> {
    urban_unit_value_with(params, UrbanFormula::default())
}

/// Urban ecosystem unit value under a named formula reconstruction.
pub fn urban_unit_value_with(
    params: &UrbanParams,
    formula: UrbanFormula,
) -> Result<f64, ValuationError> {
    params.validate()?;
    match formula {
        UrbanFormula::Uplift => {
            let reference = params.p0_ref.unwrap_or(params.p0);
            if reference <= 0.0 {
                return Err(ValuationError::ZeroReference);
            }
            let uplift = (params.p0 + params.planning_cost / params.land_area) / reference;
            Ok(params.sigma * params.rho * uplift)
        }
        UrbanFormula::Plain => Ok(params.sigma * params.rho),
    }
}

/// The five service components with their totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceValuation {
    /// Unit values, $/m^2 a, in a fixed component order.
    pub climate_regulation: f64,
    pub pollution_control: f64,
    pub landscape: f64,
    pub fishery: f64,
    pub urban: f64,
    /// Sum of the five components, $/m^2 a.
    pub total_unit_value: f64,
    /// total_unit_value * area, $/a.
    pub total_annual_value: f64,
}

impl ServiceValuation {
    pub fn components(&self) -> [(&'static str, f64); 5] {
        [
            ("climate regulation", self.climate_regulation),
            ("pollution control", self.pollution_control),
            ("landscape", self.landscape),
            ("fishery", self.fishery),
            ("urban", self.urban),
        ]
    }
}

/// Combines the four marine unit values and the urban unit value over a
/// project area. Negative components are kept but flagged.
pub fn total_service_value(
    marine: [f64; 4],
    urban: f64,
    area: f64,
) -> Result<(ServiceValuation, Vec<Warning>), ValuationError> {
    if area <= 0.0 {
        return Err(ValuationError::ZeroArea);
    }
    let valuation = ServiceValuation {
        climate_regulation: marine[0],
        pollution_control: marine[1],
        landscape: marine[2],
        fishery: marine[3],
        urban,
        total_unit_value: marine[0] + marine[1] + marine[2] + marine[3] + urban,
        total_annual_value: (marine[0] + marine[1] + marine[2] + marine[3] + urban) * area,
    };
    let warnings = valuation
        .components()
        .iter()
        .filter(|(_, v)| *v < 0.0)
        .map(|(name, v)| Warning::NegativeComponent { service: (*name).into(), value: *v })
        .collect();
    Ok((valuation, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn climate_regulation_examples() {
        assert_eq!(climate_regulation(0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(climate_regulation(1.0, 1.0).unwrap(), 2.82, epsilon = 1e-12);
        assert_abs_diff_eq!(climate_regulation(0.01, 0.003).unwrap(), 0.01987, epsilon = 1e-12);
        assert!(matches!(
            climate_regulation(-1.0, 0.0),
            Err(ValuationError::NegativeCost { .. })
        ));
    }

    #[test]
    fn pollution_control_examples() {
        assert_eq!(pollution_control(&[], 1.0, 1.0, 1.0).unwrap(), 0.0);
        let one = [Pollutant { capacity: 2.0, treatment_cost: 3.0 }];
        assert_eq!(pollution_control(&one, 1.0, 1.0, 1.0).unwrap(), 6.0);
        assert_eq!(pollution_control(&one, 1.0, 1.0, 0.0).unwrap_err(), ValuationError::ZeroArea);
        assert_eq!(pollution_control(&one, 0.0, 1.0, 1.0).unwrap_err(), ValuationError::ZeroQ);
    }

    #[test]
    fn landscape_value_examples() {
        let (index, value) =
            landscape_value(&[vec![2.0, 3.0]], &[vec![0, 0]], 1.0).unwrap();
        assert_eq!(index, vec![0.0]);
        assert_eq!(value, 0.0);
        let (index, _) = landscape_value(&[vec![2.0, 3.0]], &[vec![1, 0]], 1.0).unwrap();
        assert_eq!(index, vec![2.0]);
        let ones_u = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let ones_i = vec![vec![1, 1], vec![1, 1]];
        let (_, value) = landscape_value(&ones_u, &ones_i, 1.0).unwrap();
        assert_eq!(value, 2.0);
    }

    #[test]
    fn landscape_rejects_shape_mismatch() {
        let err = landscape_value(&[vec![1.0, 2.0]], &[vec![1]], 1.0).unwrap_err();
        assert!(matches!(err, ValuationError::ShapeMismatch { .. }));
    }

    #[test]
    fn fishery_value_examples() {
        assert_eq!(fishery_value(100.0, 100.0, 10.0).unwrap(), (0.0, None));
        assert_eq!(fishery_value(1000.0, 200.0, 400.0).unwrap().0, 2.0);
        let (value, warning) = fishery_value(0.0, 100.0, 10.0).unwrap();
        assert_eq!(value, -10.0);
        assert_eq!(warning, Some(Warning::NegativeFisheryValue { value: -10.0 }));
        assert_eq!(fishery_value(1.0, 1.0, 0.0).unwrap_err(), ValuationError::ZeroArea);
    }

    #[test]
    fn urban_unit_value_reduces_at_zero_planning_cost() {
        let params = UrbanParams {
            sigma: 0.95,
            p0: 2.0,
            planning_cost: 0.0,
            land_area: 1e6,
            rho: 0.56,
            p0_ref: None,
        };
        assert_abs_diff_eq!(urban_unit_value(&params).unwrap(), 0.56 * 0.95, epsilon = 1e-12);
    }

    #[test]
    fn urban_unit_value_zero_rho_is_zero() {
        let params = UrbanParams {
            sigma: 0.5,
            p0: 2.0,
            planning_cost: 1e6,
            land_area: 1e6,
            rho: 0.0,
            p0_ref: None,
        };
        assert_eq!(urban_unit_value(&params).unwrap(), 0.0);
    }

    #[test]
    fn urban_unit_value_validates_sigma() {
        let params = UrbanParams {
            sigma: 1.0,
            p0: 2.0,
            planning_cost: 0.0,
            land_area: 1e6,
            rho: 0.5,
            p0_ref: None,
        };
        assert!(matches!(
            urban_unit_value(&params),
            Err(ValuationError::InvalidSigma { .. })
        ));
    }

    #[test]
    fn urban_formula_registry() {
        assert_eq!(UrbanFormula::by_name("uplift").unwrap(), UrbanFormula::Uplift);
        assert_eq!(UrbanFormula::by_name("plain").unwrap(), UrbanFormula::Plain);
        assert!(matches!(
            UrbanFormula::by_name("other"),
            Err(ValuationError::UnknownFormula { .. })
        ));
        let params = UrbanParams {
            sigma: 0.8,
            p0: 2.0,
            planning_cost: 2.5e6,
            land_area: 5e6,
            rho: 0.56,
            p0_ref: None,
        };
        let plain = urban_unit_value_with(&params, UrbanFormula::Plain).unwrap();
        assert_abs_diff_eq!(plain, 0.8 * 0.56, epsilon = 1e-15);
    }

    #[test]
    fn total_city_l_components() {
        let (valuation, warnings) =
            total_service_value([0.02, 0.60, 0.11, 0.32], 0.56, 1.0).unwrap();
        assert_abs_diff_eq!(valuation.total_unit_value, 1.61, epsilon = 1e-12);
        assert!(warnings.is_empty());
    }

    #[test]
    fn total_trivial_cases() {
        let (v, _) = total_service_value([0.0; 4], 0.0, 1.0).unwrap();
        assert_eq!(v.total_unit_value, 0.0);
        let (v, _) = total_service_value([1.0, 0.0, 0.0, 0.0], 0.0, 2.0).unwrap();
        assert_eq!(v.total_annual_value, 2.0);
    }

    #[test]
    fn total_flags_negative_component() {
        let (_, warnings) = total_service_value([0.1, 0.2, 0.0, -0.5], 0.3, 1.0).unwrap();
        assert_eq!(
            warnings,
            vec![Warning::NegativeComponent { service: "fishery".into(), value: -0.5 }]
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn climate_regulation_is_linear(
                c1 in 0.0f64..1e3,
                c2 in 0.0f64..1e3,
                scale in 0.001f64..1e3,
            ) {
                let base = climate_regulation(c1, c2).unwrap();
                let scaled = climate_regulation(scale * c1, scale * c2).unwrap();
                let expected = scale * base;
                prop_assert!((scaled - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            }

            #[test]
            fn pollution_control_is_linear_in_costs(
                x in 0.0f64..1e4,
                c in 0.0f64..1e4,
                q in 0.1f64..100.0,
                h in 0.1f64..100.0,
                s in 1.0f64..1e6,
                scale in 0.001f64..1e3,
            ) {
                let one = [Pollutant { capacity: x, treatment_cost: c }];
                let scaled_input = [Pollutant { capacity: x, treatment_cost: scale * c }];
                let base = pollution_control(&one, q, h, s).unwrap();
                let scaled = pollution_control(&scaled_input, q, h, s).unwrap();
                prop_assert!((scaled - scale * base).abs() <= 1e-12 * (scale * base).abs().max(1.0));
            }

            #[test]
            fn pollutant_split_is_invariant(
                x in 0.0f64..1e4,
                c in 0.0f64..1e4,
                q in 0.1f64..100.0,
                h in 0.1f64..100.0,
                s in 1.0f64..1e6,
            ) {
                let whole = [Pollutant { capacity: x, treatment_cost: c }];
                let halves = [
                    Pollutant { capacity: x / 2.0, treatment_cost: c },
                    Pollutant { capacity: x / 2.0, treatment_cost: c },
                ];
                let a = pollution_control(&whole, q, h, s).unwrap();
                let b = pollution_control(&halves, q, h, s).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }

            #[test]
            fn fishery_is_linear(
                r in 0.0f64..1e6,
                c in 0.0f64..1e6,
                s in 1.0f64..1e6,
                scale in 0.001f64..1e3,
            ) {
                let base = fishery_value(r, c, s).unwrap().0;
                let scaled = fishery_value(scale * r, scale * c, s).unwrap().0;
                prop_assert!((scaled - scale * base).abs() <= 1e-9 * (scale * base).abs().max(1.0));
            }

            #[test]
            fn total_equals_component_sum(
                a in -10.0f64..10.0,
                b in 0.0f64..10.0,
                c in 0.0f64..10.0,
                d in -10.0f64..10.0,
                u in 0.0f64..10.0,
                area in 0.1f64..1e6,
            ) {
                let (v, _) = total_service_value([a, b, c, d], u, area).unwrap();
                let sum: f64 = v.components().iter().map(|(_, x)| x).sum();
                prop_assert!((v.total_unit_value - sum).abs() <= 1e-12);
                prop_assert!((v.total_annual_value - v.total_unit_value * area).abs()
                    <= 1e-12 * v.total_annual_value.abs().max(1.0));
            }

            #[test]
            fn urban_value_is_monotone(
                sigma in 0.05f64..0.95,
                rho in 0.0f64..2.0,
                e in 0.0f64..1e7,
                bump in 0.001f64..0.04,
            ) {
                let params = UrbanParams {
                    sigma, p0: 2.0, planning_cost: e, land_area: 1e6, rho, p0_ref: None,
                };
                let base = urban_unit_value(&params).unwrap();
                let more_rho = UrbanParams { rho: rho + 0.1, ..params.clone() };
                prop_assert!(urban_unit_value(&more_rho).unwrap() >= base);
                let more_sigma = UrbanParams { sigma: sigma + bump, ..params.clone() };
                prop_assert!(urban_unit_value(&more_sigma).unwrap() >= base);
                let more_e = UrbanParams { planning_cost: e + 1e5, ..params };
                prop_assert!(urban_unit_value(&more_e).unwrap() >= base);
            }
        }
    }
}
