//! Project ledger and benefit-cost ratios with and without the monetized
//! environmental cost of the project's ecosystem services.

use crate::valuation::ServiceValuation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostBenefitError {
    #[error("total cost is zero; the ratio is undefined")]
    ZeroCost,
    #[error("{category} entry '{label}' is negative ({value})")]
    NegativeEntry { category: &'static str, label: String, value: f64 },
    #[error("ledger area must be positive")]
    InvalidArea,
    #[error("horizon must be at least one year")]
    InvalidHorizon,
    #[error("discount rate must be nonnegative and finite, got {value}")]
    InvalidDiscountRate { value: f64 },
}

/// Tangible and intangible cost lines, benefit lines, project area and
/// evaluation horizon. Immutable during computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectLedger {
    pub tangible_costs: BTreeMap<String, f64>,
    pub intangible_costs: BTreeMap<String, f64>,
    pub benefits: BTreeMap<String, f64>,
    /// Project land area, m^2.
    pub area: f64,
    pub horizon_years: u32,
}

impl ProjectLedger {
    pub fn validate(&self) -> Result<(), CostBenefitError> {
        for (category, map) in [
            ("tangible cost", &self.tangible_costs),
            ("intangible cost", &self.intangible_costs),
            ("benefit", &self.benefits),
        ] {
            for (label, &value) in map {
                if !value.is_finite() || value < 0.0 {
                    return Err(CostBenefitError::NegativeEntry {
                        category,
                        label: label.clone(),
                        value,
                    });
                }
            }
        }
        if !(self.area > 0.0) {
            return Err(CostBenefitError::InvalidArea);
        }
        if self.horizon_years < 1 {
            return Err(CostBenefitError::InvalidHorizon);
        }
        Ok(())
    }

    // fold from +0.0: an empty category totals positive zero, not the
    // -0.0 that `Iterator::sum` yields for empty float iterators.
    pub fn total_tangible(&self) -> f64 {
        self.tangible_costs.values().fold(0.0, |acc, v| acc + v)
    }

    pub fn total_intangible(&self) -> f64 {
        self.intangible_costs.values().fold(0.0, |acc, v| acc + v)
    }

    pub fn total_costs(&self) -> f64 {
        self.total_tangible() + self.total_intangible()
    }

    pub fn total_benefits(&self) -> f64 {
        self.benefits.values().fold(0.0, |acc, v| acc + v)
    }
}

/// Environmental cost of occupying the project area for the horizon:
/// total unit value x area x years.
pub fn environmental_cost(valuation: &ServiceValuation, area: f64, horizon_years: u32) -> f64 {
    valuation.total_unit_value * area * f64::from(horizon_years)
}

/// Sum of per-year discount factors over the horizon; equals the year
/// count at rate zero. Hook for discounted environmental cost.
pub fn discounted_years(horizon_years: u32, rate: f64) -> Result<f64, CostBenefitError> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(CostBenefitError::InvalidDiscountRate { value: rate });
    }
    if rate == 0.0 {
        return Ok(f64::from(horizon_years));
    }
    Ok((1..=horizon_years).map(|t| (1.0 + rate).powi(-(t as i32))).sum())
}

/// Benefits over costs, the env cost (when given) entering the cost side.
pub fn benefit_cost_ratio(
    ledger: &ProjectLedger,
    env_cost: Option<f64>,
) -> Result<f64, CostBenefitError> {
    let costs = ledger.total_costs() + env_cost.unwrap_or(0.0);
    if costs <= 0.0 {
        return Err(CostBenefitError::ZeroCost);
    }
    Ok(ledger.total_benefits() / costs)
}

/// Comparison options. The avoided-degradation credit models an
/// environmental benefit entering the benefit side of the "with" scenario;
/// it is off unless explicitly configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbrOptions {
    pub avoided_degradation_benefit: Option<f64>,
    pub discount_rate: f64,
}

impl Default for CbrOptions {
    fn default() -> Self {
        CbrOptions { avoided_degradation_benefit: None, discount_rate: 0.0 }
    }
}

/// Before/after comparison of the benefit-cost ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbrReport {
    /// Ratio direction, recorded so readers need not guess.
    pub direction: String,
    pub ratio_without_env: f64,
    pub ratio_with_env: f64,
    /// ratio_with_env - ratio_without_env.
    pub delta: f64,
    pub env_cost: f64,
    pub avoided_degradation_benefit: f64,
}

/// Computes both ratios and their signed difference.
pub fn compare_scenarios(
    ledger: &ProjectLedger,
    valuation: &ServiceValuation,
    options: &CbrOptions,
) -> Result<CbrReport, CostBenefitError> {
    ledger.validate()?;
    let years = discounted_years(ledger.horizon_years, options.discount_rate)?;
    let env_cost = valuation.total_unit_value * ledger.area * years;
    let credit = options.avoided_degradation_benefit.unwrap_or(0.0);

    let base_costs = ledger.total_costs();
    if base_costs <= 0.0 {
        return Err(CostBenefitError::ZeroCost);
    }
    let ratio_without = ledger.total_benefits() / base_costs;
    let with_costs = base_costs + env_cost;
    if with_costs <= 0.0 {
        return Err(CostBenefitError::ZeroCost);
    }
    let ratio_with = (ledger.total_benefits() + credit) / with_costs;

    Ok(CbrReport {
        direction: "benefits/costs".to_string(),
        ratio_without_env: ratio_without,
        ratio_with_env: ratio_with,
        delta: ratio_with - ratio_without,
        env_cost,
        avoided_degradation_benefit: credit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::total_service_value;
    use approx::assert_abs_diff_eq;

    fn ledger(benefits: f64, costs: f64) -> ProjectLedger {
        ProjectLedger {
            tangible_costs: BTreeMap::from([("capital".into(), costs)]),
            intangible_costs: BTreeMap::new(),
            benefits: BTreeMap::from([("direct".into(), benefits)]),
            area: 1.0,
            horizon_years: 1,
        }
    }

    fn valuation(unit: f64) -> ServiceValuation {
        total_service_value([unit, 0.0, 0.0, 0.0], 0.0, 1.0).unwrap().0
    }

    #[test]
    fn environmental_cost_examples() {
        let v = total_service_value([0.02, 0.60, 0.11, 0.32], 0.56, 1e6).unwrap().0;
        assert_abs_diff_eq!(environmental_cost(&v, 1e6, 1), 1.61e6, epsilon = 1e-3);
        assert_eq!(environmental_cost(&valuation(0.0), 1e6, 10), 0.0);
        assert_eq!(environmental_cost(&valuation(1.0), 1.0, 10), 10.0);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(benefit_cost_ratio(&ledger(100.0, 200.0), None).unwrap(), 0.5);
        assert_eq!(benefit_cost_ratio(&ledger(100.0, 200.0), Some(50.0)).unwrap(), 0.4);
        assert_eq!(
            benefit_cost_ratio(&ledger(100.0, 0.0), None).unwrap_err(),
            CostBenefitError::ZeroCost
        );
    }

    #[test]
    fn compare_adds_env_cost_to_denominator() {
        let l = ledger(100.0, 200.0);
        let report =
            compare_scenarios(&l, &valuation(50.0), &CbrOptions::default()).unwrap();
        assert_eq!(report.ratio_without_env, 0.5);
        assert_eq!(report.ratio_with_env, 0.4);
        assert_abs_diff_eq!(report.delta, -0.1, epsilon = 1e-12);
        assert!(report.ratio_with_env < report.ratio_without_env);
    }

    #[test]
    fn compare_with_zero_env_cost_is_neutral() {
        let l = ledger(100.0, 200.0);
        let report = compare_scenarios(&l, &valuation(0.0), &CbrOptions::default()).unwrap();
        assert_eq!(report.ratio_without_env, report.ratio_with_env);
        assert_eq!(report.delta, 0.0);
    }

    #[test]
    fn avoided_degradation_credit_enters_benefit_side() {
        let l = ledger(100.0, 200.0);
        let options = CbrOptions {
            avoided_degradation_benefit: Some(20.0),
            discount_rate: 0.0,
        };
        let report = compare_scenarios(&l, &valuation(50.0), &options).unwrap();
        assert_eq!(report.ratio_without_env, 0.5);
        assert_abs_diff_eq!(report.ratio_with_env, 0.48, epsilon = 1e-12);
    }

    #[test]
    fn discount_hook_defaults_to_plain_years() {
        assert_eq!(discounted_years(30, 0.0).unwrap(), 30.0);
        let discounted = discounted_years(30, 0.05).unwrap();
        assert!(discounted < 30.0 && discounted > 0.0);
        assert!(discounted_years(1, -0.5).is_err());
    }

    #[test]
    fn ledger_rejects_negative_entries() {
        let mut l = ledger(100.0, 200.0);
        l.benefits.insert("bad".into(), -1.0);
        assert!(matches!(
            l.validate(),
            Err(CostBenefitError::NegativeEntry { category: "benefit", .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ratio_strictly_decreases_in_env_cost(
                benefits in 1.0f64..1e6,
                costs in 1.0f64..1e6,
                env_a in 0.0f64..1e6,
                extra in 1.0f64..1e6,
            ) {
                let l = ledger(benefits, costs);
                let low = benefit_cost_ratio(&l, Some(env_a)).unwrap();
                let high = benefit_cost_ratio(&l, Some(env_a + extra)).unwrap();
                prop_assert!(high < low);
            }

            #[test]
            fn delta_is_antisymmetric_under_swap(
                benefits in 1.0f64..1e6,
                costs in 1.0f64..1e6,
                unit in 0.0f64..10.0,
            ) {
                let l = ledger(benefits, costs);
                let report =
                    compare_scenarios(&l, &valuation(unit), &CbrOptions::default()).unwrap();
                let swapped = report.ratio_without_env - report.ratio_with_env;
                prop_assert!((report.delta + swapped).abs() <= 1e-15);
            }

            #[test]
            fn ledger_totals_are_permutation_invariant(
                values in proptest::collection::vec(0.0f64..1e5, 2..8),
            ) {
                let forward: BTreeMap<String, f64> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (format!("item{i}"), v))
                    .collect();
                let reversed: BTreeMap<String, f64> = values
                    .iter()
                    .rev()
                    .enumerate()
                    .map(|(i, &v)| (format!("item{i}"), v))
                    .collect();
                let a = ProjectLedger {
                    tangible_costs: forward,
                    intangible_costs: BTreeMap::new(),
                    benefits: BTreeMap::new(),
                    area: 1.0,
                    horizon_years: 1,
                };
                let b = ProjectLedger { tangible_costs: reversed, ..a.clone() };
                // Summation order differs, so allow round-off at the ulp level.
                let scale = a.total_costs().abs().max(1.0);
                prop_assert!((a.total_costs() - b.total_costs()).abs() <= 1e-12 * scale);
            }
        }
    }
}
