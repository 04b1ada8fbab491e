//! Non-fatal findings surfaced while validating or computing.
//!
//! Warnings are returned as values so callers (and tests) can assert on
//! them; nothing is written to a logger behind the caller's back.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A non-fatal finding attached to a computation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warning {
    /// A matrix column is entirely zero; entropy weights cannot be derived
    /// from it and downstream stages will reject the column.
    AllZeroColumn { col: usize },
    /// A weight vector did not sum to one and was renormalized on load.
    RenormalizedWeights { sum: f64 },
    /// A relation-matrix row did not sum to one and was renormalized.
    RenormalizedRelationRow { row: usize, sum: f64 },
    /// Every index had maximal entropy; uniform weights were substituted
    /// because the caller opted in.
    UniformWeightFallback,
    /// All entropy weights inside one factor group were zero; sub-weights
    /// fall back to uniform within the group.
    UniformSubWeights { factor: String },
    /// Fishery value is negative (fishing at a loss); preserved as-is.
    NegativeFisheryValue { value: f64 },
    /// A service component is negative; kept in the totals unchanged.
    NegativeComponent { service: String, value: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AllZeroColumn { col } => {
                write!(f, "column {col} is all zeros; its weight is undefined")
            }
            Warning::RenormalizedWeights { sum } => {
                write!(f, "weight vector summed to {sum}; renormalized to 1")
            }
            Warning::RenormalizedRelationRow { row, sum } => {
                write!(f, "relation matrix row {row} summed to {sum}; renormalized to 1")
            }
            Warning::UniformWeightFallback => {
                write!(f, "all indices at maximal entropy; uniform weights substituted")
            }
            Warning::UniformSubWeights { factor } => {
                write!(f, "factor '{factor}' has zero total weight; uniform sub-weights used")
            }
            Warning::NegativeFisheryValue { value } => {
                write!(f, "fishery value {value} is negative (fishing at a loss)")
            }
            Warning::NegativeComponent { service, value } => {
                write!(f, "service component '{service}' is negative ({value})")
            }
        }
    }
}
