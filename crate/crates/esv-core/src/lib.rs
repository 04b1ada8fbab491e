//! Monetary valuation of urban and marine ecosystem services.
//!
//! The pipeline runs entropy-derived indicator weights, fuzzy grade
//! evaluation against shipped grade tables, per-service valuation
//! formulas, environmental-cost-aware benefit-cost analysis, and
//! LSTM-based re-evaluation of valuation time series.

pub mod cost_benefit;
pub mod forecast;
pub mod fuzzy;
pub mod model;
pub mod scenario;
pub mod valuation;
pub mod warnings;
pub mod weights;

pub use warnings::Warning;
