//! Fire-risk analytics: county fire-occurrence modeling with Gamma/log-link
//! penalized-spline GAMs, and gradient-boosted probabilistic classification
//! of fire consequences with SHAP attribution and evaluation metrics.

// Negated float comparisons are how NaN gets rejected in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod rates;
pub mod gam;
pub mod firecat;
pub mod targets;
pub mod shap;
pub mod metrics;

pub use error::{Error, Result};
