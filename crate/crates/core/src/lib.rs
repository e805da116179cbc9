//! Score-based prior-data conflict checks.
//!
//! A check embeds the prior in a one-parameter family, uses the derivative of
//! the log marginal likelihood in that parameter as the test statistic, and
//! calibrates it against draws from the prior predictive distribution.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Component loops index several parallel arrays.
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod engine;
pub mod error;
pub mod lasso;
pub mod quadrature;
pub mod quantum;
pub mod rng;
pub mod special;

pub use engine::{
    hierarchical_check, mc_p_value, mixture_score, power_curve, power_study, reference_distribution,
    CheckResult, DrawsSummary, McConfig, PowerCurve, PriorExpansionSpec, ReferenceDistribution, Tail,
};
pub use error::{Error, Result};
pub use rng::{SeededStream, DEFAULT_SEED};
