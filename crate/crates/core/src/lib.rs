//! Achievable distortion regions, power requirements and conference-link
//! requirements for sending a bivariate Gaussian source over a two-user
//! Gaussian multiple-access channel whose first encoder can talk to the
//! second over a rate-limited link.
//!
//! Rates are in bits and distortions are normalized by the source variance.

pub mod error;
pub mod model;
pub mod report;

pub mod rdlib;
pub mod vqscheme;
pub mod capacity;
pub mod separation;
pub mod bounds;
pub mod montecarlo;
pub mod search;
pub mod cli;

mod optim;

pub use error::{Error, Result};
pub use model::{validate_problem, ChannelSpec, ConfCapacity, DistortionPair, RatePoint, SourceSpec, ValidatedProblem};
pub use report::{FeasibilityReport, Slack, Witness};
pub use search::{OptimizationResult, Scheme};
pub use vqscheme::VqConfig;
