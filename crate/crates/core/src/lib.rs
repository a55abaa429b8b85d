//! Leave-one-out instrumental-variable estimation of peer effects in
//! match-structured panels, plus a structural simulator with known truth.
//!
//! The pipeline runs ingest ([`panel`]) → exposure design ([`design`]) →
//! leave-one-out instruments ([`history`]) → sample restrictions and player
//! demeaning ([`within`]) → OLS / 2SLS ([`estimator`]) → tables ([`report`]).

pub mod design;
pub mod error;
pub mod estimator;
pub mod history;
pub mod linalg;
pub mod panel;
pub mod pipeline;
pub mod report;
pub mod simulator;
pub mod within;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{EstimationResult, FitOptions, VcovMode};
pub use panel::{MatchPanel, PlayerMatchRow};
