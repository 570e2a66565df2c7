//! Campus energy hub: domain model, device dynamics, scenarios and the
//! two-stage stochastic MILP builder.

pub mod builder;
pub mod campus;
pub mod config;
pub mod defaults;
pub mod dynamics;
pub mod error;
pub mod history;
pub mod par;
pub mod scenario;
pub mod schedule;
pub mod synth;
pub mod units;

pub use campus::{validate, CampusModel, ValidationReport};
pub use error::{CoreError, Result};
