//! Settlement, reporting and the staged pipeline behind the `campus-ems` binary.

pub mod pipeline;
pub mod report;
pub mod settle;
