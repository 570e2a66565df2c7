//! Mixed-integer linear programming: model container, a bounded revised
//! simplex with branch and bound, MPS I/O and an external solver bridge.

mod bnb;
mod error;
mod external;
mod lu;
mod model;
pub mod mps;
mod simplex;

pub use bnb::{relative_gap, solve_milp, MilpOptions, MilpSolution, MilpStatus, INTEGRALITY_TOL};
pub use error::MilpError;
pub use external::{
    accept_solution, parse_solution, solve_external, ExternalSolution, SolutionFile,
    REVALIDATION_TOL,
};
pub use model::{
    Constraint, MilpModel, ModelStatistics, RowId, Sense, VarId, VarKind, Variable, Violation,
};
pub use simplex::{solve_lp, Basis, LpOptions, LpSolution, LpStatus};
