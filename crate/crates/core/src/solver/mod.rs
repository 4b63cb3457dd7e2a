//! Linear-programming engine and bound computation.

mod bounds;
mod factored;
mod simplex;

pub use bounds::{bound_pce, BoundOptions, BoundsResult, ModeBounds, ModeDiagnostics, ModeSelection, Witness};
pub use factored::{solve_factored, FactoredOptions, FactoredSolution};
pub use simplex::{solve_lp, LpDiagnostics, LpSolution, LpStatus, Sense, SolverOptions};
