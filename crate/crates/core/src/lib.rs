//! Sharp bounds on path-specific counterfactual fairness of discrete decision
//! models.
//!
//! Unknown exogenous noise is replaced by finite response-function variables,
//! so every causal world compatible with a graph is a distribution over
//! response profiles. Observational constraints and the path-specific
//! counterfactual effect are both linear in that distribution, and the
//! tightest interval for the effect is the min/max of a linear program.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool uses.

pub mod effects;
pub mod error;
pub mod fairness;
pub mod model;
pub mod oracle;
pub mod program;
pub mod radix;
pub mod response;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use effects::{EdgeSide, NodePartition, PathSet, PceQuery};
pub use fairness::{NotionKind, NotionSpec, Verdict, VerdictKind};
pub use model::{CausalGraph, GraphSpec, VariableSpec};
pub use program::{ActiveSet, Mode};
pub use response::{FactorizationBlocks, ResponseFunctionTable};
pub use solver::{BoundOptions, ModeSelection, Sense};

pub type Distribution = model::ObservationalDistribution<f64>;
pub type Scm = model::OracleScm<f64>;
pub type BoundsResult = solver::BoundsResult<f64>;
pub type LinearProgram = program::LinearProgram<f64>;
pub type FullJointProgram = program::FullJointProgram<f64>;
pub type FactoredProgram = program::FactoredProgram<f64>;
pub type LpSolution = solver::LpSolution<f64>;
pub type GroundTruth = oracle::GroundTruth<f64>;
