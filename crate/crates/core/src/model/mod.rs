//! Causal graphs, observational distributions and oracle structural causal
//! models.

mod distribution;
mod graph;
pub mod io;
mod scm;

pub use distribution::{
    empirical_distribution, empirical_from_indices, Counts, ObservationalDistribution, INGEST_TOLERANCE,
    ORACLE_TOLERANCE,
};
pub use graph::{validate_graph, Assignment, CausalGraph, GraphSpec, VariableSpec};
pub use scm::{model_to_distribution, ExogenousBlock, OracleScm, ENUMERATION_CAP};
