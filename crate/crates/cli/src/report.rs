//! Machine-readable run reports.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use pcbound::fairness::Verdict;
use pcbound::solver::{ModeBounds, ModeDiagnostics};
use pcbound::{CausalGraph, PceQuery, VerdictKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "pcbound";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        FileDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Inputs {
    pub graph: FileDigest,
    /// `csv` for sampled records, `dist` for a joint table.
    pub data_kind: &'static str,
    pub data: FileDigest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionEcho {
    pub variable: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryEcho {
    pub notion: Option<String>,
    pub protected: String,
    pub decision: String,
    pub s0: String,
    pub s1: String,
    pub y: String,
    pub condition: Vec<ConditionEcho>,
    pub pi: Vec<String>,
    pub p_condition: f64,
}

impl QueryEcho {
    pub fn new(graph: &CausalGraph, notion: Option<String>, query: &PceQuery, p_condition: f64) -> Self {
        let (s, d) = (graph.protected(), graph.decision());
        QueryEcho {
            notion,
            protected: graph.name(s).to_string(),
            decision: graph.name(d).to_string(),
            s0: graph.label(s, query.s0).to_string(),
            s1: graph.label(s, query.s1).to_string(),
            y: graph.label(d, query.y_target).to_string(),
            condition: query
                .condition
                .iter()
                .map(|&(v, x)| ConditionEcho {
                    variable: graph.name(v).to_string(),
                    value: graph.label(v, x).to_string(),
                })
                .collect(),
            pi: query.pi.format(graph),
            p_condition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalReport {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    /// True when the interval is a local-search estimate lying inside the
    /// exact range of its program.
    pub inner_estimate: bool,
    pub diagnostics: ModeDiagnostics,
}

impl IntervalReport {
    pub fn new(bounds: &ModeBounds<f64>) -> Self {
        IntervalReport {
            lower: bounds.lower,
            upper: bounds.upper,
            width: bounds.upper - bounds.lower,
            inner_estimate: bounds.inner_estimate,
            diagnostics: bounds.diagnostics.clone(),
        }
    }
}

/// Every setting that influences the numbers in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub tau: f64,
    pub min_support: f64,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub sweep_tol: f64,
    pub factored_feasibility_tol: f64,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub residual_tol: f64,
    pub presolve: bool,
    pub profile_cap: usize,
    pub response_cap: usize,
    pub auto_reduce: bool,
    pub ingest_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub tool: ToolInfo,
    pub inputs: Inputs,
    pub query: QueryEcho,
    pub full: IntervalReport,
    pub factored: Option<IntervalReport>,
    /// Set when the factored interval was requested but has no feasible
    /// point.
    pub factored_error: Option<String>,
    pub verdict: Verdict,
    pub config: ConfigEcho,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictSummary {
    pub fair: usize,
    pub unfair: usize,
    pub uncertain: usize,
    pub total: usize,
}

impl VerdictSummary {
    pub fn tally<'a>(reports: impl IntoIterator<Item = &'a RunReport>) -> Self {
        let mut s = VerdictSummary::default();
        for r in reports {
            match r.verdict.kind {
                VerdictKind::Fair => s.fair += 1,
                VerdictKind::Unfair => s.unfair += 1,
                VerdictKind::Uncertain => s.uncertain += 1,
            }
            s.total += 1;
        }
        s
    }
}

/// A condition cell left out of an audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedCell {
    pub condition: Vec<ConditionEcho>,
    pub p_condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub schema: u32,
    pub tool: ToolInfo,
    pub notion: Option<String>,
    pub open_variables: Vec<String>,
    pub reports: Vec<RunReport>,
    pub skipped: Vec<SkippedCell>,
    pub summary: VerdictSummary,
    pub warnings: Vec<String>,
}

/// Exact effect of a simulated model, written next to the simulated data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruthReport {
    pub schema: u32,
    pub tool: ToolInfo,
    pub query: QueryEcho,
    pub value: f64,
    pub path_world: f64,
    pub reference_world: f64,
}
