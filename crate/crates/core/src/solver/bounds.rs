//! End-to-end bounding: build the program(s) for a query, solve both senses
//! and collect witnesses and diagnostics.

use serde::Serialize;

use crate::effects::PceQuery;
use crate::error::{Error, Result};
use crate::model::{CausalGraph, ObservationalDistribution};
use crate::program::{build_factored, build_full_joint, FactoredProgram, FullJointProgram, Mode, ProgramOptions};
use crate::response::{confounded_components, FactorizationBlocks};
use crate::scalar::Scalar;
use crate::solver::factored::{solve_factored, FactoredOptions};
use crate::solver::simplex::{solve_lp, LpDiagnostics, LpStatus, Sense, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Full,
    Factored,
    Both,
}

impl ModeSelection {
    /// The full-joint interval is always computed: it is the sound one and
    /// verdicts rest on it. `Factored` and `Both` add the factored estimate.
    pub fn includes(self, mode: Mode) -> bool {
        match mode {
            Mode::FullJoint => true,
            Mode::Factored => self != ModeSelection::Full,
        }
    }
}

impl std::str::FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModeSelection::Full),
            "factored" => Ok(ModeSelection::Factored),
            "both" => Ok(ModeSelection::Both),
            other => Err(Error::Query(format!("unknown mode `{other}` (expected full, factored or both)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundOptions {
    pub mode: ModeSelection,
    pub program: ProgramOptions,
    pub solver: SolverOptions,
    pub factored: FactoredOptions,
    /// Blocks for factored mode; the confounded components when `None`.
    pub blocks: Option<FactorizationBlocks>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            mode: ModeSelection::Full,
            program: ProgramOptions::default(),
            solver: SolverOptions::default(),
            factored: FactoredOptions::default(),
            blocks: None,
        }
    }
}

impl BoundOptions {
    pub fn with_mode(mut self, mode: ModeSelection) -> Self {
        self.mode = mode;
        self
    }
}

/// A point attaining one end of an interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness<T> {
    /// Distribution over the program's joint profile space.
    Joint(Vec<T>),
    /// One distribution per factorization block.
    Factored(Vec<Vec<T>>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ModeDiagnostics {
    pub rows: usize,
    pub columns: usize,
    pub active_variables: Vec<String>,
    pub reduced: bool,
    pub lower: Option<LpDiagnostics>,
    pub upper: Option<LpDiagnostics>,
    pub blocks: Vec<usize>,
    pub objective_terms: usize,
    pub restarts_run: usize,
    pub restarts_feasible_lower: usize,
    pub restarts_feasible_upper: usize,
    pub sweeps: usize,
    /// Largest constraint violation of either witness.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeBounds<T> {
    pub mode: Mode,
    pub lower: T,
    pub upper: T,
    /// True when the interval comes from local search and lies inside the
    /// true range of the program.
    pub inner_estimate: bool,
    pub lower_witness: Witness<T>,
    pub upper_witness: Witness<T>,
    pub diagnostics: ModeDiagnostics,
}

#[derive(Clone, Debug)]
pub struct BoundsResult<T> {
    pub full: Option<ModeBounds<T>>,
    pub factored: Option<ModeBounds<T>>,
    /// Why the factored program had no feasible point, when it was requested
    /// and failed. Sampled data rarely satisfies the independences a
    /// factorization imposes exactly.
    pub factored_error: Option<String>,
    pub p_condition: T,
    pub full_program: Option<FullJointProgram<T>>,
    pub factored_program: Option<FactoredProgram<T>>,
}

impl<T: Scalar> BoundsResult<T> {
    /// The full-joint interval when present, otherwise the factored one.
    pub fn primary(&self) -> &ModeBounds<T> {
        self.full
            .as_ref()
            .or(self.factored.as_ref())
            .expect("at least one mode is solved")
    }

    pub fn lower(&self) -> T {
        self.primary().lower
    }

    pub fn upper(&self) -> T {
        self.primary().upper
    }
}

/// Bounds the path-specific counterfactual effect of `query` over every
/// model compatible with the graph and `obs`.
pub fn bound_pce<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    options: &BoundOptions,
) -> Result<BoundsResult<T>> {
    let (full, factored) = rayon::join(
        || {
            options
                .mode
                .includes(Mode::FullJoint)
                .then(|| solve_full(graph, obs, query, options))
                .transpose()
        },
        || {
            options
                .mode
                .includes(Mode::Factored)
                .then(|| solve_factored_mode(graph, obs, query, options))
                .transpose()
        },
    );
    let full = full?;
    let (factored, factored_error) = match factored {
        Ok(f) => (f, None),
        Err(Error::Infeasible) if full.is_some() => (None, Some(Error::Infeasible.to_string())),
        Err(e) => return Err(e),
    };
    let p_condition = full
        .as_ref()
        .map(|f| f.0.p_condition)
        .or(factored.as_ref().map(|f| f.0.p_condition))
        .ok_or_else(|| Error::Query("no mode selected".into()))?;
    let (full_program, full) = full.map(|(p, b)| (Some(p), Some(b))).unwrap_or((None, None));
    let (factored_program, factored) = factored.map(|(p, b)| (Some(p), Some(b))).unwrap_or((None, None));
    Ok(BoundsResult {
        full,
        factored,
        factored_error,
        p_condition,
        full_program,
        factored_program,
    })
}

fn solve_full<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    options: &BoundOptions,
) -> Result<(FullJointProgram<T>, ModeBounds<T>)> {
    let program = build_full_joint(graph, obs, query, &options.program)?;
    let (lo, hi) = rayon::join(
        || solve_lp(&program.lp, Sense::Min, &options.solver),
        || solve_lp(&program.lp, Sense::Max, &options.solver),
    );
    let (lo, hi) = (lo?, hi?);
    for s in [&lo, &hi] {
        match s.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::Infeasible),
            LpStatus::Unbounded => return Err(Error::Unbounded),
        }
    }
    let diagnostics = ModeDiagnostics {
        rows: program.lp.num_rows(),
        columns: program.lp.num_vars(),
        active_variables: program.active.vars().iter().map(|&v| graph.name(v).to_string()).collect(),
        reduced: program.reduced,
        lower: Some(lo.diagnostics),
        upper: Some(hi.diagnostics),
        residual: lo.diagnostics.residual.max(hi.diagnostics.residual),
        ..ModeDiagnostics::default()
    };
    let bounds = ModeBounds {
        mode: Mode::FullJoint,
        lower: lo.value,
        upper: hi.value,
        inner_estimate: false,
        lower_witness: Witness::Joint(lo.witness),
        upper_witness: Witness::Joint(hi.witness),
        diagnostics,
    };
    Ok((program, bounds))
}

fn solve_factored_mode<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    options: &BoundOptions,
) -> Result<(FactoredProgram<T>, ModeBounds<T>)> {
    let blocks = options.blocks.clone().unwrap_or_else(|| confounded_components(graph));
    let program = build_factored(graph, obs, query, &blocks, &options.program)?;
    let (lo, hi) = rayon::join(
        || solve_factored(&program, Sense::Min, &options.factored, &options.solver),
        || solve_factored(&program, Sense::Max, &options.factored, &options.solver),
    );
    let (lo, hi) = (lo?, hi?);
    let diagnostics = ModeDiagnostics {
        rows: program.rows.len(),
        columns: program.blocks.iter().map(|b| b.size()).sum(),
        active_variables: (0..graph.len()).map(|v| graph.name(v).to_string()).collect(),
        reduced: false,
        blocks: program.blocks.iter().map(|b| b.size()).collect(),
        objective_terms: program.objective.terms(),
        restarts_run: lo.restarts_run,
        restarts_feasible_lower: lo.restarts_feasible,
        restarts_feasible_upper: hi.restarts_feasible,
        sweeps: lo.sweeps + hi.sweeps,
        residual: lo.residual.max(hi.residual).to_f64_lossy(),
        ..ModeDiagnostics::default()
    };
    let bounds = ModeBounds {
        mode: Mode::Factored,
        lower: lo.value,
        upper: hi.value,
        inner_estimate: true,
        lower_witness: Witness::Factored(lo.blocks),
        upper_witness: Witness::Factored(hi.blocks),
        diagnostics,
    };
    Ok((program, bounds))
}
