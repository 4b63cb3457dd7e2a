//! Command-line front end for bounding path-specific counterfactual fairness.
//!
//! Every command is a plain function returning its output so that tests can
//! run it inside a chosen thread pool; `main` only parses flags, writes the
//! output and maps the outcome to an exit code.

pub mod query;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use pcbound::effects::enumerate_causal_paths;
use pcbound::fairness::{self, direct_paths, redlining_paths, ErrorRatePaths, GroupCondition};
use pcbound::model::INGEST_TOLERANCE;
use pcbound::model::io::{distribution_to_json, model_to_json, parse_distribution, parse_model, read_csv_records, write_csv};
use pcbound::model::{empirical_distribution, model_to_distribution, CausalGraph};
use pcbound::oracle::{generate_for_graph, generate_model, ground_truth_pce, sample_dataset, GeneratorSpec, Topology};
use pcbound::solver::{bound_pce, BoundOptions, ModeSelection};
use pcbound::{Distribution, NotionKind, NotionSpec, Scm, VerdictKind};

use crate::query::{ConditionItem, QueryTemplate, TemplateInput};
use crate::report::{
    AuditReport, ConditionEcho, ConfigEcho, FileDigest, Inputs, IntervalReport, QueryEcho, RunReport, SkippedCell,
    ToolInfo, TruthReport, VerdictSummary, SCHEMA_VERSION,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PCBOUND_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCERTAIN: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "pcbound", version)]
#[command(about = "Bound path-specific counterfactual fairness from observational data and a causal graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bound one query and report its interval and verdict
    Bound(BoundArgs),
    /// Bound a query for every value combination of its condition variables
    Audit(AuditArgs),
    /// List the causal paths from the protected attribute to the decision
    Paths(PathsArgs),
    /// Generate a random model with hidden confounding and sample data from it
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Graph (model) JSON file
    #[arg(long)]
    pub graph: PathBuf,

    /// CSV of categorical records, one column per variable
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    pub data: Option<PathBuf>,

    /// JSON joint probability table
    #[arg(long)]
    pub dist: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ErrorRateArg {
    Direct,
    Indirect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    /// Condition on the reference group `S = s0`
    Protected,
    /// Average over the whole population
    None,
}

#[derive(Args, Debug, Clone, Default)]
pub struct QueryArgs {
    /// Fairness notion (total-effect, direct, indirect, individual-direct,
    /// group-direct, counterfactual, counterfactual-error-rate,
    /// individual-indirect)
    #[arg(long, value_parser = parse_notion)]
    pub notion: Option<NotionKind>,

    /// Path set: `all`, `direct`, `{"through": [...]}` or a JSON array of
    /// node-name arrays
    #[arg(long)]
    pub pi: Option<String>,

    /// Redlining attributes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub redlining: Vec<String>,

    /// Path choice for the counterfactual error rate
    #[arg(long, value_enum)]
    pub error_rate_paths: Option<ErrorRateArg>,

    /// Population of the system-level direct and indirect notions
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,

    /// Reference value of the protected attribute (default: its first label)
    #[arg(long)]
    pub s0: Option<String>,

    /// Intervention value of the protected attribute (default: its second label)
    #[arg(long)]
    pub s1: Option<String>,

    /// Decision value whose probability is contrasted (default: first label)
    #[arg(long)]
    pub y: Option<String>,

    /// Factual condition `name=label,...`; a bare `name` is enumerated by
    /// `audit`
    #[arg(long, value_delimiter = ',')]
    pub condition: Vec<ConditionItem>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Fairness threshold
    #[arg(long, default_value_t = fairness::DEFAULT_TAU)]
    pub tau: f64,

    /// Which programs to solve
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    pub mode: ModeSelection,

    /// Random starts of the factored local search
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,

    /// Seed of the factored local search
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Default for SolveArgs {
    fn default() -> Self {
        SolveArgs {
            tau: fairness::DEFAULT_TAU,
            mode: ModeSelection::Full,
            restarts: 32,
            seed: 0,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct BoundArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub solve: SolveArgs,

    /// Exit with status 2 when the verdict is uncertain
    #[arg(long)]
    pub strict: bool,

    /// Write the report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub solve: SolveArgs,

    /// Skip condition cells with smaller probability
    #[arg(long, default_value_t = 0.02)]
    pub min_support: f64,

    /// Exit with status 2 when any verdict is uncertain
    #[arg(long)]
    pub strict: bool,

    /// Write the report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PathsArgs {
    /// Graph (model) JSON file
    #[arg(long)]
    pub graph: PathBuf,

    /// Also list the paths crossing these attributes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub through: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Built-in topology (bow, kite, w, fig6, fig6-markovian)
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph", value_parser = parse_topology)]
    pub topology: Option<Topology>,

    /// Graph JSON to generate a model for
    #[arg(long)]
    pub graph: Option<PathBuf>,

    /// Number of values of each exogenous block
    #[arg(long, default_value_t = 100)]
    pub confounder_size: usize,

    /// Seed of model generation and sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of records to sample
    #[arg(short = 'n', long = "samples", default_value_t = 10_000)]
    pub samples: usize,

    /// Directory receiving model.json, data.csv, dist.json and truth.json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Also write the exact effect of the query flags under the model
    #[arg(long)]
    pub truth: bool,

    /// Also write the model's exact joint table as dist.json
    #[arg(long)]
    pub exact: bool,

    #[command(flatten)]
    pub query: QueryArgs,
}

fn parse_notion(s: &str) -> pcbound::Result<NotionKind> {
    s.parse()
}

fn parse_mode(s: &str) -> pcbound::Result<ModeSelection> {
    s.parse()
}

fn parse_topology(s: &str) -> pcbound::Result<Topology> {
    s.parse()
}

/// Builds the global pool from `PCBOUND_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    if threads == 0 {
        bail!("{THREADS_ENV} must be a positive integer, got `{value}`");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

/// Runs a parsed command line, writing its output, and returns the exit
/// status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Bound(args) => {
            let report = bound(&args)?;
            emit(&to_json(&report)?, args.out.as_deref())?;
            Ok(exit_code(args.strict, [report.verdict.kind]))
        }
        Command::Audit(args) => {
            let report = audit(&args)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(&to_json(&report)?, args.out.as_deref())?;
            Ok(exit_code(args.strict, report.reports.iter().map(|r| r.verdict.kind)))
        }
        Command::Paths(args) => {
            print!("{}", paths(&args)?);
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => {
            let written = simulate(&args)?;
            emit(&to_json(&written)?, None)?;
            Ok(EXIT_OK)
        }
    }
}

fn exit_code(strict: bool, verdicts: impl IntoIterator<Item = VerdictKind>) -> i32 {
    if strict && verdicts.into_iter().any(|v| v == VerdictKind::Uncertain) {
        EXIT_UNCERTAIN
    } else {
        EXIT_OK
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Loads a model file, keeping its digest.
pub fn load_graph(path: &Path) -> Result<(CausalGraph, Option<Scm>, FileDigest)> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let (graph, scm) = parse_model::<f64>(text).with_context(|| format!("parsing model {}", path.display()))?;
    Ok((graph, scm, FileDigest::of(path, &bytes)))
}

/// Loads the observational distribution named by `--data` or `--dist`.
pub fn load_distribution(input: &InputArgs, graph: &CausalGraph) -> Result<(Distribution, &'static str, FileDigest)> {
    match (&input.data, &input.dist) {
        (Some(path), None) => {
            let bytes = read(path)?;
            let records = read_csv_records(bytes.as_slice(), graph)
                .with_context(|| format!("reading records from {}", path.display()))?;
            let dist = empirical_distribution(&records, graph)
                .with_context(|| format!("tabulating records from {}", path.display()))?;
            Ok((dist, "csv", FileDigest::of(path, &bytes)))
        }
        (None, Some(path)) => {
            let bytes = read(path)?;
            let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
            let dist = parse_distribution(text, graph)
                .with_context(|| format!("parsing joint table {}", path.display()))?;
            Ok((dist, "dist", FileDigest::of(path, &bytes)))
        }
        _ => bail!("pass exactly one of --data and --dist"),
    }
}

fn template(graph: &CausalGraph, q: &QueryArgs) -> Result<QueryTemplate> {
    let notion = q.notion.map(|kind| {
        let mut n = NotionSpec::new(kind);
        if let Some(p) = q.error_rate_paths {
            n = n.with_error_rate_paths(match p {
                ErrorRateArg::Direct => ErrorRatePaths::Direct,
                ErrorRateArg::Indirect => ErrorRatePaths::Indirect,
            });
        }
        if let Some(g) = q.group {
            n = n.with_group_condition(match g {
                GroupArg::Protected => GroupCondition::Protected,
                GroupArg::None => GroupCondition::None,
            });
        }
        n
    });
    QueryTemplate::new(
        graph,
        TemplateInput {
            notion,
            pi: q.pi.as_deref(),
            redlining: &q.redlining,
            s0: q.s0.as_deref(),
            s1: q.s1.as_deref(),
            y: q.y.as_deref(),
            condition: &q.condition,
        },
    )
}

fn bound_options(solve: &SolveArgs) -> BoundOptions {
    let mut options = BoundOptions::default().with_mode(solve.mode);
    options.factored.restarts = solve.restarts;
    options.factored.seed = solve.seed;
    options
}

fn config_echo(solve: &SolveArgs, options: &BoundOptions, min_support: f64) -> ConfigEcho {
    ConfigEcho {
        mode: format!("{:?}", solve.mode).to_lowercase(),
        tau: solve.tau,
        min_support,
        restarts: options.factored.restarts,
        seed: options.factored.seed,
        max_sweeps: options.factored.max_sweeps,
        sweep_tol: options.factored.sweep_tol,
        factored_feasibility_tol: options.factored.feasibility_tol,
        feasibility_tol: options.solver.feasibility_tol,
        optimality_tol: options.solver.optimality_tol,
        pivot_tol: options.solver.pivot_tol,
        residual_tol: options.solver.residual_tol,
        presolve: options.solver.presolve,
        profile_cap: options.program.profile_cap,
        response_cap: options.program.response_cap,
        auto_reduce: options.program.auto_reduce,
        ingest_tolerance: INGEST_TOLERANCE,
    }
}

struct Loaded {
    graph: CausalGraph,
    dist: Distribution,
    inputs: Inputs,
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let (graph, _, graph_digest) = load_graph(&input.graph)?;
    let (dist, data_kind, data) = load_distribution(input, &graph)?;
    Ok(Loaded {
        graph,
        dist,
        inputs: Inputs {
            graph: graph_digest,
            data_kind,
            data,
        },
    })
}

fn bound_cell(
    loaded: &Loaded,
    template: &QueryTemplate,
    cell: &[(String, String)],
    solve: &SolveArgs,
    min_support: f64,
) -> Result<RunReport> {
    let graph = &loaded.graph;
    let query = template.query(graph, cell)?;
    let options = bound_options(solve);
    let result = bound_pce(graph, &loaded.dist, &query, &options).context("bounding the query")?;
    let full = result.full.as_ref().expect("the full-joint interval is always solved");
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        tool: ToolInfo::default(),
        inputs: loaded.inputs.clone(),
        query: QueryEcho::new(graph, template.notion.as_ref().map(|n| n.kind.to_string()), &query, result.p_condition),
        full: IntervalReport::new(full),
        factored: result.factored.as_ref().map(IntervalReport::new),
        factored_error: result.factored_error.clone(),
        verdict: fairness::verdict(&result, solve.tau),
        config: config_echo(solve, &options, min_support),
    })
}

/// Bounds a single query.
pub fn bound(args: &BoundArgs) -> Result<RunReport> {
    let loaded = load(&args.input)?;
    let template = template(&loaded.graph, &args.query)?;
    if template.notion.is_none() && !template.open.is_empty() {
        bail!("bare --condition entries are enumerated by `audit`; give `name=label` to `bound`");
    }
    bound_cell(&loaded, &template, &[], &args.solve, 0.0)
}

/// Bounds the query for every supported value combination of the open
/// condition variables, in canonical order.
pub fn audit(args: &AuditArgs) -> Result<AuditReport> {
    let loaded = load(&args.input)?;
    let graph = &loaded.graph;
    let template = template(graph, &args.query)?;
    let mut supported = Vec::new();
    let mut skipped = Vec::new();
    for cell in template.cells(graph) {
        let query = template.query(graph, &cell)?;
        let p = loaded.dist.marginal(&query.condition);
        if p >= args.min_support && p > 0.0 {
            supported.push(cell);
        } else {
            skipped.push(SkippedCell {
                condition: query
                    .condition
                    .iter()
                    .map(|&(v, x)| ConditionEcho {
                        variable: graph.name(v).to_string(),
                        value: graph.label(v, x).to_string(),
                    })
                    .collect(),
                p_condition: p,
            });
        }
    }
    let reports: Vec<RunReport> = supported
        .par_iter()
        .map(|cell| bound_cell(&loaded, &template, cell, &args.solve, args.min_support))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    if reports.is_empty() {
        warnings.push(format!(
            "no condition cell reaches the minimum support of {}",
            args.min_support
        ));
    }
    if let Some(e) = reports.iter().find_map(|r| r.factored_error.as_ref()) {
        warnings.push(format!("factored interval unavailable for some cells: {e}"));
    }
    Ok(AuditReport {
        schema: SCHEMA_VERSION,
        tool: ToolInfo::default(),
        notion: template.notion.as_ref().map(|n| n.kind.to_string()),
        open_variables: template.open.iter().map(|&v| graph.name(v).to_string()).collect(),
        summary: VerdictSummary::tally(&reports),
        reports,
        skipped,
        warnings,
    })
}

/// Lists every causal path with its index and the resolution of the `direct`
/// and `through` shorthands.
pub fn paths(args: &PathsArgs) -> Result<String> {
    let (graph, _, _) = load_graph(&args.graph)?;
    let all = enumerate_causal_paths(&graph);
    let index_of = |p: &[usize]| all.paths().iter().position(|q| q.as_slice() == p).expect("subset of all paths");
    let mut out = String::new();
    out.push_str(&format!(
        "causal paths from {} to {}: {}\n",
        graph.name(graph.protected()),
        graph.name(graph.decision()),
        all.len()
    ));
    for (i, line) in all.format(&graph).iter().enumerate() {
        out.push_str(&format!("  [{i}] {line}\n"));
    }
    match direct_paths(&graph) {
        Ok(d) => {
            let ids: Vec<String> = d.paths().iter().map(|p| format!("[{}]", index_of(p))).collect();
            out.push_str(&format!("direct: {}\n", ids.join(" ")));
        }
        Err(_) => out.push_str("direct: none (no edge from the protected attribute to the decision)\n"),
    }
    if !args.through.is_empty() {
        let set = redlining_paths(&graph, &args.through)?;
        out.push_str(&format!("through {}: {}\n", args.through.join(","), set.len()));
        for (p, line) in set.paths().iter().zip(set.format(&graph)) {
            out.push_str(&format!("  [{}] {line}\n", index_of(p)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimulateOutput {
    pub model: FileDigest,
    pub data: FileDigest,
    pub dist: Option<FileDigest>,
    pub truth: Option<FileDigest>,
}

/// Generates a model, samples records from it and optionally computes the
/// exact effect of the query flags.
pub fn simulate(args: &SimulateArgs) -> Result<SimulateOutput> {
    let generated: Scm = match (&args.topology, &args.graph) {
        (Some(t), None) => generate_model(&GeneratorSpec::new(*t, args.seed).with_confounder_size(args.confounder_size))?,
        (None, Some(path)) => {
            let (graph, _, _) = load_graph(path)?;
            generate_for_graph(&graph, args.confounder_size, args.seed)?
        }
        _ => bail!("pass exactly one of --topology and --graph"),
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let model_path = args.out_dir.join("model.json");
    let mut model_text = model_to_json(generated.graph(), Some(&generated))?;
    model_text.push('\n');
    fs::write(&model_path, &model_text).with_context(|| format!("writing {}", model_path.display()))?;
    // Derived outputs come from the model as written, so that they can be
    // reproduced from model.json alone.
    let scm: Scm = parse_model(&model_text)?.1.expect("the written model carries its oracle");
    let graph = scm.graph();
    let records = sample_dataset(&scm, args.samples, args.seed)?;

    let data_path = args.out_dir.join("data.csv");
    let mut csv_bytes = Vec::new();
    write_csv(&mut csv_bytes, graph, &records)?;
    fs::write(&data_path, &csv_bytes).with_context(|| format!("writing {}", data_path.display()))?;

    let dist = if args.exact {
        let path = args.out_dir.join("dist.json");
        let mut text = distribution_to_json(&model_to_distribution(&scm)?, graph)?;
        text.push('\n');
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        Some(FileDigest::of(&path, text.as_bytes()))
    } else {
        None
    };

    let truth = if args.truth {
        let template = template(graph, &args.query)?;
        if template.notion.is_none() && !template.open.is_empty() {
            bail!("--truth needs a value for every --condition entry");
        }
        let query = template.query(graph, &[])?;
        let gt = ground_truth_pce(&scm, &query).context("computing the exact effect")?;
        let report = TruthReport {
            schema: SCHEMA_VERSION,
            tool: ToolInfo::default(),
            query: QueryEcho::new(graph, template.notion.as_ref().map(|n| n.kind.to_string()), &query, gt.p_condition),
            value: gt.value,
            path_world: gt.path_world,
            reference_world: gt.reference_world,
        };
        let path = args.out_dir.join("truth.json");
        let text = to_json(&report)?;
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        Some(FileDigest::of(&path, text.as_bytes()))
    } else {
        None
    };
    Ok(SimulateOutput {
        model: FileDigest::of(&model_path, model_text.as_bytes()),
        data: FileDigest::of(&data_path, &csv_bytes),
        dist,
        truth,
    })
}
