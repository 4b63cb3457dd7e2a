//! Path sets, witness decomposition and dual-world evaluation of response
//! profiles.
//!
//! A query contrasts the world where the protected attribute takes `s1`
//! along the chosen paths `pi` (and `s0` along every other path) with the
//! reference world `do(s0)`, among units whose factual values match the
//! condition. Each node `V` is evaluated twice per profile: its reference
//! copy `V0` (under `do(s0)`) and its path copy `V1`, where every inbound
//! edge lying on some path of `pi` reads the parent's path copy and every
//! other inbound edge reads the parent's reference copy. Witness nodes are
//! exactly the nodes whose two copies both feed the decision.

use std::collections::BTreeSet;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::model::{Assignment, CausalGraph, ObservationalDistribution};
use crate::response::{ProfileSpace, ResponseProfile, ResponseTables};
use crate::scalar::Scalar;

/// Set of directed paths from the protected attribute to the decision, each
/// stored as its node sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathSet {
    paths: Vec<Vec<usize>>,
}

impl PathSet {
    pub fn empty() -> Self {
        PathSet::default()
    }

    /// Validates and sorts `paths`. Every path must run from the protected
    /// attribute to the decision along existing edges without repeating a
    /// node; duplicates are rejected.
    pub fn new(graph: &CausalGraph, mut paths: Vec<Vec<usize>>) -> Result<Self> {
        for p in &paths {
            check_path(graph, p)?;
        }
        paths.sort();
        if paths.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath("duplicate path".into()));
        }
        Ok(PathSet { paths })
    }

    pub fn from_names<S: AsRef<str>>(graph: &CausalGraph, paths: &[Vec<S>]) -> Result<Self> {
        let indexed = paths
            .iter()
            .map(|p| p.iter().map(|n| graph.index_of(n.as_ref())).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, indexed)
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn contains(&self, path: &[usize]) -> bool {
        self.paths.binary_search_by(|p| p.as_slice().cmp(path)).is_ok()
    }

    pub fn contains_edge(&self, parent: usize, child: usize) -> bool {
        self.paths
            .iter()
            .any(|p| p.windows(2).any(|e| e[0] == parent && e[1] == child))
    }

    /// Nodes strictly between the endpoints of some path.
    pub fn interior_nodes(&self) -> BTreeSet<usize> {
        self.paths
            .iter()
            .flat_map(|p| p[1..p.len() - 1].iter().copied())
            .collect()
    }

    pub fn is_subset(&self, other: &PathSet) -> bool {
        self.paths.iter().all(|p| other.contains(p))
    }

    /// Paths of `self` not in `other`.
    pub fn difference(&self, other: &PathSet) -> PathSet {
        PathSet {
            paths: self.paths.iter().filter(|p| !other.contains(p)).cloned().collect(),
        }
    }

    pub fn filter(&self, keep: impl Fn(&[usize]) -> bool) -> PathSet {
        PathSet {
            paths: self.paths.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn names(&self, graph: &CausalGraph) -> Vec<Vec<String>> {
        self.paths
            .iter()
            .map(|p| p.iter().map(|&v| graph.name(v).to_string()).collect())
            .collect()
    }

    pub fn format(&self, graph: &CausalGraph) -> Vec<String> {
        self.names(graph).into_iter().map(|p| p.join("->")).collect()
    }
}

fn check_path(graph: &CausalGraph, path: &[usize]) -> Result<()> {
    let show = || path.iter().map(|&v| graph.name(v)).collect::<Vec<_>>().join("->");
    if path.len() < 2 || path[0] != graph.protected() || *path.last().unwrap() != graph.decision() {
        return Err(Error::InvalidPath(format!(
            "`{}` must run from `{}` to `{}`",
            show(),
            graph.name(graph.protected()),
            graph.name(graph.decision())
        )));
    }
    if let Some(e) = path.windows(2).find(|e| !graph.has_edge(e[0], e[1])) {
        return Err(Error::InvalidPath(format!(
            "`{}` uses missing edge {} -> {}",
            show(),
            graph.name(e[0]),
            graph.name(e[1])
        )));
    }
    let distinct: BTreeSet<usize> = path.iter().copied().collect();
    if distinct.len() != path.len() {
        return Err(Error::InvalidPath(format!("`{}` is not simple", show())));
    }
    Ok(())
}

/// All directed paths from the protected attribute to the decision, in
/// lexicographic order of their index sequences.
pub fn enumerate_causal_paths(graph: &CausalGraph) -> PathSet {
    fn walk(graph: &CausalGraph, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == graph.decision() {
            out.push(path.clone());
            return;
        }
        for &c in graph.children(last) {
            if !path.contains(&c) {
                path.push(c);
                walk(graph, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(graph, &mut vec![graph.protected()], &mut out);
    out.sort();
    PathSet { paths: out }
}

/// Disjoint split of the non-protected, non-decision variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodePartition {
    /// On some path of `pi` and some path of its complement.
    pub witness: BTreeSet<usize>,
    /// On `pi` only.
    pub active_only: BTreeSet<usize>,
    /// On the complement only.
    pub reference_only: BTreeSet<usize>,
    /// On no causal path.
    pub off_path: BTreeSet<usize>,
}

pub fn partition_nodes(graph: &CausalGraph, pi: &PathSet) -> Result<NodePartition> {
    let all = enumerate_causal_paths(graph);
    if let Some(p) = pi.paths().iter().find(|p| !all.contains(p)) {
        return Err(Error::InvalidPath(format!("{p:?} is not a causal path")));
    }
    let on_pi = pi.interior_nodes();
    let on_rest = all.difference(pi).interior_nodes();
    let witness: BTreeSet<usize> = on_pi.intersection(&on_rest).copied().collect();
    let active_only = on_pi.difference(&witness).copied().collect();
    let reference_only = on_rest.difference(&witness).copied().collect();
    let off_path = (0..graph.len())
        .filter(|&v| v != graph.protected() && v != graph.decision())
        .filter(|v| !on_pi.contains(v) && !on_rest.contains(v))
        .collect();
    Ok(NodePartition {
        witness,
        active_only,
        reference_only,
        off_path,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSide {
    /// The edge lies on some path of the query's path set and transmits the
    /// path copy of its parent.
    Active,
    /// Transmits the reference copy.
    Reference,
}

pub fn edge_side(edge: (usize, usize), pi: &PathSet) -> EdgeSide {
    if pi.contains_edge(edge.0, edge.1) {
        EdgeSide::Active
    } else {
        EdgeSide::Reference
    }
}

/// A path-specific counterfactual query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PceQuery {
    pub s0: usize,
    pub s1: usize,
    pub y_target: usize,
    /// Factual condition as `(variable, value)` pairs sorted by variable.
    pub condition: Vec<(usize, usize)>,
    pub pi: PathSet,
}

impl PceQuery {
    pub fn new(
        graph: &CausalGraph,
        s0: usize,
        s1: usize,
        y_target: usize,
        mut condition: Vec<(usize, usize)>,
        pi: PathSet,
    ) -> Result<Self> {
        let s = graph.protected();
        if s0 >= graph.domain_size(s) || s1 >= graph.domain_size(s) {
            return Err(Error::Query("protected value out of domain".into()));
        }
        if y_target >= graph.domain_size(graph.decision()) {
            return Err(Error::Query("decision value out of domain".into()));
        }
        condition.sort_unstable();
        for w in condition.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Query(format!("`{}` is conditioned twice", graph.name(w[0].0))));
            }
        }
        for &(v, x) in &condition {
            if v >= graph.len() || x >= graph.domain_size(v) {
                return Err(Error::Query("condition out of domain".into()));
            }
        }
        let all = enumerate_causal_paths(graph);
        if !pi.is_subset(&all) {
            return Err(Error::InvalidPath("path set is not a subset of the causal paths".into()));
        }
        Ok(PceQuery {
            s0,
            s1,
            y_target,
            condition,
            pi,
        })
    }

    /// Builds a query from labels. `y` defaults to the first label of the
    /// decision.
    pub fn from_labels(
        graph: &CausalGraph,
        s0: &str,
        s1: &str,
        y: Option<&str>,
        condition: &[(String, String)],
        pi: PathSet,
    ) -> Result<Self> {
        let s = graph.protected();
        let label = |v: usize, l: &str| {
            graph
                .label_index(v, l)
                .ok_or_else(|| Error::Query(format!("`{l}` is not a label of `{}`", graph.name(v))))
        };
        let y_target = match y {
            Some(l) => label(graph.decision(), l)?,
            None => 0,
        };
        let condition = condition
            .iter()
            .map(|(n, l)| graph.resolve(n, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, label(s, s0)?, label(s, s1)?, y_target, condition, pi)
    }

    pub fn matches(&self, values: &[usize]) -> bool {
        self.condition.iter().all(|&(v, x)| values[v] == x)
    }
}

/// Dense coefficient vector over a program's variable space.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector<T>(pub Vec<T>);

impl<T> Deref for CoefficientVector<T> {
    type Target = Vec<T>;
    fn deref(&self) -> &Vec<T> {
        &self.0
    }
}

impl<T> DerefMut for CoefficientVector<T> {
    fn deref_mut(&mut self) -> &mut Vec<T> {
        &mut self.0
    }
}

/// Values of both copies of every node for one profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualWorld {
    /// Path copies; the protected attribute holds `s1`.
    pub active: Assignment,
    /// Reference copies, i.e. the world under `do(s0)`.
    pub reference: Assignment,
    decision: usize,
}

impl DualWorld {
    /// Decision in the path-specific world.
    pub fn decision(&self) -> usize {
        self.active[self.decision]
    }

    /// Decision under `do(s0)`.
    pub fn reference_decision(&self) -> usize {
        self.reference[self.decision]
    }
}

/// Evaluates profiles in the factual, reference and path-specific worlds.
///
/// Variables without a response table must be given fixed values; they take
/// the same value in every world.
pub(crate) struct WorldEvaluator<'a> {
    graph: &'a CausalGraph,
    tables: &'a ResponseTables,
    active_edge: Vec<Vec<bool>>,
    s0: usize,
    s1: usize,
}

impl<'a> WorldEvaluator<'a> {
    pub fn new(graph: &'a CausalGraph, tables: &'a ResponseTables, query: &PceQuery) -> Self {
        let active_edge = (0..graph.len())
            .map(|v| graph.parents(v).iter().map(|&p| query.pi.contains_edge(p, v)).collect())
            .collect();
        WorldEvaluator {
            graph,
            tables,
            active_edge,
            s0: query.s0,
            s1: query.s1,
        }
    }

    fn config(&self, v: usize, values: &[usize]) -> usize {
        self.graph.parent_config_index(v, values)
    }

    /// Factual values; `fixed[v]` overrides variables without tables.
    pub fn factual(&self, profile: &[usize], fixed: &[Option<usize>], out: &mut [usize]) {
        for &v in self.graph.topo_order() {
            out[v] = match fixed[v] {
                Some(x) => x,
                None => self.tables.table(v).output(self.config(v, out), profile[v]),
            };
        }
    }

    pub fn dual(&self, profile: &[usize], fixed: &[Option<usize>], active: &mut [usize], reference: &mut [usize]) {
        let s = self.graph.protected();
        for &v in self.graph.topo_order() {
            if v == s {
                active[v] = self.s1;
                reference[v] = self.s0;
                continue;
            }
            if let Some(x) = fixed[v] {
                active[v] = x;
                reference[v] = x;
                continue;
            }
            let table = self.tables.table(v);
            reference[v] = table.output(self.config(v, reference), profile[v]);
            let mut cfg = 0;
            for (k, &p) in self.graph.parents(v).iter().enumerate() {
                let x = if self.active_edge[v][k] { active[p] } else { reference[p] };
                cfg = cfg * self.graph.domain_size(p) + x;
            }
            active[v] = table.output(cfg, profile[v]);
        }
    }
}

fn require_all_tables(graph: &CausalGraph, tables: &ResponseTables) -> Result<()> {
    match (0..graph.len()).find(|&v| tables.get(v).is_none()) {
        Some(v) => Err(Error::Query(format!("no response table for `{}`", graph.name(v)))),
        None => Ok(()),
    }
}

/// Topological evaluation `v = g_V(pa_V, r_V)` of a full profile.
pub fn factual_eval(profile: &ResponseProfile, graph: &CausalGraph, tables: &ResponseTables) -> Assignment {
    let mut out = vec![0; graph.len()];
    for &v in graph.topo_order() {
        out[v] = tables.table(v).output(graph.parent_config_index(v, &out), profile.0[v]);
    }
    out
}

pub fn dual_world_eval(
    profile: &ResponseProfile,
    query: &PceQuery,
    graph: &CausalGraph,
    tables: &ResponseTables,
) -> Result<DualWorld> {
    if !query.pi.is_subset(&enumerate_causal_paths(graph)) {
        return Err(Error::InvalidPath("path set is not a subset of the causal paths".into()));
    }
    require_all_tables(graph, tables)?;
    let eval = WorldEvaluator::new(graph, tables, query);
    let fixed = vec![None; graph.len()];
    let mut active = vec![0; graph.len()];
    let mut reference = vec![0; graph.len()];
    eval.dual(&profile.0, &fixed, &mut active, &mut reference);
    Ok(DualWorld {
        active,
        reference,
        decision: graph.decision(),
    })
}

/// 0/1 vector over all joint profiles marking those whose factual world is
/// `assignment`.
pub fn observational_row<T: Scalar>(
    assignment: &[usize],
    graph: &CausalGraph,
    tables: &ResponseTables,
) -> Result<CoefficientVector<T>> {
    require_all_tables(graph, tables)?;
    let all: Vec<usize> = (0..graph.len()).collect();
    let space = ProfileSpace::new(graph, &all, tables).ok_or_else(|| Error::ProfileCap {
        size: "overflow".into(),
        cap: usize::MAX,
    })?;
    let mut profile = ResponseProfile(vec![0; graph.len()]);
    let row = (0..space.size())
        .map(|i| {
            space.decode_into(i, &mut profile);
            if factual_eval(&profile, graph, tables) == assignment {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(CoefficientVector(row))
}

/// Objective of the bounding program over all joint profiles:
/// `([dual decision = y] - [reference decision = y]) * [factual matches o] / P(o)`.
pub fn pce_objective<T: Scalar>(
    query: &PceQuery,
    obs: &ObservationalDistribution<T>,
    graph: &CausalGraph,
    tables: &ResponseTables,
) -> Result<CoefficientVector<T>> {
    obs.check_graph(graph)?;
    require_all_tables(graph, tables)?;
    let p_o = obs.marginal(&query.condition);
    if p_o <= T::zero() {
        return Err(Error::ZeroCondition);
    }
    let all: Vec<usize> = (0..graph.len()).collect();
    let space = ProfileSpace::new(graph, &all, tables).ok_or_else(|| Error::ProfileCap {
        size: "overflow".into(),
        cap: usize::MAX,
    })?;
    let eval = WorldEvaluator::new(graph, tables, query);
    let n = graph.len();
    let fixed = vec![None; n];
    let (mut fact, mut act, mut refw) = (vec![0; n], vec![0; n], vec![0; n]);
    let mut profile = ResponseProfile(vec![0; n]);
    let weight = T::one() / p_o;
    let coeffs = (0..space.size())
        .map(|i| {
            space.decode_into(i, &mut profile);
            eval.factual(&profile.0, &fixed, &mut fact);
            if !query.matches(&fact) {
                return T::zero();
            }
            eval.dual(&profile.0, &fixed, &mut act, &mut refw);
            let d = graph.decision();
            let hit = |x: usize| if x == query.y_target { T::one() } else { T::zero() };
            (hit(act[d]) - hit(refw[d])) * weight
        })
        .collect();
    Ok(CoefficientVector(coeffs))
}
