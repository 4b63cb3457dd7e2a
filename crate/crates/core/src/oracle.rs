//! Exact ground truth on fully specified models, synthetic model and data
//! generation, and brute-force cross-checks for the bounding pipeline.
//!
//! Nothing here goes through the response-function machinery except
//! [`induced_response_distribution`] and [`response_sum_pce`], which exist to
//! check that machinery against the structural functions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::effects::{partition_nodes, PceQuery};
use crate::error::{Error, Result};
use crate::model::{Assignment, CausalGraph, ExogenousBlock, GraphSpec, OracleScm, VariableSpec};
use crate::program::LinearProgram;
use crate::radix::Radix;
use crate::response::{confounded_components, ProfileSpace, ResponseProfile, ResponseTables, DEFAULT_RESPONSE_CAP};
use crate::scalar::Scalar;
use crate::solver::{LpStatus, Sense};

/// Exact path-specific counterfactual effect of a fully specified model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth<T> {
    pub value: T,
    /// `P(decision = y in the path-specific world | o)`.
    pub path_world: T,
    /// `P(decision = y under do(S = s0) | o)`.
    pub reference_world: T,
    pub p_condition: T,
}

/// Computes the effect by enumerating every joint exogenous value and running
/// the structural functions in three worlds: factual (for the condition),
/// path-specific, and `do(S = s0)`.
///
/// In the path-specific world a variable reads a parent's path-specific value
/// through edges that lie on a path of `pi`, and the parent's `do(S = s0)`
/// value through every other edge; the protected variable is `s1` there.
pub fn ground_truth_pce<T: Scalar>(scm: &OracleScm<T>, query: &PceQuery) -> Result<GroundTruth<T>> {
    let scm = scm.compress();
    let graph = scm.graph();
    let n = graph.len();
    let s = graph.protected();
    let d = graph.decision();
    let on_pi: BTreeSet<(usize, usize)> = query
        .pi
        .paths()
        .iter()
        .flat_map(|p| p.windows(2).map(|e| (e[0], e[1])))
        .collect();

    let (mut p_o, mut p_path, mut p_ref) = (T::zero(), T::zero(), T::zero());
    let mut factual = vec![0; n];
    let mut reference = vec![0; n];
    let mut path = vec![0; n];
    let mut parents = Vec::new();
    scm.for_each_exogenous(|u, p| {
        for &v in graph.topo_order() {
            let block = u[scm.wiring()[v]];
            parents.clear();
            parents.extend(graph.parents(v).iter().map(|&q| factual[q]));
            factual[v] = apply(&scm, v, &parents, block);
        }
        if !query.condition.iter().all(|&(v, x)| factual[v] == x) {
            return;
        }
        for &v in graph.topo_order() {
            let block = u[scm.wiring()[v]];
            if v == s {
                reference[v] = query.s0;
                path[v] = query.s1;
                continue;
            }
            parents.clear();
            parents.extend(graph.parents(v).iter().map(|&q| reference[q]));
            reference[v] = apply(&scm, v, &parents, block);
            parents.clear();
            parents.extend(
                graph
                    .parents(v)
                    .iter()
                    .map(|&q| if on_pi.contains(&(q, v)) { path[q] } else { reference[q] }),
            );
            path[v] = apply(&scm, v, &parents, block);
        }
        p_o += p;
        if path[d] == query.y_target {
            p_path += p;
        }
        if reference[d] == query.y_target {
            p_ref += p;
        }
    })?;
    if p_o <= T::zero() {
        return Err(Error::ZeroCondition);
    }
    let path_world = p_path / p_o;
    let reference_world = p_ref / p_o;
    Ok(GroundTruth {
        value: path_world - reference_world,
        path_world,
        reference_world,
        p_condition: p_o,
    })
}

/// `f_v(parents, u)` with parent values listed in parent order.
fn apply<T: Scalar>(scm: &OracleScm<T>, v: usize, parents: &[usize], u: usize) -> usize {
    let graph = scm.graph();
    let config = graph
        .parents(v)
        .iter()
        .zip(parents)
        .fold(0, |acc, (&q, &x)| acc * graph.domain_size(q) + x);
    scm.function(v, config, u)
}

/// Built-in generator topologies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// `X -> Y` with `X <-> Y`.
    Bow,
    /// `X -> W -> Z -> Y` and `W -> Y`, no confounding.
    Kite,
    /// `X -> Y`, no confounding.
    W,
    /// `S -> Yhat`, `S -> W -> {A, B} -> Yhat`, every pair confounded.
    Fig6,
    /// The same graph with mutually independent exogenous blocks.
    Fig6Markovian,
}

impl Topology {
    pub const ALL: [Topology; 5] = [
        Topology::Bow,
        Topology::Kite,
        Topology::W,
        Topology::Fig6,
        Topology::Fig6Markovian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Bow => "bow",
            Topology::Kite => "kite",
            Topology::W => "w",
            Topology::Fig6 => "fig6",
            Topology::Fig6Markovian => "fig6-markovian",
        }
    }

    pub fn graph(self) -> CausalGraph {
        let spec = match self {
            Topology::Bow => GraphSpec::new(
                vec![VariableSpec::new("X", &["x0", "x1"]), VariableSpec::new("Y", &["y0", "y1"])],
                "X",
                "Y",
            )
            .edge("X", "Y")
            .confound("X", "Y"),
            Topology::Kite => GraphSpec::new(
                vec![
                    VariableSpec::new("X", &["x0", "x1"]),
                    VariableSpec::new("W", &["w0", "w1"]),
                    VariableSpec::new("Z", &["z0", "z1"]),
                    VariableSpec::new("Y", &["y0", "y1"]),
                ],
                "X",
                "Y",
            )
            .edge("X", "W")
            .edge("W", "Z")
            .edge("Z", "Y")
            .edge("W", "Y"),
            Topology::W => GraphSpec::new(
                vec![VariableSpec::new("X", &["x0", "x1"]), VariableSpec::new("Y", &["y0", "y1"])],
                "X",
                "Y",
            )
            .edge("X", "Y"),
            Topology::Fig6 | Topology::Fig6Markovian => {
                let names = ["S", "W", "A", "B", "Yhat"];
                let mut spec = GraphSpec::new(
                    vec![
                        VariableSpec::new("S", &["s-", "s+"]),
                        VariableSpec::new("W", &["w0", "w1"]),
                        VariableSpec::new("A", &["a0", "a1"]),
                        VariableSpec::new("B", &["b0", "b1"]),
                        VariableSpec::new("Yhat", &["pos", "neg"]),
                    ],
                    "S",
                    "Yhat",
                )
                .edge("S", "Yhat")
                .edge("S", "W")
                .edge("W", "A")
                .edge("A", "Yhat")
                .edge("W", "B")
                .edge("B", "Yhat");
                if self == Topology::Fig6 {
                    for i in 0..names.len() {
                        for j in i + 1..names.len() {
                            spec = spec.confound(names[i], names[j]);
                        }
                    }
                }
                spec
            }
        };
        CausalGraph::new(spec).expect("built-in topologies are valid")
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Model(format!("unknown topology `{s}`")))
    }
}

/// Parameters of a random model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub topology: Topology,
    /// Domain size of every exogenous block.
    pub confounder_size: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(topology: Topology, seed: u64) -> Self {
        GeneratorSpec {
            topology,
            confounder_size: 100,
            seed,
        }
    }

    pub fn with_confounder_size(mut self, k: usize) -> Self {
        self.confounder_size = k;
        self
    }
}

/// Random model on a built-in topology.
pub fn generate_model<T: Scalar>(spec: &GeneratorSpec) -> Result<OracleScm<T>> {
    generate_for_graph(&spec.topology.graph(), spec.confounder_size, spec.seed)
}

/// Random model on any graph: one exogenous block of size `block_size` per
/// confounded component, Dirichlet(1) block probabilities, and uniformly
/// random total truth tables.
pub fn generate_for_graph<T: Scalar>(graph: &CausalGraph, block_size: usize, seed: u64) -> Result<OracleScm<T>> {
    if block_size == 0 {
        return Err(Error::Model("exogenous blocks need at least one value".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = confounded_components(graph);
    let mut blocks = Vec::with_capacity(components.len());
    for comp in components.components() {
        let draws: Vec<f64> = (0..block_size).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        let mut probs: Vec<T> = draws.iter().map(|&x| T::lit(x / total)).collect();
        // Put the rounding residue on the largest entry so the block sums to
        // one in T.
        let sum: T = probs.iter().copied().sum();
        let (imax, _) = probs
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        probs[imax] += T::one() - sum;
        let id = format!(
            "U_{}",
            comp.iter().map(|&v| graph.name(v)).collect::<Vec<_>>().join("_")
        );
        blocks.push(ExogenousBlock { id, probs });
    }
    let wiring: Vec<usize> = (0..graph.len()).map(|v| components.component_of(v)).collect();
    let functions = (0..graph.len())
        .map(|v| {
            let d = graph.domain_size(v);
            (0..graph.parent_configs(v) * block_size)
                .map(|_| rng.random_range(0..d))
                .collect()
        })
        .collect();
    OracleScm::new(graph.clone(), blocks, wiring, functions)
}

/// `n` independent records drawn from the model.
pub fn sample_dataset<T: Scalar>(scm: &OracleScm<T>, n: usize, seed: u64) -> Result<Vec<Assignment>> {
    if n == 0 {
        return Err(Error::Size("a dataset needs at least one record".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers = scm
        .blocks()
        .iter()
        .map(|b| {
            WeightedIndex::new(b.probs.iter().map(|p| p.to_f64_lossy()))
                .map_err(|e| Error::Model(format!("block `{}`: {e}", b.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut u = vec![0; samplers.len()];
    Ok((0..n)
        .map(|_| {
            for (x, s) in u.iter_mut().zip(&samplers) {
                *x = s.sample(&mut rng);
            }
            scm.evaluate(&u)
        })
        .collect())
}

/// Result of [`brute_force_lp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteForce {
    pub status: LpStatus,
    pub value: f64,
}

/// Largest program [`brute_force_lp`] accepts.
pub const BRUTE_FORCE_MAX_VARS: usize = 12;
pub const BRUTE_FORCE_MAX_ROWS: usize = 8;

/// Optimum of a small program with a bounded feasible region by visiting
/// every basic solution: each set of `rank` columns whose square system has
/// a nonnegative solution.
pub fn brute_force_lp<T: Scalar>(lp: &LinearProgram<T>, sense: Sense) -> Result<BruteForce> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    if n > BRUTE_FORCE_MAX_VARS || m > BRUTE_FORCE_MAX_ROWS {
        return Err(Error::Size(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_VARS} variables and {BRUTE_FORCE_MAX_ROWS} rows, got {n} and {m}"
        )));
    }
    let tol = 1e-9;
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut r: Vec<f64> = lp.dense_row(i).iter().map(|a| a.to_f64_lossy()).collect();
            r.push(lp.rows[i].rhs.to_f64_lossy());
            r
        })
        .collect();
    // Row-reduce [A | b] to independent rows.
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..m).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs())) else {
            break;
        };
        if rows[p][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, p);
        let pivot = rows[rank][col];
        for x in rows[rank].iter_mut() {
            *x /= pivot;
        }
        for i in 0..m {
            if i != rank {
                let f = rows[i][col];
                if f != 0.0 {
                    for j in 0..=n {
                        rows[i][j] -= f * rows[rank][j];
                    }
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[n].abs() > tol) {
        return Ok(BruteForce {
            status: LpStatus::Infeasible,
            value: 0.0,
        });
    }
    rows.truncate(rank);
    let cost: Vec<f64> = lp.objective.iter().map(|c| c.to_f64_lossy()).collect();
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(x) = solve_square(&rows, &subset, n) {
            if x.iter().all(|&v| v >= -tol) {
                let value: f64 = subset.iter().zip(&x).map(|(&j, &v)| cost[j] * v).sum();
                best = Some(match (best, sense) {
                    (None, _) => value,
                    (Some(b), Sense::Max) => b.max(value),
                    (Some(b), Sense::Min) => b.min(value),
                });
            }
        }
        if !next_subset(&mut subset, n) {
            break;
        }
    }
    Ok(match best {
        Some(value) => BruteForce {
            status: LpStatus::Optimal,
            value,
        },
        None => BruteForce {
            status: LpStatus::Infeasible,
            value: 0.0,
        },
    })
}

fn solve_square(rows: &[Vec<f64>], cols: &[usize], n: usize) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| cols.iter().map(|&j| r[j]).chain(std::iter::once(r[n])).collect())
        .collect();
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        for i in 0..k {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=k {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The response-profile distribution a model induces: every joint exogenous
/// value is classified into the profile whose response functions reproduce
/// each structural function at that value. Indexed like a
/// [`ProfileSpace`] over all variables.
pub fn induced_response_distribution<T: Scalar>(scm: &OracleScm<T>) -> Result<(ResponseTables, ProfileSpace, Vec<T>)> {
    let scm = scm.compress();
    let graph = scm.graph();
    let tables = ResponseTables::all(graph, DEFAULT_RESPONSE_CAP)?;
    let all: Vec<usize> = (0..graph.len()).collect();
    let space = ProfileSpace::new(graph, &all, &tables)
        .ok_or_else(|| Error::Size("profile space overflows".into()))?;
    let mut dist = vec![T::zero(); space.size()];
    let mut profile = ResponseProfile(vec![0; graph.len()]);
    let mut outputs = Vec::new();
    scm.for_each_exogenous(|u, p| {
        for v in 0..graph.len() {
            let b = u[scm.wiring()[v]];
            outputs.clear();
            outputs.extend((0..graph.parent_configs(v)).map(|c| scm.function(v, c, b)));
            profile.0[v] = tables.table(v).index_of(&outputs);
        }
        dist[space.encode(&profile)] += p;
    })?;
    Ok((tables, space, dist))
}

/// The effect as a literal sum over response profiles and the values of the
/// path-world and reference-world variables, of profile probabilities times
/// products of response indicators.
///
/// Path-world variables are split into witnesses (two copies, `w1` and
/// `w0`), path-only variables `a` and complement-only variables `b`.
/// Variables on no causal path are not affected by `S` where it matters and
/// take their factual value. The factual filter is itself a sum of indicator
/// products over full assignments consistent with the condition.
pub fn response_sum_pce<T: Scalar>(
    graph: &CausalGraph,
    tables: &ResponseTables,
    space: &ProfileSpace,
    dist: &[T],
    query: &PceQuery,
) -> Result<T> {
    let n = graph.len();
    let s = graph.protected();
    let d = graph.decision();
    let parts = partition_nodes(graph, &query.pi)?;
    let witnesses: Vec<usize> = parts.witness.iter().copied().collect();
    let path_only: Vec<usize> = parts.active_only.iter().copied().collect();
    let ref_only: Vec<usize> = parts.reference_only.iter().copied().collect();
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != d).collect();
    let on_pi = |p: usize, c: usize| query.pi.contains_edge(p, c);
    let ind = |v: usize, value: usize, parent_values: &dyn Fn(usize) -> usize, r: usize| -> bool {
        let config = graph
            .parents(v)
            .iter()
            .fold(0, |acc, &q| acc * graph.domain_size(q) + parent_values(q));
        tables.table(v).output(config, r) == value
    };

    let cells = graph.cells();
    let mut p_o = T::zero();
    let mut sum_path = T::zero();
    let mut sum_ref = T::zero();
    let mut profile = ResponseProfile(vec![0; n]);
    let mut full = vec![0; n];
    for i in 0..space.size() {
        if dist[i] == T::zero() {
            continue;
        }
        space.decode_into(i, &mut profile);
        let r = &profile.0;

        // r in r_o, and the factual values of off-path variables.
        let mut in_ro = false;
        let mut factual = vec![0; n];
        for cell in 0..cells.total() {
            cells.decode_into(cell, &mut full);
            if !query.condition.iter().all(|&(v, x)| full[v] == x) {
                continue;
            }
            if (0..n).all(|v| ind(v, full[v], &|q| full[q], r[v])) {
                in_ro = true;
                factual.copy_from_slice(&full);
            }
        }
        if !in_ro {
            continue;
        }
        p_o += dist[i];

        // Path world: sum over a, b, w1, w0.
        let free: Vec<usize> = path_only
            .iter()
            .chain(&ref_only)
            .chain(&witnesses)
            .chain(&witnesses)
            .copied()
            .collect();
        let radix = Radix::new(free.iter().map(|&v| graph.domain_size(v)).collect()).expect("small");
        let mut digits = vec![0; free.len()];
        let (na, nb, nw) = (path_only.len(), ref_only.len(), witnesses.len());
        let mut hits = T::zero();
        loop {
            let mut one = factual.clone();
            let mut zero = factual.clone();
            one[s] = query.s1;
            zero[s] = query.s0;
            for (k, &v) in path_only.iter().enumerate() {
                one[v] = digits[k];
            }
            for (k, &v) in ref_only.iter().enumerate() {
                zero[v] = digits[na + k];
            }
            for (k, &w) in witnesses.iter().enumerate() {
                one[w] = digits[na + nb + k];
                zero[w] = digits[na + nb + nw + k];
            }
            // pa^1 reads the path copy through edges on pi, the reference
            // copy otherwise; single-copy variables read their one value.
            let (one, zero, factual) = (&one, &zero, &factual);
            let pa1 = |v: usize, q: usize| {
                if q == s || parts.witness.contains(&q) {
                    if on_pi(q, v) {
                        one[q]
                    } else {
                        zero[q]
                    }
                } else if parts.active_only.contains(&q) {
                    one[q]
                } else if parts.reference_only.contains(&q) {
                    zero[q]
                } else {
                    factual[q]
                }
            };
            let pa0 = |q: usize| {
                if q == s || parts.witness.contains(&q) || parts.reference_only.contains(&q) {
                    zero[q]
                } else if parts.active_only.contains(&q) {
                    one[q]
                } else {
                    factual[q]
                }
            };
            let mut term = ind(d, query.y_target, &|q| pa1(d, q), r[d]);
            for &a in &path_only {
                term &= ind(a, one[a], &|q| pa1(a, q), r[a]);
            }
            for &b in &ref_only {
                term &= ind(b, zero[b], &pa0, r[b]);
            }
            for &w in &witnesses {
                term &= ind(w, one[w], &|q| pa1(w, q), r[w]);
                term &= ind(w, zero[w], &pa0, r[w]);
            }
            if term {
                hits += T::one();
            }
            if !radix.increment(&mut digits) {
                break;
            }
        }
        sum_path += dist[i] * hits;

        // Reference world: sum over v' = V \ {S, decision}.
        let radix = Radix::new(others.iter().map(|&v| graph.domain_size(v)).collect()).expect("small");
        let mut digits = vec![0; others.len()];
        let mut hits = T::zero();
        loop {
            let mut vals = vec![0; n];
            vals[s] = query.s0;
            for (k, &v) in others.iter().enumerate() {
                vals[v] = digits[k];
            }
            let mut term = ind(d, query.y_target, &|q| vals[q], r[d]);
            for &v in &others {
                term &= ind(v, vals[v], &|q| vals[q], r[v]);
            }
            if term {
                hits += T::one();
            }
            if !radix.increment(&mut digits) {
                break;
            }
        }
        sum_ref += dist[i] * hits;
    }
    if p_o <= T::zero() {
        return Err(Error::ZeroCondition);
    }
    Ok((sum_path - sum_ref) / p_o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::{enumerate_causal_paths, PathSet};
    use crate::model::model_to_distribution;

    #[test]
    fn copy_decision_has_unit_effect() {
        let g = Topology::W.graph();
        let scm = OracleScm::new(
            g.clone(),
            vec![
                ExogenousBlock { id: "UX".into(), probs: vec![0.5, 0.5] },
                ExogenousBlock { id: "UY".into(), probs: vec![1.0] },
            ],
            vec![0, 1],
            vec![vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        let q = PceQuery::new(&g, 0, 1, 1, vec![], enumerate_causal_paths(&g)).unwrap();
        let t: GroundTruth<f64> = ground_truth_pce(&scm, &q).unwrap();
        assert_eq!(t.value, 1.0);
        let same = PceQuery::new(&g, 1, 1, 1, vec![], enumerate_causal_paths(&g)).unwrap();
        assert_eq!(ground_truth_pce(&scm, &same).unwrap().value, 0.0);
        let zero = PceQuery::new(&g, 0, 1, 1, vec![], PathSet::empty()).unwrap();
        assert_eq!(ground_truth_pce(&scm, &zero).unwrap().value, 0.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(Topology::Fig6, 7).with_confounder_size(100);
        let a: OracleScm<f64> = generate_model(&spec).unwrap();
        let b: OracleScm<f64> = generate_model(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks().len(), 1);
        assert_eq!(a.blocks()[0].size(), 100);
        let m: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Fig6Markovian, 7)).unwrap();
        assert_eq!(m.blocks().len(), 5);
    }

    #[test]
    fn sampling() {
        let g = Topology::W.graph();
        let det = OracleScm::<f64>::new(
            g,
            vec![
                ExogenousBlock { id: "UX".into(), probs: vec![1.0] },
                ExogenousBlock { id: "UY".into(), probs: vec![1.0] },
            ],
            vec![0, 1],
            vec![vec![1], vec![0, 1]],
        )
        .unwrap();
        let recs = sample_dataset(&det, 5, 3).unwrap();
        assert!(recs.iter().all(|r| r == &vec![1, 1]));
        assert!(sample_dataset(&det, 0, 3).is_err());
        let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Bow, 1).with_confounder_size(10)).unwrap();
        assert_eq!(sample_dataset(&scm, 100, 9).unwrap(), sample_dataset(&scm, 100, 9).unwrap());
    }

    #[test]
    fn brute_force_small_programs() {
        let p: LinearProgram<f64> = LinearProgram::dense(vec![1.0, 0.0], vec![(vec![1.0, 1.0], 1.0)]);
        assert_eq!(brute_force_lp(&p, Sense::Max).unwrap().value, 1.0);
        let p: LinearProgram<f64> = LinearProgram::dense(vec![1.0], vec![(vec![1.0], 0.5)]);
        assert_eq!(brute_force_lp(&p, Sense::Min).unwrap().value, 0.5);
        let p: LinearProgram<f64> =
            LinearProgram::dense(vec![1.0, 0.0], vec![(vec![1.0, 1.0], 1.0), (vec![1.0, 1.0], 0.5)]);
        assert_eq!(brute_force_lp(&p, Sense::Max).unwrap().status, LpStatus::Infeasible);
        let big: LinearProgram<f64> = LinearProgram::dense(vec![0.0; 13], vec![(vec![1.0; 13], 1.0)]);
        assert!(matches!(brute_force_lp(&big, Sense::Max), Err(Error::Size(_))));
    }

    #[test]
    fn induced_profiles_reproduce_observations() {
        let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Kite, 4).with_confounder_size(6)).unwrap();
        let (tables, space, dist) = induced_response_distribution(&scm).unwrap();
        let total: f64 = dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let obs = model_to_distribution(&scm).unwrap();
        let g = scm.graph();
        let mut implied = vec![0.0; g.cells().total()];
        for (i, &p) in dist.iter().enumerate() {
            let prof = space.decode(i);
            implied[g.cells().encode(&crate::effects::factual_eval(&prof, g, &tables))] += p;
        }
        for (cell, p) in implied.iter().enumerate() {
            assert!((p - obs.prob(cell)).abs() < 1e-12);
        }
    }

    #[test]
    fn literal_sum_matches_ground_truth_on_kite() {
        let g = Topology::Kite.graph();
        let pi = PathSet::from_names(&g, &[vec!["X", "W", "Z", "Y"]]).unwrap();
        for seed in 0..5 {
            let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Kite, seed).with_confounder_size(5)).unwrap();
            let (tables, space, dist) = induced_response_distribution(&scm).unwrap();
            let q = PceQuery::new(&g, 0, 1, 1, vec![], pi.clone()).unwrap();
            let truth = ground_truth_pce(&scm, &q).unwrap().value;
            let lit = response_sum_pce(&g, &tables, &space, &dist, &q).unwrap();
            assert!((truth - lit).abs() < 1e-12, "seed {seed}: {truth} vs {lit}");
        }
    }

    #[test]
    fn topology_names() {
        for t in Topology::ALL {
            assert_eq!(t.name().parse::<Topology>().unwrap(), t);
        }
    }
}
