//! Bounding programs over response-profile distributions.
//!
//! [`FullJointProgram`] is a linear program over the joint distribution of
//! response profiles with one equality row per observed cell plus
//! normalization; it assumes nothing about hidden confounding.
//! [`FactoredProgram`] makes the response variables of different confounded
//! components independent, which turns every row into a product of
//! per-component linear forms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::effects::{enumerate_causal_paths, partition_nodes, CoefficientVector, PceQuery, WorldEvaluator};
use crate::error::{Error, Result};
use crate::model::{CausalGraph, ObservationalDistribution};
use crate::radix::{saturating_product, Radix};
use crate::response::{
    confounded_components, response_count, FactorizationBlocks, ProfileSpace, ResponseProfile, ResponseTables,
    DEFAULT_RESPONSE_CAP,
};
use crate::scalar::Scalar;

/// Default cap on the number of joint profiles (LP columns).
pub const DEFAULT_PROFILE_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    FullJoint,
    Factored,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FullJoint => "full",
            Mode::Factored => "factored",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProgramOptions {
    pub profile_cap: usize,
    pub response_cap: usize,
    /// Shrink the active set automatically when the full profile space is
    /// over `profile_cap`.
    pub auto_reduce: bool,
}

impl Default for ProgramOptions {
    fn default() -> Self {
        ProgramOptions {
            profile_cap: DEFAULT_PROFILE_CAP,
            response_cap: DEFAULT_RESPONSE_CAP,
            auto_reduce: true,
        }
    }
}

/// Sparse equality row `coeffs . x = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

/// `min/max c.x  s.t.  A x = b, x >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: CoefficientVector<T>,
    pub rows: Vec<ConstraintRow<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, rows: Vec<ConstraintRow<T>>) -> Self {
        LinearProgram {
            objective: CoefficientVector(objective),
            rows,
        }
    }

    /// Builds a program from dense rows.
    pub fn dense(objective: Vec<T>, rows: Vec<(Vec<T>, T)>) -> Self {
        let rows = rows
            .into_iter()
            .map(|(coeffs, rhs)| ConstraintRow {
                coeffs: coeffs
                    .into_iter()
                    .enumerate()
                    .filter(|(_, a)| *a != T::zero())
                    .collect(),
                rhs,
            })
            .collect();
        Self::new(objective, rows)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest absolute violation of the equality rows and of `x >= 0`.
    pub fn residual(&self, x: &[T]) -> T {
        let rows = self.rows.iter().map(|r| {
            let lhs: T = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            (lhs - r.rhs).abs()
        });
        let neg = x.iter().map(|&v| (-v).max(T::zero()));
        rows.chain(neg).fold(T::zero(), T::max)
    }

    pub fn dense_row(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_vars()];
        for &(j, a) in &self.rows[i].coeffs {
            out[j] += a;
        }
        out
    }
}

/// Variables that carry explicit response variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    vars: BTreeSet<usize>,
}

impl ActiveSet {
    pub fn all(graph: &CausalGraph) -> Self {
        ActiveSet {
            vars: (0..graph.len()).collect(),
        }
    }

    pub fn vars(&self) -> &BTreeSet<usize> {
        &self.vars
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vars.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// Smallest set of variables that must keep explicit response variables:
/// the decision, every node on a causal path (witnesses included), every
/// conditioned variable, and every member of a confounded component with
/// two or more variables. The rest are unconfounded and enter only through
/// their factual values, so their observed conditionals stand in for them.
pub fn reduce_active_set(graph: &CausalGraph, query: &PceQuery, blocks: &FactorizationBlocks) -> Result<ActiveSet> {
    let all = enumerate_causal_paths(graph);
    let partition = partition_nodes(graph, &query.pi)?;
    let mut vars: BTreeSet<usize> = BTreeSet::from([graph.decision()]);
    vars.extend(partition.witness.iter().copied());
    vars.extend(blocks.confounded_members());
    vars.extend(query.condition.iter().map(|&(v, _)| v));
    for p in all.paths() {
        vars.extend(p.iter().copied());
    }
    Ok(ActiveSet { vars })
}

/// The linear bounding program in full-joint mode.
#[derive(Clone, Debug)]
pub struct FullJointProgram<T> {
    pub lp: LinearProgram<T>,
    pub space: ProfileSpace,
    pub active: ActiveSet,
    /// True when some variables were folded into the constraint rows.
    pub reduced: bool,
    /// `P(o)` under the observational distribution.
    pub p_condition: T,
    /// Number of observational rows; the normalization row comes last.
    pub observational_rows: usize,
}

impl<T: Scalar> FullJointProgram<T> {
    /// Largest violation of the observational rows for a profile
    /// distribution.
    pub fn observational_residual(&self, x: &[T]) -> T {
        self.lp.rows[..self.observational_rows]
            .iter()
            .map(|r| (r.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<T>() - r.rhs).abs())
            .fold(T::zero(), T::max)
    }
}

pub(crate) fn round_rhs<T: Scalar>(x: T) -> T {
    let v = x.to_f64_lossy();
    T::lit((v * 1e12).round() / 1e12)
}

fn check_inputs<T: Scalar>(graph: &CausalGraph, obs: &ObservationalDistribution<T>, query: &PceQuery) -> Result<T> {
    obs.check_graph(graph)?;
    if !query.pi.is_subset(&enumerate_causal_paths(graph)) {
        return Err(Error::InvalidPath("path set is not a subset of the causal paths".into()));
    }
    let p_o = obs.marginal(&query.condition);
    if p_o <= T::zero() {
        return Err(Error::ZeroCondition);
    }
    Ok(p_o)
}

fn profile_size(graph: &CausalGraph, vars: impl IntoIterator<Item = usize>) -> u128 {
    saturating_product(vars.into_iter().map(|v| {
        let n = response_count(graph, graph.name(v)).expect("declared");
        usize::try_from(n).unwrap_or(usize::MAX)
    }))
}

/// Assembles the full-joint program, folding unconfounded off-path variables
/// into the rows when the profile space is over the cap.
pub fn build_full_joint<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    options: &ProgramOptions,
) -> Result<FullJointProgram<T>> {
    let p_o = check_inputs(graph, obs, query)?;
    let full = profile_size(graph, 0..graph.len());
    let active = if full <= options.profile_cap as u128 {
        ActiveSet::all(graph)
    } else if options.auto_reduce {
        reduce_active_set(graph, query, &confounded_components(graph))?
    } else {
        return Err(Error::ProfileCap {
            size: full.to_string(),
            cap: options.profile_cap,
        });
    };
    let size = profile_size(graph, active.vars().iter().copied());
    if size > options.profile_cap as u128 {
        return Err(Error::ProfileCap {
            size: size.to_string(),
            cap: options.profile_cap,
        });
    }
    let tables = ResponseTables::build(graph, active.vars().iter().copied(), options.response_cap)?;
    let vars: Vec<usize> = active.vars().iter().copied().collect();
    let space = ProfileSpace::new(graph, &vars, &tables).expect("under cap");
    if active.len() == graph.len() {
        build_saturated(graph, obs, query, tables, space, active, p_o)
    } else {
        build_reduced(graph, obs, query, tables, space, active, p_o)
    }
}

fn build_saturated<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    tables: ResponseTables,
    space: ProfileSpace,
    active: ActiveSet,
    p_o: T,
) -> Result<FullJointProgram<T>> {
    let n = graph.len();
    let cells = graph.cells();
    let eval = WorldEvaluator::new(graph, &tables, query);
    let fixed = vec![None; n];
    let (mut fact, mut act, mut refw) = (vec![0; n], vec![0; n], vec![0; n]);
    let mut profile = ResponseProfile(vec![0; n]);
    let mut row_entries: Vec<Vec<(usize, T)>> = vec![Vec::new(); cells.total()];
    let mut objective = Vec::with_capacity(space.size());
    let weight = T::one() / p_o;
    let d = graph.decision();
    for i in 0..space.size() {
        space.decode_into(i, &mut profile);
        eval.factual(&profile.0, &fixed, &mut fact);
        row_entries[cells.encode(&fact)].push((i, T::one()));
        let c = if query.matches(&fact) {
            eval.dual(&profile.0, &fixed, &mut act, &mut refw);
            let hit = |x: usize| if x == query.y_target { T::one() } else { T::zero() };
            (hit(act[d]) - hit(refw[d])) * weight
        } else {
            T::zero()
        };
        objective.push(c);
    }
    let mut rows: Vec<ConstraintRow<T>> = row_entries
        .into_iter()
        .enumerate()
        .map(|(cell, coeffs)| ConstraintRow {
            coeffs,
            rhs: round_rhs(obs.prob(cell)),
        })
        .collect();
    let observational_rows = rows.len();
    rows.push(ConstraintRow {
        coeffs: (0..space.size()).map(|i| (i, T::one())).collect(),
        rhs: T::one(),
    });
    Ok(FullJointProgram {
        lp: LinearProgram::new(objective, rows),
        space,
        active,
        reduced: false,
        p_condition: p_o,
        observational_rows,
    })
}

fn build_reduced<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    tables: ResponseTables,
    space: ProfileSpace,
    active: ActiveSet,
    p_o: T,
) -> Result<FullJointProgram<T>> {
    let n = graph.len();
    let inactive: Vec<usize> = (0..n).filter(|&v| !active.contains(v)).collect();
    // Inactive parents of active variables: the only inactive values the
    // active part of a world depends on.
    let context: Vec<usize> = inactive
        .iter()
        .copied()
        .filter(|&v| graph.children(v).iter().any(|&c| active.contains(c)))
        .collect();
    let conditionals: Vec<Vec<Option<Vec<T>>>> = (0..n)
        .map(|v| if active.contains(v) { Vec::new() } else { obs.conditional(graph, v) })
        .collect();
    let q = |v: usize, values: &[usize]| -> T {
        match &conditionals[v][graph.parent_config_index(v, values)] {
            Some(row) => row[values[v]],
            None => T::one() / T::from_usize(graph.domain_size(v)).unwrap(),
        }
    };
    let weight_of = |values: &[usize]| inactive.iter().fold(T::one(), |acc, &v| acc * q(v, values));
    let key_of = |values: &[usize]| -> Vec<usize> {
        active
            .vars()
            .iter()
            .chain(context.iter())
            .map(|&v| values[v])
            .collect()
    };

    // Group rows by (active values, context values).
    let mut groups: BTreeMap<Vec<usize>, (T, T)> = BTreeMap::new();
    let cells = graph.cells();
    let mut values = vec![0; n];
    for cell in 0..cells.total() {
        cells.decode_into(cell, &mut values);
        let entry = groups.entry(key_of(&values)).or_insert((T::zero(), T::zero()));
        entry.0 += weight_of(&values);
        entry.1 += obs.prob(cell);
    }
    let row_index: HashMap<Vec<usize>, usize> = groups.keys().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let group_weight: Vec<T> = groups.values().map(|g| g.0).collect();
    let mut row_entries: Vec<Vec<(usize, T)>> = vec![Vec::new(); groups.len()];

    let eval = WorldEvaluator::new(graph, &tables, query);
    let inactive_radix = Radix::new(inactive.iter().map(|&v| graph.domain_size(v)).collect())
        .ok_or_else(|| Error::Size("inactive domain overflows".into()))?;
    let context_radix = Radix::new(context.iter().map(|&v| graph.domain_size(v)).collect()).expect("subset");
    let mut fixed: Vec<Option<usize>> = vec![None; n];
    let (mut fact, mut act, mut refw) = (vec![0; n], vec![0; n], vec![0; n]);
    let mut profile = ResponseProfile(vec![0; n]);
    let mut objective = Vec::with_capacity(space.size());
    let mut digits = vec![0; inactive.len()];
    let mut ctx = vec![0; context.len()];
    let inv_p = T::one() / p_o;
    let d = graph.decision();
    for i in 0..space.size() {
        space.decode_into(i, &mut profile);

        // Rows: one entry per context assignment.
        ctx.iter_mut().for_each(|x| *x = 0);
        loop {
            for f in fixed.iter_mut() {
                *f = None;
            }
            for &v in &inactive {
                fixed[v] = Some(0);
            }
            for (&v, &x) in context.iter().zip(&ctx) {
                fixed[v] = Some(x);
            }
            eval.factual(&profile.0, &fixed, &mut fact);
            let key: Vec<usize> = active
                .vars()
                .iter()
                .map(|&v| fact[v])
                .chain(ctx.iter().copied())
                .collect();
            if let Some(&r) = row_index.get(&key) {
                if group_weight[r] > T::zero() {
                    row_entries[r].push((i, group_weight[r]));
                }
            }
            if !context_radix.increment(&mut ctx) {
                break;
            }
        }

        // Objective: expectation over inactive factual values.
        let mut c = T::zero();
        digits.iter_mut().for_each(|x| *x = 0);
        loop {
            for (&v, &x) in inactive.iter().zip(&digits) {
                fixed[v] = Some(x);
            }
            eval.factual(&profile.0, &fixed, &mut fact);
            if query.matches(&fact) {
                let w = weight_of(&fact);
                if w > T::zero() {
                    eval.dual(&profile.0, &fixed, &mut act, &mut refw);
                    let hit = |x: usize| if x == query.y_target { T::one() } else { T::zero() };
                    c += w * (hit(act[d]) - hit(refw[d]));
                }
            }
            if !inactive_radix.increment(&mut digits) {
                break;
            }
        }
        objective.push(c * inv_p);
    }

    let mut rows: Vec<ConstraintRow<T>> = row_entries
        .into_iter()
        .zip(groups.values())
        .map(|(coeffs, g)| ConstraintRow {
            coeffs,
            rhs: round_rhs(g.1),
        })
        .collect();
    let observational_rows = rows.len();
    rows.push(ConstraintRow {
        coeffs: (0..space.size()).map(|i| (i, T::one())).collect(),
        rhs: T::one(),
    });
    Ok(FullJointProgram {
        lp: LinearProgram::new(objective, rows),
        space,
        active,
        reduced: true,
        p_condition: p_o,
        observational_rows,
    })
}

/// Joint response profiles of one confounded component.
#[derive(Clone, Debug)]
pub struct BlockSpace {
    pub vars: Vec<usize>,
    pub radix: Radix,
}

impl BlockSpace {
    pub fn size(&self) -> usize {
        self.radix.total()
    }
}

/// `prod_c (factors[c] . p_c) = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductRow<T> {
    pub factors: Vec<Vec<T>>,
    pub rhs: T,
}

/// `sum_t coeff_t * prod_c p_c[index_{t,c}]`, stored term-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearForm<T> {
    pub blocks: usize,
    pub indices: Vec<u32>,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> MultilinearForm<T> {
    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn term_indices(&self, t: usize) -> &[u32] {
        &self.indices[t * self.blocks..(t + 1) * self.blocks]
    }

    pub fn evaluate(&self, blocks: &[Vec<T>]) -> T {
        (0..self.terms())
            .map(|t| {
                let idx = self.term_indices(t);
                idx.iter()
                    .enumerate()
                    .fold(self.coeffs[t], |acc, (c, &r)| acc * blocks[c][r as usize])
            })
            .sum()
    }

    /// Coefficients of block `free` with every other block held at
    /// `blocks`.
    pub fn partial(&self, blocks: &[Vec<T>], free: usize) -> Vec<T> {
        let mut out = vec![T::zero(); blocks[free].len()];
        for t in 0..self.terms() {
            let idx = self.term_indices(t);
            let mut prod = self.coeffs[t];
            for (c, &r) in idx.iter().enumerate() {
                if c != free {
                    prod *= blocks[c][r as usize];
                }
            }
            out[idx[free] as usize] += prod;
        }
        out
    }
}

/// The multilinear bounding program in factored mode.
#[derive(Clone, Debug)]
pub struct FactoredProgram<T> {
    pub blocks: Vec<BlockSpace>,
    pub rows: Vec<ProductRow<T>>,
    pub objective: MultilinearForm<T>,
    /// Per-component linear systems implied by the rows when the data
    /// factorizes over the graph; used to draw feasible starting points.
    pub block_systems: Vec<Vec<ConstraintRow<T>>>,
    pub p_condition: T,
    /// Joint profile space over all variables, used to lift block
    /// distributions to a joint one.
    pub space: ProfileSpace,
}

impl<T: Scalar> FactoredProgram<T> {
    pub fn degree(&self) -> usize {
        self.blocks.len()
    }

    pub fn row_value(&self, row: &ProductRow<T>, blocks: &[Vec<T>]) -> T {
        row.factors
            .iter()
            .zip(blocks)
            .map(|(a, p)| a.iter().zip(p).map(|(&x, &y)| x * y).sum::<T>())
            .fold(T::one(), |acc, x| acc * x)
    }

    /// Largest violation of the product rows, block normalization and
    /// nonnegativity.
    pub fn residual(&self, blocks: &[Vec<T>]) -> T {
        let rows = self.rows.iter().map(|r| (self.row_value(r, blocks) - r.rhs).abs());
        let norm = blocks.iter().map(|p| (p.iter().copied().sum::<T>() - T::one()).abs());
        let neg = blocks.iter().flatten().map(|&x| (-x).max(T::zero()));
        rows.chain(norm).chain(neg).fold(T::zero(), T::max)
    }

    /// Product distribution over joint profiles of all variables.
    pub fn lift(&self, blocks: &[Vec<T>]) -> Vec<T> {
        let mut profile = ResponseProfile(vec![0; self.space.decode(0).0.len()]);
        let mut digits = Vec::new();
        (0..self.space.size())
            .map(|i| {
                self.space.decode_into(i, &mut profile);
                self.blocks.iter().zip(blocks).fold(T::one(), |acc, (b, p)| {
                    digits.clear();
                    digits.extend(b.vars.iter().map(|&v| profile.0[v]));
                    acc * p[b.radix.encode(&digits)]
                })
            })
            .collect()
    }
}

/// Assembles the factored program with one block per confounded component.
pub fn build_factored<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    query: &PceQuery,
    blocks: &FactorizationBlocks,
    options: &ProgramOptions,
) -> Result<FactoredProgram<T>> {
    let p_o = check_inputs(graph, obs, query)?;
    let size = profile_size(graph, 0..graph.len());
    if size > options.profile_cap as u128 {
        return Err(Error::ProfileCap {
            size: size.to_string(),
            cap: options.profile_cap,
        });
    }
    let n = graph.len();
    let tables = ResponseTables::all(graph, options.response_cap)?;
    let all: Vec<usize> = (0..n).collect();
    let space = ProfileSpace::new(graph, &all, &tables).expect("under cap");
    let block_spaces: Vec<BlockSpace> = blocks
        .components()
        .iter()
        .map(|vars| BlockSpace {
            vars: vars.clone(),
            radix: Radix::new(vars.iter().map(|&v| tables.table(v).count()).collect()).expect("under cap"),
        })
        .collect();

    // Per-block indicator of a full cell: prod over members of I(v; pa, r).
    let cells = graph.cells();
    let block_factor = |b: &BlockSpace, values: &[usize]| -> Vec<T> {
        let mut digits = vec![0; b.vars.len()];
        let mut out = Vec::with_capacity(b.size());
        loop {
            let hit = b.vars.iter().zip(&digits).all(|(&v, &r)| {
                tables.table(v).output(graph.parent_config_index(v, values), r) == values[v]
            });
            out.push(if hit { T::one() } else { T::zero() });
            if !b.radix.increment(&mut digits) {
                break;
            }
        }
        out
    };
    let mut values = vec![0; n];
    let mut rows = Vec::with_capacity(cells.total());
    for cell in 0..cells.total() {
        cells.decode_into(cell, &mut values);
        rows.push(ProductRow {
            factors: block_spaces.iter().map(|b| block_factor(b, &values)).collect(),
            rhs: round_rhs(obs.prob(cell)),
        });
    }

    let block_systems = component_systems(graph, obs, &block_spaces, &rows);

    let eval = WorldEvaluator::new(graph, &tables, query);
    let fixed = vec![None; n];
    let (mut fact, mut act, mut refw) = (vec![0; n], vec![0; n], vec![0; n]);
    let mut profile = ResponseProfile(vec![0; n]);
    let mut indices = Vec::new();
    let mut coeffs = Vec::new();
    let inv_p = T::one() / p_o;
    let d = graph.decision();
    let mut digits = Vec::new();
    for i in 0..space.size() {
        space.decode_into(i, &mut profile);
        eval.factual(&profile.0, &fixed, &mut fact);
        if !query.matches(&fact) {
            continue;
        }
        eval.dual(&profile.0, &fixed, &mut act, &mut refw);
        let a = u8::from(act[d] == query.y_target);
        let r = u8::from(refw[d] == query.y_target);
        if a == r {
            continue;
        }
        let c = if a > r { inv_p } else { -inv_p };
        for b in &block_spaces {
            digits.clear();
            digits.extend(b.vars.iter().map(|&v| profile.0[v]));
            indices.push(b.radix.encode(&digits) as u32);
        }
        coeffs.push(c);
    }

    Ok(FactoredProgram {
        objective: MultilinearForm {
            blocks: block_spaces.len(),
            indices,
            coeffs,
        },
        blocks: block_spaces,
        rows,
        block_systems,
        p_condition: p_o,
        space,
    })
}

/// Per-component linear rows `factor_c(v) . p_c = Q_c(v)`, where `Q_c(v)` is
/// the product over members `V_i` of `P(v_i | v_<i)` in topological order,
/// kept only where every conditioning prefix has positive mass.
fn component_systems<T: Scalar>(
    graph: &CausalGraph,
    obs: &ObservationalDistribution<T>,
    blocks: &[BlockSpace],
    rows: &[ProductRow<T>],
) -> Vec<Vec<ConstraintRow<T>>> {
    let n = graph.len();
    let topo = graph.topo_order();
    let mut position = vec![0; n];
    for (k, &v) in topo.iter().enumerate() {
        position[v] = k;
    }
    let topo_radix = Radix::new(topo.iter().map(|&v| graph.domain_size(v)).collect()).expect("cells fit");
    // prefix[k][j]: mass of the first k topological variables taking the
    // tuple with index j.
    let mut prefix: Vec<Vec<T>> = (0..=n)
        .map(|k| vec![T::zero(); topo_radix.total() / if k == n { 1 } else { topo_radix.strides()[k] * topo_radix.sizes()[k] }])
        .collect();
    let cells = graph.cells();
    let mut values = vec![0; n];
    let mut topo_values = vec![0; n];
    let topo_index = |values: &[usize], topo_values: &mut Vec<usize>| {
        for (k, &v) in topo.iter().enumerate() {
            topo_values[k] = values[v];
        }
        topo_radix.encode(topo_values)
    };
    let prefix_slot = |t: usize, k: usize| if k == n { t } else { t / (topo_radix.strides()[k] * topo_radix.sizes()[k]) };
    for (cell, p) in obs.support() {
        cells.decode_into(cell, &mut values);
        let t = topo_index(&values, &mut topo_values);
        for (k, pre) in prefix.iter_mut().enumerate() {
            pre[prefix_slot(t, k)] += p;
        }
    }

    let mut systems = Vec::with_capacity(blocks.len());
    for (c, block) in blocks.iter().enumerate() {
        let mut seen: HashMap<Vec<u64>, T> = HashMap::new();
        let mut system = Vec::new();
        for cell in 0..cells.total() {
            cells.decode_into(cell, &mut values);
            let t = topo_index(&values, &mut topo_values);
            let mut q = T::one();
            let mut defined = true;
            for &v in &block.vars {
                let k = position[v];
                let before = prefix[k][prefix_slot(t, k)];
                if before <= T::zero() {
                    defined = false;
                    break;
                }
                q *= prefix[k + 1][prefix_slot(t, k + 1)] / before;
            }
            if !defined {
                continue;
            }
            let factor = &rows[cell].factors[c];
            let key: Vec<u64> = factor.iter().map(|x| x.to_f64_lossy().to_bits()).collect();
            let rhs = round_rhs(q);
            if let Some(prev) = seen.get(&key) {
                if (*prev - rhs).abs() <= T::lit(1e-12) {
                    continue;
                }
            }
            seen.insert(key, rhs);
            system.push(ConstraintRow {
                coeffs: factor
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != T::zero())
                    .map(|(j, &a)| (j, a))
                    .collect(),
                rhs,
            });
        }
        systems.push(system);
    }
    systems
}

/// Writes a full-joint program in CPLEX LP text format.
pub fn export_lp<T: Scalar>(program: &FullJointProgram<T>, maximize: bool) -> String {
    let lp = &program.lp;
    let mut out = String::new();
    let _ = writeln!(out, "\\ path-specific counterfactual effect bounding program");
    let _ = writeln!(out, "{}", if maximize { "Maximize" } else { "Minimize" });
    out.push_str(" obj:");
    write_terms(&mut out, lp.objective.iter().copied().enumerate());
    out.push_str("\nSubject To\n");
    for (i, row) in lp.rows.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        write_terms(&mut out, row.coeffs.iter().copied());
        let _ = writeln!(out, " = {}", row.rhs.to_f64_lossy());
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let _ = writeln!(out, " x{j} >= 0");
    }
    out.push_str("End\n");
    out
}

fn write_terms<T: Scalar>(out: &mut String, terms: impl Iterator<Item = (usize, T)>) {
    let mut any = false;
    for (j, a) in terms {
        if a == T::zero() {
            continue;
        }
        any = true;
        let a = a.to_f64_lossy();
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} x{j}", a.abs());
    }
    if !any {
        out.push_str(" 0 x0");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::PathSet;
    use crate::model::{GraphSpec, VariableSpec};

    fn bin(n: &str) -> VariableSpec {
        VariableSpec::new(n, &["0", "1"])
    }

    fn bow() -> CausalGraph {
        CausalGraph::new(
            GraphSpec::new(vec![bin("X"), bin("Y")], "X", "Y")
                .edge("X", "Y")
                .confound("X", "Y"),
        )
        .unwrap()
    }

    fn tce(g: &CausalGraph) -> PceQuery {
        PceQuery::new(g, 0, 1, 1, vec![], enumerate_causal_paths(g)).unwrap()
    }

    #[test]
    fn bow_program_shape() {
        let g = bow();
        let obs = ObservationalDistribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
        let p: FullJointProgram<f64> = build_full_joint(&g, &obs, &tce(&g), &ProgramOptions::default()).unwrap();
        assert_eq!(p.lp.num_vars(), 8);
        assert_eq!(p.lp.num_rows(), 5);
        assert_eq!(p.observational_rows, 4);
        assert!(!p.reduced);
        // Every column sits in exactly one observational row.
        let mut hits = vec![0; 8];
        for r in &p.lp.rows[..4] {
            for &(j, a) in &r.coeffs {
                assert_eq!(a, 1.0);
                hits[j] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
        let rhs: f64 = p.lp.rows[..4].iter().map(|r| r.rhs).sum();
        assert!((rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn markovian_chain_same_size_in_full_joint() {
        let g = CausalGraph::new(GraphSpec::new(vec![bin("X"), bin("Y")], "X", "Y").edge("X", "Y")).unwrap();
        let obs = ObservationalDistribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
        let p: FullJointProgram<f64> = build_full_joint(&g, &obs, &tce(&g), &ProgramOptions::default()).unwrap();
        assert_eq!(p.lp.num_vars(), 8);
    }

    #[test]
    fn factored_chain_rows_are_products() {
        let g = CausalGraph::new(GraphSpec::new(vec![bin("X"), bin("Y")], "X", "Y").edge("X", "Y")).unwrap();
        let obs = ObservationalDistribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
        let blocks = confounded_components(&g);
        let p: FactoredProgram<f64> =
            build_factored(&g, &obs, &tce(&g), &blocks, &ProgramOptions::default()).unwrap();
        assert_eq!(p.degree(), 2);
        // Row (x0, y1): [I(x0; r_X)] x [I(y1; x0, r_Y)].
        let row = &p.rows[1];
        assert_eq!(row.factors[0], vec![1.0, 0.0]);
        assert_eq!(row.factors[1], vec![0.0, 0.0, 1.0, 1.0]);
        // Component systems pin P(x) and P(y | x).
        assert_eq!(p.block_systems[0].len(), 2);
        assert_eq!(p.block_systems[1].len(), 4);
        let py1_x0 = p.block_systems[1]
            .iter()
            .find(|r| r.coeffs.iter().map(|c| c.0).collect::<Vec<_>>() == vec![2, 3])
            .unwrap();
        assert!((py1_x0.rhs - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_condition_rejected() {
        let g = bow();
        let obs = ObservationalDistribution::from_dense(&g, &[0.5, 0.5, 0.0, 0.0], 1e-9).unwrap();
        let q = PceQuery::new(&g, 0, 1, 1, vec![(0, 1)], PathSet::empty()).unwrap();
        assert!(matches!(
            build_full_joint::<f64>(&g, &obs, &q, &ProgramOptions::default()),
            Err(Error::ZeroCondition)
        ));
    }

    #[test]
    fn cap_without_reduction_errors() {
        let g = bow();
        let obs = ObservationalDistribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
        let opts = ProgramOptions {
            profile_cap: 4,
            auto_reduce: false,
            ..ProgramOptions::default()
        };
        assert!(matches!(
            build_full_joint::<f64>(&g, &obs, &tce(&g), &opts),
            Err(Error::ProfileCap { .. })
        ));
    }

    #[test]
    fn lp_text_export() {
        let g = bow();
        let obs = ObservationalDistribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
        let p: FullJointProgram<f64> = build_full_joint(&g, &obs, &tce(&g), &ProgramOptions::default()).unwrap();
        let text = export_lp(&p, true);
        assert!(text.starts_with("\\ "));
        assert!(text.contains("Maximize\n obj: + 1 x1 - 1 x2 + 1 x5 - 1 x6\n"));
        assert!(text.contains(" c0: + 1 x0 + 1 x1 = 0.3"));
        assert!(text.trim_end().ends_with("End"));
    }
}
