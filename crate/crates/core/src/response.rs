//! Response-function variables.
//!
//! A response function of `V` is a deterministic map from parent
//! configurations to values of `V`. Functions are numbered as base-`|dom V|`
//! numerals whose digits are the outputs on each parent configuration, most
//! significant digit first, with configurations in lexicographic order. For a
//! binary child of one binary parent this gives constant-low, identity,
//! inverter, constant-high.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::CausalGraph;
use crate::radix::Radix;

/// Default per-variable cap on the number of response functions.
pub const DEFAULT_RESPONSE_CAP: usize = 1 << 20;

/// `|dom V|` raised to the number of parent configurations (saturating).
pub fn response_count(graph: &CausalGraph, name: &str) -> Result<u128> {
    let v = graph.index_of(name)?;
    Ok(count_for(graph, v))
}

fn count_for(graph: &CausalGraph, v: usize) -> u128 {
    let d = graph.domain_size(v) as u128;
    let configs = graph.parent_configs(v);
    let mut n: u128 = 1;
    for _ in 0..configs {
        n = n.saturating_mul(d);
        if n == u128::MAX {
            break;
        }
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseFunctionTable {
    variable: usize,
    parents: Vec<usize>,
    domain: usize,
    configs: usize,
    count: usize,
    // Place value of each configuration's digit.
    place: Vec<usize>,
}

impl ResponseFunctionTable {
    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    /// `g_V(config, r)`.
    #[inline]
    pub fn output(&self, config: usize, r: usize) -> usize {
        (r / self.place[config]) % self.domain
    }

    /// Outputs of function `r` on every configuration.
    pub fn function(&self, r: usize) -> Vec<usize> {
        (0..self.configs).map(|c| self.output(c, r)).collect()
    }

    /// Index of the function with the given outputs.
    pub fn index_of(&self, outputs: &[usize]) -> usize {
        outputs.iter().zip(&self.place).map(|(x, p)| x * p).sum()
    }

    /// JSON dump with labels, for debugging.
    pub fn dump(&self, graph: &CausalGraph) -> Value {
        let configs = Radix::new(self.parents.iter().map(|&p| graph.domain_size(p)).collect()).expect("small");
        let functions: Vec<Value> = (0..self.count)
            .map(|r| {
                let rows: Vec<Value> = (0..self.configs)
                    .map(|c| {
                        let pa = configs.decode(c);
                        let key = self
                            .parents
                            .iter()
                            .zip(&pa)
                            .map(|(&p, &x)| format!("{}={}", graph.name(p), graph.label(p, x)))
                            .collect::<Vec<_>>()
                            .join(",");
                        json!([key, graph.label(self.variable, self.output(c, r))])
                    })
                    .collect();
                json!({ "r": r, "map": rows })
            })
            .collect();
        json!({
            "variable": graph.name(self.variable),
            "parents": self.parents.iter().map(|&p| graph.name(p)).collect::<Vec<_>>(),
            "count": self.count,
            "functions": functions,
        })
    }
}

pub fn enumerate_response_functions(graph: &CausalGraph, name: &str, cap: usize) -> Result<ResponseFunctionTable> {
    let v = graph.index_of(name)?;
    table_for(graph, v, cap)
}

pub(crate) fn table_for(graph: &CausalGraph, v: usize, cap: usize) -> Result<ResponseFunctionTable> {
    let count = count_for(graph, v);
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            variable: graph.name(v).to_string(),
            in_degree: graph.parents(v).len(),
            count: if count == u128::MAX { "more than 2^128".into() } else { count.to_string() },
            cap,
        });
    }
    let domain = graph.domain_size(v);
    let configs = graph.parent_configs(v);
    let mut place = vec![1; configs];
    for c in (0..configs.saturating_sub(1)).rev() {
        place[c] = place[c + 1] * domain;
    }
    Ok(ResponseFunctionTable {
        variable: v,
        parents: graph.parents(v).to_vec(),
        domain,
        configs,
        count: count as usize,
        place,
    })
}

/// 1 iff `g_V(config, r) == value`.
#[inline]
pub fn indicator(value: usize, config: usize, r: usize, table: &ResponseFunctionTable) -> u8 {
    u8::from(table.output(config, r) == value)
}

/// Response tables for a subset of variables.
#[derive(Clone, Debug)]
pub struct ResponseTables {
    tables: Vec<Option<ResponseFunctionTable>>,
}

impl ResponseTables {
    pub fn build(graph: &CausalGraph, variables: impl IntoIterator<Item = usize>, cap: usize) -> Result<Self> {
        let mut tables = vec![None; graph.len()];
        for v in variables {
            tables[v] = Some(table_for(graph, v, cap)?);
        }
        Ok(ResponseTables { tables })
    }

    pub fn all(graph: &CausalGraph, cap: usize) -> Result<Self> {
        Self::build(graph, 0..graph.len(), cap)
    }

    pub fn get(&self, v: usize) -> Option<&ResponseFunctionTable> {
        self.tables[v].as_ref()
    }

    pub fn table(&self, v: usize) -> &ResponseFunctionTable {
        self.tables[v].as_ref().expect("variable has a response table")
    }
}

/// One response index per variable. Entries for variables without a
/// response variable are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResponseProfile(pub Vec<usize>);

/// Lexicographic enumeration of joint response profiles over a set of
/// variables (declaration order, first most significant).
#[derive(Clone, Debug)]
pub struct ProfileSpace {
    vars: Vec<usize>,
    radix: Radix,
    width: usize,
}

impl ProfileSpace {
    pub fn new(graph: &CausalGraph, vars: &[usize], tables: &ResponseTables) -> Option<Self> {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        let radix = Radix::new(vars.iter().map(|&v| tables.table(v).count()).collect())?;
        Some(ProfileSpace {
            vars,
            radix,
            width: graph.len(),
        })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn size(&self) -> usize {
        self.radix.total()
    }

    pub fn radix(&self) -> &Radix {
        &self.radix
    }

    pub fn decode(&self, index: usize) -> ResponseProfile {
        let mut p = ResponseProfile(vec![0; self.width]);
        self.decode_into(index, &mut p);
        p
    }

    pub fn decode_into(&self, mut index: usize, profile: &mut ResponseProfile) {
        for (k, &v) in self.vars.iter().enumerate() {
            let s = self.radix.strides()[k];
            profile.0[v] = index / s;
            index %= s;
        }
    }

    pub fn encode(&self, profile: &ResponseProfile) -> usize {
        self.vars
            .iter()
            .zip(self.radix.strides())
            .map(|(&v, s)| profile.0[v] * s)
            .sum()
    }
}

/// Partition of the variables into connected components of the bidirected
/// graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationBlocks {
    components: Vec<Vec<usize>>,
}

impl FactorizationBlocks {
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.components.iter().position(|c| c.contains(&v)).expect("partition")
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Variables sharing a component with at least one other variable.
    pub fn confounded_members(&self) -> BTreeSet<usize> {
        self.components.iter().filter(|c| c.len() > 1).flatten().copied().collect()
    }
}

/// Components sorted by smallest member; members sorted.
pub fn confounded_components(graph: &CausalGraph) -> FactorizationBlocks {
    let n = graph.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for &(a, b) in graph.confounded() {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra != rb {
            root[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut root, v);
        if slot[r] == usize::MAX {
            slot[r] = components.len();
            components.push(Vec::new());
        }
        components[slot[r]].push(v);
    }
    FactorizationBlocks { components }
}
