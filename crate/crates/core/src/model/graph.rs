use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::Radix;

/// A full endogenous assignment, one domain index per variable in declaration
/// order.
pub type Assignment = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: &str, domain: &[&str]) -> Self {
        VariableSpec {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Declarative graph description as it appears in model files.
///
/// `edges` are directed `[parent, child]` pairs and `confounded` lists
/// unordered pairs joined by a bidirected (hidden-confounder) edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub confounded: Vec<(String, String)>,
    pub protected: String,
    pub decision: String,
    /// True outcome column, needed only by error-rate notions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
}

impl GraphSpec {
    pub fn new(variables: Vec<VariableSpec>, protected: &str, decision: &str) -> Self {
        GraphSpec {
            variables,
            edges: Vec::new(),
            confounded: Vec::new(),
            protected: protected.to_string(),
            decision: decision.to_string(),
            outcome: None,
        }
    }

    pub fn edge(mut self, parent: &str, child: &str) -> Self {
        self.edges.push((parent.to_string(), child.to_string()));
        self
    }

    pub fn confound(mut self, a: &str, b: &str) -> Self {
        self.confounded.push((a.to_string(), b.to_string()));
        self
    }

    pub fn with_outcome(mut self, outcome: &str) -> Self {
        self.outcome = Some(outcome.to_string());
        self
    }
}

/// Checks every structural invariant of a graph description.
pub fn validate_graph(spec: &GraphSpec) -> Result<()> {
    CausalGraph::new(spec.clone()).map(|_| ())
}

/// A validated causal graph with index-based adjacency.
///
/// Variables are indexed in declaration order; that order is canonical for
/// every table in the crate. Parent lists are sorted by index.
#[derive(Clone, Debug)]
pub struct CausalGraph {
    spec: GraphSpec,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    confounded: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    protected: usize,
    decision: usize,
    outcome: Option<usize>,
    cells: Radix,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.spec.variables == other.spec.variables
            && self.edges == other.edges
            && self.confounded == other.confounded
            && self.protected == other.protected
            && self.decision == other.decision
            && self.outcome == other.outcome
    }
}

impl CausalGraph {
    pub fn new(spec: GraphSpec) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in spec.variables.iter().enumerate() {
            if v.name.is_empty() {
                return Err(Error::Graph("empty variable name".into()));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::Graph(format!("variable `{}` declared twice", v.name)));
            }
            if v.domain.is_empty() {
                return Err(Error::Graph(format!("`{}` has an empty domain", v.name)));
            }
            let labels: HashSet<&String> = v.domain.iter().collect();
            if labels.len() != v.domain.len() {
                return Err(Error::Graph(format!("`{}` has duplicate labels", v.name)));
            }
        }
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::Name(name.to_string()));

        let mut edges = BTreeSet::new();
        for (p, c) in &spec.edges {
            let (p, c) = (lookup(p)?, lookup(c)?);
            if p == c {
                return Err(Error::Graph(format!("self-loop on `{}`", spec.variables[p].name)));
            }
            edges.insert((p, c));
        }
        let mut confounded = BTreeSet::new();
        for (a, b) in &spec.confounded {
            let (a, b) = (lookup(a)?, lookup(b)?);
            if a == b {
                return Err(Error::Graph(format!(
                    "bidirected edge needs distinct endpoints, got `{}`",
                    spec.variables[a].name
                )));
            }
            confounded.insert((a.min(b), a.max(b)));
        }

        let role = |name: &str, what: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Role(format!("{what} variable `{name}` is not declared")))
        };
        let protected = role(&spec.protected, "protected")?;
        let decision = role(&spec.decision, "decision")?;
        if protected == decision {
            return Err(Error::Role("protected and decision must differ".into()));
        }
        for r in [protected, decision] {
            if spec.variables[r].domain.len() < 2 {
                return Err(Error::Role(format!(
                    "`{}` needs at least two labels",
                    spec.variables[r].name
                )));
            }
        }
        let outcome = match &spec.outcome {
            Some(name) => {
                let o = role(name, "outcome")?;
                if o == protected || o == decision {
                    return Err(Error::Role("outcome must differ from protected and decision".into()));
                }
                Some(o)
            }
            None => None,
        };

        let n = spec.variables.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &edges {
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        // Kahn's algorithm, always releasing the smallest ready index.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).expect("cycle member");
            return Err(Error::Cycle(spec.variables[stuck].name.clone()));
        }

        let cells = Radix::new(spec.variables.iter().map(|v| v.domain.len()).collect())
            .ok_or_else(|| Error::Graph("joint domain overflows".into()))?;

        Ok(CausalGraph {
            index,
            edges: edges.into_iter().collect(),
            confounded: confounded.into_iter().collect(),
            parents,
            children,
            topo,
            protected,
            decision,
            outcome,
            cells,
            spec,
        })
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.variables.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.spec.variables[v].name
    }

    pub fn domain(&self, v: usize) -> &[String] {
        &self.spec.variables[v].domain
    }

    pub fn domain_size(&self, v: usize) -> usize {
        self.spec.variables[v].domain.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::Name(name.to_string()))
    }

    pub fn label_index(&self, v: usize, label: &str) -> Option<usize> {
        self.spec.variables[v].domain.iter().position(|l| l == label)
    }

    /// Resolves `name=label` into indices.
    pub fn resolve(&self, name: &str, label: &str) -> Result<(usize, usize)> {
        let v = self.index_of(name)?;
        let x = self.label_index(v, label).ok_or_else(|| {
            Error::Query(format!("label `{label}` is not in the domain of `{name}`"))
        })?;
        Ok((v, x))
    }

    pub fn label(&self, v: usize, value: usize) -> &str {
        &self.spec.variables[v].domain[value]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.edges.binary_search(&(parent, child)).is_ok()
    }

    /// Bidirected edges as `(min, max)` index pairs.
    pub fn confounded(&self) -> &[(usize, usize)] {
        &self.confounded
    }

    pub fn is_confounded(&self, a: usize, b: usize) -> bool {
        self.confounded.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn protected(&self) -> usize {
        self.protected
    }

    pub fn decision(&self) -> usize {
        self.decision
    }

    pub fn outcome(&self) -> Option<usize> {
        self.outcome
    }

    /// Non-protected attributes: everything except the protected variable,
    /// the decision, and the declared outcome column.
    pub fn attributes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| v != self.protected && v != self.decision && Some(v) != self.outcome)
            .collect()
    }

    /// Full joint domain indexing.
    pub fn cells(&self) -> &Radix {
        &self.cells
    }

    /// Number of joint parent configurations of `v`.
    pub fn parent_configs(&self, v: usize) -> usize {
        self.parents[v].iter().map(|&p| self.domain_size(p)).product()
    }

    /// Lexicographic index of the parent configuration of `v` read off a full
    /// assignment.
    pub fn parent_config_index(&self, v: usize, values: &[usize]) -> usize {
        let mut idx = 0;
        for &p in &self.parents[v] {
            idx = idx * self.domain_size(p) + values[p];
        }
        idx
    }

    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &c in &self.children[x] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }

    pub fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &p in &self.parents[x] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Formats an assignment over a subset of variables as `name=label,...`.
    pub fn format_partial(&self, pairs: &[(usize, usize)]) -> String {
        pairs
            .iter()
            .map(|&(v, x)| format!("{}={}", self.name(v), self.label(v, x)))
            .collect::<Vec<_>>()
            .join(",")
    }
}
