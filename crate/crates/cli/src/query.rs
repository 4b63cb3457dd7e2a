//! Turning command-line query flags into concrete queries.

use anyhow::{anyhow, bail, Result};
use serde_json::Value;

use pcbound::effects::enumerate_causal_paths;
use pcbound::fairness::{direct_paths, notion_to_query, redlining_paths, condition_variables};
use pcbound::{CausalGraph, Error, NotionSpec, PathSet, PceQuery};

/// A path-set argument: `all`, `direct`, `{"through": [...]}` or an explicit
/// array of paths given as node-name arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiSpec {
    All,
    Direct,
    Through(Vec<String>),
    Explicit(Vec<Vec<String>>),
}

impl PiSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        match trimmed {
            "all" => return Ok(PiSpec::All),
            "direct" => return Ok(PiSpec::Direct),
            _ => {}
        }
        let value: Value =
            serde_json::from_str(trimmed).map_err(|e| anyhow!("cannot parse path set `{text}`: {e}"))?;
        match value {
            Value::String(s) if s == "all" => Ok(PiSpec::All),
            Value::String(s) if s == "direct" => Ok(PiSpec::Direct),
            Value::Object(map) => {
                let through = map
                    .get("through")
                    .filter(|_| map.len() == 1)
                    .ok_or_else(|| anyhow!("path-set object must have the single key `through`"))?;
                Ok(PiSpec::Through(serde_json::from_value(through.clone())?))
            }
            Value::Array(_) => Ok(PiSpec::Explicit(serde_json::from_value(value)?)),
            other => bail!("unsupported path set `{other}`"),
        }
    }

    pub fn resolve(&self, graph: &CausalGraph) -> pcbound::Result<PathSet> {
        match self {
            PiSpec::All => Ok(enumerate_causal_paths(graph)),
            PiSpec::Direct => direct_paths(graph),
            PiSpec::Through(attrs) if attrs.is_empty() => Err(Error::EmptyRedlining),
            PiSpec::Through(attrs) => redlining_paths(graph, attrs),
            PiSpec::Explicit(paths) => PathSet::from_names(graph, paths),
        }
    }
}

/// One `--condition` entry: `name=label` fixes a value, a bare `name` asks
/// for every value in turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionItem {
    pub variable: String,
    pub label: Option<String>,
}

impl std::str::FromStr for ConditionItem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (variable, label) = match s.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim().to_string())),
            None => (s, None),
        };
        if variable.is_empty() || label.as_deref() == Some("") {
            return Err(format!("malformed condition entry `{s}` (expected name=label or name)"));
        }
        Ok(ConditionItem {
            variable: variable.to_string(),
            label,
        })
    }
}

/// A query with some condition variables still open.
#[derive(Clone, Debug)]
pub struct QueryTemplate {
    pub notion: Option<NotionSpec>,
    pub pi: Option<PiSpec>,
    pub s0: String,
    pub s1: String,
    pub y: String,
    /// Fixed condition values as `(name, label)`.
    pub fixed: Vec<(String, String)>,
    /// Variables to enumerate, sorted by index.
    pub open: Vec<usize>,
}

pub struct TemplateInput<'a> {
    pub notion: Option<NotionSpec>,
    pub pi: Option<&'a str>,
    pub redlining: &'a [String],
    pub s0: Option<&'a str>,
    pub s1: Option<&'a str>,
    pub y: Option<&'a str>,
    pub condition: &'a [ConditionItem],
}

impl QueryTemplate {
    pub fn new(graph: &CausalGraph, input: TemplateInput<'_>) -> Result<Self> {
        let s = graph.protected();
        let domain = graph.domain(s);
        let s0 = input.s0.unwrap_or(&domain[0]).to_string();
        let s1 = match input.s1 {
            Some(l) => l.to_string(),
            None => domain
                .get(1)
                .ok_or_else(|| anyhow!("`{}` has a single value; pass --s1", graph.name(s)))?
                .clone(),
        };
        for l in [&s0, &s1] {
            if graph.label_index(s, l).is_none() {
                bail!("`{l}` is not a label of `{}`", graph.name(s));
            }
        }
        let y = input.y.unwrap_or(&graph.domain(graph.decision())[0]).to_string();
        if graph.label_index(graph.decision(), &y).is_none() {
            bail!("`{y}` is not a label of `{}`", graph.name(graph.decision()));
        }

        let mut fixed = Vec::new();
        let mut open_names = Vec::new();
        for item in input.condition {
            let v = graph.index_of(&item.variable)?;
            if fixed.iter().any(|(n, _): &(String, String)| n == &item.variable) || open_names.contains(&v) {
                bail!("`{}` appears twice in --condition", item.variable);
            }
            match &item.label {
                Some(l) => {
                    graph.resolve(&item.variable, l)?;
                    fixed.push((item.variable.clone(), l.clone()));
                }
                None => open_names.push(v),
            }
        }

        let pi = input.pi.map(PiSpec::parse).transpose()?;
        let (notion, pi, open) = match input.notion {
            Some(mut notion) => {
                if pi.is_some() {
                    bail!("--pi cannot be combined with --notion; the notion fixes the path set");
                }
                notion.redlining = input.redlining.to_vec();
                notion.assignment = fixed.clone();
                let vars = condition_variables(&notion, graph)?;
                for (name, _) in &fixed {
                    let v = graph.index_of(name)?;
                    if !vars.contains(&v) {
                        bail!("`{name}` is not conditioned on by `{}`", notion.kind);
                    }
                }
                let open: Vec<usize> = vars
                    .into_iter()
                    .filter(|&v| !fixed.iter().any(|(n, _)| n == graph.name(v)))
                    .collect();
                (Some(notion), None, open)
            }
            None => {
                let pi = match (pi, input.redlining.is_empty()) {
                    (Some(p), true) => p,
                    (None, true) => PiSpec::All,
                    (None, false) => PiSpec::Through(input.redlining.to_vec()),
                    (Some(_), false) => bail!("--redlining cannot be combined with --pi"),
                };
                open_names.sort_unstable();
                (None, Some(pi), open_names)
            }
        };
        Ok(QueryTemplate {
            notion,
            pi,
            s0,
            s1,
            y,
            fixed,
            open,
        })
    }

    /// Every completion of the open variables, first open variable most
    /// significant. A template without open variables has one empty cell.
    pub fn cells(&self, graph: &CausalGraph) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for &v in &self.open {
            cells = cells
                .into_iter()
                .flat_map(|prefix: Vec<(String, String)>| {
                    graph.domain(v).iter().map(move |label| {
                        let mut next = prefix.clone();
                        next.push((graph.name(v).to_string(), label.clone()));
                        next
                    })
                })
                .collect();
        }
        cells
    }

    /// The query for one cell of open-variable values.
    pub fn query(&self, graph: &CausalGraph, cell: &[(String, String)]) -> Result<PceQuery> {
        let mut assignment = self.fixed.clone();
        assignment.extend(cell.iter().cloned());
        let s = graph.protected();
        let s0 = graph.label_index(s, &self.s0).expect("checked at construction");
        let s1 = graph.label_index(s, &self.s1).expect("checked at construction");
        let y = graph.label_index(graph.decision(), &self.y).expect("checked at construction");
        match (&self.notion, &self.pi) {
            (Some(notion), _) => {
                let notion = notion.clone().with_assignment(&assignment);
                Ok(notion_to_query(&notion, graph, s0, s1, y)?)
            }
            (None, Some(pi)) => {
                let pi = pi.resolve(graph)?;
                Ok(PceQuery::from_labels(graph, &self.s0, &self.s1, Some(&self.y), &assignment, pi)?)
            }
            (None, None) => unreachable!("a template has a notion or a path set"),
        }
    }
}
