//! Fairness notions as path-specific counterfactual queries, and verdicts.
//!
//! Every notion fixes a factual condition `O` and a path set `pi`:
//!
//! | notion                      | `O`               | `pi`            |
//! |-----------------------------|-------------------|-----------------|
//! | `total-effect`              | none              | all paths       |
//! | `direct`                    | `{S}` or none     | `S -> decision` |
//! | `indirect`                  | `{S}` or none     | redlining paths |
//! | `individual-direct`         | `{S, X}`          | `S -> decision` |
//! | `group-direct`              | `Pa(decision)\S`  | `S -> decision` |
//! | `counterfactual`            | `{S, X}`          | all paths       |
//! | `counterfactual-error-rate` | `{S, Y}`          | direct or redlining |
//! | `individual-indirect`       | `{S, X}`          | redlining paths |
//!
//! `X` is every attribute other than `S`, the decision and the outcome.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::effects::{enumerate_causal_paths, PathSet, PceQuery};
use crate::error::{Error, Result};
use crate::model::CausalGraph;
use crate::scalar::Scalar;
use crate::solver::BoundsResult;

/// Default fairness threshold.
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotionKind {
    TotalEffect,
    #[serde(rename = "direct")]
    SystemDirect,
    #[serde(rename = "indirect")]
    SystemIndirect,
    IndividualDirect,
    GroupDirect,
    #[serde(rename = "counterfactual")]
    CounterfactualFairness,
    CounterfactualErrorRate,
    IndividualIndirect,
}

impl NotionKind {
    pub const ALL: [NotionKind; 8] = [
        NotionKind::TotalEffect,
        NotionKind::SystemDirect,
        NotionKind::SystemIndirect,
        NotionKind::IndividualDirect,
        NotionKind::GroupDirect,
        NotionKind::CounterfactualFairness,
        NotionKind::CounterfactualErrorRate,
        NotionKind::IndividualIndirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NotionKind::TotalEffect => "total-effect",
            NotionKind::SystemDirect => "direct",
            NotionKind::SystemIndirect => "indirect",
            NotionKind::IndividualDirect => "individual-direct",
            NotionKind::GroupDirect => "group-direct",
            NotionKind::CounterfactualFairness => "counterfactual",
            NotionKind::CounterfactualErrorRate => "counterfactual-error-rate",
            NotionKind::IndividualIndirect => "individual-indirect",
        }
    }

    /// Conditions on a full individual profile `{S, X}`.
    pub fn is_individual(self) -> bool {
        matches!(
            self,
            NotionKind::IndividualDirect | NotionKind::CounterfactualFairness | NotionKind::IndividualIndirect
        )
    }

    /// Needs a redlining attribute set.
    pub fn needs_redlining(self) -> bool {
        matches!(self, NotionKind::SystemIndirect | NotionKind::IndividualIndirect)
    }
}

impl fmt::Display for NotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NotionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Query(format!("unknown notion `{s}`")))
    }
}

/// Condition choice for notions that allow either `O = {S}` or `O = {}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupCondition {
    /// `O = {S = s0}`: the effect on the reference group.
    #[default]
    Protected,
    /// `O = {}`: the effect on the whole population.
    None,
}

/// Path choice for the counterfactual error rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorRatePaths {
    Direct,
    Indirect,
}

/// A fairness notion with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotionSpec {
    pub kind: NotionKind,
    /// Redlining attributes for the indirect notions and the indirect error
    /// rate.
    #[serde(default)]
    pub redlining: Vec<String>,
    /// Values of the conditioned variables, as `(name, label)` pairs. A
    /// missing protected value defaults to `s0`.
    #[serde(default)]
    pub assignment: Vec<(String, String)>,
    #[serde(default)]
    pub group_condition: GroupCondition,
    #[serde(default)]
    pub error_rate_paths: Option<ErrorRatePaths>,
}

impl NotionSpec {
    pub fn new(kind: NotionKind) -> Self {
        NotionSpec {
            kind,
            redlining: Vec::new(),
            assignment: Vec::new(),
            group_condition: GroupCondition::default(),
            error_rate_paths: None,
        }
    }

    pub fn with_redlining<S: AsRef<str>>(mut self, attrs: &[S]) -> Self {
        self.redlining = attrs.iter().map(|a| a.as_ref().to_string()).collect();
        self
    }

    pub fn with_assignment<S: AsRef<str>>(mut self, pairs: &[(S, S)]) -> Self {
        self.assignment = pairs
            .iter()
            .map(|(n, l)| (n.as_ref().to_string(), l.as_ref().to_string()))
            .collect();
        self
    }

    pub fn with_group_condition(mut self, c: GroupCondition) -> Self {
        self.group_condition = c;
        self
    }

    pub fn with_error_rate_paths(mut self, p: ErrorRatePaths) -> Self {
        self.error_rate_paths = Some(p);
        self
    }
}

/// The direct path set `{S -> decision}`.
pub fn direct_paths(graph: &CausalGraph) -> Result<PathSet> {
    let (s, d) = (graph.protected(), graph.decision());
    if !graph.has_edge(s, d) {
        return Err(Error::MissingEdge(graph.name(s).into(), graph.name(d).into()));
    }
    PathSet::new(graph, vec![vec![s, d]])
}

/// Causal paths whose interior meets any of `attrs`.
pub fn redlining_paths<S: AsRef<str>>(graph: &CausalGraph, attrs: &[S]) -> Result<PathSet> {
    let mut set = BTreeSet::new();
    for a in attrs {
        let v = graph.index_of(a.as_ref())?;
        if v == graph.protected() || v == graph.decision() {
            return Err(Error::Query(format!(
                "`{}` cannot be a redlining attribute",
                graph.name(v)
            )));
        }
        set.insert(v);
    }
    Ok(enumerate_causal_paths(graph).filter(|p| p[1..p.len() - 1].iter().any(|v| set.contains(v))))
}

/// The variables a notion conditions on, sorted by index.
pub fn condition_variables(notion: &NotionSpec, graph: &CausalGraph) -> Result<Vec<usize>> {
    let s = graph.protected();
    let vars: BTreeSet<usize> = match notion.kind {
        NotionKind::TotalEffect => BTreeSet::new(),
        NotionKind::SystemDirect | NotionKind::SystemIndirect => match notion.group_condition {
            GroupCondition::Protected => BTreeSet::from([s]),
            GroupCondition::None => BTreeSet::new(),
        },
        k if k.is_individual() => std::iter::once(s).chain(graph.attributes()).collect(),
        NotionKind::GroupDirect => graph.parents(graph.decision()).iter().copied().filter(|&p| p != s).collect(),
        NotionKind::CounterfactualErrorRate => {
            let y = graph
                .outcome()
                .ok_or_else(|| Error::Role("the error rate needs an outcome variable in the graph".into()))?;
            BTreeSet::from([s, y])
        }
        _ => unreachable!("all kinds covered"),
    };
    Ok(vars.into_iter().collect())
}

/// The path set a notion fixes.
pub fn notion_paths(notion: &NotionSpec, graph: &CausalGraph) -> Result<PathSet> {
    let redlining = || {
        if notion.redlining.is_empty() {
            Err(Error::EmptyRedlining)
        } else {
            redlining_paths(graph, &notion.redlining)
        }
    };
    match notion.kind {
        NotionKind::TotalEffect | NotionKind::CounterfactualFairness => Ok(enumerate_causal_paths(graph)),
        NotionKind::SystemDirect | NotionKind::IndividualDirect | NotionKind::GroupDirect => direct_paths(graph),
        NotionKind::SystemIndirect | NotionKind::IndividualIndirect => redlining(),
        NotionKind::CounterfactualErrorRate => match notion.error_rate_paths {
            Some(ErrorRatePaths::Direct) => direct_paths(graph),
            Some(ErrorRatePaths::Indirect) => redlining(),
            None => Err(Error::Query(
                "the error rate needs an explicit path choice (direct or indirect)".into(),
            )),
        },
    }
}

/// Builds the query for a notion. Values for the conditioned variables come
/// from the notion's assignment; the protected value defaults to `s0`.
pub fn notion_to_query(
    notion: &NotionSpec,
    graph: &CausalGraph,
    s0: usize,
    s1: usize,
    y_target: usize,
) -> Result<PceQuery> {
    let vars = condition_variables(notion, graph)?;
    let pi = notion_paths(notion, graph)?;
    let mut given = Vec::with_capacity(notion.assignment.len());
    for (name, label) in &notion.assignment {
        let (v, x) = graph.resolve(name, label)?;
        if !vars.contains(&v) {
            return Err(Error::Query(format!(
                "`{name}` is not conditioned on by `{}`",
                notion.kind
            )));
        }
        given.push((v, x));
    }
    let mut condition = Vec::with_capacity(vars.len());
    for &v in &vars {
        match given.iter().find(|(g, _)| *g == v) {
            Some(&(_, x)) => condition.push((v, x)),
            None if v == graph.protected() => condition.push((v, s0)),
            None => {
                return Err(Error::Query(format!(
                    "`{}` needs a value for `{}`",
                    notion.kind,
                    graph.name(v)
                )))
            }
        }
    }
    PceQuery::new(graph, s0, s1, y_target, condition, pi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Fair,
    Unfair,
    Uncertain,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Fair => "fair",
            VerdictKind::Unfair => "unfair",
            VerdictKind::Uncertain => "uncertain",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Fair when the whole interval lies in `[-tau, tau]`, unfair when it lies
/// strictly outside, uncertain otherwise.
pub fn classify(lower: f64, upper: f64, tau: f64) -> VerdictKind {
    if upper <= tau && lower >= -tau {
        VerdictKind::Fair
    } else if lower > tau || upper < -tau {
        VerdictKind::Unfair
    } else {
        VerdictKind::Uncertain
    }
}

/// Verdict from the full-joint interval.
pub fn verdict<T: Scalar>(bounds: &BoundsResult<T>, tau: f64) -> Verdict {
    let full = bounds.full.as_ref().unwrap_or_else(|| bounds.primary());
    let (lower, upper) = (full.lower.to_f64_lossy(), full.upper.to_f64_lossy());
    Verdict {
        kind: classify(lower, upper, tau),
        tau,
        lower,
        upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphSpec, VariableSpec};

    fn fig6() -> CausalGraph {
        let b = |n: &str| VariableSpec::new(n, &["0", "1"]);
        CausalGraph::new(
            GraphSpec::new(vec![b("S"), b("W"), b("A"), b("B"), b("Y")], "S", "Y")
                .edge("S", "Y")
                .edge("S", "W")
                .edge("W", "A")
                .edge("A", "Y")
                .edge("W", "B")
                .edge("B", "Y"),
        )
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in NotionKind::ALL {
            assert_eq!(k.name().parse::<NotionKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("fairness".parse::<NotionKind>().is_err());
    }

    #[test]
    fn redlining_on_fig6() {
        let g = fig6();
        assert_eq!(redlining_paths(&g, &["W"]).unwrap().format(&g), vec!["S->W->A->Y", "S->W->B->Y"]);
        assert_eq!(redlining_paths(&g, &["A"]).unwrap().format(&g), vec!["S->W->A->Y"]);
        assert!(redlining_paths::<&str>(&g, &[]).unwrap().is_empty());
        assert!(redlining_paths(&g, &["S"]).is_err());
    }

    #[test]
    fn group_direct_conditions_on_other_parents() {
        let g = fig6();
        let n = NotionSpec::new(NotionKind::GroupDirect).with_assignment(&[("A", "1"), ("B", "0")]);
        let q = notion_to_query(&n, &g, 0, 1, 0).unwrap();
        assert_eq!(q.condition, vec![(2, 1), (3, 0)]);
        assert_eq!(q.pi.format(&g), vec!["S->Y"]);
    }

    #[test]
    fn individual_notions() {
        let g = fig6();
        let n = NotionSpec::new(NotionKind::CounterfactualFairness)
            .with_assignment(&[("W", "1"), ("A", "0"), ("B", "1")]);
        let q = notion_to_query(&n, &g, 0, 1, 0).unwrap();
        assert_eq!(q.condition, vec![(0, 0), (1, 1), (2, 0), (3, 1)]);
        assert_eq!(q.pi.len(), 3);
        let n = NotionSpec::new(NotionKind::IndividualIndirect)
            .with_redlining(&["W"])
            .with_assignment(&[("S", "1"), ("W", "1"), ("A", "0"), ("B", "1")]);
        let q = notion_to_query(&n, &g, 0, 1, 0).unwrap();
        assert_eq!(q.condition[0], (0, 1));
        assert_eq!(q.pi.len(), 2);
        let missing = NotionSpec::new(NotionKind::IndividualDirect).with_assignment(&[("W", "1")]);
        assert!(matches!(notion_to_query(&missing, &g, 0, 1, 0), Err(Error::Query(_))));
    }

    #[test]
    fn parameter_errors() {
        let g = fig6();
        assert!(matches!(
            notion_to_query(&NotionSpec::new(NotionKind::SystemIndirect), &g, 0, 1, 0),
            Err(Error::EmptyRedlining)
        ));
        let no_direct = CausalGraph::new(
            GraphSpec::new(
                vec![VariableSpec::new("S", &["0", "1"]), VariableSpec::new("Y", &["0", "1"])],
                "S",
                "Y",
            ),
        )
        .unwrap();
        assert!(matches!(
            notion_to_query(&NotionSpec::new(NotionKind::SystemDirect), &no_direct, 0, 1, 0),
            Err(Error::MissingEdge(_, _))
        ));
        assert!(matches!(
            notion_to_query(&NotionSpec::new(NotionKind::CounterfactualErrorRate), &g, 0, 1, 0),
            Err(Error::Role(_))
        ));
    }

    #[test]
    fn system_notions_default_to_reference_group() {
        let g = fig6();
        let q = notion_to_query(&NotionSpec::new(NotionKind::SystemDirect), &g, 0, 1, 0).unwrap();
        assert_eq!(q.condition, vec![(0, 0)]);
        let n = NotionSpec::new(NotionKind::SystemDirect).with_group_condition(GroupCondition::None);
        assert!(notion_to_query(&n, &g, 0, 1, 0).unwrap().condition.is_empty());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(classify(-0.05, 0.05, 0.1), VerdictKind::Fair);
        assert_eq!(classify(0.1772, 0.1836, 0.1), VerdictKind::Unfair);
        assert_eq!(classify(-0.2605, 0.2656, 0.1), VerdictKind::Uncertain);
        assert_eq!(classify(-0.0783, -0.0212, 0.1), VerdictKind::Fair);
        // Boundaries: |PCE| <= tau is fair.
        assert_eq!(classify(-0.1, 0.1, 0.1), VerdictKind::Fair);
        assert_eq!(classify(0.1, 0.2, 0.1), VerdictKind::Uncertain);
    }
}
