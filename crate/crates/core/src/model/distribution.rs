use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::graph::CausalGraph;
use crate::radix::Radix;
use crate::scalar::Scalar;

/// Sum-to-one tolerance for ingested (float-rounded) tables.
pub const INGEST_TOLERANCE: f64 = 1e-9;
/// Sum-to-one tolerance for tables computed from oracle models.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

/// Joint probability table over all endogenous variables.
///
/// Cells are addressed by their lexicographic index in the graph's joint
/// domain. Absent cells have probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationalDistribution<T> {
    cells: Radix,
    table: BTreeMap<usize, T>,
    counts: Option<Counts>,
}

/// Raw frequencies behind an empirical distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    pub cells: BTreeMap<usize, u64>,
    pub total: u64,
}

impl<T: Scalar> ObservationalDistribution<T> {
    /// Builds a table from `(cell index, probability)` pairs. Repeated cells
    /// are summed.
    pub fn from_cells(
        graph: &CausalGraph,
        cells: impl IntoIterator<Item = (usize, T)>,
        tolerance: f64,
    ) -> Result<Self> {
        let radix = graph.cells().clone();
        let mut table = BTreeMap::new();
        for (cell, p) in cells {
            if cell >= radix.total() {
                return Err(Error::Distribution(format!("cell {cell} out of range")));
            }
            if !p.is_finite() || p < T::zero() {
                return Err(Error::Distribution(format!("cell {cell} has probability {p}")));
            }
            if p > T::zero() {
                *table.entry(cell).or_insert_with(T::zero) += p;
            }
        }
        let total: T = table.values().copied().sum();
        if (total - T::one()).abs() > T::lit(tolerance) {
            return Err(Error::Distribution(format!(
                "probabilities sum to {total}, expected 1 within {tolerance:e}"
            )));
        }
        Ok(ObservationalDistribution {
            cells: radix,
            table,
            counts: None,
        })
    }

    pub fn from_assignments(
        graph: &CausalGraph,
        entries: impl IntoIterator<Item = (Vec<usize>, T)>,
        tolerance: f64,
    ) -> Result<Self> {
        let radix = graph.cells();
        let mut cells = Vec::new();
        for (a, p) in entries {
            if a.len() != radix.len() || a.iter().zip(radix.sizes()).any(|(x, s)| x >= s) {
                return Err(Error::Distribution(format!("assignment {a:?} is out of domain")));
            }
            cells.push((radix.encode(&a), p));
        }
        Self::from_cells(graph, cells, tolerance)
    }

    pub fn from_dense(graph: &CausalGraph, probs: &[T], tolerance: f64) -> Result<Self> {
        if probs.len() != graph.cells().total() {
            return Err(Error::Distribution(format!(
                "dense table has {} cells, graph has {}",
                probs.len(),
                graph.cells().total()
            )));
        }
        Self::from_cells(graph, probs.iter().copied().enumerate(), tolerance)
    }

    /// Exact frequencies; probabilities are `count / total`.
    pub fn from_counts(graph: &CausalGraph, counts: Counts) -> Result<Self> {
        if counts.total == 0 {
            return Err(Error::EmptyData);
        }
        let denom = T::from_u64(counts.total).expect("count fits");
        let table = counts
            .cells
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&cell, &c)| (cell, T::from_u64(c).expect("count fits") / denom))
            .collect();
        Ok(ObservationalDistribution {
            cells: graph.cells().clone(),
            table,
            counts: Some(counts),
        })
    }

    /// Fails unless the table was built over a graph with the same joint
    /// domain as `graph`.
    pub fn check_graph(&self, graph: &CausalGraph) -> Result<()> {
        if self.cells != *graph.cells() {
            return Err(Error::Distribution(
                "distribution does not match the graph's variables".into(),
            ));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.cells.total()
    }

    pub fn prob(&self, cell: usize) -> T {
        self.table.get(&cell).copied().unwrap_or_else(T::zero)
    }

    pub fn prob_of(&self, assignment: &[usize]) -> T {
        self.prob(self.cells.encode(assignment))
    }

    /// Nonzero cells in index order.
    pub fn support(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.table.iter().map(|(&c, &p)| (c, p))
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cells.total()];
        for (&c, &p) in &self.table {
            out[c] = p;
        }
        out
    }

    pub fn counts(&self) -> Option<&Counts> {
        self.counts.as_ref()
    }

    /// Probability of a partial assignment `(variable, value)`.
    pub fn marginal(&self, condition: &[(usize, usize)]) -> T {
        let mut digits = vec![0; self.cells.len()];
        self.table
            .iter()
            .filter(|(&cell, _)| {
                self.cells.decode_into(cell, &mut digits);
                condition.iter().all(|&(v, x)| digits[v] == x)
            })
            .map(|(_, &p)| p)
            .sum()
    }

    /// Conditional `P(v = x | parents)` for every value and parent
    /// configuration of `v`, as a `[config][value]` table. Configurations
    /// without support get `None`.
    pub fn conditional(&self, graph: &CausalGraph, v: usize) -> Vec<Option<Vec<T>>> {
        let configs = graph.parent_configs(v);
        let k = graph.domain_size(v);
        let mut joint = vec![vec![T::zero(); k]; configs];
        let mut digits = vec![0; self.cells.len()];
        for (&cell, &p) in &self.table {
            self.cells.decode_into(cell, &mut digits);
            joint[graph.parent_config_index(v, &digits)][digits[v]] += p;
        }
        joint
            .into_iter()
            .map(|row| {
                let mass: T = row.iter().copied().sum();
                (mass > T::zero()).then(|| row.into_iter().map(|p| p / mass).collect())
            })
            .collect()
    }

    pub fn l1_distance(&self, other: &Self) -> T {
        let mut keys: Vec<usize> = self.table.keys().chain(other.table.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|c| (self.prob(c) - other.prob(c)).abs())
            .sum()
    }

    pub fn total_mass(&self) -> T {
        self.table.values().copied().sum()
    }
}

/// Builds the exact frequency table of a list of labelled records.
///
/// Each record lists one label per variable, in the graph's declaration
/// order.
pub fn empirical_distribution<T, R, S>(
    records: &[R],
    graph: &CausalGraph,
) -> Result<ObservationalDistribution<T>>
where
    T: Scalar,
    R: AsRef<[S]>,
    S: AsRef<str>,
{
    if records.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut indexed = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let rec = rec.as_ref();
        if rec.len() != graph.len() {
            return Err(Error::Distribution(format!(
                "record {i} has {} fields, expected {}",
                rec.len(),
                graph.len()
            )));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (v, label) in rec.iter().enumerate() {
            let label = label.as_ref();
            let x = graph.label_index(v, label).ok_or_else(|| Error::UnknownLabel {
                record: i,
                variable: graph.name(v).to_string(),
                label: label.to_string(),
            })?;
            row.push(x);
        }
        indexed.push(row);
    }
    empirical_from_indices(&indexed, graph)
}

/// Like [`empirical_distribution`] for records already mapped to domain
/// indices.
pub fn empirical_from_indices<T: Scalar>(
    records: &[Vec<usize>],
    graph: &CausalGraph,
) -> Result<ObservationalDistribution<T>> {
    if records.is_empty() {
        return Err(Error::EmptyData);
    }
    let radix = graph.cells();
    let mut cells = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != radix.len() {
            return Err(Error::Distribution(format!("record {i} has the wrong arity")));
        }
        if let Some(v) = rec.iter().zip(radix.sizes()).position(|(x, s)| x >= s) {
            return Err(Error::UnknownLabel {
                record: i,
                variable: graph.name(v).to_string(),
                label: rec[v].to_string(),
            });
        }
        *cells.entry(radix.encode(rec)).or_insert(0u64) += 1;
    }
    ObservationalDistribution::from_counts(
        graph,
        Counts {
            cells,
            total: records.len() as u64,
        },
    )
}
