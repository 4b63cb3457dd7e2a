//! File formats: model JSON (graph plus optional oracle), CSV data, and JSON
//! joint tables.
//!
//! Truth tables are nested arrays indexed first by each parent's domain
//! index (parents in declaration order) and last by the exogenous value;
//! leaves are domain indices of the variable itself.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::distribution::{ObservationalDistribution, INGEST_TOLERANCE};
use crate::model::graph::{CausalGraph, GraphSpec};
use crate::model::scm::{ExogenousBlock, OracleScm};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSpec {
    pub blocks: Vec<BlockSpec>,
    pub wiring: BTreeMap<String, String>,
    pub functions: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSpec {
    pub id: String,
    pub probs: Vec<f64>,
}

/// Parses a model document; the oracle part is optional.
pub fn parse_model<T: Scalar>(text: &str) -> Result<(CausalGraph, Option<OracleScm<T>>)> {
    let file: ModelFile = serde_json::from_str(text)?;
    let graph = CausalGraph::new(file.graph)?;
    let scm = match file.oracle {
        Some(spec) => Some(oracle_from_spec(&graph, &spec)?),
        None => None,
    };
    Ok((graph, scm))
}

pub fn oracle_from_spec<T: Scalar>(graph: &CausalGraph, spec: &OracleSpec) -> Result<OracleScm<T>> {
    let blocks: Vec<ExogenousBlock<T>> = spec
        .blocks
        .iter()
        .map(|b| ExogenousBlock {
            id: b.id.clone(),
            probs: b.probs.iter().map(|&p| T::lit(p)).collect(),
        })
        .collect();
    let mut wiring = Vec::with_capacity(graph.len());
    let mut functions = Vec::with_capacity(graph.len());
    for v in 0..graph.len() {
        let name = graph.name(v);
        let id = spec
            .wiring
            .get(name)
            .ok_or_else(|| Error::Model(format!("no exogenous block wired to `{name}`")))?;
        let b = blocks
            .iter()
            .position(|blk| &blk.id == id)
            .ok_or_else(|| Error::Model(format!("`{name}` is wired to unknown block `{id}`")))?;
        wiring.push(b);
        let table = spec
            .functions
            .get(name)
            .ok_or_else(|| Error::Model(format!("no truth table for `{name}`")))?;
        let mut shape: Vec<usize> = graph.parents(v).iter().map(|&p| graph.domain_size(p)).collect();
        shape.push(blocks[b].size());
        let mut flat = Vec::new();
        flatten_nested(table, &shape, &mut flat)
            .map_err(|e| Error::Model(format!("truth table of `{name}`: {e}")))?;
        functions.push(flat);
    }
    for id in spec.wiring.keys() {
        graph.index_of(id)?;
    }
    OracleScm::new(graph.clone(), blocks, wiring, functions)
}

fn flatten_nested(value: &Value, shape: &[usize], out: &mut Vec<usize>) -> std::result::Result<(), String> {
    let items = value
        .as_array()
        .ok_or_else(|| format!("expected an array of length {}", shape[0]))?;
    if items.len() != shape[0] {
        return Err(format!("expected {} entries, found {}", shape[0], items.len()));
    }
    for item in items {
        if shape.len() == 1 {
            let x = item.as_u64().ok_or("leaves must be domain indices")?;
            out.push(x as usize);
        } else {
            flatten_nested(item, &shape[1..], out)?;
        }
    }
    Ok(())
}

fn nest(flat: &[usize], shape: &[usize]) -> Value {
    if shape.len() == 1 {
        return Value::Array(flat.iter().map(|&x| Value::from(x)).collect());
    }
    let chunk = flat.len() / shape[0];
    Value::Array(flat.chunks(chunk).map(|c| nest(c, &shape[1..])).collect())
}

pub fn oracle_to_spec<T: Scalar>(scm: &OracleScm<T>) -> OracleSpec {
    let graph = scm.graph();
    let blocks = scm
        .blocks()
        .iter()
        .map(|b| BlockSpec {
            id: b.id.clone(),
            probs: b.probs.iter().map(|p| p.to_f64_lossy()).collect(),
        })
        .collect();
    let mut wiring = BTreeMap::new();
    let mut functions = BTreeMap::new();
    for v in 0..graph.len() {
        let b = scm.wiring()[v];
        wiring.insert(graph.name(v).to_string(), scm.blocks()[b].id.clone());
        let mut shape: Vec<usize> = graph.parents(v).iter().map(|&p| graph.domain_size(p)).collect();
        shape.push(scm.blocks()[b].size());
        functions.insert(graph.name(v).to_string(), nest(scm.function_table(v), &shape));
    }
    OracleSpec {
        blocks,
        wiring,
        functions,
    }
}

/// Pretty JSON model document.
pub fn model_to_json<T: Scalar>(graph: &CausalGraph, scm: Option<&OracleScm<T>>) -> Result<String> {
    let file = ModelFile {
        graph: graph.spec().clone(),
        oracle: scm.map(oracle_to_spec),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Reads a headed CSV of labels into records ordered by the graph's
/// declaration order. Every graph variable must have a column; extra columns
/// are rejected.
pub fn read_csv_records<R: Read>(reader: R, graph: &CausalGraph) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut columns = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        columns.push(graph.index_of(h)?);
    }
    for v in 0..graph.len() {
        if !columns.contains(&v) {
            return Err(Error::Distribution(format!("CSV has no column for `{}`", graph.name(v))));
        }
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let mut rec = vec![String::new(); graph.len()];
        for (field, &v) in row.iter().zip(&columns) {
            rec[v] = field.to_string();
        }
        records.push(rec);
    }
    Ok(records)
}

/// Writes index-coded records as a labelled CSV in declaration order.
pub fn write_csv<W: Write>(writer: W, graph: &CausalGraph, records: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((0..graph.len()).map(|v| graph.name(v)))?;
    for rec in records {
        w.write_record(rec.iter().enumerate().map(|(v, &x)| graph.label(v, x)))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    pub cells: Vec<CellEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellEntry {
    pub values: BTreeMap<String, String>,
    pub p: f64,
}

/// Parses a `{"cells": [{"values": {...}, "p": ...}]}` joint table.
pub fn parse_distribution<T: Scalar>(text: &str, graph: &CausalGraph) -> Result<ObservationalDistribution<T>> {
    let file: DistributionFile = serde_json::from_str(text)?;
    let mut entries = Vec::with_capacity(file.cells.len());
    for (i, cell) in file.cells.iter().enumerate() {
        let mut a = vec![usize::MAX; graph.len()];
        for (name, label) in &cell.values {
            let (v, x) = graph.resolve(name, label)?;
            a[v] = x;
        }
        if let Some(v) = a.iter().position(|&x| x == usize::MAX) {
            return Err(Error::Distribution(format!("cell {i} has no value for `{}`", graph.name(v))));
        }
        entries.push((a, T::lit(cell.p)));
    }
    ObservationalDistribution::from_assignments(graph, entries, INGEST_TOLERANCE)
}

pub fn distribution_to_json<T: Scalar>(dist: &ObservationalDistribution<T>, graph: &CausalGraph) -> Result<String> {
    let cells = dist
        .support()
        .map(|(cell, p)| {
            let a = graph.cells().decode(cell);
            CellEntry {
                values: a
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| (graph.name(v).to_string(), graph.label(v, x).to_string()))
                    .collect(),
                p: p.to_f64_lossy(),
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&DistributionFile { cells })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scm::model_to_distribution;

    const BOW: &str = r#"{
        "variables": [
            {"name": "X", "domain": ["x0", "x1"]},
            {"name": "Y", "domain": ["y0", "y1"]}
        ],
        "edges": [["X", "Y"]],
        "confounded": [["X", "Y"]],
        "protected": "X",
        "decision": "Y",
        "oracle": {
            "blocks": [{"id": "U", "probs": [0.25, 0.75]}],
            "wiring": {"X": "U", "Y": "U"},
            "functions": {"X": [0, 1], "Y": [[0, 1], [1, 1]]}
        }
    }"#;

    #[test]
    fn parses_nested_truth_tables() {
        let (graph, scm) = parse_model::<f64>(BOW).unwrap();
        let scm = scm.unwrap();
        // Y[x][u]: x0 -> (0, 1), x1 -> (1, 1).
        assert_eq!(scm.function(1, 0, 0), 0);
        assert_eq!(scm.function(1, 0, 1), 1);
        assert_eq!(scm.function(1, 1, 0), 1);
        let d = model_to_distribution(&scm).unwrap();
        assert_eq!(d.prob_of(&[0, 0]), 0.25);
        assert_eq!(d.prob_of(&[1, 1]), 0.75);

        let text = model_to_json(&graph, Some(&scm)).unwrap();
        let (g2, s2) = parse_model::<f64>(&text).unwrap();
        assert_eq!(g2, graph);
        assert_eq!(s2.unwrap(), scm);
    }

    #[test]
    fn rejects_ragged_tables() {
        let bad = BOW.replace("[[0, 1], [1, 1]]", "[[0, 1], [1]]");
        assert!(matches!(parse_model::<f64>(&bad), Err(Error::Model(_))));
    }

    #[test]
    fn csv_columns_are_reordered() {
        let (graph, _) = parse_model::<f64>(BOW).unwrap();
        let data = "Y,X\ny1,x0\ny0,x1\n";
        let recs = read_csv_records(data.as_bytes(), &graph).unwrap();
        assert_eq!(recs, vec![vec!["x0", "y1"], vec!["x1", "y0"]]);
        assert!(read_csv_records("X\nx0\n".as_bytes(), &graph).is_err());
        assert!(matches!(read_csv_records("X,Y,Z\nx0,y0,z\n".as_bytes(), &graph), Err(Error::Name(_))));
    }

    #[test]
    fn distribution_json_round_trip() {
        let (graph, scm) = parse_model::<f64>(BOW).unwrap();
        let d = model_to_distribution(&scm.unwrap()).unwrap();
        let text = distribution_to_json(&d, &graph).unwrap();
        let back: ObservationalDistribution<f64> = parse_distribution(&text, &graph).unwrap();
        assert_eq!(back, d);
    }
}
