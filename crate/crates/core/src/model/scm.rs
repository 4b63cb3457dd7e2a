use crate::error::{Error, Result};
use crate::model::distribution::{ObservationalDistribution, ORACLE_TOLERANCE};
use crate::model::graph::{Assignment, CausalGraph};
use crate::radix::{saturating_product, Radix};
use crate::scalar::Scalar;

/// Largest joint exogenous domain the oracle will enumerate.
pub const ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExogenousBlock<T> {
    pub id: String,
    pub probs: Vec<T>,
}

impl<T: Scalar> ExogenousBlock<T> {
    pub fn size(&self) -> usize {
        self.probs.len()
    }
}

/// Fully specified discrete structural causal model.
///
/// Every endogenous variable reads exactly one exogenous block; a block that
/// feeds several variables encodes hidden confounding among them. The
/// structural function of `v` is a total table indexed by
/// `config * block_size + u`, where `config` is the lexicographic parent
/// configuration index. The table of the decision variable is the predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleScm<T> {
    graph: CausalGraph,
    blocks: Vec<ExogenousBlock<T>>,
    wiring: Vec<usize>,
    functions: Vec<Vec<usize>>,
}

impl<T: Scalar> OracleScm<T> {
    pub fn new(
        graph: CausalGraph,
        blocks: Vec<ExogenousBlock<T>>,
        wiring: Vec<usize>,
        functions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let tol = T::lit(ORACLE_TOLERANCE).max(T::epsilon() * T::lit(64.0));
        for b in &blocks {
            if b.probs.is_empty() {
                return Err(Error::Model(format!("block `{}` has an empty domain", b.id)));
            }
            if b.probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
                return Err(Error::Model(format!("block `{}` has a negative probability", b.id)));
            }
            let sum: T = b.probs.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::Model(format!("block `{}` sums to {sum}", b.id)));
            }
        }
        let n = graph.len();
        if wiring.len() != n || functions.len() != n {
            return Err(Error::Model("wiring and functions need one entry per variable".into()));
        }
        for v in 0..n {
            let block = blocks.get(wiring[v]).ok_or_else(|| {
                Error::Model(format!("`{}` is wired to a missing block", graph.name(v)))
            })?;
            let expected = graph.parent_configs(v) * block.size();
            if functions[v].len() != expected {
                return Err(Error::Model(format!(
                    "truth table of `{}` has {} entries, expected {expected}",
                    graph.name(v),
                    functions[v].len()
                )));
            }
            if functions[v].iter().any(|&x| x >= graph.domain_size(v)) {
                return Err(Error::Model(format!(
                    "truth table of `{}` outputs a value outside its domain",
                    graph.name(v)
                )));
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let shared = wiring[a] == wiring[b];
                if shared != graph.is_confounded(a, b) {
                    return Err(Error::Model(format!(
                        "`{}` and `{}` {} an exogenous block but are {}connected by a bidirected edge",
                        graph.name(a),
                        graph.name(b),
                        if shared { "share" } else { "do not share" },
                        if shared { "not " } else { "" },
                    )));
                }
            }
        }
        Ok(OracleScm {
            graph,
            blocks,
            wiring,
            functions,
        })
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn blocks(&self) -> &[ExogenousBlock<T>] {
        &self.blocks
    }

    pub fn wiring(&self) -> &[usize] {
        &self.wiring
    }

    pub fn function_table(&self, v: usize) -> &[usize] {
        &self.functions[v]
    }

    /// `f_v(config, u)`.
    pub fn function(&self, v: usize, config: usize, u: usize) -> usize {
        self.functions[v][config * self.blocks[self.wiring[v]].size() + u]
    }

    pub fn joint_size(&self) -> u128 {
        saturating_product(self.blocks.iter().map(|b| b.size()))
    }

    /// Evaluates every variable in topological order under joint block
    /// values `u` (one entry per block).
    pub fn evaluate(&self, u: &[usize]) -> Assignment {
        let mut values = vec![0; self.graph.len()];
        for &v in self.graph.topo_order() {
            let config = self.graph.parent_config_index(v, &values);
            values[v] = self.function(v, config, u[self.wiring[v]]);
        }
        values
    }

    /// Merges exogenous values that induce identical functions on every
    /// variable they feed and drops zero-probability values. The result is
    /// observationally and counterfactually equivalent.
    pub fn compress(&self) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut functions: Vec<Vec<usize>> = vec![Vec::new(); self.graph.len()];
        for (b, block) in self.blocks.iter().enumerate() {
            let fed: Vec<usize> = (0..self.graph.len()).filter(|&v| self.wiring[v] == b).collect();
            let mut keys: Vec<Vec<usize>> = Vec::new();
            let mut probs: Vec<T> = Vec::new();
            for u in 0..block.size() {
                if block.probs[u] <= T::zero() {
                    continue;
                }
                let key: Vec<usize> = fed
                    .iter()
                    .flat_map(|&v| (0..self.graph.parent_configs(v)).map(move |c| (v, c)))
                    .map(|(v, c)| self.function(v, c, u))
                    .collect();
                match keys.iter().position(|k| *k == key) {
                    Some(i) => probs[i] += block.probs[u],
                    None => {
                        keys.push(key);
                        probs.push(block.probs[u]);
                    }
                }
            }
            let size = keys.len();
            let mut offset = 0;
            for &v in &fed {
                let configs = self.graph.parent_configs(v);
                let mut table = vec![0; configs * size];
                for (u, key) in keys.iter().enumerate() {
                    for c in 0..configs {
                        table[c * size + u] = key[offset + c];
                    }
                }
                offset += configs;
                functions[v] = table;
            }
            blocks.push(ExogenousBlock {
                id: block.id.clone(),
                probs,
            });
        }
        OracleScm {
            graph: self.graph.clone(),
            blocks,
            wiring: self.wiring.clone(),
            functions,
        }
    }

    /// Calls `visit(u, P(u))` for every joint block value with positive
    /// probability, in lexicographic order. Fails above [`ENUMERATION_CAP`].
    pub fn for_each_exogenous(&self, mut visit: impl FnMut(&[usize], T)) -> Result<()> {
        if self.joint_size() > ENUMERATION_CAP {
            return Err(Error::Size(format!(
                "joint exogenous domain {} exceeds {ENUMERATION_CAP}",
                self.joint_size()
            )));
        }
        let radix = Radix::new(self.blocks.iter().map(|b| b.size()).collect()).expect("under cap");
        let mut u = vec![0; self.blocks.len()];
        loop {
            let p = self
                .blocks
                .iter()
                .zip(&u)
                .fold(T::one(), |acc, (b, &x)| acc * b.probs[x]);
            if p > T::zero() {
                visit(&u, p);
            }
            if !radix.increment(&mut u) {
                break;
            }
        }
        Ok(())
    }
}

/// Observational distribution induced by an oracle model, by exact
/// enumeration of the (compressed) exogenous domain.
pub fn model_to_distribution<T: Scalar>(scm: &OracleScm<T>) -> Result<ObservationalDistribution<T>> {
    let scm = scm.compress();
    let graph = scm.graph();
    let mut dense = vec![T::zero(); graph.cells().total()];
    scm.for_each_exogenous(|u, p| {
        let v = scm.evaluate(u);
        dense[graph.cells().encode(&v)] += p;
    })?;
    let tol = ORACLE_TOLERANCE.max(T::epsilon().to_f64_lossy() * 64.0);
    ObservationalDistribution::from_dense(graph, &dense, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::graph::{GraphSpec, VariableSpec};

    fn xy(confounded: bool) -> CausalGraph {
        let mut spec = GraphSpec::new(
            vec![
                VariableSpec::new("X", &["x0", "x1"]),
                VariableSpec::new("Y", &["y0", "y1"]),
            ],
            "X",
            "Y",
        )
        .edge("X", "Y");
        if confounded {
            spec = spec.confound("X", "Y");
        }
        CausalGraph::new(spec).unwrap()
    }

    fn block(id: &str, probs: &[f64]) -> ExogenousBlock<f64> {
        ExogenousBlock {
            id: id.into(),
            probs: probs.to_vec(),
        }
    }

    #[test]
    fn deterministic_chain() {
        // X always x1, Y copies X.
        let scm = OracleScm::new(
            xy(false),
            vec![block("UX", &[1.0]), block("UY", &[1.0])],
            vec![0, 1],
            vec![vec![1], vec![0, 1]],
        )
        .unwrap();
        let d = model_to_distribution(&scm).unwrap();
        assert_eq!(d.prob_of(&[1, 1]), 1.0);
    }

    #[test]
    fn uniform_copy() {
        let scm = OracleScm::new(
            xy(false),
            vec![block("UX", &[0.5, 0.5]), block("UY", &[1.0])],
            vec![0, 1],
            vec![vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        let d = model_to_distribution(&scm).unwrap();
        assert_eq!(d.prob_of(&[0, 0]), 0.5);
        assert_eq!(d.prob_of(&[1, 1]), 0.5);
        assert_eq!(d.prob_of(&[0, 1]), 0.0);
    }

    #[test]
    fn bow_by_enumeration() {
        // Shared block with three values.
        // u0: X=x0, Y=identity; u1: X=x1, Y=const y0; u2: X=x1, Y=inverter.
        let scm = OracleScm::new(
            xy(true),
            vec![block("U", &[0.2, 0.3, 0.5])],
            vec![0, 0],
            vec![vec![0, 1, 1], vec![0, 0, 1, 1, 0, 0]],
        )
        .unwrap();
        let d = model_to_distribution(&scm).unwrap();
        // u0 -> (x0, y0); u1 -> (x1, y0); u2 -> (x1, g(x1)=y0).
        assert!((d.prob_of(&[0, 0]) - 0.2).abs() < 1e-15);
        assert!((d.prob_of(&[1, 0]) - 0.8).abs() < 1e-15);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_sharing_must_match_bidirected_edges() {
        let err = OracleScm::new(
            xy(false),
            vec![block("U", &[1.0])],
            vec![0, 0],
            vec![vec![0], vec![0, 0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Model(_)));
        let err = OracleScm::new(
            xy(true),
            vec![block("UX", &[1.0]), block("UY", &[1.0])],
            vec![0, 1],
            vec![vec![0], vec![0, 0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn rejects_partial_truth_tables_and_bad_probs() {
        assert!(OracleScm::new(
            xy(false),
            vec![block("UX", &[1.0]), block("UY", &[1.0])],
            vec![0, 1],
            vec![vec![0], vec![0]],
        )
        .is_err());
        assert!(OracleScm::new(
            xy(false),
            vec![block("UX", &[0.6, 0.6]), block("UY", &[1.0])],
            vec![0, 1],
            vec![vec![0, 1], vec![0, 0]],
        )
        .is_err());
    }

    #[test]
    fn compression_preserves_distribution() {
        let scm = OracleScm::new(
            xy(true),
            vec![block("U", &[0.1, 0.2, 0.3, 0.4, 0.0])],
            vec![0, 0],
            vec![vec![0, 0, 1, 1, 1], vec![0, 0, 0, 0, 1, 1, 0, 0, 1, 1]],
        )
        .unwrap();
        let small = scm.compress();
        assert_eq!(small.blocks()[0].size(), 4);
        let a = model_to_distribution(&scm).unwrap();
        let b = model_to_distribution(&small).unwrap();
        assert!(a.l1_distance(&b) < 1e-15);
    }
}
