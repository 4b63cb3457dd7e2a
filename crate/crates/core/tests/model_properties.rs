//! Properties of graphs, distributions and oracle models.

use proptest::prelude::*;

use pcbound::model::{empirical_from_indices, model_to_distribution, validate_graph, OracleScm};
use pcbound::oracle::{generate_model, sample_dataset, GeneratorSpec, Topology};
use pcbound::{GraphSpec, VariableSpec};

#[test]
fn model_distributions_are_probability_tables() {
    for seed in 0..200u64 {
        let t = Topology::ALL[seed as usize % Topology::ALL.len()];
        let size = 2 + (seed as usize % 7);
        let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(t, seed).with_confounder_size(size)).unwrap();
        let obs = model_to_distribution(&scm).unwrap();
        obs.check_graph(scm.graph()).unwrap();
        let dense = obs.to_dense();
        assert_eq!(dense.len(), scm.graph().cells().total());
        assert!(dense.iter().all(|&p| (0.0..=1.0).contains(&p)), "{t} seed {seed}");
        assert!((dense.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "{t} seed {seed}");
    }
}

#[test]
fn empirical_distribution_converges_to_the_model() {
    // The kite graph has four binary variables.
    let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Kite, 17)).unwrap();
    let exact = model_to_distribution(&scm).unwrap();
    let records = sample_dataset(&scm, 100_000, 5).unwrap();
    let empirical = empirical_from_indices(&records, scm.graph()).unwrap();
    let l1 = empirical.l1_distance(&exact);
    assert!(l1 <= 0.05, "L1 distance {l1}");
}

fn spec_from(variables: &[VariableSpec], edges: &[(String, String)], confounded: &[(String, String)]) -> GraphSpec {
    let mut spec = GraphSpec::new(variables.to_vec(), "S", "Y");
    spec.edges = edges.to_vec();
    spec.confounded = confounded.to_vec();
    spec
}

fn base_variables() -> Vec<VariableSpec> {
    ["S", "A", "B", "C", "Y"]
        .iter()
        .map(|n| VariableSpec::new(n, &["0", "1"]))
        .collect()
}

fn pair(a: &str, b: &str) -> (String, String) {
    (a.to_string(), b.to_string())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_ignores_declaration_order(
        edge_mask in 0u32..(1 << 10),
        cycle in any::<bool>(),
        vars in Just(base_variables()).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        // Edges between the five variables in a fixed order, optionally plus
        // one back edge that closes a cycle.
        let names = ["S", "A", "B", "C", "Y"];
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if edge_mask >> k & 1 == 1 {
                    edges.push(pair(names[i], names[j]));
                }
                k += 1;
            }
        }
        if cycle {
            edges.push(pair("C", "A"));
            edges.push(pair("A", "C"));
        }
        let confounded = vec![pair("A", "B")];
        let reference = validate_graph(&spec_from(&base_variables(), &edges, &confounded)).is_ok();

        let mut shuffled = edges.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
            }
        }
        let flipped = vec![pair("B", "A")];
        prop_assert_eq!(validate_graph(&spec_from(&vars, &shuffled, &confounded)).is_ok(), reference);
        prop_assert_eq!(validate_graph(&spec_from(&vars, &shuffled, &flipped)).is_ok(), reference);
        if cycle {
            prop_assert!(!reference);
        }
    }
}
