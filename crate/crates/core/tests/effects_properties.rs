//! Dual-world evaluation and the objective it induces.

use pcbound::effects::{
    dual_world_eval, enumerate_causal_paths, factual_eval, observational_row, pce_objective, PathSet,
};
use pcbound::model::{model_to_distribution, OracleScm};
use pcbound::oracle::{generate_model, response_sum_pce, GeneratorSpec, Topology};
use pcbound::response::{ProfileSpace, ResponseProfile, ResponseTables, DEFAULT_RESPONSE_CAP};
use pcbound::{CausalGraph, PceQuery};

fn setup(t: Topology) -> (CausalGraph, ResponseTables, ProfileSpace) {
    let g = t.graph();
    let tables = ResponseTables::all(&g, DEFAULT_RESPONSE_CAP).unwrap();
    let all: Vec<usize> = (0..g.len()).collect();
    let space = ProfileSpace::new(&g, &all, &tables).unwrap();
    (g, tables, space)
}

/// Single-world evaluation with the protected attribute forced to `s`.
fn intervene(g: &CausalGraph, tables: &ResponseTables, profile: &ResponseProfile, s: usize) -> Vec<usize> {
    let mut out = vec![0; g.len()];
    for &v in g.topo_order() {
        out[v] = if v == g.protected() {
            s
        } else {
            tables.table(v).output(g.parent_config_index(v, &out), profile.0[v])
        };
    }
    out
}

#[test]
fn dual_world_reduces_to_single_interventions() {
    for t in Topology::ALL {
        let (g, tables, space) = setup(t);
        let all = enumerate_causal_paths(&g);
        for (pi, world) in [(all, 1), (PathSet::empty(), 0)] {
            let q = PceQuery::new(&g, 0, 1, 0, vec![], pi).unwrap();
            for i in 0..space.size() {
                let profile = space.decode(i);
                let dual = dual_world_eval(&profile, &q, &g, &tables).unwrap();
                assert_eq!(dual.reference, intervene(&g, &tables, &profile, 0));
                let mut expected = intervene(&g, &tables, &profile, world);
                expected[g.protected()] = 1;
                assert_eq!(dual.active, expected, "{t} profile {i}");
            }
        }
    }
}

#[test]
fn equal_interventions_give_equal_copies_and_zero_objective() {
    let (g, tables, space) = setup(Topology::Fig6);
    let pi = PathSet::from_names(&g, &[vec!["S", "Yhat"], vec!["S", "W", "A", "Yhat"]]).unwrap();
    let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Fig6, 3)).unwrap();
    let obs = model_to_distribution(&scm).unwrap();
    for s in 0..2 {
        let q = PceQuery::new(&g, s, s, 0, vec![], pi.clone()).unwrap();
        for i in (0..space.size()).step_by(7) {
            let dual = dual_world_eval(&space.decode(i), &q, &g, &tables).unwrap();
            assert_eq!(dual.active, dual.reference);
        }
        let c = pce_objective(&q, &obs, &g, &tables).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn indicator_collapse_matches_dual_evaluation_for_every_profile() {
    let (g, tables, space) = setup(Topology::Fig6);
    // W is a witness: it lies on S->W->A->Yhat (in the set) and S->W->B->Yhat
    // (outside it).
    let pi = PathSet::from_names(&g, &[vec!["S", "Yhat"], vec!["S", "W", "A", "Yhat"]]).unwrap();
    let q = PceQuery::new(&g, 0, 1, 0, vec![], pi).unwrap();
    let mut point = vec![0.0f64; space.size()];
    for i in 0..space.size() {
        point[i] = 1.0;
        let profile = space.decode(i);
        let dual = dual_world_eval(&profile, &q, &g, &tables).unwrap();
        let expected = (dual.decision() == 0) as i32 - (dual.reference_decision() == 0) as i32;
        let collapsed = response_sum_pce(&g, &tables, &space, &point, &q).unwrap();
        assert_eq!(collapsed, expected as f64, "profile {i}");
        point[i] = 0.0;
    }
}

#[test]
fn objective_entries_are_signed_inverse_condition_mass() {
    for t in [Topology::Kite, Topology::W, Topology::Fig6] {
        let (g, tables, _) = setup(t);
        let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(t, 9)).unwrap();
        let obs = model_to_distribution(&scm).unwrap();
        let s = g.protected();
        let mut conditions = vec![vec![], vec![(s, 0)]];
        if let Some(&a) = g.attributes().first() {
            conditions.push(vec![(s, 1), (a, 0)]);
        }
        for condition in conditions {
            let p = obs.marginal(&condition);
            if p <= 0.0 {
                continue;
            }
            let q = PceQuery::new(&g, 0, 1, 1, condition, enumerate_causal_paths(&g)).unwrap();
            let c = pce_objective(&q, &obs, &g, &tables).unwrap();
            let w = 1.0 / p;
            assert!(c.iter().all(|&x| x == 0.0 || x == w || x == -w), "{t}");
        }
    }
}

#[test]
fn observational_rows_partition_the_profiles() {
    for t in Topology::ALL {
        let (g, tables, space) = setup(t);
        let mut covered = vec![0u32; space.size()];
        for cell in 0..g.cells().total() {
            let row = observational_row::<f64>(&g.cells().decode(cell), &g, &tables).unwrap();
            for (i, &x) in row.iter().enumerate() {
                if x == 1.0 {
                    covered[i] += 1;
                    assert_eq!(g.cells().encode(&factual_eval(&space.decode(i), &g, &tables)), cell);
                }
            }
        }
        assert!(covered.iter().all(|&k| k == 1), "{t}");
    }
}
