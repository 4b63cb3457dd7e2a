//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that the verdict lines are always
//! printed; the process fails when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use clap::Parser;
use rayon::prelude::*;
use tempfile::TempDir;

use pcbound::effects::{enumerate_causal_paths, factual_eval, PathSet};
use pcbound::fairness::classify;
use pcbound::model::{empirical_from_indices, model_to_distribution, OracleScm};
use pcbound::oracle::{
    brute_force_lp, generate_for_graph, generate_model, ground_truth_pce, induced_response_distribution,
    response_sum_pce, sample_dataset, GeneratorSpec, Topology,
};
use pcbound::program::{build_full_joint, ProgramOptions};
use pcbound::radix::Radix;
use pcbound::response::{ResponseTables, DEFAULT_RESPONSE_CAP};
use pcbound::solver::{bound_pce, solve_lp, BoundOptions, LpStatus, ModeSelection, SolverOptions, Witness};
use pcbound::{CausalGraph, Distribution, GraphSpec, PceQuery, Sense, VariableSpec, VerdictKind};
use pcbound_cli::{audit, bound, simulate, to_json, Cli, Command};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fig6_pi(g: &CausalGraph) -> PathSet {
    PathSet::from_names(g, &[vec!["S", "Yhat"], vec!["S", "W", "A", "Yhat"]]).unwrap()
}

fn bin(name: &str) -> VariableSpec {
    VariableSpec::new(name, &["0", "1"])
}

fn exact(scm: &OracleScm<f64>) -> Distribution {
    model_to_distribution(scm).unwrap()
}

/// Bow graph: solved bounds agree with exhaustive vertex enumeration, and
/// the worked fixture has the natural bounds.
fn bow_exactness() -> Outcome {
    let start = Instant::now();
    let g = Topology::Bow.graph();
    let pi = enumerate_causal_paths(&g);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Bow, seed)).unwrap();
        let obs = exact(&scm);
        let q = PceQuery::new(&g, 0, 1, 0, vec![], pi.clone()).unwrap();
        let program = build_full_joint(&g, &obs, &q, &ProgramOptions::default()).unwrap();
        for sense in [Sense::Min, Sense::Max] {
            let solved = solve_lp(&program.lp, sense, &SolverOptions::default()).unwrap();
            let brute = brute_force_lp(&program.lp, sense).unwrap();
            ensure!(
                solved.status == LpStatus::Optimal && brute.status == LpStatus::Optimal,
                "seed {seed}: statuses {:?} / {:?}",
                solved.status,
                brute.status
            );
            worst = worst.max((solved.value - brute.value).abs());
        }
    }
    ensure!(worst <= 1e-9, "largest disagreement with enumeration {worst:e}");

    let obs = Distribution::from_dense(&g, &[0.3, 0.2, 0.1, 0.4], 1e-9).unwrap();
    let q = PceQuery::new(&g, 0, 1, 1, vec![], pi).unwrap();
    let r = bound_pce(&g, &obs, &q, &BoundOptions::default()).unwrap();
    ensure!(
        (r.lower() + 0.3).abs() <= 1e-9 && (r.upper() - 0.7).abs() <= 1e-9,
        "fixture interval [{}, {}]",
        r.lower(),
        r.upper()
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("50 programs, max gap {worst:.1e}, fixture [-0.3, 0.7], {elapsed:.2?}"))
}

#[derive(Debug)]
struct Attainment {
    runs: usize,
    max_residual: f64,
    max_gap: f64,
}

static ATTAINMENT: OnceLock<Attainment> = OnceLock::new();

/// Exact effects of random confounded models lie inside their intervals.
fn containment() -> Outcome {
    let start = Instant::now();
    let g = Topology::Fig6.graph();
    let radix = Radix::new(vec![2, 2, 2]).unwrap();
    let tables = ResponseTables::all(&g, DEFAULT_RESPONSE_CAP).unwrap();
    let per_model: Vec<Result<(usize, f64, f64), String>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let size = if seed < 100 { 10 } else { 100 };
            let scm: OracleScm<f64> =
                generate_model(&GeneratorSpec::new(Topology::Fig6, seed).with_confounder_size(size)).unwrap();
            let obs = exact(&scm);
            let (mut cells, mut residual, mut gap) = (0, 0.0f64, 0.0f64);
            for idx in 0..radix.total() {
                let condition: Vec<(usize, usize)> = [0usize, 1, 2].into_iter().zip(radix.decode(idx)).collect();
                if obs.marginal(&condition) < 0.02 {
                    continue;
                }
                let q = PceQuery::new(&g, 0, 1, 0, condition, fig6_pi(&g)).unwrap();
                let truth = ground_truth_pce(&scm, &q).unwrap().value;
                let r = bound_pce(&g, &obs, &q, &BoundOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
                let full = r.full.as_ref().unwrap();
                if !(full.lower - 1e-6 <= truth && truth <= full.upper + 1e-6) {
                    return Err(format!(
                        "seed {seed} cell {idx}: truth {truth} outside [{}, {}]",
                        full.lower, full.upper
                    ));
                }
                let program = r.full_program.as_ref().unwrap();
                if program.reduced {
                    return Err(format!("seed {seed}: unexpected reduced program"));
                }
                for (w, b) in [(&full.lower_witness, full.lower), (&full.upper_witness, full.upper)] {
                    let Witness::Joint(x) = w else {
                        return Err("full-joint witness expected".into());
                    };
                    // Push the witness through the factual world to rebuild
                    // the observational table, and re-evaluate its effect
                    // with the literal indicator sum.
                    let mut implied = vec![0.0; obs.cell_count()];
                    for (j, &p) in x.iter().enumerate().filter(|(_, &p)| p != 0.0) {
                        let values = factual_eval(&program.space.decode(j), &g, &tables);
                        implied[g.cells().encode(&values)] += p;
                    }
                    for (cell, &p) in implied.iter().enumerate() {
                        residual = residual.max((p - obs.prob(cell)).abs());
                    }
                    let attained = response_sum_pce(&g, &tables, &program.space, x, &q).unwrap();
                    gap = gap.max((attained - b).abs());
                }
                cells += 1;
            }
            Ok((cells, residual, gap))
        })
        .collect();
    let mut stats = Attainment {
        runs: 0,
        max_residual: 0.0,
        max_gap: 0.0,
    };
    for m in per_model {
        let (cells, residual, gap) = m?;
        stats.runs += cells;
        stats.max_residual = stats.max_residual.max(residual);
        stats.max_gap = stats.max_gap.max(gap);
    }
    let elapsed = start.elapsed();
    ensure!(stats.runs > 0, "no cell reached the support threshold");
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    let detail = format!("200 models, {} cells, all contained, {elapsed:.1?}", stats.runs);
    let _ = ATTAINMENT.set(stats);
    Ok(detail)
}

/// Witnesses of the containment runs reproduce the data and attain the
/// bounds, both checked outside the program: the table is rebuilt by factual
/// evaluation and the effect by the literal indicator sum.
fn attainment() -> Outcome {
    let stats = ATTAINMENT.get().ok_or("needs the containment runs, which did not complete")?;
    ensure!(stats.max_residual <= 1e-8, "observational residual {:e}", stats.max_residual);
    ensure!(stats.max_gap <= 1e-8, "objective gap {:e}", stats.max_gap);
    Ok(format!(
        "{} witness pairs, residual <= {:.1e}, gap <= {:.1e}",
        stats.runs, stats.max_residual, stats.max_gap
    ))
}

/// Without confounding the factored search collapses onto the observed
/// contrast.
fn identifiability_collapse() -> Outcome {
    let g = CausalGraph::new(GraphSpec::new(vec![bin("S"), bin("Yhat")], "S", "Yhat").edge("S", "Yhat")).unwrap();
    let pi = enumerate_causal_paths(&g);
    let options = BoundOptions::default().with_mode(ModeSelection::Factored);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let scm: OracleScm<f64> = generate_for_graph(&g, 100, seed).unwrap();
        let obs = exact(&scm);
        let p = |s: usize| obs.prob_of(&[s, 0]) / obs.marginal(&[(0, s)]);
        let expected = p(1) - p(0);
        let q = PceQuery::new(&g, 0, 1, 0, vec![], pi.clone()).unwrap();
        let r = bound_pce(&g, &obs, &q, &options).unwrap();
        let f = r.factored.as_ref().ok_or("no factored interval")?;
        ensure!(f.diagnostics.restarts_run == 32, "ran {} restarts", f.diagnostics.restarts_run);
        let err = (f.lower - expected).abs().max((f.upper - expected).abs());
        ensure!(
            err <= 1e-6 && f.upper - f.lower <= 1e-6,
            "seed {seed}: [{}, {}] vs {expected}",
            f.lower,
            f.upper
        );
        worst = worst.max(err);
    }
    Ok(format!("50 distributions, max error {worst:.1e}"))
}

/// The empty path set gives exactly zero.
fn trivial_paths() -> Outcome {
    let options = BoundOptions::default().with_mode(ModeSelection::Both);
    let mut runs = 0;
    for (k, t) in Topology::ALL.into_iter().enumerate() {
        let g = t.graph();
        for seed in 0..3u64 {
            let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(t, seed).with_confounder_size(8)).unwrap();
            let records = sample_dataset(&scm, 500, seed + 100).unwrap();
            let sampled: Distribution = empirical_from_indices(&records, &g).unwrap();
            for obs in [exact(&scm), sampled] {
                let s = g.protected();
                let attr = g.attributes().first().copied();
                let mut conditions = vec![vec![], vec![(s, 0)], vec![(s, 1)]];
                if let Some(a) = attr {
                    conditions.push(vec![(s, (seed as usize + k) % 2), (a, 1)]);
                }
                for condition in conditions {
                    if obs.marginal(&condition) <= 0.0 {
                        continue;
                    }
                    let q = PceQuery::new(&g, 1, 0, seed as usize % 2, condition, PathSet::empty()).unwrap();
                    let r = bound_pce(&g, &obs, &q, &options).map_err(|e| format!("{t}: {e}"))?;
                    let full = r.full.as_ref().unwrap();
                    ensure!(full.lower == 0.0 && full.upper == 0.0, "{t}: [{}, {}]", full.lower, full.upper);
                    if let Some(f) = &r.factored {
                        ensure!(f.lower == 0.0 && f.upper == 0.0, "{t} factored: [{}, {}]", f.lower, f.upper);
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} queries over {} graphs, all exactly [0, 0]", Topology::ALL.len()))
}

/// Factored intervals nest inside full-joint ones and are usually narrower.
fn factored_nesting() -> Outcome {
    let g = Topology::Fig6Markovian.graph();
    let options = BoundOptions::default().with_mode(ModeSelection::Both);
    let results: Vec<Result<bool, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let scm: OracleScm<f64> = generate_model(&GeneratorSpec::new(Topology::Fig6Markovian, seed)).unwrap();
            let obs = exact(&scm);
            let q = PceQuery::new(&g, 0, 1, 0, vec![], fig6_pi(&g)).unwrap();
            let r = bound_pce(&g, &obs, &q, &options).map_err(|e| format!("seed {seed}: {e}"))?;
            let full = r.full.as_ref().unwrap();
            let f = r.factored.as_ref().ok_or(format!("seed {seed}: no factored interval"))?;
            if f.lower < full.lower - 1e-7 || f.upper > full.upper + 1e-7 {
                return Err(format!(
                    "seed {seed}: [{}, {}] not inside [{}, {}]",
                    f.lower, f.upper, full.lower, full.upper
                ));
            }
            let (wf, wj) = (f.upper - f.lower, full.upper - full.lower);
            if wf > wj + 1e-7 {
                return Err(format!("seed {seed}: width {wf} exceeds {wj}"));
            }
            Ok(wf < wj - 1e-7)
        })
        .collect();
    let mut narrower = 0;
    for r in results {
        narrower += r? as usize;
    }
    ensure!(narrower >= 80, "strictly narrower in only {narrower}/100");
    Ok(format!("100 models nested, strictly narrower in {narrower}/100"))
}

fn markovian_fixtures() -> Vec<CausalGraph> {
    let spec = |names: &[&str]| GraphSpec::new(names.iter().map(|n| bin(n)).collect(), "S", "Yhat");
    vec![
        spec(&["S", "Yhat"]).edge("S", "Yhat"),
        spec(&["S", "W", "Yhat"]).edge("S", "W").edge("W", "Yhat").edge("S", "Yhat"),
        spec(&["S", "W", "Yhat"]).edge("S", "W").edge("W", "Yhat"),
        spec(&["S", "W", "A", "Yhat"])
            .edge("S", "W")
            .edge("S", "A")
            .edge("W", "A")
            .edge("A", "Yhat")
            .edge("W", "Yhat")
            .edge("S", "Yhat"),
        spec(&["S", "W", "A", "Yhat"])
            .edge("S", "W")
            .edge("W", "Yhat")
            .edge("A", "Yhat")
            .edge("S", "Yhat"),
        spec(&["S", "W", "A", "Yhat"])
            .edge("S", "W")
            .edge("S", "A")
            .edge("W", "Yhat")
            .edge("A", "Yhat"),
    ]
    .into_iter()
    .map(|s| CausalGraph::new(s).unwrap())
    .collect()
}

/// The indicator-product sum at the true response distribution equals the
/// exact effect.
fn equation_collapse() -> Outcome {
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for (gi, g) in markovian_fixtures().iter().enumerate() {
        let all = enumerate_causal_paths(g);
        let n_paths = all.len();
        for seed in 0..3u64 {
            let scm: OracleScm<f64> = generate_for_graph(g, 4, seed).unwrap();
            let obs = exact(&scm);
            let (tables, space, dist) = induced_response_distribution(&scm).unwrap();
            let s = g.protected();
            let mut conditions = vec![vec![], vec![(s, 0)], vec![(s, 1)]];
            conditions.push(g.attributes().iter().map(|&a| (a, 1)).chain([(s, 1)]).collect());
            for mask in 0..1usize << n_paths {
                let pi = all.filter(|p| {
                    let i = all.paths().iter().position(|q| q.as_slice() == p).unwrap();
                    mask >> i & 1 == 1
                });
                for condition in &conditions {
                    if obs.marginal(condition) <= 0.0 {
                        continue;
                    }
                    for y in 0..2 {
                        let q = PceQuery::new(g, 0, 1, y, condition.clone(), pi.clone()).unwrap();
                        let truth = ground_truth_pce(&scm, &q).unwrap().value;
                        let lit = response_sum_pce(g, &tables, &space, &dist, &q).unwrap();
                        let err = (truth - lit).abs();
                        ensure!(err <= 1e-12, "fixture {gi} seed {seed} mask {mask}: {truth} vs {lit}");
                        worst = worst.max(err);
                        compared += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{compared} queries on 6 graphs, max error {worst:.1e}"))
}

/// The three cited judgments.
fn verdict_rules() -> Outcome {
    let cases = [
        ((0.1772, 0.1836), VerdictKind::Unfair),
        ((-0.2605, 0.2656), VerdictKind::Uncertain),
        ((-0.0783, -0.0212), VerdictKind::Fair),
    ];
    for ((lo, hi), expected) in cases {
        let got = classify(lo, hi, 0.1);
        ensure!(got == expected, "[{lo}, {hi}] gave {got}, expected {expected}");
    }
    Ok("unfair, uncertain, fair".into())
}

fn parse(args: &[&str]) -> Command {
    let mut full = vec!["pcbound"];
    full.extend_from_slice(args);
    Cli::try_parse_from(full).expect("valid command line").command
}

fn run_reports(commands: &[Command]) -> Vec<String> {
    commands
        .iter()
        .map(|c| match c {
            Command::Bound(a) => to_json(&bound(a).unwrap()).unwrap(),
            Command::Audit(a) => to_json(&audit(a).unwrap()).unwrap(),
            _ => unreachable!("only reports are compared"),
        })
        .collect()
}

/// Reports do not depend on the number of worker threads.
fn determinism() -> Outcome {
    let dir = TempDir::new().unwrap();
    let sim = |topology: &str, size: &str, seed: &str| -> String {
        let out = dir.path().join(format!("{topology}-{seed}"));
        let out_s = out.to_str().unwrap().to_string();
        let Command::Simulate(a) = parse(&[
            "simulate",
            "--topology",
            topology,
            "--confounder-size",
            size,
            "--seed",
            seed,
            "-n",
            "3000",
            "--out-dir",
            &out_s,
            "--exact",
        ]) else {
            unreachable!()
        };
        simulate(&a).unwrap();
        out_s
    };
    let file = |d: &str, f: &str| Path::new(d).join(f).to_str().unwrap().to_string();
    let fig6 = sim("fig6", "10", "21");
    let kite = sim("kite", "20", "22");
    let markov = sim("fig6-markovian", "10", "23");
    let fig6_pi = r#"[["S","Yhat"],["S","W","A","Yhat"]]"#;
    let (fm, fd, fx) = (file(&fig6, "model.json"), file(&fig6, "data.csv"), file(&fig6, "dist.json"));
    let (km, kd) = (file(&kite, "model.json"), file(&kite, "data.csv"));
    let (mm, mx) = (file(&markov, "model.json"), file(&markov, "dist.json"));
    let commands = vec![
        parse(&["bound", "--graph", &km, "--data", &kd, "--mode", "both", "--condition", "X=x0"]),
        parse(&["bound", "--graph", &mm, "--dist", &mx, "--pi", fig6_pi, "--mode", "both", "--restarts", "8"]),
        parse(&["bound", "--graph", &fm, "--data", &fd, "--notion", "direct", "--mode", "both", "--restarts", "4"]),
        parse(&["audit", "--graph", &fm, "--dist", &fx, "--pi", fig6_pi, "--condition", "S,W,A"]),
        parse(&["audit", "--graph", &fm, "--data", &fd, "--notion", "indirect", "--redlining", "W", "--group", "none"]),
    ];
    let mut baseline: Option<Vec<String>> = None;
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let reports = pool.install(|| run_reports(&commands));
        match &baseline {
            None => baseline = Some(reports),
            Some(b) => {
                for (i, (x, y)) in b.iter().zip(&reports).enumerate() {
                    ensure!(x == y, "command {i} differs between 1 and {threads} threads");
                }
            }
        }
    }
    let bytes: usize = baseline.unwrap().iter().map(String::len).sum();
    Ok(format!("{} reports ({bytes} bytes) identical under 1, 4 and 8 threads", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("bow-graph exactness", bow_exactness),
        ("ground-truth containment", containment),
        ("attainment and tightness", attainment),
        ("identifiability collapse", identifiability_collapse),
        ("trivial path set", trivial_paths),
        ("factored nesting", factored_nesting),
        ("indicator-sum equivalence", equation_collapse),
        ("verdict rules", verdict_rules),
        ("thread-count determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} -- {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name} -- {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
