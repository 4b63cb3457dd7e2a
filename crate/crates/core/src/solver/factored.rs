//! Local search for the factored program.
//!
//! With every block but one held fixed, each product row and the objective
//! are linear in the free block, so a sweep solves one linear program per
//! block. Each sweep is monotone, so a run converges to a local optimum; the
//! best of several random feasible starts is returned. The result is a
//! feasible value, hence an inner estimate: a lower estimate of the maximum
//! and an upper estimate of the minimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::program::{ConstraintRow, FactoredProgram, LinearProgram};
use crate::scalar::Scalar;
use crate::solver::simplex::{solve_lp, LpStatus, Sense, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactoredOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// A sweep improving the objective by less than this ends a run.
    pub sweep_tol: f64,
    /// Largest product-row violation accepted for a point.
    pub feasibility_tol: f64,
}

impl Default for FactoredOptions {
    fn default() -> Self {
        FactoredOptions {
            restarts: 32,
            seed: 0,
            max_sweeps: 200,
            sweep_tol: 1e-8,
            feasibility_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactoredSolution<T> {
    pub value: T,
    pub blocks: Vec<Vec<T>>,
    pub residual: T,
    /// Restart that produced the returned point.
    pub restart: usize,
    pub restarts_run: usize,
    pub restarts_feasible: usize,
    pub sweeps: usize,
}

struct Run<T> {
    value: T,
    blocks: Vec<Vec<T>>,
    residual: T,
    sweeps: usize,
}

/// Best local optimum over `options.restarts` seeded random starts.
pub fn solve_factored<T: Scalar>(
    program: &FactoredProgram<T>,
    sense: Sense,
    options: &FactoredOptions,
    lp_options: &SolverOptions,
) -> Result<FactoredSolution<T>> {
    let restarts = options.restarts.max(1);
    let runs: Vec<Option<Run<T>>> = (0..restarts)
        .into_par_iter()
        .map(|k| run(program, sense, options, lp_options, k))
        .collect::<Result<_>>()?;
    let feasible = runs.iter().filter(|r| r.is_some()).count();
    let sweeps = runs.iter().flatten().map(|r| r.sweeps).sum();
    let better = |a: T, b: T| match sense {
        Sense::Max => a > b,
        Sense::Min => a < b,
    };
    let mut best: Option<(usize, Run<T>)> = None;
    for (k, r) in runs.into_iter().enumerate() {
        let Some(r) = r else { continue };
        if best.as_ref().is_none_or(|(_, b)| better(r.value, b.value)) {
            best = Some((k, r));
        }
    }
    let (restart, best) = best.ok_or(Error::Infeasible)?;
    Ok(FactoredSolution {
        value: best.value,
        blocks: best.blocks,
        residual: best.residual,
        restart,
        restarts_run: restarts,
        restarts_feasible: feasible,
        sweeps,
    })
}

fn run<T: Scalar>(
    program: &FactoredProgram<T>,
    sense: Sense,
    options: &FactoredOptions,
    lp_options: &SolverOptions,
    restart: usize,
) -> Result<Option<Run<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(restart as u64);
    let tol = T::lit(options.feasibility_tol);

    let mut blocks = Vec::with_capacity(program.degree());
    for (c, block) in program.blocks.iter().enumerate() {
        match random_vertex(&program.block_systems[c], block.size(), &mut rng, lp_options)? {
            Some(p) => blocks.push(p),
            None => return Ok(None),
        }
    }
    if program.residual(&blocks) > tol {
        return Ok(None);
    }

    let mut value = program.objective.evaluate(&blocks);
    let mut sweeps = 0;
    while sweeps < options.max_sweeps {
        sweeps += 1;
        let start = value;
        for c in 0..program.degree() {
            let lp = block_program(program, &blocks, c);
            let sol = solve_lp(&lp, sense, lp_options);
            let Ok(sol) = sol else { continue };
            if sol.status != LpStatus::Optimal {
                continue;
            }
            let previous = std::mem::replace(&mut blocks[c], sol.witness);
            let candidate = program.objective.evaluate(&blocks);
            let improves = match sense {
                Sense::Max => candidate >= value,
                Sense::Min => candidate <= value,
            };
            if improves && program.residual(&blocks) <= tol {
                value = candidate;
            } else {
                blocks[c] = previous;
            }
        }
        if (value - start).abs().to_f64_lossy() < options.sweep_tol {
            break;
        }
    }
    let residual = program.residual(&blocks);
    Ok(Some(Run {
        value,
        blocks,
        residual,
        sweeps,
    }))
}

/// A vertex of `{p >= 0, sum p = 1, rows}` maximizing a Dirichlet(1) weight
/// vector, or `None` if that set is empty.
fn random_vertex<T: Scalar>(
    rows: &[ConstraintRow<T>],
    size: usize,
    rng: &mut ChaCha8Rng,
    lp_options: &SolverOptions,
) -> Result<Option<Vec<T>>> {
    let draws: Vec<f64> = (0..size).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let weights = draws.iter().map(|&d| T::lit(d / total)).collect();
    let mut constraints = rows.to_vec();
    constraints.push(ConstraintRow {
        coeffs: (0..size).map(|j| (j, T::one())).collect(),
        rhs: T::one(),
    });
    let lp = LinearProgram::new(weights, constraints);
    let sol = solve_lp(&lp, Sense::Max, lp_options)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.witness),
        _ => None,
    })
}

/// The linear program in block `free` with the other blocks held fixed.
fn block_program<T: Scalar>(program: &FactoredProgram<T>, blocks: &[Vec<T>], free: usize) -> LinearProgram<T> {
    let size = blocks[free].len();
    let mut rows = Vec::with_capacity(program.rows.len() + 1);
    for row in &program.rows {
        let scale = row
            .factors
            .iter()
            .zip(blocks)
            .enumerate()
            .filter(|&(c, _)| c != free)
            .map(|(_, (a, p))| a.iter().zip(p).map(|(&x, &y)| x * y).sum::<T>())
            .fold(T::one(), |acc, x| acc * x);
        let coeffs: Vec<(usize, T)> = row.factors[free]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != T::zero())
            .map(|(j, &a)| (j, a * scale))
            .filter(|&(_, a)| a != T::zero())
            .collect();
        if coeffs.is_empty() {
            // Satisfied at the current point whatever the free block does.
            continue;
        }
        rows.push(ConstraintRow { coeffs, rhs: row.rhs });
    }
    rows.push(ConstraintRow {
        coeffs: (0..size).map(|j| (j, T::one())).collect(),
        rhs: T::one(),
    });
    LinearProgram::new(program.objective.partial(blocks, free), rows)
}
