use std::time::Instant;

use log::info;

use super::simplex::{LpEngine, LpStatus};
use super::{column_bounds, MilpSolution, MilpStatus, SolverError};
use crate::model::{MilpProblem, Sense};

pub const MAX_BRUTE_FORCE_BINARIES: usize = 24;

/// Exhaustive oracle: solves the continuous LP for every 0/1 assignment of
/// the binaries that passes the purely-binary rows.
///
/// Assignments are visited in Gray-code order so consecutive LPs differ in a
/// single bound and warm-start cheaply. Among equal objectives the first one
/// visited wins.
pub fn brute_force<P: AsRef<MilpProblem> + ?Sized>(model: &P) -> Result<MilpSolution, SolverError> {
    let problem = model.as_ref();
    let binaries = problem.binary_columns();
    let k = binaries.len();
    if k > MAX_BRUTE_FORCE_BINARIES {
        return Err(SolverError::TooManyBinaries {
            binaries: k,
            cap: MAX_BRUTE_FORCE_BINARIES,
        });
    }
    let start = Instant::now();
    let mut position = vec![usize::MAX; problem.num_columns()];
    for (i, &j) in binaries.iter().enumerate() {
        position[j] = i;
    }
    // Rows over binaries only, as (bit, coefficient) lists.
    let filters: Vec<(Vec<(usize, f64)>, Sense, f64)> = problem
        .constraints
        .iter()
        .filter(|r| !r.coefficients.is_empty() && r.coefficients.iter().all(|&(j, _)| position[j] != usize::MAX))
        .map(|r| {
            let terms = r.coefficients.iter().map(|&(j, a)| (position[j], a)).collect();
            (terms, r.sense, r.rhs)
        })
        .collect();

    let mut engine = LpEngine::new(problem)?;
    let (mut lower, mut upper) = column_bounds(problem);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut solved = 0u64;
    for i in 0u64..(1u64 << k) {
        let mask = i ^ (i >> 1);
        let bit = |b: usize| if mask >> b & 1 == 1 { 1.0 } else { 0.0 };
        let passes = filters.iter().all(|(terms, sense, rhs)| {
            let act: f64 = terms.iter().map(|&(b, a)| a * bit(b)).sum();
            match sense {
                Sense::Le => act <= rhs + 1e-9,
                Sense::Ge => act >= rhs - 1e-9,
                Sense::Eq => (act - rhs).abs() <= 1e-9,
            }
        });
        if !passes {
            continue;
        }
        for (b, &j) in binaries.iter().enumerate() {
            lower[j] = bit(b);
            upper[j] = bit(b);
        }
        solved += 1;
        match engine.solve(&lower, &upper)? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolverError::Unbounded),
        }
        let mut values = engine.solution();
        for &j in &binaries {
            values[j] = lower[j];
        }
        let objective = problem.objective_value(&values);
        if best.as_ref().is_none_or(|(b, _)| objective > *b) {
            best = Some((objective, values));
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    info!("brute force solved {solved} LPs over {k} binaries in {wall_time:.2}s");
    Ok(match best {
        Some((objective, values)) => MilpSolution {
            values,
            objective,
            status: MilpStatus::Optimal,
            nodes_explored: solved,
            lp_iterations: engine.iterations,
            wall_time,
            gap: 0.0,
            root_bound: f64::NAN,
            log: Vec::new(),
        },
        None => MilpSolution {
            values: Vec::new(),
            objective: f64::NAN,
            status: MilpStatus::Infeasible,
            nodes_explored: solved,
            lp_iterations: engine.iterations,
            wall_time,
            gap: f64::NAN,
            root_bound: f64::NAN,
            log: Vec::new(),
        },
    })
}
