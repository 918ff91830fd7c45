use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use log::{debug, info};

use super::simplex::{LpEngine, LpStatus};
use super::{
    column_bounds, BranchRule, MilpSolution, MilpStatus, NodeOrder, SearchLogEntry, SolverError,
    SolverOptions,
};
use crate::model::MilpProblem;

/// A progress line is logged every this many evaluated nodes.
const LOG_EVERY: u64 = 1000;

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    depth: u32,
    /// Parent LP objective; an upper bound on anything below this node.
    bound: f64,
    fixings: Vec<(usize, bool)>,
}

struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .bound
            .total_cmp(&other.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

enum Pool {
    Stack(Vec<Node>),
    Heap(BinaryHeap<Ranked>),
}

impl Pool {
    fn push(&mut self, node: Node) {
        match self {
            Pool::Stack(s) => s.push(node),
            Pool::Heap(h) => h.push(Ranked(node)),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Pool::Stack(s) => s.pop(),
            Pool::Heap(h) => h.pop().map(|r| r.0),
        }
    }

    fn best_bound(&self) -> Option<f64> {
        match self {
            Pool::Stack(s) => s.iter().map(|n| n.bound).reduce(f64::max),
            Pool::Heap(h) => h.peek().map(|r| r.0.bound),
        }
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

struct State {
    pool: Pool,
    active: usize,
    in_flight: Vec<Option<f64>>,
    incumbent: Option<Incumbent>,
    nodes: u64,
    next_id: u64,
    root_bound: Option<f64>,
    log: Vec<SearchLogEntry>,
    stop: Option<&'static str>,
    error: Option<SolverError>,
    pivots: u64,
}

enum Outcome {
    Infeasible,
    Pruned(f64),
    Integral { lp_objective: f64, polished: Option<Incumbent> },
    Branch { lp_objective: f64, column: usize },
}

struct Search<'a> {
    problem: &'a MilpProblem,
    opts: &'a SolverOptions,
    binaries: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    start: Instant,
    state: Mutex<State>,
    wake: Condvar,
}

impl Search<'_> {
    fn prunable(&self, bound: f64, incumbent: f64) -> bool {
        search_prunable(self.opts, bound, incumbent)
    }

    fn global_bound(&self, st: &State) -> Option<f64> {
        let open = st.in_flight.iter().flatten().copied().chain(st.pool.best_bound());
        let best = open.reduce(f64::max);
        match (&st.incumbent, best) {
            (Some(inc), Some(b)) => Some(b.max(inc.objective)),
            (Some(inc), None) => Some(inc.objective),
            (None, b) => b,
        }
    }

    fn log_line(&self, st: &mut State) {
        let bound = self.global_bound(st).unwrap_or(f64::NEG_INFINITY);
        let incumbent = st.incumbent.as_ref().map(|i| i.objective);
        let entry = SearchLogEntry {
            node: st.nodes,
            bound,
            incumbent,
            gap: incumbent.map(|i| relative_gap(bound, i)),
        };
        debug!("{entry}");
        st.log.push(entry);
    }

    fn worker(&self, w: usize, engine: &mut LpEngine) {
        let before = engine.iterations;
        self.search(w, engine);
        let mut st = self.state.lock().expect("search state poisoned");
        st.pivots += engine.iterations - before;
    }

    fn search(&self, w: usize, engine: &mut LpEngine) {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        loop {
            let (node, cutoff) = {
                let mut st = self.state.lock().expect("search state poisoned");
                loop {
                    if st.stop.is_some() || st.error.is_some() {
                        self.wake.notify_all();
                        return;
                    }
                    if let Some(node) = st.pool.pop() {
                        if let Some(inc) = &st.incumbent {
                            if self.prunable(node.bound, inc.objective) {
                                continue;
                            }
                        }
                        let limit = if st.nodes >= self.opts.node_limit {
                            Some("node")
                        } else if self.start.elapsed().as_secs_f64() > self.opts.time_limit {
                            Some("time")
                        } else {
                            None
                        };
                        if limit.is_some() {
                            st.stop = limit;
                            st.pool.push(node);
                            continue;
                        }
                        st.nodes += 1;
                        st.active += 1;
                        st.in_flight[w] = Some(node.bound);
                        break (node, st.incumbent.as_ref().map(|i| i.objective));
                    }
                    if st.active == 0 {
                        self.wake.notify_all();
                        return;
                    }
                    st = self.wake.wait(st).expect("search state poisoned");
                }
            };
            let outcome = self.evaluate(engine, &node, cutoff, &mut lower, &mut upper);
            let mut st = self.state.lock().expect("search state poisoned");
            st.active -= 1;
            st.in_flight[w] = None;
            match outcome {
                Ok(outcome) => self.commit(&mut st, node, outcome),
                Err(e) => {
                    if st.error.is_none() {
                        st.error = Some(e);
                    }
                }
            }
            self.wake.notify_all();
        }
    }

    fn evaluate(
        &self,
        engine: &mut LpEngine,
        node: &Node,
        cutoff: Option<f64>,
        lower: &mut [f64],
        upper: &mut [f64],
    ) -> Result<Outcome, SolverError> {
        lower.copy_from_slice(&self.lower);
        upper.copy_from_slice(&self.upper);
        for &(j, v) in &node.fixings {
            let v = if v { 1.0 } else { 0.0 };
            lower[j] = v;
            upper[j] = v;
        }
        match engine.solve(lower, upper)? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(Outcome::Infeasible),
            LpStatus::Unbounded => return Err(SolverError::Unbounded),
        }
        let lp_objective = engine.objective();
        if let Some(inc) = cutoff {
            if self.prunable(lp_objective, inc) {
                return Ok(Outcome::Pruned(lp_objective));
            }
        }
        let x = engine.solution();
        let tol = self.opts.integrality_tol;
        let mut pick: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let frac = (x[j] - x[j].round()).abs();
            if frac <= tol {
                continue;
            }
            match self.opts.branch_rule {
                BranchRule::LowestIndex => {
                    pick = Some((j, frac));
                    break;
                }
                BranchRule::MostFractional => {
                    if pick.is_none_or(|(_, f)| frac > f) {
                        pick = Some((j, frac));
                    }
                }
            }
        }
        if let Some((column, _)) = pick {
            return Ok(Outcome::Branch { lp_objective, column });
        }

        // Integral relaxation: pin the binaries to their rounded values and
        // re-solve so the reported point is exactly integral.
        for &j in &self.binaries {
            let v = x[j].round();
            lower[j] = v;
            upper[j] = v;
        }
        let polished = match engine.solve(lower, upper)? {
            LpStatus::Optimal => {
                let mut values = engine.solution();
                for &j in &self.binaries {
                    values[j] = lower[j];
                }
                Some(Incumbent {
                    objective: self.problem.objective_value(&values),
                    values,
                })
            }
            _ => None,
        };
        Ok(Outcome::Integral {
            lp_objective,
            polished,
        })
    }

    fn commit(&self, st: &mut State, node: Node, outcome: Outcome) {
        if node.depth == 0 {
            st.root_bound = match outcome {
                Outcome::Infeasible => None,
                Outcome::Pruned(b)
                | Outcome::Integral { lp_objective: b, .. }
                | Outcome::Branch { lp_objective: b, .. } => Some(b),
            };
        }
        match outcome {
            Outcome::Infeasible | Outcome::Pruned(_) => {}
            Outcome::Integral { polished, .. } => {
                if let Some(cand) = polished {
                    let better = st
                        .incumbent
                        .as_ref()
                        .is_none_or(|inc| cand.objective > inc.objective);
                    if better {
                        st.incumbent = Some(cand);
                        self.log_line(st);
                    }
                }
            }
            Outcome::Branch {
                lp_objective,
                column,
            } => {
                let dead = st
                    .incumbent
                    .as_ref()
                    .is_some_and(|inc| self.prunable(lp_objective, inc.objective));
                if !dead {
                    // Down child first so that a stack pops the up child next.
                    for value in [false, true] {
                        let mut fixings = node.fixings.clone();
                        fixings.push((column, value));
                        let child = Node {
                            id: st.next_id,
                            depth: node.depth + 1,
                            bound: lp_objective,
                            fixings,
                        };
                        st.next_id += 1;
                        st.pool.push(child);
                    }
                }
            }
        }
        if st.nodes.is_multiple_of(LOG_EVERY) {
            self.log_line(st);
        }
    }
}

fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    (bound - incumbent).max(0.0) / incumbent.abs().max(1e-9)
}

/// Branch-and-bound over the binary columns of a maximization model.
///
/// With `worker_count == 1` the search runs on the calling thread and is
/// fully deterministic. Hitting the node or time limit returns the best
/// incumbent with status `Feasible { gap }`.
pub fn solve_milp<P: AsRef<MilpProblem> + ?Sized>(
    model: &P,
    opts: &SolverOptions,
) -> Result<MilpSolution, SolverError> {
    opts.validate()?;
    let problem = model.as_ref();
    let start = Instant::now();
    let mut engine = LpEngine::new(problem)?;
    let (lower, upper) = column_bounds(problem);
    let pool = match opts.node_order {
        NodeOrder::DepthFirst => Pool::Stack(Vec::new()),
        NodeOrder::BestBound => Pool::Heap(BinaryHeap::new()),
    };
    let mut state = State {
        pool,
        active: 0,
        in_flight: vec![None; opts.worker_count],
        incumbent: None,
        nodes: 0,
        next_id: 1,
        root_bound: None,
        log: Vec::new(),
        stop: None,
        error: None,
        pivots: 0,
    };
    state.pool.push(Node {
        id: 0,
        depth: 0,
        bound: f64::INFINITY,
        fixings: Vec::new(),
    });
    let search = Search {
        problem,
        opts,
        binaries: problem.binary_columns(),
        lower,
        upper,
        start,
        state: Mutex::new(state),
        wake: Condvar::new(),
    };
    if opts.worker_count == 1 {
        search.worker(0, &mut engine);
    } else {
        std::thread::scope(|scope| {
            for w in 0..opts.worker_count {
                let mut local = engine.clone();
                let search = &search;
                scope.spawn(move || search.worker(w, &mut local));
            }
        });
    }
    let mut st = search.state.into_inner().expect("search state poisoned");
    if let Some(e) = st.error.take() {
        return Err(e);
    }
    let wall_time = start.elapsed().as_secs_f64();
    let root_bound = st.root_bound.unwrap_or(f64::NEG_INFINITY);
    let Some(inc) = st.incumbent.take() else {
        if let Some(limit) = st.stop {
            return Err(SolverError::NoIncumbent {
                limit,
                nodes: st.nodes,
            });
        }
        info!("model infeasible after {} nodes", st.nodes);
        return Ok(MilpSolution {
            values: Vec::new(),
            objective: f64::NAN,
            status: MilpStatus::Infeasible,
            nodes_explored: st.nodes,
            lp_iterations: st.pivots,
            wall_time,
            gap: f64::NAN,
            root_bound,
            log: st.log,
        });
    };
    // Drop open nodes that cannot beat the incumbent before measuring the gap.
    let mut open = f64::NEG_INFINITY;
    while let Some(node) = st.pool.pop() {
        if !search_prunable(opts, node.bound, inc.objective) {
            open = open.max(node.bound);
        }
    }
    let bound = open.max(inc.objective);
    let gap = relative_gap(bound, inc.objective);
    let status = if gap <= opts.integrality_tol {
        MilpStatus::Optimal
    } else {
        MilpStatus::Feasible { gap }
    };
    let mut log = st.log;
    log.push(SearchLogEntry {
        node: st.nodes,
        bound,
        incumbent: Some(inc.objective),
        gap: Some(gap),
    });
    info!(
        "branch-and-bound finished: {status}, objective {:.9}, {} nodes, {} pivots, {:.2}s",
        inc.objective, st.nodes, st.pivots, wall_time
    );
    Ok(MilpSolution {
        values: inc.values,
        objective: inc.objective,
        status,
        nodes_explored: st.nodes,
        lp_iterations: st.pivots,
        wall_time,
        gap,
        root_bound,
        log,
    })
}

fn search_prunable(opts: &SolverOptions, bound: f64, incumbent: f64) -> bool {
    bound <= incumbent + opts.feas_tol * incumbent.abs().max(1.0)
}
