//! Bounded-variable simplex on a dense compact tableau.
//!
//! Every row `i` gets an activity variable `r_i = a_i . x` whose bounds encode
//! the row sense, so the system is `r = A x` with bounds on all `n + m`
//! variables. The tableau stores the `m` basic variables as linear functions
//! of the `n` nonbasic ones; pivots cost `O(m n)`.
//!
//! Phase 1 minimizes the sum of bound violations of the basic variables,
//! phase 2 maximizes the objective. When the starting basis is dual feasible
//! but primal infeasible (the usual situation after a branching bound
//! change) the dual simplex is used instead. Dantzig pricing switches to
//! Bland's rule after a run of degenerate pivots.

use log::{trace, warn};
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::model::{MilpProblem, Sense};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_RUN: usize = 50;
const REFACTOR_EVERY: usize = 4000;
/// Largest tableau (rows x columns) the dense engine accepts.
pub const MAX_TABLEAU_ENTRIES: usize = 150_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic(usize),
    Nonbasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Continue,
    Done,
    Stuck,
}

#[derive(Debug, Clone)]
pub(crate) struct LpEngine {
    n: usize,
    m: usize,
    tab: Vec<f64>,
    reduced: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    place: Vec<Place>,
    value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    /// Scaled rows kept for refactorization and verification.
    rows: Vec<Vec<(usize, f64)>>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    implied_lower: Vec<f64>,
    implied_upper: Vec<f64>,
    /// A row without coefficients that can never hold.
    trivially_infeasible: bool,
    pivots_since_refactor: usize,
    bland: bool,
    degenerate_run: usize,
    pivot_row: Vec<f64>,
    pivot_nz: Vec<usize>,
    pub iterations: u64,
}

impl LpEngine {
    pub fn new(problem: &MilpProblem) -> Result<Self, SolverError> {
        let n = problem.num_columns();
        let mut implied_lower = vec![f64::NEG_INFINITY; n];
        let mut implied_upper = vec![f64::INFINITY; n];
        let mut rows = Vec::new();
        let mut row_lower = Vec::new();
        let mut row_upper = Vec::new();
        let mut trivially_infeasible = false;
        for row in problem.all_rows() {
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            match row.coefficients.as_slice() {
                [] => {
                    if lo > PRIMAL_TOL || hi < -PRIMAL_TOL {
                        trivially_infeasible = true;
                    }
                }
                // Singleton rows are column bounds.
                &[(j, a)] => {
                    let (blo, bhi) = if a > 0.0 { (lo / a, hi / a) } else { (hi / a, lo / a) };
                    implied_lower[j] = implied_lower[j].max(blo);
                    implied_upper[j] = implied_upper[j].min(bhi);
                }
                coeffs => {
                    let scale = coeffs.iter().fold(0.0f64, |s, &(_, a)| s.max(a.abs()));
                    rows.push(coeffs.iter().map(|&(j, a)| (j, a / scale)).collect());
                    row_lower.push(lo / scale);
                    row_upper.push(hi / scale);
                }
            }
        }
        let m = rows.len();
        if m.saturating_mul(n) > MAX_TABLEAU_ENTRIES {
            return Err(SolverError::TooLarge { rows: m, columns: n });
        }
        let mut cost = vec![0.0; n + m];
        for &(j, c) in &problem.objective {
            cost[j] += c;
        }
        let mut lower = vec![0.0; n + m];
        let mut upper = vec![0.0; n + m];
        for (j, col) in problem.columns.iter().enumerate() {
            lower[j] = col.lower;
            upper[j] = col.upper;
        }
        lower[n..].copy_from_slice(&row_lower);
        upper[n..].copy_from_slice(&row_upper);
        let mut engine = Self {
            n,
            m,
            tab: Vec::new(),
            reduced: vec![0.0; n],
            basic: Vec::new(),
            nonbasic: Vec::new(),
            place: Vec::new(),
            value: vec![0.0; n + m],
            lower,
            upper,
            at_upper: vec![false; n + m],
            cost,
            rows,
            row_lower,
            row_upper,
            implied_lower,
            implied_upper,
            trivially_infeasible,
            pivots_since_refactor: 0,
            bland: false,
            degenerate_run: 0,
            pivot_row: vec![0.0; n],
            pivot_nz: Vec::with_capacity(n),
            iterations: 0,
        };
        engine.reset_to_slack_basis();
        engine.recompute_reduced_costs();
        Ok(engine)
    }

    fn reset_to_slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.tab = vec![0.0; m * n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                self.tab[i * n + j] += a;
            }
        }
        self.basic = (n..n + m).collect();
        self.nonbasic = (0..n).collect();
        self.place = (0..n)
            .map(Place::Nonbasic)
            .chain((0..m).map(Place::Basic))
            .collect();
        self.pivots_since_refactor = 0;
    }

    fn recompute_reduced_costs(&mut self) {
        let n = self.n;
        for p in 0..n {
            self.reduced[p] = self.cost[self.nonbasic[p]];
        }
        for i in 0..self.m {
            let c = self.cost[self.basic[i]];
            if c != 0.0 {
                let row = &self.tab[i * n..(i + 1) * n];
                for (d, &a) in self.reduced.iter_mut().zip(row) {
                    *d += c * a;
                }
            }
        }
    }

    fn snap_nonbasic(&mut self, k: usize) {
        let (lo, hi) = (self.lower[k], self.upper[k]);
        let v = if lo == hi {
            lo
        } else if self.at_upper[k] && hi.is_finite() {
            hi
        } else if lo.is_finite() {
            self.at_upper[k] = false;
            lo
        } else if hi.is_finite() {
            self.at_upper[k] = true;
            hi
        } else {
            0.0
        };
        self.value[k] = v;
    }

    fn recompute_basics(&mut self) {
        let n = self.n;
        let nz: Vec<(usize, f64)> = (0..n)
            .map(|p| (p, self.value[self.nonbasic[p]]))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        for i in 0..self.m {
            let row = &self.tab[i * n..(i + 1) * n];
            self.value[self.basic[i]] = nz.iter().map(|&(p, v)| row[p] * v).sum();
        }
    }

    fn can_increase(&self, k: usize) -> bool {
        self.value[k] < self.upper[k] - PRIMAL_TOL
    }

    fn can_decrease(&self, k: usize) -> bool {
        self.value[k] > self.lower[k] + PRIMAL_TOL
    }

    /// Signed infeasibility of a basic variable: negative below its lower
    /// bound, positive above its upper bound.
    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.value[k];
        if v < self.lower[k] - PRIMAL_TOL {
            v - self.lower[k]
        } else if v > self.upper[k] + PRIMAL_TOL {
            v - self.upper[k]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basic.iter().all(|&k| self.infeasibility(k) == 0.0)
    }

    fn dual_feasible(&self) -> bool {
        (0..self.n).all(|p| {
            let k = self.nonbasic[p];
            let d = self.reduced[p];
            !((d > DUAL_TOL && self.can_increase(k)) || (d < -DUAL_TOL && self.can_decrease(k)))
        })
    }

    /// Exchanges basic row `r` with nonbasic column `q`.
    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.tab[r * n + q];
        self.pivot_nz.clear();
        {
            let row = &mut self.tab[r * n..(r + 1) * n];
            for (p, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= -inv;
                    self.pivot_nz.push(p);
                }
            }
            row[q] = inv;
            self.pivot_row.copy_from_slice(row);
        }
        let prow = &self.pivot_row;
        let nz = &self.pivot_nz;
        // Dense rows update faster with a straight vectorizable loop.
        let dense = 4 * nz.len() > n;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            if dense {
                for (v, &w) in row.iter_mut().zip(prow) {
                    *v += f * w;
                }
            } else {
                for &p in nz {
                    let v = row[p] + f * prow[p];
                    row[p] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
            }
            row[q] = f * inv;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &p in nz {
                self.reduced[p] += f * prow[p];
            }
            self.reduced[q] = f * inv;
        }
        let entering = self.nonbasic[q];
        let leaving = self.basic[r];
        self.basic[r] = entering;
        self.nonbasic[q] = leaving;
        self.place[entering] = Place::Basic(r);
        self.place[leaving] = Place::Nonbasic(q);
        self.pivots_since_refactor += 1;
        self.iterations += 1;
    }

    /// Moves nonbasic column `q` by `delta`, updating every basic variable.
    fn shift(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let n = self.n;
        for i in 0..self.m {
            let a = self.tab[i * n + q];
            if a != 0.0 {
                self.value[self.basic[i]] += a * delta;
            }
        }
        self.value[self.nonbasic[q]] += delta;
    }

    fn note_step(&mut self, length: f64) {
        if length <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_RUN && !self.bland {
                trace!("switching to Bland's rule after {} degenerate pivots", self.degenerate_run);
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// One primal iteration. In phase 1 the objective is the negated sum of
    /// infeasibilities; `Stuck` then means infeasible, in phase 2 unbounded.
    fn primal_step(&mut self, phase_one: bool) -> Step {
        let n = self.n;
        let mut phase_cost = Vec::new();
        if phase_one {
            phase_cost = vec![0.0; n];
            for i in 0..self.m {
                let g = self.infeasibility(self.basic[i]);
                if g != 0.0 {
                    let w = if g < 0.0 { 1.0 } else { -1.0 };
                    let row = &self.tab[i * n..(i + 1) * n];
                    for (d, &a) in phase_cost.iter_mut().zip(row) {
                        *d += w * a;
                    }
                }
            }
        }
        let d = if phase_one { &phase_cost } else { &self.reduced };

        let mut entering: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for p in 0..n {
            let k = self.nonbasic[p];
            let dir = if d[p] > DUAL_TOL && self.can_increase(k) {
                1.0
            } else if d[p] < -DUAL_TOL && self.can_decrease(k) {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                if entering.is_none_or(|(q, _)| k < self.nonbasic[q]) {
                    entering = Some((p, dir));
                }
            } else if d[p].abs() > best {
                best = d[p].abs();
                entering = Some((p, dir));
            }
        }
        let Some((q, dir)) = entering else {
            return Step::Done;
        };

        let e = self.nonbasic[q];
        let mut limit = if dir > 0.0 {
            self.upper[e] - self.value[e]
        } else {
            self.value[e] - self.lower[e]
        };
        let mut leave: Option<(usize, f64, f64)> = None; // (row, target, |alpha|)
        for i in 0..self.m {
            let alpha = self.tab[i * n + q] * dir;
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let k = self.basic[i];
            let x = self.value[k];
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let infeas = if phase_one { self.infeasibility(k) } else { 0.0 };
            let (ratio, target) = if infeas < 0.0 {
                if alpha > 0.0 {
                    ((lo - x) / alpha, lo)
                } else {
                    continue;
                }
            } else if infeas > 0.0 {
                if alpha < 0.0 {
                    ((x - hi) / -alpha, hi)
                } else {
                    continue;
                }
            } else if alpha > 0.0 {
                if !hi.is_finite() {
                    continue;
                }
                ((hi - x) / alpha, hi)
            } else {
                if !lo.is_finite() {
                    continue;
                }
                ((x - lo) / -alpha, lo)
            };
            let ratio = ratio.max(0.0);
            let better = match leave {
                None => ratio < limit,
                Some((r, _, a)) => {
                    if ratio < limit - 1e-12 {
                        true
                    } else if ratio <= limit + 1e-12 {
                        if self.bland {
                            k < self.basic[r]
                        } else {
                            alpha.abs() > a
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                limit = ratio.min(limit);
                leave = Some((i, target, alpha.abs()));
            }
        }
        if !limit.is_finite() {
            return Step::Stuck;
        }
        self.note_step(limit);
        self.shift(q, dir * limit);
        match leave {
            None => {
                let up = dir > 0.0;
                self.value[e] = if up { self.upper[e] } else { self.lower[e] };
                self.at_upper[e] = up;
            }
            Some((r, target, _)) => {
                let k = self.basic[r];
                self.pivot(r, q);
                self.value[k] = target;
                self.at_upper[k] = target == self.upper[k] && self.lower[k] != self.upper[k];
            }
        }
        Step::Continue
    }

    /// One dual simplex iteration from a dual feasible basis. `Stuck` means
    /// the LP is primal infeasible.
    fn dual_step(&mut self) -> Step {
        let n = self.n;
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let k = self.basic[i];
            let g = self.infeasibility(k);
            if g == 0.0 {
                continue;
            }
            let take = match leave {
                None => true,
                Some((r, best)) => {
                    if self.bland {
                        k < self.basic[r]
                    } else {
                        g.abs() > best
                    }
                }
            };
            if take {
                leave = Some((i, g.abs()));
            }
        }
        let Some((r, _)) = leave else {
            return Step::Done;
        };
        let k = self.basic[r];
        let below = self.value[k] < self.lower[k];
        let target = if below { self.lower[k] } else { self.upper[k] };
        let delta = target - self.value[k];

        let mut entering: Option<(usize, f64, f64)> = None; // (col, ratio, |a|)
        for p in 0..n {
            let a = self.tab[r * n + p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let e = self.nonbasic[p];
            let movable = if (delta / a) > 0.0 {
                self.can_increase(e)
            } else {
                self.can_decrease(e)
            };
            if !movable {
                continue;
            }
            let ratio = self.reduced[p].abs() / a.abs();
            let better = match entering {
                None => true,
                Some((q, best, amag)) => {
                    if ratio < best - 1e-12 {
                        true
                    } else if ratio <= best + 1e-12 {
                        if self.bland {
                            e < self.nonbasic[q]
                        } else {
                            a.abs() > amag
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                entering = Some((p, ratio, a.abs()));
            }
        }
        let Some((q, ratio, _)) = entering else {
            return Step::Stuck;
        };
        self.note_step(ratio);
        let step = delta / self.tab[r * n + q];
        self.shift(q, step);
        self.pivot(r, q);
        self.value[k] = target;
        self.at_upper[k] = !below && self.lower[k] != self.upper[k];
        Step::Continue
    }

    /// Rebuilds the tableau from the original rows for the current basis.
    fn refactor(&mut self) {
        let n = self.n;
        let mut targets: Vec<usize> = self.basic.iter().copied().filter(|&k| k < n).collect();
        targets.sort_unstable();
        let mut in_basis = vec![false; n + self.m];
        for &k in &self.basic {
            in_basis[k] = true;
        }
        self.reset_to_slack_basis();
        for j in targets {
            let Place::Nonbasic(q) = self.place[j] else {
                continue;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let k = self.basic[i];
                if k < n || in_basis[k] {
                    continue;
                }
                let a = self.tab[i * n + q].abs();
                if a > 1e-10 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((i, a));
                }
            }
            match best {
                Some((r, _)) => {
                    self.pivot(r, q);
                    self.iterations -= 1;
                }
                None => warn!("refactor dropped column {j} from a singular basis"),
            }
        }
        for p in 0..n {
            let k = self.nonbasic[p];
            self.snap_nonbasic(k);
        }
        self.recompute_basics();
        self.recompute_reduced_costs();
        self.pivots_since_refactor = 0;
    }

    /// Maximum scaled violation of the rows and column bounds at the current
    /// point.
    fn residual(&self) -> f64 {
        let x = &self.value[..self.n];
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let act: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst
                .max(self.row_lower[i] - act)
                .max(act - self.row_upper[i]);
        }
        for j in 0..self.n {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    /// Solves the LP with the given column bounds, warm-starting from the
    /// basis left by the previous call.
    pub fn solve(&mut self, col_lower: &[f64], col_upper: &[f64]) -> Result<LpStatus, SolverError> {
        let n = self.n;
        if self.trivially_infeasible {
            return Ok(LpStatus::Infeasible);
        }
        for j in 0..n {
            let lo = col_lower[j].max(self.implied_lower[j]);
            let hi = col_upper[j].min(self.implied_upper[j]);
            if lo > hi + PRIMAL_TOL {
                return Ok(LpStatus::Infeasible);
            }
            self.lower[j] = lo;
            self.upper[j] = hi.max(lo);
        }
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
        for p in 0..n {
            let k = self.nonbasic[p];
            self.snap_nonbasic(k);
        }
        self.recompute_basics();

        let max_iterations = 50_000 + 50 * (n + self.m) as u64;
        let start = self.iterations;
        let mut refactored = false;
        self.bland = false;
        self.degenerate_run = 0;
        loop {
            if self.iterations - start > max_iterations {
                return Err(SolverError::IterationLimit(self.iterations - start));
            }
            let step = if self.primal_feasible() {
                match self.primal_step(false) {
                    Step::Stuck => return Ok(LpStatus::Unbounded),
                    other => other,
                }
            } else if self.dual_feasible() {
                match self.dual_step() {
                    Step::Stuck => return Ok(LpStatus::Infeasible),
                    other => other,
                }
            } else {
                match self.primal_step(true) {
                    Step::Done => return Ok(LpStatus::Infeasible),
                    other => other,
                }
            };
            if step == Step::Done && self.primal_feasible() {
                let residual = self.residual();
                if residual <= 1e-9 {
                    return Ok(LpStatus::Optimal);
                }
                if refactored {
                    warn!("LP residual {residual:e} persists after refactorization");
                    return Ok(LpStatus::Optimal);
                }
                trace!("residual {residual:e}; refactorizing");
                self.refactor();
                refactored = true;
            }
        }
    }

    pub fn solution(&self) -> Vec<f64> {
        self.value[..self.n].to_vec()
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.value[j]).sum()
    }
}
