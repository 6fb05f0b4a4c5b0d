//! Time-limited LP-based branch-and-bound.
//!
//! Node selection is best-bound (ties by insertion order). Until the first
//! incumbent exists the search plunges depth-first, taking the child on the
//! rounding side of the branching variable first. Branching picks the most
//! fractional discrete variable, lowest index on ties.
//!
//! Every fractional node LP solution is also offered to simple rounding: a
//! fractional variable is rounded in a direction in which no row can become
//! violated (no "locks"), and the result is kept if it improves the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::clock::{ClockKind, Stopwatch};
use super::instance::{Assignment, MipInstance};
use super::lp::{solve_lp_with_bounds, LpOptions, LpStatus};
use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMode {
    FirstFeasible,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub time: f64,
    pub objective: f64,
}

/// Incumbent history of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub events: Vec<Incumbent>,
    pub status: SolveStatus,
    pub best: Option<Assignment>,
    pub dual_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Clock reading when the solve returned.
    pub elapsed: f64,
}

impl SolveTrace {
    pub fn best_objective(&self) -> Option<f64> {
        self.events.last().map(|e| e.objective)
    }

    pub fn has_incumbent(&self) -> bool {
        !self.events.is_empty()
    }

    /// Best objective known at time `t`.
    pub fn objective_at(&self, t: f64) -> Option<f64> {
        self.events.iter().take_while(|e| e.time <= t).last().map(|e| e.objective)
    }

    /// Shifts all timestamps by `offset` seconds.
    pub fn shifted(mut self, offset: f64) -> Self {
        for e in &mut self.events {
            e.time += offset;
        }
        self.elapsed += offset;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MipOptions {
    pub budget: f64,
    pub mode: SolveMode,
    pub clock: ClockKind,
    pub rel_gap: f64,
    pub int_tol: f64,
    pub lp: LpOptions,
    /// Simple rounding at every node.
    pub rounding: bool,
}

impl MipOptions {
    pub fn new(budget: f64, mode: SolveMode) -> Self {
        Self { budget, mode, clock: ClockKind::Wall, rel_gap: 1e-6, int_tol: 1e-6, lp: LpOptions::default(), rounding: true }
    }

    pub fn with_clock(mut self, clock: ClockKind) -> Self {
        self.clock = clock;
        self
    }
}

/// Branch-and-bound with a fresh clock.
pub fn solve_mip(inst: &MipInstance, budget: f64, mode: SolveMode) -> Result<SolveTrace, SolveError> {
    solve_mip_opts(inst, &MipOptions::new(budget, mode))
}

pub fn solve_mip_opts(inst: &MipInstance, opts: &MipOptions) -> Result<SolveTrace, SolveError> {
    let mut watch = Stopwatch::start(opts.clock);
    solve_mip_with(inst, opts, &mut watch)
}

/// Rows in which increasing (`up`) or decreasing (`down`) each variable can
/// cause a violation; with all rows `<=`, the signs of the coefficients.
struct Locks {
    up: Vec<u32>,
    down: Vec<u32>,
}

impl Locks {
    fn new(inst: &MipInstance) -> Self {
        let n = inst.num_vars();
        let (mut up, mut down) = (vec![0; n], vec![0; n]);
        for &(_, j, a) in inst.triplets() {
            if a > 0.0 {
                up[j] += 1;
            } else if a < 0.0 {
                down[j] += 1;
            }
        }
        Locks { up, down }
    }

    /// Rounds every fractional discrete entry of `x` in a lock-free
    /// direction; `None` when some variable is locked both ways.
    fn round(&self, x: &[f64], integrality: &[bool], tol: f64) -> Option<Vec<f64>> {
        let mut out = x.to_vec();
        for (j, v) in out.iter_mut().enumerate() {
            if !integrality[j] {
                continue;
            }
            if (*v - v.round()).abs() <= tol {
                *v = v.round();
            } else if self.down[j] == 0 {
                *v = v.floor();
            } else if self.up[j] == 0 {
                *v = v.ceil();
            } else {
                return None;
            }
        }
        Some(out)
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    id: usize,
}

struct Keyed(Node);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    // reversed so that BinaryHeap pops the smallest (bound, id)
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then_with(|| other.0.id.cmp(&self.0.id))
    }
}

thread_local! {
    static SOLVES: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// Branch-and-bound runs started on the calling thread so far.
pub fn solves_on_this_thread() -> usize {
    SOLVES.with(|c| c.get())
}

/// Branch-and-bound charging work to an existing stopwatch; trace times are
/// readings of that stopwatch.
pub fn solve_mip_with(
    inst: &MipInstance,
    opts: &MipOptions,
    watch: &mut Stopwatch,
) -> Result<SolveTrace, SolveError> {
    SOLVES.with(|c| c.set(c.get() + 1));
    if !(opts.budget > 0.0) {
        return Err(SolveError::BadBudget(opts.budget));
    }
    let n = inst.num_vars();
    let m = inst.num_cons();
    let integrality = inst.integrality();
    let integral_objective = inst
        .objective_coeffs()
        .iter()
        .zip(integrality)
        .all(|(&c, &d)| c == 0.0 || (d && c.fract() == 0.0));

    let locks = opts.rounding.then(|| Locks::new(inst));
    let mut events: Vec<Incumbent> = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stack: Vec<Node> = vec![Node {
        lower: inst.lower().to_vec(),
        upper: inst.upper().to_vec(),
        bound: f64::NEG_INFINITY,
        id: 0,
    }];
    let mut heap: BinaryHeap<Keyed> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut gap_closed = false;

    let prunable = |bound: f64, best: &Option<(f64, Vec<f64>)>| -> bool {
        match best {
            None => false,
            Some((inc, _)) => {
                let tol = opts.rel_gap * inc.abs().max(1.0);
                if integral_objective {
                    bound > inc - 1.0 + tol
                } else {
                    bound >= inc - tol
                }
            }
        }
    };

    loop {
        if watch.elapsed() >= opts.budget {
            break;
        }
        let node = if best.is_none() {
            match stack.pop() {
                Some(node) => node,
                None => break,
            }
        } else {
            if !stack.is_empty() {
                heap.extend(stack.drain(..).map(Keyed));
            }
            match heap.peek() {
                None => break,
                Some(top) if prunable(top.0.bound, &best) => {
                    // every open node is dominated
                    gap_closed = true;
                    heap.clear();
                    break;
                }
                Some(_) => heap.pop().unwrap().0,
            }
        };
        if prunable(node.bound, &best) {
            continue;
        }

        let lp = solve_lp_with_bounds(inst, &node.lower, &node.upper, &opts.lp);
        nodes += 1;
        lp_iterations += lp.iterations;
        watch.charge(lp.work + (n + m) as f64);

        let x = match lp.status {
            LpStatus::Optimal => lp.x.expect("optimal LP carries a solution"),
            LpStatus::Infeasible => continue,
            LpStatus::IterationLimit => {
                log::warn!("LP iteration limit at node {}; node treated as infeasible", node.id);
                continue;
            }
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Err(SolveError::Unbounded);
                }
                continue;
            }
        };
        let obj = lp.objective.expect("optimal LP carries an objective");
        if prunable(obj, &best) {
            continue;
        }

        let mut branch: Option<(usize, f64)> = None;
        for j in 0..n {
            if !integrality[j] {
                continue;
            }
            let frac = (x[j] - x[j].round()).abs();
            if frac > opts.int_tol && branch.is_none_or(|(_, f)| frac > f) {
                branch = Some((j, frac));
            }
        }

        match branch {
            None => {
                let mut cand = x;
                for j in 0..n {
                    if integrality[j] {
                        cand[j] = cand[j].round();
                    }
                }
                let assignment = Assignment(cand);
                if !inst.check_feasible(&assignment, 1e-6)? {
                    log::warn!("rounded LP solution at node {} failed the feasibility check", node.id);
                    continue;
                }
                let value = inst.objective(&assignment)?;
                let improves = best.as_ref().is_none_or(|(inc, _)| value < *inc);
                if improves {
                    events.push(Incumbent { time: watch.elapsed(), objective: value });
                    best = Some((value, assignment.0));
                    if opts.mode == SolveMode::FirstFeasible {
                        break;
                    }
                }
            }
            Some((j, _)) => {
                if let Some(cand) = locks.as_ref().and_then(|l| l.round(&x, integrality, opts.int_tol)) {
                    watch.charge(inst.nnz() as f64 + n as f64);
                    let assignment = Assignment(cand);
                    if inst.check_feasible(&assignment, 1e-6)? {
                        let value = inst.objective(&assignment)?;
                        if best.as_ref().is_none_or(|(inc, _)| value < *inc) {
                            events.push(Incumbent { time: watch.elapsed(), objective: value });
                            best = Some((value, assignment.0));
                            if opts.mode == SolveMode::FirstFeasible {
                                break;
                            }
                            if prunable(obj, &best) {
                                continue;
                            }
                        }
                    }
                }
                let v = x[j];
                let mut down = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    bound: obj,
                    id: 0,
                };
                down.upper[j] = v.floor();
                let mut up = Node { lower: node.lower, upper: node.upper, bound: obj, id: 0 };
                up.lower[j] = v.ceil();
                // the child pushed last is explored first while plunging
                let (first, second) = if v - v.floor() >= 0.5 { (down, up) } else { (up, down) };
                for mut child in [first, second] {
                    child.id = next_id;
                    next_id += 1;
                    if best.is_none() {
                        stack.push(child);
                    } else {
                        heap.push(Keyed(child));
                    }
                }
            }
        }
    }

    let open_bound = stack
        .iter()
        .map(|n| n.bound)
        .chain(heap.iter().map(|k| k.0.bound))
        .fold(f64::INFINITY, f64::min);
    let exhausted = stack.is_empty() && heap.is_empty();
    let status = match (&best, exhausted || gap_closed) {
        (Some(_), true) => SolveStatus::Optimal,
        (None, true) => SolveStatus::Infeasible,
        (Some(_), false) => SolveStatus::Feasible,
        (None, false) => SolveStatus::TimeLimit,
    };
    let dual_bound = match (&best, status) {
        (Some((inc, _)), SolveStatus::Optimal) => *inc,
        (None, SolveStatus::Infeasible) => f64::INFINITY,
        (Some((inc, _)), _) => open_bound.min(*inc),
        (None, _) => open_bound,
    };
    Ok(SolveTrace {
        events,
        status,
        best: best.map(|(_, x)| Assignment(x)),
        dual_bound,
        nodes,
        lp_iterations,
        elapsed: watch.elapsed(),
    })
}
