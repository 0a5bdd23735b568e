//! Branch-and-cut driver: best-first search over LP relaxations with
//! depth-plunging, warm-started simplex re-solves, a rounding polish step,
//! and validation of every incumbent before it is accepted.

use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::arcs::{build_arc_set, eliminate_infeasible_arcs};
use crate::instance::{validate_instance, Instance};
use crate::lp::{solve_lp, Basis, BoundOverride, LpSolution, LpStatus};
use crate::model::{
    add_valid_inequalities, build_milp, compute_big_m, extract_solution, MilpModel,
};
use crate::solution::Solution;
use crate::validate::validate;

/// Binary variables within this distance of an integer count as integral.
pub const INT_TOL: f64 = 1e-6;
/// Values further than this from an integer trigger the polish re-solve.
const EXACT_TOL: f64 = 1e-9;
/// A log line is emitted every this many explored nodes.
const LOG_EVERY: u64 = 500;

/// Knobs for [`solve`]. `Default` matches the command-line defaults.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Wall-clock budget in seconds.
    pub time_limit_s: f64,
    /// Stop once the relative optimality gap falls below this.
    pub gap_tol: f64,
    /// Add the valid-inequality families to the root formulation.
    pub enable_cuts: bool,
    /// Reserved for randomized components; recorded but currently unused.
    pub seed: u64,
    /// Worker threads for the tree search (1 = fully deterministic).
    pub threads: usize,
    /// Optional cap on explored nodes; hitting it reports a time-limit status.
    pub node_limit: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit_s: 14_400.0,
            gap_tol: 1e-6,
            enable_cuts: true,
            seed: 0,
            threads: 1,
            node_limit: None,
        }
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Incumbent proven optimal within the gap tolerance.
    Optimal,
    /// No feasible schedule exists.
    Infeasible,
    /// A limit was hit with an incumbent in hand.
    TimeLimitFeasible,
    /// A limit was hit before any feasible solution was found.
    TimeLimitNoSolution,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimitFeasible => "time-limit-feasible",
            SolveStatus::TimeLimitNoSolution => "time-limit-no-solution",
        };
        f.write_str(s)
    }
}

/// Everything a caller needs to report a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective of the incumbent (`inf` when none exists).
    pub objective: f64,
    /// Best proven lower bound on the optimum.
    pub bound: f64,
    pub solution: Option<Solution>,
    /// Nodes whose relaxation was solved (the root counts as one).
    pub nodes_explored: u64,
    /// Rows in the solved formulation, cuts included.
    pub constraints: usize,
    pub cpu_seconds: f64,
    /// Relative gap `(objective - bound) / max(1, |objective|)`.
    pub gap: f64,
    /// Search log; one line per event, wall-clock field last on each line.
    #[serde(skip_serializing)]
    pub log: String,
}

/// Hard failures; infeasibility is a [`SolveStatus`], not an error.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid instance:\n{0}")]
    InvalidInstance(String),
    #[error("cannot build arcs: {0}")]
    Arcs(#[from] crate::arcs::ArcError),
    #[error("internal solver failure: {0}")]
    Internal(String),
}

/// Picks the branching variable: `None` when every binary is integral,
/// otherwise the most fractional variable in the lowest branching class
/// (routing arcs, then transfer flags, then vehicle indicators), with the
/// lowest catalog index breaking exact score ties.
pub fn check_integrality(model: &MilpModel, lp: &LpSolution, tol: f64) -> Option<usize> {
    let mut choice: Option<(usize, f64, usize)> = None;
    for var in model.binary_variables() {
        let value = lp.values[var];
        let dist = (value - value.round()).abs();
        if dist <= tol {
            continue;
        }
        let class = model.index.branching_class(var);
        let better = match choice {
            None => true,
            Some((c, d, _)) => class < c || (class == c && dist > d),
        };
        if better {
            choice = Some((class, dist, var));
        }
    }
    choice.map(|(_, _, var)| var)
}

/// True when a node with lower bound `bound` cannot improve on `best`.
fn cuts_off(bound: f64, best: f64) -> bool {
    best.is_finite() && bound >= best - 1e-9 * best.abs().max(1.0)
}

/// Relative optimality gap; `inf` without an incumbent.
fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() {
        return f64::INFINITY;
    }
    if !bound.is_finite() {
        return f64::INFINITY;
    }
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}

/// An open subproblem: the bound fixings on its path, its parent's LP value
/// as a lower bound, and the parent basis for warm starting.
struct Work {
    overrides: Vec<BoundOverride>,
    bound: f64,
    depth: u32,
    basis: Option<Basis>,
    seq: u64,
}

/// Heap adapter: `BinaryHeap` is a max-heap, so order is reversed to pop the
/// lowest `(bound, seq)` first — best-first with FIFO tie-breaking.
struct Open(Work);

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(other.0.seq.cmp(&self.0.seq))
    }
}

/// Why the search stopped before exhausting the tree.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Halt {
    Time,
    Nodes,
    Gap,
    Error,
}

/// State shared by the worker threads, all behind one mutex.
struct Shared {
    heap: BinaryHeap<Open>,
    best: f64,
    incumbent: Option<Solution>,
    nodes: u64,
    next_seq: u64,
    /// Lower bound of the node each worker is currently processing.
    busy: Vec<Option<f64>>,
    active: usize,
    halt: Option<Halt>,
    /// Global bound frozen at the moment a halt was triggered.
    halt_bound: f64,
    last_log: u64,
    log: String,
    error: Option<String>,
}

impl Shared {
    /// Smallest bound over open and in-flight nodes; `inf` when none remain.
    fn global_bound(&self) -> f64 {
        let mut bound = match self.heap.peek() {
            Some(open) => open.0.bound,
            None => f64::INFINITY,
        };
        for b in self.busy.iter().flatten() {
            bound = bound.min(*b);
        }
        bound
    }
}

struct Ctx<'a> {
    model: &'a MilpModel,
    instance: &'a Instance,
    options: &'a SolveOptions,
    started: Instant,
    shared: Mutex<Shared>,
    idle: Condvar,
}

impl Ctx<'_> {
    fn push_log(&self, shared: &mut Shared) {
        let bound = shared.global_bound();
        let gap = relative_gap(shared.best, bound);
        let line = format!(
            "nodes={} open={} incumbent={:.6} bound={:.6} gap={:.6} elapsed={:.3}\n",
            shared.nodes,
            shared.heap.len(),
            shared.best,
            bound,
            gap,
            self.started.elapsed().as_secs_f64(),
        );
        shared.log.push_str(&line);
        shared.last_log = shared.nodes;
    }

    fn trigger_halt(&self, shared: &mut Shared, halt: Halt) {
        if shared.halt.is_none() {
            shared.halt = Some(halt);
            shared.halt_bound = shared.global_bound().min(shared.best);
            self.idle.notify_all();
        }
    }
}

/// What processing one node produced; computed outside the lock.
enum Outcome {
    /// Relaxation infeasible or dominated by the incumbent.
    Fathomed,
    /// New feasible schedule.
    Incumbent { objective: f64, solution: Box<Solution> },
    /// Fractional relaxation: plunge into `keep`, queue `push`.
    Branch { keep: Work, push: Work },
}

fn child(work: &Work, lp: &LpSolution, var: usize, value: f64) -> Work {
    let mut overrides = work.overrides.clone();
    overrides.push((var, value, value));
    Work {
        overrides,
        bound: lp.objective,
        depth: work.depth + 1,
        basis: Some(lp.basis.clone()),
        seq: 0,
    }
}

/// Solves one node end to end: relaxation, pruning, branching or polishing,
/// extraction, and validation. Runs without holding the shared lock.
fn process(ctx: &Ctx<'_>, work: &Work, best_snapshot: f64) -> Result<Outcome, String> {
    let mut lp = solve_lp(&ctx.model.lp, &work.overrides, work.basis.as_ref());
    if lp.status == LpStatus::IterationLimit && work.basis.is_some() {
        // A poor inherited basis can stall the simplex; one cold restart
        // from the crash basis almost always clears it.
        lp = solve_lp(&ctx.model.lp, &work.overrides, None);
    }
    match lp.status {
        LpStatus::Infeasible => return Ok(Outcome::Fathomed),
        LpStatus::Optimal => {}
        other => {
            return Err(format!(
                "node relaxation ended with status {other:?} after {} iterations \
                 (depth {}, {} fixings)",
                lp.iterations,
                work.depth,
                work.overrides.len()
            ))
        }
    }
    if cuts_off(lp.objective, best_snapshot) {
        return Ok(Outcome::Fathomed);
    }

    if let Some(var) = check_integrality(ctx.model, &lp, INT_TOL) {
        return Ok(branch_on(work, &lp, var));
    }

    // All binaries are integral within INT_TOL. If any is off by more than
    // the exact tolerance, re-solve with every binary pinned to its rounded
    // value so the reported schedule is exact, not merely near-integral.
    let needs_polish = ctx
        .model
        .binary_variables()
        .any(|var| (lp.values[var] - lp.values[var].round()).abs() > EXACT_TOL);
    let polished;
    let accepted: &LpSolution = if needs_polish {
        let mut overrides = work.overrides.clone();
        for var in ctx.model.binary_variables() {
            let fixed = lp.values[var].round();
            overrides.push((var, fixed, fixed));
        }
        polished = solve_lp(&ctx.model.lp, &overrides, Some(&lp.basis));
        match polished.status {
            LpStatus::Optimal => &polished,
            LpStatus::Infeasible => {
                // The rounding is not feasible after all; branch on the
                // binary furthest from an integer to split the node soundly.
                let var = ctx
                    .model
                    .binary_variables()
                    .max_by(|&a, &b| {
                        let da = (lp.values[a] - lp.values[a].round()).abs();
                        let db = (lp.values[b] - lp.values[b].round()).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("model has binaries");
                return Ok(branch_on(work, &lp, var));
            }
            other => return Err(format!("polish re-solve ended with status {other:?}")),
        }
    } else {
        &lp
    };

    let solution = extract_solution(ctx.model, &accepted.values, ctx.instance)
        .map_err(|e| format!("incumbent extraction failed: {e}"))?;
    let report = validate(ctx.instance, &solution)
        .map_err(|e| format!("incumbent has invalid shape: {e}"))?;
    if !report.passed {
        return Err(format!(
            "incumbent with objective {:.6} failed validation:\n{report}",
            accepted.objective
        ));
    }
    Ok(Outcome::Incumbent {
        objective: accepted.objective,
        solution: Box::new(solution),
    })
}

fn branch_on(work: &Work, lp: &LpSolution, var: usize) -> Outcome {
    let up_first = lp.values[var] >= 0.5;
    let up = child(work, lp, var, 1.0);
    let down = child(work, lp, var, 0.0);
    if up_first {
        Outcome::Branch { keep: up, push: down }
    } else {
        Outcome::Branch { keep: down, push: up }
    }
}

/// Worker loop: pop the best open node, plunge down one path until it is
/// fathomed, then return for the next node. All heap and incumbent traffic
/// goes through the shared mutex; LP solves run unlocked.
fn worker(id: usize, ctx: &Ctx<'_>) {
    let mut guard = ctx.shared.lock().unwrap();
    loop {
        if guard.halt.is_some() {
            break;
        }
        // Drop nodes the incumbent has since dominated.
        let mut node = None;
        while let Some(open) = guard.heap.pop() {
            if !cuts_off(open.0.bound, guard.best) {
                node = Some(open.0);
                break;
            }
        }
        let Some(work) = node else {
            if guard.active == 0 {
                ctx.idle.notify_all();
                break;
            }
            guard = ctx.idle.wait(guard).unwrap();
            continue;
        };
        guard.busy[id] = Some(work.bound);
        guard.active += 1;
        guard = plunge(id, ctx, work, guard);
        guard.busy[id] = None;
        guard.active -= 1;
        ctx.idle.notify_all();
    }
}

/// Processes `work` and then its preferred children until the chain dies.
/// Takes and returns the lock guard so pop/push bookkeeping stays atomic.
fn plunge<'g>(
    id: usize,
    ctx: &'g Ctx<'_>,
    work: Work,
    mut guard: MutexGuard<'g, Shared>,
) -> MutexGuard<'g, Shared> {
    let mut current = Some(work);
    while let Some(work) = current.take() {
        let best_snapshot = guard.best;
        drop(guard);
        let outcome = process(ctx, &work, best_snapshot);
        guard = ctx.shared.lock().unwrap();
        guard.nodes += 1;

        match outcome {
            Err(message) => {
                guard.error = Some(message);
                ctx.trigger_halt(&mut guard, Halt::Error);
            }
            Ok(Outcome::Fathomed) => {}
            Ok(Outcome::Incumbent { objective, solution }) => {
                if objective < guard.best {
                    guard.best = objective;
                    guard.incumbent = Some(*solution);
                    ctx.push_log(&mut guard);
                }
            }
            Ok(Outcome::Branch { keep, mut push }) => {
                if !cuts_off(keep.bound, guard.best) {
                    push.seq = guard.next_seq;
                    guard.next_seq += 1;
                    guard.heap.push(Open(push));
                    ctx.idle.notify_one();
                    current = Some(keep);
                }
            }
        }
        guard.busy[id] = current.as_ref().map(|w| w.bound);

        if guard.nodes - guard.last_log >= LOG_EVERY {
            ctx.push_log(&mut guard);
        }
        if guard.halt.is_none() {
            if ctx.started.elapsed().as_secs_f64() >= ctx.options.time_limit_s {
                ctx.trigger_halt(&mut guard, Halt::Time);
            } else if ctx.options.node_limit.is_some_and(|cap| guard.nodes >= cap) {
                ctx.trigger_halt(&mut guard, Halt::Nodes);
            } else if guard.incumbent.is_some()
                && relative_gap(guard.best, guard.global_bound().min(guard.best))
                    <= ctx.options.gap_tol
            {
                ctx.trigger_halt(&mut guard, Halt::Gap);
            }
        }
        if guard.halt.is_some() {
            break;
        }
    }
    guard
}

/// Solves `instance` to proven optimality (or a limit) and reports the
/// incumbent, bound, gap, and search statistics.
pub fn solve(instance: &Instance, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let diagnostics = validate_instance(instance);
    if !diagnostics.is_valid() {
        return Err(SolveError::InvalidInstance(diagnostics.to_string()));
    }

    let arcs = build_arc_set(instance)?;
    let arcs = eliminate_infeasible_arcs(instance, &arcs);
    let big_m = compute_big_m(instance, &arcs);
    let mut model = match build_milp(instance, &arcs, &big_m) {
        Ok(model) => model,
        Err(reason) => {
            // Structurally infeasible before any LP is needed.
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: f64::INFINITY,
                bound: f64::INFINITY,
                solution: None,
                nodes_explored: 0,
                constraints: 0,
                cpu_seconds: started.elapsed().as_secs_f64(),
                gap: 0.0,
                log: format!("infeasible before search: {reason}\n"),
            });
        }
    };
    if options.enable_cuts {
        add_valid_inequalities(&mut model, instance);
    }
    let constraints = model.num_rows();

    let threads = options.threads.max(1);
    let mut heap = BinaryHeap::new();
    heap.push(Open(Work {
        overrides: Vec::new(),
        bound: f64::NEG_INFINITY,
        depth: 0,
        basis: None,
        seq: 0,
    }));
    let ctx = Ctx {
        model: &model,
        instance,
        options,
        started,
        shared: Mutex::new(Shared {
            heap,
            best: f64::INFINITY,
            incumbent: None,
            nodes: 0,
            next_seq: 1,
            busy: vec![None; threads],
            active: 0,
            halt: None,
            halt_bound: f64::INFINITY,
            last_log: 0,
            log: String::new(),
            error: None,
        }),
        idle: Condvar::new(),
    };

    std::thread::scope(|scope| {
        for id in 0..threads {
            let ctx = &ctx;
            scope.spawn(move || worker(id, ctx));
        }
    });

    {
        let mut guard = ctx.shared.lock().unwrap();
        ctx.push_log(&mut guard);
    }
    let mut shared = ctx.shared.into_inner().unwrap();
    if let Some(message) = shared.error.take() {
        return Err(SolveError::Internal(message));
    }

    let objective = shared.best;
    let (status, bound) = match shared.halt {
        None => {
            // Tree exhausted: the incumbent (if any) is optimal.
            if shared.incumbent.is_some() {
                (SolveStatus::Optimal, objective)
            } else {
                (SolveStatus::Infeasible, f64::INFINITY)
            }
        }
        Some(Halt::Gap) => (SolveStatus::Optimal, shared.halt_bound),
        Some(Halt::Time) | Some(Halt::Nodes) => {
            if shared.incumbent.is_some() {
                (SolveStatus::TimeLimitFeasible, shared.halt_bound)
            } else {
                (SolveStatus::TimeLimitNoSolution, shared.halt_bound)
            }
        }
        Some(Halt::Error) => unreachable!("handled above"),
    };
    let gap = match status {
        SolveStatus::Optimal if shared.halt.is_none() => 0.0,
        SolveStatus::Infeasible => 0.0,
        _ => relative_gap(objective, bound),
    };

    Ok(SolveResult {
        status,
        objective,
        bound,
        solution: shared.incumbent,
        nodes_explored: shared.nodes,
        constraints,
        cpu_seconds: started.elapsed().as_secs_f64(),
        gap,
        log: shared.log,
    })
}
