//! The revised simplex iteration: composite phase 1 / phase 2 with bounded
//! variables, Dantzig pricing with a Bland fallback against cycling, and a
//! product-form eta file over the LU factors of the basis.

use super::lu::DenseLu;
use super::{Basis, BoundOverride, LpProblem, LpSolution, LpStatus, Sense, VarState};

/// Certified feasibility: residuals and bound violations up to this are
/// accepted in a reported optimum.
const FEAS_TOL: f64 = 1e-7;
/// Reduced costs within this of zero do not qualify a variable for entering.
const OPT_TOL: f64 = 1e-7;
/// Entries smaller than this never serve as pivots.
const PIVOT_TOL: f64 = 1e-10;
/// Bound violations above this put the iteration into phase 1. Kept equal
/// to `FEAS_TOL`: chasing violations below the certified tolerance makes the
/// iteration oscillate on numerical noise instead of terminating.
const PHASE_TOL: f64 = FEAS_TOL;
/// Ratio-test ties within this band are broken by pivot magnitude.
const RATIO_TIE: f64 = 1e-9;
/// Eta updates between refactorizations.
const UPDATE_LIMIT: usize = 100;
/// Non-improving pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 200;

/// One product-form update: the basis column at `pos` was replaced, with
/// `column` holding the pre-update representation `B^-1 a` of the entering
/// column (pivot entry stored separately).
struct Eta {
    pos: usize,
    pivot: f64,
    column: Vec<(u32, f64)>,
}

struct Entering {
    var: usize,
    /// +1.0 when the variable increases off its bound, -1.0 when it
    /// decreases.
    dir: f64,
    reduced_cost: f64,
}

struct Block {
    pos: usize,
    target: VarState,
    theta: f64,
    pivot_abs: f64,
}

struct Engine<'a> {
    p: &'a LpProblem,
    num_structural: usize,
    m: usize,
    total: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    lu: DenseLu,
    etas: Vec<Eta>,
    /// True while the factorization and basic values are freshly recomputed;
    /// terminal verdicts are only issued in that state.
    clean: bool,
    bland: bool,
    non_improving: usize,
    iterations: usize,
    iteration_limit: usize,
    // Scratch buffers.
    w: Vec<f64>,
    w_nonzeros: Vec<(u32, f64)>,
    y: Vec<f64>,
}

/// Solves `problem` with the given bound overrides, optionally warm-starting
/// from `warm` (a basis returned by an earlier call on the same problem
/// shape). Falls back to a cold start when the warm basis is unusable.
pub fn solve_lp(
    problem: &LpProblem,
    overrides: &[BoundOverride],
    warm: Option<&Basis>,
) -> LpSolution {
    Engine::new(problem, overrides, warm).run()
}

/// Visits the nonzero entries of column `var` (structural or slack).
fn for_column(p: &LpProblem, num_structural: usize, var: usize, mut f: impl FnMut(usize, f64)) {
    if var < num_structural {
        for &(row, coef) in p.column(var) {
            f(row as usize, coef);
        }
    } else {
        f(var - num_structural, 1.0);
    }
}

impl<'a> Engine<'a> {
    fn new(p: &'a LpProblem, overrides: &[BoundOverride], warm: Option<&Basis>) -> Self {
        let num_structural = p.num_variables();
        let m = p.num_rows();
        let total = num_structural + m;

        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        lower.extend_from_slice(p.lower_vec());
        upper.extend_from_slice(p.upper_vec());
        for row in 0..m {
            let (lo, hi) = match p.sense(row) {
                Sense::Eq => (0.0, 0.0),
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }
        for &(var, lo, hi) in overrides {
            assert!(var < num_structural, "override on unknown variable {var}");
            debug_assert!(lo <= hi, "override gives variable {var} the empty domain [{lo}, {hi}]");
            lower[var] = lo;
            upper[var] = hi;
        }

        let mut engine = Engine {
            p,
            num_structural,
            m,
            total,
            lower,
            upper,
            state: Vec::new(),
            basis: Vec::new(),
            x: vec![0.0; total],
            lu: DenseLu::factor(Vec::new(), 0, PIVOT_TOL).expect("empty factorization"),
            etas: Vec::new(),
            clean: false,
            bland: false,
            non_improving: 0,
            iterations: 0,
            iteration_limit: 20_000 + 50 * total,
            w: vec![0.0; m],
            w_nonzeros: Vec::new(),
            y: vec![0.0; m],
        };

        let warm_states = warm
            .map(|b| b.states.as_slice())
            .filter(|s| s.len() == total && s.iter().filter(|&&st| st == VarState::Basic).count() == m);
        match warm_states {
            Some(states) => {
                for (var, &st) in states.iter().enumerate() {
                    engine.state.push(engine.snapped(var, st));
                }
            }
            None => engine.set_slack_basis(),
        }
        engine.sync_from_states();
        if !engine.refactor() {
            // A degenerate warm basis; the all-slack basis always factors.
            engine.set_slack_basis();
            engine.sync_from_states();
            let ok = engine.refactor();
            debug_assert!(ok, "identity basis must factor");
        }
        engine
    }

    /// Maps a requested nonbasic state onto one this problem's bounds can
    /// actually hold (bounds may have changed since the basis was saved).
    fn snapped(&self, var: usize, requested: VarState) -> VarState {
        let lo = self.lower[var];
        let hi = self.upper[var];
        match requested {
            VarState::Basic => VarState::Basic,
            VarState::AtLower if lo.is_finite() => VarState::AtLower,
            VarState::AtUpper if hi.is_finite() => VarState::AtUpper,
            _ => {
                if lo.is_finite() {
                    VarState::AtLower
                } else if hi.is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::Free
                }
            }
        }
    }

    fn set_slack_basis(&mut self) {
        self.state.clear();
        for var in 0..self.num_structural {
            self.state.push(self.snapped(var, VarState::AtLower));
        }
        self.state.extend(std::iter::repeat(VarState::Basic).take(self.m));
    }

    /// Rebuilds the basis list and nonbasic values from `state`.
    fn sync_from_states(&mut self) {
        self.basis.clear();
        for var in 0..self.total {
            match self.state[var] {
                VarState::Basic => self.basis.push(var),
                VarState::AtLower => self.x[var] = self.lower[var],
                VarState::AtUpper => self.x[var] = self.upper[var],
                VarState::Free => self.x[var] = 0.0,
            }
        }
        debug_assert_eq!(self.basis.len(), self.m);
    }

    /// Factors the current basis and recomputes basic values from scratch.
    /// Returns false when the basis is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (pos, &var) in self.basis.iter().enumerate() {
            for_column(self.p, self.num_structural, var, |row, coef| {
                a[row * m + pos] = coef;
            });
        }
        match DenseLu::factor(a, m, PIVOT_TOL) {
            Ok(lu) => {
                self.lu = lu;
                self.etas.clear();
                self.recompute_basics();
                self.clean = true;
                true
            }
            Err(_) => false,
        }
    }

    fn recompute_basics(&mut self) {
        let mut b: Vec<f64> = self.p.rhs_vec().to_vec();
        for var in 0..self.total {
            if self.state[var] != VarState::Basic && self.x[var] != 0.0 {
                let value = self.x[var];
                for_column(self.p, self.num_structural, var, |row, coef| {
                    b[row] -= coef * value;
                });
            }
        }
        let mut solved = b.clone();
        self.lu.solve(&mut solved);
        for (pos, &var) in self.basis.iter().enumerate() {
            self.x[var] = solved[pos];
        }
        // One step of iterative refinement: wide coefficient ranges (unit
        // entries next to big-M terms) otherwise leave residuals large
        // enough to fail downstream feasibility checks.
        let mut residual = b;
        for &var in &self.basis {
            let value = self.x[var];
            if value != 0.0 {
                for_column(self.p, self.num_structural, var, |row, coef| {
                    residual[row] -= coef * value;
                });
            }
        }
        self.lu.solve(&mut residual);
        for (pos, &var) in self.basis.iter().enumerate() {
            self.x[var] += residual[pos];
        }
    }

    /// Largest bound violation among basic variables.
    fn max_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &var in &self.basis {
            let v = self.x[var];
            worst = worst.max(self.lower[var] - v).max(v - self.upper[var]);
        }
        worst
    }

    /// `w = B^-1 a_var`, stored in `self.w` with nonzeros listed in
    /// `self.w_nonzeros`.
    fn ftran(&mut self, var: usize) {
        self.w.fill(0.0);
        let w = &mut self.w;
        for_column(self.p, self.num_structural, var, |row, coef| {
            w[row] = coef;
        });
        self.lu.solve(w);
        for eta in &self.etas {
            let t = w[eta.pos] / eta.pivot;
            if t != 0.0 {
                for &(i, wi) in &eta.column {
                    w[i as usize] -= wi * t;
                }
            }
            w[eta.pos] = t;
        }
        self.w_nonzeros.clear();
        for (i, &wi) in self.w.iter().enumerate() {
            if wi.abs() > 1e-12 {
                self.w_nonzeros.push((i as u32, wi));
            }
        }
    }

    /// `y = B^-T d` where `d` is already loaded into `self.y` by basis
    /// position.
    fn btran(&mut self) {
        let y = &mut self.y;
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.pos];
            for &(i, wi) in &eta.column {
                s -= wi * y[i as usize];
            }
            y[eta.pos] = s / eta.pivot;
        }
        self.lu.solve_transposed(y);
    }

    /// Picks the entering variable for the given phase, or None when the
    /// phase objective cannot be improved.
    fn price(&mut self, phase1: bool) -> Option<Entering> {
        self.y.fill(0.0);
        for (pos, &var) in self.basis.iter().enumerate() {
            self.y[pos] = if phase1 {
                if self.x[var] < self.lower[var] - PHASE_TOL {
                    -1.0
                } else if self.x[var] > self.upper[var] + PHASE_TOL {
                    1.0
                } else {
                    0.0
                }
            } else if var < self.num_structural {
                self.p.objective_vec()[var]
            } else {
                0.0
            };
        }
        self.btran();

        let mut best: Option<Entering> = None;
        let mut best_score = OPT_TOL;
        for var in 0..self.total {
            if self.state[var] == VarState::Basic || self.lower[var] == self.upper[var] {
                continue;
            }
            let cost = if !phase1 && var < self.num_structural {
                self.p.objective_vec()[var]
            } else {
                0.0
            };
            let mut rc = cost;
            let y = &self.y;
            for_column(self.p, self.num_structural, var, |row, coef| {
                rc -= coef * y[row];
            });
            let candidate = match self.state[var] {
                VarState::AtLower if rc < -OPT_TOL => Some((-rc, 1.0)),
                VarState::AtUpper if rc > OPT_TOL => Some((rc, -1.0)),
                VarState::Free if rc.abs() > OPT_TOL => Some((rc.abs(), -rc.signum())),
                _ => None,
            };
            if let Some((score, dir)) = candidate {
                if self.bland {
                    return Some(Entering { var, dir, reduced_cost: rc });
                }
                if score > best_score {
                    best_score = score;
                    best = Some(Entering { var, dir, reduced_cost: rc });
                }
            }
        }
        best
    }

    /// Finds the basic variable that blocks the entering step first.
    ///
    /// In phase 1, variables currently violating a bound are stopped when
    /// they reach it; feasible variables are kept feasible. Ties within
    /// `RATIO_TIE` prefer the largest pivot (or the lowest variable index
    /// under Bland's rule).
    fn ratio_test(&self, dir: f64, phase1: bool) -> Option<Block> {
        let mut best: Option<Block> = None;
        for (pos, &var) in self.basis.iter().enumerate() {
            let w_pos = self.w[pos];
            if w_pos.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -w_pos * dir;
            let v = self.x[var];
            let lo = self.lower[var];
            let hi = self.upper[var];
            let below = phase1 && v < lo - PHASE_TOL;
            let above = phase1 && v > hi + PHASE_TOL;
            let (limit, target) = if below {
                if rate > 0.0 {
                    (lo, VarState::AtLower)
                } else {
                    continue; // moving further below; phase-1 costs handle it
                }
            } else if above {
                if rate < 0.0 {
                    (hi, VarState::AtUpper)
                } else {
                    continue;
                }
            } else if rate > 0.0 {
                if hi.is_finite() {
                    (hi, VarState::AtUpper)
                } else {
                    continue;
                }
            } else if lo.is_finite() {
                (lo, VarState::AtLower)
            } else {
                continue;
            };
            let theta = ((limit - v) / rate).max(0.0);
            let candidate = Block { pos, target, theta, pivot_abs: w_pos.abs() };
            match &best {
                None => best = Some(candidate),
                Some(current) => {
                    let take = if candidate.theta < current.theta - RATIO_TIE {
                        true
                    } else if candidate.theta <= current.theta + RATIO_TIE {
                        if self.bland {
                            var < self.basis[current.pos]
                        } else {
                            candidate.pivot_abs > current.pivot_abs
                        }
                    } else {
                        false
                    };
                    if take {
                        best = Some(candidate);
                    }
                }
            }
        }
        best
    }

    fn run(&mut self) -> LpSolution {
        loop {
            if self.iterations >= self.iteration_limit {
                return self.finish(LpStatus::IterationLimit);
            }
            if self.etas.len() >= UPDATE_LIMIT {
                self.refactor_or_reset();
            }

            let infeasibility = self.max_violation();
            let phase1 = infeasibility > PHASE_TOL;
            let entering = if phase1 {
                match self.price(true) {
                    Some(e) => Some((true, e)),
                    None => {
                        // Phase-1 optimal. Certify before concluding.
                        if !self.clean {
                            self.refactor_or_reset();
                            continue;
                        }
                        if self.max_violation() > FEAS_TOL {
                            return self.finish(LpStatus::Infeasible);
                        }
                        self.price(false).map(|e| (false, e))
                    }
                }
            } else {
                self.price(false).map(|e| (false, e))
            };
            let Some((in_phase1, entering)) = entering else {
                if !self.clean {
                    self.refactor_or_reset();
                    continue;
                }
                return self.finish(LpStatus::Optimal);
            };

            self.ftran(entering.var);
            let range = self.upper[entering.var] - self.lower[entering.var];
            let block = self.ratio_test(entering.dir, in_phase1);
            let theta = match &block {
                Some(b) => b.theta.min(range),
                None => range,
            };
            if !theta.is_finite() {
                if !self.clean {
                    self.refactor_or_reset();
                    continue;
                }
                return self.finish(if in_phase1 {
                    // A strictly improving unblocked phase-1 ray cannot
                    // exist; bail out rather than loop.
                    LpStatus::IterationLimit
                } else {
                    LpStatus::Unbounded
                });
            }

            // Unstable pivot: refactorize first and re-derive the step.
            if let Some(b) = &block {
                if b.theta < range - RATIO_TIE && b.pivot_abs < 1e-7 && !self.etas.is_empty() {
                    self.refactor_or_reset();
                    continue;
                }
            }

            // Move the basics along the step direction.
            for &(i, wi) in &self.w_nonzeros {
                let var = self.basis[i as usize];
                self.x[var] += -wi * entering.dir * theta;
            }
            match block {
                Some(b) if b.theta < range - RATIO_TIE => {
                    // Basis change.
                    let leaving = self.basis[b.pos];
                    self.x[leaving] = match b.target {
                        VarState::AtLower => self.lower[leaving],
                        _ => self.upper[leaving],
                    };
                    self.state[leaving] = b.target;
                    self.x[entering.var] = match self.state[entering.var] {
                        VarState::AtLower => self.lower[entering.var],
                        VarState::AtUpper => self.upper[entering.var],
                        _ => 0.0,
                    } + entering.dir * theta;
                    self.state[entering.var] = VarState::Basic;
                    let pivot = self.w[b.pos];
                    let column: Vec<(u32, f64)> = self
                        .w_nonzeros
                        .iter()
                        .copied()
                        .filter(|&(i, _)| i as usize != b.pos)
                        .collect();
                    self.etas.push(Eta { pos: b.pos, pivot, column });
                    self.basis[b.pos] = entering.var;
                }
                _ => {
                    // Bound flip: the entering variable crosses to its other
                    // bound without a basis change.
                    self.state[entering.var] = match self.state[entering.var] {
                        VarState::AtLower => VarState::AtUpper,
                        _ => VarState::AtLower,
                    };
                    self.x[entering.var] = match self.state[entering.var] {
                        VarState::AtUpper => self.upper[entering.var],
                        _ => self.lower[entering.var],
                    };
                }
            }
            self.clean = false;
            self.iterations += 1;

            // Once Bland's rule is engaged it stays engaged: flipping back to
            // Dantzig pricing after a single improving step lets the same
            // degenerate cycle restart and waste another stall's worth of
            // pivots.
            let improvement = -(entering.reduced_cost * entering.dir * theta);
            if improvement > 1e-12 && theta > RATIO_TIE {
                self.non_improving = 0;
            } else {
                self.non_improving += 1;
                if self.non_improving >= STALL_LIMIT {
                    self.bland = true;
                }
            }
        }
    }

    fn refactor_or_reset(&mut self) {
        if !self.refactor() {
            self.set_slack_basis();
            self.sync_from_states();
            let ok = self.refactor();
            debug_assert!(ok, "identity basis must factor");
        }
    }

    fn finish(&mut self, status: LpStatus) -> LpSolution {
        let mut values = Vec::with_capacity(self.num_structural);
        for var in 0..self.num_structural {
            let mut v = self.x[var];
            // Present values inside their (tolerance-satisfied) bounds.
            if v < self.lower[var] && v > self.lower[var] - FEAS_TOL {
                v = self.lower[var];
            }
            if v > self.upper[var] && v < self.upper[var] + FEAS_TOL {
                v = self.upper[var];
            }
            values.push(v);
        }
        let objective = match status {
            LpStatus::Infeasible => f64::INFINITY,
            _ => values
                .iter()
                .zip(self.p.objective_vec())
                .map(|(x, c)| x * c)
                .sum(),
        };
        LpSolution {
            status,
            objective,
            values,
            basis: Basis { states: self.state.clone() },
            iterations: self.iterations,
        }
    }
}
