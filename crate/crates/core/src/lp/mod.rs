//! Bounded-variable linear programming by the revised simplex method.
//!
//! The engine is built for use inside a branch-and-bound search: problems
//! keep their structure while variable bounds change from node to node, so
//! [`solve_lp`] accepts per-call bound overrides plus an optional starting
//! basis and resumes from it. The basis inverse is maintained as a dense LU
//! factorization with product-form updates and periodic refactorization.
//!
//! Determinism: for identical inputs the pivot sequence, and therefore the
//! returned solution, iteration count, and basis, are identical. All
//! tie-breaks fall back to the lowest variable index.

mod lu;
mod simplex;

pub use simplex::solve_lp;

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// A linear program: minimize `c'x` subject to rows `a'x {<=,=,>=} rhs` and
/// variable bounds `lower <= x <= upper`.
///
/// Rows are stored internally as `a'x + s = rhs` with one bounded slack per
/// row; slacks are addressed as variables `num_variables() + row`.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    /// Structural columns: (row, coefficient), ascending by row.
    cols: Vec<Vec<(u32, f64)>>,
    rhs: Vec<f64>,
    senses: Vec<Sense>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(&mut self, lower: f64, upper: f64, objective: f64) -> usize {
        debug_assert!(lower <= upper, "empty domain [{lower}, {upper}]");
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective);
        self.cols.push(Vec::new());
        self.cols.len() - 1
    }

    /// Adds a row and returns its index. Repeated columns are summed.
    pub fn add_row(&mut self, sense: Sense, rhs: f64, coeffs: &[(usize, f64)]) -> usize {
        let row = self.rhs.len() as u32;
        let mut sorted: Vec<(usize, f64)> = coeffs.to_vec();
        sorted.sort_by_key(|&(col, _)| col);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
        for (col, coef) in sorted {
            match merged.last_mut() {
                Some((last, acc)) if *last == col => *acc += coef,
                _ => merged.push((col, coef)),
            }
        }
        for (col, coef) in merged {
            assert!(col < self.cols.len(), "row references unknown variable {col}");
            if coef != 0.0 {
                self.cols[col].push((row, coef));
            }
        }
        self.rhs.push(rhs);
        self.senses.push(sense);
        row as usize
    }

    pub fn num_variables(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective_coefficient(&self, var: usize) -> f64 {
        self.objective[var]
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub(crate) fn column(&self, var: usize) -> &[(u32, f64)] {
        &self.cols[var]
    }

    pub(crate) fn rhs_vec(&self) -> &[f64] {
        &self.rhs
    }

    pub(crate) fn sense(&self, row: usize) -> Sense {
        self.senses[row]
    }

    pub(crate) fn objective_vec(&self) -> &[f64] {
        &self.objective
    }

    pub(crate) fn lower_vec(&self) -> &[f64] {
        &self.lower
    }

    pub(crate) fn upper_vec(&self) -> &[f64] {
        &self.upper
    }
}

/// Where a variable sits relative to the current basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic without a finite bound to rest on; held at zero.
    Free,
}

/// A simplex basis: one state per variable (structural variables first, then
/// one slack per row). Returned with every solution and accepted as a warm
/// start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub states: Vec<VarState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot limit was hit before reaching a conclusion; treat the
    /// solution as unusable.
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value of the structural variables; meaningful for
    /// `Optimal` only.
    pub objective: f64,
    /// Values of the structural variables.
    pub values: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

/// Per-call variable bound changes: `(variable, lower, upper)`.
pub type BoundOverride = (usize, f64, f64);
