//! Satisfiability of [`Cnf`] instances.
//!
//! [`Solver`] is a conflict-driven clause-learning solver. Every satisfying
//! assignment it produces is checked against the input formula before it is
//! returned, so a `Sat` result is always a genuine model.

mod cnf;
mod solver;

use alloc::vec::Vec;

pub use cnf::Cnf;
pub use solver::{Solver, SolverStats};

/// Total assignment to variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Self { values }
    }

    /// All variables false.
    pub fn all_false(num_vars: u32) -> Self {
        Self {
            values: alloc::vec![false; num_vars as usize],
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.values.len() as u32
    }

    /// Value of variable `v` (1-based).
    pub fn var(&self, v: u32) -> bool {
        self.values[v as usize - 1]
    }

    pub fn set(&mut self, v: u32, value: bool) {
        self.values[v as usize - 1] = value;
    }

    /// Truth of a DIMACS literal.
    pub fn lit(&self, l: i32) -> bool {
        self.var(l.unsigned_abs()) == (l > 0)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

/// The search hit a conflict limit or was interrupted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("solver budget exhausted after {conflicts} conflicts")]
pub struct BudgetExhausted {
    pub conflicts: u64,
}

/// Resource limits for one solver call.
#[derive(Clone, Copy, Default)]
pub struct Budget<'a> {
    pub max_conflicts: Option<u64>,
    /// Polled periodically; returning `true` stops the search.
    pub interrupt: Option<&'a dyn Fn() -> bool>,
}

impl core::fmt::Debug for Budget<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Budget")
            .field("max_conflicts", &self.max_conflicts)
            .field("interrupt", &self.interrupt.is_some())
            .finish()
    }
}

impl Budget<'_> {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn conflicts(n: u64) -> Self {
        Self {
            max_conflicts: Some(n),
            interrupt: None,
        }
    }
}

/// `true` iff every clause has a true literal. Assignments shorter than the
/// formula's variable count make the result false.
pub fn evaluate(f: &Cnf, a: &Assignment) -> bool {
    if a.num_vars() < f.num_vars() {
        return false;
    }
    f.clauses().all(|c| c.iter().any(|&l| a.lit(l)))
}

/// Solve `f` with a fresh embedded solver.
pub fn solve(f: &Cnf, budget: Budget<'_>, seed: u64) -> Result<SolveResult, BudgetExhausted> {
    Solver::new(f, seed).solve(budget)
}
