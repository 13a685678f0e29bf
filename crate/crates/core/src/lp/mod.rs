//! Bounded-variable linear programs and a revised simplex solver.
//!
//! Problems are always minimizations. Each constraint is a sparse row
//! `a·x (≤ | = | ≥) b`; variables carry a `[lower, upper]` box where the
//! upper bound may be infinite.

mod lu;
mod simplex;

use std::fmt;

use thiserror::Error;

pub use simplex::{solve_lp, solve_lp_from};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constraint {row} references variable {var} but the program has {num_vars} variables")]
    VariableOutOfRange { row: usize, var: usize, num_vars: usize },
    #[error("constraint {row} references variable {var} twice")]
    DuplicateTerm { row: usize, var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// One row `Σ coeff·x[var] (sense) rhs`. Variables not listed have coefficient zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { terms, sense, rhs }
    }

    /// Builds a row from a dense coefficient sequence, dropping zeros.
    pub fn from_dense(coeffs: &[f64], sense: Sense, rhs: f64) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| (j, a))
            .collect();
        Self { terms, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A minimization problem over `num_vars` bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable `(lower, upper)`; `upper` may be `f64::INFINITY`.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program with zero objective, no rows and every variable in `[0, ∞)`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn with_objective(objective: Vec<f64>) -> Self {
        let mut lp = Self::new(objective.len());
        lp.objective = objective;
        lp
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint::new(terms, sense, rhs));
    }

    pub fn add_dense_constraint(&mut self, coeffs: &[f64], sense: Sense, rhs: f64) {
        self.constraints
            .push(Constraint::from_dense(coeffs, sense, rhs));
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    /// Dense coefficient sequence of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars];
        for &(j, a) in &self.constraints[i].terms {
            row[j] = a;
        }
        row
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::DimensionMismatch {
                expected: self.num_vars,
                got: self.objective.len(),
            });
        }
        if self.bounds.len() != self.num_vars {
            return Err(LpError::DimensionMismatch {
                expected: self.num_vars,
                got: self.bounds.len(),
            });
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("objective coefficient {j}")));
        }
        for (j, &(lower, upper)) in self.bounds.iter().enumerate() {
            if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
            if lower > upper {
                return Err(LpError::InvalidBounds { var: j, lower, upper });
            }
        }
        let mut seen = vec![usize::MAX; self.num_vars];
        for (row, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("right-hand side of constraint {row}")));
            }
            for &(var, a) in &c.terms {
                if var >= self.num_vars {
                    return Err(LpError::VariableOutOfRange {
                        row,
                        var,
                        num_vars: self.num_vars,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!(
                        "coefficient of variable {var} in constraint {row}"
                    )));
                }
                if seen[var] == row {
                    return Err(LpError::DuplicateTerm { row, var });
                }
                seen[var] = row;
            }
        }
        Ok(())
    }
}

/// Solver tolerances. Feasibility and optimality tolerances apply to the
/// internally row-scaled problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSettings {
    pub feasibility: f64,
    pub optimality: f64,
    /// Used by [`check_solution`] when validating solver output.
    pub check: f64,
    /// Smallest admissible pivot magnitude in the ratio test.
    pub pivot: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    /// Iteration cap is `iteration_factor · (num_vars + num_constraints)`.
    pub iteration_factor: usize,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            optimality: 1e-9,
            check: 1e-7,
            pivot: 1e-9,
            degenerate_limit: 50,
            iteration_factor: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The iteration cap was exceeded. Always a solver defect for the
    /// problems in this crate.
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub x: Option<Vec<f64>>,
    /// `objective · x` when optimal, `+∞` when infeasible, `-∞` when
    /// unbounded and NaN when the iteration cap was hit.
    pub objective_value: f64,
    pub iteration_count: usize,
    /// Wall-clock seconds spent in the solver.
    pub solve_time: f64,
    /// Final basis, present iff `status == Optimal`. Can seed a later solve
    /// of a related program through [`solve_lp_from`].
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Role of a variable or row in a simplex basis. For rows the status refers
/// to the row activity: `Basic` means the row is not pinned to a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Starting basis for [`solve_lp_from`]. Entries may be inconsistent (too
/// many or too few basics, singular columns); the solver repairs them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub columns: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

impl Basis {
    /// All variables at their lower bounds, all rows basic.
    pub fn slack(lp: &LinearProgram) -> Self {
        Self {
            columns: vec![BasisStatus::AtLower; lp.num_vars],
            rows: vec![BasisStatus::Basic; lp.num_constraints()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    Constraint(usize),
    LowerBound(usize),
    UpperBound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Absolute amount by which the row or bound is violated.
    pub magnitude: f64,
}

/// Lists every constraint and bound that `x` violates by more than
/// `tol · max(1, |rhs|)` (respectively `|bound|`). An empty report means `x`
/// is feasible.
pub fn check_solution(lp: &LinearProgram, x: &[f64], tol: f64) -> Result<Vec<Violation>, LpError> {
    if x.len() != lp.num_vars {
        return Err(LpError::DimensionMismatch {
            expected: lp.num_vars,
            got: x.len(),
        });
    }
    let mut report = Vec::new();
    for (j, (&v, &(lower, upper))) in x.iter().zip(&lp.bounds).enumerate() {
        if lower.is_finite() && lower - v > tol * lower.abs().max(1.0) {
            report.push(Violation {
                kind: ViolationKind::LowerBound(j),
                magnitude: lower - v,
            });
        }
        if upper.is_finite() && v - upper > tol * upper.abs().max(1.0) {
            report.push(Violation {
                kind: ViolationKind::UpperBound(j),
                magnitude: v - upper,
            });
        }
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let act = c.activity(x);
        let excess = match c.sense {
            Sense::Le => act - c.rhs,
            Sense::Ge => c.rhs - act,
            Sense::Eq => (act - c.rhs).abs(),
        };
        if excess > tol * c.rhs.abs().max(1.0) {
            report.push(Violation {
                kind: ViolationKind::Constraint(i),
                magnitude: excess,
            });
        }
    }
    Ok(report)
}
