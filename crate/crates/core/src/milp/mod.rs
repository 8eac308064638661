//! A self-contained mixed-binary linear programming engine.
//!
//! Every variable carries finite bounds, which lets the LP layer run a
//! bounded dual simplex from any basis: nonbasic variables can always be
//! moved to the bound matching the sign of their reduced cost. Branch and
//! bound reuses one tableau across nodes and only changes binary bounds.

mod bnb;
mod dump;
mod enumerate;
mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::solve_milp;
pub use enumerate::{solve_enumeration, MAX_ENUMERATION_BINARIES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("limit reached before any feasible point was found (best bound {bound})")]
    NoIncumbent { bound: f64 },
    #[error("enumeration refuses {0} binaries (limit {MAX_ENUMERATION_BINARIES})")]
    TooManyBinaries(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient (the model is always a maximization).
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Mixed-binary linear program, maximized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective_offset: f64,
    /// Full assignment used to seed the incumbent when feasible.
    pub hint: Option<Vec<f64>>,
    pub time_limit: Option<Duration>,
    /// Maximum number of node LPs solved by branch and bound.
    pub node_limit: Option<u64>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
            objective: 0.0,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
            objective: 0.0,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn set_objective(&mut self, var: VarId, coef: f64) {
        self.vars[var.0].objective = coef;
    }

    pub fn add_objective(&mut self, var: VarId, coef: f64) {
        self.vars[var.0].objective += coef;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .vars
                .iter()
                .zip(values)
                .map(|(v, x)| v.objective * x)
                .sum::<f64>()
    }

    /// Copy with every binary relaxed to a continuous `[0, 1]` variable.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.kind = VarKind::Continuous;
        }
        m
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for (i, v) in self.vars.iter().enumerate() {
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(MilpError::InvalidModel(format!(
                    "variable {i} ({}) lacks finite bounds",
                    v.name
                )));
            }
            if v.lower > v.upper {
                return Err(MilpError::InvalidModel(format!(
                    "variable {i} ({}) has lower > upper",
                    v.name
                )));
            }
            if !v.objective.is_finite() {
                return Err(MilpError::InvalidModel(format!(
                    "variable {i} has a non-finite objective coefficient"
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(MilpError::InvalidModel(format!(
                    "binary variable {i} has bounds outside [0, 1]"
                )));
            }
        }
        if !self.objective_offset.is_finite() {
            return Err(MilpError::InvalidModel("non-finite objective offset".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(MilpError::InvalidModel(format!(
                    "constraint {i} has a non-finite rhs"
                )));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.vars.len() {
                    return Err(MilpError::InvalidModel(format!(
                        "constraint {i} references unknown variable {}",
                        v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(MilpError::InvalidModel(format!(
                        "constraint {i} has a non-finite coefficient"
                    )));
                }
            }
        }
        if let Some(h) = &self.hint {
            if h.len() != self.vars.len() {
                return Err(MilpError::InvalidModel(format!(
                    "hint has {} entries for {} variables",
                    h.len(),
                    self.vars.len()
                )));
            }
        }
        Ok(())
    }

    /// Largest bound, integrality or constraint violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &x) in self.vars.iter().zip(values) {
            if !x.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind == VarKind::Binary {
                worst = worst.max(x.min(1.0 - x).max(0.0));
            }
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        worst
    }

    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        values.len() == self.vars.len() && self.max_violation(values) <= tol
    }

    /// Plain-text dump in an LP-format-like grammar; see [`dump`].
    pub fn to_lp_string(&self) -> String {
        dump::write_lp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub integrality: f64,
    pub feasibility: f64,
    pub relative_gap: f64,
    pub absolute_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integrality: 1e-6,
            feasibility: 1e-7,
            relative_gap: 1e-6,
            absolute_gap: 1e-8,
        }
    }
}

impl Tolerances {
    /// Tight gaps, for oracle comparisons.
    pub fn exact() -> Self {
        Self {
            relative_gap: 1e-10,
            absolute_gap: 1e-10,
            ..Self::default()
        }
    }

    pub(crate) fn gap_allowance(&self, incumbent: f64) -> f64 {
        self.absolute_gap.max(self.relative_gap * incumbent.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// A time or node limit stopped the search; the incumbent is returned.
    FeasibleTimeLimit,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best upper bound on the optimum (maximization).
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
}

impl MilpSolution {
    pub(crate) fn infeasible(nodes: u64, lp_iterations: u64) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            bound: f64::NEG_INFINITY,
            gap: 0.0,
            nodes,
            lp_iterations,
        }
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn has_point(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit
        )
    }
}

pub(crate) fn relative_gap(bound: f64, objective: f64) -> f64 {
    ((bound - objective) / objective.abs().max(1.0)).max(0.0)
}

/// Solve the LP relaxation (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let mut lp = simplex::DualSimplex::new(model)?;
    match lp.solve()? {
        simplex::LpStatus::Infeasible => Ok(MilpSolution::infeasible(0, lp.iterations())),
        simplex::LpStatus::Optimal => {
            let values = lp.structural_values();
            let objective = model.objective_value(&values);
            Ok(MilpSolution {
                status: SolveStatus::Optimal,
                values,
                objective,
                bound: objective,
                gap: 0.0,
                nodes: 0,
                lp_iterations: lp.iterations(),
            })
        }
    }
}
