//! Progressive integer programming: repeatedly solve restricted MILPs whose
//! binaries are limited to atoms with φ near zero at the current iterate.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{build_restricted_mip, extract_solution, EncodeError};
use crate::hscop::{evaluate, phi_values, HscopError, HscopProblem, IndexSets, Point};
use crate::milp::{solve_milp, MilpError, SolveStatus, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] HscopError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error("no feasible start: some rows cannot absorb a residual; supply a feasible point")]
    NeedsStart,
    #[error("supplied start point is infeasible")]
    InfeasibleStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub expand_factor: f64,
    /// Largest fraction of atoms allowed to carry a binary in one subproblem.
    pub cap_fraction: f64,
    pub improvement_tol: f64,
    pub max_stale: usize,
    pub subproblem_time_limit: Option<Duration>,
    pub total_time_limit: Option<Duration>,
    pub max_iterations: usize,
    pub tolerances: Tolerances,
}

impl Default for PipConfig {
    fn default() -> Self {
        Self {
            eps1: 0.5,
            eps2: 0.5,
            expand_factor: 2.0,
            cap_fraction: 1.0,
            improvement_tol: 1e-6,
            max_stale: 10,
            subproblem_time_limit: Some(Duration::from_secs(300)),
            total_time_limit: None,
            max_iterations: 1000,
            tolerances: Tolerances::default(),
        }
    }
}

impl PipConfig {
    pub fn validate(&self) -> Result<(), PipError> {
        let bad = |m: &str| Err(PipError::Config(m.to_string()));
        if !(self.eps1 > 0.0 && self.eps2 > 0.0 && self.eps1.is_finite() && self.eps2.is_finite()) {
            return bad("initial epsilons must be positive and finite");
        }
        if !(self.expand_factor > 1.0 && self.expand_factor.is_finite()) {
            return bad("expand factor must exceed 1");
        }
        if !(self.cap_fraction > 0.0 && self.cap_fraction <= 1.0) {
            return bad("cap fraction must lie in (0, 1]");
        }
        if !(self.improvement_tol > 0.0) {
            return bad("improvement tolerance must be positive");
        }
        if self.max_stale == 0 || self.max_iterations == 0 {
            return bad("stale and iteration limits must be positive");
        }
        Ok(())
    }

    /// Binary budget for a problem with `atoms` atoms.
    pub fn cap(&self, atoms: usize) -> usize {
        if atoms == 0 {
            0
        } else {
            ((self.cap_fraction * atoms as f64).floor() as usize).max(1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub lt: usize,
    pub inb: usize,
    pub gt: usize,
    pub binaries: usize,
    pub cap_violation: bool,
    pub status: SolveStatus,
    pub subproblem_objective: f64,
    pub mu: f64,
    pub improved: bool,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsChoice {
    pub eps1: f64,
    pub eps2: f64,
    pub sets: IndexSets,
    /// Exact-zero atoms alone exceed the cap.
    pub cap_violation: bool,
}

/// The restricted subproblem that produced the final stale step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalSubproblem {
    pub reference: Point,
    pub eps1: f64,
    pub eps2: f64,
    pub sets: IndexSets,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipState {
    pub iteration: usize,
    pub point: Point,
    pub mu: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub stale: usize,
    pub history: Vec<IterationRecord>,
    pub saw_time_limit: bool,
    pub total_binaries: usize,
    pub last_subproblem: Option<TerminalSubproblem>,
}

impl PipState {
    pub fn new(problem: &HscopProblem, point: Point, config: &PipConfig) -> Result<Self, PipError> {
        let ev = evaluate(problem, &point)?;
        if !ev.feasible {
            return Err(PipError::InfeasibleStart);
        }
        Ok(Self {
            iteration: 0,
            point,
            mu: ev.objective,
            eps1: config.eps1,
            eps2: config.eps2,
            stale: 0,
            history: Vec::new(),
            saw_time_limit: false,
            total_binaries: 0,
            last_subproblem: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipResult {
    pub point: Point,
    pub mu: f64,
    pub initial_mu: f64,
    pub certificate: bool,
    pub iterations: usize,
    pub total_binaries: usize,
    pub history: Vec<IterationRecord>,
    pub terminal: Option<TerminalSubproblem>,
    /// Set when a subproblem failure ended the run early.
    pub aborted: Option<String>,
}

/// Starting point: the box point closest to the origin, with γ just large
/// enough for every residual row.
pub fn initial_point(problem: &HscopProblem, start: Option<&Point>) -> Result<Point, PipError> {
    if let Some(p) = start {
        return if evaluate(problem, p)?.feasible {
            Ok(p.clone())
        } else {
            Err(PipError::InfeasibleStart)
        };
    }
    let x = problem.domain.origin_projection();
    let ev = evaluate(problem, &Point::new(x.clone(), 0.0))?;
    let gamma = problem
        .rows
        .iter()
        .zip(&ev.row_values)
        .filter(|(r, _)| r.residual_allowed)
        .map(|(r, v)| (r.rhs - v).max(0.0))
        .fold(0.0, f64::max);
    let point = Point::new(x, gamma);
    if evaluate(problem, &point)?.feasible {
        Ok(point)
    } else {
        Err(PipError::NeedsStart)
    }
}

/// Shrinks `(eps1, eps2)` by a common factor until at most `cap` atoms lie
/// in between. An atom with value `φ` enters once the factor reaches
/// `φ/eps1` (φ ≥ 0) or `|φ|/eps2` (φ < 0); atoms are admitted in that order
/// with ties broken by atom id, and the returned epsilons sit halfway
/// between the last admitted and first excluded breakpoints. Tied atoms
/// past the cap are moved to `lt`/`gt` by sign, which keeps the restriction
/// valid. Exact zeros are always admitted.
pub fn choose_epsilons(phis: &[f64], eps1: f64, eps2: f64, cap: usize) -> EpsChoice {
    let requested = IndexSets::from_values(phis, eps1, eps2);
    if requested.inb.len() <= cap {
        return EpsChoice {
            eps1,
            eps2,
            sets: requested,
            cap_violation: false,
        };
    }
    let breakpoint = |v: f64| -> f64 {
        if v == 0.0 {
            0.0
        } else if v > 0.0 {
            if eps1 > 0.0 { v / eps1 } else { f64::INFINITY }
        } else if eps2 > 0.0 {
            -v / eps2
        } else {
            f64::INFINITY
        }
    };
    let mut order: Vec<(f64, usize)> = requested.inb.iter().map(|&k| (breakpoint(phis[k]), k)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let zeros = order.iter().take_while(|(s, _)| *s == 0.0).count();
    let admit = cap.max(zeros);
    let cap_violation = zeros > cap;
    if cap_violation {
        log::warn!("{zeros} atoms sit exactly at zero, above the binary cap {cap}");
    }
    let last_in = if admit == 0 { 0.0 } else { order[admit - 1].0 };
    let first_out = order.get(admit).map_or(f64::INFINITY, |o| o.0);
    let scale = if admit == zeros {
        0.0
    } else if first_out > last_in && first_out.is_finite() {
        0.5 * (last_in + first_out)
    } else {
        last_in
    };
    let mut inb_flags = vec![false; phis.len()];
    for &(_, k) in &order[..admit] {
        inb_flags[k] = true;
    }
    let mut sets = IndexSets::default();
    for (k, &v) in phis.iter().enumerate() {
        if inb_flags[k] {
            sets.inb.push(k);
        } else if requested.inb.binary_search(&k).is_ok() {
            if v < 0.0 {
                sets.lt.push(k);
            } else {
                sets.gt.push(k);
            }
        } else if v < -eps2 {
            sets.lt.push(k);
        } else {
            sets.gt.push(k);
        }
    }
    EpsChoice {
        eps1: eps1 * scale.min(1.0),
        eps2: eps2 * scale.min(1.0),
        sets,
        cap_violation,
    }
}

/// One PIP iteration.
pub fn pip_step(problem: &HscopProblem, state: &mut PipState, config: &PipConfig) -> Result<(), PipError> {
    let started = Instant::now();
    let phis = phi_values(problem, &state.point.x)?;
    let choice = choose_epsilons(&phis, state.eps1, state.eps2, config.cap(problem.num_atoms()));
    let (mut model, map) = build_restricted_mip(problem, &state.point, &choice.sets)?;
    model.time_limit = config.subproblem_time_limit;
    let binaries = model.num_binaries();
    let solution = solve_milp(&model, &config.tolerances)?;
    if solution.status == SolveStatus::FeasibleTimeLimit {
        state.saw_time_limit = true;
    }
    let candidate = match solution.status {
        SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit => {
            let ex = extract_solution(&solution, &map)?;
            let ev = evaluate(problem, &ex.point)?;
            if ev.feasible {
                Some((ex.point, ev.objective))
            } else {
                log::warn!("subproblem point failed the feasibility re-check");
                None
            }
        }
        // The reference point is always feasible for its own restriction.
        other => {
            return Err(PipError::Solver(MilpError::NumericalFailure(format!(
                "restricted subproblem reported {other:?} despite a feasible reference"
            ))))
        }
    };
    let improved = matches!(&candidate, Some((_, mu)) if *mu > state.mu + config.improvement_tol);
    let reference = state.point.clone();
    match candidate {
        Some((point, mu)) if improved => {
            state.point = point;
            state.mu = mu;
            state.eps1 = choice.eps1 / config.expand_factor;
            state.eps2 = choice.eps2 / config.expand_factor;
            state.stale = 0;
        }
        other => {
            if let Some((point, mu)) = other {
                if mu > state.mu {
                    state.point = point;
                    state.mu = mu;
                }
            }
            state.eps1 = choice.eps1.max(state.eps1) * config.expand_factor;
            state.eps2 = choice.eps2.max(state.eps2) * config.expand_factor;
            state.stale += 1;
        }
    }
    state.iteration += 1;
    state.total_binaries += binaries;
    let record = IterationRecord {
        iteration: state.iteration,
        eps1: choice.eps1,
        eps2: choice.eps2,
        lt: choice.sets.lt.len(),
        inb: choice.sets.inb.len(),
        gt: choice.sets.gt.len(),
        binaries,
        cap_violation: choice.cap_violation,
        status: solution.status,
        subproblem_objective: solution.objective,
        mu: state.mu,
        improved,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    log::info!(
        "pip {:>3}: eps=({:.3e},{:.3e}) |lt|={} |inb|={} |gt|={} mu={:.6} {:?}{}",
        record.iteration,
        record.eps1,
        record.eps2,
        record.lt,
        record.inb,
        record.gt,
        record.mu,
        record.status,
        if improved { " improved" } else { "" }
    );
    state.history.push(record);
    state.last_subproblem = Some(TerminalSubproblem {
        reference,
        eps1: choice.eps1,
        eps2: choice.eps2,
        sets: choice.sets,
    });
    Ok(())
}

pub fn run_pip(
    problem: &HscopProblem,
    config: &PipConfig,
    start: Option<&Point>,
) -> Result<PipResult, PipError> {
    config.validate()?;
    problem.validate()?;
    let x0 = initial_point(problem, start)?;
    let mut state = PipState::new(problem, x0, config)?;
    let initial_mu = state.mu;
    let began = Instant::now();
    let mut aborted = None;
    while state.stale < config.max_stale && state.iteration < config.max_iterations {
        let mut step = config.clone();
        if let Some(total) = config.total_time_limit {
            let Some(left) = total.checked_sub(began.elapsed()).filter(|d| !d.is_zero()) else {
                aborted = Some("total time limit reached".to_string());
                break;
            };
            // A subproblem never runs past the overall budget.
            step.subproblem_time_limit = Some(step.subproblem_time_limit.map_or(left, |s| s.min(left)));
        }
        if let Err(e) = pip_step(problem, &mut state, &step) {
            log::error!("pip aborted: {e}");
            aborted = Some(e.to_string());
            break;
        }
    }
    let last_ok = state
        .history
        .last()
        .is_some_and(|r| !r.improved && r.status == SolveStatus::Optimal);
    let certificate = aborted.is_none()
        && state.stale >= config.max_stale
        && last_ok
        && !state.saw_time_limit;
    Ok(PipResult {
        point: state.point,
        mu: state.mu,
        initial_mu,
        certificate,
        iterations: state.iteration,
        total_binaries: state.total_binaries,
        history: state.history,
        terminal: state.last_subproblem,
        aborted,
    })
}
