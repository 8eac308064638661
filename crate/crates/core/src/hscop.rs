//! Heaviside composite problems: model, evaluation and ε-index sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pwa::{heaviside_closed, BoxDomain, DcPwa, MinAffine, PiecewiseAffine, PwaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HscopError {
    #[error(transparent)]
    Pwa(#[from] PwaError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("atom ids must be dense: position {position} holds id {id}")]
    AtomIds { position: usize, id: usize },
    #[error("{context} references unknown atom {atom}")]
    UnknownAtom { context: String, atom: usize },
    #[error("{0} must be nonnegative and finite")]
    NegativeWeight(String),
    #[error("{0} is not finite")]
    NonFinite(String),
    #[error("residual rows need a positive residual penalty")]
    NonPositivePenalty,
    #[error("epsilon values must be nonnegative, got ({0}, {1})")]
    NegativeEpsilon(f64, f64),
    #[error("variable index {0} out of range")]
    VariableIndex(usize),
}

/// Heaviside argument: concave min-affine or a difference of max-affines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    Concave(MinAffine),
    Dc(DcPwa),
}

impl Phi {
    pub fn dim(&self) -> usize {
        match self {
            Phi::Concave(f) => f.dim(),
            Phi::Dc(f) => f.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Phi::Concave(f) => f.value(x),
            Phi::Dc(f) => f.value(x),
        }
    }

    pub fn lower_bound(&self, domain: &BoxDomain) -> f64 {
        match self {
            Phi::Concave(f) => f.lower_bound(domain),
            Phi::Dc(f) => f.lower_bound(domain),
        }
    }

    pub fn upper_bound(&self, domain: &BoxDomain) -> f64 {
        match self {
            Phi::Concave(f) => f.upper_bound(domain),
            Phi::Dc(f) => f.upper_bound(domain),
        }
    }

    fn validate(&self) -> Result<(), PwaError> {
        match self {
            Phi::Concave(f) => f.validate(),
            Phi::Dc(f) => f.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub phi: Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub atom: usize,
    pub weight: f64,
}

/// `weight · H(φ_u) · H(φ_v)` with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// `Σ ψ H(φ) + Σ w H(φ_u) H(φ_v) [+ γ] ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub name: String,
    pub linear: Vec<LinearTerm>,
    pub products: Vec<ProductTerm>,
    pub rhs: f64,
    pub residual_allowed: bool,
}

impl ConstraintRow {
    pub fn new(name: impl Into<String>, rhs: f64) -> Self {
        Self {
            name: name.into(),
            rhs,
            ..Self::default()
        }
    }

    pub fn with_residual(mut self) -> Self {
        self.residual_allowed = true;
        self
    }

    pub fn add_linear(&mut self, atom: usize, weight: f64) {
        self.linear.push(LinearTerm { atom, weight });
    }

    /// Adds a product term; `u == v` collapses to a linear term since
    /// `H² = H`.
    pub fn add_product(&mut self, u: usize, v: usize, weight: f64) {
        if u == v {
            self.add_linear(u, weight);
        } else {
            self.products.push(ProductTerm {
                u: u.min(v),
                v: u.max(v),
                weight,
            });
        }
    }

    pub fn value(&self, active: &[bool], gamma: f64) -> f64 {
        let mut s: f64 = self
            .linear
            .iter()
            .filter(|t| active[t.atom])
            .map(|t| t.weight)
            .sum();
        s += self
            .products
            .iter()
            .filter(|p| active[p.u] && active[p.v])
            .map(|p| p.weight)
            .sum::<f64>();
        if self.residual_allowed {
            s += gamma;
        }
        s
    }

    pub fn tolerance(&self) -> f64 {
        1e-9 * self.rhs.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Group {
    pub indices: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Objective {
    /// Cost vector `c` over `x` (empty means zero).
    pub linear: Vec<f64>,
    pub l1_groups: Vec<L1Group>,
    pub heaviside: Vec<LinearTerm>,
    pub residual_penalty: f64,
}

/// Extra polyhedral restriction `Σ a_i x_i ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInequality {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearInequality {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HscopProblem {
    pub n: usize,
    pub domain: BoxDomain,
    #[serde(default)]
    pub extra_inequalities: Vec<LinearInequality>,
    pub atoms: Vec<Atom>,
    pub objective: Objective,
    pub rows: Vec<ConstraintRow>,
    /// Atom groups known to have at most one nonnegative φ anywhere on the
    /// domain (e.g. the per-covariate policy scores).
    #[serde(default)]
    pub exclusive_groups: Vec<Vec<usize>>,
}

impl HscopProblem {
    pub fn new(domain: BoxDomain) -> Self {
        Self {
            n: domain.dim(),
            domain,
            extra_inequalities: Vec::new(),
            atoms: Vec::new(),
            objective: Objective::default(),
            rows: Vec::new(),
            exclusive_groups: Vec::new(),
        }
    }

    pub fn add_atom(&mut self, phi: Phi) -> usize {
        let id = self.atoms.len();
        self.atoms.push(Atom { id, phi });
        id
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn has_residual_rows(&self) -> bool {
        self.rows.iter().any(|r| r.residual_allowed)
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.objective.linear.get(i).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), HscopError> {
        self.domain.validate()?;
        if self.domain.dim() != self.n {
            return Err(HscopError::DimensionMismatch {
                expected: self.n,
                got: self.domain.dim(),
            });
        }
        for (pos, a) in self.atoms.iter().enumerate() {
            if a.id != pos {
                return Err(HscopError::AtomIds { position: pos, id: a.id });
            }
            a.phi.validate()?;
            if a.phi.dim() != self.n {
                return Err(HscopError::DimensionMismatch {
                    expected: self.n,
                    got: a.phi.dim(),
                });
            }
        }
        let k = self.atoms.len();
        let check_atom = |context: &str, atom: usize| {
            if atom >= k {
                Err(HscopError::UnknownAtom {
                    context: context.to_string(),
                    atom,
                })
            } else {
                Ok(())
            }
        };
        let check_weight = |context: &str, w: f64| {
            if w.is_finite() && w >= 0.0 {
                Ok(())
            } else {
                Err(HscopError::NegativeWeight(context.to_string()))
            }
        };
        let obj = &self.objective;
        if !obj.linear.is_empty() && obj.linear.len() != self.n {
            return Err(HscopError::DimensionMismatch {
                expected: self.n,
                got: obj.linear.len(),
            });
        }
        if obj.linear.iter().any(|c| !c.is_finite()) {
            return Err(HscopError::NonFinite("objective cost".into()));
        }
        for g in &obj.l1_groups {
            check_weight("l1 weight", g.weight)?;
            if let Some(&i) = g.indices.iter().find(|&&i| i >= self.n) {
                return Err(HscopError::VariableIndex(i));
            }
        }
        for t in &obj.heaviside {
            check_atom("objective", t.atom)?;
            check_weight("objective Heaviside weight", t.weight)?;
        }
        check_weight("residual penalty", obj.residual_penalty)?;
        if self.has_residual_rows() && obj.residual_penalty <= 0.0 {
            return Err(HscopError::NonPositivePenalty);
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(HscopError::NonFinite(format!("rhs of row {}", r.name)));
            }
            for t in &r.linear {
                check_atom(&r.name, t.atom)?;
                check_weight(&format!("weight in row {}", r.name), t.weight)?;
            }
            for p in &r.products {
                check_atom(&r.name, p.u)?;
                check_atom(&r.name, p.v)?;
                check_weight(&format!("product weight in row {}", r.name), p.weight)?;
            }
        }
        for ineq in &self.extra_inequalities {
            if !ineq.rhs.is_finite() || ineq.coefs.iter().any(|c| !c.1.is_finite()) {
                return Err(HscopError::NonFinite("extra inequality".into()));
            }
            if let Some(&(i, _)) = ineq.coefs.iter().find(|c| c.0 >= self.n) {
                return Err(HscopError::VariableIndex(i));
            }
        }
        for g in &self.exclusive_groups {
            for &a in g {
                check_atom("exclusive group", a)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let p: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub gamma: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, gamma: f64) -> Self {
        Self { x, gamma }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub row_values: Vec<f64>,
    pub feasible: bool,
    pub in_domain: bool,
    pub active_atoms: Vec<bool>,
    pub phi_values: Vec<f64>,
}

pub fn phi_values(problem: &HscopProblem, x: &[f64]) -> Result<Vec<f64>, HscopError> {
    if x.len() != problem.n {
        return Err(HscopError::DimensionMismatch {
            expected: problem.n,
            got: x.len(),
        });
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(PwaError::NanArgument.into());
    }
    Ok(problem.atoms.iter().map(|a| a.phi.value(x)).collect())
}

/// `cᵀx − Σ λ‖x_G‖₁` (the part of the objective that does not involve atoms).
pub fn smooth_objective(problem: &HscopProblem, x: &[f64]) -> f64 {
    let lin: f64 = problem
        .objective
        .linear
        .iter()
        .zip(x)
        .map(|(c, v)| c * v)
        .sum();
    let reg: f64 = problem
        .objective
        .l1_groups
        .iter()
        .map(|g| g.weight * g.indices.iter().map(|&i| x[i].abs()).sum::<f64>())
        .sum();
    lin - reg
}

pub fn evaluate(problem: &HscopProblem, point: &Point) -> Result<Evaluation, HscopError> {
    let phis = phi_values(problem, &point.x)?;
    let active: Vec<bool> = phis
        .iter()
        .map(|&v| heaviside_closed(v))
        .collect::<Result<_, _>>()?;
    let heav: f64 = problem
        .objective
        .heaviside
        .iter()
        .filter(|t| active[t.atom])
        .map(|t| t.weight)
        .sum();
    let objective = smooth_objective(problem, &point.x) + heav
        - problem.objective.residual_penalty * point.gamma;
    let row_values: Vec<f64> = problem
        .rows
        .iter()
        .map(|r| r.value(&active, point.gamma))
        .collect();
    let rows_ok = problem
        .rows
        .iter()
        .zip(&row_values)
        .all(|(r, &v)| v >= r.rhs - r.tolerance());
    let in_domain = problem.domain.contains(&point.x, 1e-9)
        && problem
            .extra_inequalities
            .iter()
            .all(|q| q.activity(&point.x) <= q.rhs + 1e-9 * q.rhs.abs().max(1.0));
    Ok(Evaluation {
        objective,
        feasible: rows_ok && in_domain && point.gamma >= 0.0,
        in_domain,
        row_values,
        active_atoms: active,
        phi_values: phis,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IndexSets {
    pub lt: Vec<usize>,
    pub inb: Vec<usize>,
    pub gt: Vec<usize>,
}

impl IndexSets {
    pub fn from_values(phis: &[f64], eps1: f64, eps2: f64) -> Self {
        let mut s = Self::default();
        for (k, &v) in phis.iter().enumerate() {
            if v < -eps2 {
                s.lt.push(k);
            } else if v > eps1 {
                s.gt.push(k);
            } else {
                s.inb.push(k);
            }
        }
        s
    }
}

pub fn index_sets(
    problem: &HscopProblem,
    x: &[f64],
    eps1: f64,
    eps2: f64,
) -> Result<IndexSets, HscopError> {
    if !(eps1 >= 0.0 && eps2 >= 0.0) {
        return Err(HscopError::NegativeEpsilon(eps1, eps2));
    }
    Ok(IndexSets::from_values(&phi_values(problem, x)?, eps1, eps2))
}

/// Global lower bound on every φ over the box, clamped to be ≤ 0.
pub fn phi_lower_bound(problem: &HscopProblem) -> f64 {
    problem
        .atoms
        .iter()
        .map(|a| a.phi.lower_bound(&problem.domain))
        .fold(0.0, f64::min)
}
