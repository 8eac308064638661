//! Classification problems as HSCOPs: score-based standard and
//! Neyman-Pearson learning, and fixed-depth trees by label-tuple
//! decomposition.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{build_full_mip, extract_solution, EncodeError};
use crate::hscop::{evaluate, ConstraintRow, HscopError, HscopProblem, L1Group, LinearTerm, Phi, Point};
use crate::milp::{solve_milp, MilpError, Tolerances};
use crate::pwa::{AffineFn, BoxDomain, DcPwa, MaxAffine, MinAffine};
use crate::treatment::margin_scores;

pub const DEFAULT_TREE_EPSILON: f64 = 1e-3;
pub const DEFAULT_TUPLE_BUDGET: usize = 4096;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("{tuples} label tuples exceed the budget of {budget}; reduce the tree depth or the number of classes")]
    Budget { tuples: usize, budget: usize },
    #[error(transparent)]
    Problem(#[from] HscopError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledDataset {
    pub fn new(x: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self, ClassifyError> {
        let bad = |m: String| Err(ClassifyError::Data(m));
        if x.is_empty() || x.len() != labels.len() {
            return bad(format!("{} feature rows and {} labels", x.len(), labels.len()));
        }
        if classes < 2 {
            return bad("need at least two classes".into());
        }
        let p = x[0].len();
        if p == 0 {
            return bad("no features".into());
        }
        for (s, row) in x.iter().enumerate() {
            if row.len() != p || row.iter().any(|v| !v.is_finite()) {
                return bad(format!("row {s} is malformed"));
            }
            if labels[s] >= classes {
                return bad(format!("row {s} has label {} with {classes} classes", labels[s]));
            }
        }
        Ok(Self { x, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// S_i = {s : Y_s = i}.
    pub fn class_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.classes];
        for (s, &y) in self.labels.iter().enumerate() {
            sets[y].push(s);
        }
        sets
    }

    fn require_nonempty(&self, classes: impl IntoIterator<Item = usize>) -> Result<(), ClassifyError> {
        let sets = self.class_sets();
        for i in classes {
            if sets[i].is_empty() {
                return Err(ClassifyError::Data(format!("class {i} has no samples")));
            }
        }
        Ok(())
    }
}

/// Score model shared by the standard and NP builders: β ∈ R^{Jp} stacked
/// per class, scores ξᵀβ^j + b_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub base_scores: Vec<f64>,
    pub margins: Vec<f64>,
    pub lambda: f64,
    pub beta_bound: f64,
}

impl ScoreSpec {
    pub fn new(classes: usize) -> Self {
        Self { base_scores: vec![0.0; classes], margins: vec![1e-3; classes], lambda: 0.0, beta_bound: 1.0 }
    }

    fn validate(&self, classes: usize, strict_margins: bool) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::Spec(m.to_string()));
        if self.base_scores.len() != classes || self.margins.len() != classes {
            return bad("base scores and margins need one entry per class");
        }
        if self.base_scores.iter().any(|b| !b.is_finite()) {
            return bad("base scores must be finite");
        }
        let ok = |t: &f64| t.is_finite() && if strict_margins { *t > 0.0 } else { *t >= 0.0 };
        if !self.margins.iter().all(ok) {
            return bad(if strict_margins { "margins must be positive" } else { "margins must be nonnegative" });
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative");
        }
        if !(self.beta_bound > 0.0 && self.beta_bound.is_finite()) {
            return bad("beta bound must be positive");
        }
        Ok(())
    }

    fn problem(&self, p: usize) -> Result<HscopProblem, ClassifyError> {
        let j = self.base_scores.len();
        let domain = BoxDomain::cube(j * p, -self.beta_bound, self.beta_bound).map_err(HscopError::from)?;
        let mut problem = HscopProblem::new(domain);
        problem.objective.l1_groups =
            (0..j).map(|c| L1Group { indices: (c * p..(c + 1) * p).collect(), weight: self.lambda }).collect();
        Ok(problem)
    }
}

/// Plain scores h_j(ξ, β) without margins.
pub fn class_scores(xi: &[f64], beta: &[f64], base: &[f64]) -> Vec<f64> {
    let p = xi.len();
    let raw: Vec<f64> =
        base.iter().enumerate().map(|(j, b)| xi.iter().zip(&beta[j * p..]).map(|(u, v)| u * v).sum::<f64>() + b).collect();
    (0..raw.len())
        .map(|j| raw[j] - (0..raw.len()).filter(|&m| m != j).map(|m| raw[m]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// The class whose margin score is nonnegative, if any.
pub fn predict(xi: &[f64], beta: &[f64], spec: &ScoreSpec) -> Option<usize> {
    class_scores(xi, beta, &spec.base_scores).iter().zip(&spec.margins).position(|(h, t)| h - t >= 0.0)
}

/// Atoms h_i^τ(X^s, ·) for s ∈ S_i with weight 1/|S_i|; no rows.
pub fn build_standard_classification(data: &LabeledDataset, spec: &ScoreSpec) -> Result<HscopProblem, ClassifyError> {
    spec.validate(data.classes, false)?;
    data.require_nonempty(0..data.classes)?;
    let sets = data.class_sets();
    let mut problem = spec.problem(data.dim())?;
    for (i, set) in sets.iter().enumerate() {
        let w = 1.0 / set.len() as f64;
        for &s in set {
            let h = margin_scores(&data.x[s], &spec.base_scores, &spec.margins).swap_remove(i);
            let a = problem.add_atom(Phi::Concave(h));
            problem.objective.heaviside.push(LinearTerm { atom: a, weight: w });
        }
    }
    problem.validate()?;
    Ok(problem)
}

/// Direct SAA evaluation of the standard objective.
pub fn standard_objective(data: &LabeledDataset, spec: &ScoreSpec, beta: &[f64]) -> f64 {
    let sets = data.class_sets();
    let rates: f64 = sets
        .iter()
        .enumerate()
        .filter(|(_, set)| !set.is_empty())
        .map(|(i, set)| {
            let hits = set
                .iter()
                .filter(|&&s| class_scores(&data.x[s], beta, &spec.base_scores)[i] - spec.margins[i] >= 0.0)
                .count();
            hits as f64 / set.len() as f64
        })
        .sum();
    rates - spec.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpSpec {
    pub scores: ScoreSpec,
    /// Error pairs (true, predicted) held under the threshold.
    pub e1: Vec<(usize, usize)>,
    /// Error pairs minimized in the objective.
    pub e2: Vec<(usize, usize)>,
    /// w_ij indexed [i][j]; diagonal ignored.
    pub weights: Vec<Vec<f64>>,
    pub threshold: f64,
    /// When set, the E₁ row may be violated at cost ρ per unit.
    pub residual_penalty: Option<f64>,
}

impl NpSpec {
    /// E₁ = ∅ and unit weights.
    pub fn unconstrained(classes: usize) -> Self {
        let e2 = (0..classes).flat_map(|i| (0..classes).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        Self {
            scores: ScoreSpec::new(classes),
            e1: Vec::new(),
            e2,
            weights: vec![vec![1.0; classes]; classes],
            threshold: 1.0,
            residual_penalty: None,
        }
    }

    pub fn validate(&self, classes: usize) -> Result<(), ClassifyError> {
        self.scores.validate(classes, true)?;
        let bad = |m: String| Err(ClassifyError::Spec(m));
        let mut seen = vec![vec![0u8; classes]; classes];
        for &(i, j) in self.e1.iter().chain(&self.e2) {
            if i >= classes || j >= classes || i == j {
                return bad(format!("pair ({i}, {j}) is not an off-diagonal label pair"));
            }
            seen[i][j] += 1;
        }
        for (i, row) in seen.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                if i != j && k != 1 {
                    return bad(format!("pair ({i}, {j}) must appear in exactly one of E1 and E2"));
                }
            }
        }
        if self.weights.len() != classes || self.weights.iter().any(|r| r.len() != classes) {
            return bad("weights must be a J x J table".into());
        }
        if self.weights.iter().flatten().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return bad("weights must be nonnegative".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad("threshold must be positive".into());
        }
        if let Some(r) = self.residual_penalty {
            if !(r > 0.0 && r.is_finite()) {
                return bad("residual penalty must be positive".into());
            }
        }
        Ok(())
    }
}

/// −h_j(X, ·) − τ_j, convex max-affine in β, as a DC function with a zero
/// concave part.
fn np_atom(xi: &[f64], j: usize, spec: &ScoreSpec) -> Result<Phi, ClassifyError> {
    let jn = spec.base_scores.len();
    let n = jn * xi.len();
    let h = margin_scores(xi, &spec.base_scores, &vec![0.0; jn]).swap_remove(j);
    let plus = MaxAffine::new(
        h.pieces
            .iter()
            .map(|f| {
                let mut g = f.neg();
                g.offset -= spec.margins[j];
                g
            })
            .collect(),
    )
    .map_err(HscopError::from)?;
    let minus = MaxAffine::new(vec![AffineFn::constant(n, 0.0).map_err(HscopError::from)?]).map_err(HscopError::from)?;
    Ok(Phi::Dc(DcPwa::new(plus, minus).map_err(HscopError::from)?))
}

#[derive(Debug, Clone)]
pub struct NpProblem {
    pub problem: HscopProblem,
    /// Σ_{E₂} w_ij: the minimization objective equals this minus the
    /// Heaviside part of the HSCOP objective.
    pub e2_total: f64,
    pub e1_total: f64,
}

pub fn build_np_classification(data: &LabeledDataset, spec: &NpSpec) -> Result<NpProblem, ClassifyError> {
    spec.validate(data.classes)?;
    data.require_nonempty(spec.e1.iter().chain(&spec.e2).map(|&(i, _)| i))?;
    let sets = data.class_sets();
    let mut problem = spec.scores.problem(data.dim())?;
    let mut e2_total = 0.0;
    for &(i, j) in &spec.e2 {
        let w = spec.weights[i][j];
        e2_total += w;
        for &s in &sets[i] {
            let a = problem.add_atom(np_atom(&data.x[s], j, &spec.scores)?);
            problem.objective.heaviside.push(LinearTerm { atom: a, weight: w / sets[i].len() as f64 });
        }
    }
    let mut e1_total = 0.0;
    if !spec.e1.is_empty() {
        let mut row = ConstraintRow::new("np", 0.0);
        for &(i, j) in &spec.e1 {
            let w = spec.weights[i][j];
            e1_total += w;
            for &s in &sets[i] {
                let a = problem.add_atom(np_atom(&data.x[s], j, &spec.scores)?);
                row.add_linear(a, w / sets[i].len() as f64);
            }
        }
        // Each pair contributes |S_i| · w/|S_i| = w at full count.
        row.rhs = e1_total - spec.threshold;
        if row.rhs <= 0.0 {
            log::info!("NP row is vacuous (rhs {})", row.rhs);
        }
        if let Some(rho) = spec.residual_penalty {
            row = row.with_residual();
            problem.objective.residual_penalty = rho;
        }
        problem.rows.push(row);
    }
    problem.validate()?;
    Ok(NpProblem { problem, e2_total, e1_total })
}

/// Σ_{pairs} w_ij/|S_i| Σ_{s∈S_i} 1{h_j(X^s) + τ_j > 0}, computed directly.
pub fn np_error(data: &LabeledDataset, spec: &NpSpec, pairs: &[(usize, usize)], beta: &[f64]) -> f64 {
    let sets = data.class_sets();
    pairs
        .iter()
        .map(|&(i, j)| {
            let hits = sets[i]
                .iter()
                .filter(|&&s| class_scores(&data.x[s], beta, &spec.scores.base_scores)[j] + spec.scores.margins[j] > 0.0)
                .count();
            spec.weights[i][j] * hits as f64 / sets[i].len() as f64
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeShape {
    pub branches: usize,
    /// Root-to-leaf path of every leaf as (branch node, direction).
    pub leaves: Vec<Vec<(usize, Branch)>>,
    pub epsilon: f64,
    pub a_bound: f64,
    /// Box for every b_k; `None` picks the largest ‖X^s‖₁ · a_bound + ε.
    pub b_bound: Option<f64>,
}

impl TreeShape {
    /// Complete binary tree in heap order: node k has children 2k+1 (left)
    /// and 2k+2 (right).
    pub fn complete(depth: usize, epsilon: f64) -> Result<Self, ClassifyError> {
        if depth == 0 {
            return Err(ClassifyError::Spec("a tree needs depth at least 1".into()));
        }
        if depth > 12 {
            return Err(ClassifyError::Spec(format!("depth {depth} is too large")));
        }
        let branches = (1 << depth) - 1;
        let leaves = (0..1usize << depth)
            .map(|t| {
                let mut node = 0;
                (0..depth)
                    .map(|d| {
                        let dir = if (t >> (depth - 1 - d)) & 1 == 1 { Branch::Right } else { Branch::Left };
                        let here = node;
                        node = 2 * node + if dir == Branch::Right { 2 } else { 1 };
                        (here, dir)
                    })
                    .collect()
            })
            .collect();
        let shape = Self { branches, leaves, epsilon, a_bound: 1.0, b_bound: None };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::Spec(m.to_string()));
        if self.branches == 0 || self.leaves.len() < 2 {
            return bad("a tree needs at least one branch node and two leaves");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("branch margin must be positive");
        }
        if !(self.a_bound > 0.0 && self.a_bound.is_finite()) {
            return bad("split coefficient bound must be positive");
        }
        if let Some(b) = self.b_bound {
            if !(b > 0.0 && b.is_finite()) {
                return bad("split offset bound must be positive");
            }
        }
        for path in &self.leaves {
            if path.is_empty() || path.iter().any(|(k, _)| *k >= self.branches) {
                return bad("every leaf path must be nonempty and name existing branch nodes");
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.leaves.iter().map(|l| l.len()).max().unwrap_or(0)
    }

    /// Leaf reached by `x` under split parameters `ab`, if any.
    pub fn route(&self, x: &[f64], ab: &[f64]) -> Option<usize> {
        let p = x.len();
        self.leaves.iter().position(|path| {
            path.iter().all(|&(k, dir)| {
                let off = k * (p + 1);
                let s: f64 = ab[off..off + p].iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - ab[off + p];
                match dir {
                    Branch::Right => s >= 0.0,
                    Branch::Left => -s - self.epsilon >= 0.0,
                }
            })
        })
    }
}

/// min over the path of the branch conditions, affine in the stacked (a, b).
pub fn leaf_indicator(x: &[f64], path: &[(usize, Branch)], branches: usize, epsilon: f64) -> MinAffine {
    let p = x.len();
    let n = branches * (p + 1);
    let pieces = path
        .iter()
        .map(|&(k, dir)| {
            let mut w = vec![0.0; n];
            let off = k * (p + 1);
            let sign = if dir == Branch::Right { 1.0 } else { -1.0 };
            for (i, v) in x.iter().enumerate() {
                w[off + i] = sign * v;
            }
            w[off + p] = -sign;
            AffineFn { weights: w, offset: if dir == Branch::Right { 0.0 } else { -epsilon } }
        })
        .collect();
    MinAffine { pieces }
}

pub fn build_tree_hscop(
    data: &LabeledDataset,
    shape: &TreeShape,
    labels: &[usize],
    lambda: f64,
) -> Result<HscopProblem, ClassifyError> {
    shape.validate()?;
    if labels.len() != shape.leaves.len() || labels.iter().any(|&j| j >= data.classes) {
        return Err(ClassifyError::Spec(format!("label tuple {labels:?} does not fit the tree")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ClassifyError::Spec("lambda must be nonnegative".into()));
    }
    let p = data.dim();
    let b_bound = shape.b_bound.unwrap_or_else(|| {
        let widest = data.x.iter().map(|x| x.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        widest * shape.a_bound + shape.epsilon
    });
    let mut lower = Vec::with_capacity(shape.branches * (p + 1));
    let mut upper = Vec::with_capacity(shape.branches * (p + 1));
    for _ in 0..shape.branches {
        lower.extend(std::iter::repeat(-shape.a_bound).take(p));
        upper.extend(std::iter::repeat(shape.a_bound).take(p));
        lower.push(-b_bound);
        upper.push(b_bound);
    }
    let mut problem = HscopProblem::new(BoxDomain::new(lower, upper).map_err(HscopError::from)?);
    problem.objective.l1_groups = (0..shape.branches)
        .map(|k| L1Group { indices: (k * (p + 1)..k * (p + 1) + p).collect(), weight: lambda })
        .collect();
    let mut per_sample: Vec<Vec<usize>> = vec![Vec::new(); data.len()];
    for (t, path) in shape.leaves.iter().enumerate() {
        for s in 0..data.len() {
            if data.labels[s] != labels[t] {
                continue;
            }
            let phi = leaf_indicator(&data.x[s], path, shape.branches, shape.epsilon);
            let a = problem.add_atom(Phi::Concave(phi));
            problem.objective.heaviside.push(LinearTerm { atom: a, weight: 1.0 });
            per_sample[s].push(a);
        }
    }
    // A sample reaches at most one leaf.
    problem.exclusive_groups = per_sample.into_iter().filter(|g| g.len() > 1).collect();
    problem.validate()?;
    Ok(problem)
}

pub fn label_tuples(leaves: usize, classes: usize, budget: usize) -> Result<Vec<Vec<usize>>, ClassifyError> {
    let total = u32::try_from(leaves).ok().and_then(|l| classes.checked_pow(l));
    match total {
        Some(t) if t <= budget => Ok((0..t)
            .map(|mut code| {
                (0..leaves)
                    .map(|_| {
                        let j = code % classes;
                        code /= classes;
                        j
                    })
                    .collect()
            })
            .collect()),
        other => Err(ClassifyError::Budget { tuples: other.unwrap_or(usize::MAX), budget }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedHscop {
    pub objective: f64,
    pub point: Point,
    pub bound: f64,
}

/// Full-MIP solve returning the extracted point and its exact HSCOP value.
pub fn solve_full(problem: &HscopProblem, tol: &Tolerances) -> Result<SolvedHscop, ClassifyError> {
    let (model, map) = build_full_mip(problem)?;
    let sol = solve_milp(&model, tol)?;
    let ex = extract_solution(&sol, &map)?;
    let objective = evaluate(problem, &ex.point)?.objective;
    Ok(SolvedHscop { objective, point: ex.point, bound: sol.bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleResult {
    pub labels: Vec<usize>,
    pub solved: SolvedHscop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSearch {
    pub tuples: Vec<TupleResult>,
    pub best: usize,
}

impl TreeSearch {
    pub fn best(&self) -> &TupleResult {
        &self.tuples[self.best]
    }
}

/// Solves one HSCOP per label tuple, in parallel, and keeps the best
/// (lowest tuple index among ties).
pub fn enumerate_label_tuples(
    data: &LabeledDataset,
    shape: &TreeShape,
    lambda: f64,
    budget: usize,
    tol: &Tolerances,
) -> Result<TreeSearch, ClassifyError> {
    let tuples = label_tuples(shape.leaves.len(), data.classes, budget)?;
    let results: Vec<TupleResult> = tuples
        .into_par_iter()
        .map(|labels| {
            let problem = build_tree_hscop(data, shape, &labels, lambda)?;
            Ok(TupleResult { solved: solve_full(&problem, tol)?, labels })
        })
        .collect::<Result<_, ClassifyError>>()?;
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.solved.objective > results[best].solved.objective {
            best = k;
        }
    }
    Ok(TreeSearch { tuples: results, best })
}

/// Fraction of samples whose routed leaf carries their label.
pub fn tree_accuracy(data: &LabeledDataset, shape: &TreeShape, ab: &[f64], labels: &[usize]) -> f64 {
    let hits = (0..data.len()).filter(|&s| shape.route(&data.x[s], ab).map(|t| labels[t]) == Some(data.labels[s])).count();
    hits as f64 / data.len() as f64
}

/// Per-class correct-classification rates under the margin scores.
pub fn class_rates(data: &LabeledDataset, spec: &ScoreSpec, beta: &[f64]) -> Vec<f64> {
    data.class_sets()
        .iter()
        .map(|set| {
            if set.is_empty() {
                return f64::NAN;
            }
            let hits = set.iter().filter(|&&s| predict(&data.x[s], beta, spec) == Some(data.labels[s])).count();
            hits as f64 / set.len() as f64
        })
        .collect()
}

pub fn read_labeled_csv<R: Read>(reader: R, classes: Option<usize>) -> Result<LabeledDataset, ClassifyError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let label_col = col("label").ok_or_else(|| ClassifyError::Data("missing label column".into()))?;
    let mut x_cols = Vec::new();
    while let Some(c) = col(&format!("x_{}", x_cols.len())) {
        x_cols.push(c);
    }
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || ClassifyError::Data(format!("row {}: cannot parse", i + 2));
        x.push(x_cols.iter().map(|&c| rec[c].trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?);
        labels.push(rec[label_col].trim().parse::<usize>().map_err(|_| bad())?);
    }
    let classes = classes.unwrap_or_else(|| labels.iter().map(|l| l + 1).max().unwrap_or(0));
    LabeledDataset::new(x, labels, classes)
}

pub fn write_labeled_csv<W: Write>(writer: W, data: &LabeledDataset) -> Result<(), ClassifyError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.dim()).map(|i| format!("x_{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (x, y) in data.x.iter().zip(&data.labels) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
