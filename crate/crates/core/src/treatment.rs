//! Fairness-constrained treatment learning: IPW welfare, the Gini row and
//! the margin policy class, assembled into an HSCOP over stacked β.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hscop::{ConstraintRow, HscopError, HscopProblem, L1Group, LinearTerm, Phi};
use crate::pwa::{AffineFn, BoxDomain, MinAffine};

pub const DEFAULT_KAPPA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TreatmentError {
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid treatment spec: {0}")]
    Spec(String),
    #[error("propensity missing for covariate {covariate} arm {arm}")]
    MissingPropensity { covariate: usize, arm: usize },
    #[error("covariate {0} has no samples")]
    EmptyCell(usize),
    #[error("estimated welfare is zero; the Gini statistic is undefined")]
    ZeroWelfare,
    #[error(transparent)]
    Problem(#[from] HscopError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub covariate_id: usize,
    pub x: Vec<f64>,
    pub treatment: usize,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropensityMode {
    /// Caller-supplied ê_j(ξ), indexed by covariate cell then arm.
    Known(Vec<Vec<f64>>),
    Uniform,
    Empirical { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub arms: usize,
    /// Distinct covariate ids in increasing order; cells are indexed by position.
    pub covariate_ids: Vec<usize>,
    pub covariates: Vec<Vec<f64>>,
    /// Cell index of every sample.
    pub cell: Vec<usize>,
    /// ê_j(ξ) per cell and arm; empty until propensities are set.
    pub propensity: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, arms: usize) -> Result<Self, TreatmentError> {
        let bad = |m: String| Err(TreatmentError::Dataset(m));
        if samples.is_empty() {
            return bad("no samples".into());
        }
        if arms < 2 {
            return bad(format!("need at least two arms, got {arms}"));
        }
        let p = samples[0].x.len();
        let mut table: BTreeMap<usize, &Vec<f64>> = BTreeMap::new();
        for (s, smp) in samples.iter().enumerate() {
            if smp.x.len() != p {
                return bad(format!("sample {s} has {} covariates, expected {p}", smp.x.len()));
            }
            if smp.x.iter().any(|v| !v.is_finite()) {
                return bad(format!("sample {s} has a non-finite covariate"));
            }
            if smp.treatment >= arms {
                return bad(format!("sample {s} has treatment {} with {arms} arms", smp.treatment));
            }
            if !(smp.outcome.is_finite() && smp.outcome >= 0.0) {
                return bad(format!("sample {s} has outcome {} outside [0, M]", smp.outcome));
            }
            match table.get(&smp.covariate_id) {
                Some(x) if **x != smp.x => {
                    return bad(format!("covariate id {} maps to two different vectors", smp.covariate_id))
                }
                Some(_) => {}
                None => {
                    table.insert(smp.covariate_id, &smp.x);
                }
            }
        }
        let covariate_ids: Vec<usize> = table.keys().copied().collect();
        let covariates: Vec<Vec<f64>> = table.values().map(|x| (*x).clone()).collect();
        let cell = samples
            .iter()
            .map(|s| covariate_ids.binary_search(&s.covariate_id).unwrap())
            .collect();
        Ok(Self { samples, arms, covariate_ids, covariates, cell, propensity: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.covariates[0].len()
    }

    pub fn num_cells(&self) -> usize {
        self.covariates.len()
    }

    pub fn max_outcome(&self) -> f64 {
        self.samples.iter().map(|s| s.outcome).fold(0.0, f64::max)
    }

    pub fn cell_counts(&self) -> Vec<Vec<usize>> {
        let mut c = vec![vec![0; self.arms]; self.num_cells()];
        for (s, smp) in self.samples.iter().enumerate() {
            c[self.cell[s]][smp.treatment] += 1;
        }
        c
    }

    pub fn set_propensities(&mut self, mode: &PropensityMode) -> Result<(), TreatmentError> {
        self.propensity = estimate_propensities(self, mode)?;
        Ok(())
    }

    pub fn propensity_of(&self, s: usize) -> Result<f64, TreatmentError> {
        let c = self.cell[s];
        let j = self.samples[s].treatment;
        match self.propensity.get(c).and_then(|r| r.get(j)) {
            Some(&e) if e > 0.0 => Ok(e),
            _ => Err(TreatmentError::MissingPropensity { covariate: self.covariate_ids[c], arm: j }),
        }
    }
}

/// Euclidean projection of `raw` onto {e : Σe = 1, κ ≤ e ≤ 1−κ}, found by
/// bisection on the common shift.
fn project_capped_simplex(raw: &[f64], kappa: f64) -> Vec<f64> {
    let clamp = |c: f64| -> Vec<f64> { raw.iter().map(|r| (r - c).clamp(kappa, 1.0 - kappa)).collect() };
    let total = |c: f64| -> f64 { clamp(c).iter().sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clamp(0.5 * (lo + hi))
}

pub fn estimate_propensities(data: &Dataset, mode: &PropensityMode) -> Result<Vec<Vec<f64>>, TreatmentError> {
    let cells = data.num_cells();
    match mode {
        PropensityMode::Uniform => Ok(vec![vec![1.0 / data.arms as f64; data.arms]; cells]),
        PropensityMode::Known(table) => {
            if table.len() != cells {
                return Err(TreatmentError::Dataset(format!(
                    "propensity table has {} cells, dataset has {cells}",
                    table.len()
                )));
            }
            for (c, row) in table.iter().enumerate() {
                for j in 0..data.arms {
                    match row.get(j) {
                        Some(&e) if e > 0.0 && e <= 1.0 => {}
                        _ => {
                            return Err(TreatmentError::MissingPropensity {
                                covariate: data.covariate_ids[c],
                                arm: j,
                            })
                        }
                    }
                }
            }
            Ok(table.clone())
        }
        PropensityMode::Empirical { kappa } => {
            let kappa = *kappa;
            if !(kappa > 0.0 && kappa * data.arms as f64 <= 1.0 && kappa < 0.5) {
                return Err(TreatmentError::Spec(format!("overlap floor {kappa} infeasible for {} arms", data.arms)));
            }
            let counts = data.cell_counts();
            counts
                .iter()
                .enumerate()
                .map(|(c, row)| {
                    let n: usize = row.iter().sum();
                    if n == 0 {
                        return Err(TreatmentError::EmptyCell(data.covariate_ids[c]));
                    }
                    let raw: Vec<f64> = row.iter().map(|&k| k as f64 / n as f64).collect();
                    Ok(project_capped_simplex(&raw, kappa))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSpec {
    pub arms: usize,
    pub base_scores: Vec<f64>,
    pub margins: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
    /// β^j ranges over [−beta_bound, beta_bound]^p.
    pub beta_bound: f64,
    /// Outcome bound M; the largest observed outcome when unset.
    pub outcome_bound: Option<f64>,
}

impl TreatmentSpec {
    pub fn new(arms: usize) -> Self {
        Self {
            arms,
            base_scores: vec![0.0; arms],
            margins: vec![0.001; arms],
            alpha: 0.7,
            lambda: 0.01,
            rho: 1e8,
            beta_bound: 1.0,
            outcome_bound: None,
        }
    }

    pub fn with_margin(mut self, tau: f64) -> Self {
        self.margins = vec![tau; self.arms];
        self
    }

    pub fn validate(&self) -> Result<(), TreatmentError> {
        let bad = |m: String| Err(TreatmentError::Spec(m));
        if self.arms < 2 {
            return bad("need at least two arms".into());
        }
        if self.base_scores.len() != self.arms || self.margins.len() != self.arms {
            return bad("base scores and margins need one entry per arm".into());
        }
        if self.base_scores.iter().any(|b| !b.is_finite()) {
            return bad("base scores must be finite".into());
        }
        if self.margins.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("margins must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative".into());
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive".into());
        }
        if !(self.beta_bound > 0.0 && self.beta_bound.is_finite()) {
            return bad("beta bound must be positive".into());
        }
        if let Some(m) = self.outcome_bound {
            if !(m > 0.0 && m.is_finite()) {
                return bad("outcome bound must be positive".into());
            }
        }
        Ok(())
    }

    pub fn resolve_outcome_bound(&self, data: &Dataset) -> Result<f64, TreatmentError> {
        let max = data.max_outcome();
        match self.outcome_bound {
            Some(m) if m + 1e-12 * m.abs().max(1.0) < max => {
                Err(TreatmentError::Spec(format!("outcome bound {m} is below the observed maximum {max}")))
            }
            Some(m) => Ok(m),
            None if max > 0.0 => Ok(max),
            None => Err(TreatmentError::Dataset("all outcomes are zero; supply an outcome bound".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// One coefficient vector per arm.
    pub beta: Vec<Vec<f64>>,
}

impl PolicyParams {
    pub fn zeros(arms: usize, p: usize) -> Self {
        Self { beta: vec![vec![0.0; p]; arms] }
    }

    pub fn from_stacked(x: &[f64], arms: usize) -> Self {
        let p = x.len() / arms;
        Self { beta: x.chunks(p).map(|c| c.to_vec()).collect() }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.beta.concat()
    }

    pub fn l1(&self) -> f64 {
        self.beta.iter().flatten().map(|b| b.abs()).sum()
    }
}

/// h_j^τ(ξ, ·) for every arm as a concave piecewise-affine function of the
/// stacked β ∈ R^{Jp}.
pub fn score_functions(spec: &TreatmentSpec, xi: &[f64]) -> Vec<MinAffine> {
    margin_scores(xi, &spec.base_scores, &spec.margins)
}

/// ξᵀβ^j + b_j − max_{m≠j}(ξᵀβ^m + b_m) − τ_j as a MinAffine over J−1 pieces
/// in the stacked β.
pub fn margin_scores(xi: &[f64], base: &[f64], margins: &[f64]) -> Vec<MinAffine> {
    let p = xi.len();
    let jn = base.len();
    (0..jn)
        .map(|j| {
            let pieces = (0..jn)
                .filter(|&m| m != j)
                .map(|m| {
                    let mut w = vec![0.0; jn * p];
                    w[j * p..(j + 1) * p].copy_from_slice(xi);
                    for (k, v) in xi.iter().enumerate() {
                        w[m * p + k] -= v;
                    }
                    AffineFn { weights: w, offset: base[j] - base[m] - margins[j] }
                })
                .collect();
            MinAffine { pieces }
        })
        .collect()
}

pub fn scores(spec: &TreatmentSpec, xi: &[f64], params: &PolicyParams) -> Vec<f64> {
    let raw: Vec<f64> = params
        .beta
        .iter()
        .zip(&spec.base_scores)
        .map(|(b, base)| b.iter().zip(xi).map(|(u, v)| u * v).sum::<f64>() + base)
        .collect();
    (0..spec.arms)
        .map(|j| {
            let best_other = (0..spec.arms).filter(|&m| m != j).map(|m| raw[m]).fold(f64::NEG_INFINITY, f64::max);
            raw[j] - best_other - spec.margins[j]
        })
        .collect()
}

pub fn policy_assign(xi: &[f64], params: &PolicyParams, spec: &TreatmentSpec) -> Option<usize> {
    scores(spec, xi, params).iter().position(|h| *h >= 0.0)
}

#[derive(Debug, Clone)]
pub struct TreatmentInstance {
    pub problem: HscopProblem,
    /// (cell, arm) of every atom, in atom order.
    pub atoms: Vec<(usize, usize)>,
    pub outcome_bound: f64,
    pub samples: usize,
}

impl TreatmentInstance {
    pub fn policy(&self, x: &[f64], arms: usize) -> PolicyParams {
        PolicyParams::from_stacked(x, arms)
    }
}

pub fn build_treatment_hscop(data: &Dataset, spec: &TreatmentSpec) -> Result<TreatmentInstance, TreatmentError> {
    spec.validate()?;
    if spec.arms != data.arms {
        return Err(TreatmentError::Spec(format!("spec has {} arms, dataset {}", spec.arms, data.arms)));
    }
    let m_bound = spec.resolve_outcome_bound(data)?;
    let n = data.len() as f64;
    let p = data.dim();
    let jn = spec.arms;

    // One atom per observed (cell, arm), ordered by cell then arm.
    let counts = data.cell_counts();
    let mut atom_of = vec![vec![None; jn]; data.num_cells()];
    let mut atoms = Vec::new();
    let domain = BoxDomain::cube(jn * p, -spec.beta_bound, spec.beta_bound).map_err(HscopError::from)?;
    let mut problem = HscopProblem::new(domain);
    for (c, xi) in data.covariates.iter().enumerate() {
        let fns = score_functions(spec, xi);
        let mut group = Vec::new();
        for (j, h) in fns.into_iter().enumerate() {
            if counts[c][j] == 0 {
                continue;
            }
            let k = problem.add_atom(Phi::Concave(h));
            atom_of[c][j] = Some(k);
            atoms.push((c, j));
            group.push(k);
        }
        if group.len() > 1 {
            problem.exclusive_groups.push(group);
        }
    }

    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); atoms.len()];
    for s in 0..data.len() {
        let k = atom_of[data.cell[s]][data.samples[s].treatment].unwrap();
        members[k].push((data.samples[s].outcome, data.propensity_of(s)?));
    }

    let psi: Vec<f64> = members.iter().map(|ms| ms.iter().map(|(y, e)| y / e).sum::<f64>() / n).collect();
    for (k, w) in psi.iter().enumerate() {
        problem.objective.heaviside.push(LinearTerm { atom: k, weight: *w });
    }
    problem.objective.l1_groups =
        (0..jn).map(|j| L1Group { indices: (j * p..(j + 1) * p).collect(), weight: spec.lambda }).collect();
    problem.objective.residual_penalty = spec.rho;

    let pair = |a: &[(f64, f64)], b: &[(f64, f64)]| -> f64 {
        let mut acc = 0.0;
        for (ys, es) in a {
            for (yt, et) in b {
                acc += (m_bound - ys.max(*yt)) / (es * et);
            }
        }
        acc / (n * n)
    };
    let mut row = ConstraintRow::new("gini", m_bound).with_residual();
    for k in 0..atoms.len() {
        // Diagonal products fold into the linear weight since z² = z.
        row.add_linear(k, (1.0 + spec.alpha) * psi[k] + pair(&members[k], &members[k]));
    }
    for a in 0..atoms.len() {
        for b in a + 1..atoms.len() {
            // Two scores of one covariate are never simultaneously nonnegative.
            if atoms[a].0 == atoms[b].0 {
                continue;
            }
            let w = 2.0 * pair(&members[a], &members[b]);
            if w != 0.0 {
                row.add_product(a, b, w);
            }
        }
    }
    problem.rows.push(row);
    problem.validate()?;
    Ok(TreatmentInstance { problem, atoms, outcome_bound: m_bound, samples: data.len() })
}

fn assignments(data: &Dataset, spec: &TreatmentSpec, params: &PolicyParams) -> Vec<bool> {
    let per_cell: Vec<Option<usize>> = data.covariates.iter().map(|xi| policy_assign(xi, params, spec)).collect();
    data.samples
        .iter()
        .enumerate()
        .map(|(s, smp)| per_cell[data.cell[s]] == Some(smp.treatment))
        .collect()
}

pub fn welfare_ipw(data: &Dataset, spec: &TreatmentSpec, params: &PolicyParams) -> Result<f64, TreatmentError> {
    let a = assignments(data, spec, params);
    let mut acc = 0.0;
    for (s, smp) in data.samples.iter().enumerate() {
        if a[s] {
            acc += smp.outcome / data.propensity_of(s)?;
        }
    }
    Ok(acc / data.len() as f64)
}

/// The Gini statistic obtained by inverting the linearized constraint:
/// (M − G₂)/Ê − 1, so that it is ≤ α exactly when the row holds with γ = 0.
pub fn gini_ipw(data: &Dataset, spec: &TreatmentSpec, params: &PolicyParams) -> Result<f64, TreatmentError> {
    let m_bound = spec.resolve_outcome_bound(data)?;
    let welfare = welfare_ipw(data, spec, params)?;
    if welfare <= 0.0 {
        return Err(TreatmentError::ZeroWelfare);
    }
    let a = assignments(data, spec, params);
    let treated: Vec<(f64, f64)> = (0..data.len())
        .filter(|&s| a[s])
        .map(|s| Ok((data.samples[s].outcome, data.propensity_of(s)?)))
        .collect::<Result<_, TreatmentError>>()?;
    let n = data.len() as f64;
    let mut g2 = 0.0;
    for (ys, es) in &treated {
        for (yt, et) in &treated {
            g2 += (m_bound - ys.max(*yt)) / (es * et);
        }
    }
    g2 /= n * n;
    Ok((m_bound - g2) / welfare - 1.0)
}

pub fn read_dataset_csv<R: Read>(reader: R, arms: Option<usize>) -> Result<Dataset, TreatmentError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("covariate_id").ok_or_else(|| TreatmentError::Dataset("missing covariate_id column".into()))?;
    let t_col = col("treatment").ok_or_else(|| TreatmentError::Dataset("missing treatment column".into()))?;
    let y_col = col("outcome").ok_or_else(|| TreatmentError::Dataset("missing outcome column".into()))?;
    let mut x_cols = Vec::new();
    while let Some(c) = col(&format!("x_{}", x_cols.len())) {
        x_cols.push(c);
    }
    if x_cols.is_empty() {
        return Err(TreatmentError::Dataset("no covariate columns x_0..".into()));
    }
    let parse = |rec: &csv::StringRecord, c: usize, line: usize| -> Result<f64, TreatmentError> {
        rec[c]
            .trim()
            .parse::<f64>()
            .map_err(|_| TreatmentError::Dataset(format!("row {line}: cannot parse {:?}", &rec[c])))
    };
    let parse_idx = |rec: &csv::StringRecord, c: usize, line: usize| -> Result<usize, TreatmentError> {
        rec[c]
            .trim()
            .parse::<usize>()
            .map_err(|_| TreatmentError::Dataset(format!("row {line}: cannot parse index {:?}", &rec[c])))
    };
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        samples.push(Sample {
            covariate_id: parse_idx(&rec, id_col, line)?,
            x: x_cols.iter().map(|&c| parse(&rec, c, line)).collect::<Result<_, _>>()?,
            treatment: parse_idx(&rec, t_col, line)?,
            outcome: parse(&rec, y_col, line)?,
        });
    }
    let arms = arms.unwrap_or_else(|| samples.iter().map(|s| s.treatment + 1).max().unwrap_or(0));
    Dataset::new(samples, arms)
}

pub fn write_dataset_csv<W: Write>(writer: W, data: &Dataset) -> Result<(), TreatmentError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["covariate_id".to_string()];
    header.extend((0..data.dim()).map(|i| format!("x_{i}")));
    header.push("treatment".into());
    header.push("outcome".into());
    w.write_record(&header)?;
    for s in &data.samples {
        let mut rec = vec![s.covariate_id.to_string()];
        rec.extend(s.x.iter().map(|v| v.to_string()));
        rec.push(s.treatment.to_string());
        rec.push(s.outcome.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Propensity CSV with columns `covariate_id, treatment, propensity`.
pub fn read_propensity_csv<R: Read>(reader: R, data: &Dataset) -> Result<PropensityMode, TreatmentError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut table = vec![vec![f64::NAN; data.arms]; data.num_cells()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || TreatmentError::Dataset(format!("propensity row {}: malformed", i + 2));
        if rec.len() < 3 {
            return Err(bad());
        }
        let id: usize = rec[0].trim().parse().map_err(|_| bad())?;
        let j: usize = rec[1].trim().parse().map_err(|_| bad())?;
        let e: f64 = rec[2].trim().parse().map_err(|_| bad())?;
        let Ok(c) = data.covariate_ids.binary_search(&id) else { continue };
        if j >= data.arms {
            return Err(bad());
        }
        table[c][j] = e;
    }
    Ok(PropensityMode::Known(table))
}
