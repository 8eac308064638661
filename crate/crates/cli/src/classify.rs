use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;

use hscop::classify::{
    build_np_classification, build_standard_classification, class_rates, enumerate_label_tuples, np_error, predict,
    read_labeled_csv, tree_accuracy, LabeledDataset, NpSpec, ScoreSpec, TreeShape, DEFAULT_TUPLE_BUDGET,
};
use hscop::milp::Tolerances;

use crate::record::{read_hashed, InputFile, SCHEMA_VERSION};
use crate::solve::{method_label, solve_problem, time_limit, Outcome};
use crate::{Method, MethodArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Np,
    Tree,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Labeled CSV with columns x_0.. and label.
    #[arg(long)]
    data: PathBuf,
    /// Number of classes; inferred from the largest label when omitted.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Score margin τ_j, shared by every class.
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_bound: f64,
    /// Constrained error pairs for NP mode, as true:predicted, comma separated.
    #[arg(long, value_delimiter = ',')]
    e1: Vec<String>,
    /// Bound on the weighted E1 error in NP mode.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Lets the NP row be violated at this cost per unit.
    #[arg(long)]
    residual_penalty: Option<f64>,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Branch margin for tree splits.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Largest number of leaf label tuples to solve.
    #[arg(long, default_value_t = DEFAULT_TUPLE_BUDGET)]
    budget: usize,
    #[command(flatten)]
    solver: MethodArgs,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PairRate {
    true_class: usize,
    predicted: usize,
    rate: f64,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    mode: Mode,
    method: String,
    inputs: Vec<InputFile>,
    samples: usize,
    classes: usize,
    objective: f64,
    accuracy: f64,
    /// Per-class correct rates; null for an empty class.
    class_rates: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pair_error_rates: Vec<PairRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e1_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leaf_labels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples_solved: Option<usize>,
    gamma: f64,
    status: String,
    certificate: bool,
    wall_seconds: f64,
    params: Vec<f64>,
}

fn parse_pair(s: &str) -> anyhow::Result<(usize, usize)> {
    let (i, j) = s.trim().split_once(':').with_context(|| format!("pair {s:?} is not true:predicted"))?;
    Ok((i.trim().parse()?, j.trim().parse()?))
}

fn score_spec(a: &ClassifyArgs, classes: usize) -> ScoreSpec {
    ScoreSpec {
        base_scores: vec![0.0; classes],
        margins: vec![a.tau; classes],
        lambda: a.lambda,
        beta_bound: a.beta_bound,
    }
}

fn accuracy(data: &LabeledDataset, spec: &ScoreSpec, beta: &[f64]) -> f64 {
    let hits = (0..data.len()).filter(|&s| predict(&data.x[s], beta, spec) == Some(data.labels[s])).count();
    hits as f64 / data.len() as f64
}


pub fn run(a: &ClassifyArgs) -> anyhow::Result<u8> {
    let (bytes, hash) = read_hashed(&a.data)?;
    let data = read_labeled_csv(&bytes[..], a.classes).with_context(|| format!("dataset {}", a.data.display()))?;
    let j = data.classes;
    let scores = score_spec(a, j);
    let began = Instant::now();
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        mode: a.mode,
        method: method_label(&a.solver),
        inputs: vec![InputFile::new(&a.data, hash)],
        samples: data.len(),
        classes: j,
        objective: f64::NAN,
        accuracy: f64::NAN,
        class_rates: Vec::new(),
        pair_error_rates: Vec::new(),
        e1_error: None,
        leaf_labels: None,
        tuples_solved: None,
        gamma: 0.0,
        status: String::new(),
        certificate: false,
        wall_seconds: 0.0,
        params: Vec::new(),
    };
    let mut code = 0;
    let mut take = |report: &mut Report, o: Outcome| {
        code = o.exit_code();
        report.objective = o.objective;
        report.gamma = o.point.gamma;
        report.status = o.status;
        report.certificate = o.certificate;
        o.point.x
    };
    match a.mode {
        Mode::Standard => {
            let problem = build_standard_classification(&data, &scores)?;
            let o = solve_problem(&problem, &a.solver, time_limit(&a.solver, problem.num_atoms())?)?;
            let beta = take(&mut report, o);
            fill_rates(&mut report, &data, &scores, &beta);
            report.params = beta;
        }
        Mode::Np => {
            let e1 = a.e1.iter().map(|s| parse_pair(s)).collect::<anyhow::Result<Vec<_>>>()?;
            let mut spec = NpSpec::unconstrained(j);
            spec.e2.retain(|p| !e1.contains(p));
            spec.e1 = e1;
            spec.scores = scores.clone();
            spec.threshold = a.threshold;
            spec.residual_penalty = a.residual_penalty;
            let np = build_np_classification(&data, &spec)?;
            let o = solve_problem(&np.problem, &a.solver, time_limit(&a.solver, np.problem.num_atoms())?)?;
            let beta = take(&mut report, o);
            fill_rates(&mut report, &data, &scores, &beta);
            report.pair_error_rates = spec
                .e1
                .iter()
                .chain(&spec.e2)
                .map(|&(i, k)| PairRate { true_class: i, predicted: k, rate: np_error(&data, &spec, &[(i, k)], &beta) })
                .collect();
            if !spec.e1.is_empty() {
                report.e1_error = Some(np_error(&data, &spec, &spec.e1, &beta));
            }
            report.params = beta;
        }
        Mode::Tree => {
            if a.solver.method != Method::Full {
                bail!("tree mode solves every label tuple with the full MIP");
            }
            let shape = TreeShape::complete(a.depth, a.epsilon)?;
            let search = enumerate_label_tuples(&data, &shape, a.lambda, a.budget, &Tolerances::default())?;
            let best = search.best();
            report.objective = best.solved.objective;
            report.accuracy = tree_accuracy(&data, &shape, &best.solved.point.x, &best.labels);
            report.leaf_labels = Some(best.labels.clone());
            report.tuples_solved = Some(search.tuples.len());
            report.status = "optimal".into();
            report.certificate = search.tuples.iter().all(|t| t.solved.bound <= t.solved.objective + 1e-6 * t.solved.objective.abs().max(1.0));
            report.params = best.solved.point.x.clone();
        }
    }
    report.wall_seconds = began.elapsed().as_secs_f64();
    crate::write_output(a.out.as_ref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    eprintln!("{:?}: accuracy {:.4} objective {:.6} [{}]", a.mode, report.accuracy, report.objective, report.status);
    Ok(code)
}

fn fill_rates(report: &mut Report, data: &LabeledDataset, spec: &ScoreSpec, beta: &[f64]) {
    report.accuracy = accuracy(data, spec, beta);
    report.class_rates = class_rates(data, spec, beta).into_iter().map(|r| (!r.is_nan()).then_some(r)).collect();
}
