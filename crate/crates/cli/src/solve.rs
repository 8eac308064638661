use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use rayon::prelude::*;

use hscop::encode::{build_full_mip, extract_solution};
use hscop::hscop::{evaluate, HscopProblem, Point};
use hscop::milp::{solve_milp, SolveStatus, Tolerances};
use hscop::pip::{run_pip, IterationRecord, PipConfig};
use hscop::treatment::{
    build_treatment_hscop, gini_ipw, read_dataset_csv, read_propensity_csv, welfare_ipw, Dataset, PolicyParams,
    PropensityMode, TreatmentError, TreatmentInstance, TreatmentSpec,
};

use crate::record::{read_hashed, InputFile, ProblemResult, RunResult, SolveParams, SCHEMA_VERSION};
use crate::{Method, MethodArgs, EXIT_ABORT, EXIT_INFEASIBLE};

#[derive(Args, Clone, Debug)]
pub struct TreatmentArgs {
    /// Number of arms; inferred from the largest treatment index when omitted.
    #[arg(long)]
    arms: Option<usize>,
    /// `uniform`, `empirical`, or a CSV with covariate_id, treatment, propensity.
    #[arg(long, default_value = "uniform")]
    propensity: String,
    /// Overlap floor for empirical propensities.
    #[arg(long, default_value_t = 0.05)]
    kappa: f64,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 1e8)]
    rho: f64,
    /// Score margin τ_j, shared by every arm.
    #[arg(long, default_value_t = 0.001)]
    tau: f64,
    /// Outcome bound M; the largest observed outcome when omitted.
    #[arg(long)]
    outcome_bound: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Dataset CSV; repeat to solve several datasets in parallel.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    treatment: TreatmentArgs,
    #[command(flatten)]
    solver: MethodArgs,
    /// Result JSON, or a directory when several datasets are given.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    treatment: TreatmentArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProblemSolveArgs {
    /// Problem JSON as written by `problem export`.
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    solver: MethodArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The solver gave up without a usable point.
#[derive(Debug)]
pub struct SolverAbort(pub String);

impl std::fmt::Display for SolverAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver abort: {}", self.0)
    }
}

impl std::error::Error for SolverAbort {}

pub struct Outcome {
    pub point: Point,
    pub objective: f64,
    pub status: String,
    pub certificate: bool,
    pub bound: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    pub aborted: Option<String>,
    pub wall_seconds: f64,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.aborted.is_some() {
            EXIT_ABORT
        } else if self.point.gamma > 0.0 {
            EXIT_INFEASIBLE
        } else {
            0
        }
    }
}

/// Budget tiers for roughly 100, 300 and 500+ atoms.
pub fn default_time_limit(atoms: usize, scale: f64) -> f64 {
    let tier = if atoms < 200 {
        600.0
    } else if atoms < 400 {
        1800.0
    } else {
        3600.0
    };
    tier / scale
}

pub fn time_limit(m: &MethodArgs, atoms: usize) -> anyhow::Result<f64> {
    if !(m.scale > 0.0 && m.scale.is_finite()) {
        bail!("--scale must be positive");
    }
    let t = m.time_limit.unwrap_or_else(|| default_time_limit(atoms, m.scale));
    if !(t > 0.0 && t.is_finite()) {
        bail!("--time-limit must be positive");
    }
    Ok(t)
}

pub fn method_label(m: &MethodArgs) -> String {
    match m.method {
        Method::Full => "Full MIP".to_string(),
        Method::Pip => format!("PIP ({})", m.cap),
    }
}

pub fn solve_problem(problem: &HscopProblem, m: &MethodArgs, limit: f64) -> anyhow::Result<Outcome> {
    let began = Instant::now();
    let limit = Duration::from_secs_f64(limit);
    match m.method {
        Method::Full => {
            let (mut model, map) = build_full_mip(problem)?;
            model.time_limit = Some(limit);
            let sol = solve_milp(&model, &Tolerances::default()).map_err(|e| SolverAbort(e.to_string()))?;
            if !sol.has_point() {
                return Err(SolverAbort(format!("full MIP ended {:?} without a point", sol.status)).into());
            }
            let ex = extract_solution(&sol, &map)?;
            let objective = evaluate(problem, &ex.point)?.objective;
            Ok(Outcome {
                point: ex.point,
                objective,
                status: match sol.status {
                    SolveStatus::Optimal => "optimal",
                    _ => "time_limit",
                }
                .into(),
                certificate: sol.status == SolveStatus::Optimal,
                bound: Some(sol.bound),
                iterations: Vec::new(),
                aborted: None,
                wall_seconds: began.elapsed().as_secs_f64(),
            })
        }
        Method::Pip => {
            let config = PipConfig {
                cap_fraction: m.cap,
                max_stale: m.stale,
                subproblem_time_limit: None,
                total_time_limit: Some(limit),
                ..PipConfig::default()
            };
            let r = run_pip(problem, &config, None).map_err(|e| match e {
                hscop::pip::PipError::Config(c) => anyhow!("invalid PIP settings: {c}"),
                other => SolverAbort(other.to_string()).into(),
            })?;
            let status = if r.aborted.is_some() {
                "aborted"
            } else if r.certificate {
                "certified"
            } else {
                "stopped"
            };
            Ok(Outcome {
                point: r.point,
                objective: r.mu,
                status: status.into(),
                certificate: r.certificate,
                bound: None,
                iterations: r.history,
                aborted: r.aborted,
                wall_seconds: began.elapsed().as_secs_f64(),
            })
        }
    }
}

fn load_treatment(data_path: &Path, t: &TreatmentArgs) -> anyhow::Result<(Dataset, TreatmentSpec, Vec<InputFile>)> {
    let (bytes, hash) = read_hashed(data_path)?;
    let mut inputs = vec![InputFile::new(data_path, hash)];
    let mut data =
        read_dataset_csv(&bytes[..], t.arms).with_context(|| format!("dataset {}", data_path.display()))?;
    let mode = match t.propensity.as_str() {
        "uniform" => PropensityMode::Uniform,
        "empirical" => PropensityMode::Empirical { kappa: t.kappa },
        path => {
            let path = Path::new(path);
            let (bytes, hash) = read_hashed(path)?;
            inputs.push(InputFile::new(path, hash));
            read_propensity_csv(&bytes[..], &data)?
        }
    };
    data.set_propensities(&mode)?;
    let mut spec = TreatmentSpec::new(data.arms).with_margin(t.tau);
    spec.alpha = t.alpha;
    spec.lambda = t.lambda;
    spec.rho = t.rho;
    spec.outcome_bound = t.outcome_bound;
    spec.validate()?;
    Ok((data, spec, inputs))
}

fn solve_one(data_path: &Path, a: &SolveArgs, out: &Path) -> anyhow::Result<u8> {
    let (data, spec, inputs) = load_treatment(data_path, &a.treatment)?;
    let inst: TreatmentInstance = build_treatment_hscop(&data, &spec)?;
    let atoms = inst.problem.num_atoms();
    let limit = time_limit(&a.solver, atoms)?;
    let outcome = solve_problem(&inst.problem, &a.solver, limit)?;
    let params = PolicyParams::from_stacked(&outcome.point.x, data.arms);
    let gini = match gini_ipw(&data, &spec, &params) {
        Ok(g) => Some(g),
        Err(TreatmentError::ZeroWelfare) => None,
        Err(e) => return Err(e.into()),
    };
    let pip = a.solver.method == Method::Pip;
    let result = RunResult {
        schema_version: SCHEMA_VERSION,
        method: method_label(&a.solver),
        inputs,
        params: SolveParams {
            alpha: spec.alpha,
            lambda: spec.lambda,
            rho: spec.rho,
            tau: a.treatment.tau,
            propensity: a.treatment.propensity.clone(),
            cap: pip.then_some(a.solver.cap),
            stale: pip.then_some(a.solver.stale),
            time_limit_seconds: limit,
        },
        atoms,
        samples: inst.samples,
        welfare: outcome.objective,
        welfare_ipw: welfare_ipw(&data, &spec, &params)?,
        gini_ipw: gini,
        gamma: outcome.point.gamma,
        status: outcome.status.clone(),
        certificate: outcome.certificate,
        bound: outcome.bound,
        wall_seconds: outcome.wall_seconds,
        aborted: outcome.aborted.clone(),
        beta: params.beta,
        iterations: outcome.iterations.clone(),
    };
    crate::write_output(Some(&out.to_path_buf()), &(serde_json::to_string_pretty(&result)? + "\n"))?;
    let gini_cell = if result.gamma > 0.0 {
        "infeas.".to_string()
    } else {
        result.gini_ipw.map_or("-".into(), |g| format!("{g:.4}"))
    };
    eprintln!(
        "{}: {} welfare {:.4} gini {} gamma {:.3e} [{}] {:.1}s",
        data_path.display(),
        result.method,
        result.welfare,
        gini_cell,
        result.gamma,
        result.status,
        result.wall_seconds
    );
    Ok(outcome.exit_code())
}

fn run_file_name(data: &Path, m: &MethodArgs) -> String {
    let stem = data.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
    match m.method {
        Method::Full => format!("{stem}.full.json"),
        Method::Pip => format!("{stem}.pip-{}.json", m.cap),
    }
}

pub fn run(a: &SolveArgs) -> anyhow::Result<u8> {
    if a.data.len() == 1 && !a.out.is_dir() {
        return code_of(solve_one(&a.data[0], a, &a.out));
    }
    std::fs::create_dir_all(&a.out)?;
    let mut names: Vec<String> = a.data.iter().map(|d| run_file_name(d, &a.solver)).collect();
    names.sort();
    names.dedup();
    if names.len() != a.data.len() {
        bail!("datasets must have distinct file names");
    }
    // One solve per worker; each writes only its own result file.
    let codes: Vec<anyhow::Result<u8>> = a
        .data
        .par_iter()
        .map(|d| code_of(solve_one(d, a, &a.out.join(run_file_name(d, &a.solver)))))
        .collect();
    let mut worst = 0;
    let mut first_err = None;
    for (d, c) in a.data.iter().zip(codes) {
        match c {
            Ok(c) => worst = worst.max(c),
            Err(e) => {
                eprintln!("{}: {e:#}", d.display());
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

/// Solver aborts become exit code 3; other errors propagate.
fn code_of(r: anyhow::Result<u8>) -> anyhow::Result<u8> {
    match r {
        Err(e) if e.is::<SolverAbort>() => {
            eprintln!("error: {e}");
            Ok(EXIT_ABORT)
        }
        other => other,
    }
}

pub fn export(a: &ExportArgs) -> anyhow::Result<u8> {
    let (data, spec, _) = load_treatment(&a.data, &a.treatment)?;
    let inst = build_treatment_hscop(&data, &spec)?;
    crate::write_output(a.out.as_ref(), &(inst.problem.to_json()? + "\n"))?;
    Ok(0)
}

pub fn run_problem(a: &ProblemSolveArgs) -> anyhow::Result<u8> {
    let (bytes, hash) = read_hashed(&a.problem)?;
    let problem = HscopProblem::from_json(std::str::from_utf8(&bytes)?)
        .map_err(|e| anyhow!("problem {}: {e}", a.problem.display()))?;
    let atoms = problem.num_atoms();
    let limit = time_limit(&a.solver, atoms)?;
    code_of((|| {
        let outcome = solve_problem(&problem, &a.solver, limit)?;
        let result = ProblemResult {
            schema_version: SCHEMA_VERSION,
            method: method_label(&a.solver),
            inputs: vec![InputFile::new(&a.problem, hash)],
            atoms,
            objective: outcome.objective,
            gamma: outcome.point.gamma,
            x: outcome.point.x.clone(),
            status: outcome.status.clone(),
            certificate: outcome.certificate,
            bound: outcome.bound,
            wall_seconds: outcome.wall_seconds,
            aborted: outcome.aborted.clone(),
            iterations: outcome.iterations.clone(),
        };
        crate::write_output(a.out.as_ref(), &(serde_json::to_string_pretty(&result)? + "\n"))?;
        Ok(outcome.exit_code())
    })())
}
