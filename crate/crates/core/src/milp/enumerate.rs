use super::simplex::{DualSimplex, LpStatus};
use super::{MilpError, MilpModel, MilpSolution, SolveStatus};

pub const MAX_ENUMERATION_BINARIES: usize = 20;

/// Exhaustive oracle: solve the residual LP for every binary assignment.
pub fn solve_enumeration(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let binaries = model.binary_indices();
    let k = binaries.len();
    if k > MAX_ENUMERATION_BINARIES {
        return Err(MilpError::TooManyBinaries(k));
    }
    let mut lp = DualSimplex::new(model)?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut count = 0u64;
    for mask in 0u64..(1u64 << k) {
        // Gray code order changes one binary per step.
        let gray = mask ^ (mask >> 1);
        let mut skip = false;
        for (b, &j) in binaries.iter().enumerate() {
            let v = ((gray >> b) & 1) as f64;
            let (lo, hi) = (model.vars[j].lower, model.vars[j].upper);
            if v < lo || v > hi {
                skip = true;
            }
            lp.set_bounds(j, v, v);
        }
        if skip {
            continue;
        }
        count += 1;
        if lp.solve()? == LpStatus::Infeasible {
            continue;
        }
        let mut values = lp.structural_values();
        for &j in &binaries {
            values[j] = values[j].round();
        }
        let obj = model.objective_value(&values);
        if best.as_ref().map_or(true, |(_, b)| obj > *b) {
            best = Some((values, obj));
        }
    }
    Ok(match best {
        None => MilpSolution::infeasible(count, lp.iterations()),
        Some((values, objective)) => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective,
            bound: objective,
            gap: 0.0,
            nodes: count,
            lp_iterations: lp.iterations(),
        },
    })
}
