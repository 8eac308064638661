use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{DualSimplex, LpStatus};
use super::{relative_gap, MilpError, MilpModel, MilpSolution, SolveStatus, Tolerances};

struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: larger bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

/// Branch and bound over the binaries of `model` (maximization).
pub fn solve_milp(model: &MilpModel, tol: &Tolerances) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let binaries = model.binary_indices();
    let mut lp = DualSimplex::new(model)?;

    let mut incumbent: Option<Incumbent> = None;
    if let Some(h) = &model.hint {
        if model.is_feasible(h, tol.feasibility) {
            incumbent = Some(Incumbent {
                values: h.clone(),
                objective: model.objective_value(h),
            });
        } else {
            log::debug!(
                "incumbent hint rejected (violation {:.3e})",
                model.max_violation(h)
            );
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        depth: 0,
        seq: 0,
        fixings: Vec::new(),
    });
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut pruned_bound = f64::NEG_INFINITY;
    let mut limit_hit = false;
    // Current bounds of each binary inside the shared LP.
    let mut current: Vec<(f64, f64)> = binaries.iter().map(|&j| lp.bounds(j)).collect();
    let root_bounds: Vec<(f64, f64)> = current.clone();
    let pos_of: std::collections::HashMap<usize, usize> =
        binaries.iter().enumerate().map(|(k, &j)| (j, k)).collect();

    while let Some(node) = heap.pop() {
        let cutoff = incumbent
            .as_ref()
            .map(|i| i.objective + tol.gap_allowance(i.objective));
        if let Some(c) = cutoff {
            if node.bound <= c {
                pruned_bound = pruned_bound.max(node.bound);
                continue;
            }
        }
        let over_time = model.time_limit.is_some_and(|t| start.elapsed() >= t);
        let over_nodes = model.node_limit.is_some_and(|n| nodes >= n);
        if over_time || over_nodes {
            heap.push(node);
            limit_hit = true;
            break;
        }

        let mut want = root_bounds.clone();
        for &(j, up) in &node.fixings {
            let v = if up { 1.0 } else { 0.0 };
            want[pos_of[&j]] = (v, v);
        }
        for (k, &j) in binaries.iter().enumerate() {
            if current[k] != want[k] {
                lp.set_bounds(j, want[k].0, want[k].1);
                current[k] = want[k];
            }
        }
        nodes += 1;
        if lp.solve()? == LpStatus::Infeasible {
            continue;
        }
        let values = lp.structural_values();
        let obj = model.objective_value(&values);
        if let Some(c) = cutoff {
            if obj <= c {
                pruned_bound = pruned_bound.max(obj.min(node.bound));
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let v = values[j];
            let frac = v.min(1.0 - v);
            if frac > tol.integrality && branch.map_or(true, |(_, f)| frac > f) {
                branch = Some((j, frac));
            }
        }
        match branch {
            Some((j, _)) => {
                for up in [false, true] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, up));
                    heap.push(Node {
                        bound: obj.min(node.bound),
                        depth: node.depth + 1,
                        seq,
                        fixings,
                    });
                    seq += 1;
                }
            }
            None => {
                if let Some(cand) = snap_integral(model, &mut lp, &binaries, &values, tol)? {
                    for (k, &j) in binaries.iter().enumerate() {
                        current[k] = lp.bounds(j);
                    }
                    let better = incumbent
                        .as_ref()
                        .map_or(true, |i| cand.objective > i.objective);
                    if better {
                        incumbent = Some(cand);
                    }
                } else {
                    for (k, &j) in binaries.iter().enumerate() {
                        current[k] = lp.bounds(j);
                    }
                    log::debug!("integral LP point failed verification after snapping");
                }
                // The node is closed; its LP value still bounds the subtree.
                let inc = incumbent.as_ref().map_or(f64::NEG_INFINITY, |i| i.objective);
                if obj > inc {
                    pruned_bound = pruned_bound.max(obj);
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    let lp_iterations = lp.iterations();
    match incumbent {
        None => {
            if limit_hit {
                Err(MilpError::NoIncumbent { bound: open_bound })
            } else {
                Ok(MilpSolution::infeasible(nodes, lp_iterations))
            }
        }
        Some(inc) => {
            let bound = inc.objective.max(open_bound).max(pruned_bound);
            let status = if limit_hit && bound > inc.objective + tol.gap_allowance(inc.objective) {
                SolveStatus::FeasibleTimeLimit
            } else {
                SolveStatus::Optimal
            };
            Ok(MilpSolution {
                status,
                gap: relative_gap(bound, inc.objective),
                objective: inc.objective,
                values: inc.values,
                bound,
                nodes,
                lp_iterations,
            })
        }
    }
}

/// Round the binaries of an integral LP point, re-solve the continuous part
/// with them fixed, and return the point if it checks out.
fn snap_integral(
    model: &MilpModel,
    lp: &mut DualSimplex,
    binaries: &[usize],
    values: &[f64],
    tol: &Tolerances,
) -> Result<Option<Incumbent>, MilpError> {
    for &j in binaries {
        let v = values[j].round();
        lp.set_bounds(j, v, v);
    }
    if lp.solve()? == LpStatus::Infeasible {
        return Ok(None);
    }
    let mut snapped = lp.structural_values();
    for &j in binaries {
        snapped[j] = snapped[j].round();
    }
    if !model.is_feasible(&snapped, tol.feasibility) {
        return Ok(None);
    }
    Ok(Some(Incumbent {
        objective: model.objective_value(&snapped),
        values: snapped,
    }))
}
