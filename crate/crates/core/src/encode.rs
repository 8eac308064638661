//! MILP encodings of a Heaviside composite problem.
//!
//! Activation is encoded with a tiny positive margin: `z = 1` forces
//! `φ(x) ≥ ACTIVATION_MARGIN` rather than `φ(x) ≥ 0`. The margin sits
//! between the simplex primal tolerance and the MILP feasibility tolerance,
//! so an extracted point activates its atoms under the closed Heaviside even
//! after floating-point round-off, while a hint with `φ = 0` still passes
//! the hint feasibility check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hscop::{
    evaluate, phi_lower_bound, phi_values, HscopError, HscopProblem, IndexSets, Phi, Point,
};
use crate::milp::{MilpModel, MilpSolution, Sense, VarId};
use crate::pwa::{AffineFn, PiecewiseAffine};

pub const ACTIVATION_MARGIN: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error(transparent)]
    Problem(#[from] HscopError),
    #[error("reference point is infeasible for the problem")]
    InfeasibleReference,
    #[error("index sets do not match the reference point: {0}")]
    InconsistentSets(String),
    #[error("solution carries no point (status {0:?})")]
    NoPoint(crate::milp::SolveStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomBinding {
    Free(VarId),
    Fixed0,
    Fixed1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcVars {
    /// Epigraph of the convex part (held equal to its max by `v`).
    pub t: VarId,
    /// Epigraph of the subtracted part.
    pub m: VarId,
    pub v: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigMConstants {
    /// Global lower bound on every φ over the box (≤ 0).
    pub global_lower: f64,
    /// Per DC atom, `C̄_ℓ ≥ max_i ub(plus_i − plus_ℓ)` for each convex piece.
    pub dc_cbar: BTreeMap<usize, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub x: Vec<VarId>,
    pub atoms: Vec<AtomBinding>,
    pub products: BTreeMap<(usize, usize), VarId>,
    /// Epigraph variables per ℓ1 group, aligned with the group's indices.
    pub l1: Vec<Vec<VarId>>,
    pub dc: BTreeMap<usize, DcVars>,
    pub gamma: Option<VarId>,
    pub constants: BigMConstants,
    pub num_vars: usize,
}

impl EncodingMap {
    pub fn free_binaries(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| matches!(a, AtomBinding::Free(_)))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Free,
    Off,
    On { margin: f64 },
}

/// Full formulation: one binary per atom.
pub fn build_full_mip(problem: &HscopProblem) -> Result<(MilpModel, EncodingMap), EncodeError> {
    problem.validate()?;
    let roles = vec![Role::Free; problem.num_atoms()];
    Ok(encode(problem, &roles))
}

/// Restricted formulation around `reference`: atoms in `gt` stay active,
/// atoms in `lt` are dropped, and only `inb` atoms get binaries. The
/// reference point (with `z = H(φ)`) is attached as the incumbent hint.
pub fn build_restricted_mip(
    problem: &HscopProblem,
    reference: &Point,
    sets: &IndexSets,
) -> Result<(MilpModel, EncodingMap), EncodeError> {
    problem.validate()?;
    let eval = evaluate(problem, reference)?;
    if !eval.feasible {
        return Err(EncodeError::InfeasibleReference);
    }
    let k = problem.num_atoms();
    let mut roles: Vec<Option<Role>> = vec![None; k];
    let mut assign = |ids: &[usize], f: &dyn Fn(usize) -> Result<Role, String>| {
        for &a in ids {
            if a >= k || roles[a].is_some() {
                return Err(EncodeError::InconsistentSets(format!(
                    "atom {a} is out of range or listed twice"
                )));
            }
            roles[a] = Some(f(a).map_err(EncodeError::InconsistentSets)?);
        }
        Ok(())
    };
    let phis = &eval.phi_values;
    assign(&sets.inb, &|_| Ok(Role::Free))?;
    assign(&sets.lt, &|a| {
        if phis[a] < 0.0 {
            Ok(Role::Off)
        } else {
            Err(format!("atom {a} is in lt with φ = {}", phis[a]))
        }
    })?;
    assign(&sets.gt, &|a| {
        if phis[a] > 0.0 {
            Ok(Role::On {
                margin: ACTIVATION_MARGIN.min(phis[a]),
            })
        } else {
            Err(format!("atom {a} is in gt with φ = {}", phis[a]))
        }
    })?;
    let roles: Vec<Role> = roles
        .into_iter()
        .enumerate()
        .map(|(a, r)| r.ok_or_else(|| EncodeError::InconsistentSets(format!("atom {a} unassigned"))))
        .collect::<Result<_, _>>()?;
    let (mut model, map) = encode(problem, &roles);
    model.hint = Some(hint_from_point(problem, &map, reference)?);
    Ok((model, map))
}

fn piece_lower(p: &AffineFn, problem: &HscopProblem) -> f64 {
    p.lower_bound(&problem.domain)
}

fn encode(problem: &HscopProblem, roles: &[Role]) -> (MilpModel, EncodingMap) {
    let mut model = MilpModel::new();
    let dom = &problem.domain;
    let x: Vec<VarId> = (0..problem.n)
        .map(|i| model.add_continuous(format!("x{i}"), dom.lower()[i], dom.upper()[i]))
        .collect();
    for (i, &v) in x.iter().enumerate() {
        model.set_objective(v, problem.cost(i));
    }
    let affine_terms = |p: &AffineFn| -> Vec<(VarId, f64)> {
        p.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (x[i], w))
            .collect()
    };

    let mut constants = BigMConstants {
        global_lower: phi_lower_bound(problem),
        dc_cbar: BTreeMap::new(),
    };
    let delta = ACTIVATION_MARGIN;
    let mut atoms = Vec::with_capacity(roles.len());
    let mut dc = BTreeMap::new();

    for (k, (atom, role)) in problem.atoms.iter().zip(roles).enumerate() {
        let binding = match role {
            Role::Free => AtomBinding::Free(model.add_binary(format!("z{k}"))),
            Role::Off => AtomBinding::Fixed0,
            Role::On { .. } => AtomBinding::Fixed1,
        };
        atoms.push(binding);
        match (&atom.phi, role) {
            (_, Role::Off) => {}
            (Phi::Concave(f), Role::On { margin }) => {
                for (p_idx, p) in f.pieces.iter().enumerate() {
                    if piece_lower(p, problem) >= *margin {
                        continue;
                    }
                    model.add_constraint(
                        format!("on{k}_{p_idx}"),
                        affine_terms(p),
                        Sense::Ge,
                        margin - p.offset,
                    );
                }
            }
            (Phi::Concave(f), Role::Free) => {
                let AtomBinding::Free(z) = binding else { unreachable!() };
                for (p_idx, p) in f.pieces.iter().enumerate() {
                    let lb = piece_lower(p, problem);
                    if lb >= delta {
                        continue;
                    }
                    // p(x) ≥ B(1 − z) + δ z with a per-piece B never looser
                    // than the global bound.
                    let big = lb.min(0.0);
                    let mut terms = affine_terms(p);
                    terms.push((z, -(delta - big)));
                    model.add_constraint(format!("bigm{k}_{p_idx}"), terms, Sense::Ge, big - p.offset);
                }
            }
            (Phi::Dc(f), role) => {
                let plus = &f.plus;
                let minus = &f.minus;
                let t = model.add_continuous(
                    format!("t{k}"),
                    plus.lower_bound(dom),
                    plus.upper_bound(dom),
                );
                let m = model.add_continuous(
                    format!("m{k}"),
                    minus.lower_bound(dom),
                    minus.upper_bound(dom),
                );
                let mut v = Vec::new();
                if plus.pieces.len() == 1 {
                    let p = &plus.pieces[0];
                    let mut terms = vec![(t, 1.0)];
                    terms.extend(affine_terms(p).into_iter().map(|(i, w)| (i, -w)));
                    model.add_constraint(format!("tdef{k}"), terms, Sense::Eq, p.offset);
                    constants.dc_cbar.insert(k, vec![0.0]);
                } else {
                    let mut cbar = Vec::with_capacity(plus.pieces.len());
                    for (l, pl) in plus.pieces.iter().enumerate() {
                        let c = plus
                            .pieces
                            .iter()
                            .map(|pi| pi.sub(pl).upper_bound(dom))
                            .fold(0.0, f64::max);
                        cbar.push(c);
                        let mut terms = vec![(t, 1.0)];
                        terms.extend(affine_terms(pl).into_iter().map(|(i, w)| (i, -w)));
                        model.add_constraint(format!("tge{k}_{l}"), terms.clone(), Sense::Ge, pl.offset);
                        let vl = model.add_binary(format!("v{k}_{l}"));
                        terms.push((vl, -c));
                        model.add_constraint(format!("tle{k}_{l}"), terms, Sense::Le, pl.offset);
                        v.push(vl);
                    }
                    model.add_constraint(
                        format!("vsum{k}"),
                        v.iter().map(|&vl| (vl, 1.0)).collect(),
                        Sense::Le,
                        (v.len() - 1) as f64,
                    );
                    constants.dc_cbar.insert(k, cbar);
                }
                for (j, pm) in minus.pieces.iter().enumerate() {
                    let mut terms = vec![(m, 1.0)];
                    terms.extend(affine_terms(pm).into_iter().map(|(i, w)| (i, -w)));
                    model.add_constraint(format!("mge{k}_{j}"), terms, Sense::Ge, pm.offset);
                }
                match role {
                    Role::On { margin } => {
                        model.add_constraint(
                            format!("on{k}"),
                            vec![(t, 1.0), (m, -1.0)],
                            Sense::Ge,
                            *margin,
                        );
                    }
                    Role::Free => {
                        let AtomBinding::Free(z) = binding else { unreachable!() };
                        let big = f.lower_bound(dom).min(0.0);
                        model.add_constraint(
                            format!("bigm{k}"),
                            vec![(t, 1.0), (m, -1.0), (z, -(delta - big))],
                            Sense::Ge,
                            big,
                        );
                    }
                    Role::Off => unreachable!(),
                }
                dc.insert(k, DcVars { t, m, v });
            }
        }
    }

    // Objective Heaviside terms.
    for term in &problem.objective.heaviside {
        match atoms[term.atom] {
            AtomBinding::Free(z) => model.add_objective(z, term.weight),
            AtomBinding::Fixed1 => model.objective_offset += term.weight,
            AtomBinding::Fixed0 => {}
        }
    }

    // ℓ1 epigraphs.
    let mut l1 = Vec::with_capacity(problem.objective.l1_groups.len());
    for (g_idx, g) in problem.objective.l1_groups.iter().enumerate() {
        let mut vars = Vec::with_capacity(g.indices.len());
        for &i in &g.indices {
            let bound = dom.lower()[i].abs().max(dom.upper()[i].abs());
            let s = model.add_continuous(format!("s{g_idx}_{i}"), 0.0, bound);
            model.set_objective(s, -g.weight);
            model.add_constraint(format!("abs+{g_idx}_{i}"), vec![(s, 1.0), (x[i], -1.0)], Sense::Ge, 0.0);
            model.add_constraint(format!("abs-{g_idx}_{i}"), vec![(s, 1.0), (x[i], 1.0)], Sense::Ge, 0.0);
            vars.push(s);
        }
        l1.push(vars);
    }

    let gamma = if problem.has_residual_rows() {
        let cap = problem
            .rows
            .iter()
            .filter(|r| r.residual_allowed)
            .map(|r| r.rhs)
            .fold(0.0, f64::max);
        let g = model.add_continuous("gamma", 0.0, cap);
        model.set_objective(g, -problem.objective.residual_penalty);
        Some(g)
    } else {
        None
    };

    // Heaviside rows with products linearized.
    let mut products: BTreeMap<(usize, usize), VarId> = BTreeMap::new();
    for (r_idx, row) in problem.rows.iter().enumerate() {
        let mut coef: BTreeMap<VarId, f64> = BTreeMap::new();
        let mut rhs = row.rhs;
        for t in &row.linear {
            match atoms[t.atom] {
                AtomBinding::Free(z) => *coef.entry(z).or_default() += t.weight,
                AtomBinding::Fixed1 => rhs -= t.weight,
                AtomBinding::Fixed0 => {}
            }
        }
        for p in &row.products {
            match (atoms[p.u], atoms[p.v]) {
                (AtomBinding::Fixed0, _) | (_, AtomBinding::Fixed0) => {}
                (AtomBinding::Fixed1, AtomBinding::Fixed1) => rhs -= p.weight,
                (AtomBinding::Fixed1, AtomBinding::Free(z))
                | (AtomBinding::Free(z), AtomBinding::Fixed1) => {
                    *coef.entry(z).or_default() += p.weight
                }
                (AtomBinding::Free(zu), AtomBinding::Free(zv)) => {
                    let w = *products.entry((p.u, p.v)).or_insert_with(|| {
                        let w = model.add_continuous(format!("w{}_{}", p.u, p.v), 0.0, 1.0);
                        model.add_constraint(
                            format!("mcu{}_{}", p.u, p.v),
                            vec![(w, 1.0), (zu, -1.0)],
                            Sense::Le,
                            0.0,
                        );
                        model.add_constraint(
                            format!("mcv{}_{}", p.u, p.v),
                            vec![(w, 1.0), (zv, -1.0)],
                            Sense::Le,
                            0.0,
                        );
                        model.add_constraint(
                            format!("mcl{}_{}", p.u, p.v),
                            vec![(w, 1.0), (zu, -1.0), (zv, -1.0)],
                            Sense::Ge,
                            -1.0,
                        );
                        w
                    });
                    *coef.entry(w).or_default() += p.weight;
                }
            }
        }
        if let (true, Some(g)) = (row.residual_allowed, gamma) {
            coef.insert(g, 1.0);
        }
        let name = if row.name.is_empty() { format!("row{r_idx}") } else { row.name.clone() };
        model.add_constraint(name, coef.into_iter().collect(), Sense::Ge, rhs);
    }

    for (g_idx, group) in problem.exclusive_groups.iter().enumerate() {
        let mut free = Vec::new();
        let mut on = 0usize;
        for &a in group {
            match atoms[a] {
                AtomBinding::Free(z) => free.push((z, 1.0)),
                AtomBinding::Fixed1 => on += 1,
                AtomBinding::Fixed0 => {}
            }
        }
        if free.len() >= 2 || (!free.is_empty() && on > 0) {
            model.add_constraint(format!("excl{g_idx}"), free, Sense::Le, 1.0 - on as f64);
        }
    }

    for (q_idx, q) in problem.extra_inequalities.iter().enumerate() {
        model.add_constraint(
            format!("poly{q_idx}"),
            q.coefs.iter().map(|&(i, a)| (x[i], a)).collect(),
            Sense::Le,
            q.rhs,
        );
    }

    let map = EncodingMap {
        x,
        atoms,
        products,
        l1,
        dc,
        gamma,
        constants,
        num_vars: model.vars.len(),
    };
    (model, map)
}

/// Lift a problem point to a full assignment of the encoded model:
/// `z = H(φ)`, products, `|x|` epigraphs and the DC auxiliaries.
pub fn hint_from_point(
    problem: &HscopProblem,
    map: &EncodingMap,
    point: &Point,
) -> Result<Vec<f64>, EncodeError> {
    let phis = phi_values(problem, &point.x)?;
    let mut h = vec![0.0; map.num_vars];
    for (i, v) in map.x.iter().enumerate() {
        h[v.0] = point.x[i];
    }
    let active: Vec<bool> = phis.iter().map(|&p| p >= 0.0).collect();
    for (k, b) in map.atoms.iter().enumerate() {
        if let AtomBinding::Free(z) = b {
            h[z.0] = if active[k] { 1.0 } else { 0.0 };
        }
    }
    for (&(u, v), w) in &map.products {
        h[w.0] = if active[u] && active[v] { 1.0 } else { 0.0 };
    }
    for (g, vars) in problem.objective.l1_groups.iter().zip(&map.l1) {
        for (&i, s) in g.indices.iter().zip(vars) {
            h[s.0] = point.x[i].abs();
        }
    }
    for (&k, d) in &map.dc {
        let Phi::Dc(f) = &problem.atoms[k].phi else { unreachable!() };
        h[d.t.0] = f.plus.value(&point.x);
        h[d.m.0] = f.minus.value(&point.x);
        if !d.v.is_empty() {
            let arg = f.plus.argmax(&point.x);
            for (l, vl) in d.v.iter().enumerate() {
                h[vl.0] = if l == arg { 0.0 } else { 1.0 };
            }
        }
    }
    if let Some(g) = map.gamma {
        // Any γ above the largest residual rhs buys nothing.
        let cap = problem
            .rows
            .iter()
            .filter(|r| r.residual_allowed)
            .map(|r| r.rhs)
            .fold(0.0, f64::max);
        h[g.0] = point.gamma.clamp(0.0, cap);
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub point: Point,
    /// Atom activations claimed by the MILP (fixed atoms included).
    pub z: Vec<bool>,
}

pub fn extract_solution(solution: &MilpSolution, map: &EncodingMap) -> Result<Extracted, EncodeError> {
    if !solution.has_point() {
        return Err(EncodeError::NoPoint(solution.status));
    }
    let x = map.x.iter().map(|v| solution.values[v.0]).collect();
    let gamma = map.gamma.map_or(0.0, |g| {
        let v = solution.values[g.0].max(0.0);
        if v < 1e-9 {
            0.0
        } else {
            v
        }
    });
    let z = map
        .atoms
        .iter()
        .map(|b| match b {
            AtomBinding::Free(v) => solution.values[v.0] > 0.5,
            AtomBinding::Fixed0 => false,
            AtomBinding::Fixed1 => true,
        })
        .collect();
    Ok(Extracted {
        point: Point::new(x, gamma),
        z,
    })
}
