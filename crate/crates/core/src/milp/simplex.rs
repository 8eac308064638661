//! Bounded dual simplex on a dense tableau.
//!
//! Rows are stored as `A x + y = 0` with one logical `y` per row. The
//! logical bounds combine the row sense with the activity range implied by
//! the root variable bounds, so every column is boxed and dual feasibility
//! is restored at any time by moving nonbasic columns to the bound that
//! matches the sign of their reduced cost.

use super::{MilpError, MilpModel, Sense};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const STALL_LIMIT: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
}

pub(crate) struct DualSimplex {
    m: usize,
    n: usize,
    nc: usize,
    tab: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    d: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    iterations: u64,
    pivots_since_refactor: u64,
    bland: bool,
    stall: u32,
    row_nz: Vec<usize>,
}

const NONBASIC: usize = usize::MAX;

impl DualSimplex {
    pub(crate) fn new(model: &MilpModel) -> Result<Self, MilpError> {
        let m = model.constraints.len();
        let n = model.vars.len();
        let nc = n + m;
        let mut lo = Vec::with_capacity(nc);
        let mut hi = Vec::with_capacity(nc);
        let mut cost = Vec::with_capacity(nc);
        for v in &model.vars {
            lo.push(v.lower);
            hi.push(v.upper);
            cost.push(-v.objective);
        }
        let mut rows = Vec::with_capacity(m);
        for c in &model.constraints {
            let mut merged: Vec<(usize, f64)> = c.terms.iter().map(|&(v, a)| (v.0, a)).collect();
            merged.sort_by_key(|t| t.0);
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
            for (j, a) in merged {
                match row.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => row.push((j, a)),
                }
            }
            row.retain(|t| t.1 != 0.0);
            let (mut amin, mut amax) = (0.0, 0.0);
            for &(j, a) in &row {
                if a > 0.0 {
                    amin += a * lo[j];
                    amax += a * hi[j];
                } else {
                    amin += a * hi[j];
                    amax += a * lo[j];
                }
            }
            let (alo, ahi) = match c.sense {
                Sense::Le => (amin, c.rhs.min(amax)),
                Sense::Ge => (c.rhs.max(amin), amax),
                Sense::Eq => (c.rhs, c.rhs),
            };
            // An empty range means the row cannot be met; pin it to the rhs
            // and let the simplex report infeasibility.
            let (alo, ahi) = if alo > ahi { (c.rhs, c.rhs) } else { (alo, ahi) };
            lo.push(-ahi);
            hi.push(-alo);
            cost.push(0.0);
            rows.push(row);
        }
        if !lo.iter().chain(hi.iter()).all(|v| v.is_finite()) {
            return Err(MilpError::InvalidModel(
                "row activity range overflows".into(),
            ));
        }
        let mut s = Self {
            m,
            n,
            nc,
            tab: vec![0.0; m * nc],
            rows,
            d: cost.clone(),
            cost,
            x: vec![0.0; nc],
            lo,
            hi,
            basis: (n..nc).collect(),
            row_of: vec![NONBASIC; nc],
            iterations: 0,
            pivots_since_refactor: 0,
            bland: false,
            stall: 0,
            row_nz: Vec::new(),
        };
        s.load_slack_basis();
        Ok(s)
    }

    pub(crate) fn iterations(&self) -> u64 {
        self.iterations
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.x[j].clamp(self.lo[j], self.hi[j]))
            .collect()
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    fn load_slack_basis(&mut self) {
        let (m, n, nc) = (self.m, self.n, self.nc);
        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let base = i * nc;
            for &(j, a) in row {
                self.tab[base + j] = a;
            }
            self.tab[base + n + i] = 1.0;
        }
        self.row_of.iter_mut().for_each(|r| *r = NONBASIC);
        for i in 0..m {
            self.basis[i] = n + i;
            self.row_of[n + i] = i;
        }
        self.pivots_since_refactor = 0;
        self.recompute_duals();
        self.place_nonbasics();
        self.recompute_basics();
    }

    fn is_basic(&self, j: usize) -> bool {
        self.row_of[j] != NONBASIC
    }

    fn recompute_duals(&mut self) {
        let nc = self.nc;
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[r * nc..(r + 1) * nc];
            for (dj, &t) in self.d.iter_mut().zip(row) {
                if t != 0.0 {
                    *dj -= cb * t;
                }
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    /// Put each nonbasic column at the bound its reduced cost prefers.
    fn place_nonbasics(&mut self) {
        for j in 0..self.nc {
            if !self.is_basic(j) {
                self.x[j] = if self.d[j] >= 0.0 { self.lo[j] } else { self.hi[j] };
            }
        }
    }

    fn recompute_basics(&mut self) {
        let nc = self.nc;
        for r in 0..self.m {
            let row = &self.tab[r * nc..(r + 1) * nc];
            let mut v = 0.0;
            for (j, &t) in row.iter().enumerate() {
                if t != 0.0 && self.row_of[j] == NONBASIC {
                    v -= t * self.x[j];
                }
            }
            self.x[self.basis[r]] = v;
        }
    }

    fn shift_nonbasic(&mut self, j: usize, value: f64) {
        let delta = value - self.x[j];
        if delta == 0.0 {
            return;
        }
        self.x[j] = value;
        let nc = self.nc;
        for r in 0..self.m {
            let t = self.tab[r * nc + j];
            if t != 0.0 {
                self.x[self.basis[r]] -= t * delta;
            }
        }
    }

    /// Change the bounds of a structural column (used by branch and bound).
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if !self.is_basic(j) {
            let target = if self.d[j] >= 0.0 { lo } else { hi };
            self.shift_nonbasic(j, target);
        }
    }

    /// Flip nonbasic columns whose reduced cost has the wrong sign.
    fn restore_dual_feasibility(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.nc {
            if self.is_basic(j) || self.lo[j] == self.hi[j] {
                continue;
            }
            let at_lo = self.x[j] == self.lo[j];
            if at_lo && self.d[j] < -DUAL_TOL {
                self.shift_nonbasic(j, self.hi[j]);
                flipped = true;
            } else if !at_lo && self.d[j] > DUAL_TOL {
                self.shift_nonbasic(j, self.lo[j]);
                flipped = true;
            }
        }
        flipped
    }

    fn infeasibility(&self, r: usize) -> f64 {
        let b = self.basis[r];
        let v = self.x[b];
        if v < self.lo[b] {
            self.lo[b] - v
        } else if v > self.hi[b] {
            v - self.hi[b]
        } else {
            0.0
        }
    }

    /// Dual steepest edge: the tableau's logical columns hold B⁻¹, so the
    /// exact edge weight of row r is the squared norm of that slice.
    fn select_leaving(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let inf = self.infeasibility(r);
            if inf <= PRIMAL_TOL * (1.0 + self.x[self.basis[r]].abs().min(1e6)) {
                continue;
            }
            let score = if self.bland {
                0.0
            } else {
                let binv = &self.tab[r * self.nc + self.n..(r + 1) * self.nc];
                inf * inf / binv.iter().map(|v| v * v).sum::<f64>().max(1e-12)
            };
            best = match best {
                None => Some((r, score)),
                Some((br, bs)) => {
                    let better = if self.bland { self.basis[r] < self.basis[br] } else { score > bs };
                    if better {
                        Some((r, score))
                    } else {
                        Some((br, bs))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    /// Returns the entering column for leaving row `r`, or `None` when the
    /// row proves infeasibility.
    fn select_entering(&self, r: usize) -> Option<usize> {
        let nc = self.nc;
        let b = self.basis[r];
        let below = self.x[b] < self.lo[b];
        let row = &self.tab[r * nc..(r + 1) * nc];
        let row_scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let ptol = PIVOT_TOL * row_scale.max(1.0);
        // Candidates with their sign-corrected reduced cost.
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        for (j, &a) in row.iter().enumerate() {
            if a.abs() <= ptol || self.row_of[j] != NONBASIC || self.lo[j] == self.hi[j] {
                continue;
            }
            let at_lo = self.x[j] == self.lo[j];
            let eligible = match (below, at_lo) {
                (true, true) => a < 0.0,
                (true, false) => a > 0.0,
                (false, true) => a > 0.0,
                (false, false) => a < 0.0,
            };
            if eligible {
                let sd = if at_lo { self.d[j] } else { -self.d[j] };
                cands.push((j, sd.max(0.0), a.abs()));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if self.bland {
            let mut best = cands[0];
            for &c in &cands[1..] {
                let (rc, rb) = (c.1 / c.2, best.1 / best.2);
                if rc < rb - 1e-12 * (1.0 + rb) {
                    best = c;
                }
            }
            return Some(best.0);
        }
        let theta_max = cands
            .iter()
            .map(|&(_, sd, a)| (sd + DUAL_TOL) / a)
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for &(j, sd, a) in &cands {
            if sd / a <= theta_max && best.map_or(true, |(_, ba)| a > ba) {
                best = Some((j, a));
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.nc;
        let m = self.m;
        let b = self.basis[r];
        let alpha = self.tab[r * nc + q];
        let bound = if self.x[b] < self.lo[b] { self.lo[b] } else { self.hi[b] };
        let t = (self.x[b] - bound) / alpha;
        for i in 0..m {
            let a = self.tab[i * nc + q];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * t;
            }
        }
        self.x[q] += t;
        self.x[b] = bound;

        let dq = self.d[q];
        let theta = (dq / alpha).abs();
        if theta <= DUAL_TOL {
            self.stall += 1;
            if self.stall > STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }

        self.eliminate(r, q);
        self.basis[r] = q;
        self.row_of[q] = r;
        self.row_of[b] = NONBASIC;
        self.iterations += 1;
        self.pivots_since_refactor += 1;
    }

    /// Gauss-Jordan elimination step on pivot `(r, q)`, including duals.
    fn eliminate(&mut self, r: usize, q: usize) {
        let nc = self.nc;
        let inv = 1.0 / self.tab[r * nc + q];
        let mut nz = std::mem::take(&mut self.row_nz);
        nz.clear();
        {
            let row = &mut self.tab[r * nc..(r + 1) * nc];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        let update = |target: &mut [f64]| {
            let f = target[q];
            if f == 0.0 {
                return;
            }
            for &j in &nz {
                let v = target[j] - f * prow[j];
                target[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            target[q] = 0.0;
        };
        for chunk in before.chunks_mut(nc) {
            update(chunk);
        }
        for chunk in after.chunks_mut(nc) {
            update(chunk);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * prow[j];
            }
        }
        self.d[q] = 0.0;
        self.row_nz = nz;
    }

    /// Rebuild the tableau for the current basis from the original rows.
    fn refactor(&mut self) {
        let (m, n, nc) = (self.m, self.n, self.nc);
        let basics: Vec<usize> = self.basis.clone();
        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let base = i * nc;
            for &(j, a) in row {
                self.tab[base + j] = a;
            }
            self.tab[base + n + i] = 1.0;
        }
        let mut used = vec![false; m];
        let mut new_basis = vec![NONBASIC; m];
        // Logical basics keep their own row; their columns are still unit.
        for &b in &basics {
            if b >= n {
                used[b - n] = true;
                new_basis[b - n] = b;
            }
        }
        let mut ok = true;
        for &b in basics.iter().filter(|&&b| b < n) {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                if used[i] {
                    continue;
                }
                let a = self.tab[i * nc + b].abs();
                if a > best.map_or(1e-9, |(_, v)| v) {
                    best = Some((i, a));
                }
            }
            let Some((i, _)) = best else {
                ok = false;
                break;
            };
            self.eliminate(i, b);
            used[i] = true;
            new_basis[i] = b;
        }
        if !ok {
            log::debug!("singular basis during refactor; restarting from slack basis");
            self.load_slack_basis();
            return;
        }
        self.basis = new_basis;
        self.row_of.iter_mut().for_each(|r| *r = NONBASIC);
        for (i, &b) in self.basis.iter().enumerate() {
            self.row_of[b] = i;
        }
        self.pivots_since_refactor = 0;
        self.recompute_duals();
        for j in 0..self.nc {
            if !self.is_basic(j) && self.x[j] != self.lo[j] && self.x[j] != self.hi[j] {
                self.x[j] = if self.d[j] >= 0.0 { self.lo[j] } else { self.hi[j] };
            }
        }
        self.restore_dual_feasibility();
        self.recompute_basics();
    }

    fn residual_ok(&self) -> bool {
        for (i, row) in self.rows.iter().enumerate() {
            let mut act = 0.0;
            let mut scale = 1.0f64;
            for &(j, a) in row {
                let t = a * self.x[j];
                act += t;
                scale = scale.max(t.abs());
            }
            let y = self.x[self.n + i];
            if (act + y).abs() > 1e-9 * scale.max(y.abs()) {
                return false;
            }
        }
        true
    }

    fn max_iterations(&self) -> u64 {
        50 * (self.m + self.nc) as u64 + 10_000
    }

    pub(crate) fn solve(&mut self) -> Result<LpStatus, MilpError> {
        let start = self.iterations;
        let limit = self.max_iterations();
        let mut verified_rows = false;
        self.bland = false;
        self.stall = 0;
        self.restore_dual_feasibility();
        loop {
            if self.iterations - start > limit {
                return Err(MilpError::NumericalFailure(format!(
                    "simplex exceeded {limit} iterations"
                )));
            }
            match self.select_leaving() {
                None => {
                    self.recompute_duals();
                    if self.restore_dual_feasibility() {
                        continue;
                    }
                    if self.residual_ok() {
                        return Ok(LpStatus::Optimal);
                    }
                    self.recompute_basics();
                    if self.residual_ok() {
                        continue;
                    }
                    if self.pivots_since_refactor == 0 {
                        return Err(MilpError::NumericalFailure(
                            "row residuals remain after refactorization".into(),
                        ));
                    }
                    self.refactor();
                }
                Some(r) => match self.select_entering(r) {
                    Some(q) => {
                        self.pivot(r, q);
                        verified_rows = false;
                    }
                    None => {
                        if verified_rows || self.pivots_since_refactor == 0 {
                            return Ok(LpStatus::Infeasible);
                        }
                        self.refactor();
                        verified_rows = true;
                    }
                },
            }
        }
    }
}
