//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical variable `s_i = a_i·x` boxed by the row's
//! bounds, so the working system is `A x - s = 0`. Phase 1 minimizes the
//! sum of bound violations of basic variables, phase 2 the true objective.
//! Pricing is Dantzig's rule until too many consecutive degenerate pivots
//! occur, after which Bland's rule is used until progress resumes.

use std::collections::HashMap;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

use super::lu::BasisFactor;
use super::{Basis, BasisStatus, LinearProgram, LpError, LpSolution, LpStatus, Sense, ToleranceSettings};

// No clock in std on wasm32-unknown-unknown; solve times read zero there.
#[cfg(target_arch = "wasm32")]
struct Instant;

#[cfg(target_arch = "wasm32")]
impl Instant {
    fn now() -> Self {
        Instant
    }

    fn elapsed(&self) -> std::time::Duration {
        std::time::Duration::ZERO
    }
}

const REFACTOR_INTERVAL: usize = 100;
const DEGENERATE_STEP: f64 = 1e-12;

/// Solves `lp` to optimality or proves it infeasible or unbounded.
pub fn solve_lp(lp: &LinearProgram, tol: &ToleranceSettings) -> Result<LpSolution, LpError> {
    lp.validate()?;
    solve(lp, tol, None)
}

/// Like [`solve_lp`], starting from `start` instead of the slack basis.
pub fn solve_lp_from(lp: &LinearProgram, tol: &ToleranceSettings, start: &Basis) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if start.columns.len() != lp.num_vars {
        return Err(LpError::DimensionMismatch { expected: lp.num_vars, got: start.columns.len() });
    }
    if start.rows.len() != lp.num_constraints() {
        return Err(LpError::DimensionMismatch { expected: lp.num_constraints(), got: start.rows.len() });
    }
    solve(lp, tol, Some(start))
}

fn solve(lp: &LinearProgram, tol: &ToleranceSettings, start: Option<&Basis>) -> Result<LpSolution, LpError> {
    let started = Instant::now();
    let (status, x, iterations, basis) = match Model::build(lp, tol) {
        None => (LpStatus::Infeasible, None, 0, None),
        Some(model) => {
            let mut solver = Solver::new(model, *tol, start);
            let status = solver.run();
            let optimal = status == LpStatus::Optimal;
            let x = optimal.then(|| solver.primal_values());
            let basis = optimal.then(|| solver.export_basis());
            (status, x, solver.iterations, basis)
        }
    };
    let objective_value = match (&x, status) {
        (Some(x), _) => lp.objective_value(x),
        (None, LpStatus::Infeasible) => f64::INFINITY,
        (None, LpStatus::Unbounded) => f64::NEG_INFINITY,
        (None, _) => f64::NAN,
    };
    Ok(LpSolution {
        status,
        x,
        objective_value,
        iteration_count: iterations,
        solve_time: started.elapsed().as_secs_f64(),
        basis,
    })
}

/// Row-scaled working copy of the program: structurals `0..n`, logicals `n..n+m`.
struct Model {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    // One-entry columns for the logicals, laid out so `column()` can hand out slices.
    logical_row: Vec<usize>,
    logical_val: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    /// Working row of each original constraint; `None` for dropped empty rows.
    row_of: Vec<Option<usize>>,
}

impl Model {
    /// Returns `None` when presolve alone proves infeasibility.
    fn build(lp: &LinearProgram, tol: &ToleranceSettings) -> Option<Self> {
        let n = lp.num_vars;
        let mut rows: Vec<(Vec<(usize, f64)>, f64, f64)> = Vec::new();
        let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut row_of = Vec::with_capacity(lp.num_constraints());

        for c in &lp.constraints {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            let mut terms: Vec<(usize, f64)> =
                c.terms.iter().copied().filter(|&(_, a)| a != 0.0).collect();
            terms.sort_unstable_by_key(|&(j, _)| j);
            if terms.is_empty() {
                if lo > tol.feasibility * lo.abs().max(1.0) || hi < -tol.feasibility * hi.abs().max(1.0) {
                    return None;
                }
                row_of.push(None);
                continue;
            }
            let mut h = DefaultHasher::new();
            for &(j, a) in &terms {
                j.hash(&mut h);
                a.to_bits().hash(&mut h);
            }
            let key = h.finish();
            let bucket = by_hash.entry(key).or_default();
            if let Some(&dup) = bucket.iter().find(|&&r| rows[r].0 == terms) {
                let row = &mut rows[dup];
                row.1 = row.1.max(lo);
                row.2 = row.2.min(hi);
                row_of.push(Some(dup));
            } else {
                row_of.push(Some(rows.len()));
                bucket.push(rows.len());
                rows.push((terms, lo, hi));
            }
        }

        let m = rows.len();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for &(l, u) in &lp.bounds {
            lower.push(l);
            upper.push(u);
        }
        let mut counts = vec![0usize; n + 1];
        for (terms, lo, hi) in &mut rows {
            let amax = terms.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            let scale = (-amax.log2().round()).exp2();
            for t in terms.iter_mut() {
                t.1 *= scale;
                counts[t.0 + 1] += 1;
            }
            let (mut l, mut u) = (*lo * scale, *hi * scale);
            if l > u {
                if l - u > tol.feasibility * l.abs().max(u.abs()).max(1.0) {
                    return None;
                }
                let mid = 0.5 * (l + u);
                l = mid;
                u = mid;
            }
            lower.push(l);
            upper.push(u);
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = counts;
        for (i, (terms, _, _)) in rows.iter().enumerate() {
            for &(j, a) in terms {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut cost = lp.objective.clone();
        cost.resize(n + m, 0.0);
        Some(Model {
            n,
            m,
            col_start,
            col_row,
            col_val,
            logical_row: (0..m).collect(),
            logical_val: vec![-1.0; m],
            lower,
            upper,
            cost,
            row_of,
        })
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        if j < self.n {
            let r = self.col_start[j]..self.col_start[j + 1];
            (&self.col_row[r.clone()], &self.col_val[r])
        } else {
            let i = j - self.n;
            (&self.logical_row[i..i + 1], &self.logical_val[i..i + 1])
        }
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|q| self.col_val[q] * y[self.col_row[q]])
                .sum()
        } else {
            -y[j - self.n]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Feasibility,
    Optimality,
}

struct Solver {
    model: Model,
    tol: ToleranceSettings,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    factor: BasisFactor,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    // Candidates whose column proved numerically useless since the last pivot.
    rejected: Vec<usize>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    phase_cost: Vec<f64>,
}

impl Solver {
    fn new(model: Model, tol: ToleranceSettings, start: Option<&Basis>) -> Self {
        let (n, m) = (model.n, model.m);
        let factor = BasisFactor::factorize(m, |p| model.column(n + p))
            .expect("the logical basis is nonsingular");
        let mut s = Solver {
            state: vec![VarState::AtLower; n + m],
            x: vec![0.0; n + m],
            basis: (n..n + m).collect(),
            model,
            tol,
            factor,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            rejected: Vec::new(),
            y: vec![0.0; m],
            alpha: vec![0.0; m],
            phase_cost: vec![0.0; m],
        };
        let mut wanted = vec![BasisStatus::AtLower; n + m];
        match start {
            Some(b) => {
                wanted[..n].copy_from_slice(&b.columns);
                for (c, r) in b.rows.iter().zip(&s.model.row_of) {
                    if let Some(i) = *r {
                        wanted[n + i] = *c;
                    }
                }
            }
            None => wanted[n..].fill(BasisStatus::Basic),
        }
        let mut basis: Vec<usize> = (0..n + m).filter(|&j| wanted[j] == BasisStatus::Basic).collect();
        if basis.len() > m {
            // Keep structurals, drop surplus logicals from the back.
            basis.truncate(m);
        }
        let mut in_basis = vec![false; n + m];
        basis.iter().for_each(|&j| in_basis[j] = true);
        for i in 0..m {
            if basis.len() == m {
                break;
            }
            if !in_basis[n + i] {
                in_basis[n + i] = true;
                basis.push(n + i);
            }
        }
        for j in 0..n + m {
            let (l, u) = (s.model.lower[j], s.model.upper[j]);
            s.state[j] = match (wanted[j], l.is_finite(), u.is_finite()) {
                (BasisStatus::AtUpper, _, true) | (_, false, true) => VarState::AtUpper,
                (_, true, _) => VarState::AtLower,
                _ => VarState::Free,
            };
            s.x[j] = s.nonbasic_value(j);
        }
        for (p, &j) in basis.iter().enumerate() {
            s.state[j] = VarState::Basic(p);
        }
        s.basis = basis;
        s.refactor();
        s
    }

    fn export_basis(&self) -> Basis {
        let status = |j: usize| match self.state[j] {
            VarState::Basic(_) => BasisStatus::Basic,
            VarState::AtUpper => BasisStatus::AtUpper,
            VarState::AtLower | VarState::Free => BasisStatus::AtLower,
        };
        Basis {
            columns: (0..self.model.n).map(status).collect(),
            rows: self
                .model
                .row_of
                .iter()
                .map(|r| r.map_or(BasisStatus::Basic, |i| status(self.model.n + i)))
                .collect(),
        }
    }

    fn primal_values(&self) -> Vec<f64> {
        (0..self.model.n)
            .map(|j| self.x[j].clamp(self.model.lower[j], self.model.upper[j]))
            .collect()
    }

    fn bound_tol(&self, b: f64) -> f64 {
        self.tol.feasibility * b.abs().max(1.0)
    }

    /// Rebuilds the factorization from scratch, repairing singular bases
    /// with logical columns.
    fn refactor(&mut self) {
        loop {
            let model = &self.model;
            let basis = &self.basis;
            match BasisFactor::factorize(model.m, |p| model.column(basis[p])) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        let logical = self.model.n + row;
                        self.state[out] = self.nonbasic_state(out);
                        self.x[out] = self.nonbasic_value(out);
                        self.basis[pos] = logical;
                        self.state[logical] = VarState::Basic(pos);
                    }
                }
            }
        }
        self.recompute_basics();
    }

    fn nonbasic_state(&self, j: usize) -> VarState {
        let (l, u, v) = (self.model.lower[j], self.model.upper[j], self.x[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (v - l).abs() <= (v - u).abs() {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                }
            }
            (true, false) => VarState::AtLower,
            (false, true) => VarState::AtUpper,
            (false, false) => VarState::Free,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.model.lower[j],
            VarState::AtUpper => self.model.upper[j],
            _ => 0.0,
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.model.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.model.n + m {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            let (idx, val) = self.model.column(j);
            for (&i, &a) in idx.iter().zip(val) {
                rhs[i] -= a * v;
            }
        }
        self.factor.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    /// Sets phase costs for the basic variables and reports the phase.
    fn classify(&mut self) -> Phase {
        let mut infeasible = false;
        for (p, &j) in self.basis.iter().enumerate() {
            let (l, u, v) = (self.model.lower[j], self.model.upper[j], self.x[j]);
            self.phase_cost[p] = if v < l - self.bound_tol(l) {
                infeasible = true;
                -1.0
            } else if v > u + self.bound_tol(u) {
                infeasible = true;
                1.0
            } else {
                0.0
            };
        }
        if infeasible {
            Phase::Feasibility
        } else {
            for (p, &j) in self.basis.iter().enumerate() {
                self.phase_cost[p] = self.model.cost[j];
            }
            Phase::Optimality
        }
    }

    /// Returns the entering column and whether it increases.
    fn price(&self, phase: Phase) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, f64)> = None;
        let opt_tol = self.tol.optimality;
        for j in 0..self.model.n + self.model.m {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.model.lower[j] == self.model.upper[j] {
                continue;
            }
            let c = match phase {
                Phase::Feasibility => 0.0,
                Phase::Optimality => self.model.cost[j],
            };
            let d = c - self.model.dot(j, &self.y);
            let dir = match st {
                VarState::AtLower if d < -opt_tol => true,
                VarState::AtUpper if d > opt_tol => false,
                VarState::Free if d.abs() > opt_tol => d < 0.0,
                _ => continue,
            };
            if self.rejected.contains(&j) {
                continue;
            }
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| d.abs() > s) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Bounds a basic variable must respect while moving in the given phase.
    fn moving_bounds(&self, j: usize, phase: Phase) -> (f64, f64) {
        let (l, u, v) = (self.model.lower[j], self.model.upper[j], self.x[j]);
        if phase == Phase::Feasibility {
            if v < l - self.bound_tol(l) {
                return (f64::NEG_INFINITY, l);
            }
            if v > u + self.bound_tol(u) {
                return (u, f64::INFINITY);
            }
        }
        (l, u)
    }

    /// Two-pass Harris ratio test (plain minimum ratio under Bland's rule).
    /// Returns the leaving position with the bound it reaches, and the step.
    fn ratio_test(&self, increasing: bool, phase: Phase) -> (Option<(usize, f64)>, f64) {
        let sign = if increasing { 1.0 } else { -1.0 };
        let piv = self.tol.pivot;
        let mut bound_step = f64::INFINITY;
        for (p, &j) in self.basis.iter().enumerate() {
            let a = self.alpha[p];
            if a.abs() <= piv {
                continue;
            }
            let rate = -sign * a;
            let (lo, hi) = self.moving_bounds(j, phase);
            let v = self.x[j];
            let relaxed = if rate > 0.0 {
                if !hi.is_finite() {
                    continue;
                }
                (hi - v + self.bound_tol(hi)) / rate
            } else {
                if !lo.is_finite() {
                    continue;
                }
                (v - lo + self.bound_tol(lo)) / -rate
            };
            bound_step = bound_step.min(relaxed);
        }
        if !bound_step.is_finite() {
            return (None, f64::INFINITY);
        }

        let mut chosen: Option<(usize, f64, f64, f64)> = None; // (pos, bound, step, |alpha|)
        let mut min_step = f64::INFINITY;
        for (p, &j) in self.basis.iter().enumerate() {
            let a = self.alpha[p];
            if a.abs() <= piv {
                continue;
            }
            let rate = -sign * a;
            let (lo, hi) = self.moving_bounds(j, phase);
            let v = self.x[j];
            let (bound, step) = if rate > 0.0 {
                if !hi.is_finite() {
                    continue;
                }
                (hi, (hi - v) / rate)
            } else {
                if !lo.is_finite() {
                    continue;
                }
                (lo, (v - lo) / -rate)
            };
            let step = step.max(0.0);
            if self.bland {
                let better = match chosen {
                    None => true,
                    Some((cp, _, cs, _)) => {
                        step < cs - DEGENERATE_STEP
                            || (step <= cs + DEGENERATE_STEP && j < self.basis[cp])
                    }
                };
                if better {
                    chosen = Some((p, bound, step, a.abs()));
                }
                min_step = min_step.min(step);
            } else if step <= bound_step {
                let better = match chosen {
                    None => true,
                    Some((_, _, _, ca)) => a.abs() > ca,
                };
                if better {
                    chosen = Some((p, bound, step, a.abs()));
                }
            }
        }
        match chosen {
            Some((p, bound, step, _)) => (Some((p, bound)), step),
            None => (None, f64::INFINITY),
        }
    }

    fn run(&mut self) -> LpStatus {
        let cap = self.tol.iteration_factor * (self.model.n + self.model.m).max(1);
        let m = self.model.m;
        loop {
            if self.iterations >= cap {
                return LpStatus::IterationLimit;
            }
            if self.factor.num_etas() >= REFACTOR_INTERVAL
                || self.factor.eta_nnz() > 4 * self.factor.factor_nnz() + 10 * m
            {
                self.refactor();
            }

            let phase = self.classify();
            self.y.copy_from_slice(&self.phase_cost);
            self.factor.btran(&mut self.y);

            let Some((q, increasing)) = self.price(phase) else {
                if self.factor.num_etas() > 0 || !self.rejected.is_empty() {
                    self.rejected.clear();
                    self.refactor();
                    continue;
                }
                return match phase {
                    Phase::Feasibility => LpStatus::Infeasible,
                    Phase::Optimality => LpStatus::Optimal,
                };
            };

            self.alpha.iter_mut().for_each(|a| *a = 0.0);
            {
                let (idx, val) = self.model.column(q);
                for (&i, &a) in idx.iter().zip(val) {
                    self.alpha[i] = a;
                }
            }
            self.factor.ftran(&mut self.alpha);

            let (leave, mut step) = self.ratio_test(increasing, phase);
            let range = self.model.upper[q] - self.model.lower[q];
            let flip = range.is_finite() && range <= step;
            if flip {
                step = range;
            }
            if leave.is_none() && !flip {
                if phase == Phase::Optimality {
                    return LpStatus::Unbounded;
                }
                self.rejected.push(q);
                continue;
            }

            self.iterations += 1;
            let delta = if increasing { step } else { -step };
            if delta != 0.0 {
                for (p, &j) in self.basis.iter().enumerate() {
                    self.x[j] -= delta * self.alpha[p];
                }
                self.x[q] += delta;
            }
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.tol.degenerate_limit {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            self.rejected.clear();

            if flip {
                self.state[q] = if increasing {
                    self.x[q] = self.model.upper[q];
                    VarState::AtUpper
                } else {
                    self.x[q] = self.model.lower[q];
                    VarState::AtLower
                };
                continue;
            }

            let (p, bound) = leave.expect("checked above");
            let out = self.basis[p];
            self.x[out] = bound;
            self.state[out] = if bound == self.model.lower[out] {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            self.basis[p] = q;
            self.state[q] = VarState::Basic(p);
            self.factor.push_eta(p, &self.alpha);
        }
    }
}
