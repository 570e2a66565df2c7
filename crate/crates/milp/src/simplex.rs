//! Bounded revised primal simplex for LP relaxations.
//!
//! Rows are turned into equalities `A x - r = 0` with one bounded logical
//! variable `r` per row. The matrix is scaled by iterated geometric means
//! (rounded to powers of two). Phase 1 minimizes the sum of infeasibilities;
//! both phases use a Harris two-pass ratio test and Dantzig pricing, and
//! switch to Bland's rule after a long run of degenerate pivots.

use std::time::Instant;

use crate::error::MilpError;
use crate::lu::{Factorization, SparseVec};
use crate::model::{MilpModel, Sense};

#[derive(Clone, Debug)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub bland_after: usize,
    pub max_iterations: Option<usize>,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 100,
            bland_after: 1000,
            max_iterations: None,
            deadline: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration or time limit reached before a verdict.
    Limit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values in model order (meaningful when optimal).
    pub values: Vec<f64>,
    /// Model objective (maximized) at `values`.
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    Lower,
    Upper,
    Free,
}

/// Basis snapshot used to warm-start a related solve.
#[derive(Clone, Debug)]
pub struct Basis {
    head: Vec<usize>,
    state: Vec<VarState>,
}

/// Solves the LP relaxation of `model` with default options.
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, MilpError> {
    let lp = ScaledLp::new(model);
    let (lo, hi) = model_bounds(model);
    let (sol, _) = lp.solve(model, &lo, &hi, None, &LpOptions::default())?;
    Ok(sol)
}

pub(crate) fn model_bounds(model: &MilpModel) -> (Vec<f64>, Vec<f64>) {
    model
        .variables()
        .iter()
        .map(|v| (v.lower, v.upper))
        .unzip()
}

/// Scaled, column-major copy of a model's constraint matrix.
#[derive(Debug)]
pub(crate) struct ScaledLp {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    col_scale: Vec<f64>,
    cost: Vec<f64>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
}

fn pow2_round(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        1.0
    } else {
        2f64.powi(x.log2().round() as i32)
    }
}

impl ScaledLp {
    pub fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();

        // Merge duplicate entries per row and build column-major storage.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (i, c) in model.constraints().iter().enumerate() {
            let mut row: Vec<(usize, f64)> = c.coeffs.iter().map(|&(v, a)| (v.0, a)).collect();
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut a = 0.0;
                while k < row.len() && row[k].0 == j {
                    a += row[k].1;
                    k += 1;
                }
                if a != 0.0 {
                    triplets.push((j, i, a));
                }
            }
        }
        triplets.sort_by_key(|&(j, i, _)| (j, i));
        let mut col_start = vec![0usize; n + 1];
        for &(j, _, _) in &triplets {
            col_start[j + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let col_row: Vec<usize> = triplets.iter().map(|t| t.1).collect();
        let mut col_val: Vec<f64> = triplets.iter().map(|t| t.2).collect();

        // Iterated geometric-mean scaling.
        let mut row_scale = vec![1.0f64; m];
        let mut col_scale = vec![1.0f64; n];
        for _ in 0..6 {
            let mut rmin = vec![f64::INFINITY; m];
            let mut rmax = vec![0.0f64; m];
            for j in 0..n {
                for e in col_start[j]..col_start[j + 1] {
                    let i = col_row[e];
                    let a = (col_val[e] * row_scale[i] * col_scale[j]).abs();
                    rmin[i] = rmin[i].min(a);
                    rmax[i] = rmax[i].max(a);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    row_scale[i] /= (rmin[i] * rmax[i]).sqrt();
                }
            }
            for j in 0..n {
                let (mut cmin, mut cmax) = (f64::INFINITY, 0.0f64);
                for e in col_start[j]..col_start[j + 1] {
                    let a = (col_val[e] * row_scale[col_row[e]] * col_scale[j]).abs();
                    cmin = cmin.min(a);
                    cmax = cmax.max(a);
                }
                if cmax > 0.0 {
                    col_scale[j] /= (cmin * cmax).sqrt();
                }
            }
        }
        for s in row_scale.iter_mut().chain(col_scale.iter_mut()) {
            *s = pow2_round(*s);
        }
        for j in 0..n {
            for e in col_start[j]..col_start[j + 1] {
                col_val[e] *= row_scale[col_row[e]] * col_scale[j];
            }
        }

        // Internal problem minimizes; costs are normalized to unit magnitude.
        let mut cost: Vec<f64> = model
            .objective()
            .iter()
            .zip(&col_scale)
            .map(|(c, s)| -c * s)
            .collect();
        let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if cmax > 0.0 {
            let k = pow2_round(1.0 / cmax);
            cost.iter_mut().for_each(|c| *c *= k);
        }

        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        for (i, c) in model.constraints().iter().enumerate() {
            let r = c.rhs * row_scale[i];
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, r),
                Sense::Ge => (r, f64::INFINITY),
                Sense::Eq => (r, r),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }

        Self {
            n,
            m,
            col_start,
            col_row,
            col_val,
            col_scale,
            cost,
            row_lo,
            row_hi,
        }
    }

    /// Solves with structural bounds `lo`/`hi` (unscaled, model order).
    pub fn solve(
        &self,
        model: &MilpModel,
        lo: &[f64],
        hi: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> Result<(LpSolution, Basis), MilpError> {
        let mut s = Simplex::new(self, lo, hi, warm, opts);
        let status = s.run()?;
        let values: Vec<f64> = (0..self.n)
            .map(|j| {
                let v = s.x[j] * self.col_scale[j];
                // Nonbasic variables sit exactly on their original bounds.
                match s.state[j] {
                    VarState::Lower => lo[j],
                    VarState::Upper => hi[j],
                    _ => v,
                }
            })
            .collect();
        let objective = model.evaluate_objective(&values);
        let basis = Basis {
            head: s.head.clone(),
            state: s.state.clone(),
        };
        Ok((
            LpSolution {
                status,
                values,
                objective,
                iterations: s.iterations,
            },
            basis,
        ))
    }
}

struct Simplex<'a> {
    lp: &'a ScaledLp,
    opts: &'a LpOptions,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    state: Vec<VarState>,
    factor: Factorization,
    iterations: usize,
    // Work vectors.
    rhs: Vec<f64>,
    alpha: Vec<f64>,
    cb: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(
        lp: &'a ScaledLp,
        lo_in: &[f64],
        hi_in: &[f64],
        warm: Option<&Basis>,
        opts: &'a LpOptions,
    ) -> Self {
        let (n, m) = (lp.n, lp.m);
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        for j in 0..n {
            lo.push(lo_in[j] / lp.col_scale[j]);
            hi.push(hi_in[j] / lp.col_scale[j]);
        }
        lo.extend_from_slice(&lp.row_lo);
        hi.extend_from_slice(&lp.row_hi);

        let (head, mut state) = match warm {
            Some(b) if b.head.len() == m && b.state.len() == n + m => {
                (b.head.clone(), b.state.clone())
            }
            _ => {
                let mut state = vec![VarState::Lower; n + m];
                for s in &mut state[n..] {
                    *s = VarState::Basic;
                }
                ((n..n + m).collect(), state)
            }
        };
        let mut x = vec![0.0; n + m];
        for j in 0..n + m {
            if state[j] != VarState::Basic {
                state[j] = nonbasic_state(state[j], lo[j], hi[j]);
                x[j] = nonbasic_value(state[j], lo[j], hi[j]);
            }
        }
        Self {
            lp,
            opts,
            lo,
            hi,
            x,
            head,
            state,
            factor: Factorization::default(),
            iterations: 0,
            rhs: vec![0.0; m],
            alpha: vec![0.0; m],
            cb: vec![0.0; m],
            y: vec![0.0; m],
        }
    }

    fn column(&self, j: usize) -> SparseVec {
        let mut s = SparseVec::default();
        if j < self.lp.n {
            for e in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                s.push(self.lp.col_row[e], self.lp.col_val[e]);
            }
        } else {
            s.push(j - self.lp.n, -1.0);
        }
        s
    }

    /// `y · a_j` for structural or logical column `j`.
    fn dot_column(&self, j: usize) -> f64 {
        if j < self.lp.n {
            let mut s = 0.0;
            for e in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                s += self.y[self.lp.col_row[e]] * self.lp.col_val[e];
            }
            s
        } else {
            -self.y[j - self.lp.n]
        }
    }

    fn refactor(&mut self) -> Result<(), MilpError> {
        let m = self.lp.m;
        let n = self.lp.n;
        for _ in 0..m.max(1) + 2 {
            let cols: Vec<SparseVec> = self.head.iter().map(|&j| self.column(j)).collect();
            match Factorization::new(m, &cols) {
                Ok(f) => {
                    self.factor = f;
                    return Ok(());
                }
                Err(sing) => {
                    log::debug!("singular basis, swapping {} logicals in", sing.positions.len());
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let j = self.head[p];
                        let st = if self.x[j] - self.lo[j] <= self.hi[j] - self.x[j] {
                            VarState::Lower
                        } else {
                            VarState::Upper
                        };
                        self.state[j] = nonbasic_state(st, self.lo[j], self.hi[j]);
                        self.x[j] = nonbasic_value(self.state[j], self.lo[j], self.hi[j]);
                        self.head[p] = n + r;
                        self.state[n + r] = VarState::Basic;
                    }
                }
            }
        }
        Err(MilpError::Numerical("basis repair did not converge".into()))
    }

    fn recompute_basic(&mut self) {
        let n = self.lp.n;
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for e in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                    self.rhs[self.lp.col_row[e]] -= self.lp.col_val[e] * xj;
                }
            }
        }
        for i in 0..self.lp.m {
            if self.state[n + i] != VarState::Basic {
                self.rhs[i] += self.x[n + i];
            }
        }
        let mut xb = vec![0.0; self.lp.m];
        self.factor.ftran(&mut self.rhs, &mut xb);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.lp.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn run(&mut self) -> Result<LpStatus, MilpError> {
        let (n, m) = (self.lp.n, self.lp.m);
        let ftol = self.opts.feasibility_tol;
        let dtol = self.opts.optimality_tol;
        let max_iter = self
            .opts
            .max_iterations
            .unwrap_or(50 * (n + m) + 10_000);

        self.refactor()?;
        self.recompute_basic();
        let mut fresh = true;
        let mut degenerate_run = 0usize;
        let mut bland = false;

        loop {
            if self.iterations >= max_iter {
                return Ok(LpStatus::Limit);
            }
            if self.iterations % 64 == 0 {
                if let Some(d) = self.opts.deadline {
                    if Instant::now() >= d {
                        return Ok(LpStatus::Limit);
                    }
                }
            }
            if self.factor.updates() >= self.opts.refactor_every || self.factor.is_bloated() {
                self.refactor()?;
                self.recompute_basic();
                fresh = true;
            }

            // Phase selection from the current basic values.
            let mut infeasible = false;
            for p in 0..m {
                let j = self.head[p];
                self.cb[p] = if self.x[j] < self.lo[j] - ftol {
                    infeasible = true;
                    -1.0
                } else if self.x[j] > self.hi[j] + ftol {
                    infeasible = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !infeasible {
                for p in 0..m {
                    self.cb[p] = self.cost(self.head[p]);
                }
            }
            let mut cb = std::mem::take(&mut self.cb);
            let mut y = std::mem::take(&mut self.y);
            self.factor.btran(&mut cb, &mut y);
            self.cb = cb;
            self.y = y;

            // Pricing.
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..n + m {
                let st = self.state[j];
                if st == VarState::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let c = if infeasible { 0.0 } else { self.cost(j) };
                let d = c - self.dot_column(j);
                let eligible = match st {
                    VarState::Lower => d < -dtol,
                    VarState::Upper => d > dtol,
                    VarState::Free => d.abs() > dtol,
                    VarState::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    enter = Some((j, d));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    enter = Some((j, d));
                }
            }

            let Some((q, dq)) = enter else {
                if !fresh {
                    self.refactor()?;
                    self.recompute_basic();
                    fresh = true;
                    continue;
                }
                return Ok(if infeasible {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            };

            // Entering column in basis coordinates.
            self.rhs.iter_mut().for_each(|v| *v = 0.0);
            let col = self.column(q);
            for (&i, &v) in col.idx.iter().zip(&col.val) {
                self.rhs[i] = v;
            }
            self.factor.ftran(&mut self.rhs, &mut self.alpha);

            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            // Harris pass 1: relaxed step bound.
            let mut theta_max = f64::INFINITY;
            for p in 0..m {
                let a = self.alpha[p];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let j = self.head[p];
                let delta = -dir * a;
                if let Some((_, relaxed)) = self.ratio(j, delta, ftol) {
                    theta_max = theta_max.min(relaxed);
                }
            }
            let range = self.hi[q] - self.lo[q];
            // Harris pass 2: largest pivot among the admissible ratios.
            let mut leave: Option<(usize, f64, f64)> = None;
            if theta_max.is_finite() {
                let mut best_mag = 0.0;
                let mut best_idx = usize::MAX;
                for p in 0..m {
                    let a = self.alpha[p];
                    if a.abs() <= self.opts.pivot_tol {
                        continue;
                    }
                    let j = self.head[p];
                    let delta = -dir * a;
                    if let Some((exact, _)) = self.ratio(j, delta, ftol) {
                        if exact <= theta_max {
                            let better = if bland {
                                j < best_idx
                            } else {
                                a.abs() > best_mag
                            };
                            if better {
                                best_mag = a.abs();
                                best_idx = j;
                                leave = Some((p, exact.max(0.0), delta));
                            }
                        }
                    }
                }
            }

            let flip = range.is_finite() && range <= theta_max;
            if !flip && leave.is_none() {
                if infeasible {
                    if !fresh {
                        self.refactor()?;
                        self.recompute_basic();
                        fresh = true;
                        continue;
                    }
                    return Err(MilpError::Numerical(
                        "phase 1 ray without a blocking variable".into(),
                    ));
                }
                return Ok(LpStatus::Unbounded);
            }

            self.iterations += 1;
            fresh = false;
            let theta = if flip { range } else { leave.unwrap().1 };
            if theta * dq.abs() <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > self.opts.bland_after && !bland {
                    log::debug!("switching to Bland's rule after {degenerate_run} degenerate pivots");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            if theta != 0.0 {
                for p in 0..m {
                    let a = self.alpha[p];
                    if a != 0.0 {
                        self.x[self.head[p]] -= dir * a * theta;
                    }
                }
            }
            if flip {
                self.state[q] = if dir > 0.0 {
                    VarState::Upper
                } else {
                    VarState::Lower
                };
                self.x[q] = nonbasic_value(self.state[q], self.lo[q], self.hi[q]);
                continue;
            }
            self.x[q] += dir * theta;
            let (r, _, delta) = leave.unwrap();
            let j = self.head[r];
            let to_upper = if delta > 0.0 {
                // Increasing: stops at the upper bound unless it was below.
                self.x[j] > self.lo[j] + ftol || !self.lo[j].is_finite()
            } else {
                // Decreasing: stops at the lower bound unless it was above.
                self.x[j] >= self.hi[j] - ftol && self.hi[j].is_finite()
            };
            let st = if to_upper {
                VarState::Upper
            } else {
                VarState::Lower
            };
            self.state[j] = nonbasic_state(st, self.lo[j], self.hi[j]);
            self.x[j] = nonbasic_value(self.state[j], self.lo[j], self.hi[j]);
            self.head[r] = q;
            self.state[q] = VarState::Basic;
            self.factor.update(r, &self.alpha);
        }
    }

    /// Step length at which basic variable `j`, moving at rate `delta`,
    /// reaches its blocking bound: `(exact, relaxed)`.
    fn ratio(&self, j: usize, delta: f64, ftol: f64) -> Option<(f64, f64)> {
        let x = self.x[j];
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if delta < 0.0 {
            let target = if x > hi + ftol { hi } else if x < lo - ftol { return None } else { lo };
            if !target.is_finite() {
                return None;
            }
            Some(((x - target) / -delta, (x - target + ftol) / -delta))
        } else {
            let target = if x < lo - ftol { lo } else if x > hi + ftol { return None } else { hi };
            if !target.is_finite() {
                return None;
            }
            Some(((target - x) / delta, (target - x + ftol) / delta))
        }
    }
}

fn nonbasic_state(pref: VarState, lo: f64, hi: f64) -> VarState {
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => VarState::Free,
        (true, false) => VarState::Lower,
        (false, true) => VarState::Upper,
        (true, true) => match pref {
            VarState::Upper => VarState::Upper,
            _ => VarState::Lower,
        },
    }
}

fn nonbasic_value(state: VarState, lo: f64, hi: f64) -> f64 {
    match state {
        VarState::Lower => lo,
        VarState::Upper => hi,
        _ => 0.0,
    }
}
