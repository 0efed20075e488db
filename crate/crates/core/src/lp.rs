//! Dense two-phase primal simplex for small linear programs.
//!
//! Solves `minimize c^T v` subject to `A v <= b`, `E v = d` and per-variable
//! bounds `lo <= v <= hi` (either side may be infinite). Bounds are handled
//! by the bounded-variable simplex (nonbasic variables sit at either bound),
//! so box constraints do not add rows. Pivoting always follows Bland's rule:
//! the entering variable is the lowest-index improving column and ratio ties
//! leave the lowest-index basic variable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
pub const TOLERANCE: f64 = 1e-9;
pub const MAX_PIVOTS: usize = 1_000_000;
/// Minimum pivots between rebuilds of the tableau from the original rows. A
/// rebuild costs about as much as `rows` pivots, so larger programs wait longer.
const REFACTOR_INTERVAL: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Rows of `A` in `A v <= b`.
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    /// Rows of `E` in `E v = d`.
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Minimise `objective` with every variable bounded to `[0, inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(Error::Input(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::Input("constraint rows and right-hand sides differ in count".into()));
        }
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(Error::Input(format!("constraint row of length {} for {n} variables", row.len())));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.a_ub.iter().flatten())
            .chain(self.a_eq.iter().flatten())
            .chain(&self.b_ub)
            .chain(&self.b_eq)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input("linear program has non-finite coefficients".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Input(format!("invalid bounds [{lo}, {hi}] on variable {j}")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any constraint or bound at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>();
        let ub = self.a_ub.iter().zip(&self.b_ub).map(|(r, b)| (dot(r) - b).max(0.0));
        let eq = self.a_eq.iter().zip(&self.b_eq).map(|(r, d)| (dot(r) - d).abs());
        let bounds = self.bounds.iter().zip(v).map(|(&(lo, hi), &x)| (lo - x).max(x - hi).max(0.0));
        ub.chain(eq).chain(bounds).fold(0.0, f64::max)
    }

    /// Lagrangian dual objective of `duals` (inequality rows first, then
    /// equality rows). Never exceeds the primal optimum.
    pub fn dual_objective(&self, duals: &[f64]) -> f64 {
        let n = self.n_vars();
        let rows: Vec<(&Vec<f64>, f64)> = self
            .a_ub
            .iter()
            .zip(self.b_ub.iter().copied())
            .chain(self.a_eq.iter().zip(self.b_eq.iter().copied()))
            .collect();
        let mut value: f64 = rows.iter().zip(duals).map(|((_, b), y)| b * y).sum();
        for j in 0..n {
            let reduced = self.objective[j] - rows.iter().zip(duals).map(|((r, _), y)| r[j] * y).sum::<f64>();
            let (lo, hi) = self.bounds[j];
            if reduced > TOLERANCE {
                value += reduced * lo;
            } else if reduced < -TOLERANCE {
                value += reduced * hi;
            }
        }
        value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Multipliers of the inequality rows followed by the equality rows, with
    /// `c - A^T y` the reduced costs (so `y <= 0` on `<=` rows).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// How an original variable is expressed through internal nonnegative columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `v = offset + sign * col`.
    Single { col: usize, offset: f64, sign: f64 },
    /// `v = pos - neg`.
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `B^-1 A`, row-major.
    t: Vec<f64>,
    /// Values of the basic variables.
    x_b: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    pivots: usize,
    /// The initial tableau and right-hand side, kept for refactorisation.
    a0: Vec<f64>,
    b0: Vec<f64>,
    since_refactor: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Basic(r) => self.x_b[r],
            Status::AtLower => 0.0,
            Status::AtUpper => self.upper[j],
        }
    }

    fn reset_reduced_costs(&mut self) {
        let mut reduced = self.cost.clone();
        for r in 0..self.rows {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (d, a) in reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        self.reduced = reduced;
    }

    fn objective(&self) -> f64 {
        (0..self.cols).map(|j| self.cost[j] * self.value(j)).sum()
    }

    /// Recomputes `B^-1 A`, the basic values and the reduced costs from the
    /// original rows, discarding rounding error accumulated by pivoting.
    fn refactor(&mut self) {
        let (m, n) = (self.rows, self.cols);
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let b = DMatrix::from_fn(m, m, |i, r| self.a0[i * n + self.basis[r]]);
        let lu = b.lu();
        let a = DMatrix::from_fn(m, n, |i, j| self.a0[i * n + j]);
        let mut rhs = DVector::from_column_slice(&self.b0);
        for j in 0..n {
            if self.status[j] == Status::AtUpper {
                for i in 0..m {
                    rhs[i] -= self.a0[i * n + j] * self.upper[j];
                }
            }
        }
        let (Some(t), Some(x_b)) = (lu.solve(&a), lu.solve(&rhs)) else {
            return;
        };
        for i in 0..m {
            for j in 0..n {
                self.t[i * n + j] = t[(i, j)];
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * n + j] = f64::from(u8::from(i == r));
            }
        }
        self.x_b = x_b.iter().copied().collect();
        self.reset_reduced_costs();
    }

    /// Runs Bland-rule pivots until no improving column remains.
    fn optimise(&mut self) -> Result<Outcome> {
        loop {
            if self.since_refactor >= REFACTOR_INTERVAL.max(self.rows) {
                self.refactor();
            }
            let entering = (0..self.cols).find(|&j| match self.status[j] {
                Status::Basic(_) => false,
                Status::AtLower => self.reduced[j] < -TOLERANCE && self.upper[j] > 0.0,
                Status::AtUpper => self.reduced[j] > TOLERANCE && self.upper[j] > 0.0,
            });
            let Some(j) = entering else {
                if self.since_refactor > 0 {
                    // Confirm optimality on a freshly rebuilt tableau.
                    self.refactor();
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::Solver(format!("pivot limit of {MAX_PIVOTS} exceeded")));
            }
            let dir = if self.status[j] == Status::AtLower { 1.0 } else { -1.0 };

            // Ratio test: (step, leaving row, leaving variable goes to upper).
            let mut best: Option<(f64, usize, bool)> = None;
            for r in 0..self.rows {
                let alpha = dir * self.t[r * self.cols + j];
                let var = self.basis[r];
                let candidate = if alpha > TOLERANCE {
                    Some(((self.x_b[r] / alpha).max(0.0), false))
                } else if alpha < -TOLERANCE && self.upper[var].is_finite() {
                    Some((((self.upper[var] - self.x_b[r]) / -alpha).max(0.0), true))
                } else {
                    None
                };
                if let Some((step, to_upper)) = candidate {
                    let better = match best {
                        None => true,
                        Some((b, br, _)) => step < b - 1e-12 || (step <= b + 1e-12 && var < self.basis[br]),
                    };
                    if better {
                        best = Some((step, r, to_upper));
                    }
                }
            }
            let flip = self.upper[j];
            match best {
                None if flip.is_infinite() => return Ok(Outcome::Unbounded),
                Some((step, _, _)) if step < flip - 1e-12 => {}
                _ => {
                    // Bound flip: the entering variable crosses to its other bound.
                    for r in 0..self.rows {
                        self.x_b[r] -= dir * flip * self.t[r * self.cols + j];
                    }
                    self.status[j] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                    self.pivots += 1;
                    self.since_refactor += 1;
                    continue;
                }
            }
            let (step, r, to_upper) = best.unwrap();
            for i in 0..self.rows {
                self.x_b[i] -= dir * step * self.t[i * self.cols + j];
            }
            let entering_value = if dir > 0.0 { step } else { self.upper[j] - step };
            let leaving = self.basis[r];
            self.status[leaving] = if to_upper { Status::AtUpper } else { Status::AtLower };
            self.pivot(r, j);
            self.x_b[r] = entering_value;
            self.basis[r] = j;
            self.status[j] = Status::Basic(r);
            self.pivots += 1;
            self.since_refactor += 1;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.t[r * cols + j];
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for v in pivot_row.iter_mut() {
            *v /= p;
        }
        pivot_row[j] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * b;
                }
                row[j] = 0.0;
            }
        };
        before.chunks_exact_mut(cols).for_each(eliminate);
        after.chunks_exact_mut(cols).for_each(eliminate);
        let f = self.reduced[j];
        if f != 0.0 {
            for (d, b) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *d -= f * b;
            }
            self.reduced[j] = 0.0;
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let n_ub = lp.a_ub.len();
    let n_rows = n_ub + lp.a_eq.len();

    let infeasible = |pivots| LpSolution {
        status: LpStatus::Infeasible,
        values: vec![0.0; n],
        objective_value: f64::NAN,
        duals: vec![0.0; n_rows],
        pivots,
    };
    if lp.bounds.iter().any(|&(lo, hi)| hi < lo) {
        return Ok(infeasible(0));
    }

    // Structural columns with lower bound zero.
    let mut maps = Vec::with_capacity(n);
    let mut upper = Vec::new();
    let mut cost = Vec::new();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let c = lp.objective[j];
        if lo.is_finite() {
            maps.push(VarMap::Single { col: upper.len(), offset: lo, sign: 1.0 });
            upper.push(hi - lo);
            cost.push(c);
        } else if hi.is_finite() {
            maps.push(VarMap::Single { col: upper.len(), offset: hi, sign: -1.0 });
            upper.push(f64::INFINITY);
            cost.push(-c);
        } else {
            maps.push(VarMap::Split { pos: upper.len(), neg: upper.len() + 1 });
            upper.extend([f64::INFINITY, f64::INFINITY]);
            cost.extend([c, -c]);
        }
    }
    let n_struct = upper.len();

    // Rows with constant offsets moved to the right-hand side.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_rows);
    let mut rhs = Vec::with_capacity(n_rows);
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub).chain(lp.a_eq.iter().zip(&lp.b_eq)) {
        let mut internal = vec![0.0; n_struct];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            match maps[j] {
                VarMap::Single { col, offset, sign } => {
                    internal[col] += sign * a;
                    shift += a * offset;
                }
                VarMap::Split { pos, neg } => {
                    internal[pos] += a;
                    internal[neg] -= a;
                }
            }
        }
        rows.push(internal);
        rhs.push(b - shift);
    }

    // Slack for each inequality row, then one artificial per row that lacks
    // a +1 slack after the sign fix.
    let sign: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let slack_col = |i: usize| n_struct + i;
    let mut identity_col = vec![0usize; n_rows];
    let mut artificial_rows = Vec::new();
    for i in 0..n_rows {
        if i < n_ub && sign[i] > 0.0 {
            identity_col[i] = slack_col(i);
        } else {
            identity_col[i] = n_struct + n_ub + artificial_rows.len();
            artificial_rows.push(i);
        }
    }
    let n_art = artificial_rows.len();
    let cols = n_struct + n_ub + n_art;
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_ub + n_art));

    let mut t = vec![0.0; n_rows * cols];
    for i in 0..n_rows {
        let line = &mut t[i * cols..(i + 1) * cols];
        for (k, &a) in rows[i].iter().enumerate() {
            line[k] = sign[i] * a;
        }
        if i < n_ub {
            line[slack_col(i)] = sign[i];
        }
        line[identity_col[i]] = 1.0;
    }
    let mut status = vec![Status::AtLower; cols];
    for (i, &c) in identity_col.iter().enumerate() {
        status[c] = Status::Basic(i);
    }

    let mut phase1_cost = vec![0.0; cols];
    for k in 0..n_art {
        phase1_cost[n_struct + n_ub + k] = 1.0;
    }
    let b0: Vec<f64> = rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
    let mut tab = Tableau {
        rows: n_rows,
        cols,
        a0: t.clone(),
        t,
        x_b: b0.clone(),
        b0,
        since_refactor: 0,
        basis: identity_col.clone(),
        status,
        upper,
        cost: phase1_cost,
        reduced: Vec::new(),
        pivots: 0,
    };

    if n_art > 0 {
        tab.reset_reduced_costs();
        tab.optimise()?;
        let scale = rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        if tab.objective() > TOLERANCE * scale {
            return Ok(infeasible(tab.pivots));
        }
        for k in 0..n_art {
            tab.upper[n_struct + n_ub + k] = 0.0;
        }
    }

    let mut phase2_cost = cost;
    phase2_cost.resize(cols, 0.0);
    tab.cost = phase2_cost;
    tab.reset_reduced_costs();
    let outcome = tab.optimise()?;

    let internal: Vec<f64> = (0..cols).map(|j| tab.value(j)).collect();
    let values: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Single { col, offset, sign } => offset + sign * internal[col],
            VarMap::Split { pos, neg } => internal[pos] - internal[neg],
        })
        .collect();
    let duals: Vec<f64> = (0..n_rows)
        .map(|i| {
            let c = identity_col[i];
            sign[i] * (tab.cost[c] - tab.reduced[c])
        })
        .collect();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    Ok(LpSolution {
        status,
        objective_value: match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => lp.objective_at(&values),
        },
        values,
        duals,
        pivots: tab.pivots,
    })
}
