//! Dense two-phase simplex for `min c.z  s.t.  A z = b, z >= 0`.
//!
//! Inequalities must be written with explicit slack columns by the caller.
//! Pricing is Dantzig's most-negative reduced cost; after a run of degenerate
//! pivots the solver switches to Bland's smallest-index rule, which cannot
//! cycle, and switches back once the objective strictly improves.
//!
//! Rows whose right-hand side is negative are negated. Any column that is a
//! positive multiple of a unit vector seeds the starting basis, so only the
//! remaining rows receive phase-one artificial variables.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Smallest pivot element accepted in a ratio test.
pub const PIVOT_TOL: f64 = 1e-11;
/// Feasibility tolerance, scaled by `1 + |b|_inf`.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// A reduced cost must be below `-OPTIMALITY_TOL` to enter the basis.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Variables above `-NONNEG_TOL` count as nonnegative.
pub const NONNEG_TOL: f64 = 1e-10;

const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER_DEGENERATE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex breakdown: {0}")]
    SolverFailure(String),
}

/// `min c.z  s.t.  A z = b, z >= 0` with `A` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self, LpError> {
        let (m, n) = (rhs.len(), objective.len());
        if matrix.len() != m * n {
            return Err(LpError::Dimension(format!(
                "constraint matrix has {} entries, expected {m}x{n}",
                matrix.len()
            )));
        }
        if objective.iter().any(|x| !x.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(LpError::NonFinite("constraint matrix"));
        }
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        Ok(Self {
            objective,
            matrix,
            rhs,
        })
    }

    /// Convenience constructor from a list of rows.
    pub fn from_rows(objective: Vec<f64>, rows: &[Vec<f64>], rhs: Vec<f64>) -> Result<Self, LpError> {
        let n = objective.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(LpError::Dimension(format!("row of length {} with {n} variables", r.len())));
        }
        Self::new(objective, rows.concat(), rhs)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn coefficient(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.num_vars() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.num_vars();
        &self.matrix[row * n..(row + 1) * n]
    }

    /// Same constraints, objective multiplied by `k`.
    pub fn with_scaled_objective(&self, k: f64) -> Self {
        Self {
            objective: self.objective.iter().map(|c| c * k).collect(),
            ..self.clone()
        }
    }

    /// `|A z - b|_inf`.
    pub fn residual(&self, z: &[f64]) -> f64 {
        (0..self.num_constraints())
            .map(|i| {
                let lhs: f64 = self.row(i).iter().zip(z).map(|(a, x)| a * x).sum();
                (lhs - self.rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn rhs_scale(&self) -> f64 {
        1.0 + self.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()))
    }

    /// True if `z` satisfies the constraints within the solver's tolerances.
    pub fn is_feasible(&self, z: &[f64]) -> bool {
        z.len() == self.num_vars()
            && z.iter().all(|&x| x >= -NONNEG_TOL)
            && self.residual(z) <= FEASIBILITY_TOL * self.rhs_scale()
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, x)| c * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Meaningful only when `status` is optimal.
    pub objective_value: f64,
    /// Empty unless optimal.
    pub variables: Vec<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            objective_value: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
            variables: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    width: usize,
    /// rows x (cols + 1); the last entry of each row is the basic variable's value
    data: Vec<f64>,
    /// reduced costs, one per column
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// original constraint index of each tableau row
    origin: Vec<usize>,
    num_structural: usize,
    pricing: Pricing,
    degenerate_run: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn cols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn value(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.at(r, j);
        let (before, rest) = self.data.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for x in pivot_row.iter_mut() {
            *x /= p;
        }
        pivot_row[j] = 1.0;
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[j];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * y;
                }
                row[j] = 0.0;
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (x, &y) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *x -= f * y;
            }
            self.cost[j] = 0.0;
        }
        self.basis[r] = j;
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.origin.remove(r);
    }

    /// Sets reduced costs for column costs `c` (indexed by column; missing = 0).
    fn price_out(&mut self, c: impl Fn(usize) -> f64) {
        let n = self.cols();
        let mut cost: Vec<f64> = (0..n).map(&c).collect();
        for i in 0..self.rows() {
            let cb = c(self.basis[i]);
            if cb != 0.0 {
                let row = &self.data[i * self.width..i * self.width + n];
                for (d, &a) in cost.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        self.cost = cost;
    }

    fn entering(&self, allowed: usize) -> Option<usize> {
        match self.pricing {
            Pricing::Bland => (0..allowed).find(|&j| self.cost[j] < -OPTIMALITY_TOL),
            Pricing::Dantzig => {
                let mut best = None;
                let mut best_cost = -OPTIMALITY_TOL;
                for j in 0..allowed {
                    if self.cost[j] < best_cost {
                        best_cost = self.cost[j];
                        best = Some(j);
                    }
                }
                best
            }
        }
    }

    fn leaving(&self, j: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows() {
            let a = self.at(i, j);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.value(i).max(0.0) / a;
            best = match best {
                None => Some((i, ratio, a)),
                Some((bi, br, ba)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        match self.pricing {
                            Pricing::Bland => self.basis[i] < self.basis[bi],
                            Pricing::Dantzig => a > ba,
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio, a))
                    } else {
                        Some((bi, br, ba))
                    }
                }
            };
        }
        best.map(|(i, r, _)| (i, r))
    }

    /// Runs simplex iterations over columns `0..allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<Outcome, LpError> {
        loop {
            let Some(j) = self.entering(allowed) else {
                return Ok(Outcome::Optimal);
            };
            let Some((r, step)) = self.leaving(j) else {
                return Ok(Outcome::Unbounded);
            };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::SolverFailure(format!(
                    "no convergence after {} pivots",
                    self.max_iterations
                )));
            }
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run >= BLAND_AFTER_DEGENERATE {
                    self.pricing = Pricing::Bland;
                }
            } else {
                self.degenerate_run = 0;
                self.pricing = Pricing::Dantzig;
            }
            self.pivot(r, j);
        }
    }
}

/// Solves the problem with the two-phase simplex method.
///
/// An `Optimal` status is only returned after the point has been re-checked
/// against the original constraints; a point failing that check is reported
/// as [`LpError::SolverFailure`].
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let m = problem.num_constraints();
    let n = problem.num_vars();

    // Normalized rows (nonnegative rhs) and a crash basis from unit columns.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if problem.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        rows.push(problem.row(i).iter().map(|a| sign * a).collect());
        rhs.push(sign * problem.rhs[i]);
    }
    let mut basis: Vec<Option<usize>> = vec![None; m];
    for j in 0..n {
        let mut hit = None;
        let mut count = 0;
        for (i, row) in rows.iter().enumerate() {
            if row[j] != 0.0 {
                count += 1;
                hit = Some(i);
                if count > 1 {
                    break;
                }
            }
        }
        if let (1, Some(i)) = (count, hit) {
            if basis[i].is_none() && rows[i][j] > 0.0 {
                let s = rows[i][j];
                for a in rows[i].iter_mut() {
                    *a /= s;
                }
                rows[i][j] = 1.0;
                rhs[i] /= s;
                basis[i] = Some(j);
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i].is_none()).collect();
    let num_art = artificial_rows.len();
    let cols = n + num_art;
    let width = cols + 1;
    let mut data = vec![0.0; m * width];
    for i in 0..m {
        data[i * width..i * width + n].copy_from_slice(&rows[i]);
        data[i * width + cols] = rhs[i];
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        data[i * width + n + k] = 1.0;
        basis[i] = Some(n + k);
    }
    let mut t = Tableau {
        width,
        data,
        cost: vec![0.0; cols],
        basis: basis.into_iter().map(|b| b.expect("every row has a basic column")).collect(),
        origin: (0..m).collect(),
        num_structural: n,
        pricing: Pricing::Dantzig,
        degenerate_run: 0,
        iterations: 0,
        max_iterations: 50 * (m + cols) + 1000,
    };

    if num_art > 0 {
        t.price_out(|j| if j >= n { 1.0 } else { 0.0 });
        match t.optimize(cols)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(LpError::SolverFailure("phase one reported unbounded".into()));
            }
        }
        let infeasibility: f64 = (0..t.rows())
            .filter(|&i| t.basis[i] >= n)
            .map(|i| t.value(i).max(0.0))
            .sum();
        if infeasibility > FEASIBILITY_TOL * problem.rhs_scale() {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        // Drive remaining (zero-valued) artificials out, dropping redundant rows.
        let mut i = 0;
        while i < t.rows() {
            if t.basis[i] < n {
                i += 1;
                continue;
            }
            let candidate = (0..n)
                .filter(|&j| !t.basis.contains(&j))
                .map(|j| (j, t.at(i, j).abs()))
                .filter(|&(_, a)| a > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match candidate {
                Some((j, _)) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => t.remove_row(i),
            }
        }
        t.pricing = Pricing::Dantzig;
        t.degenerate_run = 0;
    }

    let objective = problem.objective();
    t.price_out(|j| if j < n { objective[j] } else { 0.0 });
    if let Outcome::Unbounded = t.optimize(t.num_structural)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let z = extract_point(problem, &t);
    if !problem.is_feasible(&z) {
        return Err(LpError::SolverFailure(format!(
            "optimal basis violates constraints (residual {:.3e})",
            problem.residual(&z)
        )));
    }
    let z: Vec<f64> = z.into_iter().map(|x| x.max(0.0)).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: problem.evaluate(&z),
        variables: z,
    })
}

/// Basic solution of the final basis, re-solved from the original data with an
/// LU factorization when that is well-posed; tableau values otherwise.
fn extract_point(problem: &LpProblem, t: &Tableau) -> Vec<f64> {
    let n = problem.num_vars();
    let mut z = vec![0.0; n];
    for i in 0..t.rows() {
        z[t.basis[i]] = t.value(i);
    }
    let k = t.rows();
    if k == 0 {
        return z;
    }
    let b_mat = DMatrix::from_fn(k, k, |r, c| problem.coefficient(t.origin[r], t.basis[c]));
    let b_vec = DVector::from_fn(k, |r, _| problem.rhs[t.origin[r]]);
    if let Some(sol) = b_mat.lu().solve(&b_vec) {
        let close = (0..k).all(|c| (sol[c] - z[t.basis[c]]).abs() <= 1e-6);
        if close && sol.iter().all(|&x| x >= -NONNEG_TOL && x.is_finite()) {
            for c in 0..k {
                z[t.basis[c]] = sol[c];
            }
        }
    }
    z
}
