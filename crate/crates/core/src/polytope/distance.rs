use super::{Behavior, LocalPolytope, PolytopeError};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Distances at or below this value count as local.
pub const DEFAULT_LOCALITY_TOL: f64 = 1e-8;

/// Trace distance to the local polytope together with the closest local point.
#[derive(Clone, Debug)]
pub struct LocalityReport {
    /// `NL(q)`, in `[0, 1]`.
    pub distance: f64,
    /// Strategy weights `lambda` of the closest local behavior.
    pub weights: Vec<f64>,
}

impl LocalityReport {
    /// The closest local behavior `A lambda`.
    pub fn closest_point(&self, polytope: &LocalPolytope) -> Vec<f64> {
        polytope.combine(&self.weights)
    }
}

/// `NL(q) = min_lambda (1 / (2 n_x n_y)) sum_j |q_j - (A lambda)_j|`.
///
/// The absolute values are split as `q - A lambda = e+ - e-` with `e+, e- >= 0`,
/// giving the LP over `(lambda, e+, e-)`:
///
/// ```text
/// min  sum_j (e+_j + e-_j) / (2 n_x n_y)
/// s.t. A lambda + e+ - e- = q,   sum_i lambda_i = 1
/// ```
///
/// At an optimum `e+_j e-_j = 0`, so `e+_j + e-_j = |q_j - (A lambda)_j|`.
pub fn trace_distance_to_local(
    behavior: &Behavior,
    polytope: &LocalPolytope,
) -> Result<LocalityReport, PolytopeError> {
    let s = polytope.scenario();
    if behavior.scenario() != s {
        return Err(PolytopeError::ScenarioMismatch {
            expected: s,
            found: behavior.scenario(),
        });
    }
    let rows = s.len();
    let m = polytope.strategy_count();
    let cols = m + 2 * rows;
    let weight = 1.0 / (2.0 * s.contexts() as f64);

    let mut objective = vec![0.0; cols];
    objective[m..].fill(weight);
    let mut matrix = vec![0.0; (rows + 1) * cols];
    for i in 0..m {
        for j in polytope.support(i) {
            matrix[j * cols + i] = 1.0;
        }
        matrix[rows * cols + i] = 1.0;
    }
    for j in 0..rows {
        matrix[j * cols + m + j] = 1.0;
        matrix[j * cols + m + rows + j] = -1.0;
    }
    let mut rhs = behavior.probs().to_vec();
    rhs.push(1.0);

    let problem = LpProblem::new(objective, matrix, rhs)?;
    let solution = solve_lp(&problem)?;
    if solution.status != LpStatus::Optimal {
        return Err(PolytopeError::LpStatus(solution.status));
    }
    Ok(LocalityReport {
        distance: solution.objective_value.clamp(0.0, 1.0),
        weights: solution.variables[..m].to_vec(),
    })
}

/// `true` iff the trace distance is at most `tol`.
pub fn is_local(
    behavior: &Behavior,
    polytope: &LocalPolytope,
    tol: f64,
) -> Result<bool, PolytopeError> {
    Ok(trace_distance_to_local(behavior, polytope)?.distance <= tol)
}
