use num_complex::Complex64;

use super::{ComplexMatrix, Measurement, PureState, QuantumError};
use crate::polytope::{Behavior, Scenario, NORMALIZATION_TOL};

/// Probabilities down to `-CLAMP_TOL` are treated as roundoff and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// `p(a,b|x,y) = <psi| M^x_a (x) N^y_b |psi>`.
///
/// With `psi = sum c_ij |i>|j>` this is `sum_ij conj(c_ij) (M c N^T)_ij`, so
/// the full tensor product is never formed.
pub fn behavior_from(
    state: &PureState,
    meas_a: &[Measurement],
    meas_b: &[Measurement],
) -> Result<Behavior, QuantumError> {
    if meas_a.is_empty() || meas_b.is_empty() {
        return Err(QuantumError::Domain("each party needs at least one measurement".into()));
    }
    let (da, db) = (state.dim_a(), state.dim_b());
    if meas_a.iter().any(|m| m.dim() != da) || meas_b.iter().any(|m| m.dim() != db) {
        return Err(QuantumError::Dimension(format!(
            "measurements do not act on a {da}x{db} state"
        )));
    }
    let n_a = meas_a[0].outcome_count();
    let n_b = meas_b[0].outcome_count();
    if meas_a.iter().any(|m| m.outcome_count() != n_a) || meas_b.iter().any(|m| m.outcome_count() != n_b) {
        return Err(QuantumError::Dimension(
            "all measurements of a party must have the same number of outcomes".into(),
        ));
    }
    let scenario = Scenario::new(meas_a.len(), meas_b.len(), n_a, n_b)
        .map_err(|e| QuantumError::Domain(e.to_string()))?;
    let c = state.coefficients();

    // M^x_a c, one matrix per (x, a)
    let left: Vec<Vec<ComplexMatrix>> = meas_a
        .iter()
        .map(|m| m.outcomes().iter().map(|op| op.matmul(c)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let mut probs = vec![0.0; scenario.len()];
    for (x, lx) in left.iter().enumerate() {
        for (y, my) in meas_b.iter().enumerate() {
            for (a, l) in lx.iter().enumerate() {
                for (b, n) in my.outcomes().iter().enumerate() {
                    probs[scenario.index(x, y, a, b)] = sandwich(c, l, n);
                }
            }
            let ctx = &mut probs[scenario.index(x, y, 0, 0)..scenario.index(x, y, 0, 0) + n_a * n_b];
            for p in ctx.iter_mut() {
                if *p < 0.0 {
                    if *p < -CLAMP_TOL {
                        return Err(QuantumError::Domain(format!(
                            "negative probability {p} in context ({x},{y})"
                        )));
                    }
                    *p = 0.0;
                }
            }
            let total: f64 = ctx.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(QuantumError::Domain(format!(
                    "context ({x},{y}) sums to {total}"
                )));
            }
        }
    }
    Ok(Behavior::from_raw(scenario, probs))
}

/// `Re sum_ij conj(c_ij) sum_k l_ik n_jk`.
fn sandwich(c: &ComplexMatrix, l: &ComplexMatrix, n: &ComplexMatrix) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..c.rows() {
        let li = l.row(i);
        for j in 0..c.cols() {
            let cij = c[(i, j)];
            if cij == Complex64::new(0.0, 0.0) {
                continue;
            }
            let nj = n.row(j);
            let inner: Complex64 = li.iter().zip(nj).map(|(x, y)| x * y).sum();
            acc += cij.conj() * inner;
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{bell_value, chsh_functional};
    use crate::quantum::{psi_alpha, qubit_projective};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn product_eigenstate_is_deterministic() {
        let s = PureState::basis(2, 2, 0, 0).unwrap();
        let z = qubit_projective(0.0, 0.0);
        let b = behavior_from(&s, &[z.clone(), z.clone()], &[z.clone(), z]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((b.get(x, y, 0, 0) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn maximally_entangled_computational_basis() {
        let s = psi_alpha(FRAC_1_SQRT_2).unwrap();
        let z = qubit_projective(0.0, 0.0);
        let b = behavior_from(&s, std::slice::from_ref(&z), std::slice::from_ref(&z)).unwrap();
        assert!((b.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((b.get(0, 0, 1, 1) - 0.5).abs() < 1e-15);
        assert!(b.get(0, 0, 0, 1).abs() < 1e-15 && b.get(0, 0, 1, 0).abs() < 1e-15);
    }

    #[test]
    fn tsirelson_value_on_the_equator() {
        // For |00> + |11>, equatorial correlators are cos(phi_a + phi_b), so
        // Bob's azimuths carry a minus sign relative to the usual cos(phi_a - phi_b) choice.
        let s = psi_alpha(FRAC_1_SQRT_2).unwrap();
        let a = [qubit_projective(FRAC_PI_2, 0.0), qubit_projective(FRAC_PI_2, FRAC_PI_2)];
        let b = [
            qubit_projective(FRAC_PI_2, -FRAC_PI_4),
            qubit_projective(FRAC_PI_2, -3.0 * FRAC_PI_4),
        ];
        let beh = behavior_from(&s, &a, &b).unwrap();
        let v = bell_value(&chsh_functional(), &beh).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn dimension_mismatch() {
        let s = psi_alpha(0.5).unwrap();
        let m3 = crate::quantum::qutrit_measurement(&[0.0; 6]).unwrap();
        let z = qubit_projective(0.0, 0.0);
        assert!(matches!(behavior_from(&s, &[m3], std::slice::from_ref(&z)), Err(QuantumError::Dimension(_))));
        assert!(behavior_from(&s, &[], &[z]).is_err());
    }
}
