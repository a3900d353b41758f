use num_complex::Complex64;

use super::{ComplexMatrix, QuantumError};

const NORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// Bipartite pure state `sum_ij c[i][j] |i>|j>`, stored as its coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    coeffs: ComplexMatrix,
}

impl PureState {
    /// Wraps a coefficient matrix, which must have unit Frobenius norm within 1e-12.
    pub fn from_coefficients(coeffs: ComplexMatrix) -> Result<Self, QuantumError> {
        let norm = coeffs.frobenius_norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::Domain(format!(
                "state is not normalized (squared norm {norm})"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Normalizes `coeffs` before wrapping them.
    pub fn normalized(coeffs: ComplexMatrix) -> Result<Self, QuantumError> {
        let norm = coeffs.frobenius_norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::Domain("cannot normalize a zero vector".into()));
        }
        Self::from_coefficients(&coeffs * Complex64::new(1.0 / norm, 0.0))
    }

    /// Product state `|i>|j>` in local dimensions `dim_a`, `dim_b`.
    pub fn basis(dim_a: usize, dim_b: usize, i: usize, j: usize) -> Result<Self, QuantumError> {
        if i >= dim_a || j >= dim_b {
            return Err(QuantumError::Domain(format!(
                "basis index ({i},{j}) outside {dim_a}x{dim_b}"
            )));
        }
        let mut c = ComplexMatrix::zeros(dim_a, dim_b);
        c[(i, j)] = Complex64::new(1.0, 0.0);
        Self::from_coefficients(c)
    }

    pub fn dim_a(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn dim_b(&self) -> usize {
        self.coeffs.cols()
    }

    pub fn coefficients(&self) -> &ComplexMatrix {
        &self.coeffs
    }

    /// Schmidt coefficients (singular values of the coefficient matrix), descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let svd = self.coeffs.to_nalgebra().svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

fn diagonal_state(entries: &[f64]) -> Result<PureState, QuantumError> {
    let diag: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    PureState::normalized(ComplexMatrix::diagonal(&diag))
}

/// `alpha|00> + sqrt(1 - alpha^2)|11>` for `alpha` in `[0, 1]`.
pub fn psi_alpha(alpha: f64) -> Result<PureState, QuantumError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(QuantumError::Domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    diagonal_state(&[alpha, (1.0 - alpha * alpha).max(0.0).sqrt()])
}

/// `(|00> + gamma|11> + |22>) / sqrt(2 + gamma^2)` for `gamma >= 0`.
pub fn psi_gamma(gamma: f64) -> Result<PureState, QuantumError> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(QuantumError::Domain(format!("gamma = {gamma} must be finite and >= 0")));
    }
    diagonal_state(&[1.0, gamma, 1.0])
}

/// `sin(a)|00> + cos(a)/sqrt(2) (|11> + |22>)` with the angle given in degrees, `0..=90`.
pub fn ghz_alpha(alpha_deg: f64) -> Result<PureState, QuantumError> {
    if !(0.0..=90.0).contains(&alpha_deg) {
        return Err(QuantumError::Domain(format!(
            "GHZ angle {alpha_deg} deg outside [0, 90]"
        )));
    }
    let a = alpha_deg.to_radians();
    let off = a.cos() / std::f64::consts::SQRT_2;
    diagonal_state(&[a.sin(), off, off])
}

/// Entanglement entropy in bits, `-sum s_i^2 log2 s_i^2` over Schmidt coefficients.
pub fn entanglement_entropy(state: &PureState) -> f64 {
    let h: f64 = state
        .schmidt_coefficients()
        .into_iter()
        .map(|s| s * s)
        .filter(|&p| p >= 1e-15)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Applies `U_A (x) U_B`, i.e. `c -> U_A c U_B^T`.
pub fn apply_local_unitaries(
    state: &PureState,
    u_a: &ComplexMatrix,
    u_b: &ComplexMatrix,
) -> Result<PureState, QuantumError> {
    if u_a.rows() != state.dim_a() || u_b.rows() != state.dim_b() {
        return Err(QuantumError::Dimension(format!(
            "unitaries {}x{} / {}x{} do not match state {}x{}",
            u_a.rows(),
            u_a.cols(),
            u_b.rows(),
            u_b.cols(),
            state.dim_a(),
            state.dim_b()
        )));
    }
    if !u_a.is_unitary(UNITARY_TOL) || !u_b.is_unitary(UNITARY_TOL) {
        return Err(QuantumError::Domain("local operator is not unitary".into()));
    }
    let c = u_a.matmul(state.coefficients())?.matmul(&u_b.transpose())?;
    PureState::from_coefficients(c)
}
