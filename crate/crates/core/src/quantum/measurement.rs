use num_complex::Complex64;

use super::{ComplexMatrix, QuantumError};

/// Tolerance used by [`Measurement::validate`].
pub const MEASUREMENT_TOL: f64 = 1e-10;

/// Number of angles describing one qutrit measurement.
pub const RECK_ANGLES: usize = 6;

/// Projective measurement on one party: one operator per outcome label.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    dim: usize,
    outcomes: Vec<ComplexMatrix>,
}

impl Measurement {
    /// Validating constructor: hermitian, PSD, complete, within [`MEASUREMENT_TOL`].
    pub fn new(outcomes: Vec<ComplexMatrix>) -> Result<Self, QuantumError> {
        let dim = outcomes.first().map_or(0, ComplexMatrix::rows);
        if dim == 0 || outcomes.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(QuantumError::Dimension(
                "measurement operators must be non-empty and square of equal size".into(),
            ));
        }
        let m = Self { dim, outcomes };
        m.validate(MEASUREMENT_TOL)?;
        Ok(m)
    }

    /// Rank-one projectors onto the rows of `basis` (conjugated), i.e. `U^dag |a><a| U`.
    pub fn from_basis_rows(basis: &ComplexMatrix) -> Result<Self, QuantumError> {
        if !basis.is_unitary(MEASUREMENT_TOL) {
            return Err(QuantumError::Domain("measurement basis is not unitary".into()));
        }
        Ok(Self::from_rows_unchecked(basis))
    }

    fn from_rows_unchecked(basis: &ComplexMatrix) -> Self {
        let outcomes = (0..basis.rows())
            .map(|a| {
                let v: Vec<Complex64> = basis.row(a).iter().map(|z| z.conj()).collect();
                ComplexMatrix::outer(&v)
            })
            .collect();
        Self {
            dim: basis.rows(),
            outcomes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[ComplexMatrix] {
        &self.outcomes
    }

    /// Conjugates every outcome by a unitary: `M_a -> U^dag M_a U`.
    pub fn conjugated_by(&self, u: &ComplexMatrix) -> Result<Self, QuantumError> {
        let ud = u.adjoint();
        let outcomes = self
            .outcomes
            .iter()
            .map(|m| ud.matmul(m)?.matmul(u))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            dim: self.dim,
            outcomes,
        })
    }

    /// Checks hermiticity, positivity and completeness within `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), QuantumError> {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for (a, m) in self.outcomes.iter().enumerate() {
            if !m.is_hermitian(tol) {
                return Err(QuantumError::Domain(format!("outcome {a} is not hermitian")));
            }
            let eig = nalgebra::SymmetricEigen::new(m.to_nalgebra());
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -tol {
                return Err(QuantumError::Domain(format!(
                    "outcome {a} is not positive semidefinite (eigenvalue {min})"
                )));
            }
            sum = sum.add(m)?;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(self.dim));
        if dev > tol {
            return Err(QuantumError::Domain(format!(
                "outcomes sum to identity only within {dev}"
            )));
        }
        Ok(())
    }

    /// Largest deviation from `M_a^2 = M_a` over all outcomes.
    pub fn idempotency_defect(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|m| m.matmul(m).map_or(f64::INFINITY, |m2| m2.max_abs_diff(m)))
            .fold(0.0, f64::max)
    }
}

/// Two-outcome qubit measurement along the Bloch direction `(theta, phi)`.
/// Outcome 0 projects onto `(cos(theta/2), e^{i phi} sin(theta/2))`.
pub fn qubit_projective(theta: f64, phi: f64) -> Measurement {
    let n = [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ];
    let up = ComplexMatrix::outer(&n);
    let down = ComplexMatrix::identity(2)
        .sub(&up)
        .expect("2x2 shapes agree");
    Measurement {
        dim: 2,
        outcomes: vec![up, down],
    }
}

/// Two-mode beam splitter with phase acting on modes `(j, k)` of a qutrit.
fn two_mode_block(j: usize, k: usize, theta: f64, phi: f64) -> ComplexMatrix {
    let mut t = ComplexMatrix::identity(3);
    let phase = Complex64::from_polar(1.0, phi);
    let (s, c) = theta.sin_cos();
    t[(j, j)] = phase * c;
    t[(j, k)] = Complex64::new(-s, 0.0);
    t[(k, j)] = phase * s;
    t[(k, k)] = Complex64::new(c, 0.0);
    t
}

/// Qutrit unitary from angles `(theta1, theta2, theta3, phi1, phi2, phi3)`:
/// `T23(theta3, phi3) T13(theta2, phi2) T12(theta1, phi1)`.
pub fn reck_unitary(angles: &[f64]) -> Result<ComplexMatrix, QuantumError> {
    if angles.len() != RECK_ANGLES {
        return Err(QuantumError::Domain(format!(
            "expected {RECK_ANGLES} angles, got {}",
            angles.len()
        )));
    }
    let t12 = two_mode_block(0, 1, angles[0], angles[3]);
    let t13 = two_mode_block(0, 2, angles[1], angles[4]);
    let t23 = two_mode_block(1, 2, angles[2], angles[5]);
    t23.matmul(&t13)?.matmul(&t12)
}

/// Fixed-basis qutrit measurement behind a Reck interferometer: `M_a = U^dag |a><a| U`.
pub fn qutrit_measurement(angles: &[f64]) -> Result<Measurement, QuantumError> {
    let u = reck_unitary(angles)?;
    Ok(Measurement::from_rows_unchecked(&u))
}

/// How a flat angle list maps to measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SettingKind {
    /// `(theta, phi)` per measurement, `theta` in `[0, pi]`, `phi` in `[0, 2 pi]`.
    QubitBloch,
    /// Six Reck angles per measurement, each in `[-pi, pi]`.
    QutritReck,
}

impl SettingKind {
    pub fn angles_per_measurement(self) -> usize {
        match self {
            SettingKind::QubitBloch => 2,
            SettingKind::QutritReck => RECK_ANGLES,
        }
    }

    pub fn local_dim(self) -> usize {
        match self {
            SettingKind::QubitBloch => 2,
            SettingKind::QutritReck => 3,
        }
    }

    pub fn build(self, angles: &[f64]) -> Result<Measurement, QuantumError> {
        match self {
            SettingKind::QubitBloch => match angles {
                [theta, phi] => Ok(qubit_projective(*theta, *phi)),
                _ => Err(QuantumError::Domain(format!(
                    "qubit setting needs 2 angles, got {}",
                    angles.len()
                ))),
            },
            SettingKind::QutritReck => qutrit_measurement(angles),
        }
    }
}

/// Angles for every measurement of both parties.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingAngles {
    pub kind: SettingKind,
    pub party_a: Vec<f64>,
    pub party_b: Vec<f64>,
}

impl SettingAngles {
    fn build_party(&self, angles: &[f64]) -> Result<Vec<Measurement>, QuantumError> {
        let per = self.kind.angles_per_measurement();
        if angles.is_empty() || !angles.len().is_multiple_of(per) {
            return Err(QuantumError::Domain(format!(
                "{} angles is not a positive multiple of {per}",
                angles.len()
            )));
        }
        angles.chunks(per).map(|c| self.kind.build(c)).collect()
    }

    /// Measurements for Alice and Bob, in input order.
    pub fn measurements(&self) -> Result<(Vec<Measurement>, Vec<Measurement>), QuantumError> {
        Ok((self.build_party(&self.party_a)?, self.build_party(&self.party_b)?))
    }

    pub fn total_angles(&self) -> usize {
        self.party_a.len() + self.party_b.len()
    }
}
