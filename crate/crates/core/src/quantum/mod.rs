//! Small dense complex linear algebra, bipartite pure states, projective
//! measurements and the behaviors they generate.

mod behavior;
mod matrix;
mod measurement;
mod state;

use thiserror::Error;

pub use behavior::{behavior_from, CLAMP_TOL};
pub use matrix::ComplexMatrix;
pub use measurement::{
    qubit_projective, qutrit_measurement, reck_unitary, Measurement, SettingAngles, SettingKind,
    MEASUREMENT_TOL, RECK_ANGLES,
};
pub use state::{
    apply_local_unitaries, entanglement_entropy, ghz_alpha, psi_alpha, psi_gamma, PureState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
