//! Fully biseparable 3-qubit states that violate a tripartite Bell inequality.
//!
//! This crate constructs a three-parameter family of 3-qubit mixed states that
//! are invariant under partial transposition on every qubit and symmetric under
//! every permutation of the parties, which makes them biseparable along every
//! bipartite cut (hence undistillable). It then evaluates a symmetric
//! three-party, two-setting Bell expression with local bound 3 on those states
//! and certifies the violation numerically.
//!
//! Module layout:
//!
//! - [`linalg`]: dense complex matrices, tensor products, partial
//!   transposition, qubit permutations, and a Jacobi eigensolver for
//!   Hermitian matrices up to dimension 8.
//! - [`family`]: the state family itself — coefficients from angles, the
//!   mixing-angle equation, closed-form mixture weights, state assembly, and
//!   full structural certification.
//! - [`bell`]: the Bell expression, correlation tensors, probability tables,
//!   and exhaustive local-bound enumeration.
//! - [`optimize`]: derivative-free maximization of the Bell value over the
//!   family parameters and feasibility-region scanning.

pub mod bell;
pub mod family;
pub mod linalg;
pub mod optimize;

pub use bell::{BellExpression, CorrelationTensor, LocalBound, MeasurementAngles};
pub use family::{
    CertificationRecord, Coefficients, FamilyAngles, FamilyError, FamilyState, OmegaSolutions,
    Weights,
};
pub use linalg::{Complex64, ComplexMatrix, DensityMatrix, Ket, LinalgError, Party, Tolerances};
pub use optimize::{MaximizeConfig, MaximizeResult, ScanGrid, SearchPoint};
