//! Exact-form propagators for one-dimensional Schrödinger equations with
//! time-dependent quadratic Hamiltonians, integral time-evolution
//! operators on gridded wavefunctions, and Picard iteration of the
//! Duhamel integral form of the associated nonlinear equation.

pub use num_complex;

pub mod characteristic;
pub mod coefficients;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod kernels;
pub mod nonlinear;
pub mod ode;
pub mod phases;
pub mod propagator;
pub mod quad;
pub mod verify;
pub mod wavefunction;

pub use characteristic::{
    solve_characteristic, solve_characteristic_numeric, solve_riccati_system,
    CharacteristicSolution, RiccatiState,
};
pub use coefficients::{get_model, CoefficientSet, Model, MODEL_NAMES};
pub use error::{Error, Result};
pub use evolution::{
    addition_property_check, apply_composed, apply_forward, apply_inverse, supnorm_bound,
    ExecMode,
};
pub use expr::Expr;
pub use kernels::{
    asymptotic_kernel, gaussian_integral, green_composed, green_forward, green_inverse,
    KernelKind, KernelSpec,
};
pub use nonlinear::{duhamel_rhs, inverse_nonlinear_check, picard_solve, NonlinearTerm,
    PicardOptions, PicardResult, TimeHistory};
pub use phases::{compute_phases, eval_s, special_phases, PhaseCoefficients, SpecialModel};
pub use propagator::Propagator;
pub use verify::{
    check_addition, check_asymptotics, check_chi_formula, check_orthogonality, CheckReport,
};
pub use wavefunction::{Grid, Snapshot, WaveFunction};
