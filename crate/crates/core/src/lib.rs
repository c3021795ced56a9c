//! Iterative quantum state tomography.
//!
//! A state is reconstructed from the outcome statistics of projective
//! measurements by repeatedly imposing each measured distribution on a
//! running estimate ([`imposition`]). The crate also provides the pieces needed
//! to run and check that procedure: a dense complex matrix kernel with a
//! Jacobi Hermitian eigensolver ([`matcore`]), random and validated states
//! ([`states`]), observable families ([`observables`]), measurement simulation
//! ([`simulate`]), convergence metrics ([`metrics`]) and a linear-inversion
//! reference estimator ([`baseline`]).

pub mod baseline;
pub mod error;
pub mod imposition;
pub mod matcore;
pub mod metrics;
pub mod observables;
pub mod random;
pub mod simulate;
pub mod states;

pub use num_complex::Complex64;

pub use baseline::{baseline_estimate, linear_inversion, psd_project};
pub use error::{Error, Result};
pub use imposition::{
    impose, impose_additive, impose_pure, impose_rank, multi_start, reconstruct,
    reconstruct_with_reference, success_rate, sweep, IterationConfig, ReconstructionResult,
    ReconstructionTrace, StopReason, TraceRow,
};
pub use matcore::{hermitian_eig, ComplexMatrix, EigenDecomposition};
pub use metrics::{distributional, hellinger, hs_distance};
pub use observables::{
    mub_set, pauli_set, projector, random_observable_set, Family, Observable, ObservableSet,
};
pub use simulate::{born_probabilities, depolarize, record_set, sample_record, MeasurementRecord};
pub use states::{
    fidelity_to_pure, purity, random_mixed_state, random_pure_state, validate_state, DensityMatrix,
    IntermediateState,
};
