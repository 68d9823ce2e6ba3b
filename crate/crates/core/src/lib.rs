//! Work statistics under two-projective-measurement (TPM) and collective
//! measurement (CM) schemes, the linear-optics circuits that realize them,
//! and seeded photon-count simulation.

pub mod dsl;
pub mod montecarlo;
pub mod optics;
pub mod qmath;
pub mod schemes;

pub use dsl::{Diagnostic, SourceSpan};
pub use montecarlo::{CountTable, ShotConfig, SourceModel};
pub use optics::{BetaConvention, OpticalCircuit};
pub use qmath::{ComplexMatrix, DensityMatrix, HermitianOperator, UnitaryOperator, C64};
pub use schemes::{Hamiltonian, OutcomeLabel, Povm, PureQubitState, Scheme, TransitionTable};
