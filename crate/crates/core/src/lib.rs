//! Spectral and dynamical toolkit for adiabatic interpolations
//! `H(s) = (1 − s) H0 + s H1` on registers of up to 24 qubits.
//!
//! Operators are kept in structured form (diagonal, separable, sparse or a
//! lazy sum) and share one matrix-vector contract. On top of that sit the
//! Hamiltonian builders, the 3-SAT energy encoding, exact and iterative
//! spectra, Perron-Frobenius positivity checks and real-time evolution.

pub mod basis;
pub mod builders;
pub mod error;
pub mod evolution;
pub mod family;
pub mod operator;
pub mod positivity;
pub mod sat;
pub mod spectral;
pub mod state;
pub mod tables;

pub use basis::BasisIndex;
pub use builders::{CostSpec, RandomFinalSpec, RandomLaw, TargetState, TransverseFieldSpec};
pub use error::{Error, Result};
pub use evolution::{EvolutionResult, EvolutionSpec, Schedule, ScalingTable};
pub use family::InterpolatingFamily;
pub use operator::{linear_combine, Block2, CsrMatrix, Form, Operator};
pub use positivity::{PositivityReport, TrotterApproximant, TrotterOrder, Verdict};
pub use sat::{Clause, Literal, SatEncoding, SatInstance};
pub use spectral::sweep::{GapProfile, SweepMode, SweepOptions};
pub use spectral::SpectrumResult;
pub use state::StateVector;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
