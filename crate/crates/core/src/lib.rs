//! Quantum games, their equivalences and the valuation axioms over them.

pub mod error;
pub mod games;
pub mod linalg;
pub mod measurement;
pub mod random;
pub mod transforms;
pub mod valuation;
pub mod verifier;

pub use error::{Error, Result};

pub use games::{canonicalize, equivalent, flatten, weight_map, CompoundGame, CompoundPayoff, Game, PayoffFunction, WeightMap};
pub use linalg::{HermitianOperator, Isometry, SpectralDecomposition, StateVector, C64};
pub use measurement::{compose, run, Branch, BranchSet, MeasurementProcedure};
pub use valuation::{Axiom, AxiomReport, ValueFunction, Verdict, Witness};
pub use verifier::{verify_stage, StageParams, StageReport};

/// Library version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
