//! Benchmark problem families packaged as [`crate::model::NepvModel`]s.
//!
//! Three families cover the solver surface: density-functional Hamiltonians
//! on 1-d and 3-d grids ([`ks`]), a robust two-class discriminant posed as a
//! generalized problem with a rank-one `G` ([`rlda`]), and the rotating
//! Gross-Pitaevskii ground state in complex and real-doubled forms ([`gpe`]).
//! Every model ships the exact derivative action of its matrix function so
//! the Newton driver never needs finite differences on these families.

pub mod gpe;
pub mod ks;
pub mod rlda;

pub use gpe::{GpeComplexModel, GpeGrid, GpeOperators, GpeRealModel};
pub use ks::{Ks3dModel, KsSimpleModel};
pub use rlda::{
    synthetic_gaussians, RldaModel, RldaPipelineConfig, RldaSummary, RldaTrial, TwoClassData,
};
