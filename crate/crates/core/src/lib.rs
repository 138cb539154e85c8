//! Numerical laboratory for (σ, τ)-derivations on finite-dimensional normed
//! algebras and bimodules.
//!
//! The crate extracts exact derivations from approximate ones by the direct
//! method, computes spaces of derivations and inner derivations, decides
//! contractibility and amenability, and manufactures certified perturbations.

pub mod algebra;
pub mod cli;
pub mod control;
pub mod derivation;
pub mod hyers;
pub mod io;
pub mod linalg;
pub mod perturb;
pub mod sampling;
pub mod scalar;

pub use algebra::{dual_bimodule, AlgebraError, Bimodule, FiniteAlgebra, LinearMap, NormKind, SpaceTag, WeightedNorm};
pub use control::{ControlError, ControlFunction, ControlSpec};
pub use derivation::{
    approx_contractibility_roundtrip, derivation_space, inner_solve, inner_space, is_amenable, is_contractible,
    leibniz_residual, ContractibilityReport, DerivationError, DerivationTriple, Verdict,
};
pub use hyers::{extract_additive, extract_triple, ExtractOptions, ExtractionReport, HyersError, LambdaMode, PointMap};
pub use perturb::{verify_hypotheses, HypothesisReport, PerturbError, PerturbationSpec};
pub use scalar::{scalar_homogeneity_certificate, three_unimodular, ScalarError, UnimodularTriple};

/// Any library error, tagged by the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("algebra: {0}")]
    Algebra(#[from] AlgebraError),
    #[error("control: {0}")]
    Control(#[from] ControlError),
    #[error("hyers: {0}")]
    Hyers(#[from] HyersError),
    #[error("derivation: {0}")]
    Derivation(#[from] DerivationError),
    #[error("perturb: {0}")]
    Perturb(#[from] PerturbError),
    #[error("scalar: {0}")]
    Scalar(#[from] ScalarError),
    #[error("config: {0}")]
    Config(String),
}
