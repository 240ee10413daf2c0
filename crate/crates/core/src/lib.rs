//! Numerical laboratory for quantum expanders built from Cayley graphs of
//! finite groups.
//!
//! The pipeline in one line: pick a finite group `G` and an inverse-closed
//! generator multiset `Γ`, take the normalized Cayley adjacency operator
//! `M`, lift one graph step to the superoperator `T(ρ) = (1/|Γ|) Σ_γ P_γ ρ P_γ†`,
//! insert a representation-theoretic basis change `U = S·F` between two
//! steps, and measure the spectral gap of `E(ρ) = T(U T(ρ) U†)`.
//!
//! Modules follow the pipeline:
//! - [`groups`]: finite-group arithmetic (cyclic, dihedral, PGL(2,q)) with
//!   dense multiplication tables at desk scale.
//! - [`cayley`]: the classical operator `M`, its spectrum, LPS Ramanujan
//!   generators.
//! - [`repr`]: character tables, explicit unitary irreps, the Fourier
//!   transform `F` over `G`.
//! - [`qexpander`]: the superoperator `T`, product mappings, the phase
//!   twist `S`, good-basis-change verification, and gap measurement.
//! - [`extractor`]: entropy functionals, the expander-to-extractor bridge,
//!   and the rank experiment behind the degree lower bound.
//! - [`qszk`]: a small density-matrix channel simulator plus the
//!   entropy-approximation / entropy-difference / state-distinguishability
//!   reduction pipeline.
//! - [`cli`]: batch commands and report writers used by the `qexlab` binary.

pub mod cayley;
pub mod cli;
pub mod extractor;
pub mod groups;
pub mod linalg;
pub mod qexpander;
pub mod qszk;
pub mod repr;

mod error;

pub use error::QexError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, QexError>;
