//! Spectral detection of finite-time singularities in 1D periodic PDEs.
//!
//! The full system is advanced with exact (alias-free) Galerkin sums. At
//! every monitor step the rates of two resolved-mode moments are
//! differentiated with respect to the term coefficients of the full system
//! (matrix `A`) and of a t-model reduced system living on half the modes
//! (matrix `B`). When `|det B|` crosses a tolerance the reduced system has
//! started to need energy transfer to unresolved scales, and the mesh is
//! refined. The refinement log feeds three blow-up-rate estimators in
//! [`exponents`].

pub mod driver;
pub mod error;
pub mod exec;
pub mod exponents;
pub mod integrator;
pub mod models;
pub mod renorm;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Exec;
pub use models::{InitialCondition, Level, ModelKind, ModelSpec, Partition};
pub use spectral::{ModeRange, Shell, Spectral, SpectralField};
