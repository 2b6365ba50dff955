//! Bell inequalities for acyclic networks with independent sources.
//!
//! Start from any Bell inequality on a network, attach a new party through a
//! new independent source ("adding a leaf"), and [`inequality`] produces a
//! valid inequality for the larger network. Constraints are linear in the
//! correlators but carry existential weights `q_j`, which makes them
//! nonlinear once the `q_j` are eliminated.
//!
//! - [`network`]: parties, sources and the leaf-addition constructor
//! - [`correlations`]: correlator tables and behaviors
//! - [`inequality`]: linear and quantified expressions, extension, evaluation
//! - [`quantum`]: correlators of quantum network models, visibility thresholds
//! - [`nlocal_oracle`]: hidden-variable models used to check inequalities
//! - [`presets`]: ready-made seed inequalities and their extensions

pub mod correlations;
pub mod error;
pub mod inequality;
pub mod network;
pub mod nlocal_oracle;
pub mod presets;
pub mod quantum;

pub use error::{Error, Result};
