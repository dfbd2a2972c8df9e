//! Weight conditioning lab.
//!
//! Equilibration-based preconditioning of weight matrices, the quadratic
//! model that motivates it, conditioned networks with backprop, numerical
//! Hessians, and a deterministic experiment harness.

pub mod bench;
pub mod densela;
pub mod error;
pub mod hesslab;
pub mod net;
pub mod precond;
pub mod quadlab;
pub mod rng;

pub use densela::{condition_number, svd, Matrix, SvdResult};
pub use error::{Error, Result};
pub use precond::{DiagonalPreconditioner, PreconditionerKind};
