//! One-shot stochastic Galerkin and stochastic collocation solvers for
//! optimal control problems constrained by an elliptic PDE with random
//! diffusion coefficient and uncertain controls.

pub mod colloc;
pub mod error;
pub mod fem;
pub mod gpc;
pub mod linalg;
pub mod oneshot;
pub mod randfield;
pub mod scenario;
pub mod solve;

pub use error::{Error, Result};
