//! Stochastic Galerkin one-shot systems: the reduced state/adjoint system
//! for L2-regularized controls, the saddle-point system for H1
//! regularization, control recovery, moments and cost evaluation.

mod field;
mod kron;
mod spec;
mod system;

pub use field::{moments, piecewise_target, SpatialFn, StochasticField, TargetSpec};
pub use kron::{to_block_major, to_node_major, KronOperator, KronTerm};
pub use spec::{t_matrix, Channel, ControlSpec, Functional, Regularization};
pub use system::{
    assemble_reduced, assemble_saddle, eval_cost, forward_operator, recover_control, reduced_operator, reduced_rhs,
    saddle_operator, saddle_rhs, split_solution, CostBreakdown, GalerkinSystem, RhsData,
};

/// The one-shot operator is a sum of Kronecker terms.
pub type OneShotOperator = KronOperator;
