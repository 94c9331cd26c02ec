//! Pseudo-boolean constraint propagation with a per-constraint choice between
//! a counting engine and a watched-literal engine, and a small CDCL solver
//! built on top of it.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the benchmark harness live in the `pbhybrid` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod heuristics;
pub mod model;
pub mod propagation;
pub mod solver;
pub mod trail;

pub use heuristics::{dispatch, EngineKind, HeuristicConfig, Mode};
pub use model::{
    normalize, Coeff, ConstraintId, Instance, Literal, NormalizeOptions, Normalized, Objective, PBConstraint,
    RawConstraint, Relation, Slack, Term,
};
pub use propagation::{PropResult, PropStats, Propagator};
pub use solver::{optimize, solve, Budget, SolveResult, SolveStats, Solver, SolverConfig, SolverError, Status};
pub use trail::{Trail, Value};
