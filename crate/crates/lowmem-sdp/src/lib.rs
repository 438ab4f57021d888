//! Low-memory solver toolkit for trace-bounded and linearly constrained SDPs.

pub mod extremepoint;
pub mod fw_gaussian;
mod linalg;
pub mod lmo;
pub mod maxcut;
pub mod operators;
pub mod parallelism;
pub mod penalty;
pub mod postproc;
pub mod rng;
