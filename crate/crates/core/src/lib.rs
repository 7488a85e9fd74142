//! Constrained control allocation and incremental load-alleviation control
//! for a morphing wing with distributed trailing-edge servos.
//!
//! The crate contains the dense numerics kernel, the servo constraint
//! compiler, Chebyshev shape functions, an active-set QP allocator, the
//! incremental controller with its bound certificates, a digital-twin wing
//! plant, an LQG baseline and a scenario harness.

pub mod numerics;
pub mod constraints;
pub mod shapes;
pub mod allocator;
pub mod plant;
pub mod indi;
pub mod lqg;
pub mod harness;
