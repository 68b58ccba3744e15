//! Fibered and random compositions of generalized Hénon maps, and fibered
//! homogeneous maps of C^{k+1}: filtrations, Green functions, slice measures
//! of Green currents, pullback convergence, and entropy lower bounds.
//!
//! The crate is `no_std` with `alloc` when built without the `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod base;
pub mod convergence;
pub mod currents;
pub mod entropy;
pub mod error;
pub mod family;
pub mod filtration;
pub mod green;
pub mod orbit;
mod par;
pub mod point;
pub mod projective;

pub use base::{sample_sequence, Base, BaseDynamics, BasePoint, BaseSpace, ParamSequence};
pub use error::{Error, Result};
pub use family::{eval_factor, eval_inverse, eval_map, CoeffMap, HenonFactor, HenonFamily, HenonMap};
pub use filtration::{check_invariance, compute_radius, FiltrationRadius, InvarianceReport, Region};
pub use green::{
    AvgGreen, Classification, Direction, FiberChain, GreenEval, GreenOptions, GreenStatus, SkewSystem,
};
pub use orbit::{LogComplex, OrbitState};
pub use point::C2;
pub use projective::{
    estimate_constants, BasinClass, FatouVerdict, HomogPoly, HomogeneousLift, LiftConstants, ProbeSpec, ProjGreen,
    ProjectiveSystem,
};
