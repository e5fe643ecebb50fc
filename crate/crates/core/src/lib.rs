//! Bending deformations of complex hyperbolic surfaces.
//!
//! Matrices act on C^{2,1} with either the ball form diag(1,1,-1) or the Siegel form with
//! ones on the antidiagonal. Fuchsian surface groups sit in SU(2,1) as real matrices; bending
//! along a simple closed geodesic deforms them through complex rotations about its axis.

// `!(x < bound)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bending;
pub mod error;
pub mod fuchsian;
pub mod heisenberg;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod sl2;
pub mod verify;
pub mod words;

pub use error::{Error, Result};
