//! Numerical toolkit for the degenerate symplectic form on S¹×B³ and its
//! explicit pseudo-holomorphic surfaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone_dynamics;
pub mod energetics;
pub mod error;
pub mod geometry;
pub mod limits;
pub mod local_graphs;
pub mod numerics;
pub mod poly;
pub mod surfaces;

pub use error::{PhcError, Result};
pub use geometry::{ActionCoords, CartesianPoint4, Circle, TangentVector4, TwoFormValue};
