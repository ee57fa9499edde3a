//! Numerical building blocks shared by the geometric modules.

pub mod fd;
pub mod ode;
pub mod quad;
pub mod roots;
