//! Fixtures shared by the kernel benchmarks.

use phc_core::cone_dynamics::{ConeParam, ConeSolution, C_MAX};
use phc_core::surfaces::{make_e15, make_e17, ParamSurface};

/// Cone constants spread over the admissible range, endpoint excluded.
pub fn cone_params() -> Vec<ConeParam> {
    [1e-3, 0.05, 0.2, 0.35, C_MAX - 1e-4]
        .into_iter()
        .map(|c| ConeParam::new(c).expect("c in range"))
        .collect()
}

pub fn cone_surface() -> ParamSurface {
    make_e15(ConeSolution::rational(5, 6).expect("5/6 cone"), 1, 0.0).expect("closed cone")
}

pub fn spiral_surface() -> ParamSurface {
    make_e17(2, 1, 0.3).expect("spiral")
}
