use thiserror::Error;

pub type Result<T> = std::result::Result<T, PhcError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhcError {
    #[error("J is undefined on the vanishing circle (g = 0)")]
    SingularPoint,
    #[error("point lies on the z-axis (rho = 0); the angle phi is undefined")]
    AxisPoint,
    #[error("point ({x}, {y}, {z}) lies outside the open unit ball")]
    OutsideBall { x: f64, y: f64, z: f64 },
    #[error("parameter {name} = {value} is out of range: {detail}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        detail: String,
    },
    #[error("c = 2/3^(3/2) is the degenerate endpoint; analytic half period limit is {limit}")]
    EndpointDegenerate { limit: f64 },
    #[error("integration blew up near t = {t}")]
    BlowUp { t: f64 },
    #[error("target period {target} is outside the scanned range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("trajectory is not periodic over the requested window (mismatch {mismatch:e})")]
    NonPeriodic { mismatch: f64 },
    #[error("level set is empty: {0}")]
    EmptyLevel(String),
    #[error("tangent frame is degenerate at ({s1}, {s2})")]
    DegenerateFrame { s1: f64, s2: f64 },
    #[error("region boundary could not be resolved: {0}")]
    RegionClipFailure(String),
    #[error("sample set has no points inside the comparison region")]
    EmptyIntersection,
    #[error("intersection at parameter ({s1}, {s2}) is not transverse (|det| = {det:e})")]
    NonTransverse { s1: f64, s2: f64, det: f64 },
    #[error("intersection count changed under grid refinement: {counts:?}")]
    IncompleteSearch { counts: Vec<usize> },
    #[error("|nu| = {nu} exceeds the inversion radius {radius}")]
    OutOfRadius { nu: f64, radius: f64 },
    #[error("residual does not decay like h^2 under refinement (fitted order {order})")]
    GridTooCoarse { order: f64 },
    #[error("expected {expected} sheets, found {found} at (t, u) = ({t}, {u})")]
    SheetCountMismatch {
        expected: usize,
        found: usize,
        t: f64,
        u: f64,
    },
    #[error("fold (critical point of the projection) near (t, u) = ({t}, {u})")]
    FoldDetected { t: f64, u: f64 },
    #[error("surface is not a graph over the (t, u) half plane")]
    NotAGraph,
    #[error("least-squares fit is ill conditioned: {0}")]
    FitIllConditioned(String),
    #[error("no regular solution for mode N = {n} (boundary mismatch {mismatch:e})")]
    NoSolution { n: u32, mismatch: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
