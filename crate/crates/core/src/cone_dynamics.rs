//! The cone-generating oscillator `u″ = −(4/9)u + (2/9)c u⁻²` on the unit
//! energy level `(9/4)u′² + u² + c/u = 1`, its turning points, and its period.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PhcError, Result};
use crate::numerics::ode::{DenseTrajectory, OdeOptions, Solver};
use crate::numerics::quad::{adaptive_gk, gauss_chebyshev_adaptive};
use crate::numerics::roots::{bisect, newton};

/// Upper end of the admissible parameter range, `2/3^{3/2}`.
pub const C_MAX: f64 = 0.384_900_179_459_750_5;

/// `√3 π`, the period at the degenerate endpoint.
pub const ENDPOINT_PERIOD: f64 = 5.441_398_092_702_653;

pub const SCAN_C_MIN: f64 = 1e-4;
pub const SCAN_C_GAP: f64 = 1e-6;
pub const SCAN_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeParam {
    pub c: f64,
}

impl ConeParam {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= C_MAX * (1.0 + 1e-15)) {
            return Err(PhcError::OutOfRange {
                name: "c",
                value: c,
                detail: format!("admissible range is (0, {C_MAX}]"),
            });
        }
        Ok(Self { c: c.min(C_MAX) })
    }

    /// `α = 2/3^{3/2} − c`.
    pub fn alpha(&self) -> f64 {
        C_MAX - self.c
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha() <= 1e-15
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicRoots {
    pub u_min: f64,
    pub u_max: f64,
    pub u_neg: f64,
}

impl CubicRoots {
    /// `λ = (u_min + u_max)/2`.
    pub fn lambda(&self) -> f64 {
        -0.5 * self.u_neg
    }

    /// `δ = (u_max − u_min)/2`.
    pub fn delta(&self) -> f64 {
        0.5 * (self.u_max - self.u_min)
    }
}

fn cubic(c: f64, x: f64) -> (f64, f64) {
    (x * x * x - x + c, 3.0 * x * x - 1.0)
}

/// Roots of `x³ − x + c`. The negative root is taken from the trigonometric
/// formula and polished by Newton; the positive pair follows from the
/// symmetric functions, which stays accurate when `c` is tiny or the pair is
/// nearly double.
pub fn cubic_roots(p: ConeParam) -> Result<CubicRoots> {
    let c = p.c;
    let arg = (-1.5 * 3f64.sqrt() * c).clamp(-1.0, 1.0);
    let seed = 2.0 / 3f64.sqrt() * ((arg.acos() - 4.0 * PI) / 3.0).cos();
    let u_neg = newton(|x| cubic(c, x), seed, 1e-16, 50).unwrap_or(seed);
    let lambda = -0.5 * u_neg;
    let delta = (1.0 - 3.0 * lambda * lambda).max(0.0).sqrt();
    let u_max = lambda + delta;
    let u_min = if delta == 0.0 { lambda } else { -c / (u_max * u_neg) };
    Ok(CubicRoots { u_min, u_max, u_neg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodMethod {
    Quadrature,
    Ode,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodResult {
    /// Full period in τ.
    pub period: f64,
    pub method: PeriodMethod,
    pub error: f64,
}

/// Half period `(3/2)∫(1 − x² − c/x)^{−1/2} dx` between the turning points.
/// With `x = λ + δy` and `r = δ/λ` the integrand becomes
/// `(√3/2)(1 − y²)^{−1/2} (1 + ry)^{1/2} (1 + ry/3)^{−1/2}`, integrated by
/// Gauss–Chebyshev with node doubling.
pub fn half_period_quad(p: ConeParam) -> Result<PeriodResult> {
    if p.is_degenerate() {
        return Err(PhcError::EndpointDegenerate {
            limit: 0.5 * ENDPOINT_PERIOD,
        });
    }
    let roots = cubic_roots(p)?;
    let r = roots.delta() / roots.lambda();
    let k = 0.5 * 3f64.sqrt();
    let f = |y: f64| k * ((1.0 + r * y) / (1.0 + r * y / 3.0)).sqrt();
    let (val, diff, _) = gauss_chebyshev_adaptive(f, 1e-13, 1 << 20);
    Ok(PeriodResult {
        period: val,
        method: PeriodMethod::Quadrature,
        error: diff,
    })
}

/// Full period from the quadrature.
pub fn period_quad(p: ConeParam) -> Result<PeriodResult> {
    let h = half_period_quad(p)?;
    Ok(PeriodResult {
        period: 2.0 * h.period,
        error: 2.0 * h.error,
        ..h
    })
}

/// `T = √3π (1 − α/(4√3))`, error flagged as `α^{3/2}`.
pub fn period_series(alpha: f64) -> PeriodResult {
    PeriodResult {
        period: ENDPOINT_PERIOD * (1.0 - alpha / (4.0 * 3f64.sqrt())),
        method: PeriodMethod::Series,
        error: alpha.max(0.0).powf(1.5),
    }
}

pub type ConeRhs = Box<dyn Fn(f64, &[f64; 2]) -> [f64; 2] + Send + Sync>;

/// Right-hand side of the first-order system in `(u, p = u′)`.
pub fn cone_rhs(c: f64) -> ConeRhs {
    Box::new(move |_tau, y: &[f64; 2]| [y[1], -4.0 / 9.0 * y[0] + 2.0 / 9.0 * c / (y[0] * y[0])])
}

/// `(9/4)p² + u² + c/u`.
pub fn energy(c: f64, u: f64, p: f64) -> f64 {
    2.25 * p * p + u * u + c / u
}

/// `u″` from the equation of motion.
pub fn acceleration(c: f64, u: f64) -> f64 {
    -4.0 / 9.0 * u + 2.0 / 9.0 * c / (u * u)
}

pub fn ode_options() -> OdeOptions {
    OdeOptions::with_tol(1e-12)
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub c: f64,
    pub tau: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl Trajectory {
    pub fn energies(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.p)
            .map(|(&u, &p)| energy(self.c, u, p))
            .collect()
    }

    /// `max |E − E(0)|` along the samples.
    pub fn energy_drift(&self) -> f64 {
        let e = self.energies();
        e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max)
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)))
    }
}

/// Adaptive Dormand–Prince integration from `(u0, p0)` over `tau_span`,
/// returning every accepted step. No energy renormalization is applied.
pub fn integrate(c: f64, u0: f64, p0: f64, tau_span: (f64, f64)) -> Result<Trajectory> {
    if !(u0 > 0.0) {
        return Err(PhcError::InvalidInput(format!("u0 must be positive, got {u0}")));
    }
    let solver = Solver::new(cone_rhs(c), ode_options());
    let steps = solver.integrate(tau_span.0, [u0, p0], tau_span.1)?;
    if let Some((t, _)) = steps.iter().find(|(_, y)| y[0] <= 1e-12) {
        return Err(PhcError::BlowUp { t: *t });
    }
    let mut tr = Trajectory {
        c,
        tau: Vec::with_capacity(steps.len()),
        u: Vec::with_capacity(steps.len()),
        p: Vec::with_capacity(steps.len()),
    };
    for (t, y) in steps {
        tr.tau.push(t);
        tr.u.push(y[0]);
        tr.p.push(y[1]);
    }
    Ok(tr)
}

/// Period from the return map to the section `p = 0, u = u_min`. The
/// intermediate passage through `u_max` gives an independent estimate of
/// the half period, and their disagreement is reported as the error.
pub fn period_from_ode(p: ConeParam) -> Result<PeriodResult> {
    if p.is_degenerate() {
        return Err(PhcError::EndpointDegenerate {
            limit: 0.5 * ENDPOINT_PERIOD,
        });
    }
    let roots = cubic_roots(p)?;
    let solver = Solver::new(cone_rhs(p.c), ode_options());
    let y0 = [roots.u_min, 0.0];
    let t_max = 4.0 * ENDPOINT_PERIOD;
    let half = solver
        .find_event(0.0, y0, t_max, -1, 0, |_, y| y[1])?
        .ok_or(PhcError::BlowUp { t: t_max })?;
    let full = solver
        .find_event(half.t, half.y, t_max, 1, 0, |_, y| y[1])?
        .ok_or(PhcError::BlowUp { t: t_max })?;
    Ok(PeriodResult {
        period: full.t,
        method: PeriodMethod::Ode,
        error: (2.0 * half.t - full.t).abs(),
    })
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Tabulated `T(c)` over the scan range, evaluated in parallel.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodTable {
    pub c: Vec<f64>,
    pub period: Vec<f64>,
}

impl PeriodTable {
    pub fn build(n: usize) -> Result<Self> {
        let lo = SCAN_C_MIN;
        let hi = C_MAX - SCAN_C_GAP;
        let c: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let period = c
            .par_iter()
            .map(|&c| period_quad(ConeParam::new(c)?).map(|r| r.period))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { c, period })
    }

    pub fn range(&self) -> (f64, f64) {
        self.period
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)))
    }
}

/// Parameter with `T(c) = target`, bracketed from `table` and bisected.
pub fn find_c_for_target(target: f64, table: &PeriodTable) -> Result<ConeParam> {
    let (lo, hi) = table.range();
    let out_of_range = || PhcError::TargetOutOfRange { target, lo, hi };
    if !(target > lo && target < hi) || target >= ENDPOINT_PERIOD {
        return Err(out_of_range());
    }
    let idx = table
        .period
        .windows(2)
        .position(|w| (w[0] - target) * (w[1] - target) <= 0.0)
        .ok_or_else(out_of_range)?;
    let g = |c: f64| {
        ConeParam::new(c)
            .and_then(period_quad)
            .map(|r| r.period - target)
            .unwrap_or(f64::NAN)
    };
    let c = bisect(g, table.c[idx], table.c[idx + 1], 1e-16, 200).ok_or_else(out_of_range)?;
    let p = ConeParam::new(c)?;
    let residual = g(c).abs();
    if residual > 1e-9 {
        return Err(PhcError::NonPeriodic { mismatch: residual });
    }
    Ok(p)
}

/// Parameter with `T(c) = 2πa/b`.
pub fn find_c_for_period(a: u32, b: u32) -> Result<ConeParam> {
    if a == 0 || b == 0 || gcd(a, b) != 1 {
        return Err(PhcError::InvalidInput(format!("({a}, {b}) must be coprime positive integers")));
    }
    let table = PeriodTable::build(SCAN_POINTS)?;
    find_c_for_target(2.0 * PI * a as f64 / b as f64, &table)
}

/// A cone parameter together with its period, optional rational data and a
/// dense trajectory over one period starting from `(u_min, 0)`.
#[derive(Clone)]
pub struct ConeSolution {
    pub param: ConeParam,
    pub roots: CubicRoots,
    pub period: f64,
    /// `(a, b)` with `T = 2πa/b`.
    pub rational: Option<(u32, u32)>,
    trajectory: Option<Arc<DenseTrajectory<ConeRhs, 2>>>,
}

impl std::fmt::Debug for ConeSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConeSolution")
            .field("param", &self.param)
            .field("roots", &self.roots)
            .field("period", &self.period)
            .field("rational", &self.rational)
            .finish()
    }
}

impl ConeSolution {
    pub fn new(p: ConeParam) -> Result<Self> {
        let roots = cubic_roots(p)?;
        if p.is_degenerate() {
            return Ok(Self {
                param: p,
                roots,
                period: ENDPOINT_PERIOD,
                rational: None,
                trajectory: None,
            });
        }
        let period = period_quad(p)?.period;
        let traj = DenseTrajectory::build(cone_rhs(p.c), ode_options(), 0.0, [roots.u_min, 0.0], period)?;
        Ok(Self {
            param: p,
            roots,
            period,
            rational: None,
            trajectory: Some(Arc::new(traj)),
        })
    }

    /// Solution with period `2πa/b`.
    pub fn rational(a: u32, b: u32) -> Result<Self> {
        let p = find_c_for_period(a, b)?;
        let mut s = Self::new(p)?;
        s.rational = Some((a, b));
        Ok(s)
    }

    /// The constant solution `u ≡ 3^{−1/2}` at `c = 2/3^{3/2}`.
    pub fn constant() -> Self {
        Self::new(ConeParam { c: C_MAX }).expect("endpoint parameter is admissible")
    }

    pub fn c(&self) -> f64 {
        self.param.c
    }

    pub fn is_constant(&self) -> bool {
        self.trajectory.is_none()
    }

    /// Number of turns of φ before the surface closes: `a` when `T = 2πa/b`,
    /// and 1 for the constant solution.
    pub fn winding(&self) -> Option<u32> {
        if self.is_constant() {
            return Some(1);
        }
        self.rational.map(|(a, _)| a)
    }

    /// Mismatch between `b` periods and `a` full turns.
    pub fn closure_mismatch(&self) -> f64 {
        match (self.is_constant(), self.rational) {
            (true, _) => 0.0,
            (false, Some((a, b))) => (b as f64 * self.period - 2.0 * PI * a as f64).abs(),
            (false, None) => f64::INFINITY,
        }
    }

    /// `(u, u′, u″)` at `τ`.
    pub fn state(&self, tau: f64) -> Result<[f64; 3]> {
        let c = self.c();
        let Some(traj) = &self.trajectory else {
            let u = 1.0 / 3f64.sqrt();
            return Ok([u, 0.0, 0.0]);
        };
        let t = tau.rem_euclid(self.period);
        let y = traj.eval(t)?;
        Ok([y[0], y[1], acceleration(c, y[0])])
    }

    /// `∫ 6⁻¹u⁻¹(2u² − c/u)² dτ` over one period of `u`: the `dt∧df` energy of
    /// the cone inside the unit ball, per period. Stokes reduces it to
    /// `∫ (3/4)(2u² − c/u)u″ dτ`, and the equation of motion gives the 1/6.
    pub fn dtdf_integral_one_period(&self) -> Result<f64> {
        let c = self.c();
        let density = |u: f64| (2.0 * u * u - c / u).powi(2) / (6.0 * u);
        if self.is_constant() {
            return Ok(density(1.0 / 3f64.sqrt()) * 2.0 * PI);
        }
        let mut err = None;
        let (v, _) = adaptive_gk(
            |tau| match self.state(tau) {
                Ok(s) => density(s[0]),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            self.period,
            1e-13,
            1e-12,
            4000,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}
