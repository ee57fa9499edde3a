//! Explicit pseudo-holomorphic families with exact tangent frames, and the
//! pointwise J-invariance residual of a sampled surface.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::cone_dynamics::ConeSolution;
use crate::error::{PhcError, Result};
use crate::geometry::{apply_jay, omega_at, CartesianPoint4, Circle, TangentVector4};
use crate::numerics::fd::fornberg_weights;
use crate::numerics::ode::{DenseTrajectory, OdeOptions};
use crate::numerics::roots::bisect;

/// Sample grids stay this far from the vanishing circle in the radial
/// parameter.
pub const S_FLOOR: f64 = 1e-3;

/// Point on a surface with the partial derivatives of the parametrization.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub point: CartesianPoint4,
    pub t1: TangentVector4,
    pub t2: TangentVector4,
}

/// A parametrized surface over a rectangle in `(s1, s2)`.
pub trait Surface: Send + Sync {
    fn sample(&self, s1: f64, s2: f64) -> Result<SurfaceSample>;

    /// Full parameter rectangle `[[s1_lo, s1_hi], [s2_lo, s2_hi]]`, possibly
    /// touching the vanishing circle on one edge.
    fn domain(&self) -> [[f64; 2]; 2];

    /// Rectangle used for sample grids, with the edge on the vanishing circle
    /// pulled in by [`S_FLOOR`].
    fn sample_domain(&self) -> [[f64; 2]; 2] {
        self.domain()
    }

    fn circle(&self) -> Circle;

    fn label(&self) -> String;

    /// Parameter rectangles covering the part of the surface with circular
    /// `|t − t0| ≤ radius` and `(ρ² + z²)^{1/2} ≤ radius`.
    fn windows(&self, _t0: f64, _radius: f64) -> Vec<[[f64; 2]; 2]> {
        vec![self.domain()]
    }

    /// Parameters along which the parametrization is periodic.
    fn periodic_axes(&self) -> [bool; 2] {
        [false, false]
    }

    /// Tensor grid of `n1 × n2` parameter pairs (cell midpoints) over the
    /// sample domain.
    fn grid(&self, n1: usize, n2: usize) -> Vec<(f64, f64)> {
        let d = self.sample_domain();
        let mut out = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let a = d[0][0] + (d[0][1] - d[0][0]) * (i as f64 + 0.5) / n1 as f64;
            for j in 0..n2 {
                let b = d[1][0] + (d[1][1] - d[1][0]) * (j as f64 + 0.5) / n2 as f64;
                out.push((a, b));
            }
        }
        out
    }

    fn point(&self, s1: f64, s2: f64) -> Result<CartesianPoint4> {
        Ok(self.sample(s1, s2)?.point)
    }
}

/// Level sets of the action coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum E16Variant {
    /// `{φ = c, h = c′}`.
    PhiH,
    /// `{t = c, f = c′}` with `c′ > 0`.
    TfPositive,
    /// `{t = c, f = c′ ≤ 0}`, on the side `sign·z > 0`.
    TfNonPositive { sign: i8 },
}

/// Family-specific data.
#[derive(Clone, Debug)]
pub enum Family {
    /// Flat plane `{z = 0, φ = ν}` parametrized by `(t, s)`.
    E13 { nu: f64 },
    /// Axis half-plane `{x = y = 0, sign·z > 0}` parametrized by `(t, s)`.
    E14 { sign: i8 },
    /// Cone over the trajectory of the oscillator, parametrized by `(s, τ)`.
    E15 { cone: Arc<ConeSolution>, sign: i8, t0: f64 },
    /// `{φ = c, h = c′ ≠ 0}` by `(t, ρ)`.
    E16PhiH { phi: f64, h: f64 },
    /// `{t = c, f = c′ > 0}` by `(φ, z)`.
    E16TfPositive { t: f64, f: f64 },
    /// `{t = c, f = c′ ≤ 0, sign·z > 0}` by `(φ, ρ)`.
    E16TfNonPositive { t: f64, f: f64, sign: i8 },
    /// Spiral family by `(ψ, s)`.
    E17 { q: u32, p: i32, alpha: f64, profile: Arc<SpiralProfile> },
    /// Non-holomorphic control `(t, s) ↦ (t, s, 0, slope·s)`.
    TiltedPlane { slope: f64 },
}

#[derive(Clone, Debug)]
pub struct ParamSurface {
    pub family: Family,
    pub circle: Circle,
    domain: [[f64; 2]; 2],
    /// Which parameter (0 or 1) reaches the vanishing circle at its lower end.
    radial: Option<usize>,
}

pub fn make_e13(nu: f64) -> ParamSurface {
    make_e13_on(nu, Circle::default())
}

pub fn make_e13_on(nu: f64, circle: Circle) -> ParamSurface {
    ParamSurface {
        family: Family::E13 { nu },
        circle,
        domain: [[0.0, circle.length], [0.0, 1.0]],
        radial: Some(1),
    }
}

pub fn make_e14(sign: i8) -> ParamSurface {
    ParamSurface {
        family: Family::E14 { sign: sign.signum() },
        circle: Circle::default(),
        domain: [[0.0, 1.0], [0.0, 1.0]],
        radial: Some(1),
    }
}

/// Negative control: the plane `z = slope·s` over the `x`-axis.
pub fn make_tilted_plane(slope: f64) -> ParamSurface {
    ParamSurface {
        family: Family::TiltedPlane { slope },
        circle: Circle::default(),
        domain: [[0.0, 1.0], [0.0, 1.0 / (1.0 + slope * slope).sqrt()]],
        radial: Some(1),
    }
}

/// Cone with vertex at `(t0, 0)`; `s ∈ (0, 1]`, `τ ∈ [0, 2πn]` where `n` is
/// the number of turns before the surface closes.
pub fn make_e15(cone: ConeSolution, sign: i8, t0: f64) -> Result<ParamSurface> {
    let mismatch = cone.closure_mismatch();
    if mismatch > 1e-6 {
        return Err(PhcError::NonPeriodic { mismatch });
    }
    let n = cone.winding().ok_or(PhcError::NonPeriodic { mismatch })?;
    Ok(ParamSurface {
        family: Family::E15 {
            cone: Arc::new(cone),
            sign: sign.signum(),
            t0,
        },
        circle: Circle::default(),
        domain: [[0.0, 1.0], [0.0, 2.0 * PI * n as f64]],
        radial: Some(0),
    })
}

/// Roots `X_lo < X_hi` of `X³ − X² + h² = 0` in `(0, 1)`; the level
/// `{φ = c, h}` lies in the ball for `ρ² ∈ (X_lo, X_hi)`.
fn phi_h_rho2_range(h: f64) -> Result<(f64, f64)> {
    let h2 = h * h;
    if h2 >= 4.0 / 27.0 {
        return Err(PhcError::EmptyLevel(format!("h = {h} exceeds the ball bound (4/27)^(1/2)")));
    }
    let g = |x: f64| x * x * x - x * x + h2;
    let lo = bisect(g, 0.0, 2.0 / 3.0, 1e-16, 200).ok_or_else(|| PhcError::EmptyLevel("no inner root".into()))?;
    let hi = bisect(g, 2.0 / 3.0, 1.0, 1e-16, 200).ok_or_else(|| PhcError::EmptyLevel("no outer root".into()))?;
    Ok((lo, hi))
}

/// Level-set members. `cst` is the value of φ (for `PhiH`) or `t`; `cst2` is
/// the value of `h` or `f`.
pub fn make_e16(variant: E16Variant, cst: f64, cst2: f64) -> Result<ParamSurface> {
    let circle = Circle::default();
    match variant {
        E16Variant::PhiH if cst2 == 0.0 => Ok(make_e13(cst)),
        E16Variant::PhiH => {
            let (lo, hi) = phi_h_rho2_range(cst2)?;
            Ok(ParamSurface {
                family: Family::E16PhiH { phi: cst, h: cst2 },
                circle,
                domain: [[0.0, circle.length], [lo.sqrt(), hi.sqrt()]],
                radial: None,
            })
        }
        E16Variant::TfPositive => {
            if !(cst2 > 0.0 && cst2 < 0.5) {
                return Err(PhcError::EmptyLevel(format!("f = {cst2} must lie in (0, 1/2)")));
            }
            let zmax = ((1.0 - 2.0 * cst2) / 3.0).sqrt();
            Ok(ParamSurface {
                family: Family::E16TfPositive { t: cst, f: cst2 },
                circle,
                domain: [[0.0, 2.0 * PI], [-zmax, zmax]],
                radial: None,
            })
        }
        E16Variant::TfNonPositive { sign } => {
            if !(cst2 <= 0.0 && cst2 > -1.0) || sign == 0 {
                return Err(PhcError::EmptyLevel(format!("f = {cst2} must lie in (-1, 0] with a side chosen")));
            }
            let rmax = (2.0 * (1.0 + cst2) / 3.0).sqrt();
            Ok(ParamSurface {
                family: Family::E16TfNonPositive {
                    t: cst,
                    f: cst2,
                    sign: sign.signum(),
                },
                circle,
                domain: [[0.0, 2.0 * PI], [0.0, rmax]],
                radial: Some(1),
            })
        }
    }
}

pub const E17_S_MAX: f64 = 0.9;
const E17_S0: f64 = 1e-4;

type ProfileRhs = Box<dyn Fn(f64, &[f64; 1]) -> [f64; 1] + Send + Sync>;

/// Solution `z(s)` of `(1 + 2kz) s z′ + 2z = k s²`, `z ~ (k/4) s²` at 0.
pub struct SpiralProfile {
    pub k: f64,
    dense: DenseTrajectory<ProfileRhs, 1>,
}

impl std::fmt::Debug for SpiralProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpiralProfile").field("k", &self.k).finish()
    }
}

impl SpiralProfile {
    pub fn new(k: f64) -> Result<Self> {
        let rhs: ProfileRhs = Box::new(move |s, y: &[f64; 1]| [(k * s * s - 2.0 * y[0]) / ((1.0 + 2.0 * k * y[0]) * s)]);
        let z0 = Self::series(k, E17_S0);
        let opts = OdeOptions {
            h_init: 1e-6,
            h_max: 0.01,
            // z ~ s² near the axis, so only a relative tolerance keeps ν = h/u³ smooth.
            atol: 1e-22,
            ..OdeOptions::with_tol(1e-13)
        };
        let dense = DenseTrajectory::build(rhs, opts, E17_S0, [z0], E17_S_MAX)?;
        Ok(Self { k, dense })
    }

    /// Two-term expansion `(k/4)s² − (k³/24)s⁴`.
    pub fn series(k: f64, s: f64) -> f64 {
        let s2 = s * s;
        0.25 * k * s2 - k.powi(3) / 24.0 * s2 * s2
    }

    pub fn z(&self, s: f64) -> Result<f64> {
        if s <= E17_S0 {
            return Ok(Self::series(self.k, s));
        }
        Ok(self.dense.eval(s)?[0])
    }

    /// `(z, z′)`, with `z′` from the equation itself.
    pub fn z_and_slope(&self, s: f64) -> Result<(f64, f64)> {
        let z = self.z(s)?;
        let k = self.k;
        let dz = if s == 0.0 {
            0.0
        } else {
            (k * s * s - 2.0 * z) / ((1.0 + 2.0 * k * z) * s)
        };
        Ok((z, dz))
    }

    /// `|(1 + 2kz) s z′ + 2z − k s²|` with `z′` taken by a 5-point centered
    /// difference of the integrated solution, so the check is independent of
    /// the right-hand side used to integrate.
    pub fn equation_residual(&self, s: f64) -> Result<f64> {
        let h = 1e-3 * s.min(E17_S_MAX - s).max(1e-3);
        let xs = [-2.0 * h, -h, 0.0, h, 2.0 * h];
        let w = fornberg_weights(0.0, &xs, 1);
        let mut dz = 0.0;
        for (x, wk) in xs.iter().zip(&w[1]) {
            dz += wk * self.z(s + x)?;
        }
        let z = self.z(s)?;
        Ok(((1.0 + 2.0 * self.k * z) * s * dz + 2.0 * z - self.k * s * s).abs())
    }
}

/// Default circle length for the spiral family, for which `t = qψ`.
pub const E17_CIRCLE_LENGTH: f64 = 2.0 * PI;

/// Spiral family `(ψ, s) ↦ (qψL/2π, s cos(pψ + α), s sin(pψ + α), z(s))`
/// on the circle of length `2π`.
pub fn make_e17(q: u32, p: i32, alpha: f64) -> Result<ParamSurface> {
    make_e17_on(q, p, alpha, Circle::new(E17_CIRCLE_LENGTH))
}

/// Spiral family on a circle of any length; the profile equation uses
/// `k = 2πp/(qL)`, the slope of φ against `t` along the surface.
pub fn make_e17_on(q: u32, p: i32, alpha: f64, circle: Circle) -> Result<ParamSurface> {
    if q == 0 {
        return Err(PhcError::InvalidInput("q must be positive".into()));
    }
    let g = gcd(p.unsigned_abs(), q);
    if g != 1 && !(p == 0 && q == 1) {
        return Err(PhcError::InvalidInput(format!("gcd(p, q) = {g}, expected 1")));
    }
    let k = 2.0 * PI * p as f64 / (q as f64 * circle.length);
    Ok(ParamSurface {
        family: Family::E17 {
            q,
            p,
            alpha,
            profile: Arc::new(SpiralProfile::new(k)?),
        },
        circle,
        domain: [[0.0, 2.0 * PI], [0.0, E17_S_MAX]],
        radial: Some(1),
    })
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn tv(t: f64, x: f64, y: f64, z: f64) -> TangentVector4 {
    TangentVector4::new(t, x, y, z)
}

impl ParamSurface {
    pub fn is_cone(&self) -> bool {
        matches!(self.family, Family::E13 { .. } | Family::E14 { .. } | Family::E15 { .. })
    }

    /// Vertex of the cone in `t`, when the family is a cone at a single point.
    pub fn cone_vertex(&self) -> Option<f64> {
        match &self.family {
            Family::E15 { t0, .. } => Some(*t0),
            _ => None,
        }
    }
}

impl Surface for ParamSurface {
    fn sample(&self, s1: f64, s2: f64) -> Result<SurfaceSample> {
        let (point, t1, t2) = match &self.family {
            Family::E13 { nu } => {
                let (c, s) = (nu.cos(), nu.sin());
                (
                    CartesianPoint4::new(s1, s2 * c, s2 * s, 0.0),
                    tv(1.0, 0.0, 0.0, 0.0),
                    tv(0.0, c, s, 0.0),
                )
            }
            Family::E14 { sign } => {
                let sg = *sign as f64;
                (
                    CartesianPoint4::new(s1, 0.0, 0.0, sg * s2),
                    tv(1.0, 0.0, 0.0, 0.0),
                    tv(0.0, 0.0, 0.0, sg),
                )
            }
            Family::TiltedPlane { slope } => (
                CartesianPoint4::new(s1, s2, 0.0, slope * s2),
                tv(1.0, 0.0, 0.0, 0.0),
                tv(0.0, 1.0, 0.0, *slope),
            ),
            Family::E15 { cone, sign, t0 } => {
                let (s, tau) = (s1, s2);
                let sg = *sign as f64;
                let c = cone.c();
                let [u, up, upp] = cone.state(tau)?;
                let rho_unit = c.sqrt() / u.sqrt();
                let rho = s * rho_unit;
                let drho_dtau = -0.5 * s * c.sqrt() * u.powf(-1.5) * up;
                let (cs, sn) = (tau.cos(), tau.sin());
                (
                    CartesianPoint4::new(t0 + sg * 1.5 * s * up, rho * cs, rho * sn, sg * s * u),
                    tv(sg * 1.5 * up, rho_unit * cs, rho_unit * sn, sg * u),
                    tv(
                        sg * 1.5 * s * upp,
                        drho_dtau * cs - rho * sn,
                        drho_dtau * sn + rho * cs,
                        sg * s * up,
                    ),
                )
            }
            Family::E16PhiH { phi, h } => {
                let (t, rho) = (s1, s2);
                let (c, s) = (phi.cos(), phi.sin());
                (
                    CartesianPoint4::new(t, rho * c, rho * s, h / (rho * rho)),
                    tv(1.0, 0.0, 0.0, 0.0),
                    tv(0.0, c, s, -2.0 * h / rho.powi(3)),
                )
            }
            Family::E16TfPositive { t, f } => {
                let (phi, z) = (s1, s2);
                let rho = (2.0 * f + 2.0 * z * z).sqrt();
                let drho = 2.0 * z / rho;
                let (c, s) = (phi.cos(), phi.sin());
                (
                    CartesianPoint4::new(*t, rho * c, rho * s, z),
                    tv(0.0, -rho * s, rho * c, 0.0),
                    tv(0.0, drho * c, drho * s, 1.0),
                )
            }
            Family::E16TfNonPositive { t, f, sign } => {
                let (phi, rho) = (s1, s2);
                let z = *sign as f64 * (0.5 * (rho * rho - 2.0 * f)).sqrt();
                let dz = if z == 0.0 { *sign as f64 / 2f64.sqrt() } else { rho / (2.0 * z) };
                let (c, s) = (phi.cos(), phi.sin());
                (
                    CartesianPoint4::new(*t, rho * c, rho * s, z),
                    tv(0.0, -rho * s, rho * c, 0.0),
                    tv(0.0, c, s, dz),
                )
            }
            Family::E17 { q, p, alpha, profile } => {
                let (psi, s) = (s1, s2);
                let (z, dz) = profile.z_and_slope(s)?;
                let ang = *p as f64 * psi + alpha;
                let (c, sn) = (ang.cos(), ang.sin());
                let dt = *q as f64 * self.circle.length / (2.0 * PI);
                let pf = *p as f64;
                (
                    CartesianPoint4::new(dt * psi, s * c, s * sn, z),
                    tv(dt, -pf * s * sn, pf * s * c, 0.0),
                    tv(0.0, c, sn, dz),
                )
            }
        };
        Ok(SurfaceSample { point, t1, t2 })
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }

    fn sample_domain(&self) -> [[f64; 2]; 2] {
        let mut d = self.domain;
        if let Some(i) = self.radial {
            d[i][0] = d[i][0].max(S_FLOOR);
        }
        d
    }

    fn circle(&self) -> Circle {
        self.circle
    }

    fn label(&self) -> String {
        match &self.family {
            Family::E13 { nu } => format!("e13(nu={nu})"),
            Family::E14 { sign } => format!("e14({})", if *sign > 0 { "+" } else { "-" }),
            Family::E15 { cone, sign, t0 } => format!(
                "e15(c={}, sign={sign}, t0={t0}, ab={:?})",
                cone.c(),
                cone.rational
            ),
            Family::E16PhiH { phi, h } => format!("e16a(phi={phi}, h={h})"),
            Family::E16TfPositive { t, f } => format!("e16b(t={t}, f={f})"),
            Family::E16TfNonPositive { t, f, sign } => format!("e16c(t={t}, f={f}, sign={sign})"),
            Family::E17 { q, p, alpha, .. } => format!("e17(q={q}, p={p}, alpha={alpha})"),
            Family::TiltedPlane { slope } => format!("tilted(slope={slope})"),
        }
    }

    fn periodic_axes(&self) -> [bool; 2] {
        match self.family {
            Family::E15 { .. } => [false, true],
            _ => [true, false],
        }
    }

    fn windows(&self, t0: f64, radius: f64) -> Vec<[[f64; 2]; 2]> {
        let l = self.circle.length;
        let d = self.domain;
        match &self.family {
            Family::E13 { .. } | Family::E14 { .. } | Family::TiltedPlane { .. } | Family::E16PhiH { .. } => {
                let tc = self.circle.reduce(t0);
                let r2 = match self.family {
                    Family::E16PhiH { .. } => d[1],
                    _ => [d[1][0], d[1][1].min(radius)],
                };
                if r2[0] >= r2[1] {
                    return Vec::new();
                }
                if 2.0 * radius >= l {
                    return vec![[d[0], r2]];
                }
                vec![[[tc - radius, tc + radius], r2]]
            }
            Family::E17 { q, .. } => {
                let per = *q as f64 * l / (2.0 * PI);
                let half = radius / per;
                let tc = self.circle.reduce(t0);
                if 2.0 * radius >= l {
                    return vec![[d[0], [d[1][0], d[1][1].min(radius)]]];
                }
                (0..*q)
                    .map(|j| {
                        let centre = (tc + j as f64 * l) / per;
                        [[centre - half, centre + half], [d[1][0], d[1][1].min(radius)]]
                    })
                    .collect()
            }
            Family::E15 { t0: vertex, .. } => {
                let off = self.circle.offset(t0, *vertex).abs();
                vec![[[d[0][0], d[0][1].min(radius + off)], d[1]]]
            }
            Family::E16TfPositive { .. } | Family::E16TfNonPositive { .. } => vec![d],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    pub max: f64,
    pub mean: f64,
    /// Parameters of the worst sample.
    pub worst: (f64, f64),
    pub samples: usize,
}

impl ResidualReport {
    pub fn from_values(values: &[(f64, (f64, f64))]) -> Self {
        let mut max = 0.0;
        let mut worst = (f64::NAN, f64::NAN);
        let mut sum = 0.0;
        for &(v, at) in values {
            sum += v;
            if v > max || worst.0.is_nan() {
                max = v;
                worst = at;
            }
        }
        Self {
            max,
            mean: if values.is_empty() { 0.0 } else { sum / values.len() as f64 },
            worst,
            samples: values.len(),
        }
    }
}

/// `‖(1 − Π) J T1‖ / ‖J T1‖`, with `Π` the flat-orthogonal projection onto
/// `span(T1, T2)`.
pub fn pointwise_holomorphy_residual(sample: &SurfaceSample, s1: f64, s2: f64) -> Result<f64> {
    let (a, b) = (sample.t1.0, sample.t2.0);
    // Gram–Schmidt with a relative degeneracy test.
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(PhcError::DegenerateFrame { s1, s2 });
    }
    let e1 = a / na;
    let b_perp = b - e1 * e1.dot(&b);
    if b_perp.norm() < 1e-10 * nb {
        return Err(PhcError::DegenerateFrame { s1, s2 });
    }
    let e2 = b_perp / b_perp.norm();
    let j = apply_jay(&sample.point, &sample.t1)?.0;
    let proj = e1 * e1.dot(&j) + e2 * e2.dot(&j);
    Ok((j - proj).norm() / j.norm())
}

pub fn holomorphy_residual<S: Surface + ?Sized>(surface: &S, samples: &[(f64, f64)]) -> Result<ResidualReport> {
    let vals = samples
        .par_iter()
        .map(|&(a, b)| {
            let smp = surface.sample(a, b)?;
            Ok((pointwise_holomorphy_residual(&smp, a, b)?, (a, b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_values(&vals))
}

/// `ω(T1, T2)` at a sample.
pub fn omega_pullback(sample: &SurfaceSample) -> f64 {
    omega_at(&sample.point).eval(&sample.t1, &sample.t2)
}

/// Largest deviation between the frame and 4th-order centered differences
/// of the sampled points with step `h`, relative to the frame size.
pub fn frame_consistency<S: Surface + ?Sized>(surface: &S, s1: f64, s2: f64, h: f64) -> Result<f64> {
    let smp = surface.sample(s1, s2)?;
    let diff = |d1: f64, d2: f64| -> Result<TangentVector4> {
        let p = |k: f64| surface.point(s1 + k * d1, s2 + k * d2).map(|p| p.as_array());
        let (pp, p1, m1, mm) = (p(2.0)?, p(1.0)?, p(-1.0)?, p(-2.0)?);
        let v: [f64; 4] = std::array::from_fn(|i| (-pp[i] + 8.0 * p1[i] - 8.0 * m1[i] + mm[i]) / (12.0 * h));
        Ok(TangentVector4::new(v[0], v[1], v[2], v[3]))
    };
    let d1 = diff(h, 0.0)?;
    let d2 = diff(0.0, h)?;
    let scale = smp.t1.norm().max(smp.t2.norm()).max(1e-300);
    Ok(((d1.0 - smp.t1.0).norm().max((d2.0 - smp.t2.0).norm())) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::to_action_coords;

    fn max_residual(s: &ParamSurface, n: usize) -> f64 {
        holomorphy_residual(s, &s.grid(n, n)).unwrap().max
    }

    #[test]
    fn e13_pullback_is_s() {
        let s = make_e13(0.7);
        for (a, b) in s.grid(8, 8) {
            let smp = s.sample(a, b).unwrap();
            assert!((omega_pullback(&smp) - b).abs() < 1e-15);
        }
        assert!(max_residual(&s, 16) < 1e-14);
    }

    #[test]
    fn e14_pullback_is_twice_s() {
        for sign in [1, -1] {
            let s = make_e14(sign);
            for (a, b) in s.grid(8, 8) {
                let smp = s.sample(a, b).unwrap();
                assert!((omega_pullback(&smp).abs() - 2.0 * b).abs() < 1e-15);
            }
            assert_eq!(max_residual(&s, 16), 0.0);
        }
    }

    #[test]
    fn tilted_plane_fails() {
        assert!(max_residual(&make_tilted_plane(0.1), 16) > 1e-3);
    }

    #[test]
    fn e16_levels() {
        for (v, c, c2) in [
            (E16Variant::PhiH, 0.3, 0.05),
            (E16Variant::TfPositive, 0.2, 0.1),
            (E16Variant::TfNonPositive { sign: 1 }, 0.2, -0.1),
            (E16Variant::TfNonPositive { sign: -1 }, 0.2, 0.0),
        ] {
            let s = make_e16(v, c, c2).unwrap();
            assert!(max_residual(&s, 24) < 1e-12, "{}", s.label());
            for (a, b) in s.grid(5, 5) {
                let p = s.point(a, b).unwrap();
                let ac = to_action_coords(&p);
                match v {
                    E16Variant::PhiH => assert!((ac.h - c2).abs() < 1e-14),
                    _ => assert!((ac.f - c2).abs() < 1e-14),
                }
                assert!(p.radial() < 1.0);
            }
        }
        assert!(make_e16(E16Variant::TfPositive, 0.0, -0.1).is_err());
        assert!(make_e16(E16Variant::PhiH, 0.0, 0.5).is_err());
    }

    #[test]
    fn e16_phi_zero_level_is_e13() {
        let s = make_e16(E16Variant::PhiH, 0.4, 0.0).unwrap();
        assert!(matches!(s.family, Family::E13 { nu } if nu == 0.4));
    }

    #[test]
    fn e17_profile_start_and_equation() {
        let s = make_e17(2, 1, 0.0).unwrap();
        let Family::E17 { profile, .. } = &s.family else { unreachable!() };
        let z = profile.z(1e-3).unwrap();
        assert!((z / 1e-6 / 0.125 - 1.0).abs() < 1e-5);
        for x in [0.01, 0.2, 0.5, 0.85] {
            assert!(profile.equation_residual(x).unwrap() < 1e-10, "s = {x}");
        }
        assert!(max_residual(&s, 32) < 1e-8);
    }

    #[test]
    fn e17_p_zero_is_plane() {
        let s = make_e17_on(1, 0, 0.3, Circle::default()).unwrap();
        let e13 = make_e13(0.3);
        for (a, b) in s.grid(4, 4) {
            let p = s.point(a, b).unwrap();
            let t = a / (2.0 * PI);
            let q = e13.point(t, b).unwrap();
            assert!((p.t - q.t).abs() < 1e-15 && (p.x - q.x).abs() < 1e-15 && p.z == 0.0);
        }
    }

    #[test]
    fn frames_match_differences() {
        let surfaces = [
            make_e13(0.2),
            make_e16(E16Variant::PhiH, 0.1, 0.05).unwrap(),
            make_e16(E16Variant::TfPositive, 0.2, 0.1).unwrap(),
            make_e17(3, 2, 0.1).unwrap(),
        ];
        for s in &surfaces {
            let d = s.sample_domain();
            let (a, b) = (0.5 * (d[0][0] + d[0][1]), 0.5 * (d[1][0] + d[1][1]));
            assert!(frame_consistency(s, a, b, 1e-3).unwrap() < 1e-8, "{}", s.label());
        }
    }

    #[test]
    fn e15_identities() {
        let cone = ConeSolution::rational(5, 6).unwrap();
        let c = cone.c();
        let s = make_e15(cone, 1, 0.25).unwrap();
        assert!(max_residual(&s, 32) < 1e-8);
        for (a, b) in s.grid(6, 40) {
            let p = s.point(a, b).unwrap();
            let dt = p.t - 0.25;
            assert!((dt * dt + p.rho2() + p.z * p.z - a * a).abs() < 1e-10);
            assert!((to_action_coords(&p).h - c * a.powi(3)).abs() < 1e-10);
        }
        let d = s.sample_domain();
        assert!(frame_consistency(&s, 0.5, 0.5 * d[1][1], 1e-3).unwrap() < 1e-7);
    }

    #[test]
    fn e15_constant_solution_lies_on_cone() {
        let s = make_e15(ConeSolution::constant(), -1, 0.5).unwrap();
        for (a, b) in s.grid(5, 5) {
            let p = s.point(a, b).unwrap();
            assert_eq!(p.t, 0.5);
            assert!((p.rho2() - 2.0 * p.z * p.z).abs() < 1e-15 && p.z < 0.0);
        }
        assert!(max_residual(&s, 16) < 1e-12);
    }

    #[test]
    fn e15_rejects_irrational_period() {
        let cone = ConeSolution::new(crate::cone_dynamics::ConeParam::new(0.2).unwrap()).unwrap();
        assert!(matches!(make_e15(cone, 1, 0.0), Err(PhcError::NonPeriodic { .. })));
    }
}
