//! Integrals of ω and its pieces over region-clipped parts of a sampled
//! surface, the local energy σ(s), the function μ(s), and the cone energy
//! `r³δ_c` with its split into `dt∧df` and `dφ∧dh` parts.
//!
//! Integrals are nested adaptive Gauss–Kronrod: the inner integral runs over
//! `s2` with the region boundary located by dense sampling plus bisection,
//! the outer one over `s1`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::cone_dynamics::ConeSolution;
use crate::error::{PhcError, Result};
use crate::geometry::{dphi_dh_at, dt_df_at, omega_at, CartesianPoint4, Circle};
use crate::numerics::quad::adaptive_gk;
use crate::numerics::roots::bisect;
use crate::surfaces::{Family, ParamSurface, Surface, SurfaceSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormTag {
    Omega,
    DphiDh,
    DtDf,
    /// Induced area form (not a pullback, orientation-free).
    Area,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Cutoff {
    Sharp,
    /// Cubic smoothstep χ, 1 on `[0, 1]` and 0 on `[2, ∞)`.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    /// `(t − t0)² + ρ² + z² ≤ r²` with the circular distance in `t`.
    Ball { t0: f64, r: f64 },
    /// Weight `χ(dist/r)` supported in the ball of radius `2r`.
    SmoothBall { t0: f64, r: f64 },
    /// `ρ² + z² ≤ r²`.
    Tube { r: f64 },
    /// `|h| ≤ s³, ρ ≤ √δ, |z| ≤ δ`.
    OmegaSet { s: f64, delta: f64 },
    Everywhere,
}

/// Non-increasing bump: 1 on `[0, 1]`, cubic smoothstep down to 0 on `[1, 2]`.
pub fn chi(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let y = x - 1.0;
        1.0 - y * y * (3.0 - 2.0 * y)
    }
}

fn ball_dist2(p: &CartesianPoint4, t0: f64, circle: Circle) -> f64 {
    let dt = circle.offset(p.t, t0);
    dt * dt + p.rho2() + p.z * p.z
}

impl Region {
    /// Continuous function that is `≤ 0` exactly on the region.
    pub fn margin(&self, p: &CartesianPoint4, circle: Circle) -> f64 {
        match *self {
            Region::Ball { t0, r } => ball_dist2(p, t0, circle) - r * r,
            Region::SmoothBall { t0, r } => ball_dist2(p, t0, circle) - 4.0 * r * r,
            Region::Tube { r } => p.rho2() + p.z * p.z - r * r,
            Region::OmegaSet { s, delta } => {
                let h = p.z * p.rho2();
                (h.abs() - s.powi(3))
                    .max(p.rho() - delta.sqrt())
                    .max(p.z.abs() - delta)
            }
            Region::Everywhere => -1.0,
        }
    }

    pub fn weight(&self, p: &CartesianPoint4, circle: Circle) -> f64 {
        match *self {
            Region::SmoothBall { t0, r } => chi(ball_dist2(p, t0, circle).sqrt() / r),
            _ => 1.0,
        }
    }

    fn windows<S: Surface + ?Sized>(&self, surface: &S) -> Vec<[[f64; 2]; 2]> {
        match *self {
            Region::Ball { t0, r } => surface.windows(t0, r),
            Region::SmoothBall { t0, r } => surface.windows(t0, 2.0 * r),
            _ => vec![surface.domain()],
        }
    }
}

/// `form(T1, T2)` oriented so that ω is non-negative.
pub fn form_density(sample: &SurfaceSample, form: FormTag) -> f64 {
    let (a, b) = (&sample.t1, &sample.t2);
    if form == FormTag::Area {
        let (aa, bb, ab) = (a.dot(a), b.dot(b), a.dot(b));
        return (aa * bb - ab * ab).max(0.0).sqrt();
    }
    let om = omega_at(&sample.point).eval(a, b);
    let orient = if om < 0.0 { -1.0 } else { 1.0 };
    let v = match form {
        FormTag::Omega => om,
        FormTag::DphiDh => dphi_dh_at(&sample.point).eval(a, b),
        FormTag::DtDf => dt_df_at(&sample.point).eval(a, b),
        FormTag::Area => unreachable!(),
    };
    orient * v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Points used to locate the region boundary along each inner line.
    pub boundary_samples: usize,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            boundary_samples: 64,
            max_panels: 4000,
        }
    }
}

/// Sub-intervals of `[lo, hi]` on which `margin ≤ 0`.
fn inside_intervals<F: FnMut(f64) -> Result<f64>>(mut margin: F, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut ms = Vec::with_capacity(xs.len());
    for &x in &xs {
        ms.push(margin(x)?);
    }
    let mut err = None;
    let mut locate = |a: f64, b: f64| -> f64 {
        bisect(
            |x| match margin(x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            1e-15 * (hi - lo).abs().max(1e-300),
            200,
        )
        .unwrap_or(0.5 * (a + b))
    };
    let mut out = Vec::new();
    let mut start = (ms[0] <= 0.0).then_some(lo);
    for i in 0..n {
        let (a, b) = (ms[i] <= 0.0, ms[i + 1] <= 0.0);
        if a && !b {
            let x = locate(xs[i], xs[i + 1]);
            out.push((start.take().unwrap_or(xs[i]), x));
        } else if !a && b {
            start = Some(locate(xs[i], xs[i + 1]));
        }
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out.into_iter().filter(|(a, b)| b > a).collect())
}

/// `∫ density` over the part of the surface inside `region`.
pub fn integrate_density<S, D>(surface: &S, region: &Region, density: D, opts: QuadOptions) -> Result<Integral>
where
    S: Surface + ?Sized,
    D: Fn(&SurfaceSample) -> f64,
{
    let circle = surface.circle();
    let err_slot: RefCell<Option<PhcError>> = RefCell::new(None);
    let record = |e: PhcError| {
        err_slot.borrow_mut().get_or_insert(e);
    };
    let mut total = Integral { value: 0.0, error: 0.0 };
    for w in region.windows(surface) {
        let mut inner_err = 0.0f64;
        let inner = |s1: f64, inner_err: &mut f64| -> f64 {
            let spans = match inside_intervals(
                |s2| surface.point(s1, s2).map(|p| region.margin(&p, circle)),
                w[1][0],
                w[1][1],
                opts.boundary_samples,
            ) {
                Ok(v) => v,
                Err(e) => {
                    record(e);
                    return 0.0;
                }
            };
            let mut acc = 0.0;
            for (a, b) in spans {
                let (v, e) = adaptive_gk(
                    |s2| match surface.sample(s1, s2) {
                        Ok(smp) => density(&smp) * region.weight(&smp.point, circle),
                        Err(e) => {
                            record(e);
                            0.0
                        }
                    },
                    a,
                    b,
                    0.1 * opts.abs_tol,
                    0.1 * opts.rel_tol,
                    opts.max_panels,
                );
                acc += v;
                *inner_err = inner_err.max(e);
            }
            acc
        };
        let (v, e) = adaptive_gk(
            |s1| inner(s1, &mut inner_err),
            w[0][0],
            w[0][1],
            opts.abs_tol,
            opts.rel_tol,
            opts.max_panels,
        );
        if let Some(e) = err_slot.borrow_mut().take() {
            return Err(e);
        }
        total.value += v;
        total.error += e + inner_err * (w[0][1] - w[0][0]).abs();
    }
    if !total.value.is_finite() {
        return Err(PhcError::RegionClipFailure(format!("non-finite integral over {region:?}")));
    }
    Ok(total)
}

/// Pullback of `form` integrated over the surface inside `region`.
pub fn integrate_form<S: Surface + ?Sized>(surface: &S, form: FormTag, region: &Region) -> Result<Integral> {
    integrate_density(surface, region, |s| form_density(s, form), QuadOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaC {
    pub c: f64,
    /// φ-winding number `n` of the cone.
    pub winding: u32,
    pub delta: f64,
    pub dtdf_part: f64,
    pub dphidh_part: f64,
    /// ω integrated directly over the cone inside `B_1`.
    pub direct: f64,
    pub direct_error: f64,
}

/// Energy of the cone inside the unit ball about its vertex.
pub fn delta_c(cone: &ConeSolution) -> Result<DeltaC> {
    let n = cone
        .winding()
        .ok_or(PhcError::NonPeriodic { mismatch: cone.closure_mismatch() })?;
    let periods = if cone.is_constant() { 1 } else { cone.rational.map(|(_, b)| b).unwrap_or(1) };
    let dtdf_part = periods as f64 * cone.dtdf_integral_one_period()?;
    let dphidh_part = 2.0 * PI * n as f64 * cone.c();
    let surface = crate::surfaces::make_e15(cone.clone(), 1, 0.0)?;
    let direct = integrate_form(&surface, FormTag::Omega, &Region::Ball { t0: 0.0, r: 1.0 })?;
    Ok(DeltaC {
        c: cone.c(),
        winding: n,
        delta: dtdf_part + dphidh_part,
        dtdf_part,
        dphidh_part,
        direct: direct.value,
        direct_error: direct.error,
    })
}

/// Lower bound `(144√3)⁻¹(1 − 12√3c)²` for the `dt∧df` part, meaningful for
/// `c < 1/(12√3)`.
pub fn dtdf_lower_bound(c: f64) -> f64 {
    let k = 12.0 * 3f64.sqrt();
    (1.0 - k * c).powi(2) / (144.0 * 3f64.sqrt())
}

/// `(576√3)⁻¹`, the bound for `c < √3/24`.
pub const DTDF_SMALL_C_BOUND: f64 = 1.002_344_217_343_100_4e-3;

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub t0: f64,
    pub cutoff: Cutoff,
    pub s: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_err: Vec<f64>,
    /// `s⁻³σ(s)`.
    pub scaled: Vec<f64>,
    pub area: Vec<f64>,
    /// `s⁻³σ(s)` non-decreasing within the quadrature error.
    pub monotone: bool,
    /// `max s⁻³σ(s)` over the grid.
    pub zeta_sigma: f64,
    /// `max s⁻²·area` over the grid.
    pub zeta_area: f64,
}

impl EnergyReport {
    /// Largest relative spread of `s⁻³σ(s)` over the grid.
    pub fn scaled_spread(&self) -> f64 {
        let (lo, hi) = self
            .scaled
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        (hi - lo) / hi.abs().max(1e-300)
    }
}

fn check_grid(s: &[f64]) -> Result<()> {
    if s.is_empty() || s.windows(2).any(|w| w[1] <= w[0]) || s[0] <= 0.0 {
        return Err(PhcError::InvalidInput("s grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// σ(s) = ∫ χ_s ω for each `s`, with the area inside the sharp ball.
pub fn sigma_profile<S: Surface + ?Sized>(surface: &S, t0: f64, s: &[f64], cutoff: Cutoff) -> Result<EnergyReport> {
    check_grid(s)?;
    let rows = s
        .par_iter()
        .map(|&r| {
            let region = match cutoff {
                Cutoff::Sharp => Region::Ball { t0, r },
                Cutoff::Smooth => Region::SmoothBall { t0, r },
            };
            let sig = integrate_form(surface, FormTag::Omega, &region)?;
            let area = integrate_form(surface, FormTag::Area, &Region::Ball { t0, r })?;
            Ok((sig, area.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma: Vec<f64> = rows.iter().map(|(i, _)| i.value).collect();
    let sigma_err: Vec<f64> = rows.iter().map(|(i, _)| i.error).collect();
    let area: Vec<f64> = rows.iter().map(|(_, a)| *a).collect();
    let scaled: Vec<f64> = sigma.iter().zip(s).map(|(v, r)| v / r.powi(3)).collect();
    let monotone = (1..s.len()).all(|i| {
        let bar = sigma_err[i] / s[i].powi(3) + sigma_err[i - 1] / s[i - 1].powi(3) + 1e-9 * scaled[i].abs();
        scaled[i] >= scaled[i - 1] - bar
    });
    let zeta_sigma = scaled.iter().cloned().fold(0.0, f64::max);
    let zeta_area = area.iter().zip(s).map(|(a, r)| a / (r * r)).fold(0.0, f64::max);
    Ok(EnergyReport {
        t0,
        cutoff,
        s: s.to_vec(),
        sigma,
        sigma_err,
        scaled,
        area,
        monotone,
        zeta_sigma,
        zeta_area,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MuReport {
    pub delta: f64,
    pub s: Vec<f64>,
    pub mu: Vec<f64>,
    pub err: Vec<f64>,
    pub scaled: Vec<f64>,
    pub sup_scaled: f64,
}

/// μ(s) = ∫ dφ∧dh over the part of the surface over Ω(s).
pub fn mu_profile<S: Surface + ?Sized>(surface: &S, s: &[f64], delta: f64) -> Result<MuReport> {
    check_grid(s)?;
    if !(1.0 / 16.0..=1.0 / 8.0).contains(&delta) {
        return Err(PhcError::OutOfRange {
            name: "delta",
            value: delta,
            detail: "expected 1/16 <= delta <= 1/8".into(),
        });
    }
    let vals = s
        .par_iter()
        .map(|&r| integrate_form(surface, FormTag::DphiDh, &Region::OmegaSet { s: r, delta }))
        .collect::<Result<Vec<_>>>()?;
    let mu: Vec<f64> = vals.iter().map(|v| v.value).collect();
    let err: Vec<f64> = vals.iter().map(|v| v.error).collect();
    let scaled: Vec<f64> = mu.iter().zip(s).map(|(m, r)| m / r.powi(3)).collect();
    let sup_scaled = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(MuReport {
        delta,
        s: s.to_vec(),
        mu,
        err,
        scaled,
        sup_scaled,
    })
}

/// Largest `s` for which the piece `{|h| ≤ s³}` of an `E15` cone lies inside
/// `ρ ≤ √δ, |z| ≤ δ` and inside the parametrized part `s_cone ≤ 1`.
pub fn e15_mu_valid_s(surface: &ParamSurface, delta: f64) -> Option<f64> {
    let Family::E15 { cone, .. } = &surface.family else {
        return None;
    };
    let c = cone.c();
    let (u_lo, u_hi) = (cone.roots.u_min, cone.roots.u_max);
    // cone radius s_c has h = c s_c³, ρ = s_c (c/u)^{1/2}, |z| = s_c u
    let rho_unit = (c / u_lo).sqrt();
    let s_cone = (delta.sqrt() / rho_unit).min(delta / u_hi).min(1.0);
    Some(s_cone * c.cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{make_e13, make_e14};

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.5), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inside_intervals_of_parabola() {
        let iv = inside_intervals(|x| Ok(x * x - 0.25), -1.0, 1.0, 16).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.5).abs() < 1e-14 && (iv[0].1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tube_energies() {
        let r = 0.4;
        let e13 = integrate_form(&make_e13(0.3), FormTag::Omega, &Region::Tube { r }).unwrap();
        assert!((e13.value - r * r / 2.0).abs() < 1e-10);
        let e14 = integrate_form(&make_e14(1), FormTag::Omega, &Region::Tube { r }).unwrap();
        assert!((e14.value - r * r).abs() < 1e-10);
    }

    #[test]
    fn e13_ball_energy() {
        let r = 0.3;
        let v = integrate_form(&make_e13(0.0), FormTag::Omega, &Region::Ball { t0: 0.0, r }).unwrap();
        assert!((v.value - 2.0 * r.powi(3) / 3.0).abs() < 1e-10);
    }

    #[test]
    fn small_c_bound_constant() {
        assert!((DTDF_SMALL_C_BOUND - 1.0 / (576.0 * 3f64.sqrt())).abs() < 1e-18);
        assert!((dtdf_lower_bound(3f64.sqrt() / 24.0) - DTDF_SMALL_C_BOUND).abs() < 1e-15);
    }
}
