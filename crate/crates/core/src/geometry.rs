//! The model symplectic form ω on S¹×B³, its norm g, the compatible almost
//! complex structure J, action coordinates `(t, f, h, φ)` and the primitive θ.
//!
//! Coordinates are `(t, x, y, z)`; `t` is carried as a lifted real so that
//! quantities that depend on a local choice of origin on the circle (θ, the
//! radial field) can be evaluated. Use [`Circle::reduce`] for the value mod L.
//!
//! All evaluations are closed form. 2-forms are stored by their upper
//! triangle in the order `tx, ty, tz, xy, xz, yz`.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PhcError, Result};
use crate::poly::{Poly4, PolyOneForm, PolyTwoForm, PAIRS, T, X, Y, Z};

/// Circle circumference used by default.
pub const DEFAULT_CIRCLE_LENGTH: f64 = 1.0;

/// The circle factor `ℝ / Lℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub length: f64,
}

impl Default for Circle {
    fn default() -> Self {
        Self {
            length: DEFAULT_CIRCLE_LENGTH,
        }
    }
}

impl Circle {
    pub fn new(length: f64) -> Self {
        assert!(length > 0.0, "circle length must be positive");
        Self { length }
    }

    /// Representative in `[0, L)`.
    pub fn reduce(&self, t: f64) -> f64 {
        let r = t.rem_euclid(self.length);
        if r >= self.length {
            0.0
        } else {
            r
        }
    }

    /// Signed circular offset `t − t0` in `[−L/2, L/2)`.
    pub fn offset(&self, t: f64, t0: f64) -> f64 {
        let half = 0.5 * self.length;
        (t - t0 + half).rem_euclid(self.length) - half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CartesianPoint4 {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint4 {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    /// Validated point of S¹×B³ with `t` reduced to `[0, L)`.
    pub fn in_ball(t: f64, x: f64, y: f64, z: f64, circle: Circle) -> Result<Self> {
        if !(x * x + y * y + z * z < 1.0) {
            return Err(PhcError::OutsideBall { x, y, z });
        }
        Ok(Self::new(circle.reduce(t), x, y, z))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn rho2(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn rho(&self) -> f64 {
        self.rho2().sqrt()
    }

    /// `g² = x² + y² + 4z²`.
    pub fn g2(&self) -> f64 {
        self.rho2() + 4.0 * self.z * self.z
    }

    /// The norm function `g` of ω.
    pub fn g(&self) -> f64 {
        self.g2().sqrt()
    }

    /// Distance to the vanishing circle, `(ρ² + z²)^{1/2}`.
    pub fn radial(&self) -> f64 {
        (self.rho2() + self.z * self.z).sqrt()
    }

    pub fn on_vanishing_circle(&self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.z == 0.0
    }
}

/// Tangent vector along `(∂t, ∂x, ∂y, ∂z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector4(pub Vector4<f64>);

impl TangentVector4 {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self(Vector4::new(t, x, y, z))
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        Self(v)
    }

    pub fn zero() -> Self {
        Self(Vector4::zeros())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.0.dot(&o.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0 * c)
    }
}

/// Value of a 1-form at a point, along `(dt, dx, dy, dz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneFormValue(pub [f64; 4]);

impl OneFormValue {
    pub fn apply(&self, v: &TangentVector4) -> f64 {
        (0..4).map(|i| self.0[i] * v.0[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn wedge(&self, o: &Self) -> TwoFormValue {
        TwoFormValue {
            coeffs: std::array::from_fn(|k| {
                let (i, j) = PAIRS[k];
                self.0[i] * o.0[j] - self.0[j] * o.0[i]
            }),
        }
    }
}

/// Antisymmetric 2-form value stored by its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFormValue {
    pub coeffs: [f64; 6],
}

impl TwoFormValue {
    pub fn zero() -> Self {
        Self { coeffs: [0.0; 6] }
    }

    /// Coefficient of `dxⁱ∧dxʲ` for any ordered pair.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let k = PAIRS.iter().position(|&p| p == (a, b)).expect("valid index pair");
        sign * self.coeffs[k]
    }

    /// Full antisymmetric coefficient matrix.
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.get(i, j))
    }

    /// `ω(v, w) = Σ_{i<j} a_ij (vⁱwʲ − vʲwⁱ)`.
    pub fn eval(&self, v: &TangentVector4, w: &TangentVector4) -> f64 {
        PAIRS
            .iter()
            .zip(&self.coeffs)
            .map(|(&(i, j), a)| a * (v.0[i] * w.0[j] - v.0[j] * w.0[i]))
            .sum()
    }

    /// Coefficient of `dt∧dx∧dy∧dz` in `α∧α`.
    pub fn wedge_square(&self) -> f64 {
        let a = &self.coeffs;
        2.0 * (a[0] * a[5] - a[1] * a[4] + a[2] * a[3])
    }

    /// Euclidean norm `(Σ_{i<j} a_ij²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| self.coeffs[k] - o.coeffs[k]),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| self.coeffs[k] + o.coeffs[k]),
        }
    }
}

/// ω = dt∧(x dx + y dy − 2z dz) + x dy∧dz − y dx∧dz − 2z dx∧dy.
pub fn omega_at(p: &CartesianPoint4) -> TwoFormValue {
    let CartesianPoint4 { x, y, z, .. } = *p;
    TwoFormValue {
        coeffs: [x, y, -2.0 * z, -2.0 * z, -y, x],
    }
}

/// The `dt∧df` part of ω.
pub fn dt_df_at(p: &CartesianPoint4) -> TwoFormValue {
    TwoFormValue {
        coeffs: [p.x, p.y, -2.0 * p.z, 0.0, 0.0, 0.0],
    }
}

/// The `dφ∧dh` part of ω, which is polynomial: `x dy∧dz − y dx∧dz − 2z dx∧dy`.
pub fn dphi_dh_at(p: &CartesianPoint4) -> TwoFormValue {
    TwoFormValue {
        coeffs: [0.0, 0.0, 0.0, -2.0 * p.z, -p.y, p.x],
    }
}

/// Matrix of J in the `(∂t, ∂x, ∂y, ∂z)` basis; column `i` is `J ∂_i`.
pub fn jay_at(p: &CartesianPoint4) -> Result<Matrix4<f64>> {
    let g = p.g();
    if g == 0.0 {
        return Err(PhcError::SingularPoint);
    }
    let CartesianPoint4 { x, y, z, .. } = *p;
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,      x,        y,        -2.0 * z,
        -x,       0.0,      -2.0 * z, -y,
        -y,       2.0 * z,  0.0,      x,
        2.0 * z,  y,        -x,       0.0,
    );
    Ok(m / g)
}

pub fn apply_jay(p: &CartesianPoint4, v: &TangentVector4) -> Result<TangentVector4> {
    Ok(TangentVector4(jay_at(p)? * v.0))
}

/// `|√2 ω(Jv, w)/|ω| − ⟨v, w⟩|`, with `|ω| = √2 g` the Euclidean norm of the
/// 2-form. Equivalently `|ω(Jv, w)/g − ⟨v, w⟩|`.
pub fn compatibility_residual(p: &CartesianPoint4, v: &TangentVector4, w: &TangentVector4) -> Result<f64> {
    let jv = apply_jay(p, v)?;
    let om = omega_at(p);
    let metric = std::f64::consts::SQRT_2 * om.eval(&jv, w) / om.norm();
    Ok((metric - v.dot(w)).abs())
}

/// `‖J² + I‖` (Frobenius).
pub fn jay_square_residual(p: &CartesianPoint4) -> Result<f64> {
    let j = jay_at(p)?;
    Ok((j * j + Matrix4::identity()).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionCoords {
    pub t: f64,
    pub f: f64,
    pub h: f64,
    /// `None` on the z-axis, where the angle is meaningless.
    pub phi: Option<f64>,
    pub rho: f64,
    pub g: f64,
}

impl ActionCoords {
    pub fn is_axis_point(&self) -> bool {
        self.phi.is_none()
    }
}

pub fn to_action_coords(p: &CartesianPoint4) -> ActionCoords {
    let rho2 = p.rho2();
    let rho = rho2.sqrt();
    ActionCoords {
        t: p.t,
        f: 0.5 * (rho2 - 2.0 * p.z * p.z),
        h: p.z * rho2,
        phi: (rho > 0.0).then(|| p.y.atan2(p.x)),
        rho,
        g: p.g(),
    }
}

/// Inverse of [`to_action_coords`] for off-axis points.
pub fn from_action_coords(a: &ActionCoords) -> Result<CartesianPoint4> {
    let phi = a.phi.ok_or(PhcError::AxisPoint)?;
    if a.rho <= 0.0 {
        return Err(PhcError::AxisPoint);
    }
    let z = a.h / (a.rho * a.rho);
    Ok(CartesianPoint4::new(a.t, a.rho * phi.cos(), a.rho * phi.sin(), z))
}

/// Cartesian components of `dt, df, dh, dφ`; `dφ` requires `ρ > 0`.
pub struct ActionDifferentials {
    pub dt: OneFormValue,
    pub df: OneFormValue,
    pub dh: OneFormValue,
    pub dphi: Option<OneFormValue>,
}

pub fn action_differentials(p: &CartesianPoint4) -> ActionDifferentials {
    let CartesianPoint4 { x, y, z, .. } = *p;
    let rho2 = p.rho2();
    ActionDifferentials {
        dt: OneFormValue([1.0, 0.0, 0.0, 0.0]),
        df: OneFormValue([0.0, x, y, -2.0 * z]),
        dh: OneFormValue([0.0, 2.0 * x * z, 2.0 * y * z, rho2]),
        dphi: (rho2 > 0.0).then(|| OneFormValue([0.0, -y / rho2, x / rho2, 0.0])),
    }
}

/// `dt∧df + dφ∧dh` assembled by the chain rule from the Cartesian
/// differentials of the action coordinates.
pub fn omega_from_action(p: &CartesianPoint4) -> Result<TwoFormValue> {
    let d = action_differentials(p);
    let dphi = d.dphi.ok_or(PhcError::AxisPoint)?;
    Ok(d.dt.wedge(&d.df).add(&dphi.wedge(&d.dh)))
}

/// θ = 3⁻¹(t df − 2f dt − 3h dφ) in Cartesian components. The `h dφ` term
/// equals `z(x dy − y dx)`, so θ is polynomial and defined on the axis too.
pub fn theta_at(p: &CartesianPoint4) -> OneFormValue {
    let CartesianPoint4 { t, x, y, z } = *p;
    let f = 0.5 * (x * x + y * y - 2.0 * z * z);
    OneFormValue([
        -2.0 * f / 3.0,
        t * x / 3.0 + y * z,
        t * y / 3.0 - x * z,
        -2.0 * t * z / 3.0,
    ])
}

/// θ and ω built symbolically from their defining expressions.
pub fn symbolic_theta_and_omega() -> (PolyOneForm, PolyTwoForm) {
    let (t, x, y, z) = (Poly4::var(T), Poly4::var(X), Poly4::var(Y), Poly4::var(Z));
    let rho2 = &(&x * &x) + &(&y * &y);
    let f = &(&rho2 - &(&(&z * &z) * &Poly4::constant(2.0))).scale(0.5);
    let dt = PolyOneForm::differential(&t);
    let df = PolyOneForm::differential(f);
    // h dφ = z ρ² (x dy − y dx)/ρ² = z (x dy − y dx)
    let x_dy_minus_y_dx = PolyOneForm([Poly4::zero(), -&y, x.clone(), Poly4::zero()]);
    let h_dphi = x_dy_minus_y_dx.scale_by(&z);
    let theta = df
        .scale_by(&t)
        .plus(&dt.scale_by(&f.scale(-2.0)))
        .plus(&h_dphi.scale_by(&Poly4::constant(-3.0)));
    let theta = theta.scale_by(&Poly4::constant(1.0 / 3.0));

    let dxs = |i: usize| PolyOneForm::differential(&Poly4::var(i));
    let spatial = PolyOneForm([Poly4::zero(), x.clone(), y.clone(), z.scale(-2.0)]);
    let omega = dt
        .wedge(&spatial)
        .plus(&dxs(Y).wedge(&dxs(Z)).scale_two(&x))
        .plus(&dxs(X).wedge(&dxs(Z)).scale_two(&(-&y)))
        .plus(&dxs(X).wedge(&dxs(Y)).scale_two(&z.scale(-2.0)));
    (theta, omega)
}

trait ScaleTwo {
    fn scale_two(&self, f: &Poly4) -> Self;
}

impl ScaleTwo for PolyTwoForm {
    fn scale_two(&self, f: &Poly4) -> Self {
        PolyTwoForm(std::array::from_fn(|i| f * &self.0[i]))
    }
}

/// `‖dθ − ω‖` at `p`, with dθ obtained by exact polynomial differentiation.
pub fn dtheta_check(p: &CartesianPoint4) -> f64 {
    let (theta, omega) = symbolic_theta_and_omega();
    let diff = theta.exterior_derivative().minus(&omega);
    let v = diff.eval(p.as_array());
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Residual of `t²|df|² + 4f²|dt|² + 9h²|dφ|² = (t² + ρ² + z²) g²`. The
/// `h²|dφ|²` term is evaluated as `z²ρ²`, its value off the axis.
pub fn theta_norm_identity_residual(p: &CartesianPoint4) -> f64 {
    let a = to_action_coords(p);
    let d = action_differentials(p);
    let df2 = d.df.norm().powi(2);
    let h2_dphi2 = p.z * p.z * p.rho2();
    let lhs = p.t * p.t * df2 + 4.0 * a.f * a.f + 9.0 * h2_dphi2;
    let rhs = (p.t * p.t + p.rho2() + p.z * p.z) * p.g2();
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, x: f64, y: f64, z: f64) -> CartesianPoint4 {
        CartesianPoint4::new(t, x, y, z)
    }

    #[test]
    fn omega_vanishes_on_circle() {
        assert_eq!(omega_at(&pt(0.3, 0.0, 0.0, 0.0)), TwoFormValue::zero());
    }

    #[test]
    fn omega_at_unit_x() {
        // dt∧dx + dy∧dz
        let w = omega_at(&pt(0.0, 1.0, 0.0, 0.0));
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(2, 3), 1.0);
        assert_eq!(w.get(0, 2), 0.0);
        assert_eq!(w.get(1, 2), 0.0);
        assert_eq!(w.get(3, 2), -1.0);
    }

    #[test]
    fn wedge_square_identity() {
        let p = pt(0.1, 0.3, -0.2, 0.4);
        let expect = 2.0 * (0.09 + 0.04 + 4.0 * 0.16);
        assert!((omega_at(&p).wedge_square() - expect).abs() < 1e-15);
    }

    #[test]
    fn jay_at_unit_x() {
        let j = jay_at(&pt(0.0, 1.0, 0.0, 0.0)).unwrap();
        let col = |i: usize| j.column(i).into_owned();
        assert_eq!(col(0), Vector4::new(0.0, -1.0, 0.0, 0.0));
        assert_eq!(col(1), Vector4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(col(2), Vector4::new(0.0, 0.0, 0.0, -1.0));
        assert_eq!(col(3), Vector4::new(0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn jay_at_unit_z() {
        // g = 2: J∂t = ∂z, J∂z = −∂t, J∂x = ∂y, J∂y = −∂x
        let j = jay_at(&pt(0.0, 0.0, 0.0, 1.0)).unwrap();
        let col = |i: usize| j.column(i).into_owned();
        assert_eq!(col(0), Vector4::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(col(3), Vector4::new(-1.0, 0.0, 0.0, 0.0));
        assert_eq!(col(1), Vector4::new(0.0, 0.0, 1.0, 0.0));
        assert_eq!(col(2), Vector4::new(0.0, -1.0, 0.0, 0.0));
    }

    #[test]
    fn jay_is_singular_on_circle() {
        assert_eq!(jay_at(&pt(0.5, 0.0, 0.0, 0.0)), Err(PhcError::SingularPoint));
        let v = TangentVector4::basis(0);
        assert!(compatibility_residual(&pt(0.5, 0.0, 0.0, 0.0), &v, &v).is_err());
    }

    #[test]
    fn compatibility_on_basis_vectors() {
        let p = pt(0.0, 1.0, 0.0, 0.0);
        let dt = TangentVector4::basis(0);
        assert!(compatibility_residual(&p, &dt, &dt).unwrap() < 1e-15);
        let q = pt(0.2, -0.3, 0.5, 0.1);
        let r = compatibility_residual(&q, &TangentVector4::basis(1), &TangentVector4::basis(2)).unwrap();
        assert!(r < 1e-12);
        let zero = TangentVector4::zero();
        assert_eq!(compatibility_residual(&q, &zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn action_coords_examples() {
        let a = to_action_coords(&pt(0.2, 1.0, 0.0, 0.0));
        assert_eq!((a.f, a.h, a.phi), (0.5, 0.0, Some(0.0)));
        let b = to_action_coords(&pt(0.2, 0.0, 0.0, 0.5));
        assert_eq!(b.f, -0.25);
        assert_eq!(b.h, 0.0);
        assert!(b.is_axis_point());
        assert_eq!(from_action_coords(&b), Err(PhcError::AxisPoint));
        assert_eq!(omega_from_action(&pt(0.0, 0.0, 0.0, 0.5)), Err(PhcError::AxisPoint));
    }

    #[test]
    fn theta_bound_at_sample_point() {
        // r = √2, g = 1
        let th = theta_at(&pt(1.0, 1.0, 0.0, 0.0));
        assert!(th.norm() <= 2f64.sqrt() / 3.0 + 1e-15);
    }

    #[test]
    fn dtheta_equals_omega_symbolically() {
        let (theta, omega) = symbolic_theta_and_omega();
        assert!(theta.exterior_derivative().minus(&omega).is_zero());
        // symbolic ω agrees with the closed-form coefficients
        let p = pt(0.7, -0.1, 0.25, 0.3);
        let sym = omega.eval(p.as_array());
        assert_eq!(sym, omega_at(&p).coeffs);
    }

    #[test]
    fn theta_closed_form_matches_symbolic() {
        let (theta, _) = symbolic_theta_and_omega();
        let p = pt(0.3, 0.2, -0.6, 0.1);
        let a = theta_at(&p).0;
        for (poly, v) in theta.0.iter().zip(a) {
            assert!((poly.eval(p.as_array()) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_reduction() {
        let c = Circle::new(1.0);
        assert_eq!(c.reduce(1.25), 0.25);
        assert!((c.reduce(-0.25) - 0.75).abs() < 1e-15);
        assert!((c.offset(0.95, 0.05) + 0.1).abs() < 1e-15);
        assert!(CartesianPoint4::in_ball(0.0, 1.0, 0.0, 0.0, c).is_err());
    }
}

/// Worst value of each closed-form identity over a random sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    pub points: usize,
    pub seed: u64,
    /// `|ω∧ω coefficient − 2(x² + y² + 4z²)|`.
    pub omega_wedge: f64,
    pub jay_square: f64,
    pub compatibility: f64,
    pub theta_norm: f64,
    pub dtheta: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        [self.omega_wedge, self.jay_square, self.compatibility, self.theta_norm, self.dtheta]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Uniform points in `S¹ × B³` (rejection sampled, `g > 1e-6`) with random
/// tangent pairs; deterministic in `seed`.
pub fn random_points(n: usize, seed: u64, circle: Circle) -> Vec<(CartesianPoint4, TangentVector4, TangentVector4)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        let z: f64 = rng.random_range(-1.0..1.0);
        if x * x + y * y + z * z >= 1.0 {
            continue;
        }
        let t = rng.random_range(0.0..circle.length);
        let p = CartesianPoint4::new(t, x, y, z);
        if p.g() < 1e-6 {
            continue;
        }
        let mut vec = || TangentVector4::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let (v, w) = (vec(), vec());
        out.push((p, v, w));
    }
    out
}

pub fn identity_suite(n: usize, seed: u64, circle: Circle) -> Result<IdentityReport> {
    let (theta, omega) = symbolic_theta_and_omega();
    let dtheta_minus_omega = theta.exterior_derivative().minus(&omega);
    let rows = random_points(n, seed, circle)
        .par_iter()
        .map(|(p, v, w)| {
            let wedge = (omega_at(p).wedge_square() - 2.0 * (p.rho2() + 4.0 * p.z * p.z)).abs();
            let dth = dtheta_minus_omega.eval(p.as_array()).iter().map(|c| c * c).sum::<f64>().sqrt();
            Ok([
                wedge,
                jay_square_residual(p)?,
                compatibility_residual(p, v, w)?,
                theta_norm_identity_residual(p),
                dth,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(IdentityReport {
        points: n,
        seed,
        omega_wedge: worst(0),
        jay_square: worst(1),
        compatibility: worst(2),
        theta_norm: worst(3),
        dtheta: worst(4),
    })
}
